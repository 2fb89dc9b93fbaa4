"""
Data models shared across curves, criterion, persistence and the CLI.
"""

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from src.errors import InvariantViolation, SingularCurve

_LABEL_PATTERN = re.compile(r'^[A-Za-z0-9_.\-^]+$')


def weierstrass_discriminant(a2: int, a4: int, a6: int) -> int:
    """Discriminant of y^2 = x^3 + a2 x^2 + a4 x + a6"""
    b2, b4, b6 = 4 * a2, 2 * a4, 4 * a6
    b8 = 4 * a2 * a6 - a4 * a4
    return -b2 * b2 * b8 - 8 * b4 ** 3 - 27 * b6 * b6 + 9 * b2 * b4 * b6


@dataclass(frozen=True)
class CurveOverQ:
    label: str
    a2: int
    a4: int
    a6: int
    discriminant: int = field(init=False, compare=False)

    def __post_init__(self):
        if not self.label or not _LABEL_PATTERN.match(self.label):
            raise ValueError(f"invalid curve label: {self.label!r}")
        discriminant = weierstrass_discriminant(self.a2, self.a4, self.a6)
        if discriminant == 0:
            raise SingularCurve(
                f"{self.label}: y^2 = x^3 + {self.a2}x^2 + {self.a4}x + {self.a6} is singular"
            )
        object.__setattr__(self, 'discriminant', discriminant)

    @property
    def coefficients(self) -> tuple:
        return (self.a2, self.a4, self.a6)

    def __str__(self) -> str:
        return f"{self.label} : {self.a2} {self.a4} {self.a6}"


@dataclass(frozen=True)
class CountRecord:
    label: str
    p: int
    count: int
    trace: Optional[int] = None

    def __post_init__(self):
        """Derive the trace and validate it against the Hasse bound"""
        expected = self.p + 1 - self.count
        if self.trace is None:
            object.__setattr__(self, 'trace', expected)
        elif self.trace != expected:
            raise ValueError(f"trace {self.trace} inconsistent with N={self.count} at p={self.p}")
        if self.count < 1:
            raise InvariantViolation(f"{self.label}: count {self.count} at p={self.p} is below 1")
        if self.trace * self.trace > 4 * self.p:
            raise InvariantViolation(
                f"{self.label}: trace {self.trace} at p={self.p} violates the Hasse bound"
            )


@dataclass(frozen=True)
class WitnessRecord:
    """A place p and a prime ell dividing exactly one of the two point counts"""
    p: int
    ell: int
    divides_first: bool
    divides_second: bool

    def __post_init__(self):
        if self.divides_first == self.divides_second:
            raise ValueError("a witness requires ell to divide exactly one count")

    @property
    def side(self) -> int:
        return 1 if self.divides_first else 2

    def report_line(self) -> str:
        return f"WITNESS p={self.p} ell={self.ell} side={self.side}"


@dataclass
class RunManifest:
    """Everything needed to reproduce a report"""
    command: str
    seed: int
    version: str
    config: Dict[str, str] = field(default_factory=dict)
    timing: Optional[float] = None

    def lines(self, with_timing: bool = False) -> List[str]:
        echo = ' '.join(f"{key}={value}" for key, value in self.config.items())
        lines = [
            f"# isogeny-radical {self.version}",
            f"# manifest command={self.command} seed={self.seed}" + (f" {echo}" if echo else ''),
        ]
        if with_timing and self.timing is not None:
            lines.append(f"# timing seconds={self.timing:.3f}")
        return lines

    def to_dict(self) -> dict:
        return {
            'command': self.command,
            'seed': self.seed,
            'version': self.version,
            'config': dict(self.config),
            'timing': self.timing,
        }
