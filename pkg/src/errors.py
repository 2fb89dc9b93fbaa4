"""
Exception hierarchy shared by all modules.

Each error carries the process exit code the CLI reports for it.
"""

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_BAD_INPUT = 3
EXIT_RESOURCE_CAP = 4
EXIT_WITNESS = 10


class IsogenyRadicalError(Exception):
    """Base class for all expected failures"""
    exit_code = EXIT_FAILURE


class ModulusMismatch(IsogenyRadicalError, ValueError):
    """Arithmetic between residues of different moduli"""
    exit_code = EXIT_USAGE


class NotSymplectic(IsogenyRadicalError, ValueError):
    """Matrix does not scale the standard symplectic form"""
    exit_code = EXIT_BAD_INPUT


class CapExceeded(IsogenyRadicalError):
    """A group or scan is larger than the configured cap"""
    exit_code = EXIT_RESOURCE_CAP


class BadReduction(IsogenyRadicalError):
    """The curve has bad reduction at the requested place"""
    exit_code = EXIT_BAD_INPUT

    def __init__(self, label: str, p: int):
        super().__init__(f"{label} has bad reduction at p={p}")
        self.label = label
        self.p = p


class SingularCurve(IsogenyRadicalError, ValueError):
    """Weierstrass data with vanishing discriminant"""
    exit_code = EXIT_BAD_INPUT


class SingularOutput(IsogenyRadicalError):
    """An isogeny formula produced a singular model"""
    exit_code = EXIT_BAD_INPUT


class EmptyScan(IsogenyRadicalError):
    """No place of good reduction for both curves under the scan bound"""
    exit_code = EXIT_USAGE


class CurveFileError(IsogenyRadicalError):
    """Malformed curve file"""
    exit_code = EXIT_USAGE


class UnknownLabel(IsogenyRadicalError, KeyError):
    """Requested curve label is not present in the curve file"""
    exit_code = EXIT_USAGE

    def __str__(self):
        return str(self.args[0]) if self.args else 'unknown label'


class CacheConflict(IsogenyRadicalError):
    """Count cache was written for different coefficients under the same label"""
    exit_code = EXIT_BAD_INPUT


class InvariantViolation(IsogenyRadicalError, RuntimeError):
    """A mathematical invariant failed on computed data"""
    exit_code = EXIT_FAILURE
