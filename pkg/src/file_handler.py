"""
File handling for curve files, the append-only count cache and saved reports.
"""

import hashlib
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional

from config.settings import settings
from src.errors import CacheConflict, CurveFileError, SingularCurve, UnknownLabel
from src.models import CountRecord, CurveOverQ, RunManifest

_CURVE_LINE = re.compile(r'^(?P<label>\S+)\s*:\s*(?P<a2>[+-]?\d+)\s+(?P<a4>[+-]?\d+)\s+(?P<a6>[+-]?\d+)$')
_GUARD_LINE = re.compile(r'^#\s*curve\s+(?P<label>\S+)\s+(?P<checksum>[0-9a-f]+)$')

CHECKSUM_LENGTH = 16


def curve_checksum(curve: CurveOverQ) -> str:
    """sha256 prefix of 'a2 a4 a6'"""
    text = f"{curve.a2} {curve.a4} {curve.a6}"
    return hashlib.sha256(text.encode('utf-8')).hexdigest()[:CHECKSUM_LENGTH]


@dataclass
class CacheState:
    checksums: Dict[str, str] = field(default_factory=dict)
    counts: Dict[str, Dict[int, int]] = field(default_factory=dict)

    def records(self, label: str) -> List[CountRecord]:
        return [CountRecord(label, p, n) for p, n in sorted(self.counts.get(label, {}).items())]


class FileHandler:
    def __init__(self, cache_path: Optional[Path] = None):
        self.cache_path = Path(cache_path) if cache_path else settings.count_cache_file
        self.logger = logging.getLogger(__name__)

    # --- curve files ---

    def read_curves(self, path: Path) -> Dict[str, CurveOverQ]:
        """Parse `label : a2 a4 a6` lines, in file order"""
        path = Path(path)
        try:
            text = path.read_text(encoding='utf-8')
        except OSError as e:
            raise CurveFileError(f"cannot read curve file {path}: {e}") from e

        curves: Dict[str, CurveOverQ] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue
            match = _CURVE_LINE.match(line)
            if not match:
                raise CurveFileError(f"{path}:{lineno}: expected 'label : a2 a4 a6', got {raw.strip()!r}")
            label = match.group('label')
            if label in curves:
                raise CurveFileError(f"{path}:{lineno}: duplicate label {label!r}")
            try:
                curves[label] = CurveOverQ(label, int(match.group('a2')), int(match.group('a4')), int(match.group('a6')))
            except SingularCurve as e:
                raise SingularCurve(f"{path}:{lineno}: {e}") from e
            except ValueError as e:
                raise CurveFileError(f"{path}:{lineno}: {e}") from e

        self.logger.info(f"Read {len(curves)} curves from {path}")
        return curves

    def select_curves(self, curves: Dict[str, CurveOverQ], labels: Iterable[str]) -> List[CurveOverQ]:
        selected = []
        for label in labels:
            if label not in curves:
                raise UnknownLabel(f"unknown curve label {label!r}")
            selected.append(curves[label])
        return selected

    # --- count cache ---

    def load_cache(self) -> CacheState:
        state = CacheState()
        if not self.cache_path.exists():
            return state
        with open(self.cache_path, 'r', encoding='utf-8') as f:
            for lineno, raw in enumerate(f, start=1):
                line = raw.strip()
                if not line:
                    continue
                if line.startswith('#'):
                    guard = _GUARD_LINE.match(line)
                    if guard:
                        state.checksums[guard.group('label')] = guard.group('checksum')
                    continue
                parts = line.split()
                if len(parts) != 3 or not parts[1].isdigit() or not parts[2].isdigit():
                    raise CurveFileError(f"{self.cache_path}:{lineno}: expected 'label p N', got {line!r}")
                label, p, count = parts[0], int(parts[1]), int(parts[2])
                state.counts.setdefault(label, {})[p] = count
        self.logger.debug(f"Loaded cache {self.cache_path}: {sum(len(c) for c in state.counts.values())} records")
        return state

    def check_guard(self, state: CacheState, curve: CurveOverQ):
        stored = state.checksums.get(curve.label)
        if stored is not None and stored != curve_checksum(curve):
            raise CacheConflict(
                f"cache {self.cache_path} holds counts for different coefficients under label {curve.label!r}"
            )

    def append_counts(self, curve: CurveOverQ, records: Iterable[CountRecord],
                      state: Optional[CacheState] = None) -> int:
        """Append records missing from the cache; returns how many were written"""
        state = state if state is not None else self.load_cache()
        self.check_guard(state, curve)
        known = state.counts.setdefault(curve.label, {})
        lines = []
        if curve.label not in state.checksums:
            checksum = curve_checksum(curve)
            lines.append(f"# curve {curve.label} {checksum}")
            state.checksums[curve.label] = checksum
        appended = 0
        for rec in records:
            if rec.label != curve.label:
                raise ValueError(f"record for {rec.label} passed with curve {curve.label}")
            if rec.p in known:
                continue
            lines.append(f"{rec.label} {rec.p} {rec.count}")
            known[rec.p] = rec.count
            appended += 1

        self.cache_path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.cache_path, 'a', encoding='utf-8') as f:
            for line in lines:
                f.write(line + '\n')
        self.logger.info(f"Appended {appended} records for {curve.label} to {self.cache_path}")
        return appended

    def touch_cache(self):
        self.cache_path.parent.mkdir(parents=True, exist_ok=True)
        self.cache_path.touch(exist_ok=True)

    # --- reports ---

    def save_report(self, text: str, path: Path, manifest: RunManifest) -> Path:
        """Write a report and its .meta.json sidecar"""
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, 'w', encoding='utf-8') as f:
                f.write(text)
            self.logger.info(f"Saved report to: {path}")
            self._save_metadata(text, path, manifest)
            return path
        except OSError as e:
            self.logger.error(f"Error saving report: {str(e)}")
            raise

    def _save_metadata(self, text: str, path: Path, manifest: RunManifest):
        metadata_path = path.with_suffix(path.suffix + '.meta.json')
        metadata = manifest.to_dict()
        metadata.update({
            'report_path': str(path),
            'report_bytes': len(text.encode('utf-8')),
            'content_hash': hashlib.sha256(text.encode('utf-8')).hexdigest(),
        })
        with open(metadata_path, 'w', encoding='utf-8') as f:
            json.dump(metadata, f, indent=2, ensure_ascii=False)
        self.logger.debug(f"Saved metadata to: {metadata_path}")
