"""Bivariate right-censored survival data and its CSV representation.

One cluster per row: two observed times, two event indicators, one
cluster-level covariate.
"""

import io
from dataclasses import dataclass

import numpy as np

from .errors import DataError

CSV_HEADER = ("y1", "y2", "d1", "d2", "x")


@dataclass
class SurvivalData:
    """Columns of (y1, y2, d1, d2, x); one entry per cluster."""

    y1: np.ndarray
    y2: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        self.y1 = np.ascontiguousarray(self.y1, dtype=np.float64)
        self.y2 = np.ascontiguousarray(self.y2, dtype=np.float64)
        self.d1 = np.ascontiguousarray(self.d1, dtype=np.uint8)
        self.d2 = np.ascontiguousarray(self.d2, dtype=np.uint8)
        self.x = np.ascontiguousarray(self.x, dtype=np.float64)
        n = len(self.y1)
        if not (len(self.y2) == len(self.d1) == len(self.d2) == len(self.x) == n):
            raise DataError("all columns must have equal length")
        if n == 0:
            raise DataError("dataset is empty")
        if np.any(self.y1 <= 0.0) or np.any(self.y2 <= 0.0):
            raise DataError("event/censoring times must be strictly positive")
        if not np.all(np.isfinite(self.x)):
            raise DataError("covariate values must be finite")

    @property
    def n(self):
        return len(self.y1)

    def __len__(self):
        return len(self.y1)

    def member(self, k):
        """(y, d) columns of cluster member k in {1, 2}."""
        if k == 1:
            return self.y1, self.d1
        if k == 2:
            return self.y2, self.d2
        raise ValueError("member index must be 1 or 2")

    def censoring_rate(self):
        """Fraction of censored member observations, pooled over both members."""
        total = 2 * self.n
        return float((np.sum(self.d1 == 0) + np.sum(self.d2 == 0)) / total)

    def subset(self, idx):
        return SurvivalData(self.y1[idx], self.y2[idx], self.d1[idx], self.d2[idx], self.x[idx])


def _parse_rows(lines, source):
    rows = []
    errors = []
    header_seen = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not header_seen:
            names = tuple(f.strip().lower() for f in line.split(","))
            if names != CSV_HEADER:
                raise DataError(
                    f"{source}: expected header {','.join(CSV_HEADER)!r}, got {line!r}"
                )
            header_seen = True
            continue
        fields = line.split(",")
        if len(fields) != 5:
            errors.append(f"line {lineno}: expected 5 fields, got {len(fields)}")
            continue
        try:
            y1, y2 = float(fields[0]), float(fields[1])
            d1, d2 = int(fields[2]), int(fields[3])
            x = float(fields[4])
        except ValueError as exc:
            errors.append(f"line {lineno}: {exc}")
            continue
        if y1 <= 0.0 or y2 <= 0.0:
            errors.append(f"line {lineno}: non-positive time")
            continue
        if d1 not in (0, 1) or d2 not in (0, 1):
            errors.append(f"line {lineno}: indicators must be 0 or 1")
            continue
        if not np.isfinite(x):
            errors.append(f"line {lineno}: non-finite covariate")
            continue
        rows.append((y1, y2, d1, d2, x))
    if not header_seen:
        raise DataError(f"{source}: missing header line")
    if errors:
        raise DataError(f"{source}: malformed rows:\n  " + "\n  ".join(errors))
    if not rows:
        raise DataError(f"{source}: no data rows")
    cols = list(zip(*rows))
    return SurvivalData(*[np.asarray(c) for c in cols])


def load_dataset(path):
    """Read a dataset CSV; malformed rows are rejected with line numbers."""
    with open(path, "r", encoding="utf-8") as fh:
        return _parse_rows(fh, str(path))


def loads_dataset(text, source="<string>"):
    return _parse_rows(io.StringIO(text), source)


def save_dataset(data, path, comments=()):
    """Write a dataset CSV (round-trips through load_dataset)."""
    with open(path, "w", encoding="utf-8") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        fh.write(",".join(CSV_HEADER) + "\n")
        for i in range(data.n):
            fh.write(
                f"{float(data.y1[i])!r},{float(data.y2[i])!r},"
                f"{int(data.d1[i])},{int(data.d2[i])},{float(data.x[i])!r}\n"
            )
