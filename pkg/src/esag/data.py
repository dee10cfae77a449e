"""CSV tables and the square-root map from compositions to the sphere."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .density import UNIT_TOL
from .errors import DataError


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_table(path, min_cols: int = 3) -> tuple[np.ndarray, list[str] | None]:
    """Read a comma-separated numeric table with an optional header row."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: no data rows")
    header = None
    if not all(_is_number(c) for c in rows[0]):
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
    if not rows:
        raise DataError(f"{path}: no data rows")
    width = len(rows[0])
    try:
        X = np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric entry ({exc})") from None
    if any(len(r) != width for r in rows) or (header is not None and len(header) != width):
        raise DataError(f"{path}: ragged rows")
    if X.shape[1] < min_cols:
        raise DataError(f"{path}: need at least {min_cols} columns, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise DataError(f"{path}: non-finite entries")
    return X, header


def write_table(path, X: np.ndarray, header: list[str] | None = None) -> None:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header is not None:
            fh.write(",".join(header) + "\n")
        for row in X:
            fh.write(",".join(format(float(v), ".17g") for v in row) + "\n")


def sqrt_compose(X) -> np.ndarray:
    """Component-wise square root of nonnegative compositions.

    Rows summing to one land exactly on the unit sphere; other rows keep
    their length so that the caller's unit-norm check still applies.
    """
    X = np.asarray(X, dtype=float)
    if np.any(X < 0):
        i = int(np.argmax(np.any(X < 0, axis=1)))
        raise DataError(f"row {i} has a negative component; not a composition")
    return np.sqrt(X)


def unit_rows(X, tol: float = 1e-6, normalize: bool = False) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    norms = np.linalg.norm(X, axis=1)
    if normalize:
        if np.any(norms == 0):
            raise DataError("cannot normalise a zero row")
        return X / norms[:, None]
    bad = np.abs(norms - 1.0) > tol
    if np.any(bad):
        i = int(np.argmax(bad))
        raise DataError(f"row {i} has norm {norms[i]:.8g}; pass --normalize to rescale")
    # rows already unit to library precision pass through bit-for-bit
    loose = np.abs(norms - 1.0) > UNIT_TOL
    if np.any(loose):
        X = X.copy()
        X[loose] /= norms[loose, None]
    return X


def sidecar_path(path) -> Path:
    p = Path(path)
    return p.with_name(p.stem + ".params.json")
