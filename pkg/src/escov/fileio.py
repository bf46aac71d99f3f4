"""Plain-text matrix and sample formats.

Decimal CSV with 17 significant digits, so doubles survive a write/read
round trip exactly. Complex values are stored as interleaved re,im
column pairs. Parse failures always name the file and line.
"""

import numpy as np

from .errors import FileFormatError
from .linalg import as_matrix
from .samples import Field, SampleSet


def _fmt(v) -> str:
    return f"{float(v):.17g}"


def _interleave(row) -> str:
    out = []
    for v in row:
        out.append(_fmt(v.real))
        out.append(_fmt(v.imag))
    return ",".join(out)


def _parse_floats(path, lineno, line, expected):
    parts = line.split(",")
    if len(parts) != expected:
        raise FileFormatError(
            f"{path}:{lineno}: expected {expected} columns, got {len(parts)}"
        )
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise FileFormatError(f"{path}:{lineno}: {exc}") from None


def _data_lines(path):
    with open(path) as fh:
        lines = [(i + 1, line.strip()) for i, line in enumerate(fh)]
    return [(n, line) for n, line in lines if line]


def write_matrix(path, M) -> None:
    """Matrix file: header 'd', then d rows of 2d interleaved re,im columns."""
    A = np.asarray(as_matrix(M), dtype=np.complex128)
    d = A.shape[0]
    with open(path, "w", newline="") as fh:
        fh.write(f"{d}\n")
        for i in range(d):
            fh.write(_interleave(A[i]) + "\n")


def read_matrix(path) -> np.ndarray:
    """Parse a matrix file back into a complex (d, d) array."""
    lines = _data_lines(path)
    if not lines:
        raise FileFormatError(f"{path}:1: empty file")
    lineno, header = lines[0]
    try:
        d = int(header)
    except ValueError:
        raise FileFormatError(f"{path}:{lineno}: header must be the dimension, got {header!r}") from None
    if d < 1:
        raise FileFormatError(f"{path}:{lineno}: dimension must be positive, got {d}")
    rows = lines[1:]
    if len(rows) != d:
        raise FileFormatError(f"{path}: expected {d} data rows, found {len(rows)}")
    M = np.empty((d, d), np.complex128)
    for i, (n, line) in enumerate(rows):
        vals = _parse_floats(path, n, line, 2 * d)
        M[i] = np.asarray(vals[0::2]) + 1j * np.asarray(vals[1::2])
    return M


def write_samples(path, X: SampleSet) -> None:
    """Sample file: header 'd,N,field', then one row per sample."""
    d, N = X.dim, X.count
    with open(path, "w", newline="") as fh:
        fh.write(f"{d},{N},{X.field.value}\n")
        cols = X.columns.T
        for n in range(N):
            if X.field is Field.COMPLEX:
                fh.write(_interleave(cols[n]) + "\n")
            else:
                fh.write(",".join(_fmt(v) for v in cols[n]) + "\n")


def read_samples(path) -> SampleSet:
    """Parse a sample file back into a SampleSet."""
    lines = _data_lines(path)
    if not lines:
        raise FileFormatError(f"{path}:1: empty file")
    lineno, header = lines[0]
    parts = header.split(",")
    if len(parts) != 3:
        raise FileFormatError(f"{path}:{lineno}: header must be 'd,N,field', got {header!r}")
    try:
        d = int(parts[0])
        N = int(parts[1])
    except ValueError:
        raise FileFormatError(f"{path}:{lineno}: non-integer dimensions in header") from None
    field_name = parts[2].strip().lower()
    if field_name not in ("real", "complex"):
        raise FileFormatError(f"{path}:{lineno}: field must be 'real' or 'complex', got {parts[2]!r}")
    field = Field.COMPLEX if field_name == "complex" else Field.REAL
    if d < 1 or N < 1:
        raise FileFormatError(f"{path}:{lineno}: d and N must be positive")
    rows = lines[1:]
    if len(rows) != N:
        raise FileFormatError(f"{path}: expected {N} data rows, found {len(rows)}")
    width = 2 * d if field is Field.COMPLEX else d
    if field is Field.COMPLEX:
        X = np.empty((N, d), np.complex128)
    else:
        X = np.empty((N, d), np.float64)
    for i, (n, line) in enumerate(rows):
        vals = _parse_floats(path, n, line, width)
        if field is Field.COMPLEX:
            X[i] = np.asarray(vals[0::2]) + 1j * np.asarray(vals[1::2])
        else:
            X[i] = vals
    return SampleSet(X.T, field=field)
