"""Sample set container."""

import enum

import numpy as np

from .errors import DimensionMismatch, ZeroSample


class Field(enum.Enum):
    REAL = "real"
    COMPLEX = "complex"


class SampleSet:
    """Immutable collection of N centered d-dimensional samples.

    Samples are stored as the columns of a (d, N) array. The field tag
    drives the likelihood constant c_K: 1 for real data, 2 for complex.
    """

    def __init__(self, columns, field: Field | None = None):
        X = np.asarray(columns)
        if X.ndim != 2:
            raise DimensionMismatch(f"expected a (d, N) array, got shape {X.shape}")
        if field is None:
            field = Field.COMPLEX if np.iscomplexobj(X) else Field.REAL
        if field is Field.REAL:
            if np.iscomplexobj(X):
                if np.abs(X.imag).max() > 0:
                    raise DimensionMismatch("real field tag on complex-valued data")
                X = X.real
            X = X.astype(np.float64)
        else:
            X = X.astype(np.complex128)
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise DimensionMismatch("need at least one dimension and one sample")
        norms = np.linalg.norm(X, axis=0)
        if np.any(norms == 0):
            n = int(np.argmax(norms == 0))
            raise ZeroSample(f"sample {n} is the zero vector")
        X = X.copy()
        X.flags.writeable = False
        self.columns = X
        self.field = field

    @property
    def dim(self) -> int:
        return self.columns.shape[0]

    @property
    def count(self) -> int:
        return self.columns.shape[1]

    @property
    def c_k(self) -> int:
        return 2 if self.field is Field.COMPLEX else 1

    def __repr__(self):
        return f"SampleSet(dim={self.dim}, count={self.count}, field={self.field.value})"
