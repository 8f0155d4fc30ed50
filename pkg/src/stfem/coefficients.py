from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True)
class CoefficientField:
    """Symmetric, uniformly positive definite diffusion matrix ``A(x, t)``.

    ``func(x, t)`` receives ``x`` of shape ``(n, d)`` and ``t`` of shape ``(n,)``
    and returns ``(n, d, d)``. When ``is_identity`` is set ``func`` is ignored.
    """

    dim: int
    func: Optional[Callable] = None
    is_identity: bool = False

    @classmethod
    def identity(cls, dim):
        return cls(dim, None, True)

    @classmethod
    def constant(cls, matrix):
        mat = np.atleast_2d(np.asarray(matrix, dtype=float))
        if not np.array_equal(mat, mat.T):
            raise ValueError("coefficient matrix must be symmetric")
        if np.linalg.eigvalsh(mat).min() <= 0.0:
            raise ValueError("coefficient matrix must be positive definite")
        return cls(len(mat), lambda x, t: np.broadcast_to(mat, (len(t),) + mat.shape))

    def __call__(self, x, t):
        x = np.asarray(x, dtype=float)
        if self.is_identity:
            return np.broadcast_to(np.eye(self.dim), (len(x), self.dim, self.dim))
        return np.asarray(self.func(x, np.asarray(t, dtype=float)), dtype=float)

    def check(self, x, t):
        """Raise unless ``A`` is symmetric positive definite at every sample."""
        a = self(x, t)
        if not np.allclose(a, np.swapaxes(a, 1, 2), rtol=0.0, atol=1e-14):
            raise ValueError("coefficient field is not symmetric")
        if np.linalg.eigvalsh(a).min() <= 0.0:
            raise ValueError("coefficient field is not positive definite")
