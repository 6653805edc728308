"""Dense complex-matrix helpers shared by the rest of the package.

Operators are plain ``numpy`` arrays of dtype ``complex128``. Bipartite
operators always use system-first ordering: basis index ``(s, e)`` maps to
row ``s * dim_env + e``.

Superoperators use column stacking, ``vec(X)[i + j*d] = X[i, j]``, so that
``vec(A X B) = (B.T kron A) vec(X)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

TOL_HERM = 1e-10
TOL_PSD = 1e-9


class DimensionError(ValueError):
    """Operator shapes do not fit together."""


class ContractError(ValueError):
    """An input violates a documented precondition."""


class SizeCapError(RuntimeError):
    """A requested computation exceeds the configured size guard."""


@dataclass(frozen=True)
class DimPair:
    dim_sys: int
    dim_env: int

    def __post_init__(self):
        if self.dim_sys < 1 or self.dim_env < 1:
            raise DimensionError(f"dimensions must be positive, got {self}")

    @property
    def total(self) -> int:
        return self.dim_sys * self.dim_env


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-d matrix, got shape {a.shape}")
    return a


def _square(m, name: str = "matrix") -> np.ndarray:
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {a.shape}")
    return a


def dag(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def kron(a, b) -> np.ndarray:
    """Kronecker product of two square matrices, first factor outermost."""
    return np.kron(_square(a, "a"), _square(b, "b"))


def _bipartite(m, dims: DimPair) -> np.ndarray:
    a = _square(m)
    if a.shape[0] != dims.total:
        raise DimensionError(
            f"matrix of dimension {a.shape[0]} does not match "
            f"{dims.dim_sys} x {dims.dim_env}"
        )
    return a.reshape(dims.dim_sys, dims.dim_env, dims.dim_sys, dims.dim_env)


def partial_trace_env(m, dims: DimPair) -> np.ndarray:
    """Trace out the second (environment) factor."""
    return np.einsum("aebe->ab", _bipartite(m, dims))


def partial_trace_sys(m, dims: DimPair) -> np.ndarray:
    """Trace out the first (system) factor."""
    return np.einsum("aeaf->ef", _bipartite(m, dims))


def hermiticity_defect(m) -> float:
    a = _square(m)
    return float(np.max(np.abs(a - a.conj().T), initial=0.0))


def is_hermitian(m, tol: float = TOL_HERM) -> bool:
    return hermiticity_defect(m) <= tol


def min_eigenvalue_hermitian(m, tol: float = TOL_HERM) -> float:
    """Smallest eigenvalue of the Hermitian part of ``m``.

    Raises:
        ContractError: if ``m`` is further than ``tol`` (max-norm) from Hermitian.
    """
    a = _square(m)
    defect = hermiticity_defect(a)
    if defect > tol:
        raise ContractError(f"matrix is not Hermitian (defect {defect:.3e})")
    return float(np.linalg.eigvalsh(0.5 * (a + a.conj().T))[0])


def is_psd(m, tol: float = TOL_PSD) -> bool:
    return min_eigenvalue_hermitian(m) >= -tol


def expm(m) -> np.ndarray:
    """Matrix exponential (Pade scaling-and-squaring)."""
    return scipy.linalg.expm(_square(m))


def vec(m: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(m).reshape(-1, order="F")


def unvec(v: np.ndarray, d: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    if d is None:
        d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise DimensionError(f"vector of length {v.size} is not a square matrix")
    return v.reshape(d, d, order="F")


def spre(a: np.ndarray) -> np.ndarray:
    """Superoperator of ``X -> A X`` under column stacking."""
    return np.kron(np.eye(a.shape[0]), a)


def spost(b: np.ndarray) -> np.ndarray:
    """Superoperator of ``X -> X B`` under column stacking."""
    return np.kron(b.T, np.eye(b.shape[0]))


def ket_bra(d: int, i: int, j: int) -> np.ndarray:
    out = np.zeros((d, d), dtype=np.complex128)
    out[i, j] = 1.0
    return out


def operator_basis(d: int):
    """Yield the matrix units ``|i><j|`` of a ``d``-dimensional space."""
    for i in range(d):
        for j in range(d):
            yield ket_bra(d, i, j)


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return 0.5 * (x + x.conj().T)


def random_density_matrix(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Ginibre-distributed density matrix of the given rank (full by default)."""
    k = d if rank is None else rank
    g = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_matrix(d: int, rng: np.random.Generator) -> np.ndarray:
    return rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
