"""Correlated projection superoperators ``P = I_S (x) Lambda``.

A projection is stored as two lists of Hermitian environment operators
``A_i`` and ``B_i`` and acts as

    P(rho) = sum_i tr_E{(I_S (x) A_i) rho} (x) B_i.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import (
    TOL_HERM,
    TOL_PSD,
    ContractError,
    DimensionError,
    DimPair,
    as_matrix,
    hermiticity_defect,
    min_eigenvalue_hermitian,
    unvec,
    vec,
)

TOL_COND = 1e-10
RANK_RTOL = 1e-8
DEGENERATE_WEIGHT = 1e-12


class NotAProjectionError(ValueError):
    """The supplied map is not idempotent."""


class DegenerateWeightError(ValueError):
    """A band carries (numerically) zero weight in the reference state."""


class GaugeError(ValueError):
    """The gauge matrix cannot be inverted."""


@dataclass(frozen=True)
class CorrelatedProjection:
    dims: DimPair
    a_ops: np.ndarray
    b_ops: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a_ops, dtype=np.complex128)
        b = np.asarray(self.b_ops, dtype=np.complex128)
        de = self.dims.dim_env
        if a.ndim != 3 or b.ndim != 3 or len(a) == 0:
            raise DimensionError("a_ops and b_ops must be nonempty lists of matrices")
        if a.shape != b.shape:
            raise DimensionError(f"a_ops {a.shape} and b_ops {b.shape} differ in shape")
        if a.shape[1:] != (de, de):
            raise DimensionError(f"operators must be {de}x{de}, got {a.shape[1:]}")
        object.__setattr__(self, "a_ops", a)
        object.__setattr__(self, "b_ops", b)

    @property
    def n(self) -> int:
        return len(self.a_ops)

    @classmethod
    def from_lists(cls, dim_sys: int, a_ops, b_ops) -> "CorrelatedProjection":
        a = np.asarray([as_matrix(x) for x in a_ops])
        b = np.asarray([as_matrix(x) for x in b_ops])
        return cls(DimPair(dim_sys, a.shape[-1]), a, b)


@dataclass(frozen=True)
class ValidationReport:
    biorthogonality_defect: float
    trace_defect: float
    cp_min_eigenvalue: float
    hermiticity_defect: float
    idempotence_defect: float

    @property
    def passed(self) -> bool:
        return (
            self.biorthogonality_defect <= TOL_COND
            and self.trace_defect <= TOL_COND
            and self.hermiticity_defect <= TOL_HERM
            and self.idempotence_defect <= TOL_COND
            and self.cp_min_eigenvalue >= -TOL_PSD
        )


def _check_rho(p: CorrelatedProjection, rho) -> np.ndarray:
    r = as_matrix(rho)
    if r.shape != (p.dims.total, p.dims.total):
        raise DimensionError(
            f"operator of shape {r.shape} does not act on {p.dims.dim_sys} x {p.dims.dim_env}"
        )
    return r.reshape(p.dims.dim_sys, p.dims.dim_env, p.dims.dim_sys, p.dims.dim_env)


def components(p: CorrelatedProjection, rho) -> np.ndarray:
    """The reduced components ``rho_i = tr_E{(I_S (x) A_i) rho}``, shape (n, ds, ds)."""
    r = _check_rho(p, rho)
    return np.einsum("ife,aebf->iab", p.a_ops, r)


def apply(p: CorrelatedProjection, rho) -> np.ndarray:
    comps = components(p, rho)
    ds, de = p.dims.dim_sys, p.dims.dim_env
    out = np.einsum("iab,ief->aebf", comps, p.b_ops)
    return out.reshape(ds * de, ds * de)


def apply_adjoint(p: CorrelatedProjection, obs) -> np.ndarray:
    """Hilbert-Schmidt adjoint: ``sum_i tr_E{(I_S (x) B_i) O} (x) A_i``."""
    r = _check_rho(p, obs)
    ds, de = p.dims.dim_sys, p.dims.dim_env
    coeffs = np.einsum("ife,aebf->iab", p.b_ops, r)
    return np.einsum("iab,ief->aebf", coeffs, p.a_ops).reshape(ds * de, ds * de)


def map_matrix(p: CorrelatedProjection) -> np.ndarray:
    """Column-stacking matrix of the environment map ``Lambda``."""
    de = p.dims.dim_env
    m = np.zeros((de * de, de * de), dtype=np.complex128)
    for a, b in zip(p.a_ops, p.b_ops):
        m += np.outer(vec(b), vec(a.T))
    return m


def _basis_images(p: CorrelatedProjection) -> tuple[np.ndarray, np.ndarray]:
    """Apply P to every matrix unit of the bipartite space; returns (inputs, outputs)."""
    d = p.dims.total
    ds, de = p.dims.dim_sys, p.dims.dim_env
    units = np.eye(d * d, dtype=np.complex128).reshape(d * d, ds, de, ds, de)
    comps = np.einsum("ife,kaebf->kiab", p.a_ops, units)
    images = np.einsum("kiab,ief->kaebf", comps, p.b_ops)
    return units.reshape(d * d, d, d), images.reshape(d * d, d, d)


def idempotence_defect(p: CorrelatedProjection) -> float:
    """max_k ||P(P(E_k)) - P(E_k)||_max over the matrix units E_k."""
    _, once = _basis_images(p)
    ds, de = p.dims.dim_sys, p.dims.dim_env
    r = once.reshape(-1, ds, de, ds, de)
    comps = np.einsum("ife,kaebf->kiab", p.a_ops, r)
    twice = np.einsum("kiab,ief->kaebf", comps, p.b_ops).reshape(once.shape)
    return float(np.max(np.abs(twice - once)))


def validate(p: CorrelatedProjection) -> ValidationReport:
    a, b = p.a_ops, p.b_ops
    de = p.dims.dim_env
    gram = np.einsum("iab,jba->ij", b, a)
    biorth = float(np.max(np.abs(gram - np.eye(p.n))))
    trace_sum = np.einsum("i,iab->ab", np.trace(b, axis1=1, axis2=2), a)
    trace_def = float(np.max(np.abs(trace_sum - np.eye(de))))
    herm = max(hermiticity_defect(x) for x in (*a, *b))
    choi = sum(np.kron(ai.T, bi) for ai, bi in zip(a, b))
    choi = 0.5 * (choi + choi.conj().T)
    cp = float(np.linalg.eigvalsh(choi)[0])
    return ValidationReport(
        biorthogonality_defect=biorth,
        trace_defect=trace_def,
        cp_min_eigenvalue=cp,
        hermiticity_defect=herm,
        idempotence_defect=idempotence_defect(p),
    )


def product_projection(rho0, dim_sys: int) -> CorrelatedProjection:
    """The uncorrelated projection ``rho -> tr_E(rho) (x) rho0``."""
    r0 = as_matrix(rho0)
    return CorrelatedProjection(
        DimPair(dim_sys, r0.shape[0]), np.eye(r0.shape[0])[None], r0[None]
    )


def band_projection(projectors, rho0, dim_sys: int = 2) -> CorrelatedProjection:
    """Projection built from an orthogonal decomposition ``{Pi_i}`` of the identity.

    ``A_i = Pi_i`` and ``B_i = Pi_i rho0 Pi_i / tr(Pi_i rho0)``.

    Raises:
        ContractError: if the projectors are not orthogonal, Hermitian
            idempotents summing to the identity.
        DegenerateWeightError: if some band has weight below 1e-12 in rho0.
    """
    pis = np.asarray([as_matrix(x) for x in projectors])
    r0 = as_matrix(rho0)
    de = r0.shape[0]
    if pis.shape[1:] != (de, de):
        raise DimensionError("projectors and rho0 act on different spaces")
    for i, pi in enumerate(pis):
        if hermiticity_defect(pi) > TOL_HERM:
            raise ContractError(f"projector {i} is not Hermitian")
        for j, pj in enumerate(pis):
            target = pi if i == j else np.zeros_like(pi)
            if np.max(np.abs(pi @ pj - target)) > TOL_COND:
                raise ContractError(f"projectors {i} and {j} are not orthogonal idempotents")
    if np.max(np.abs(pis.sum(axis=0) - np.eye(de))) > TOL_COND:
        raise ContractError("projectors do not sum to the identity")

    b_ops = []
    for i, pi in enumerate(pis):
        w = np.trace(pi @ r0).real
        if w <= DEGENERATE_WEIGHT:
            raise DegenerateWeightError(f"band {i} has weight {w:.3e} in the reference state")
        b_ops.append(pi @ r0 @ pi / w)
    return CorrelatedProjection(DimPair(dim_sys, de), pis, np.asarray(b_ops))


def gauge_transform(p: CorrelatedProjection, u) -> CorrelatedProjection:
    """Equivalent representation ``A'_i = u_ij A_j``, ``B'_i = v_ij B_j`` with ``u^T v = I``."""
    u = np.asarray(u, dtype=float)
    if u.shape != (p.n, p.n):
        raise DimensionError(f"gauge matrix must be {p.n}x{p.n}, got {u.shape}")
    try:
        v = np.linalg.inv(u.T)
    except np.linalg.LinAlgError as exc:
        raise GaugeError("gauge matrix is singular") from exc
    if not np.all(np.isfinite(v)) or np.linalg.cond(u) > 1e14:
        raise GaugeError("gauge matrix is singular")
    return CorrelatedProjection(
        p.dims,
        np.einsum("ij,jab->iab", u, p.a_ops),
        np.einsum("ij,jab->iab", v, p.b_ops),
    )


def is_relevant_observable(p: CorrelatedProjection, obs, tol: float = 1e-10) -> bool:
    o = as_matrix(obs)
    return bool(np.max(np.abs(apply_adjoint(p, o) - o)) <= tol)


def _hermitian_basis(cols: np.ndarray, rank: int) -> np.ndarray:
    """Hermitian basis (shape (rank, d, d)) of a dagger-closed subspace spanned by vec'd columns."""
    d = int(round(np.sqrt(cols.shape[0])))
    cands = []
    for k in range(cols.shape[1]):
        x = unvec(cols[:, k], d)
        cands.append(0.5 * (x + x.conj().T))
        cands.append(-0.5j * (x - x.conj().T))
    # Hermitian matrices as real vectors; an orthonormal real basis of their span.
    real = np.array([np.concatenate([c.real.ravel(), c.imag.ravel()]) for c in cands])
    _, s, vh = np.linalg.svd(real, full_matrices=False)
    basis = vh[:rank]
    out = basis[:, : d * d].reshape(rank, d, d) + 1j * basis[:, d * d :].reshape(rank, d, d)
    return 0.5 * (out + np.conj(np.swapaxes(out, 1, 2)))


def decompose_idempotent(lambda_matrix, dim_sys: int = 1, tol: float = 1e-9) -> CorrelatedProjection:
    """Recover Hermitian ``{A_i}``, ``{B_i}`` from the matrix of an idempotent map.

    ``lambda_matrix`` is the column-stacking matrix of a map on environment
    operators. The range of the map gives ``{B_i}``, the range of its adjoint
    gives ``{A_i}``, and the inverse Gram matrix enforces ``tr(B_i A_j) = d_ij``.
    """
    m = as_matrix(lambda_matrix)
    n2 = m.shape[0]
    d = int(round(np.sqrt(n2)))
    if m.shape != (n2, n2) or d * d != n2:
        raise DimensionError(f"map matrix must be d^2 x d^2, got {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.max(np.abs(m @ m - m)) > tol * scale:
        raise NotAProjectionError("map is not idempotent")
    perm = np.array([unvec(np.eye(n2)[:, k], d).T.reshape(-1, order="F") for k in range(n2)]).T
    # Hermiticity preservation: vec(L(X^dag)) = conj(T vec(L(X))) with T the transpose permutation.
    if np.max(np.abs(perm @ m.conj() @ perm - m)) > tol * scale:
        raise ContractError("map does not preserve Hermiticity")
    vid = vec(np.eye(d))
    if np.max(np.abs(vid @ m - vid)) > tol * scale:
        raise ContractError("map is not trace preserving")

    u, s, vh = np.linalg.svd(m)
    rank = int(np.sum(s > RANK_RTOL * s[0])) if s[0] > 0 else 0
    if rank == 0:
        raise NotAProjectionError("map is zero")
    b_ops = _hermitian_basis(u[:, :rank], rank)
    f_ops = _hermitian_basis(vh[:rank].conj().T, rank)
    gram = np.einsum("iab,jba->ij", b_ops, f_ops).real
    w = np.linalg.inv(gram)
    a_ops = np.einsum("mab,mj->jab", f_ops, w)
    a_ops = 0.5 * (a_ops + np.conj(np.swapaxes(a_ops, 1, 2)))
    return CorrelatedProjection(DimPair(dim_sys, d), a_ops, b_ops)
