"""Generalized Lindblad generators acting on component vectors (rho_1, ..., rho_n).

Component ``i`` evolves as

    d rho_i/dt = -i[H^i, rho_i]
                 + sum_{j,l} ( R^{ij}_l rho_j R^{ij}_l^dag
                               - 1/2 {R^{ji}_l^dag R^{ji}_l, rho_i} ).

Note the transposed index pair in the loss term. Component indices are
0-based in the API and 1-based in the JSON format.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .operators import (
    TOL_HERM,
    ContractError,
    DimensionError,
    as_matrix,
    dag,
    hermiticity_defect,
    spost,
    spre,
)

SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=np.complex128)
SIGMA_MINUS = SIGMA_PLUS.T.copy()

JumpKey = tuple[int, int, int]


@dataclass(frozen=True)
class GeneralizedLindblad:
    n: int
    dim_sys: int
    h_ops: np.ndarray
    jump_ops: dict[JumpKey, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        h = np.asarray(self.h_ops, dtype=np.complex128)
        d = self.dim_sys
        if h.shape != (self.n, d, d):
            raise DimensionError(f"h_ops must have shape {(self.n, d, d)}, got {h.shape}")
        for i, hi in enumerate(h):
            if hermiticity_defect(hi) > TOL_HERM:
                raise ContractError(f"H^{i} is not Hermitian")
        jumps = {}
        for key in sorted(self.jump_ops):
            i, j, lam = (int(k) for k in key)
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise DimensionError(f"jump index {(i, j)} out of range for n={self.n}")
            op = as_matrix(self.jump_ops[key])
            if op.shape != (d, d):
                raise DimensionError(f"R^{(i, j, lam)} must be {d}x{d}, got {op.shape}")
            jumps[(i, j, lam)] = op
        object.__setattr__(self, "h_ops", h)
        object.__setattr__(self, "jump_ops", jumps)
        # loss[i] = sum_{j,l} R^{ji}_l^dag R^{ji}_l
        loss = np.zeros_like(h)
        for (i, j, _), r in jumps.items():
            loss[j] += dag(r) @ r
        object.__setattr__(self, "_loss", loss)
        # stacked form for the vectorized right-hand side
        m = len(jumps)
        incidence = np.zeros((self.n, m))
        for k, (i, _, _) in enumerate(jumps):
            incidence[i, k] = 1.0
        r = np.array(list(jumps.values())).reshape(m, d, d)
        object.__setattr__(self, "_sources", np.array([j for _, j, _ in jumps], dtype=int))
        object.__setattr__(self, "_stack", r)
        object.__setattr__(self, "_stack_dag", np.conj(np.swapaxes(r, 1, 2)))
        object.__setattr__(self, "_incidence", incidence)
        object.__setattr__(self, "_h_eff", h - 0.5j * loss)

    def norm(self) -> float:
        """Coarse rate scale: sum of ||R||^2 plus the largest ||H^i|| (spectral norms)."""
        rates = sum(np.linalg.norm(r, 2) ** 2 for r in self.jump_ops.values())
        ham = max(np.linalg.norm(h, 2) for h in self.h_ops)
        return float(rates + ham)


@dataclass(frozen=True)
class ExtendedLindblad:
    """Ordinary Lindblad generator on H_S (x) C^n (system first, auxiliary second)."""

    dim_sys: int
    n: int
    h_total: np.ndarray
    lindblad_ops: list[np.ndarray]

    @property
    def dim(self) -> int:
        return self.dim_sys * self.n


def _state_array(gen: GeneralizedLindblad, state) -> np.ndarray:
    rho = np.asarray(getattr(state, "components", state), dtype=np.complex128)
    if rho.shape != (gen.n, gen.dim_sys, gen.dim_sys):
        raise DimensionError(
            f"state of shape {rho.shape} does not match n={gen.n}, dim_sys={gen.dim_sys}"
        )
    return rho


def _apply_k(gen: GeneralizedLindblad, i: int, rho: np.ndarray) -> np.ndarray:
    h = gen.h_ops[i]
    out = -1j * (h @ rho[i] - rho[i] @ h)
    for (a, j, _), r in gen.jump_ops.items():
        if a == i:
            out += r @ rho[j] @ dag(r)
    g = gen._loss[i]
    out -= 0.5 * (g @ rho[i] + rho[i] @ g)
    return out


def apply_k(gen: GeneralizedLindblad, i: int, state) -> np.ndarray:
    if not 0 <= i < gen.n:
        raise IndexError(f"component index {i} out of range for n={gen.n}")
    return _apply_k(gen, i, _state_array(gen, state))


def rhs(gen: GeneralizedLindblad, state) -> np.ndarray:
    """Time derivative of every component, shape (n, d, d)."""
    rho = _state_array(gen, state)
    g = gen._h_eff
    out = -1j * (g @ rho - rho @ np.conj(np.swapaxes(g, 1, 2)))
    if len(gen._sources):
        gains = gen._stack @ rho[gen._sources] @ gen._stack_dag
        out += np.tensordot(gen._incidence, gains, axes=1)
    return out


def aux_projector(n: int, i: int, j: int) -> np.ndarray:
    out = np.zeros((n, n), dtype=np.complex128)
    out[i, j] = 1.0
    return out


def embed(gen: GeneralizedLindblad) -> ExtendedLindblad:
    n = gen.n
    h = sum(np.kron(gen.h_ops[i], aux_projector(n, i, i)) for i in range(n))
    ops = [np.kron(r, aux_projector(n, i, j)) for (i, j, _), r in gen.jump_ops.items()]
    return ExtendedLindblad(gen.dim_sys, n, np.asarray(h), ops)


def block_diagonal(components: np.ndarray) -> np.ndarray:
    """Assemble ``sum_i rho_i (x) |i><i|``."""
    comps = np.asarray(getattr(components, "components", components))
    n = len(comps)
    return sum(np.kron(c, aux_projector(n, i, i)) for i, c in enumerate(comps))


def blocks(varrho: np.ndarray, dim_sys: int, n: int) -> np.ndarray:
    """Auxiliary blocks ``D^{ik}`` of an extended operator, shape (n, n, d, d)."""
    return np.asarray(varrho).reshape(dim_sys, n, dim_sys, n).transpose(1, 3, 0, 2)


def extended_apply(ext: ExtendedLindblad, varrho) -> np.ndarray:
    x = as_matrix(varrho)
    if x.shape != (ext.dim, ext.dim):
        raise DimensionError(f"extended state must be {ext.dim}x{ext.dim}, got {x.shape}")
    h = ext.h_total
    out = -1j * (h @ x - x @ h)
    for s in ext.lindblad_ops:
        sds = dag(s) @ s
        out += s @ x @ dag(s) - 0.5 * (sds @ x + x @ sds)
    return out


def block_defect(ext: ExtendedLindblad, state) -> float:
    """Largest max-norm over the off-diagonal auxiliary blocks of L(varrho)."""
    comps = np.asarray(getattr(state, "components", state))
    if comps.shape != (ext.n, ext.dim_sys, ext.dim_sys):
        raise DimensionError(f"state shape {comps.shape} does not match the extended generator")
    b = blocks(extended_apply(ext, block_diagonal(comps)), ext.dim_sys, ext.n)
    off = ~np.eye(ext.n, dtype=bool)
    if not off.any():
        return 0.0
    return float(np.max(np.abs(b[off])))


def diagonal_blocks(ext: ExtendedLindblad, varrho: np.ndarray) -> np.ndarray:
    b = blocks(varrho, ext.dim_sys, ext.n)
    return np.stack([b[i, i] for i in range(ext.n)])


def liouvillian(ext: ExtendedLindblad) -> np.ndarray:
    """Column-stacking matrix of the extended generator, shape (dim^2, dim^2)."""
    h = ext.h_total
    out = -1j * (spre(h) - spost(h))
    for s in ext.lindblad_ops:
        sds = dag(s) @ s
        out += spre(s) @ spost(dag(s)) - 0.5 * (spre(sds) + spost(sds))
    return out


def from_extended(ext: ExtendedLindblad, tol: float = 1e-12) -> GeneralizedLindblad:
    """Read off ``H^i`` and ``R^{ij}_l`` from a block-structured extended generator.

    Each Lindblad operator must occupy a single auxiliary block and the
    Hamiltonian must be block diagonal.
    """
    d, n = ext.dim_sys, ext.n
    hb = blocks(ext.h_total, d, n)
    for i in range(n):
        for k in range(n):
            if i != k and np.max(np.abs(hb[i, k])) > tol:
                raise ContractError(f"Hamiltonian has an off-diagonal block ({i}, {k})")
    jumps: dict[JumpKey, np.ndarray] = {}
    counts: dict[tuple[int, int], int] = {}
    for s in ext.lindblad_ops:
        sb = blocks(s, d, n)
        nz = [(i, j) for i in range(n) for j in range(n) if np.max(np.abs(sb[i, j])) > tol]
        if len(nz) > 1:
            raise ContractError(f"Lindblad operator occupies several auxiliary blocks {nz}")
        if not nz:
            continue
        i, j = nz[0]
        lam = counts.get((i, j), 0)
        counts[(i, j)] = lam + 1
        jumps[(i, j, lam)] = sb[i, j]
    return GeneralizedLindblad(n, d, np.stack([hb[i, i] for i in range(n)]), jumps)


def conservation_defect(gen: GeneralizedLindblad, c_ops) -> float:
    """Residual of the constraint that makes ``sum_i tr(C^i rho_i)`` conserved.

    For each i:  i[H^i, C^i] + sum_{j,l} ( R^{ji}_l^dag C^j R^{ji}_l
                                          - 1/2 {R^{ji}_l^dag R^{ji}_l, C^i} ).
    """
    c = np.asarray([as_matrix(x) for x in c_ops])
    if c.shape != (gen.n, gen.dim_sys, gen.dim_sys):
        raise DimensionError(f"expected {gen.n} operators of size {gen.dim_sys}")
    worst = 0.0
    for i in range(gen.n):
        h = gen.h_ops[i]
        expr = 1j * (h @ c[i] - c[i] @ h)
        for (j, a, _), r in gen.jump_ops.items():
            if a == i:
                expr += dag(r) @ c[j] @ r
        g = gen._loss[i]
        expr -= 0.5 * (g @ c[i] + c[i] @ g)
        worst = max(worst, float(np.max(np.abs(expr))))
    return worst


def uncoupled(locals_) -> GeneralizedLindblad:
    """Block-diagonal generator from per-component ``(H^i, [R^i_l, ...])`` pairs."""
    hs, jumps = [], {}
    for i, (h, rs) in enumerate(locals_):
        hs.append(as_matrix(h))
        for lam, r in enumerate(rs):
            jumps[(i, i, lam)] = as_matrix(r)
    return GeneralizedLindblad(len(hs), hs[0].shape[0], np.asarray(hs), jumps)


def energy_resolved(gamma1, gamma2, h_eps=None) -> GeneralizedLindblad:
    """Energy-resolved two-level generator with rate tables indexed by energy label.

    ``R^{ee'}_0 = sqrt(gamma1[e, e']) sigma_+`` and
    ``R^{ee'}_1 = sqrt(gamma2[e, e']) sigma_-``; zero rates are omitted.
    """
    g1 = np.asarray(gamma1, dtype=float)
    g2 = np.asarray(gamma2, dtype=float)
    if g1.ndim != 2 or g1.shape[0] != g1.shape[1] or g1.shape != g2.shape:
        raise DimensionError("rate tables must be square and of equal shape")
    if (g1 < 0).any() or (g2 < 0).any():
        raise ContractError("rates must be nonnegative")
    n = g1.shape[0]
    h = np.zeros((n, 2, 2), dtype=np.complex128) if h_eps is None else np.asarray(h_eps)
    jumps = {}
    for e in range(n):
        for f in range(n):
            if g1[e, f] > 0:
                jumps[(e, f, 0)] = np.sqrt(g1[e, f]) * SIGMA_PLUS
            if g2[e, f] > 0:
                jumps[(e, f, 1)] = np.sqrt(g2[e, f]) * SIGMA_MINUS
    return GeneralizedLindblad(n, 2, h, jumps)
