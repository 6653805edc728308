"""Two-level system coupled to a two-band environment.

Basis conventions: system levels are ordered excited first (index 0 is
``|1>``, index 1 is ``|0>``); environment levels are ordered lower band
(``n1 = 1..N1``) then upper band (``n2 = 1..N2``); the total space is
system (x) environment.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .evolution import size_cap
from .generator import SIGMA_MINUS, SIGMA_PLUS, GeneralizedLindblad
from .operators import SizeCapError, as_matrix
from .projection import CorrelatedProjection, band_projection

EXCITED = np.array([[1, 0], [0, 0]], dtype=np.complex128)  # sigma_+ sigma_-
GROUND = np.array([[0, 0], [0, 1]], dtype=np.complex128)  # sigma_- sigma_+


def sample_couplings(n1: int, n2: int, seed: int) -> np.ndarray:
    """i.i.d. complex Gaussians with Re, Im ~ N(0, 1/2), so E|c|^2 = 1."""
    rng = np.random.default_rng(seed)
    re = rng.normal(scale=np.sqrt(0.5), size=(n1, n2))
    im = rng.normal(scale=np.sqrt(0.5), size=(n1, n2))
    return re + 1j * im


def realization_seed(base_seed: int, k: int) -> int:
    """Seed of realization ``k``, derived from ``(base_seed, k)`` only."""
    ss = np.random.SeedSequence(base_seed, spawn_key=(k,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class TwoBandModel:
    delta_e: float = 1.0
    delta_eps: float = 0.5
    n1: int = 60
    n2: int = 60
    lam: float = 5e-4
    seed: int = 0
    couplings: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.delta_e <= 0 or self.delta_eps <= 0:
            raise ValueError("delta_e and delta_eps must be positive")
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError("band sizes must be positive")
        if self.lam < 0:
            raise ValueError("coupling strength must be nonnegative")
        object.__setattr__(self, "couplings", sample_couplings(self.n1, self.n2, self.seed))

    @property
    def dim_env(self) -> int:
        return self.n1 + self.n2

    @property
    def dim(self) -> int:
        return 2 * self.dim_env

    def band_projectors(self) -> tuple[np.ndarray, np.ndarray]:
        p1 = np.diag(np.r_[np.ones(self.n1), np.zeros(self.n2)]).astype(np.complex128)
        return p1, np.eye(self.dim_env) - p1

    def env_energies(self) -> np.ndarray:
        lower = self.delta_eps / self.n1 * np.arange(1, self.n1 + 1)
        upper = self.delta_e + self.delta_eps / self.n2 * np.arange(1, self.n2 + 1)
        return np.r_[lower, upper]


@dataclass(frozen=True)
class Rates:
    gamma1: float
    gamma2: float

    @classmethod
    def from_model(cls, m: TwoBandModel) -> "Rates":
        pref = 2 * np.pi * m.lam**2 / m.delta_eps
        return cls(float(pref * m.n1), float(pref * m.n2))

    @property
    def total(self) -> float:
        return self.gamma1 + self.gamma2


def build_hamiltonian(m: TwoBandModel) -> np.ndarray:
    de = m.dim_env
    h_s = np.kron(m.delta_e * EXCITED, np.eye(de))
    h_e = np.kron(np.eye(2), np.diag(m.env_energies()))
    # lam * sum c(n1, n2) sigma_+ (x) |n1><n2|
    env_op = np.zeros((de, de), dtype=np.complex128)
    env_op[: m.n1, m.n1 :] = m.lam * m.couplings
    v = np.kron(SIGMA_PLUS, env_op)
    return h_s + h_e + v + v.conj().T


def excitation_operator(m: TwoBandModel) -> np.ndarray:
    """``C = sigma_+ sigma_- (x) I_E + I_S (x) Pi_2``."""
    _, p2 = m.band_projectors()
    return np.kron(EXCITED, np.eye(m.dim_env)) + np.kron(np.eye(2), p2)


def excitation_sectors(m: TwoBandModel) -> dict[int, np.ndarray]:
    """Basis indices grouped by excitation number (0, 1, 2)."""
    c = np.diag(excitation_operator(m)).real.round().astype(int)
    return {v: np.flatnonzero(c == v) for v in (0, 1, 2)}


def initial_state(m: TwoBandModel, rho1_0, rho2_0) -> np.ndarray:
    p1, p2 = m.band_projectors()
    return np.kron(as_matrix(rho1_0), p1 / m.n1) + np.kron(as_matrix(rho2_0), p2 / m.n2)


@dataclass
class ExactResult:
    times: np.ndarray
    components: np.ndarray  # (T, 2, 2, 2): rho_i(t) for i = 1, 2
    excitation: np.ndarray  # tr{C rho(t)}
    total_trace: np.ndarray

    @property
    def p_e(self) -> np.ndarray:
        return self.components[:, :, 0, 0].sum(axis=1).real

    @property
    def tr_rho1(self) -> np.ndarray:
        return np.trace(self.components[:, 0], axis1=1, axis2=2).real

    @property
    def tr_rho2(self) -> np.ndarray:
        return np.trace(self.components[:, 1], axis1=1, axis2=2).real


def _eigensystem(m: TwoBandModel) -> tuple[np.ndarray, np.ndarray]:
    h = build_hamiltonian(m)
    energies = np.zeros(m.dim)
    vecs = np.zeros((m.dim, m.dim), dtype=np.complex128)
    for idx in excitation_sectors(m).values():
        if len(idx) == 0:
            continue
        e, v = np.linalg.eigh(h[np.ix_(idx, idx)])
        energies[idx] = e
        vecs[np.ix_(idx, idx)] = v
    return energies, vecs


def exact_evolve(m: TwoBandModel, rho1_0, rho2_0, t_grid) -> ExactResult:
    """Unitary evolution of the correlated initial state by sector diagonalization.

    Every reported quantity is ``tr{O rho(t)}`` for an operator ``O``, computed
    in the energy eigenbasis as ``sum_kl rho~_kl O~_lk exp(-i (E_k - E_l) t)``.

    Raises:
        SizeCapError: if the total dimension exceeds ``CORRPROJ_SIZE_CAP``.
    """
    if m.dim > size_cap():
        raise SizeCapError(f"total dimension {m.dim} exceeds cap {size_cap()}")
    t = np.asarray(t_grid, dtype=float)
    energies, v = _eigensystem(m)
    rho_t = v.conj().T @ initial_state(m, rho1_0, rho2_0) @ v
    phases = np.exp(-1j * np.outer(t, energies))

    def expect(op: np.ndarray) -> np.ndarray:
        op_t = v.conj().T @ op @ v
        weights = rho_t * op_t.T
        return np.sum((phases @ weights) * phases.conj(), axis=1)

    p1, p2 = m.band_projectors()
    comps = np.zeros((len(t), 2, 2, 2), dtype=np.complex128)
    for i, pi in enumerate((p1, p2)):
        for a in range(2):
            for b in range(2):
                unit = np.zeros((2, 2))
                unit[b, a] = 1.0
                comps[:, i, a, b] = expect(np.kron(unit, pi))
    excitation = expect(excitation_operator(m)).real
    total = expect(np.eye(m.dim)).real
    return ExactResult(t, comps, excitation, total)


@dataclass
class EnsembleResult:
    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    samples: np.ndarray  # (realizations, T)


def mean_and_stderr(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean and standard error along axis 0; a single sample has infinite error."""
    samples = np.asarray(samples, dtype=float)
    mean = samples.mean(axis=0)
    if len(samples) < 2:
        return mean, np.full_like(mean, np.inf)
    return mean, samples.std(axis=0, ddof=1) / np.sqrt(len(samples))


def ensemble_average(
    template: TwoBandModel,
    n_realizations: int,
    t_grid,
    rho1_0=EXCITED,
    rho2_0=None,
    workers: int = 1,
) -> EnsembleResult:
    """Mean and standard error of the exact ``p_e(t)`` over coupling realizations.

    Realization ``k`` uses ``realization_seed(template.seed, k)``, so the
    result does not depend on ``workers``.
    """
    if n_realizations < 1:
        raise ValueError("n_realizations must be at least 1")
    rho2 = np.zeros((2, 2)) if rho2_0 is None else rho2_0

    def one(k: int) -> np.ndarray:
        model = replace(template, seed=realization_seed(template.seed, k))
        return exact_evolve(model, rho1_0, rho2, t_grid).p_e

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            samples = np.array(list(pool.map(one, range(n_realizations))))
    else:
        samples = np.array([one(k) for k in range(n_realizations)])
    mean, stderr = mean_and_stderr(samples)
    return EnsembleResult(np.asarray(t_grid, dtype=float), mean, stderr, samples)


def tcl2_generator(m: TwoBandModel) -> tuple[GeneralizedLindblad, Rates]:
    r = Rates.from_model(m)
    jumps = {
        (0, 1, 0): np.sqrt(r.gamma1) * SIGMA_PLUS,
        (1, 0, 0): np.sqrt(r.gamma2) * SIGMA_MINUS,
    }
    return GeneralizedLindblad(2, 2, np.zeros((2, 2, 2)), jumps), r


def pe_analytic(r: Rates, rho1_0, rho2_0, t):
    """Closed-form excited population of the TCL2 equations.

    ``p_e`` relaxes at rate ``gamma1 + gamma2`` towards
    ``(gamma1 p_e(0) + gamma2 <1|rho2|1> + gamma1 <0|rho2|0>) / (gamma1 + gamma2)``.
    """
    r1, r2 = as_matrix(rho1_0), as_matrix(rho2_0)
    p0 = float((r1[0, 0] + r2[0, 0]).real)
    t = np.asarray(t, dtype=float)
    total = r.gamma1 + r.gamma2
    if total == 0:
        return np.full_like(t, p0) if t.ndim else p0
    source = r.gamma1 * p0 + r.gamma2 * r2[0, 0].real + r.gamma1 * r2[1, 1].real
    p_inf = source / total
    out = p_inf + (p0 - p_inf) * np.exp(-total * t)
    return out if t.ndim else float(out)


def two_band_projection(m: TwoBandModel) -> CorrelatedProjection:
    rho0 = np.eye(m.dim_env) / m.dim_env
    return band_projection(m.band_projectors(), rho0, dim_sys=2)


def excitation_conserved_set() -> list[np.ndarray]:
    """``C^1 = sigma_+ sigma_-``, ``C^2 = sigma_+ sigma_- + I``."""
    return [EXCITED.copy(), EXCITED + np.eye(2)]
