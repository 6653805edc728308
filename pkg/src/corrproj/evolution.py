"""Propagation of component states under a generalized Lindblad generator.

Two independent routes are provided: fixed-step RK4 on the components, and
the matrix exponential of the vectorized extended generator.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .generator import (
    GeneralizedLindblad,
    block_diagonal,
    blocks,
    embed,
    liouvillian,
    rhs,
)
from .operators import TOL_PSD, DimensionError, SizeCapError, as_matrix, unvec, vec

DEFAULT_SIZE_CAP = 4096
# Internal RK4 step is kept below RK_SAFETY / gen.norm().
RK_SAFETY = 0.01


def size_cap() -> int:
    return int(os.environ.get("CORRPROJ_SIZE_CAP", DEFAULT_SIZE_CAP))


@dataclass(frozen=True)
class ComponentState:
    """Unnormalized components ``(rho_1, ..., rho_n)``, stored as an (n, d, d) array."""

    components: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.components, dtype=np.complex128)
        if c.ndim != 3 or c.shape[1] != c.shape[2] or len(c) == 0:
            raise DimensionError(f"components must have shape (n, d, d), got {c.shape}")
        object.__setattr__(self, "components", c)

    @classmethod
    def from_list(cls, mats) -> "ComponentState":
        return cls(np.asarray([as_matrix(m) for m in mats]))

    @property
    def n(self) -> int:
        return self.components.shape[0]

    @property
    def dim_sys(self) -> int:
        return self.components.shape[1]

    def total_trace(self) -> float:
        return float(np.trace(self.components, axis1=1, axis2=2).sum().real)


def reduced_density(state: ComponentState) -> np.ndarray:
    return state.components.sum(axis=0)


@dataclass(frozen=True)
class StateDiagnostics:
    min_eigenvalue: float
    hermiticity_defect: float
    total_trace: float
    ok: bool


def check_state(state: ComponentState, tol: float = TOL_PSD) -> StateDiagnostics:
    c = state.components
    herm = float(np.max(np.abs(c - np.conj(np.swapaxes(c, 1, 2)))))
    sym = 0.5 * (c + np.conj(np.swapaxes(c, 1, 2)))
    min_eig = float(np.linalg.eigvalsh(sym)[:, 0].min())
    return StateDiagnostics(
        min_eigenvalue=min_eig,
        hermiticity_defect=herm,
        total_trace=state.total_trace(),
        ok=min_eig >= -tol and herm <= 1e-10,
    )


class DivergenceError(FloatingPointError):
    def __init__(self, step: int, t: float):
        super().__init__(f"non-finite state at step {step} (t={t:.6g})")
        self.step = step
        self.t = t


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (T, n, d, d)
    min_eigenvalue: np.ndarray
    total_trace: np.ndarray
    conserved: np.ndarray  # (T, k)
    flagged: list[int] = field(default_factory=list)

    def state(self, k: int) -> ComponentState:
        return ComponentState(self.states[k])

    def component_traces(self) -> np.ndarray:
        return np.trace(self.states, axis1=2, axis2=3).real

    def excited_population(self) -> np.ndarray:
        """``<1| sum_i rho_i |1>`` with the excited level first; two-level systems only."""
        if self.states.shape[-1] != 2:
            raise DimensionError("excited population is defined for dim_sys = 2")
        return self.states[:, :, 0, 0].sum(axis=1).real


def _conserved_values(comps: np.ndarray, conserved) -> list[float]:
    return [float(np.einsum("iab,iba->", np.asarray(c), comps).real) for c in conserved]


def _trajectory(times, states, conserved, tol) -> Trajectory:
    states = np.asarray(states)
    diags = [check_state(ComponentState(s), tol) for s in states]
    cons = np.array([_conserved_values(s, conserved) for s in states]).reshape(len(states), -1)
    return Trajectory(
        times=np.asarray(times, dtype=float),
        states=states,
        min_eigenvalue=np.array([d.min_eigenvalue for d in diags]),
        total_trace=np.array([d.total_trace for d in diags]),
        conserved=cons,
        flagged=[k for k, d in enumerate(diags) if not d.ok],
    )


def rk4_substeps(gen: GeneralizedLindblad, dt: float, safety: float = RK_SAFETY) -> int:
    scale = gen.norm()
    if dt <= 0 or scale == 0:
        return 1
    return max(1, math.ceil(dt * scale / safety))


def rk4_step_matrix(gen: GeneralizedLindblad, h: float) -> np.ndarray:
    """One classical RK4 step of size ``h`` as a matrix on flattened components.

    For a linear autonomous right-hand side the four RK4 stages collapse to
    ``I + hL + (hL)^2/2 + (hL)^3/6 + (hL)^4/24``, where ``L`` is assembled
    column by column from :func:`rhs`.
    """
    size = gen.n * gen.dim_sys**2
    basis = np.eye(size, dtype=np.complex128).reshape(size, gen.n, gen.dim_sys, gen.dim_sys)
    hl = h * np.array([rhs(gen, b).ravel() for b in basis]).T
    eye = np.eye(size)
    return eye + hl @ (eye + hl @ (eye + hl @ (eye + hl / 4) / 3) / 2)


def evolve_rk(
    gen: GeneralizedLindblad,
    init: ComponentState,
    t_max: float,
    steps: int,
    substeps: int | None = None,
    conserved=(),
    tol: float = TOL_PSD,
) -> Trajectory:
    """Classical RK4 with ``steps`` uniform output intervals on [0, t_max].

    Each output interval is split into ``substeps`` internal RK4 steps
    (chosen from ``gen.norm()`` when omitted). Diagnostics are recorded at
    the output points only.

    Raises:
        DivergenceError: if a non-finite value appears.
    """
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    if init.components.shape != (gen.n, gen.dim_sys, gen.dim_sys):
        raise DimensionError("initial state does not match the generator")
    times = np.linspace(0.0, t_max, steps + 1) if steps else np.array([0.0])
    out = [init.components.copy()]
    if steps:
        dt_out = t_max / steps
        m = substeps or rk4_substeps(gen, dt_out)
        shape = init.components.shape
        y = init.components.ravel()
        with np.errstate(over="ignore", invalid="ignore"):
            interval = np.linalg.matrix_power(rk4_step_matrix(gen, dt_out / m), m)
            for k in range(1, steps + 1):
                y = interval @ y
                if not np.all(np.isfinite(y)):
                    raise DivergenceError(k, times[k])
                out.append(y.reshape(shape))
    return _trajectory(times, out, conserved, tol)


def _check_size(gen: GeneralizedLindblad) -> int:
    vdim = (gen.dim_sys * gen.n) ** 2
    if vdim > size_cap():
        raise SizeCapError(f"vectorized dimension {vdim} exceeds cap {size_cap()}")
    return vdim


def propagator(gen: GeneralizedLindblad, t: float) -> np.ndarray:
    """``exp(L t)`` for the vectorized extended generator."""
    _check_size(gen)
    return scipy.linalg.expm(liouvillian(embed(gen)) * t)


def evolve_extended(gen: GeneralizedLindblad, init: ComponentState, t: float) -> np.ndarray:
    """Full extended density matrix ``exp(L t)(sum_i rho_i (x) |i><i|)``."""
    if init.components.shape[1:] != (gen.dim_sys, gen.dim_sys) or init.n != gen.n:
        raise DimensionError("initial state does not match the generator")
    x0 = block_diagonal(init.components)
    return unvec(propagator(gen, t) @ vec(x0), gen.dim_sys * gen.n)


def evolve_expm(gen: GeneralizedLindblad, init: ComponentState, t: float) -> ComponentState:
    if t == 0:
        return ComponentState(init.components.copy())
    b = blocks(evolve_extended(gen, init, t), gen.dim_sys, gen.n)
    return ComponentState(np.stack([b[i, i] for i in range(gen.n)]))


def evolve_expm_trajectory(
    gen: GeneralizedLindblad,
    init: ComponentState,
    t_max: float,
    steps: int,
    conserved=(),
    tol: float = TOL_PSD,
) -> Trajectory:
    """Exponential propagation sampled on the same grid as :func:`evolve_rk`."""
    times = np.linspace(0.0, t_max, steps + 1) if steps else np.array([0.0])
    d, n = gen.dim_sys, gen.n
    out = [init.components.copy()]
    if steps:
        step = propagator(gen, t_max / steps)
        v = vec(block_diagonal(init.components))
        for k in range(1, steps + 1):
            v = step @ v
            if not np.all(np.isfinite(v)):
                raise DivergenceError(k, times[k])
            b = blocks(unvec(v, d * n), d, n)
            out.append(np.stack([b[i, i] for i in range(n)]))
    return _trajectory(times, out, conserved, tol)
