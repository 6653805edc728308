"""JSON configuration and CSV trajectory formats.

Matrices are row-major arrays of ``[re, im]`` pairs, either nested by row
or flat. Component indices in generator files are 1-based.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .generator import GeneralizedLindblad
from .operators import DimPair
from .projection import CorrelatedProjection
from .twoband import TwoBandModel


class ConfigError(ValueError):
    """A configuration file is unreadable or does not match its schema."""


def load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc


def matrix_from_json(obj) -> np.ndarray:
    try:
        a = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"matrix entries must be [re, im] pairs: {exc}") from exc
    if a.shape[-1:] != (2,):
        raise ConfigError(f"matrix entries must be [re, im] pairs, got array of shape {a.shape}")
    z = a[..., 0] + 1j * a[..., 1]
    if z.ndim == 1:
        d = int(round(np.sqrt(z.size)))
        if d * d != z.size:
            raise ConfigError(f"flat matrix of length {z.size} is not square")
        z = z.reshape(d, d)
    if z.ndim != 2 or z.shape[0] != z.shape[1]:
        raise ConfigError(f"matrix must be square, got shape {z.shape}")
    return z


def matrix_to_json(m) -> list:
    m = np.asarray(m, dtype=np.complex128)
    return [[[float(x.real), float(x.imag)] for x in row] for row in m]


def _require(cfg: dict, key: str, kind=None):
    if key not in cfg:
        raise ConfigError(f"missing field '{key}'")
    value = cfg[key]
    if kind is not None and not isinstance(value, kind):
        raise ConfigError(f"field '{key}' has the wrong type")
    return value


def projection_from_json(cfg: dict) -> CorrelatedProjection:
    ds = _require(cfg, "dim_sys", int)
    de = _require(cfg, "dim_env", int)
    a = [matrix_from_json(x) for x in _require(cfg, "a_ops", list)]
    b = [matrix_from_json(x) for x in _require(cfg, "b_ops", list)]
    if not a or len(a) != len(b):
        raise ConfigError("a_ops and b_ops must be nonempty lists of equal length")
    for x in (*a, *b):
        if x.shape != (de, de):
            raise ConfigError(f"operator of shape {x.shape} does not match dim_env={de}")
    return CorrelatedProjection(DimPair(ds, de), np.asarray(a), np.asarray(b))


def projection_to_json(p: CorrelatedProjection) -> dict:
    return {
        "dim_sys": p.dims.dim_sys,
        "dim_env": p.dims.dim_env,
        "a_ops": [matrix_to_json(x) for x in p.a_ops],
        "b_ops": [matrix_to_json(x) for x in p.b_ops],
    }


def generator_from_json(cfg: dict) -> GeneralizedLindblad:
    n = _require(cfg, "n", int)
    d = _require(cfg, "dim_sys", int)
    h = [matrix_from_json(x) for x in _require(cfg, "h_ops", list)]
    jumps = {}
    for entry in cfg.get("jumps", []):
        i, j = _require(entry, "i", int), _require(entry, "j", int)
        lam = entry.get("lambda", 0)
        if not (1 <= i <= n and 1 <= j <= n):
            raise ConfigError(f"jump indices ({i}, {j}) out of range 1..{n}")
        key = (i - 1, j - 1, int(lam))
        if key in jumps:
            raise ConfigError(f"duplicate jump ({i}, {j}, {lam})")
        jumps[key] = matrix_from_json(_require(entry, "op"))
    if len(h) != n:
        raise ConfigError(f"expected {n} h_ops, got {len(h)}")
    return GeneralizedLindblad(n, d, np.asarray(h), jumps)


def generator_to_json(gen: GeneralizedLindblad) -> dict:
    return {
        "n": gen.n,
        "dim_sys": gen.dim_sys,
        "h_ops": [matrix_to_json(h) for h in gen.h_ops],
        "jumps": [
            {"i": i + 1, "j": j + 1, "lambda": lam, "op": matrix_to_json(r)}
            for (i, j, lam), r in gen.jump_ops.items()
        ],
    }


def model_from_json(cfg: dict) -> tuple[TwoBandModel, int]:
    """Returns the model and the requested number of realizations."""
    kwargs = {}
    for key, attr in [
        ("delta_e", "delta_e"),
        ("delta_eps", "delta_eps"),
        ("n1", "n1"),
        ("n2", "n2"),
        ("lambda", "lam"),
        ("seed", "seed"),
    ]:
        if key in cfg:
            kwargs[attr] = cfg[key]
    for attr in ("n1", "n2", "seed"):
        if attr in kwargs and not isinstance(kwargs[attr], int):
            raise ConfigError(f"field '{attr}' must be an integer")
    realizations = cfg.get("realizations", 100)
    if not isinstance(realizations, int) or realizations < 1:
        raise ConfigError("field 'realizations' must be a positive integer")
    try:
        return TwoBandModel(**kwargs), realizations
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(path, header: list[str], rows) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])


def read_csv(path) -> tuple[list[str], np.ndarray]:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    if not rows:
        raise ConfigError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    try:
        data = np.array([[float(x) for x in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return header, data.reshape(len(rows) - 1, len(header))


def trajectory_rows(traj, n_conserved: int = 0):
    """Header and rows of the trajectory CSV format."""
    n = traj.states.shape[1]
    header = ["t"] + [f"tr_rho_{i + 1}" for i in range(n)]
    two_level = traj.states.shape[-1] == 2
    if two_level:
        header.append("p_e")
    header += ["min_eig", "total_trace"] + [f"conserved_{k + 1}" for k in range(n_conserved)]
    traces = traj.component_traces()
    pe = traj.excited_population() if two_level else None
    rows = []
    for k, t in enumerate(traj.times):
        row = [t, *traces[k]]
        if two_level:
            row.append(pe[k])
        row += [traj.min_eigenvalue[k], traj.total_trace[k], *traj.conserved[k, :n_conserved]]
        rows.append(row)
    return header, rows
