import numpy as np

from corrproj.evolution import ComponentState
from corrproj.generator import GeneralizedLindblad
from corrproj.operators import random_density_matrix, random_hermitian, random_matrix


def random_generator(rng, n, d, n_lambda=2, density=0.7):
    h = np.array([random_hermitian(d, rng) for _ in range(n)])
    jumps = {}
    for i in range(n):
        for j in range(n):
            for lam in range(n_lambda):
                if rng.random() < density:
                    jumps[(i, j, lam)] = random_matrix(d, rng) / np.sqrt(d)
    return GeneralizedLindblad(n, d, h, jumps)


def random_components(rng, n, d):
    """Physical component state: PSD blocks with total trace one."""
    w = rng.dirichlet(np.ones(n))
    return ComponentState(np.array([wi * random_density_matrix(d, rng) for wi in w]))


def random_operators(rng, n, d):
    return np.array([random_matrix(d, rng) for _ in range(n)])


def random_band_projectors(rng, de, k):
    """k orthogonal projectors (each rank >= 1) in a random basis summing to I."""
    from scipy.stats import unitary_group

    u = unitary_group.rvs(de, random_state=rng)
    cuts = np.sort(rng.choice(np.arange(1, de), size=k - 1, replace=False))
    groups = np.split(np.arange(de), cuts)
    return [u[:, g] @ u[:, g].conj().T for g in groups]


def brute_apply(a_ops, b_ops, rho, ds, de):
    """P(rho) by explicit index loops."""
    out = np.zeros((ds * de, ds * de), dtype=complex)
    for a, b in zip(a_ops, b_ops):
        comp = np.zeros((ds, ds), dtype=complex)
        for s in range(ds):
            for t in range(ds):
                for e in range(de):
                    for f in range(de):
                        comp[s, t] += a[f, e] * rho[s * de + e, t * de + f]
        out += np.kron(comp, b)
    return out
