import numpy as np
import pytest
from helpers import brute_apply, random_band_projectors

from corrproj.generator import SIGMA_MINUS, SIGMA_PLUS
from corrproj.operators import (
    ContractError,
    DimensionError,
    DimPair,
    kron,
    operator_basis,
    partial_trace_env,
    random_density_matrix,
    random_hermitian,
)
from corrproj.projection import (
    CorrelatedProjection,
    DegenerateWeightError,
    GaugeError,
    NotAProjectionError,
    apply,
    apply_adjoint,
    band_projection,
    components,
    decompose_idempotent,
    gauge_transform,
    is_relevant_observable,
    map_matrix,
    product_projection,
    validate,
)
from corrproj.twoband import TwoBandModel, two_band_projection


@pytest.fixture
def band(rng):
    pis = random_band_projectors(rng, 5, 3)
    return band_projection(pis, random_density_matrix(5, rng), dim_sys=2)


class TestValidate:
    def test_standard_projection_passes(self, rng):
        report = validate(product_projection(random_density_matrix(3, rng), 2))
        assert report.passed

    def test_non_cp_single_pair(self):
        p = CorrelatedProjection(DimPair(2, 2), np.eye(2)[None], np.diag([1.5, -0.5])[None])
        report = validate(p)
        assert report.biorthogonality_defect <= 1e-10
        assert report.trace_defect <= 1e-10
        assert report.cp_min_eigenvalue == pytest.approx(-0.5, abs=1e-12)
        assert not report.passed

    def test_band_projection_defects(self, band):
        r = validate(band)
        assert r.passed
        for defect in (r.biorthogonality_defect, r.trace_defect, r.hermiticity_defect, r.idempotence_defect):
            assert defect <= 1e-12

    def test_non_biorthogonal_fails(self):
        p = CorrelatedProjection(DimPair(1, 2), np.eye(2)[None], (np.eye(2) / 4)[None])
        r = validate(p)
        assert r.biorthogonality_defect == pytest.approx(0.5)
        assert not r.passed

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            CorrelatedProjection(DimPair(2, 2), np.eye(2)[None], np.eye(3)[None])


class TestApply:
    def test_relevant_state_fixed(self, band, rng):
        rho_rel = sum(kron(0.3 * random_density_matrix(2, rng), b) for b in band.b_ops)
        assert np.max(np.abs(apply(band, rho_rel) - rho_rel)) < 1e-12

    def test_product_projection(self, rng):
        rho0 = random_density_matrix(3, rng)
        p = product_projection(rho0, 2)
        rs, sigma = random_density_matrix(2, rng), random_density_matrix(3, rng)
        assert np.allclose(apply(p, kron(rs, sigma)), kron(rs, rho0), atol=1e-14)

    def test_matches_brute_force(self, band, rng):
        rho = random_density_matrix(10, rng)
        out = apply(band, rho)
        assert np.max(np.abs(out - brute_apply(band.a_ops, band.b_ops, rho, 2, 5))) < 1e-13
        assert abs(np.trace(out) - 1) < 1e-13

    def test_consistency_and_positivity(self, band, rng):
        for _ in range(10):
            rho = random_density_matrix(10, rng)
            out = apply(band, rho)
            dims = band.dims
            assert np.max(np.abs(partial_trace_env(out, dims) - partial_trace_env(rho, dims))) < 1e-12
            assert np.linalg.eigvalsh(out)[0] >= -1e-9

    def test_dimension_mismatch(self, band):
        with pytest.raises(DimensionError):
            apply(band, np.eye(4))


class TestAdjoint:
    def test_relevant_observable_fixed(self, band, rng):
        obs = sum(kron(random_hermitian(2, rng), a) for a in band.a_ops)
        assert np.max(np.abs(apply_adjoint(band, obs) - obs)) < 1e-12

    def test_duality(self, band, rng):
        for _ in range(50):
            obs, rho = random_hermitian(10, rng), random_density_matrix(10, rng)
            lhs = np.trace(obs @ apply(band, rho))
            rhs = np.trace(apply_adjoint(band, obs) @ rho)
            assert abs(lhs - rhs) < 1e-11

    def test_product_projection(self, rng):
        rho0 = random_density_matrix(3, rng)
        p = product_projection(rho0, 2)
        obs = random_hermitian(6, rng)
        expected = kron(partial_trace_env(kron(np.eye(2), rho0) @ obs, p.dims), np.eye(3))
        assert np.allclose(apply_adjoint(p, obs), expected, atol=1e-13)


class TestComponents:
    def test_band_orthogonality(self):
        m = TwoBandModel(n1=2, n2=3)
        p = two_band_projection(m)
        p1, _ = m.band_projectors()
        rs = random_density_matrix(2, np.random.default_rng(0))
        comps = components(p, kron(rs, p1 / 2))
        assert np.allclose(comps[0], rs, atol=1e-14)
        assert np.allclose(comps[1], 0, atol=1e-14)

    def test_sum_is_reduced_state(self, band, rng):
        rho = random_density_matrix(10, rng)
        comps = components(band, rho)
        assert np.max(np.abs(comps.sum(0) - partial_trace_env(rho, band.dims))) < 1e-13
        for c in comps:
            assert np.linalg.eigvalsh(c)[0] >= -1e-9

    def test_totally_mixed(self, band):
        comps = components(band, np.eye(10) / 10)
        for a, c in zip(band.a_ops, comps):
            assert np.allclose(c, np.trace(a).real / 10 * np.eye(2), atol=1e-14)


class TestBandProjection:
    def test_two_band_model_operators(self):
        m = TwoBandModel(n1=3, n2=4)
        p = two_band_projection(m)
        p1, p2 = m.band_projectors()
        assert np.allclose(p.b_ops[0], p1 / 3, atol=1e-15)
        assert np.allclose(p.b_ops[1], p2 / 4, atol=1e-15)

    def test_single_projector_is_product(self, rng):
        rho0 = random_density_matrix(3, rng)
        p = band_projection([np.eye(3)], rho0, dim_sys=2)
        q = product_projection(rho0, 2)
        assert np.allclose(p.a_ops, q.a_ops) and np.allclose(p.b_ops, q.b_ops)

    def test_rank_one_projectors(self):
        pis = [np.diag(np.eye(4)[k]) for k in range(4)]
        p = band_projection(pis, np.eye(4) / 4, dim_sys=2)
        assert np.allclose(p.b_ops, np.array(pis))
        assert validate(p).passed

    def test_degenerate_weight(self):
        rho0 = np.diag([1.0, 0.0])
        with pytest.raises(DegenerateWeightError):
            band_projection([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])], rho0)

    def test_non_orthogonal(self):
        half = np.full((2, 2), 0.5)
        with pytest.raises(ContractError):
            band_projection([half, np.diag([1.0, 0.0])], np.eye(2) / 2)


class TestGauge:
    def test_identity(self, band):
        g = gauge_transform(band, np.eye(band.n))
        assert np.array_equal(g.a_ops, band.a_ops) and np.allclose(g.b_ops, band.b_ops)

    def test_scaling(self, rng):
        pis = random_band_projectors(rng, 4, 2)
        p = band_projection(pis, random_density_matrix(4, rng))
        g = gauge_transform(p, 2 * np.eye(2))
        assert np.allclose(g.a_ops, 2 * p.a_ops) and np.allclose(g.b_ops, p.b_ops / 2)
        rho = random_density_matrix(8, rng)
        assert np.max(np.abs(apply(g, rho) - apply(p, rho))) < 1e-11

    def test_random_well_conditioned(self, band, rng):
        while True:
            u = rng.normal(size=(3, 3))
            if np.linalg.cond(u) <= 10:
                break
        g = gauge_transform(band, u)
        assert validate(g).biorthogonality_defect <= 1e-10
        rho = random_density_matrix(10, rng)
        assert np.max(np.abs(apply(g, rho) - apply(band, rho))) < 1e-11

    def test_singular(self, band):
        with pytest.raises(GaugeError):
            gauge_transform(band, np.zeros((3, 3)))


class TestRelevantObservable:
    def test_excitation_number(self):
        m = TwoBandModel(n1=3, n2=4)
        p1, p2 = m.band_projectors()
        n_op = SIGMA_PLUS @ SIGMA_MINUS
        c = kron(n_op, p1) + kron(n_op + np.eye(2), p2)
        assert is_relevant_observable(two_band_projection(m), c, 1e-12)

    def test_single_level_not_relevant(self):
        m = TwoBandModel(n1=3, n2=4)
        level = np.zeros((7, 7))
        level[0, 0] = 1.0
        obs = kron(np.diag([1.0, 2.0]), level)
        assert not is_relevant_observable(two_band_projection(m), obs, 1e-6)

    def test_identity(self, band):
        assert is_relevant_observable(band, np.eye(10), 1e-12)


class TestDecompose:
    def test_standard_projection(self, rng):
        rho0 = random_density_matrix(3, rng)
        q = decompose_idempotent(map_matrix(product_projection(rho0, 1)))
        assert q.n == 1
        # up to gauge: the single B is proportional to rho0 and tr(B A) = 1
        b, a = q.b_ops[0], q.a_ops[0]
        assert np.allclose(b / np.trace(b), rho0, atol=1e-10)
        assert np.allclose(a * np.trace(b), np.eye(3), atol=1e-10)

    def test_band_roundtrip(self, rng):
        pis = random_band_projectors(rng, 4, 2)
        m = map_matrix(band_projection(pis, random_density_matrix(4, rng)))
        q = decompose_idempotent(m)
        assert q.n == 2
        assert np.max(np.abs(map_matrix(q) - m)) < 1e-10
        assert validate(q).biorthogonality_defect < 1e-10

    def test_identity_map(self):
        q = decompose_idempotent(np.eye(9))
        assert q.n == 9
        assert np.max(np.abs(map_matrix(q) - np.eye(9))) < 1e-12

    def test_reconstructs_action(self, band):
        m = map_matrix(band)
        q = decompose_idempotent(m, dim_sys=band.dims.dim_sys)
        for x in operator_basis(10):
            assert np.max(np.abs(apply(q, x) - apply(band, x))) < 1e-9

    def test_not_idempotent(self):
        with pytest.raises(NotAProjectionError):
            decompose_idempotent(2 * np.eye(4))

    def test_not_hermiticity_preserving(self):
        # X -> tr(X) B is idempotent and trace preserving, but B is not Hermitian
        b = np.array([[0.5, 0.5j], [0.5j, 0.5]])  # trace one, not Hermitian
        m = np.outer(b.reshape(-1, order="F"), np.eye(2).reshape(-1, order="F"))
        with pytest.raises(ContractError):
            decompose_idempotent(m)
