import numpy as np
import pytest

from igflow.channels import (
    TracePreservationError,
    ZeroFeatureError,
    apply_channel,
    approx_equivalent,
    bkm_adjoint,
    build_channel,
    channel_output,
    dephasing_channel,
    depolarizing_channel,
    eigenrelevance,
    first_order_equivalent,
    hs_adjoint,
    kraus_channel,
    partial_trace_channel,
    relevance,
    traceless_hermitian_basis,
    unitary_channel,
)
from igflow.infogeom import (
    DensityMatrix,
    DimensionMismatchError,
    PositivityError,
    bkm_inner,
    omega,
    omega_inv,
    relative_entropy,
)
from conftest import random_channel, random_state, random_traceless

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)


class TestBuildChannel:
    def test_unitary_identity(self):
        chan = build_channel("unitary", u=np.eye(3))
        assert len(chan.kraus) == 1
        assert np.allclose(chan.kraus[0], np.eye(3))

    def test_partial_trace_on_product_state(self, rng):
        rho_a = random_state(rng, 2)
        rho_b = random_state(rng, 2)
        chan = build_channel("partial_trace", dims=(2, 2), traced=1)
        out = apply_channel(chan, np.kron(rho_a.matrix, rho_b.matrix))
        assert np.allclose(out, rho_a.matrix, atol=1e-12)
        chan0 = build_channel("partial_trace", dims=(2, 2), traced=0)
        out0 = apply_channel(chan0, np.kron(rho_a.matrix, rho_b.matrix))
        assert np.allclose(out0, rho_b.matrix, atol=1e-12)

    def test_depolarizing_fixed_point(self):
        chan = build_channel("depolarizing", p=0.7)
        out = apply_channel(chan, np.eye(2) / 2)
        assert np.allclose(out, np.eye(2) / 2, atol=1e-12)

    @pytest.mark.parametrize("dim", [2, 3])
    def test_depolarizing_general_dim(self, rng, dim):
        p = 0.4
        chan = depolarizing_channel(p, dim)
        rho = random_state(rng, dim)
        expected = (1 - p) * rho.matrix + p * np.eye(dim) / dim
        assert np.allclose(apply_channel(chan, rho), expected, atol=1e-12)

    def test_dephasing_kills_coherences(self, rng):
        chan = dephasing_channel(2)
        rho = random_state(rng, 2)
        out = apply_channel(chan, rho)
        assert np.allclose(out, np.diag(np.diag(rho.matrix)), atol=1e-12)

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            depolarizing_channel(1.2)
        with pytest.raises(ValueError):
            unitary_channel(np.array([[1.0, 1.0], [0.0, 1.0]]))
        with pytest.raises(TracePreservationError):
            kraus_channel([np.eye(2) * 0.5])
        with pytest.raises(ValueError):
            build_channel("no-such-kind")


class TestApplyChannel:
    def test_identity_channel(self, rng):
        chan = unitary_channel(np.eye(3))
        m = random_traceless(rng, 3)
        assert np.allclose(apply_channel(chan, m), m)

    def test_depolarizing_scales_traceless(self, rng):
        p = 0.3
        chan = depolarizing_channel(p)
        x = random_traceless(rng, 2)
        assert np.allclose(apply_channel(chan, x), (1 - p) * x, atol=1e-12)

    def test_partial_trace_of_bell_projector(self):
        bell = np.zeros(4, dtype=complex)
        bell[0] = bell[3] = 1.0 / np.sqrt(2.0)
        proj = np.outer(bell, bell.conj())
        chan = partial_trace_channel((2, 2))
        assert np.allclose(apply_channel(chan, proj), np.eye(2) / 2, atol=1e-12)

    def test_dimension_mismatch(self):
        chan = unitary_channel(np.eye(2))
        with pytest.raises(DimensionMismatchError):
            apply_channel(chan, np.eye(3))

    def test_trace_and_hermiticity_preserved(self, rng):
        chan = random_channel(rng, 3)
        rho = random_state(rng, 3)
        out = apply_channel(chan, rho)
        assert np.trace(out).real == pytest.approx(1.0, abs=1e-12)
        assert np.max(np.abs(out - out.conj().T)) < 1e-12
        x = random_traceless(rng, 3)
        assert abs(np.trace(apply_channel(chan, x))) < 1e-12


class TestHsAdjoint:
    def test_identity_preserved(self, rng):
        chan = random_channel(rng, 3)
        assert np.allclose(hs_adjoint(chan, np.eye(3)), np.eye(3), atol=1e-10)

    def test_unitary_conjugation(self, rng):
        q, _ = np.linalg.qr(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
        chan = unitary_channel(q)
        a = random_traceless(rng, 3)
        assert np.allclose(hs_adjoint(chan, a), q.conj().T @ a @ q, atol=1e-12)

    def test_trace_pairing_duality(self, rng):
        chan = random_channel(rng, 3)
        rho = random_state(rng, 3)
        a = random_traceless(rng, 3)
        lhs = np.trace(a @ apply_channel(chan, rho)).real
        rhs = np.trace(hs_adjoint(chan, a) @ rho.matrix).real
        assert abs(lhs - rhs) < 1e-10


class TestBkmAdjoint:
    def test_identity_channel(self, rng):
        chan = unitary_channel(np.eye(3))
        rho = random_state(rng, 3)
        y = random_traceless(rng, 3)
        assert np.allclose(bkm_adjoint(chan, rho, y), y, atol=1e-10)

    def test_preserves_tracelessness(self, rng):
        chan = random_channel(rng, 3)
        rho = random_state(rng, 3)
        x = random_traceless(rng, 3)
        pulled = bkm_adjoint(chan, rho, apply_channel(chan, x))
        assert abs(np.trace(pulled)) < 1e-10

    def test_pairing_identity_on_basis(self, rng):
        chan = random_channel(rng, 2)
        rho = random_state(rng, 2)
        sigma = channel_output(chan, rho)
        y = random_traceless(rng, 2)
        pulled = bkm_adjoint(chan, rho, y)
        for x in traceless_hermitian_basis(2):
            lhs = bkm_inner(rho, pulled, x)
            rhs = bkm_inner(sigma, y, apply_channel(chan, x))
            assert abs(lhs - rhs) < 1e-8


class TestRelevance:
    def test_local_feature_fully_relevant(self, rng):
        rho = DensityMatrix.maximally_mixed(4)
        chan = partial_trace_channel((2, 2))
        p = random_traceless(rng, 2)
        assert relevance(chan, rho, np.kron(p, np.eye(2))) == pytest.approx(1.0, abs=1e-10)

    def test_product_feature_irrelevant(self, rng):
        rho = DensityMatrix.maximally_mixed(4)
        chan = partial_trace_channel((2, 2))
        p = random_traceless(rng, 2)
        q = random_traceless(rng, 2)
        assert relevance(chan, rho, np.kron(p, q)) == pytest.approx(0.0, abs=1e-10)

    def test_depolarizing_closed_form(self, rng):
        p = 0.35
        rho = DensityMatrix.maximally_mixed(2)
        chan = depolarizing_channel(p)
        x = random_traceless(rng, 2)
        assert relevance(chan, rho, x) == pytest.approx((1 - p) ** 2, abs=1e-12)

    def test_zero_feature_rejected(self, rng):
        chan = depolarizing_channel(0.2)
        with pytest.raises(ZeroFeatureError):
            relevance(chan, DensityMatrix.maximally_mixed(2), np.zeros((2, 2)))

    def test_contraction_bound(self, rng):
        for _ in range(10):
            dim = int(rng.integers(2, 4))
            chan = random_channel(rng, dim)
            rho = random_state(rng, dim)
            x = random_traceless(rng, dim)
            assert relevance(chan, rho, x) <= 1.0 + 1e-9


class TestEigenrelevance:
    def test_identity_channel_all_ones(self, rng):
        rho = random_state(rng, 3)
        spectrum = eigenrelevance(unitary_channel(np.eye(3)), rho)
        assert np.max(np.abs(spectrum.etas - 1.0)) < 1e-10

    def test_unitary_channel_all_ones(self, rng):
        q, _ = np.linalg.qr(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
        rho = random_state(rng, 3)
        spectrum = eigenrelevance(unitary_channel(q), rho)
        assert np.max(np.abs(spectrum.etas - 1.0)) < 1e-10

    def test_partial_trace_multiplicities(self):
        rho = DensityMatrix.maximally_mixed(4)
        spectrum = eigenrelevance(partial_trace_channel((2, 2)), rho)
        assert np.sum(np.abs(spectrum.etas - 1.0) < 1e-10) == 3
        assert np.sum(np.abs(spectrum.etas) < 1e-10) == 12

    def test_depolarizing_uniform_spectrum(self):
        p = 0.25
        rho = DensityMatrix.maximally_mixed(2)
        spectrum = eigenrelevance(depolarizing_channel(p), rho)
        assert np.allclose(spectrum.etas, (1 - p) ** 2, atol=1e-10)

    def test_features_bkm_orthonormal(self, rng):
        chan = random_channel(rng, 3)
        rho = random_state(rng, 3)
        spectrum = eigenrelevance(chan, rho)
        n = len(spectrum)
        gram = np.array([[bkm_inner(rho, spectrum.features[i].matrix,
                                    spectrum.features[j].matrix)
                          for j in range(n)] for i in range(n)])
        assert np.max(np.abs(gram - np.eye(n))) < 1e-8

    def test_both_eigenrelations(self, rng):
        chan = random_channel(rng, 2)
        rho = random_state(rng, 2)
        sigma = channel_output(chan, rho)
        spectrum = eigenrelevance(chan, rho)
        for k in range(len(spectrum)):
            x = spectrum.features[k].matrix
            eta = spectrum.etas[k]
            primal = bkm_adjoint(chan, rho, apply_channel(chan, x))
            assert np.max(np.abs(primal - eta * x)) < 1e-7
            a = spectrum.observables[k].matrix
            dual = hs_adjoint(chan, omega_inv(sigma, apply_channel(chan, omega(rho, a))))
            assert np.max(np.abs(dual - eta * a)) < 1e-7

    def test_observables_are_lowered_features(self, rng):
        chan = random_channel(rng, 2)
        rho = random_state(rng, 2)
        spectrum = eigenrelevance(chan, rho)
        for k in range(len(spectrum)):
            lowered = omega_inv(rho, spectrum.features[k].matrix)
            assert np.allclose(spectrum.observables[k].matrix, lowered, atol=1e-10)

    def test_spectral_consistency_with_relevance(self, rng):
        chan = random_channel(rng, 2)
        rho = random_state(rng, 2)
        spectrum = eigenrelevance(chan, rho)
        x = random_traceless(rng, 2)
        x /= np.sqrt(bkm_inner(rho, x, x))
        recon = sum(spectrum.etas[k] * bkm_inner(rho, x, spectrum.features[k].matrix) ** 2
                    for k in range(len(spectrum)))
        assert abs(recon - relevance(chan, rho, x)) < 1e-7

    def test_cutoff_selection(self, rng):
        chan = depolarizing_channel(0.5)
        rho = DensityMatrix.maximally_mixed(2)
        spectrum = eigenrelevance(chan, rho)
        assert spectrum.cutoff_index == 3
        assert spectrum.with_top(1).cutoff_index == 1
        assert spectrum.with_threshold(0.9).cutoff_index == 0
        assert len(spectrum.with_threshold(0.1).relevant_observables) == 3


class TestEquivalence:
    def test_first_order_same_state(self, rng):
        rho = random_state(rng, 2)
        obs = [random_traceless(rng, 2) for _ in range(3)]
        assert first_order_equivalent(rho, rho, obs, tol=0.0)

    def test_first_order_empty_list(self, rng):
        assert first_order_equivalent(random_state(rng, 2), random_state(rng, 2), [], tol=0.0)

    def test_first_order_direction_sensitivity(self):
        rho1 = DensityMatrix.maximally_mixed(2)
        rho2 = DensityMatrix(np.eye(2) / 2 + 0.1 * SZ)
        assert first_order_equivalent(rho1, rho2, [SX], tol=1e-3)
        assert not first_order_equivalent(rho1, rho2, [SZ], tol=1e-3)

    def test_approx_equivalent_same_state(self, rng):
        rho = random_state(rng, 2)
        chan = random_channel(rng, 2)
        assert approx_equivalent(chan, rho, rho, eps=0.0)

    def test_fully_depolarizing_collapses_everything(self, rng):
        chan = depolarizing_channel(1.0)
        assert approx_equivalent(chan, random_state(rng, 2), random_state(rng, 2), eps=0.0)

    def test_threshold_at_known_kl(self):
        rho = DensityMatrix(np.diag([0.6, 0.4]))
        sigma = DensityMatrix(np.diag([0.5, 0.5]))
        kl = 0.6 * np.log(0.6 / 0.5) + 0.4 * np.log(0.4 / 0.5)
        chan = dephasing_channel(2)
        assert approx_equivalent(chan, rho, sigma, eps=kl + 1e-9)
        assert not approx_equivalent(chan, rho, sigma, eps=kl - 1e-9)

    def test_boundary_output_raises(self):
        # partial trace of a pure product state hits the positivity floor
        pure = np.zeros((4, 4), dtype=complex)
        pure[0, 0] = 1.0
        chan = partial_trace_channel((2, 2))
        with pytest.raises(PositivityError):
            channel_output(chan, DensityMatrix(pure))


class TestMonotonicity:
    def test_distance_contracts_under_channels(self, rng):
        for _ in range(15):
            dim = int(rng.integers(2, 4))
            rho = random_state(rng, dim)
            sigma = random_state(rng, dim)
            chan = random_channel(rng, dim)
            d_in = relative_entropy(rho, sigma)
            d_out = relative_entropy(channel_output(chan, rho), channel_output(chan, sigma))
            assert d_in >= d_out - 1e-9
