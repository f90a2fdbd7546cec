import numpy as np
import pytest

from igflow.field import (
    EigencheckReport,
    FieldChannel,
    FieldCovariance,
    LatticeSpec,
    ModeObservable,
    SingularSmearingError,
    ZeroModeError,
    covariance_massive,
    functional_derivative_eigencheck,
    h_operator,
    load_field_spec,
    mode_relevance,
    product_relevance,
    quadratic_observable_relevance,
    smearing_eigenvalue,
)
from igflow.particle import relevance_spectrum
from conftest import random_spd


@pytest.fixture
def lattice():
    return LatticeSpec(1, 64)


@pytest.fixture
def cov(lattice):
    return covariance_massive(1.0, 1.0, lattice)


@pytest.fixture
def chan():
    return FieldChannel(sigma=0.5, h=1.0)


class TestLattice:
    def test_mode_count_and_range(self, lattice):
        ks = lattice.modes()
        assert ks.shape == (64, 1)
        assert np.max(np.abs(ks)) == pytest.approx(np.pi, rel=1e-12)
        assert np.min(np.sum(ks * ks, axis=1)) == 0.0

    def test_two_dimensional_modes(self):
        ks = LatticeSpec(2, 4, 0.5).modes()
        assert ks.shape == (16, 2)

    def test_validation(self):
        with pytest.raises(ValueError):
            LatticeSpec(0, 8)
        with pytest.raises(ValueError):
            LatticeSpec(1, 1)


class TestCovariance:
    def test_massive_value_at_zero(self):
        cov = covariance_massive(1.0, 1.0, LatticeSpec(1, 8))
        assert cov.lookup([0.0]) == pytest.approx(1.0)

    def test_linear_in_beta(self, lattice):
        c1 = covariance_massive(1.0, 0.7, lattice)
        c2 = covariance_massive(2.0, 0.7, lattice)
        assert np.allclose(c2.a, 2.0 * c1.a)

    def test_massless_zero_mode_errors(self, lattice):
        with pytest.raises(ZeroModeError):
            covariance_massive(1.0, 0.0, lattice)

    def test_massless_zero_mode_excluded(self, lattice):
        cov = covariance_massive(1.0, 0.0, lattice, exclude_zero_mode=True)
        assert len(cov) == 63
        with pytest.raises(ValueError):
            cov.lookup([0.0])


class TestSmearing:
    def test_zero_momentum(self):
        assert smearing_eigenvalue([0.0], 0.7) == 1.0

    def test_unit_product(self):
        assert smearing_eigenvalue([2.0], 0.5) == pytest.approx(np.exp(-0.5), rel=1e-12)

    def test_grid_convolution_oracle(self):
        # blur cos(kx) numerically and read off the plane-wave eigenvalue
        k, sigma = 1.3, 0.6
        xs = np.linspace(-30.0, 30.0, 6001)
        h = xs[1] - xs[0]
        ys = np.linspace(-6.0 * sigma, 6.0 * sigma, 1201)
        hy = ys[1] - ys[0]
        weights = np.exp(-ys**2 / (2 * sigma**2)) / (np.sqrt(2 * np.pi) * sigma)
        core = np.abs(xs) < 10.0
        blurred = np.array([
            np.sum(np.cos(k * (x - ys)) * weights) * hy for x in xs[core]
        ])
        target = smearing_eigenvalue([k], sigma) * np.cos(k * xs[core])
        assert np.max(np.abs(blurred - target)) < 1e-8


class TestModeRelevance:
    def test_unit_combination_halves(self):
        # a h^2 e^{k^2 s^2} = 1 gives 2^{-n}
        for n in (1, 2, 5):
            assert mode_relevance(1.0, 1.0, 0.0, [0.0], n) == pytest.approx(0.5**n)

    def test_degree_zero(self):
        assert mode_relevance(3.0, 1.2, 0.4, [0.9], 0) == 1.0

    def test_reduction_to_particle_closed_form(self, cov, chan):
        for k, a in zip(cov.modes, cov.a):
            k2 = float(k @ k)
            tau = 1.0 / np.sqrt(a)
            sigma_sub = chan.h * np.exp(0.5 * k2 * chan.sigma**2)
            for n in (1, 2, 3):
                closed = dict(relevance_spectrum(tau, sigma_sub, n))[n]
                assert abs(mode_relevance(a, chan.h, chan.sigma, k, n) - closed) < 1e-12

    def test_momentum_cutoff_monotone_and_crossing(self, chan):
        lattice = LatticeSpec(1, 128, 0.25)
        cov = covariance_massive(1.0, 1.0, lattice)
        ks = np.array([k for k in cov.modes if k[0] >= 0.0])
        order = np.argsort(ks[:, 0])
        etas = [mode_relevance(cov.lookup(k), chan.h, chan.sigma, k, 1)
                for k in ks[order]]
        assert all(b < a for a, b in zip(etas, etas[1:]))
        assert etas[-1] < 1e-6  # far past 1/sigma every mode is invisible

    def test_massless_low_momentum_degree_independence(self):
        # with m = 0 the per-mode factor goes to 1 for every degree as k -> 0
        beta, h = 1.0, 1.0
        for k in (1e-3, 1e-4):
            a = beta * k**2
            vals = [mode_relevance(a, h, 0.5, [k], n) for n in (1, 2, 6)]
            assert max(abs(v - 1.0) for v in vals) < 10 * beta * k**2 * h**2


class TestProductRelevance:
    def test_single_mode_reduces(self, cov, chan):
        k = tuple(cov.modes[3])
        obs = ModeObservable((k,), (2,))
        expected = mode_relevance(cov.lookup(k), chan.h, chan.sigma, k, 2)
        assert product_relevance(obs, cov, chan) == pytest.approx(expected, rel=1e-14)

    def test_repeated_factor_squares(self, cov, chan):
        k = tuple(cov.modes[5])
        single = product_relevance(ModeObservable((k,), (1,)), cov, chan)
        double = product_relevance(ModeObservable((k, k), (1, 1)), cov, chan)
        assert double == pytest.approx(single**2, rel=1e-14)

    def test_mixed_modes_direct_product(self, cov, chan):
        k1, k2 = tuple(cov.modes[2]), tuple(cov.modes[9])
        obs = ModeObservable((k1, k2), (2, 3))
        direct = (mode_relevance(cov.lookup(k1), chan.h, chan.sigma, k1, 2)
                  * mode_relevance(cov.lookup(k2), chan.h, chan.sigma, k2, 3))
        assert abs(product_relevance(obs, cov, chan) - direct) < 1e-14

    def test_unknown_mode(self, cov, chan):
        with pytest.raises(ValueError):
            product_relevance(ModeObservable(((17.3,),), (1,)), cov, chan)

    def test_disjoint_sets_multiply(self, cov, chan):
        k1, k2, k3 = (tuple(cov.modes[i]) for i in (1, 4, 8))
        joint = product_relevance(ModeObservable((k1, k2, k3), (1, 2, 1)), cov, chan)
        split = (product_relevance(ModeObservable((k1,), (1,)), cov, chan)
                 * product_relevance(ModeObservable((k2, k3), (2, 1)), cov, chan))
        assert joint == pytest.approx(split, rel=1e-13)

    def test_validation(self):
        with pytest.raises(ValueError):
            ModeObservable((), ())
        with pytest.raises(ValueError):
            ModeObservable(((0.0,),), (0,))


class TestQuadraticObservable:
    def test_single_mode_ratio(self, chan):
        cov = FieldCovariance(np.array([[0.5]]), np.array([2.0]))
        res = quadratic_observable_relevance(cov, chan)
        expected = mode_relevance(2.0, chan.h, chan.sigma, [0.5], 2)
        assert res.value == pytest.approx(expected, rel=1e-14)

    def test_noiseless_limit(self, cov):
        res = quadratic_observable_relevance(cov, FieldChannel(sigma=0.5, h=1e-8))
        assert abs(res.value - 1.0) < 1e-6

    def test_brute_force_sum(self, cov, chan):
        res = quadratic_observable_relevance(cov, chan)
        num = sum((1.0 / a**2) * (1.0 + a * chan.h**2 * np.exp(float(k @ k) * chan.sigma**2)) ** -2
                  for k, a in zip(cov.modes, cov.a))
        den = sum(1.0 / a**2 for a in cov.a)
        assert abs(res.value - num / den) < 1e-12
        assert res.numerator == pytest.approx(num, rel=1e-12)
        assert res.denominator == pytest.approx(den, rel=1e-12)

    def test_growth_reporting_across_sizes(self, chan):
        denominators = []
        for n in (16, 32, 64):
            cov = covariance_massive(1.0, 1.0, LatticeSpec(1, n))
            denominators.append(quadratic_observable_relevance(cov, chan).denominator)
        assert denominators[0] < denominators[1] < denominators[2]


class TestHOperator:
    def test_diagonal_translation_invariant_case(self):
        ks = np.array([0.0, 0.5, 1.0])
        a = 1.0 + ks**2
        sigma = 0.7
        x = np.exp(-ks**2 * sigma**2 / 2.0)
        y = np.full(3, 0.3)
        res = h_operator(a, x, y)
        expected = np.sort(1.0 / (1.0 + y * np.exp(ks**2 * sigma**2) / a))[::-1]
        assert np.allclose(res.etas, expected, atol=1e-14)

    def test_zero_noise_identity(self, rng):
        a = random_spd(rng, 4, 0.5, 2.0)
        x = random_spd(rng, 4, 0.5, 2.0)
        res = h_operator(a, x, np.zeros((4, 4)))
        assert np.allclose(res.h, np.eye(4), atol=1e-10)
        assert np.allclose(res.etas, 1.0, atol=1e-10)

    def test_dense_symmetry_and_orthonormality(self, rng):
        for _ in range(20):
            a = random_spd(rng, 4, 0.5, 2.0)
            x = random_spd(rng, 4, 0.5, 2.0)
            y = random_spd(rng, 4, 0.0, 1.0)
            res = h_operator(a, x, y)
            ah = a @ res.h
            assert np.max(np.abs(ah - ah.T)) < 1e-10
            gram = res.basis.T @ a @ res.basis
            assert np.max(np.abs(gram - np.eye(4))) < 1e-8
            assert np.all(res.etas > 0.0) and np.all(res.etas <= 1.0 + 1e-12)

    def test_eigenvectors_satisfy_relation(self, rng):
        a = random_spd(rng, 3, 0.5, 2.0)
        x = random_spd(rng, 3, 0.5, 2.0)
        y = random_spd(rng, 3, 0.1, 1.0)
        res = h_operator(a, x, y)
        for idx in range(3):
            f = res.basis[:, idx]
            assert np.max(np.abs(res.h @ f - res.etas[idx] * f)) < 1e-10

    def test_singular_smearing(self, rng):
        a = random_spd(rng, 3, 0.5, 2.0)
        y = random_spd(rng, 3, 0.1, 1.0)
        with pytest.raises(SingularSmearingError):
            h_operator(a, np.zeros((3, 3)), y)


class TestFunctionalEigencheck:
    def test_default_directions_pass(self, rng):
        a = random_spd(rng, 3, 0.5, 2.0)
        x = random_spd(rng, 3, 0.5, 2.0)
        y = random_spd(rng, 3, 0.1, 1.0)
        report = functional_derivative_eigencheck(a, x, y)
        assert isinstance(report, EigencheckReport)
        assert report.passed(1e-9)

    def test_first_order_eigenvalues(self, rng):
        a = random_spd(rng, 2, 0.5, 2.0)
        x = random_spd(rng, 2, 0.5, 2.0)
        y = random_spd(rng, 2, 0.1, 1.0)
        report = functional_derivative_eigencheck(a, x, y, directions=[(0,), (1,)])
        etas = h_operator(a, x, y).etas
        for entry, eta in zip(report.entries, etas):
            assert entry.eta_product == pytest.approx(eta, rel=1e-12)
            assert entry.residual < 1e-9

    def test_second_order_squares(self, rng):
        a = random_spd(rng, 2, 0.5, 2.0)
        x = random_spd(rng, 2, 0.5, 2.0)
        y = random_spd(rng, 2, 0.1, 1.0)
        report = functional_derivative_eigencheck(a, x, y, directions=[(0, 0)])
        eta0 = h_operator(a, x, y).etas[0]
        assert report.entries[0].eta_product == pytest.approx(eta0**2, rel=1e-12)
        assert report.entries[0].residual < 1e-9

    def test_constant_direction(self, rng):
        a = random_spd(rng, 2, 0.5, 2.0)
        report = functional_derivative_eigencheck(a, np.eye(2), 0.4 * np.eye(2),
                                                  directions=[()])
        assert report.entries[0].eta_product == 1.0
        assert report.entries[0].residual < 1e-12

    def test_single_particle_reduction(self):
        # one mode with unit smearing is exactly the convolution model
        tau2, sigma2 = 1.0, 1.0
        report = functional_derivative_eigencheck(
            np.array([tau2]), np.array([1.0]), np.array([sigma2]),
            directions=[(0,), (0, 0), (0, 0, 0)])
        for entry, n in zip(report.entries, (1, 2, 3)):
            assert entry.eta_product == pytest.approx(2.0 ** (-n), rel=1e-12)
            assert entry.residual < 1e-12

    def test_order_guard(self, rng):
        a = random_spd(rng, 2, 0.5, 2.0)
        with pytest.raises(ValueError):
            functional_derivative_eigencheck(a, np.eye(2), np.eye(2),
                                             directions=[(0, 0, 0, 0)])


class TestFieldSpecFile:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "field.cfg"
        path.write_text(
            "# lattice description\n"
            "d = 1\nn_per_side = 16\nspacing = 0.5\n"
            "beta = 2.0\nmass = 1.5\nh = 0.7\nsigma = 0.3\n"
        )
        spec = load_field_spec(path)
        assert spec.lattice == LatticeSpec(1, 16, 0.5)
        assert spec.beta == 2.0
        assert spec.mass == 1.5
        assert spec.channel == FieldChannel(sigma=0.3, h=0.7)

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "field.cfg"
        path.write_text("d=1\nn_per_side=8\nspacing=1\nbeta=1\nmass=1\nh=1\nsigma=1\nbogus=2\n")
        with pytest.raises(ValueError, match="bogus"):
            load_field_spec(path)
        assert load_field_spec(path, allow_extra=True) is not None

    def test_missing_key_rejected(self, tmp_path):
        path = tmp_path / "field.cfg"
        path.write_text("d=1\nn_per_side=8\n")
        with pytest.raises(ValueError, match="missing"):
            load_field_spec(path)
