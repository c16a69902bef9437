import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from qergodic.errors import EmptyEnsembleError, ZeroProbabilityError
from qergodic.ergodic import (
    PhaseDistribution,
    averaged_transform_kernel,
    characteristic_function,
    dephase,
    dephasing_distribution,
    ergodic_joint,
    ergodic_kernel,
    phase_average_channel,
    prepare_state,
    prepared_joint,
    substream,
)
from qergodic.hilbert import (
    DensityOperator,
    Observable,
    PureState,
    build_basis,
    eigendecompose,
    phase_unitary,
    random_density,
)
from qergodic.quasiprob import kd_joint, propagate_joint, transform_kernel
from qergodic.serialize import dumps

S = 1 / np.sqrt(2)
PLUS = PureState([S, S])
ZERO = PureState([1, 0])
seeds = st.integers(0, 2**32 - 1)

distributions = st.one_of(
    st.floats(0.1, 20).map(PhaseDistribution.uniform),
    st.floats(0, 5).map(PhaseDistribution.gaussian),
    st.floats(-10, 10).map(PhaseDistribution.point),
)


def quad_average(f, lo, hi, weight=lambda p: 1.0):
    """Complex quadrature of f(p) * weight(p) over [lo, hi]."""
    re = integrate.quad(lambda p: (f(p) * weight(p)).real, lo, hi, epsabs=1e-13, limit=200)[0]
    im = integrate.quad(lambda p: (f(p) * weight(p)).imag, lo, hi, epsabs=1e-13, limit=200)[0]
    return re + 1j * im


def integer_observable(d, seed):
    return Observable(np.arange(d, dtype=float)[::-1], build_basis("haar_random", d, seed=seed))


class TestCharacteristicFunction:
    def test_uniform_zero_gap(self):
        assert characteristic_function(PhaseDistribution.uniform(), 0.0) == 1

    def test_uniform_integer_gap_vanishes(self):
        assert abs(characteristic_function(PhaseDistribution.uniform(), 1.0)) < 1e-15

    def test_gaussian_sigma2_gap1(self):
        dist = PhaseDistribution.gaussian(2.0)
        density = lambda p: math.exp(-p * p / 8) / math.sqrt(8 * math.pi)
        oracle = quad_average(lambda p: np.exp(-1j * p), -60, 60, density)
        value = characteristic_function(dist, 1.0)
        assert abs(value - oracle) < 1e-12
        assert abs(value - 0.1353352832366127) < 1e-15

    @pytest.mark.parametrize("gap", [0.3, 1.7, -2.2])
    def test_uniform_matches_quadrature(self, gap):
        T = 2 * math.pi
        oracle = quad_average(lambda p: np.exp(-1j * p * gap), 0, T) / T
        assert abs(characteristic_function(PhaseDistribution.uniform(), gap) - oracle) < 1e-12

    def test_point(self):
        assert abs(characteristic_function(PhaseDistribution.point(0.7), 2.0) - np.exp(-1.4j)) < 1e-15

    def test_discrete(self):
        dist = PhaseDistribution.discrete([0.0, math.pi], [0.5, 0.5])
        assert abs(characteristic_function(dist, 1.0)) < 1e-15

    @given(dist=distributions, gap=st.floats(-50, 50))
    def test_bounds(self, dist, gap):
        assert characteristic_function(dist, 0.0) == 1
        assert abs(characteristic_function(dist, gap)) <= 1 + 1e-12

    def test_vectorized(self):
        vals = characteristic_function(PhaseDistribution.uniform(), np.array([[0.0, 1.0], [2.0, 0.5]]))
        assert vals.shape == (2, 2)
        assert vals[0, 0] == 1 and vals[0, 1] == 0 and vals[1, 0] == 0


class TestPhaseAverageChannel:
    def test_point_zero_is_identity(self):
        rho = random_density(3, 0)
        obs = eigendecompose(np.diag([2.0, 0.5, -1.0]))
        out, report = phase_average_channel(rho, obs, PhaseDistribution.point(0.0))
        np.testing.assert_allclose(out.matrix, rho.matrix, atol=1e-15)
        assert report.factor(0.0) == 1

    def test_gaussian_damping_of_plus(self):
        obs = eigendecompose(np.diag([1.0, -1.0]))
        out, report = phase_average_channel(PLUS.density(), obs, PhaseDistribution.gaussian(2.0))
        # gap 2: 0.5 * exp(-sigma^2 gap^2 / 2) = 0.5 * exp(-8)
        assert abs(out.matrix[0, 1] - 1.6773131395125592e-04) < 1e-15
        np.testing.assert_allclose(np.diagonal(out.matrix), [0.5, 0.5], atol=1e-15)
        assert abs(report.factor(2.0) - math.exp(-8)) < 1e-15

    def test_uniform_montecarlo_vs_exact(self):
        obs = eigendecompose(np.diag([1.0, 0.0]))
        dist = PhaseDistribution.uniform()
        exact, _ = phase_average_channel(PLUS.density(), obs, dist)
        np.testing.assert_allclose(exact.matrix, np.eye(2) / 2, atol=1e-15)
        sampled, _ = phase_average_channel(PLUS.density(), obs, dist, mode="montecarlo", n=10**5, seed=42)
        assert sampled.trace_distance(exact) < 0.02

    @pytest.mark.parametrize("n", [10**3, 10**4, 10**5])
    def test_montecarlo_convergence(self, n):
        rho, obs = random_density(4, 1), integer_observable(4, 2)
        dist = PhaseDistribution.uniform()
        exact, _ = phase_average_channel(rho, obs, dist)
        sampled, _ = phase_average_channel(rho, obs, dist, mode="montecarlo", n=n, seed=7)
        assert sampled.trace_distance(exact) <= 5 / math.sqrt(n)

    def test_montecarlo_is_seed_deterministic_and_worker_independent(self):
        rho, obs = random_density(3, 4), eigendecompose(np.diag([1.0, 0.3, -0.4]))
        dist = PhaseDistribution.gaussian(1.3)
        a, ra = phase_average_channel(rho, obs, dist, mode="montecarlo", n=20_000, seed=5)
        b, rb = phase_average_channel(rho, obs, dist, mode="montecarlo", n=20_000, seed=5, workers=4)
        c, _ = phase_average_channel(rho, obs, dist, mode="montecarlo", n=20_000, seed=6)
        np.testing.assert_array_equal(a.matrix, b.matrix)
        assert ra == rb
        assert np.max(np.abs(a.matrix - c.matrix)) > 0

    def test_empty_ensemble(self):
        obs = eigendecompose(np.diag([1.0, -1.0]))
        with pytest.raises(EmptyEnsembleError):
            phase_average_channel(PLUS.density(), obs, PhaseDistribution.uniform(), mode="montecarlo", n=0)

    @given(seed=seeds, d=st.integers(2, 6), dist=distributions)
    def test_valid_state_and_diagonal_invariance(self, seed, d, dist):
        rng = np.random.default_rng(seed)
        rho = random_density(d, rng)
        obs = Observable(np.sort(rng.uniform(-3, 3, d))[::-1], build_basis("haar_random", d, seed=rng))
        out, report = phase_average_channel(rho, obs, dist)
        m = out.matrix
        assert np.max(np.abs(m - m.conj().T)) < 1e-10
        assert abs(np.trace(m) - 1) < 1e-10
        assert np.linalg.eigvalsh(m).min() >= -1e-10
        np.testing.assert_allclose(
            np.diagonal(obs.to_eigenbasis(m)), np.diagonal(obs.to_eigenbasis(rho.matrix)), atol=1e-12
        )
        assert report.factor(0.0) == 1

    def test_report_json(self):
        obs = eigendecompose(np.diag([1.0, -1.0]))
        _, report = phase_average_channel(PLUS.density(), obs, PhaseDistribution.gaussian(2.0))
        text = dumps(report, indent=None)
        assert text.startswith('[{"gap":0.0,"factor":[1.0,0.0]},{"gap":2.0,"factor":[')


class TestDephase:
    def test_diagonal_state_unchanged(self):
        rho = DensityOperator(np.diag([0.2, 0.3, 0.5]))
        out = dephase(rho, eigendecompose(np.diag([3.0, 2.0, 1.0])))
        np.testing.assert_allclose(out.matrix, rho.matrix, atol=1e-15)

    def test_plus_to_mixed(self):
        out = dephase(PLUS.density(), eigendecompose(np.diag([1.0, -1.0])))
        np.testing.assert_allclose(out.matrix, np.eye(2) / 2, atol=1e-15)

    def test_equals_uniform_channel_seed5(self):
        rng = np.random.default_rng(5)
        rho = random_density(4, rng)
        obs = Observable([3.0, 1.0, 0.0, -2.0], build_basis("haar_random", 4, seed=rng))
        exact, report = phase_average_channel(rho, obs, PhaseDistribution.uniform())
        assert np.max(np.abs(exact.matrix - dephase(rho, obs).matrix)) < 1e-12
        assert report.residual == 0

    @given(seed=seeds, lam=st.floats(0, 1))
    def test_idempotent_and_convex(self, seed, lam):
        r1, r2 = random_density(3, seed), random_density(3, seed + 1)
        obs = eigendecompose(np.diag([1.0, 0.2, -0.7]))
        once = dephase(r1, obs)
        np.testing.assert_allclose(dephase(once, obs).matrix, once.matrix, atol=1e-12)
        mix = DensityOperator(lam * r1.matrix + (1 - lam) * r2.matrix)
        np.testing.assert_allclose(
            dephase(mix, obs).matrix, lam * once.matrix + (1 - lam) * dephase(r2, obs).matrix, atol=1e-12
        )


class TestDephasingDistribution:
    def test_commensurate_spectrum(self):
        obs = Observable([1.5, 0.5, 0.0], build_basis("standard", 3))
        dist, exact = dephasing_distribution(obs)
        assert exact and dist.kind == "uniform"
        assert abs(dist.period - 4 * math.pi) < 1e-12
        rho = random_density(3, 3)
        out, report = phase_average_channel(rho, obs, dist)
        assert report.residual < 1e-15
        np.testing.assert_allclose(out.matrix, dephase(rho, obs).matrix, atol=1e-12)

    def test_incommensurate_spectrum_is_approximate(self):
        obs = Observable([math.sqrt(2), 1.0, 0.0], build_basis("standard", 3))
        dist, exact = dephasing_distribution(obs)
        assert not exact and dist.kind == "gaussian"
        _, report = phase_average_channel(random_density(3, 0), obs, dist)
        # the smallest gap sqrt(2) - 1 survives best: exp(-(10)^2 / 2)
        assert abs(report.residual - math.exp(-50)) < 1e-30
        _, wide = phase_average_channel(random_density(3, 0), obs, dephasing_distribution(obs, sigma=10.0)[0])
        assert abs(wide.residual - math.exp(-50 * (math.sqrt(2) - 1) ** 2)) < 1e-15


class TestErgodicKernel:
    def test_same_state(self):
        assert abs(ergodic_kernel(PLUS, PLUS) - 1) < 1e-15

    def test_zero_plus(self):
        assert abs(ergodic_kernel(ZERO, PLUS) - 0.5) < 1e-15

    def test_seed9_quadrature(self):
        d = 6
        obs = integer_observable(d, 9)
        B = build_basis("haar_random", d, seed=10)
        a_label, b_label = obs.labels[0], B.labels[0]
        a = obs.eigenbasis.state(a_label)
        target = ergodic_kernel(a, B.state(b_label))
        uniform = PhaseDistribution.uniform()
        for bp in B.labels:
            kernel = lambda p: transform_kernel(phase_unitary(obs, p), a, b_label, bp, B)
            oracle = quad_average(kernel, 0, 2 * math.pi) / (2 * math.pi)
            assert abs(oracle - target) < 1e-9
            assert abs(averaged_transform_kernel(obs, uniform, a_label, b_label, bp, B) - target) < 1e-12


class TestPrepareState:
    def test_eigenstate(self):
        prep = prepare_state(ZERO.density(), eigendecompose(np.diag([1.0, -1.0])), 0)
        assert abs(prep.probability - 1) < 1e-15
        np.testing.assert_allclose(prep.state.matrix, [[1, 0], [0, 0]], atol=1e-15)

    def test_plus(self):
        prep = prepare_state(PLUS.density(), eigendecompose(np.diag([1.0, -1.0])), 0)
        assert abs(prep.probability - 0.5) < 1e-15
        np.testing.assert_allclose(prep.state.matrix, [[1, 0], [0, 0]], atol=1e-15)

    def test_fourier_selection_then_y(self, qubit):
        obs = Observable([1.0, -1.0], qubit["X"])
        prep = prepare_state(ZERO.density(), obs, "+")
        assert abs(prep.probability - 0.5) < 1e-15
        np.testing.assert_allclose(prep.state.born(qubit["Y"]), [0.5, 0.5], atol=1e-15)
        joint = prepared_joint(ZERO.density(), obs, qubit["Y"])
        np.testing.assert_allclose(joint.table, np.full((2, 2), 0.25), atol=1e-15)

    def test_zero_probability(self):
        with pytest.raises(ZeroProbabilityError):
            prepare_state(ZERO.density(), eigendecompose(np.diag([1.0, -1.0])), 1)

    @given(seed=seeds, d=st.integers(2, 6))
    def test_propagate_then_average(self, seed, d):
        rho = random_density(d, seed)
        obs = integer_observable(d, seed + 1)
        B = build_basis("haar_random", d, seed=seed + 2)
        j = kd_joint(rho, obs.eigenbasis, B)
        phis = 2 * math.pi * np.arange(2 * d + 1) / (2 * d + 1)
        averaged = np.mean([propagate_joint(j, phase_unitary(obs, p)).table for p in phis], axis=0)
        expected = prepared_joint(rho, obs, B).table
        E = obs.eigenbasis.columns
        brute = np.array(
            [[abs(np.vdot(B.columns[:, k], E[:, i])) ** 2 * rho.expectation(E[:, i]) for k in range(d)] for i in range(d)]
        )
        np.testing.assert_allclose(expected, brute, atol=1e-12)
        np.testing.assert_allclose(averaged, brute, atol=1e-10)
        np.testing.assert_allclose(ergodic_joint(rho, obs, B, PhaseDistribution.uniform()).table, brute, atol=1e-10)


def test_substreams_are_independent_and_reproducible():
    a = substream(1, "x", 0).random(4)
    np.testing.assert_array_equal(a, substream(1, "x", 0).random(4))
    assert not np.array_equal(a, substream(1, "x", 1).random(4))
    assert not np.array_equal(a, substream(1, "y", 0).random(4))
