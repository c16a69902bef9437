import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qergodic.errors import AliasingError, InvalidBinningError, ZeroProbabilityError
from qergodic.ergodic import phase_average_channel
from qergodic.hilbert import Observable, PureState, build_basis
from qergodic.meter import (
    MeterModel,
    branch_bin,
    default_bin_edges,
    interact,
    prepare_by_measurement,
    readout,
    readout_json,
    reduce_system,
)

S = 1 / math.sqrt(2)
ZERO = PureState([1, 0])
PLUS = PureState([S, S])
SZ = Observable([0.5, -0.5], build_basis("standard", 2))


def meter(kappa, sigma_x=0.5, n=512):
    return MeterModel.auto(sigma_x, kappa, SZ, n=n)


def gaussian_on_grid(x, center, sigma_x):
    g = np.exp(-((x - center) ** 2) / (4 * sigma_x**2))
    return g / np.linalg.norm(g)


class TestMeterModel:
    def test_defaults(self):
        m = meter(5.0)
        assert m.n == 512 and m.half_width == 12.0
        assert abs(np.linalg.norm(m.wavefunction) - 1) < 1e-14
        assert m.sigma_p == 1.0

    def test_auto_grid_refines_large_domains(self):
        m = MeterModel.auto(0.5, 20.0, Observable(np.arange(32) - 15.5, build_basis("standard", 32)))
        assert m.dx <= 0.25 and m.n & (m.n - 1) == 0

    def test_auto_half_width_margin(self):
        # small coupling: 12 sigma_x margin dominates the coverage bound
        assert MeterModel.auto(1.0, 0.25, SZ).half_width == pytest.approx(12.125)

    def test_aliasing(self):
        with pytest.raises(AliasingError):
            interact(PLUS, MeterModel(512, 3.0, 0.5, 5.0), SZ)


class TestInteract:
    def test_zero_coupling_is_product(self):
        m = meter(0.0)
        joint = interact(PLUS, m, SZ)
        np.testing.assert_allclose(joint.amplitudes, np.outer(PLUS.amplitudes, m.wavefunction), atol=1e-14)

    def test_eigenstate_recenters_meter(self):
        m = meter(5.0)
        joint = interact(ZERO, m, SZ)
        np.testing.assert_allclose(joint.amplitudes[1], 0, atol=1e-15)
        np.testing.assert_allclose(joint.amplitudes[0], gaussian_on_grid(m.grid, 2.5, 0.5), atol=1e-12)

    def test_branch_centers(self):
        m = MeterModel.auto(0.5, 5.0, SZ)
        joint = interact(PLUS, m, SZ)
        for row, center in zip(joint.amplitudes, (2.5, -2.5)):
            w = np.abs(row) ** 2
            assert abs(np.sum(w * m.grid) / np.sum(w) - center) < 1e-10

    @given(seed=st.integers(0, 2**32 - 1), kappa=st.floats(0.0, 6.0))
    def test_norm_and_populations_conserved(self, seed, kappa):
        rng = np.random.default_rng(seed)
        psi = PureState.normalized(rng.standard_normal(2) + 1j * rng.standard_normal(2))
        obs = Observable([0.5, -0.5], build_basis("haar_random", 2, seed=rng))
        joint = interact(psi, MeterModel.auto(0.5, kappa, obs), obs)
        assert abs(joint.norm() - 1) < 1e-12
        before = np.abs(obs.eigenbasis.columns.conj().T @ psi.amplitudes) ** 2
        np.testing.assert_allclose(reduce_system(joint).born(obs.eigenbasis), before, atol=1e-12)


class TestReduceSystem:
    def test_product_gives_pure_state(self):
        rho = reduce_system(interact(PLUS, meter(0.0), SZ))
        np.testing.assert_allclose(rho.matrix, PLUS.density().matrix, atol=1e-14)

    @pytest.mark.parametrize(
        "kappa, expected",
        [(5.0, 1.8633265860393355e-06), (1.0, 0.30326532985631671)],
    )
    def test_gaussian_damping(self, kappa, expected):
        # 0.5 * exp(-kappa^2 sigma_p^2 gap^2 / 2), sigma_p = 1
        rho = reduce_system(interact(PLUS, meter(kappa), SZ))
        assert abs(abs(rho.matrix[0, 1]) - expected) < 1e-13

    @given(seed=st.integers(0, 2**32 - 1), kappa=st.floats(0.0, 6.0), sigma_x=st.floats(0.3, 1.0))
    def test_channel_equivalence(self, seed, kappa, sigma_x):
        rng = np.random.default_rng(seed)
        psi = PureState.normalized(rng.standard_normal(3) + 1j * rng.standard_normal(3))
        obs = Observable([1.0, 0.2, -0.6], build_basis("haar_random", 3, seed=rng))
        m = MeterModel.auto(sigma_x, kappa, obs)
        reduced = reduce_system(interact(psi, m, obs)).matrix
        continuum, _ = phase_average_channel(psi.density(), obs, m.phase_distribution())
        grid, _ = phase_average_channel(psi.density(), obs, m.phase_distribution(exact=True))
        assert np.max(np.abs(reduced - continuum.matrix)) < 1e-8
        assert np.max(np.abs(reduced - grid.matrix)) < 1e-12


class TestReadout:
    def test_single_bin(self):
        m = meter(5.0)
        joint = interact(PLUS, m, SZ)
        (only,) = readout(joint, [-m.half_width, m.half_width])
        assert abs(only.probability - 1) < 1e-12
        np.testing.assert_allclose(only.state.matrix, reduce_system(joint).matrix, atol=1e-12)

    def test_strong_midpoint_split(self):
        m = meter(5.0)
        left, right = readout(interact(PLUS, m, SZ), [-m.half_width, 0.0, m.half_width])
        assert abs(left.probability - 0.5) < 1e-6 and abs(right.probability - 0.5) < 1e-6
        assert right.state.fidelity(ZERO) >= 0.999

    def test_weak_midpoint_split(self):
        m = meter(0.5)
        bins = readout(interact(PLUS, m, SZ), [-m.half_width, 0.0, m.half_width])
        for b, label in zip(bins, (1, 0)):
            assert b.state.purity() < 0.999
            assert b.state.fidelity(SZ.eigenbasis.state(label)) < 0.9

    @pytest.mark.parametrize("edges", [[0.0, -1.0, 20.0], [-20.0, 1.0, 1.0, 20.0], [-1.0, 1.0], [5.0]])
    def test_invalid_edges(self, edges):
        with pytest.raises(InvalidBinningError):
            readout(interact(PLUS, meter(5.0), SZ), edges)

    @given(seed=st.integers(0, 2**32 - 1), cuts=st.lists(st.floats(-11.0, 11.0), min_size=0, max_size=5, unique=True))
    def test_probabilities_sum_to_one(self, seed, cuts):
        rng = np.random.default_rng(seed)
        psi = PureState.normalized(rng.standard_normal(2) + 1j * rng.standard_normal(2))
        m = meter(5.0)
        bins = readout(interact(psi, m, SZ), [-12.0, *sorted(cuts), 12.0])
        probs = [b.probability for b in bins]
        assert min(probs) >= 0 and abs(sum(probs) - 1) < 1e-12

    def test_json(self):
        m = meter(5.0)
        bins = readout(interact(PLUS, m, SZ), default_bin_edges(m, SZ))
        data = json.loads(readout_json(bins))
        assert len(data["bins"]) == 2
        assert data["bins"][1]["state"][0][0][0] == pytest.approx(1.0, abs=1e-6)

    def test_default_bins(self):
        m = meter(5.0)
        np.testing.assert_allclose(default_bin_edges(m, SZ), [-12.0, 0.0, 12.0])
        assert branch_bin(m, SZ, 0) == 1 and branch_bin(m, SZ, 1) == 0


class TestPrepareByMeasurement:
    def test_eigenstate_input(self):
        prep = prepare_by_measurement(ZERO, SZ, meter(5.0), 0)
        assert abs(prep.probability - 1) < 1e-6
        assert prep.state.fidelity(ZERO) > 1 - 1e-12
        assert prep.strong and prep.warning is None

    def test_plus_input(self):
        prep = prepare_by_measurement(PLUS, SZ, meter(5.0), 0)
        assert abs(prep.probability - 0.5) < 1e-3
        np.testing.assert_allclose(prep.conditional.born(build_basis("fourier", 2)), [0.5, 0.5], atol=1e-3)
        np.testing.assert_allclose(prep.state.density().born(build_basis("fourier", 2)), [0.5, 0.5], atol=1e-3)

    def test_unbalanced_input(self):
        psi = PureState([math.sqrt(0.8), math.sqrt(0.2)])
        prep = prepare_by_measurement(psi, SZ, meter(5.0), 1)
        assert abs(prep.probability - 0.2) < 1e-3

    def test_weak_regime_warns(self):
        with pytest.warns(RuntimeWarning, match="weak coupling"):
            prep = prepare_by_measurement(PLUS, SZ, meter(0.5), 0)
        assert not prep.strong and prep.fidelity < 0.9

    def test_zero_weight_branch(self):
        with pytest.raises(ZeroProbabilityError):
            prepare_by_measurement(ZERO, SZ, meter(20.0), 1)

    def test_custom_edges(self):
        m = meter(5.0)
        prep = prepare_by_measurement(PLUS, SZ, m, 1, bin_edges=[-12.0, 0.0, 12.0])
        assert abs(prep.probability - 0.5) < 1e-3 and prep.fidelity > 0.999
