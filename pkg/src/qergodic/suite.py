"""Identity suite: every invariant of the library, swept over dimensions and seeds.

Each invariant returns a deviation for one ``(dim, rng)`` case; the suite
reports the worst case per invariant against a fixed tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import causality as cz
from . import ergodic as eg
from . import hilbert as hb
from . import meter as mt
from . import quasiprob as qp
from .report import Check, close_check

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Invariant:
    name: str
    tolerance: float
    fn: Callable[[int, np.random.Generator], float]
    dims: str = "all"  # "all" or "qubit"


REGISTRY: list[Invariant] = []


def invariant(name: str, tolerance: float, dims: str = "all"):
    def deco(fn):
        REGISTRY.append(Invariant(name, tolerance, fn, dims))
        return fn

    return deco


def _haar(d, rng):
    return hb.build_basis("haar_random", d, seed=rng)


def _hermitian(d, rng):
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (z + z.conj().T)


def _integer_observable(d, rng):
    """Observable with a Haar eigenbasis and eigenvalues ``0..d-1``."""
    return hb.Observable(np.arange(d, dtype=float)[::-1], _haar(d, rng))


@invariant("hilbert.gram_orthonormality", 1e-12)
def _gram(d, rng):
    return max(_haar(d, rng).gram_error(), hb.build_basis("fourier", d).gram_error())


@invariant("hilbert.eigendecompose_roundtrip", 1e-10)
def _eig_roundtrip(d, rng):
    h = _hermitian(d, rng)
    obs = hb.eigendecompose(h)
    again = hb.eigendecompose(obs.matrix)
    return max(
        float(np.max(np.abs(obs.matrix - h))),
        float(np.max(np.abs(again.eigenvalues - obs.eigenvalues))),
        float(np.max(np.abs(again.eigenbasis.columns - obs.eigenbasis.columns))),
    )


@invariant("hilbert.phase_unitary_group_law", 1e-10)
def _group_law(d, rng):
    obs = hb.eigendecompose(_hermitian(d, rng))
    p1, p2 = rng.uniform(-5, 5, 2)
    lhs = (hb.phase_unitary(obs, p1) @ hb.phase_unitary(obs, p2)).matrix
    return float(np.max(np.abs(lhs - hb.phase_unitary(obs, p1 + p2).matrix)))


@invariant("quasiprob.marginals_born", 1e-10)
def _marginals(d, rng):
    rho = hb.random_density(d, rng)
    A, B = _haar(d, rng), _haar(d, rng)
    j = qp.kd_joint(rho, A, B)
    return max(
        float(np.max(np.abs(j.marginal_a() - rho.born(A)))),
        float(np.max(np.abs(j.marginal_b() - rho.born(B)))),
    )


@invariant("quasiprob.kd_linearity", 1e-10)
def _linearity(d, rng):
    r1, r2 = hb.random_density(d, rng), hb.random_density(d, rng)
    lam = rng.uniform()
    A, B = _haar(d, rng), _haar(d, rng)
    mix = hb.DensityOperator(lam * r1.matrix + (1 - lam) * r2.matrix)
    lhs = qp.kd_joint(mix, A, B).table
    rhs = lam * qp.kd_joint(r1, A, B).table + (1 - lam) * qp.kd_joint(r2, A, B).table
    return float(np.max(np.abs(lhs - rhs)))


@invariant("quasiprob.weak_conditional_normalization", 1e-10)
def _weak_norm(d, rng):
    a, b = hb.random_state(d, rng), hb.random_state(d, rng)
    return abs(qp.weak_conditional(a, b, _haar(d, rng)).total() - 1.0)


@invariant("quasiprob.predict_outcome_born", 1e-10)
def _predict(d, rng):
    rho = hb.random_density(d, rng)
    A, B, M = _haar(d, rng), _haar(d, rng), _haar(d, rng)
    p = qp.predict_outcome(qp.kd_joint(rho, A, B), M)
    return float(np.max(np.abs(p - rho.born(M))))


@invariant("quasiprob.predict_weak_vs_cancelled", 1e-9)
def _predict_weak(d, rng):
    rho = hb.random_density(d, rng)
    A, B, M = _haar(d, rng), _haar(d, rng), _haar(d, rng)
    j = qp.kd_joint(rho, A, B)
    return float(np.max(np.abs(qp.predict_outcome_weak(j, M) - qp.predict_outcome(j, M))))


@invariant("quasiprob.propagate_vs_rotated_kd", 1e-10)
def _propagate(d, rng):
    rho = hb.random_density(d, rng)
    A, B = _haar(d, rng), _haar(d, rng)
    U = hb.UnitaryMap(hb.haar_unitary(d, rng))
    lhs = qp.propagate_joint(qp.kd_joint(rho, A, B), U).table
    rhs = qp.kd_joint(rho, A, B.transformed(U.dagger)).table
    return float(np.max(np.abs(lhs - rhs)))


@invariant("quasiprob.propagate_kernel_vs_cancelled", 1e-9)
def _propagate_kernel(d, rng):
    rho = hb.random_density(d, rng)
    A, B = _haar(d, rng), _haar(d, rng)
    U = hb.UnitaryMap(hb.haar_unitary(d, rng))
    j = qp.kd_joint(rho, A, B)
    return float(np.max(np.abs(qp.propagate_joint_via_kernel(j, U).table - qp.propagate_joint(j, U).table)))


@invariant("ergodic.kernel_average_vs_overlap", 1e-9)
def _kernel_avg(d, rng):
    obs = _integer_observable(d, rng)
    B = _haar(d, rng)
    uni = eg.PhaseDistribution.uniform()
    worst = 0.0
    for a in obs.labels:
        for b in B.labels:
            target = eg.ergodic_kernel(obs.eigenbasis.state(a), B.state(b))
            for bp in B.labels:
                val = eg.averaged_transform_kernel(obs, uni, a, b, bp, B)
                worst = max(worst, abs(val - target))
    return worst


@invariant("ergodic.kernel_quadrature", 1e-9)
def _kernel_quad(d, rng):
    obs = _integer_observable(d, rng)
    B = _haar(d, rng)
    a = obs.labels[0]
    ket = obs.eigenbasis.state(a)
    # the kernel is a trigonometric polynomial of degree < d in phi
    phis = TWO_PI * np.arange(4 * d + 1) / (4 * d + 1)
    worst = 0.0
    for b in B.labels:
        target = eg.ergodic_kernel(ket, B.state(b))
        for bp in B.labels:
            vals = [qp.transform_kernel(hb.phase_unitary(obs, p), ket, b, bp, B) for p in phis]
            worst = max(worst, abs(np.mean(vals) - target))
    return worst


@invariant("ergodic.uniform_vs_dephase", 1e-12)
def _uniform_dephase(d, rng):
    rho = hb.random_density(d, rng)
    obs = _integer_observable(d, rng)
    out, _ = eg.phase_average_channel(rho, obs, eg.PhaseDistribution.uniform())
    return float(np.max(np.abs(out.matrix - eg.dephase(rho, obs).matrix)))


@invariant("ergodic.diagonal_invariance", 1e-12)
def _diag_invariant(d, rng):
    rho = hb.random_density(d, rng)
    obs = hb.eigendecompose(_hermitian(d, rng))
    worst = 0.0
    for dist in (
        eg.PhaseDistribution.gaussian(rng.uniform(0.1, 3)),
        eg.PhaseDistribution.uniform(rng.uniform(0.5, 7)),
        eg.PhaseDistribution.point(rng.uniform(-3, 3)),
    ):
        out, _ = eg.phase_average_channel(rho, obs, dist)
        before = np.diagonal(obs.to_eigenbasis(rho.matrix))
        after = np.diagonal(obs.to_eigenbasis(out.matrix))
        worst = max(worst, float(np.max(np.abs(before - after))))
    return worst


@invariant("ergodic.channel_validity", 1e-10)
def _validity(d, rng):
    rho = hb.random_density(d, rng)
    obs = hb.eigendecompose(_hermitian(d, rng))
    out, _ = eg.phase_average_channel(rho, obs, eg.PhaseDistribution.gaussian(rng.uniform(0.1, 3)))
    m = out.matrix
    return max(
        float(np.max(np.abs(m - m.conj().T))),
        abs(np.trace(m) - 1.0),
        max(0.0, -float(np.linalg.eigvalsh(m).min())),
    )


@invariant("ergodic.dephase_idempotent_convex", 1e-12)
def _dephase_props(d, rng):
    obs = hb.eigendecompose(_hermitian(d, rng))
    r1, r2 = hb.random_density(d, rng), hb.random_density(d, rng)
    lam = rng.uniform()
    once = eg.dephase(r1, obs)
    twice = eg.dephase(once, obs)
    mix = eg.dephase(hb.DensityOperator(lam * r1.matrix + (1 - lam) * r2.matrix), obs).matrix
    split = lam * once.matrix + (1 - lam) * eg.dephase(r2, obs).matrix
    return max(float(np.max(np.abs(once.matrix - twice.matrix))), float(np.max(np.abs(mix - split))))


@invariant("ergodic.prepared_joint", 1e-10)
def _prepared_joint(d, rng):
    rho = hb.random_density(d, rng)
    obs = _integer_observable(d, rng)
    B = _haar(d, rng)
    avg = eg.ergodic_joint(rho, obs, B, eg.PhaseDistribution.uniform()).table
    E = obs.eigenbasis.columns
    pop = np.real(np.diagonal(E.conj().T @ rho.matrix @ E))
    expected = (np.abs(B.columns.conj().T @ E) ** 2).T * pop[:, None]
    return max(
        float(np.max(np.abs(avg - expected))),
        float(np.max(np.abs(eg.prepared_joint(rho, obs, B).table - expected))),
    )


@invariant("meter.channel_equivalence", 1e-8, dims="qubit")
def _channel_equiv(d, rng):
    obs = hb.Observable([0.5, -0.5], _haar(2, rng))
    psi = hb.random_state(2, rng)
    worst = 0.0
    for kappa in (1.0, 5.0):
        meter = mt.MeterModel.auto(0.5, kappa, obs)
        reduced = mt.reduce_system(mt.interact(psi, meter, obs))
        analytic, _ = eg.phase_average_channel(psi.density(), obs, meter.phase_distribution())
        worst = max(worst, float(np.max(np.abs(reduced.matrix - analytic.matrix))))
    return worst


@invariant("meter.norm_and_population_conservation", 1e-12, dims="qubit")
def _norm(d, rng):
    obs = hb.Observable([0.5, -0.5], _haar(2, rng))
    psi = hb.random_state(2, rng)
    joint = mt.interact(psi, mt.MeterModel.auto(0.5, 5.0, obs), obs)
    pops = np.abs(obs.eigenbasis.columns.conj().T @ psi.amplitudes) ** 2
    return max(abs(joint.norm() - 1.0), float(np.max(np.abs(mt.reduce_system(joint).born(obs.eigenbasis) - pops))))


@invariant("meter.readout_normalization", 1e-12, dims="qubit")
def _readout_norm(d, rng):
    obs = hb.Observable([0.5, -0.5], hb.build_basis("standard", 2))
    psi = hb.random_state(2, rng)
    meter = mt.MeterModel.auto(0.5, rng.uniform(0.2, 6.0), obs)
    joint = mt.interact(psi, meter, obs)
    edges = np.sort(rng.uniform(-meter.half_width, meter.half_width, 3))
    edges = np.concatenate(([-meter.half_width], edges, [meter.half_width]))
    return abs(sum(b.probability for b in mt.readout(joint, edges)) - 1.0)


@invariant("meter.strong_fidelity_bound", 1e-10, dims="qubit")
def _fidelity_bound(d, rng):
    obs = hb.Observable([0.5, -0.5], hb.build_basis("standard", 2))
    psi = hb.PureState(np.array([1.0, np.exp(1j * rng.uniform(0, TWO_PI))]) / math.sqrt(2))
    sigma_x, kappa = 0.5, rng.uniform(5.0, 8.0)
    meter = mt.MeterModel.auto(sigma_x, kappa, obs)
    bins = mt.readout(mt.interact(psi, meter, obs), mt.default_bin_edges(meter, obs))
    bound = 1.0 - math.exp(-((kappa * 1.0) ** 2) / (8 * sigma_x**2))
    worst = 0.0
    for label in obs.labels:
        rho = bins[mt.branch_bin(meter, obs, label)].state
        worst = max(worst, bound - rho.fidelity(obs.eigenbasis.state(label)))
    return worst


@invariant("causality.prep_joint_vs_kd", 1e-12)
def _prep_joint(d, rng):
    M, B = _haar(d, rng), _haar(d, rng)
    m = M.labels[int(rng.integers(d))]
    return float(np.max(np.abs(cz.prep_joint(m, M, B).table - qp.kd_joint(M.state(m).density(), M, B).table)))


@invariant("causality.rerepresent_vs_kd", 1e-10)
def _rerepresent(d, rng):
    M, A, B = _haar(d, rng), _haar(d, rng), _haar(d, rng)
    m = M.labels[int(rng.integers(d))]
    lhs = cz.rerepresent(cz.prep_joint(m, M, B), A).table
    rho = hb.random_density(d, rng)
    general = cz.rerepresent(qp.kd_joint(rho, M, B), A).table
    return max(
        float(np.max(np.abs(lhs - qp.kd_joint(M.state(m).density(), A, B).table))),
        float(np.max(np.abs(general - qp.kd_joint(rho, A, B).table))),
    )


@invariant("causality.chain_delta", 1e-9)
def _chain(d, rng):
    M, A, B = _haar(d, rng), _haar(d, rng), _haar(d, rng)
    worst = 0.0
    for k, m in enumerate(M.labels):
        worst = max(worst, float(np.max(np.abs(cz.prep_measure_chain(m, M, A, B) - np.eye(d)[k]))))
    return worst


@invariant("causality.chain_b_invariance", 1e-9)
def _chain_b(d, rng):
    M, A = _haar(d, rng), _haar(d, rng)
    m = M.labels[0]
    outs = np.array([cz.prep_measure_chain(m, M, A, _haar(d, rng)) for _ in range(5)])
    return float(np.max(outs.max(axis=0) - outs.min(axis=0)))


@invariant("causality.determinism_identity", 1e-9)
def _determinism(d, rng):
    M, A = _haar(d, rng), _haar(d, rng)
    return cz.determinism_matrix(M, A, hb.random_state(d, rng)).deviation()


@invariant("causality.action_vector_duality", 1e-10)
def _duality(d, rng):
    a, b = hb.random_state(d, rng), hb.random_state(d, rng)
    M = _haar(d, rng)
    sched = cz.ActionSchedule.from_values(M, rng.uniform(-math.pi, math.pi, d))
    res = cz.transformed_probability(a, b, M, sched)
    U = np.diag(sched.phases(M))
    direct = abs(np.vdot(b.amplitudes, M.columns @ U @ M.columns.conj().T @ a.amplitudes)) ** 2
    return max(abs(res.p_vector - res.p_action), abs(res.p_vector - direct))


@invariant("causality.reconstruction_roundtrip", 1e-10)
def _roundtrip(d, rng):
    a, M = hb.random_state(d, rng), _haar(d, rng)
    back = cz.reconstruct_state(cz.action_phase_representation(a, M), M)
    return 1.0 - back.fidelity(a)


@invariant("causality.cross_basis_prediction", 1e-10)
def _cross_basis(d, rng):
    rho = hb.random_density(d, rng)
    M = _haar(d, rng)
    preds = [qp.predict_outcome(qp.kd_joint(rho, _haar(d, rng), _haar(d, rng)), M) for _ in range(3)]
    return float(max(np.max(np.abs(p - preds[0])) for p in preds))


def _mc_check(seed: int, dims, n: int, tol_scale: float) -> Check:
    """Monte Carlo phase averaging against the exact channel, trace distance <= 5/sqrt(n)."""
    worst = 0.0
    for d in dims:
        rng = eg.substream(seed, "suite.montecarlo", d)
        rho, obs = hb.random_density(d, rng), _integer_observable(d, rng)
        uni = eg.PhaseDistribution.uniform()
        exact, _ = eg.phase_average_channel(rho, obs, uni)
        sampled, _ = eg.phase_average_channel(rho, obs, uni, mode="montecarlo", n=n, seed=seed)
        worst = max(worst, exact.trace_distance(sampled))
    return close_check("ergodic.montecarlo_trace_distance", worst, 0.0, tol_scale * 5.0 / math.sqrt(n))


def run_identity_suite(
    seed: int = 42,
    dim_max: int = 8,
    seeds: int = 5,
    tol_scale: float = 1.0,
    mc_samples: int = 10_000,
    overrides: dict | None = None,
) -> list[Check]:
    overrides = overrides or {}
    dims = list(range(2, dim_max + 1))
    checks = []
    for inv in REGISTRY:
        case_dims = [2] if inv.dims == "qubit" else dims
        worst = 0.0
        for d in case_dims:
            for s in range(seeds):
                rng = eg.substream(seed, inv.name, d, s)
                worst = max(worst, float(inv.fn(d, rng)))
        tol = overrides.get(inv.name, inv.tolerance * tol_scale)
        checks.append(close_check(inv.name, worst, 0.0, tol))
    mc = _mc_check(seed, dims, mc_samples, tol_scale)
    if mc.name in overrides:
        mc = close_check(mc.name, mc.value, 0.0, overrides[mc.name])
    checks.append(mc)
    return sorted(checks, key=lambda c: c.name)
