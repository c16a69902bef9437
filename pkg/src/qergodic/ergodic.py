"""Randomized phase evolution, dephasing and state preparation by selection.

A state evolving under ``exp(-i phi A)`` with a random phase ``phi`` ends up
with each eigenbasis element ``(a, a')`` multiplied by the characteristic
function of the phase distribution at the gap ``A_a - A_a'``. When that
function vanishes at every nonzero gap, the average is complete dephasing.
"""

from __future__ import annotations

import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce

import numpy as np

from .errors import (
    EmptyEnsembleError,
    OrthogonalConditioningError,
    ShapeError,
    ZeroProbabilityError,
)
from .hilbert import TOL_LIN, BasisSet, DensityOperator, Label, Observable, PureState
from .quasiprob import TOL_OVERLAP, ComplexJointDistribution, _require_dims

TWO_PI = 2.0 * math.pi
MC_CHUNK = 4096


def substream(seed: int, name: str, *indices: int) -> np.random.Generator:
    """Counter-based generator for the named substream ``(seed, name, *indices)``."""
    key = np.random.SeedSequence([int(seed), zlib.crc32(name.encode()), *map(int, indices)])
    return np.random.Generator(np.random.Philox(key))


@dataclass(frozen=True)
class PhaseDistribution:
    """Distribution of the random phase ``phi`` (radians).

    kinds: ``uniform`` on ``[0, period)``, zero-mean ``gaussian`` with width
    ``sigma``, ``point`` mass at ``phi``, and ``discrete`` weights on a set of
    phases.
    """

    kind: str
    period: float = TWO_PI
    sigma: float = 0.0
    phi: float = 0.0
    phases: tuple = ()
    weights: tuple = ()

    def __post_init__(self):
        if self.kind == "uniform" and not self.period > 0:
            raise ValueError("uniform period must be positive")
        elif self.kind == "gaussian" and not self.sigma >= 0:
            raise ValueError("gaussian sigma must be non-negative")
        elif self.kind == "discrete":
            if len(self.phases) != len(self.weights) or not self.phases:
                raise ValueError("discrete distribution needs matching phases and weights")
            w = np.asarray(self.weights, dtype=float)
            if np.any(w < 0) or not math.isclose(w.sum(), 1.0, abs_tol=1e-12):
                raise ValueError("discrete weights must be non-negative and sum to 1")
        elif self.kind not in ("uniform", "gaussian", "point", "discrete"):
            raise ValueError(f"unknown phase distribution {self.kind!r}")

    @classmethod
    def uniform(cls, period: float = TWO_PI) -> "PhaseDistribution":
        return cls("uniform", period=float(period))

    @classmethod
    def gaussian(cls, sigma: float) -> "PhaseDistribution":
        return cls("gaussian", sigma=float(sigma))

    @classmethod
    def point(cls, phi: float) -> "PhaseDistribution":
        return cls("point", phi=float(phi))

    @classmethod
    def discrete(cls, phases, weights) -> "PhaseDistribution":
        w = np.asarray(weights, dtype=float)
        w = w / w.sum()
        return cls("discrete", phases=tuple(map(float, phases)), weights=tuple(map(float, w)))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "uniform":
            return rng.uniform(0.0, self.period, n)
        if self.kind == "gaussian":
            return rng.normal(0.0, self.sigma, n)
        if self.kind == "point":
            return np.full(n, self.phi)
        return rng.choice(np.asarray(self.phases), size=n, p=np.asarray(self.weights))

    def to_dict(self) -> dict:
        if self.kind == "uniform":
            return {"kind": "uniform", "period": self.period}
        if self.kind == "gaussian":
            return {"kind": "gaussian", "sigma": self.sigma}
        if self.kind == "point":
            return {"kind": "point", "phi": self.phi}
        return {"kind": "discrete", "n_phases": len(self.phases)}


def characteristic_function(dist: PhaseDistribution, gap) -> complex | np.ndarray:
    """``E[exp(-i phi gap)]``; vectorized over ``gap``."""
    g = np.asarray(gap, dtype=float)
    if dist.kind == "uniform":
        x = dist.period * g
        with np.errstate(invalid="ignore", divide="ignore"):
            val = np.where(x == 0, 1.0 + 0j, (np.exp(-1j * x) - 1.0) / (-1j * np.where(x == 0, 1.0, x)))
        # exact zeros at whole turns, where the closed form leaves roundoff
        turns = x / TWO_PI
        val = np.where((x != 0) & (np.abs(turns - np.round(turns)) < 1e-12), 0j, val)
    elif dist.kind == "gaussian":
        val = np.exp(-0.5 * (dist.sigma * g) ** 2) + 0j
    elif dist.kind == "point":
        val = np.exp(-1j * dist.phi * g)
    else:
        phases = np.asarray(dist.phases)
        w = np.asarray(dist.weights)
        val = np.tensordot(np.exp(-1j * np.multiply.outer(g, phases)), w, axes=([-1], [0]))
    return complex(val) if np.ndim(val) == 0 else val


@dataclass(frozen=True)
class DephasingReport:
    """Damping factor applied to eigenbasis coherences, one entry per distinct gap."""

    labels: tuple
    gaps: tuple
    factors: tuple

    def factor(self, gap: float, atol: float = 1e-9) -> complex:
        for g, f in zip(self.gaps, self.factors):
            if abs(g - gap) <= atol:
                return f
        raise KeyError(gap)

    @property
    def residual(self) -> float:
        """Largest |factor| at a nonzero gap; 0 means complete dephasing."""
        vals = [abs(f) for g, f in zip(self.gaps, self.factors) if abs(g) > TOL_LIN]
        return max(vals, default=0.0)

    def to_dict(self) -> list:
        return [{"gap": g, "factor": f} for g, f in zip(self.gaps, self.factors)]


def _distinct_gaps(observable: Observable) -> np.ndarray:
    gaps = np.round(observable.gaps().ravel(), 12)
    return np.unique(np.abs(gaps))


def _mc_chunk(rho_m, cols, vals, dist, seed, index, size):
    rng = substream(seed, "ergodic.montecarlo", index)
    phis = dist.sample(size, rng)
    # batch of U = V diag(exp(-i phi A)) V^dag
    us = np.einsum("ik,nk,jk->nij", cols, np.exp(-1j * np.outer(phis, vals)), cols.conj())
    rotated = us @ rho_m @ np.conj(np.swapaxes(us, 1, 2))
    return rotated.sum(axis=0), phis


def phase_average_channel(
    rho: DensityOperator,
    observable: Observable,
    dist: PhaseDistribution,
    mode: str = "exact",
    n: int | None = None,
    seed: int = 0,
    workers: int = 1,
) -> tuple[DensityOperator, DephasingReport]:
    """Average ``U rho U^dag`` over ``U = exp(-i phi A)`` with ``phi ~ dist``.

    ``mode="exact"`` multiplies eigenbasis elements by the characteristic
    function. ``mode="montecarlo"`` samples ``n`` phases in chunks of
    ``MC_CHUNK``; chunk ``k`` always draws from substream ``(seed, k)``, so
    the result does not depend on ``workers``.
    """
    _require_dims(rho, observable)
    gaps = _distinct_gaps(observable)
    if mode == "exact":
        damping = characteristic_function(dist, observable.gaps())
        out = observable.from_eigenbasis(observable.to_eigenbasis(rho.matrix) * damping)
        factors = tuple(complex(characteristic_function(dist, g)) for g in gaps)
    elif mode == "montecarlo":
        if n is None or n <= 0:
            raise EmptyEnsembleError("Monte Carlo averaging needs n >= 1 samples")
        cols, vals = observable.eigenbasis.columns, observable.eigenvalues
        sizes = [min(MC_CHUNK, n - start) for start in range(0, n, MC_CHUNK)]
        jobs = [(rho.matrix, cols, vals, dist, seed, k, s) for k, s in enumerate(sizes)]
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                parts = list(pool.map(lambda job: _mc_chunk(*job), jobs))
        else:
            parts = [_mc_chunk(*job) for job in jobs]
        out = np.stack([p[0] for p in parts]).sum(axis=0) / n
        phis = np.concatenate([p[1] for p in parts])
        factors = tuple(complex(np.exp(-1j * g * phis).mean()) for g in gaps)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    out = 0.5 * (out + out.conj().T)
    report = DephasingReport(observable.labels, tuple(float(g) for g in gaps), factors)
    return DensityOperator(out), report


def dephase(rho: DensityOperator, observable: Observable) -> DensityOperator:
    """Drop every off-diagonal element of ``rho`` in the eigenbasis of ``observable``."""
    _require_dims(rho, observable)
    diag = np.real(np.diagonal(observable.to_eigenbasis(rho.matrix)))
    return DensityOperator(observable.from_eigenbasis(np.diag(diag)))


def dephasing_distribution(observable: Observable, max_denominator: int = 1000, sigma: float | None = None):
    """A phase distribution that removes all coherences of ``observable``, if one exists.

    For a commensurate spectrum (all gaps integer multiples of some ``g``)
    this is uniform over one full period ``2 pi / g`` and is exact. Otherwise
    a Gaussian is returned, by default of width ``10 / min gap`` (residual
    damping ``exp(-50)``); its :class:`DephasingReport` shows what coherence
    survives. Returns ``(dist, exact)``.
    """
    gaps = _distinct_gaps(observable)
    gaps = gaps[gaps > TOL_LIN]
    if gaps.size == 0:
        return PhaseDistribution.point(0.0), True
    base = gaps.min()
    ratios = [Fraction(float(g / base)).limit_denominator(max_denominator) for g in gaps]
    if all(abs(float(r) - g / base) < 1e-9 for r, g in zip(ratios, gaps)):
        lcm = reduce(lambda x, y: x * y // math.gcd(x, y), (r.denominator for r in ratios), 1)
        unit = base / lcm
        return PhaseDistribution.uniform(TWO_PI / unit), True
    return PhaseDistribution.gaussian(10.0 / base if sigma is None else sigma), False


def ergodic_kernel(a: PureState, b: PureState) -> float:
    """Phase-averaged transformation kernel ``|<b|a>|^2``; independent of ``b'``."""
    _require_dims(a, b)
    return abs(np.vdot(b.amplitudes, a.amplitudes)) ** 2


def averaged_transform_kernel(
    observable: Observable,
    dist: PhaseDistribution,
    a_label: Label,
    b_label: Label,
    bprime_label: Label,
    basis_b: BasisSet,
) -> complex:
    """Phase average of the spectral-sum transformation kernel.

    Each term of the sum picks up the characteristic function at its gap.
    """
    _require_dims(observable, basis_b)
    E = observable.eigenbasis.columns
    k = observable.eigenbasis.index(a_label)
    b, bp, ket_a = basis_b.vector(b_label), basis_b.vector(bprime_label), E[:, k]
    denom = np.vdot(bp, ket_a)
    if abs(denom) <= TOL_OVERLAP:
        raise OrthogonalConditioningError(f"|<b'|a>| = {abs(denom):.3g}; kernel undefined")
    chi = characteristic_function(dist, observable.eigenvalues[k] - observable.eigenvalues)
    terms = (bp.conj() @ E) * (E.conj().T @ b) * chi
    return complex(np.vdot(b, ket_a) / denom * terms.sum())


def ergodic_joint(
    rho: DensityOperator,
    observable: Observable,
    basis_b: BasisSet,
    dist: PhaseDistribution,
) -> ComplexJointDistribution:
    """Phase average of ``rho(a, U(b))`` with ``a`` running over the eigenbasis of ``observable``.

    ``<b|a> sum_a' <a|rho|a'><a'|b> chi(A_a - A_a')``; for complete
    dephasing this is ``P(b|a) <a|rho|a>``.
    """
    _require_dims(rho, observable, basis_b)
    E, B = observable.eigenbasis.columns, basis_b.columns
    chi = characteristic_function(dist, observable.gaps())  # [a, a']
    a_rho_ap = E.conj().T @ rho.matrix @ E
    ap_b = E.conj().T @ B
    b_a = B.conj().T @ E
    table = b_a.T * ((a_rho_ap * chi) @ ap_b)
    avg = observable.from_eigenbasis(a_rho_ap * chi)
    return ComplexJointDistribution(observable.eigenbasis, basis_b, table, DensityOperator(0.5 * (avg + avg.conj().T)))


@dataclass(frozen=True)
class Preparation:
    probability: float
    state: DensityOperator
    label: Label = field(default=None)


def prepare_state(rho_in: DensityOperator, observable: Observable, outcome_label: Label) -> Preparation:
    """Randomize the dynamics generated by ``observable``, then keep outcome ``outcome_label``.

    Returns the selection probability ``<a|rho|a>`` and the prepared state ``|a><a|``.
    """
    _require_dims(rho_in, observable)
    ket = observable.eigenbasis.vector(outcome_label)
    p = rho_in.expectation(ket)
    if p < TOL_LIN:
        raise ZeroProbabilityError(f"outcome {outcome_label!r} has probability {p:.3g}")
    return Preparation(p, DensityOperator(np.outer(ket, ket.conj())), outcome_label)


def prepared_joint(rho_in: DensityOperator, observable: Observable, basis_b: BasisSet) -> ComplexJointDistribution:
    """Joint table after ergodic randomization: ``P(b|a) <a|rho|a>``."""
    _require_dims(rho_in, observable, basis_b)
    E, B = observable.eigenbasis.columns, basis_b.columns
    p_b_a = np.abs(B.conj().T @ E).T ** 2  # [a, b]
    pop = np.real(np.einsum("ia,ij,ja->a", E.conj(), rho_in.matrix, E))
    if np.any(pop < -TOL_LIN):
        raise ShapeError("negative population")
    return ComplexJointDistribution(observable.eigenbasis, basis_b, p_b_a * pop[:, None], dephase(rho_in, observable))
