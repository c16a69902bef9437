"""Weak-value identities linking preparation, transformation and measurement.

Conditional probabilities here are weak values ``P(m|a,b) = <b|m><m|a>/<b|a>``.
Sums that multiply such a weak value by a weight carrying the same
vanishing overlap use the convention ``0 * undefined = 0``: terms whose
conditioning overlap is below ``TOL_OVERLAP`` are skipped when their weight
is zero, and raise when it is not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import (
    DegenerateInputError,
    LabelError,
    OrthogonalConditioningError,
    OrthogonalReferenceError,
    ShapeError,
)
from .hilbert import TOL_LIN, BasisSet, DensityOperator, Label, PureState
from .quasiprob import (
    TOL_IM,
    TOL_OVERLAP,
    ComplexConditional,
    ComplexJointDistribution,
    _require_dims,
    weak_conditional,
)
from .serialize import dumps


@dataclass(frozen=True)
class ActionSchedule:
    """Action ``S(m)`` in units of hbar for each label of a basis."""

    actions: Mapping

    def __post_init__(self):
        acts = dict(self.actions)
        for k, v in acts.items():
            if not math.isfinite(float(v)):
                raise ValueError(f"action for {k!r} is not finite")
        object.__setattr__(self, "actions", acts)

    @classmethod
    def from_values(cls, basis: BasisSet, values) -> "ActionSchedule":
        values = list(values)
        if len(values) != basis.dim:
            raise ShapeError("one action per basis label is required")
        return cls(dict(zip(basis.labels, map(float, values))))

    def phases(self, basis: BasisSet) -> np.ndarray:
        """``exp(-i S(m))`` in basis order."""
        missing = [m for m in basis.labels if m not in self.actions]
        if missing:
            raise LabelError(f"no action given for labels {missing!r}")
        return np.exp(-1j * np.array([float(self.actions[m]) for m in basis.labels]))


@dataclass(frozen=True)
class DeterminismMatrix:
    basis_m: BasisSet
    entries: np.ndarray

    def deviation(self) -> float:
        return float(np.max(np.abs(self.entries - np.eye(self.basis_m.dim))))

    def to_dict(self) -> dict:
        return {"labels": [str(x) for x in self.basis_m.labels], "entries": self.entries}

    def to_json(self) -> str:
        return dumps(self)


def _weak_tensor(basis_m: BasisSet, basis_a: BasisSet, basis_b: BasisSet):
    """``W[m, a, b] = <b|m><m|a>`` together with ``<b|a>`` indexed ``[a, b]``."""
    M, A, B = basis_m.columns, basis_a.columns, basis_b.columns
    m_a = M.conj().T @ A  # [m, a]
    b_m = B.conj().T @ M  # [b, m]
    numer = m_a[:, :, None] * b_m.T[:, None, :]
    return numer, (B.conj().T @ A).T


def _conditioned_sum(numer, overlap, weight, what: str):
    """``sum over (a, b) of numer[..., a, b] / overlap[a, b] * weight[a, b]`` with zero-weight skipping."""
    small = np.abs(overlap) <= TOL_OVERLAP
    if np.any(np.abs(weight[small]) > TOL_LIN):
        raise OrthogonalConditioningError(f"{what}: weight on an orthogonal conditioning pair")
    safe = np.where(small, 1.0, overlap)
    terms = np.where(small, 0.0, numer / safe * weight)
    return terms


def prep_joint(mprime_label: Label, basis_m: BasisSet, basis_b: BasisSet) -> ComplexJointDistribution:
    """Joint table of the prepared state ``|m'>``: ``rho(m, b|m') = P(b|m) delta(m, m')``."""
    _require_dims(basis_m, basis_b)
    k = basis_m.index(mprime_label)
    table = np.zeros((basis_m.dim, basis_b.dim), dtype=complex)
    table[k] = np.abs(basis_b.columns.conj().T @ basis_m.columns[:, k]) ** 2
    ket = basis_m.columns[:, k]
    return ComplexJointDistribution(basis_m, basis_b, table, DensityOperator(np.outer(ket, ket.conj())))


def rerepresent(joint: ComplexJointDistribution, basis_a: BasisSet) -> ComplexJointDistribution:
    """Swap the first basis of ``joint`` for ``basis_a``: ``rho(a, b) = sum_m P(a|m,b) rho(m, b)``."""
    _require_dims(joint, basis_a)
    numer, overlap = _weak_tensor(basis_a, joint.basis_a, joint.basis_b)  # [a, m, b], [m, b]
    terms = _conditioned_sum(numer, overlap[None], joint.table[None], "rerepresent")
    return ComplexJointDistribution(basis_a, joint.basis_b, terms.sum(axis=1), joint.rho)


def prep_measure_chain(
    mprime_label: Label, basis_m: BasisSet, basis_a: BasisSet, basis_b: BasisSet
) -> np.ndarray:
    """``P(m|m') = sum_ab P(m|a,b) P(a|m',b) P(b|m')`` as real probabilities over ``basis_m``."""
    joint = rerepresent(prep_joint(mprime_label, basis_m, basis_b), basis_a)
    numer, overlap = _weak_tensor(basis_m, basis_a, basis_b)  # [m, a, b], [a, b]
    p = _conditioned_sum(numer, overlap[None], joint.table[None], "prep_measure_chain").sum(axis=(1, 2))
    if np.max(np.abs(p.imag)) > TOL_IM:
        raise ArithmeticError(f"chain probabilities have imaginary part {np.max(np.abs(p.imag)):.3g}")
    return p.real


def determinism_matrix(basis_m: BasisSet, basis_a: BasisSet, b: PureState) -> DeterminismMatrix:
    """``D[m, m'] = sum_a P(m|a,b) P(a|m',b)``; the identity when the relation is deterministic."""
    _require_dims(basis_m, basis_a, b)
    M, A = basis_m.columns, basis_a.columns
    b_m = b.amplitudes.conj() @ M
    b_a = b.amplitudes.conj() @ A
    if np.min(np.abs(b_m)) <= TOL_OVERLAP or np.min(np.abs(b_a)) <= TOL_OVERLAP:
        raise OrthogonalConditioningError("b is orthogonal to a basis state of M or A")
    m_a = M.conj().T @ A  # [m, a]
    p_m_ab = b_m[:, None] * m_a / b_a[None, :]  # P(m|a,b) [m, a]
    p_a_mb = b_a[:, None] * m_a.conj().T / b_m[None, :]  # P(a|m',b) [a, m']
    return DeterminismMatrix(basis_m, p_m_ab @ p_a_mb)


@dataclass(frozen=True)
class TransformedProbability:
    p_vector: float
    p_action: float


def transformed_probability(
    a: PureState, b: PureState, basis_m: BasisSet, schedule: ActionSchedule
) -> TransformedProbability:
    """Probability of ``b`` after the phases ``exp(-i S(m))``, computed two ways.

    ``p_vector`` sums amplitudes ``<b|m><m|a>``; ``p_action`` uses
    ``P(b|a) |sum_m P(m|a,b) exp(-i S(m))|^2``. When ``a`` and ``b`` are
    orthogonal only the first exists: the raised
    :class:`OrthogonalConditioningError` carries it as ``p_vector``.
    """
    _require_dims(a, b, basis_m)
    M = basis_m.columns
    phases = schedule.phases(basis_m)
    amps = (b.amplitudes.conj() @ M) * (M.conj().T @ a.amplitudes)
    p_vector = float(abs(np.sum(amps * phases)) ** 2)
    try:
        cond = weak_conditional(a, b, basis_m)
    except OrthogonalConditioningError as exc:
        exc.p_vector = p_vector
        raise
    p_ba = abs(np.vdot(b.amplitudes, a.amplitudes)) ** 2
    p_action = float(p_ba * abs(np.sum(cond.values * phases)) ** 2)
    return TransformedProbability(p_vector, p_action)


def reference_state(basis_m: BasisSet) -> PureState:
    """Equal superposition ``sum_m |m> / sqrt(d)``."""
    return PureState(basis_m.columns.sum(axis=1) / math.sqrt(basis_m.dim))


def action_phase_representation(a: PureState, basis_m: BasisSet) -> ComplexConditional:
    """``P(m|a,r) = <m|a> / sum_m' <m'|a>`` relative to the reference state ``r``."""
    _require_dims(a, basis_m)
    comps = basis_m.columns.conj().T @ a.amplitudes
    total = comps.sum()
    if abs(total) <= TOL_OVERLAP:
        raise OrthogonalReferenceError(
            f"|sum_m <m|a>| = {abs(total):.3g}: state is orthogonal to the reference state"
        )
    return ComplexConditional(a, reference_state(basis_m), basis_m, comps / total)


def reconstruct_state(cond: ComplexConditional, basis_m: BasisSet | None = None) -> PureState:
    """State vector proportional to ``sum_m P(m|a,r) |m>``, in canonical phase."""
    basis_m = cond.basis_m if basis_m is None else basis_m
    vals = np.asarray(cond.values)
    if vals.shape[0] != basis_m.dim:
        raise ShapeError("conditional values do not match the basis")
    if np.linalg.norm(vals) == 0:
        raise DegenerateInputError("all action phase probabilities are zero")
    if abs(vals.sum() - 1.0) > TOL_LIN:
        raise DegenerateInputError(f"action phase probabilities sum to {vals.sum():.12g}, not 1")
    return PureState.normalized(basis_m.columns @ vals)
