"""Complex joint and conditional probabilities.

The joint table of a state with respect to two bases is
``rho(a, b) = <b|a><a|rho|b>``; its row and column sums are the Born
distributions of the two bases. Weak values of projectors,
``P(m|a, b) = <b|m><m|a> / <b|a>``, act as complex conditional
probabilities on such tables.

Quantities whose naive form divides by ``<b'|a>`` (the transformation
kernel and the outcome prediction) are evaluated with the denominator
cancelled against the matching factor of the joint table. The raw kernel is
still exposed, and raises when its denominator vanishes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import OrthogonalConditioningError, ShapeError
from .hilbert import (
    TOL_LIN,
    BasisSet,
    DensityOperator,
    Label,
    Observable,
    PureState,
    UnitaryMap,
)
from .serialize import csv_text, dumps

TOL_OVERLAP = 1e-8
TOL_IM = 1e-10


def _require_dims(*objs) -> int:
    dims = {o.dim for o in objs}
    if len(dims) != 1:
        raise ShapeError(f"dimension mismatch: {sorted(dims)}")
    return dims.pop()


@dataclass(frozen=True)
class ComplexJointDistribution:
    """Table ``table[i, j] = rho(a_i, b_j)`` over ``basis_a`` x ``basis_b``.

    ``rho`` keeps the density operator the table was computed from, when
    known; operations that need ``<a|rho|b>`` fall back to inverting the table
    otherwise.
    """

    basis_a: BasisSet
    basis_b: BasisSet
    table: np.ndarray
    rho: DensityOperator | None = None

    def __post_init__(self):
        d = _require_dims(self.basis_a, self.basis_b)
        tab = np.array(self.table, dtype=complex)
        if tab.shape != (d, d):
            raise ShapeError(f"joint table must be {d}x{d}, got {tab.shape}")
        if abs(tab.sum() - 1.0) > TOL_LIN:
            raise ShapeError(f"joint table sums to {tab.sum():.12g}, not 1")
        tab.setflags(write=False)
        object.__setattr__(self, "table", tab)

    @property
    def dim(self) -> int:
        return self.basis_a.dim

    def entry(self, a: Label, b: Label) -> complex:
        return complex(self.table[self.basis_a.index(a), self.basis_b.index(b)])

    def marginal_a(self) -> np.ndarray:
        return self.table.sum(axis=1)

    def marginal_b(self) -> np.ndarray:
        return self.table.sum(axis=0)

    def density_operator(self) -> DensityOperator:
        """The state behind the table.

        Inverting ``rho(a, b) / <b|a> = <a|rho|b>`` needs every overlap to be
        nonzero; otherwise the stored ``rho`` is required.
        """
        if self.rho is not None:
            return self.rho
        overlaps = self.basis_b.columns.conj().T @ self.basis_a.columns  # [b, a]
        if np.min(np.abs(overlaps)) <= TOL_OVERLAP:
            raise OrthogonalConditioningError(
                "cannot recover the state: the bases have orthogonal pairs"
            )
        a_rho_b = self.table / overlaps.T
        mat = self.basis_a.columns @ a_rho_b @ self.basis_b.columns.conj().T
        return DensityOperator(0.5 * (mat + mat.conj().T))

    def to_dict(self) -> dict[str, Any]:
        return {
            "basis_a": {"labels": [str(x) for x in self.basis_a.labels], "columns": self.basis_a.columns},
            "basis_b": {"labels": [str(x) for x in self.basis_b.labels], "columns": self.basis_b.columns},
            "table": self.table,
        }

    def to_json(self) -> str:
        return dumps(self)

    def to_csv(self) -> str:
        rows = (
            (a, b, self.table[i, j].real, self.table[i, j].imag)
            for i, a in enumerate(self.basis_a.labels)
            for j, b in enumerate(self.basis_b.labels)
        )
        return csv_text(("a_label", "b_label", "re", "im"), rows)


@dataclass(frozen=True)
class ComplexConditional:
    """Complex conditional probabilities ``values[k] = P(m_k | pre, post)``."""

    pre: Any
    post: Any
    basis_m: BasisSet
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex).reshape(-1)
        if vals.shape[0] != self.basis_m.dim:
            raise ShapeError("one conditional value per basis label is required")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __getitem__(self, label: Label) -> complex:
        return complex(self.values[self.basis_m.index(label)])

    def total(self) -> complex:
        return complex(self.values.sum())

    def to_dict(self) -> dict[str, Any]:
        return {
            "labels": [str(x) for x in self.basis_m.labels],
            "values": self.values,
        }


def kd_joint(rho: DensityOperator, basis_a: BasisSet, basis_b: BasisSet) -> ComplexJointDistribution:
    _require_dims(rho, basis_a, basis_b)
    A, B = basis_a.columns, basis_b.columns
    b_a = B.conj().T @ A  # <b|a>, indexed [b, a]
    a_rho_b = A.conj().T @ rho.matrix @ B  # <a|rho|b>, indexed [a, b]
    return ComplexJointDistribution(basis_a, basis_b, b_a.T * a_rho_b, rho)


def weak_conditional(a: PureState, b: PureState, basis_m: BasisSet) -> ComplexConditional:
    """Weak values ``<b|m><m|a>/<b|a>`` of every projector of ``basis_m``."""
    _require_dims(a, b, basis_m)
    denom = np.vdot(b.amplitudes, a.amplitudes)
    if abs(denom) <= TOL_OVERLAP:
        raise OrthogonalConditioningError(
            f"|<b|a>| = {abs(denom):.3g} is below {TOL_OVERLAP}; weak value undefined"
        )
    M = basis_m.columns
    vals = (M.conj().T @ a.amplitudes) * (b.amplitudes.conj() @ M) / denom
    return ComplexConditional(a, b, basis_m, vals)


def transform_kernel(
    unitary: UnitaryMap, a: PureState, b_label: Label, bprime_label: Label, basis_b: BasisSet
) -> complex:
    """``P(U(b) | a, b') = <b'|U^dag|b><b|U|a> / <b'|a>``."""
    _require_dims(unitary, a, basis_b)
    b = basis_b.vector(b_label)
    bp = basis_b.vector(bprime_label)
    denom = np.vdot(bp, a.amplitudes)
    if abs(denom) <= TOL_OVERLAP:
        raise OrthogonalConditioningError(f"|<b'|a>| = {abs(denom):.3g}; kernel undefined")
    U = unitary.matrix
    return complex(np.vdot(bp, U.conj().T @ b) * np.vdot(b, U @ a.amplitudes) / denom)


def transform_kernel_spectral(
    observable: Observable,
    phi: float,
    a_label: Label,
    b_label: Label,
    bprime_label: Label,
    basis_b: BasisSet,
) -> complex:
    """The kernel for ``U = exp(-i phi A)`` and an eigenstate ``|a>`` of ``A``, as a spectral sum.

    ``<b|a>/<b'|a> * sum_a' <b'|a'><a'|b> exp(-i phi (A_a - A_a'))``
    """
    _require_dims(observable, basis_b)
    E = observable.eigenbasis.columns
    k = observable.eigenbasis.index(a_label)
    b = basis_b.vector(b_label)
    bp = basis_b.vector(bprime_label)
    ket_a = E[:, k]
    denom = np.vdot(bp, ket_a)
    if abs(denom) <= TOL_OVERLAP:
        raise OrthogonalConditioningError(f"|<b'|a>| = {abs(denom):.3g}; kernel undefined")
    phases = np.exp(-1j * phi * (observable.eigenvalues[k] - observable.eigenvalues))
    terms = (bp.conj() @ E) * (E.conj().T @ b) * phases
    return complex(np.vdot(b, ket_a) / denom * terms.sum())


def propagate_joint(joint: ComplexJointDistribution, unitary: UnitaryMap) -> ComplexJointDistribution:
    """Re-represent ``joint`` with ``b`` replaced by ``U(b)``, i.e. kets ``U^dag|b>``.

    Evaluated as ``<b|U|a><a|rho U^dag|b>``, which has no denominators.
    """
    _require_dims(joint, unitary)
    rho = joint.density_operator()
    A, B, U = joint.basis_a.columns, joint.basis_b.columns, unitary.matrix
    b_U_a = B.conj().T @ U @ A  # [b, a]
    a_rho_Ud_b = A.conj().T @ rho.matrix @ U.conj().T @ B  # [a, b]
    new_b = joint.basis_b.transformed(unitary.dagger)
    return ComplexJointDistribution(joint.basis_a, new_b, b_U_a.T * a_rho_Ud_b, rho)


def propagate_joint_via_kernel(
    joint: ComplexJointDistribution, unitary: UnitaryMap
) -> ComplexJointDistribution:
    """``rho(a, U(b)) = sum_b' P(U(b)|a, b') rho(a, b')`` with the raw kernel.

    Only defined when no ``<b'|a>`` vanishes; used to cross-check
    :func:`propagate_joint`.
    """
    _require_dims(joint, unitary)
    d = joint.dim
    labels_b = joint.basis_b.labels
    out = np.zeros((d, d), dtype=complex)
    for i, a_label in enumerate(joint.basis_a.labels):
        a = joint.basis_a.state(a_label)
        for j, b in enumerate(labels_b):
            out[i, j] = sum(
                transform_kernel(unitary, a, b, bp, joint.basis_b) * joint.table[i, jp]
                for jp, bp in enumerate(labels_b)
            )
    return ComplexJointDistribution(
        joint.basis_a, joint.basis_b.transformed(unitary.dagger), out, joint.rho
    )


def predict_outcome(joint: ComplexJointDistribution, basis_m: BasisSet) -> np.ndarray:
    """``P(m) = sum_ab P(m|a,b) rho(a,b)`` in cancelled form ``sum_ab <b|m><m|a><a|rho|b>``.

    Returns real probabilities in ``basis_m`` order.
    """
    _require_dims(joint, basis_m)
    rho = joint.density_operator()
    A, B, M = joint.basis_a.columns, joint.basis_b.columns, basis_m.columns
    m_a = M.conj().T @ A  # [m, a]
    b_m = B.conj().T @ M  # [b, m]
    a_rho_b = A.conj().T @ rho.matrix @ B  # [a, b]
    p = np.einsum("bm,ma,ab->m", b_m, m_a, a_rho_b)
    if np.max(np.abs(p.imag)) > TOL_IM:
        raise ArithmeticError(f"predicted probabilities have imaginary part {np.max(np.abs(p.imag)):.3g}")
    return p.real


def predict_outcome_weak(joint: ComplexJointDistribution, basis_m: BasisSet) -> np.ndarray:
    """Same prediction summed literally over weak values; needs every ``<b|a>`` nonzero."""
    _require_dims(joint, basis_m)
    total = np.zeros(basis_m.dim, dtype=complex)
    for i, a in enumerate(joint.basis_a.labels):
        for j, b in enumerate(joint.basis_b.labels):
            cond = weak_conditional(joint.basis_a.state(a), joint.basis_b.state(b), basis_m)
            total += cond.values * joint.table[i, j]
    return total
