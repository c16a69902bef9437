"""Finite-dimensional states, bases, observables and unitaries.

Every object here is an immutable value: arrays are copied on construction
and flagged read-only. Vectors follow one phase convention throughout, the
largest-magnitude amplitude is real and non-negative, with near-ties resolved
toward the lowest index, so that decompositions are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from .errors import (
    DegeneracyError,
    InvalidDimensionError,
    LabelError,
    ShapeError,
)

TOL_LIN = 1e-10
TOL_DEGEN = 1e-8

Label = Hashable


def _frozen(array, dtype=complex) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def canonical_phase(vector: np.ndarray, atol: float = TOL_LIN) -> np.ndarray:
    """Return ``vector`` times the global phase that makes its pivot entry real and >= 0.

    The pivot is the first entry whose magnitude is within ``atol`` of the
    largest magnitude.
    """
    vector = np.asarray(vector, dtype=complex)
    mags = np.abs(vector)
    top = mags.max() if mags.size else 0.0
    if top == 0.0:
        return vector.copy()
    pivot = int(np.flatnonzero(mags >= top - atol)[0])
    return vector * (abs(vector[pivot]) / vector[pivot])


def _check_square(matrix: np.ndarray, what: str) -> None:
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ShapeError(f"{what} must be a square matrix, got shape {matrix.shape}")
    if matrix.shape[0] == 0:
        raise InvalidDimensionError(f"{what} has dimension 0")


@dataclass(frozen=True)
class BasisSet:
    """An orthonormal basis; column ``k`` of ``columns`` is the ket labelled ``labels[k]``."""

    columns: np.ndarray
    labels: tuple = None  # type: ignore[assignment]
    name: str = ""

    def __post_init__(self):
        cols = _frozen(self.columns)
        _check_square(cols, "basis columns")
        d = cols.shape[0]
        labels = tuple(range(d)) if self.labels is None else tuple(self.labels)
        if len(labels) != d:
            raise ShapeError(f"expected {d} labels, got {len(labels)}")
        if len(set(labels)) != d:
            raise LabelError(f"basis labels must be unique: {labels!r}")
        gram = cols.conj().T @ cols
        if np.max(np.abs(gram - np.eye(d))) > TOL_LIN:
            raise ShapeError("basis columns are not orthonormal")
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.columns.shape[0]

    def index(self, label: Label) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LabelError(f"unknown label {label!r}; basis has {self.labels!r}") from None

    def vector(self, label: Label) -> np.ndarray:
        return self.columns[:, self.index(label)]

    def state(self, label: Label) -> "PureState":
        return PureState(self.vector(label))

    def projector(self, label: Label) -> np.ndarray:
        v = self.vector(label)
        return np.outer(v, v.conj())

    def gram_error(self) -> float:
        return float(np.max(np.abs(self.columns.conj().T @ self.columns - np.eye(self.dim))))

    def transformed(self, unitary: "UnitaryMap | np.ndarray") -> "BasisSet":
        """Basis with kets ``unitary @ |k>``; labels are kept."""
        mat = unitary.matrix if isinstance(unitary, UnitaryMap) else np.asarray(unitary)
        return BasisSet(mat @ self.columns, self.labels, self.name)


@dataclass(frozen=True)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size == 0:
            raise InvalidDimensionError("state has dimension 0")
        norm = np.linalg.norm(amps)
        if abs(norm**2 - 1.0) > TOL_LIN:
            raise ShapeError(f"state is not normalized (|psi|^2 = {norm**2:.3g})")
        object.__setattr__(self, "amplitudes", _frozen(canonical_phase(amps)))

    @classmethod
    def normalized(cls, amplitudes) -> "PureState":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise ShapeError("cannot normalize the zero vector")
        return cls(amps / norm)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def overlap(self, other: "PureState") -> complex:
        """<other|self>."""
        return complex(np.vdot(other.amplitudes, self.amplitudes))

    def fidelity(self, other: "PureState") -> float:
        return abs(self.overlap(other)) ** 2

    def density(self) -> "DensityOperator":
        return DensityOperator(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityOperator:
    matrix: np.ndarray

    def __post_init__(self):
        mat = _frozen(self.matrix)
        _check_square(mat, "density matrix")
        if np.max(np.abs(mat - mat.conj().T)) > TOL_LIN:
            raise ShapeError("density matrix is not Hermitian")
        if abs(np.trace(mat) - 1.0) > TOL_LIN:
            raise ShapeError(f"density matrix trace is {np.trace(mat).real:.12g}, not 1")
        if np.linalg.eigvalsh(mat).min() < -TOL_LIN:
            raise ShapeError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def from_state(cls, state: PureState) -> "DensityOperator":
        return state.density()

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityOperator":
        return cls(np.eye(dim) / dim)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def expectation(self, vector: np.ndarray) -> float:
        """<v|rho|v> for a ket ``v``."""
        return float(np.real(np.vdot(vector, self.matrix @ vector)))

    def born(self, basis: BasisSet) -> np.ndarray:
        """Outcome probabilities <k|rho|k> in ``basis`` order."""
        cols = basis.columns
        return np.real(np.einsum("ik,ij,jk->k", cols.conj(), self.matrix, cols))

    def fidelity(self, state: PureState) -> float:
        return self.expectation(state.amplitudes)

    def trace_distance(self, other: "DensityOperator") -> float:
        return 0.5 * float(np.abs(np.linalg.eigvalsh(self.matrix - other.matrix)).sum())


@dataclass(frozen=True)
class UnitaryMap:
    matrix: np.ndarray

    def __post_init__(self):
        mat = _frozen(self.matrix)
        _check_square(mat, "unitary")
        if np.max(np.abs(mat.conj().T @ mat - np.eye(mat.shape[0]))) > TOL_LIN:
            raise ShapeError("matrix is not unitary")
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def identity(cls, dim: int) -> "UnitaryMap":
        return cls(np.eye(dim))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def dagger(self) -> "UnitaryMap":
        return UnitaryMap(self.matrix.conj().T)

    def __matmul__(self, other: "UnitaryMap") -> "UnitaryMap":
        return UnitaryMap(self.matrix @ other.matrix)


@dataclass(frozen=True)
class Observable:
    """Nondegenerate Hermitian operator sum_a A_a |a><a|."""

    eigenvalues: np.ndarray
    eigenbasis: BasisSet
    _matrix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        vals = _frozen(np.asarray(self.eigenvalues, dtype=float).reshape(-1), dtype=float)
        if vals.shape[0] != self.eigenbasis.dim:
            raise ShapeError(
                f"{vals.shape[0]} eigenvalues for a basis of dimension {self.eigenbasis.dim}"
            )
        if vals.size > 1:
            gaps = np.abs(vals[:, None] - vals[None, :])[np.triu_indices(vals.size, 1)]
            if gaps.min() < TOL_DEGEN:
                raise DegeneracyError(f"eigenvalue gap {gaps.min():.3g} below {TOL_DEGEN}")
        object.__setattr__(self, "eigenvalues", vals)
        cols = self.eigenbasis.columns
        object.__setattr__(self, "_matrix", _frozen((cols * vals) @ cols.conj().T))

    @property
    def dim(self) -> int:
        return self.eigenbasis.dim

    @property
    def labels(self) -> tuple:
        return self.eigenbasis.labels

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    def eigenvalue(self, label: Label) -> float:
        return float(self.eigenvalues[self.eigenbasis.index(label)])

    def gaps(self) -> np.ndarray:
        """Matrix of A_a - A_a' indexed by eigenbasis position."""
        return self.eigenvalues[:, None] - self.eigenvalues[None, :]

    def to_eigenbasis(self, matrix: np.ndarray) -> np.ndarray:
        cols = self.eigenbasis.columns
        return cols.conj().T @ matrix @ cols

    def from_eigenbasis(self, matrix: np.ndarray) -> np.ndarray:
        cols = self.eigenbasis.columns
        return cols @ matrix @ cols.conj().T


def _basis_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def haar_unitary(dim: int, seed=None) -> np.ndarray:
    """Haar-distributed unitary from the QR decomposition of a complex Ginibre matrix."""
    rng = _basis_rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))


def build_basis(kind: str, dim: int, seed=None, labels: Sequence | None = None) -> BasisSet:
    """Construct a ``standard``, ``fourier`` or ``haar_random`` basis.

    Fourier column ``k`` has entries ``exp(2 pi i j k / d) / sqrt(d)``. A
    ``haar_random`` basis is a deterministic function of ``seed`` (anything
    accepted by ``numpy.random.default_rng``, or a Generator).
    """
    if not isinstance(dim, (int, np.integer)) or dim < 1:
        raise InvalidDimensionError(f"dimension must be a positive integer, got {dim!r}")
    if kind == "standard":
        cols = np.eye(dim, dtype=complex)
    elif kind == "fourier":
        j = np.arange(dim)
        cols = np.exp(2j * np.pi * np.outer(j, j) / dim) / np.sqrt(dim)
    elif kind in ("haar_random", "haar"):
        cols = haar_unitary(dim, seed)
        cols = np.column_stack([canonical_phase(cols[:, k]) for k in range(dim)])
    else:
        raise ValueError(f"unknown basis kind {kind!r}")
    return BasisSet(cols, labels, name=kind)


def qubit_bases() -> dict[str, BasisSet]:
    """The Z, X and Y eigenbases of a qubit, a mutually unbiased triple."""
    s = 1 / np.sqrt(2)
    return {
        "Z": BasisSet(np.eye(2), ("0", "1"), "Z"),
        "X": BasisSet(s * np.array([[1, 1], [1, -1]]), ("+", "-"), "X"),
        "Y": BasisSet(s * np.array([[1, 1], [1j, -1j]]), ("+i", "-i"), "Y"),
    }


def random_density(dim: int, seed=None, rank: int | None = None) -> DensityOperator:
    """Random mixed state W W^dag / tr, with W a dim x rank Ginibre matrix."""
    rng = _basis_rng(seed)
    rank = dim if rank is None else rank
    w = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = w @ w.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return DensityOperator(rho / np.trace(rho).real)


def random_state(dim: int, seed=None) -> PureState:
    rng = _basis_rng(seed)
    return PureState.normalized(rng.standard_normal(dim) + 1j * rng.standard_normal(dim))


def eigendecompose(matrix, labels: Sequence | None = None) -> Observable:
    """Decompose a Hermitian matrix into an :class:`Observable`.

    Eigenvalues come out in descending order, eigenvectors in canonical
    phase. Raises :class:`ShapeError` for non-Hermitian input and
    :class:`DegeneracyError` when two eigenvalues are closer than ``TOL_DEGEN``.
    """
    mat = np.asarray(matrix, dtype=complex)
    _check_square(mat, "observable")
    if np.max(np.abs(mat - mat.conj().T)) > TOL_LIN:
        raise ShapeError("observable matrix is not Hermitian")
    vals, vecs = np.linalg.eigh(0.5 * (mat + mat.conj().T))
    vals, vecs = vals[::-1], vecs[:, ::-1]
    if vals.size > 1 and np.min(-np.diff(vals)) < TOL_DEGEN:
        raise DegeneracyError(f"eigenvalue gap {np.min(-np.diff(vals)):.3g} below {TOL_DEGEN}")
    vecs = np.column_stack([canonical_phase(vecs[:, k]) for k in range(vals.size)])
    return Observable(vals, BasisSet(vecs, labels, name="eigenbasis"))


def observable_from_basis(basis: BasisSet, eigenvalues) -> Observable:
    return Observable(np.asarray(eigenvalues, dtype=float), basis)


def phase_unitary(observable: Observable, phi: float) -> UnitaryMap:
    """exp(-i phi A), assembled from the spectral decomposition of ``observable``."""
    cols = observable.eigenbasis.columns
    phases = np.exp(-1j * phi * observable.eigenvalues)
    return UnitaryMap((cols * phases) @ cols.conj().T)
