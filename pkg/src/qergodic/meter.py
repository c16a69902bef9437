"""System plus one-dimensional meter under the coupling ``kappa * A (x) p``.

The meter lives on a periodic grid of ``n`` points on ``[-L, L)``.
Translations ``exp(-i s p)`` are applied in Fourier space, which is exact
for wavepackets that are band-limited on the grid. Amplitudes are stored
with discrete normalization ``sum_j |psi_j|^2 = 1``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import AliasingError, InvalidBinningError, ShapeError, ZeroProbabilityError
from .ergodic import PhaseDistribution
from .hilbert import TOL_LIN, DensityOperator, Label, Observable, PureState
from .serialize import dumps

DEFAULT_GRID = 512


def coverage_half_width(sigma_x: float, kappa: float, max_eigenvalue: float) -> float:
    """Smallest admissible ``L``: four times the reach of the outermost shifted wavepacket."""
    return 4.0 * (sigma_x + abs(kappa) * max_eigenvalue)


def auto_half_width(sigma_x: float, kappa: float, max_eigenvalue: float) -> float:
    """Default ``L``: the coverage bound, widened so every branch keeps 12 sigma_x of margin."""
    reach = abs(kappa) * max_eigenvalue
    return max(coverage_half_width(sigma_x, kappa, max_eigenvalue), reach + 12.0 * sigma_x)


def auto_grid_size(half_width: float, sigma_x: float, minimum: int = DEFAULT_GRID) -> int:
    """Power of two keeping the grid spacing at or below ``sigma_x / 2``."""
    needed = 2.0 * half_width / (0.5 * sigma_x)
    return max(minimum, 1 << math.ceil(math.log2(max(needed, 1.0))))


@dataclass(frozen=True)
class MeterModel:
    """Meter grid, initial wavefunction and coupling strength ``kappa = g t``."""

    n: int
    half_width: float
    sigma_x: float
    kappa: float
    wavefunction: np.ndarray | None = None

    def __post_init__(self):
        if self.n < 2:
            raise ShapeError("meter grid needs at least two points")
        if not self.half_width > 0 or not self.sigma_x > 0:
            raise ShapeError("half_width and sigma_x must be positive")
        psi = self.wavefunction
        if psi is None:
            x = self.grid
            psi = np.exp(-(x**2) / (4.0 * self.sigma_x**2)).astype(complex)
            psi /= np.linalg.norm(psi)
        psi = np.array(psi, dtype=complex).reshape(-1)
        if psi.shape[0] != self.n:
            raise ShapeError(f"wavefunction has {psi.shape[0]} points, grid has {self.n}")
        if abs(np.vdot(psi, psi).real - 1.0) > TOL_LIN:
            raise ShapeError("meter wavefunction is not normalized")
        psi.setflags(write=False)
        object.__setattr__(self, "wavefunction", psi)

    @classmethod
    def auto(
        cls,
        sigma_x: float,
        kappa: float,
        observable: Observable,
        n: int | None = None,
        half_width: float | None = None,
    ) -> "MeterModel":
        """Meter whose grid satisfies the coverage condition for ``observable``."""
        max_a = float(np.max(np.abs(observable.eigenvalues)))
        L = auto_half_width(sigma_x, kappa, max_a) if half_width is None else half_width
        n = auto_grid_size(L, sigma_x) if n is None else n
        return cls(n, L, sigma_x, kappa)

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.n

    @property
    def grid(self) -> np.ndarray:
        return -self.half_width + self.dx * np.arange(self.n)

    @property
    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    @property
    def sigma_p(self) -> float:
        """Momentum spread of the default Gaussian, ``1 / (2 sigma_x)``."""
        return 1.0 / (2.0 * self.sigma_x)

    def momentum_weights(self) -> np.ndarray:
        amp = np.fft.fft(self.wavefunction)
        w = np.abs(amp) ** 2
        return w / w.sum()

    def phase_distribution(self, exact: bool = False) -> PhaseDistribution:
        """Distribution of ``phi = kappa p`` seen by the system.

        By default the continuum Gaussian with width ``kappa sigma_p``; with
        ``exact=True`` the discrete momentum distribution of the grid wavefunction.
        """
        if exact:
            return PhaseDistribution.discrete(self.kappa * self.wavenumbers, self.momentum_weights())
        return PhaseDistribution.gaussian(abs(self.kappa) * self.sigma_p)

    def shifted(self, shift: float) -> np.ndarray:
        """``exp(-i shift p) psi``, i.e. ``psi(x - shift)``."""
        return np.fft.ifft(np.fft.fft(self.wavefunction) * np.exp(-1j * self.wavenumbers * shift))

    def check_coverage(self, observable: Observable) -> None:
        need = coverage_half_width(self.sigma_x, self.kappa, float(np.max(np.abs(observable.eigenvalues))))
        if self.half_width < need * (1 - 1e-12):
            raise AliasingError(
                f"meter half-width {self.half_width:.6g} < {need:.6g} needed to hold all shifted branches"
            )

    def to_dict(self) -> dict:
        return {"n": self.n, "L": self.half_width, "sigma_x": self.sigma_x, "kappa": self.kappa}


@dataclass(frozen=True)
class JointState:
    """System-meter amplitudes ``amplitudes[i, j]`` in the system's standard basis."""

    amplitudes: np.ndarray
    meter: MeterModel
    observable: Observable | None = None

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.ndim != 2 or amps.shape[1] != self.meter.n:
            raise ShapeError(f"joint amplitudes must be d x {self.meter.n}")
        if abs(np.vdot(amps, amps).real - 1.0) > TOL_LIN:
            raise ShapeError("joint state is not normalized")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def meter_density(self) -> np.ndarray:
        """Read-out probability per grid point."""
        return np.sum(np.abs(self.amplitudes) ** 2, axis=0)

    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


def interact(system: PureState, meter: MeterModel, observable: Observable) -> JointState:
    """Apply ``exp(-i kappa A (x) p)``: branch ``a`` of the system drags the meter by ``kappa A_a``."""
    if system.dim != observable.dim:
        raise ShapeError(f"system dimension {system.dim} != observable dimension {observable.dim}")
    meter.check_coverage(observable)
    E = observable.eigenbasis.columns
    coeff = E.conj().T @ system.amplitudes
    branches = np.stack([meter.shifted(meter.kappa * A) for A in observable.eigenvalues])
    amps = E @ (coeff[:, None] * branches)
    amps /= math.sqrt(np.vdot(amps, amps).real)
    return JointState(amps, meter, observable)


def reduce_system(joint: JointState) -> DensityOperator:
    """Partial trace over the meter."""
    rho = joint.amplitudes @ joint.amplitudes.conj().T
    return DensityOperator(0.5 * (rho + rho.conj().T))


@dataclass(frozen=True)
class ReadoutBin:
    index: int
    lower: float
    upper: float
    probability: float
    state: DensityOperator | None

    def to_dict(self) -> dict:
        return {
            "bin": self.index,
            "lower": self.lower,
            "upper": self.upper,
            "probability": self.probability,
            "state": None if self.state is None else self.state.matrix,
        }


def _validate_edges(edges, meter: MeterModel) -> np.ndarray:
    edges = np.asarray(edges, dtype=float).reshape(-1)
    if edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise InvalidBinningError("bin edges must be strictly increasing, at least two values")
    x = meter.grid
    if edges[0] > x[0] or edges[-1] < x[-1]:
        raise InvalidBinningError(
            f"bin edges [{edges[0]:.6g}, {edges[-1]:.6g}] do not span the grid [{x[0]:.6g}, {x[-1]:.6g}]"
        )
    return edges


def readout(joint: JointState, bin_edges) -> list[ReadoutBin]:
    """Bin the meter position; bins are ``[e_k, e_k+1)`` with the last one closed."""
    meter = joint.meter
    edges = _validate_edges(bin_edges, meter)
    idx = np.clip(np.searchsorted(edges, meter.grid, side="right") - 1, 0, edges.size - 2)
    out = []
    for k in range(edges.size - 1):
        part = joint.amplitudes[:, idx == k]
        rho = part @ part.conj().T
        p = float(np.trace(rho).real)
        state = None
        if p > TOL_LIN:
            rho = rho / p
            state = DensityOperator(0.5 * (rho + rho.conj().T))
        out.append(ReadoutBin(k, float(edges[k]), float(edges[k + 1]), p, state))
    return out


def readout_json(bins: list[ReadoutBin]) -> str:
    return dumps({"bins": bins})


def default_bin_edges(meter: MeterModel, observable: Observable) -> np.ndarray:
    """Midpoints between adjacent branch centers, closed off by the grid ends."""
    centers = np.sort(meter.kappa * observable.eigenvalues)
    mids = 0.5 * (centers[1:] + centers[:-1])
    return np.concatenate(([-meter.half_width], mids, [meter.half_width]))


def branch_bin(meter: MeterModel, observable: Observable, label: Label) -> int:
    """Index of the default bin holding the branch of ``label``."""
    order = np.argsort(meter.kappa * observable.eigenvalues, kind="stable")
    return int(np.flatnonzero(order == observable.eigenbasis.index(label))[0])


@dataclass(frozen=True)
class MeasurementPreparation:
    label: Label
    probability: float
    state: PureState
    conditional: DensityOperator
    purity: float
    fidelity: float
    strong: bool
    warning: str | None = field(default=None)

    def to_dict(self) -> dict:
        return {
            "label": str(self.label),
            "probability": self.probability,
            "state": self.state.amplitudes,
            "purity": self.purity,
            "fidelity": self.fidelity,
            "strong": self.strong,
            "warning": self.warning,
        }


def coupling_is_strong(meter: MeterModel, observable: Observable) -> bool:
    vals = np.sort(observable.eigenvalues)
    gap = float(np.min(np.diff(vals))) if vals.size > 1 else math.inf
    return abs(meter.kappa) * gap >= 10.0 * meter.sigma_x


def prepare_by_measurement(
    system: PureState,
    observable: Observable,
    meter: MeterModel,
    outcome: Label,
    bin_edges=None,
) -> MeasurementPreparation:
    """Couple, read out, and keep the bin of ``outcome``.

    ``state`` is the dominant eigenvector of the conditional density matrix;
    ``fidelity`` compares it with the ideal eigenstate. Weak coupling still
    returns a result, with ``strong=False`` and a warning.
    """
    joint = interact(system, meter, observable)
    if bin_edges is None:
        bins = readout(joint, default_bin_edges(meter, observable))
        chosen = bins[branch_bin(meter, observable, outcome)]
    else:
        bins = readout(joint, bin_edges)
        ideal = meter.kappa * observable.eigenvalue(outcome)
        chosen = next(b for b in bins if b.lower <= ideal < b.upper or b is bins[-1])
    if chosen.state is None:
        raise ZeroProbabilityError(f"read-out bin for {outcome!r} has zero weight")
    rho = chosen.state
    vals, vecs = np.linalg.eigh(rho.matrix)
    state = PureState.normalized(vecs[:, -1])
    strong = coupling_is_strong(meter, observable)
    warning = None
    if not strong:
        warning = "weak coupling: kappa * min gap < 10 sigma_x, read-out does not resolve eigenvalues"
        warnings.warn(warning, RuntimeWarning, stacklevel=2)
    target = observable.eigenbasis.state(outcome)
    return MeasurementPreparation(
        outcome, chosen.probability, state, rho, rho.purity(), rho.fidelity(target), strong, warning
    )
