"""Preparation scenarios (slit, polarizing beam splitter, Stern-Gerlach) and the identity suite runner."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

from . import ergodic as eg
from . import hilbert as hb
from . import meter as mt
from .errors import ConfigError
from .report import Check, RunReport, at_least_check, close_check
from .suite import run_identity_suite

SCENARIOS = ("single-slit", "beam-splitter", "stern-gerlach", "identity-suite")

# default meters: the slit uses a stronger coupling so the prepared position
# state is exact to double precision
SCENARIO_METER = {
    "single-slit": {"sigma_x": 0.5, "kappa": 20.0},
    "beam-splitter": {"sigma_x": 0.5, "kappa": 5.0},
    "stern-gerlach": {"sigma_x": 0.5, "kappa": 5.0},
}


@dataclass(frozen=True)
class MeterConfig:
    sigma_x: float = 0.5
    kappa: float = 5.0
    n: int | None = None
    L: float | None = None  # None means "auto"

    def to_dict(self) -> dict:
        return {"n": self.n if self.n is not None else "auto", "L": self.L if self.L is not None else "auto",
                "sigma_x": self.sigma_x, "kappa": self.kappa}

    def build(self, observable: hb.Observable) -> mt.MeterModel:
        return mt.MeterModel.auto(self.sigma_x, self.kappa, observable, n=self.n, half_width=self.L)


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    dim: int = 2
    seed: int = 42
    meter: MeterConfig | None = None
    tolerances: dict = field(default_factory=dict)
    out: str | None = None
    slit: int = 0
    dim_max: int = 8
    seeds: int = 5
    tol_scale: float = 1.0
    mc_samples: int = 10_000

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError("scenario", f"must be one of {', '.join(SCENARIOS)}, got {self.scenario!r}")
        _positive_int(self.dim, "dim")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError("seed", "must be a non-negative integer")
        if self.scenario in ("beam-splitter", "stern-gerlach") and self.dim != 2:
            raise ConfigError("dim", f"{self.scenario} is a two-level scenario, got dim={self.dim}")
        if self.scenario == "single-slit":
            if self.dim < 2:
                raise ConfigError("dim", "single-slit needs at least two positions")
            if not isinstance(self.slit, int) or not 0 <= self.slit < self.dim:
                raise ConfigError("slit", f"slit index must lie in [0, {self.dim}), got {self.slit!r}")
        if self.scenario == "identity-suite":
            _positive_int(self.dim_max, "dim_max")
            if self.dim_max < 2:
                raise ConfigError("dim_max", "must be at least 2")
            _positive_int(self.seeds, "seeds")
            _positive_int(self.mc_samples, "mc_samples")
            if not self.tol_scale > 0:
                raise ConfigError("tol_scale", "must be positive")
        if self.meter is not None:
            m = self.meter
            if not m.sigma_x > 0:
                raise ConfigError("meter.sigma_x", "must be positive")
            if m.n is not None and (not isinstance(m.n, int) or m.n < 2):
                raise ConfigError("meter.n", "must be an integer >= 2 or 'auto'")
            if m.L is not None and not m.L > 0:
                raise ConfigError("meter.L", "must be positive or 'auto'")
        for k, v in self.tolerances.items():
            if not isinstance(v, (int, float)) or isinstance(v, bool) or v < 0:
                raise ConfigError(f"tolerances.{k}", "must be a non-negative number")

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown field")
        if "scenario" not in data:
            raise ConfigError("scenario", "required field missing")
        kwargs = dict(data)
        if kwargs.get("meter") is not None:
            kwargs["meter"] = _meter_from_dict(kwargs["meter"])
        if "tolerances" in kwargs and not isinstance(kwargs["tolerances"], dict):
            raise ConfigError("tolerances", "must be an object mapping check names to numbers")
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path) -> "ScenarioConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", f"invalid JSON: {exc}") from None
        return cls.from_dict(data)

    def meter_config(self) -> MeterConfig:
        if self.meter is not None:
            return self.meter
        return MeterConfig(**SCENARIO_METER[self.scenario])

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"scenario": self.scenario, "seed": self.seed}
        if self.scenario == "identity-suite":
            out.update(dim_max=self.dim_max, seeds=self.seeds, tol_scale=self.tol_scale, mc_samples=self.mc_samples)
        else:
            out["dim"] = self.dim
            out["meter"] = self.meter_config()
        if self.scenario == "single-slit":
            out["slit"] = self.slit
        if self.tolerances:
            out["tolerances"] = dict(sorted(self.tolerances.items()))
        return out


def _positive_int(value, path):
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ConfigError(path, f"must be a positive integer, got {value!r}")


def _meter_from_dict(data) -> MeterConfig:
    if not isinstance(data, dict):
        raise ConfigError("meter", "must be an object")
    allowed = {"n", "L", "sigma_x", "kappa"}
    for key in data:
        if key not in allowed:
            raise ConfigError(f"meter.{key}", "unknown field")
    kw = {}
    for key in ("sigma_x", "kappa"):
        if key in data:
            if not isinstance(data[key], (int, float)) or isinstance(data[key], bool):
                raise ConfigError(f"meter.{key}", "must be a number")
            kw[key] = float(data[key])
    if "n" in data and data["n"] != "auto":
        kw["n"] = data["n"]
    if "L" in data and data["L"] != "auto":
        if not isinstance(data["L"], (int, float)):
            raise ConfigError("meter.L", "must be a number or 'auto'")
        kw["L"] = float(data["L"])
    return MeterConfig(**kw)


class _Checks:
    """Collects checks, applying per-check tolerance overrides from the config."""

    def __init__(self, overrides: dict):
        self.overrides = overrides
        self.items: list[Check] = []

    def close(self, name, value, reference, tol):
        self.items.append(close_check(name, value, reference, self.overrides.get(name, tol)))

    def at_least(self, name, value, reference, tol=0.0):
        self.items.append(at_least_check(name, value, reference, self.overrides.get(name, tol)))


def _single_slit(cfg: ScenarioConfig, checks: _Checks) -> None:
    d, q = cfg.dim, cfg.slit
    positions = hb.build_basis("standard", d)
    momenta = hb.build_basis("fourier", d)
    obs = hb.Observable(np.arange(d) - (d - 1) / 2.0, positions)
    incoming = momenta.state(0)
    meter = cfg.meter_config().build(obs)
    prep = mt.prepare_by_measurement(incoming, obs, meter, q)
    uniform = np.full(d, 1.0 / d)
    checks.close("single_slit.branch_probability", prep.probability, 1.0 / d, 1e-3)
    checks.close("single_slit.momentum_distribution", prep.state.density().born(momenta), uniform, 1e-10)
    checks.at_least("single_slit.position_fidelity", prep.fidelity, 0.999)
    ideal = eg.prepare_state(incoming.density(), obs, q)
    checks.close("single_slit.ergodic_momentum_distribution", ideal.state.born(momenta), uniform, 1e-12)


def _beam_splitter(cfg: ScenarioConfig, checks: _Checks) -> None:
    s = 1 / math.sqrt(2)
    hv = hb.BasisSet(np.eye(2), ("H", "V"), "HV")
    diagonal = hb.BasisSet(s * np.array([[1, 1], [1, -1]]), ("D", "A"), "DA")
    circular = hb.BasisSet(s * np.array([[1, 1], [1j, -1j]]), ("R", "L"), "RL")
    obs = hb.Observable([0.5, -0.5], hv)
    incoming = hb.PureState(s * np.array([1, 1j]))
    meter = cfg.meter_config().build(obs)
    prep = mt.prepare_by_measurement(incoming, obs, meter, "H")
    after = prep.conditional
    checks.close("beam_splitter.branch_probability", prep.probability, 0.5, 1e-3)
    checks.close("beam_splitter.diagonal_distribution", after.born(diagonal), [0.5, 0.5], 1e-3)
    checks.close("beam_splitter.circular_distribution", after.born(circular), [0.5, 0.5], 1e-3)
    joint = eg.prepared_joint(incoming.density(), obs, diagonal)
    expected = np.abs(diagonal.columns.conj().T @ hv.columns).T ** 2 * incoming.density().born(hv)[:, None]
    checks.close("beam_splitter.ergodic_joint", joint.table, expected, 1e-10)


def _stern_gerlach(cfg: ScenarioConfig, checks: _Checks) -> None:
    z = hb.BasisSet(np.eye(2), ("up", "down"), "Z")
    x = hb.build_basis("fourier", 2, labels=("+x", "-x"))
    sz = hb.Observable([0.5, -0.5], z)
    incoming = x.state("+x")
    meter = cfg.meter_config().build(sz)
    joint = mt.interact(incoming, meter, sz)
    reduced = mt.reduce_system(joint)
    damping = math.exp(-0.5 * (meter.kappa * meter.sigma_p * 1.0) ** 2)
    checks.close("stern_gerlach.residual_coherence", abs(reduced.matrix[0, 1]), 0.5 * damping, 1e-8)
    analytic, _ = eg.phase_average_channel(incoming.density(), sz, meter.phase_distribution())
    checks.close("stern_gerlach.channel_equivalence", reduced.matrix, analytic.matrix, 1e-8)
    bins = mt.readout(joint, mt.default_bin_edges(meter, sz))
    fids, probs = [], []
    for label in sz.labels:
        b = bins[mt.branch_bin(meter, sz, label)]
        probs.append(b.probability)
        fids.append(b.state.fidelity(z.state(label)))
    checks.close("stern_gerlach.branch_probabilities", probs, [0.5, 0.5], 1e-3)
    checks.at_least("stern_gerlach.conditional_fidelity", fids, 0.999)
    up = bins[mt.branch_bin(meter, sz, "up")].state
    checks.close("stern_gerlach.x_distribution_after_up", up.born(x), [0.5, 0.5], 1e-3)


def run_scenario(config: ScenarioConfig) -> RunReport:
    start = time.perf_counter()
    checks = _Checks(config.tolerances)
    if config.scenario == "single-slit":
        _single_slit(config, checks)
    elif config.scenario == "beam-splitter":
        _beam_splitter(config, checks)
    elif config.scenario == "stern-gerlach":
        _stern_gerlach(config, checks)
    else:
        checks.items = run_identity_suite(
            seed=config.seed,
            dim_max=config.dim_max,
            seeds=config.seeds,
            tol_scale=config.tol_scale,
            mc_samples=config.mc_samples,
            overrides=config.tolerances,
        )
    return RunReport(config.to_dict(), checks.items, time.perf_counter() - start)
