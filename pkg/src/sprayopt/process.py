"""Process-domain models: input vectors and bounds, the deterministic
cost index, candidate-grid generation, the voltage model and offset
estimation, and candidate expansion to full model inputs.

The six controllable inputs and their bounds use placeholder units and
ranges declared in :func:`default_bounds`; a campaign can override them
through its JSON configuration.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.stats import qmc

from . import gp
from .errors import InvalidArgumentError, VersionMismatchError

CONTROLLABLE_FIELDS = (
    "primary_gas_flow",
    "secondary_gas_flow",
    "gun_current",
    "carrier_gas_flow",
    "powder_feed_rate",
    "standoff_distance",
)

# Flattened 8-dimensional model-input layout.
IDX_PRIMARY = 0
IDX_SECONDARY = 1
IDX_CURRENT = 2
IDX_CARRIER = 3
IDX_FEED = 4
IDX_STANDOFF = 5
IDX_POWDER = 6
IDX_VOLTAGE = 7
INPUT_DIM = 8

POWDER_CODES = {"A": 0.0, "B": 1.0}

BOUNDS_FORMAT = "domain-bounds"
COST_FORMAT = "cost-config"
CONFIG_VERSION = 1


@dataclass(frozen=True)
class ControllableInputs:
    """The six freely tunable process parameters."""

    primary_gas_flow: float      # NLPM
    secondary_gas_flow: float    # NLPM
    gun_current: float           # A
    carrier_gas_flow: float      # NLPM
    powder_feed_rate: float      # g/min
    standoff_distance: float     # mm

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in CONTROLLABLE_FIELDS])

    @classmethod
    def from_array(cls, a) -> "ControllableInputs":
        a = np.asarray(a, dtype=float).ravel()
        if a.size != 6:
            raise InvalidArgumentError("controllable inputs need 6 values")
        return cls(*(float(v) for v in a))


@dataclass(frozen=True)
class InputVector:
    """Full model input: controllable settings, powder type, gun voltage."""

    controllable: ControllableInputs
    powder: str
    voltage: float

    def __post_init__(self):
        if self.powder not in POWDER_CODES:
            raise InvalidArgumentError(f"unknown powder {self.powder!r}")

    def flatten(self) -> np.ndarray:
        out = np.empty(INPUT_DIM)
        out[:6] = self.controllable.as_array()
        out[IDX_POWDER] = POWDER_CODES[self.powder]
        out[IDX_VOLTAGE] = self.voltage
        return out

    @classmethod
    def from_flat(cls, a) -> "InputVector":
        a = np.asarray(a, dtype=float).ravel()
        if a.size != INPUT_DIM:
            raise InvalidArgumentError("flattened input must have 8 entries")
        powder = "B" if a[IDX_POWDER] >= 0.5 else "A"
        return cls(ControllableInputs.from_array(a[:6]), powder,
                   float(a[IDX_VOLTAGE]))


def controllables_to_array(cands: Sequence[ControllableInputs]) -> np.ndarray:
    return np.array([c.as_array() for c in cands]).reshape(len(cands), 6)


@dataclass(frozen=True)
class DomainBounds:
    """Per-dimension [min, max] bounds of the controllable domain plus the
    voltage range used for model-input scaling."""

    lows: np.ndarray   # (6,)
    highs: np.ndarray  # (6,)
    voltage_low: float
    voltage_high: float

    def __post_init__(self):
        lo = np.asarray(self.lows, dtype=float)
        hi = np.asarray(self.highs, dtype=float)
        object.__setattr__(self, "lows", lo)
        object.__setattr__(self, "highs", hi)
        if lo.shape != (6,) or hi.shape != (6,):
            raise InvalidArgumentError("bounds must cover the 6 controllables")
        if not np.all(hi > lo):
            raise InvalidArgumentError("each bound must satisfy max > min")
        if not self.voltage_high > self.voltage_low:
            raise InvalidArgumentError("voltage bounds must satisfy max > min")

    def contains(self, x_c: ControllableInputs) -> bool:
        a = x_c.as_array()
        return bool(np.all(a >= self.lows) and np.all(a <= self.highs))

    def model_input_bounds(self) -> tuple:
        """(lo, hi) arrays for the flattened 8-dim model input."""
        lo = np.concatenate([self.lows, [0.0, self.voltage_low]])
        hi = np.concatenate([self.highs, [1.0, self.voltage_high]])
        return lo, hi

    def controllable_input_bounds(self) -> tuple:
        """(lo, hi) arrays for the 7-dim (controllables + powder) input."""
        lo = np.concatenate([self.lows, [0.0]])
        hi = np.concatenate([self.highs, [1.0]])
        return lo, hi

    def to_dict(self) -> dict:
        return {
            "format": BOUNDS_FORMAT,
            "version": CONFIG_VERSION,
            "controllable": {
                f: [self.lows[i], self.highs[i]]
                for i, f in enumerate(CONTROLLABLE_FIELDS)
            },
            "voltage": [self.voltage_low, self.voltage_high],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DomainBounds":
        _check_doc(d, BOUNDS_FORMAT)
        lows = [d["controllable"][f][0] for f in CONTROLLABLE_FIELDS]
        highs = [d["controllable"][f][1] for f in CONTROLLABLE_FIELDS]
        return cls(np.array(lows), np.array(highs),
                   float(d["voltage"][0]), float(d["voltage"][1]))


def _check_doc(d: dict, fmt: str) -> None:
    if d.get("format") != fmt:
        raise VersionMismatchError(
            f"expected a {fmt} document, got {d.get('format')!r}")
    if d.get("version", 0) > CONFIG_VERSION:
        raise VersionMismatchError(
            f"{fmt} version {d['version']} requires migration")


def default_bounds() -> DomainBounds:
    """Placeholder domain: realistic magnitudes, not vendor values."""
    return DomainBounds(
        lows=np.array([30.0, 4.0, 450.0, 2.0, 20.0, 90.0]),
        highs=np.array([60.0, 14.0, 750.0, 5.0, 60.0, 150.0]),
        voltage_low=50.0,
        voltage_high=75.0,
    )


# ---------------------------------------------------------------------------
# Cost (gun stress) surrogate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CostConfig:
    """Weights and reference values of the documented gun-stress surrogate

        S(x_c) = w_current * (I / I_ref)^2
               + w_primary * (Q_p_ref / Q_primary)
               + w_secondary * (Q_s_ref / Q_secondary)

    which is strictly increasing in gun current and strictly decreasing in
    both gas flows. At the reference point the index equals the sum of the
    weights (100 for the default configuration).
    """

    w_current: float = 55.0
    w_primary: float = 25.0
    w_secondary: float = 20.0
    current_ref: float = 550.0
    primary_ref: float = 45.0
    secondary_ref: float = 9.0
    version: int = CONFIG_VERSION

    def __post_init__(self):
        for w in (self.w_current, self.w_primary, self.w_secondary):
            if w < 0:
                raise InvalidArgumentError("cost weights must be >= 0")
        for ref in (self.current_ref, self.primary_ref, self.secondary_ref):
            if not ref > 0:
                raise InvalidArgumentError("cost reference values must be > 0")

    def to_dict(self) -> dict:
        return {
            "format": COST_FORMAT,
            "version": self.version,
            "weights": {"current": self.w_current, "primary": self.w_primary,
                        "secondary": self.w_secondary},
            "references": {"current": self.current_ref,
                           "primary": self.primary_ref,
                           "secondary": self.secondary_ref},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CostConfig":
        _check_doc(d, COST_FORMAT)
        return cls(
            w_current=float(d["weights"]["current"]),
            w_primary=float(d["weights"]["primary"]),
            w_secondary=float(d["weights"]["secondary"]),
            current_ref=float(d["references"]["current"]),
            primary_ref=float(d["references"]["primary"]),
            secondary_ref=float(d["references"]["secondary"]),
        )


def stress_index(x_c: ControllableInputs, cfg: CostConfig,
                 bounds: Optional[DomainBounds] = None) -> float:
    """Deterministic cost of running the gun at ``x_c``.

    When ``bounds`` is given, out-of-domain settings raise
    InvalidArgumentError.
    """
    if bounds is not None and not bounds.contains(x_c):
        raise InvalidArgumentError(
            f"controllable inputs {x_c} fall outside the configured domain")
    return float(stress_index_batch(x_c.as_array()[None, :], cfg)[0])


def stress_index_batch(X6: np.ndarray, cfg: CostConfig) -> np.ndarray:
    """Vectorized stress index over rows of controllable inputs."""
    X6 = np.atleast_2d(np.asarray(X6, dtype=float))
    cur = X6[:, IDX_CURRENT]
    qp = X6[:, IDX_PRIMARY]
    qs = X6[:, IDX_SECONDARY]
    if np.any(qp <= 0) or np.any(qs <= 0):
        raise InvalidArgumentError("gas flows must be positive")
    return (cfg.w_current * (cur / cfg.current_ref) ** 2
            + cfg.w_primary * (cfg.primary_ref / qp)
            + cfg.w_secondary * (cfg.secondary_ref / qs))


# ---------------------------------------------------------------------------
# Candidate generation and expansion
# ---------------------------------------------------------------------------


def generate_candidates(bounds: DomainBounds, count: int = 20000,
                        scheme: str = "sobol", seed: int = 0,
                        levels: Optional[Sequence[int]] = None) -> list:
    """Space-filling candidate set over the controllable domain.

    ``scheme="sobol"`` (default) draws a scrambled low-discrepancy
    sequence, deterministic for a fixed seed. ``scheme="levels"`` builds a
    full-factorial grid from ``levels`` points per dimension (``count`` is
    ignored). ``count == 1`` degenerates to the domain midpoint.
    """
    if count < 1:
        raise InvalidArgumentError("count must be >= 1")
    lo, hi = bounds.lows, bounds.highs
    if scheme == "sobol":
        if count == 1:
            mid = (lo + hi) / 2.0
            return [ControllableInputs.from_array(mid)]
        sampler = qmc.Sobol(d=6, scramble=True, seed=seed)
        u = sampler.random(count)
        X = lo + u * (hi - lo)
    elif scheme == "levels":
        if levels is None or len(levels) != 6:
            raise InvalidArgumentError("levels scheme needs 6 level counts")
        axes = [np.linspace(lo[i], hi[i], int(levels[i])) if levels[i] > 1
                else np.array([(lo[i] + hi[i]) / 2.0]) for i in range(6)]
        grids = np.meshgrid(*axes, indexing="ij")
        X = np.stack([g.ravel() for g in grids], axis=1)
    else:
        raise InvalidArgumentError(f"unknown candidate scheme {scheme!r}")
    return [ControllableInputs.from_array(row) for row in X]


# ---------------------------------------------------------------------------
# Voltage model and session-offset estimation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VoltageModel:
    """GP mapping (controllable inputs, powder) -> expected gun voltage."""

    model: gp.GPModel

    def predict(self, x_c: ControllableInputs, powder: str) -> float:
        return float(self.predict_batch([x_c], powder)[0])

    def predict_batch(self, cands: Sequence[ControllableInputs],
                      powder: str) -> np.ndarray:
        X6 = controllables_to_array(cands)
        code = POWDER_CODES[powder]
        X7 = np.hstack([X6, np.full((X6.shape[0], 1), code)])
        means, _ = gp.posterior_batch(self.model, X7)
        return means


def fit_voltage_model(inputs: Sequence[tuple], voltages: Sequence[float],
                      bounds: DomainBounds, seed: Optional[int] = None,
                      restarts: int = 2,
                      prior: Optional[gp.HyperPrior] = None) -> VoltageModel:
    """Fit the voltage model on (ControllableInputs, powder) pairs.

    Zero-mean SE-ARD GP over the six controllables plus the powder code,
    lightly MAP-regularized by default (small ignition histories).
    """
    if len(inputs) < 2:
        raise InvalidArgumentError("voltage model needs at least 2 entries")
    if prior is None:
        prior = gp.default_prior()
    rows = []
    for x_c, powder in inputs:
        rows.append(np.concatenate([x_c.as_array(), [POWDER_CODES[powder]]]))
    data = gp.Dataset(np.array(rows), np.asarray(voltages, dtype=float))
    model = gp.fit(data, None, restarts=restarts, seed=seed,
                   input_bounds=bounds.controllable_input_bounds(),
                   prior=prior)
    return VoltageModel(model)


def estimate_offset(model: VoltageModel, x_c_b: ControllableInputs,
                    powder: str, v_b) -> float:
    """Session voltage offset: measured ignition voltage minus the model
    prediction at the ignition settings. Sequences of repeated ignition
    readings are averaged first."""
    v = float(np.mean(np.asarray(v_b, dtype=float)))
    return v - model.predict(x_c_b, powder)


def expand_candidates(cands: Sequence[ControllableInputs], powder: str,
                      model: VoltageModel, delta_b: float) -> list:
    """Attach predicted session voltage (model prediction + offset) and the
    campaign powder to each candidate, preserving order."""
    volts = model.predict_batch(cands, powder) + delta_b
    return [InputVector(c, powder, float(v)) for c, v in zip(cands, volts)]


def candidates_to_csv(cands: Sequence[ControllableInputs]) -> str:
    """One row per candidate, columns in ControllableInputs field order."""
    lines = [",".join(CONTROLLABLE_FIELDS)]
    for c in cands:
        lines.append(",".join(repr(float(v)) for v in c.as_array()))
    return "\n".join(lines) + "\n"


def candidates_from_csv(text: str) -> list:
    import csv
    import io

    out = []
    for row in csv.DictReader(io.StringIO(text)):
        out.append(ControllableInputs(
            *(float(row[f]) for f in CONTROLLABLE_FIELDS)))
    return out


def bounds_to_json(bounds: DomainBounds) -> str:
    return json.dumps(bounds.to_dict(), sort_keys=True)


def bounds_from_json(s: str) -> DomainBounds:
    return DomainBounds.from_dict(json.loads(s))
