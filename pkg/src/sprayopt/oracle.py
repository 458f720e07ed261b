"""Simulated coating process for closed-loop validation.

A fixed one-hidden-layer network (7 tanh units, shipped as versioned JSON
data) maps the 8 model inputs to microhardness and porosity. The simulated
machine adds an internal analytic gun-voltage response with a per-session
equipment offset, and zero-mean Gaussian measurement noise on the two
quality outputs. Weights were generated once from a documented analytic
ground truth (see tools/generate_oracle_weights.py) and are not trained
here.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional, Sequence

import numpy as np

from .acquisition import ConstraintSpec, default_constraints
from .errors import InvalidArgumentError, VersionMismatchError
from .optimizer import EvaluatedExperiment, make_experiment
from .process import ControllableInputs, CostConfig, InputVector

NET_FORMAT = "aps-oracle-net"
NET_VERSION = 1

# The simulated machine's fixed operating envelope (normalization constants
# of the internal voltage response). Matches the default domain bounds.
_ENV_LO = np.array([30.0, 4.0, 450.0, 2.0, 20.0, 90.0])
_ENV_HI = np.array([60.0, 14.0, 750.0, 5.0, 60.0, 150.0])


@dataclass(frozen=True)
class SurrogateNet:
    """8 -> 7 (tanh) -> 2 network with fixed published weights."""

    w1: np.ndarray                 # (7, 8)
    b1: np.ndarray                 # (7,)
    w2: np.ndarray                 # (2, 7)
    b2: np.ndarray                 # (2,)
    activation: str = "tanh"
    version: int = NET_VERSION
    self_test: dict = field(default_factory=dict)
    reachability: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, arr, shape in (("w1", self.w1, (7, 8)), ("b1", self.b1, (7,)),
                                 ("w2", self.w2, (2, 7)), ("b2", self.b2, (2,))):
            a = np.asarray(arr, dtype=float)
            object.__setattr__(self, name, a)
            if a.shape != shape:
                raise InvalidArgumentError(f"{name} must have shape {shape}")
        if self.activation != "tanh":
            raise InvalidArgumentError(
                f"unsupported activation {self.activation!r}")


def forward(net: SurrogateNet, x) -> tuple:
    """Noiseless network outputs (microhardness HV, porosity %) at one
     8-dimensional input."""
    out = forward_batch(net, np.atleast_2d(np.asarray(x, dtype=float)))
    return float(out[0, 0]), float(out[0, 1])


def forward_batch(net: SurrogateNet, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != 8:
        raise InvalidArgumentError(
            f"oracle input must have 8 dimensions, got {X.shape[1]}")
    H = np.tanh(X @ net.w1.T + net.b1)
    return H @ net.w2.T + net.b2


@dataclass(frozen=True)
class NoiseSpec:
    """Measurement-noise standard deviations for the two quality outputs."""

    microhardness_sd: float = 8.45   # HV
    porosity_sd: float = 0.54        # pp

    def __post_init__(self):
        if self.microhardness_sd < 0 or self.porosity_sd < 0:
            raise InvalidArgumentError("noise standard deviations must be >= 0")


@dataclass(frozen=True)
class EquipmentState:
    """Session-constant equipment drift: true voltage offset plus the
    read-out noise of a short ignition experiment."""

    voltage_offset: float = 0.0      # V
    ignition_noise_sd: float = 0.0   # V


def true_voltage(x_c: ControllableInputs) -> float:
    """The machine's internal noiseless voltage response (no offset)."""
    return float(true_voltage_batch(x_c.as_array()[None, :])[0])


def true_voltage_batch(X6: np.ndarray) -> np.ndarray:
    X6 = np.atleast_2d(np.asarray(X6, dtype=float))
    u = (X6 - _ENV_LO) / (_ENV_HI - _ENV_LO)
    up, us, ui, uc = u[:, 0], u[:, 1], u[:, 2], u[:, 3]
    return 55.5 + 8.0 * up + 5.0 * ui - 2.0 * us + 1.2 * uc + 0.8 * up * ui


def session_voltage(x_c: ControllableInputs, state: EquipmentState) -> float:
    return true_voltage(x_c) + state.voltage_offset


def measure(net: SurrogateNet, noise: NoiseSpec, state: EquipmentState,
            x_c: ControllableInputs, powder: str,
            rng: np.random.Generator, *, constraints: ConstraintSpec,
            cost_cfg: CostConfig, session_id: str = "") -> EvaluatedExperiment:
    """Simulate one coating run: compute the session voltage, evaluate the
    network, add measurement noise, and derive feasibility and cost."""
    v = session_voltage(x_c, state)
    x = InputVector(x_c, powder, v)
    h, rho = forward(net, x.flatten())
    h += noise.microhardness_sd * rng.standard_normal()
    rho += noise.porosity_sd * rng.standard_normal()
    measurements = {"microhardness_HV": float(h), "porosity_pct": float(rho)}
    return make_experiment(x, measurements, constraints, cost_cfg, session_id)


def ignite(state: EquipmentState, x_c: ControllableInputs,
           rng: np.random.Generator) -> float:
    """Short ignition experiment: session voltage plus read-out noise."""
    return session_voltage(x_c, state) + \
        state.ignition_noise_sd * rng.standard_normal()


def generate_initialization(net: SurrogateNet, noise: NoiseSpec,
                            design: Sequence[tuple], seed: int, *,
                            constraints: ConstraintSpec, cost_cfg: CostConfig,
                            state: Optional[EquipmentState] = None
                            ) -> list:
    """Measure every design point under the designated baseline session
    (voltage offset 0 unless ``state`` overrides it)."""
    if len(design) == 0:
        raise InvalidArgumentError("initialization design is empty")
    if state is None:
        state = EquipmentState(voltage_offset=0.0)
    rng = np.random.default_rng(seed)
    out = []
    for x_c, powder in design:
        out.append(measure(net, noise, state, x_c, powder, rng,
                           constraints=constraints, cost_cfg=cost_cfg,
                           session_id="init"))
    return out


class SimulatedProcess:
    """Bundles the network, noise, equipment state and problem definition
    into the oracle interface the campaign loop consumes."""

    def __init__(self, net: Optional[SurrogateNet] = None,
                 noise: Optional[NoiseSpec] = None,
                 state: Optional[EquipmentState] = None,
                 constraints: Optional[ConstraintSpec] = None,
                 cost_cfg: Optional[CostConfig] = None):
        self.net = net if net is not None else load_default_net()
        self.noise = noise if noise is not None else NoiseSpec()
        self.state = state if state is not None else EquipmentState()
        self.constraints = constraints if constraints is not None \
            else default_constraints()
        self.cost_cfg = cost_cfg if cost_cfg is not None else CostConfig()

    def measure(self, x_c: ControllableInputs, powder: str,
                rng: np.random.Generator,
                session_id: str = "") -> EvaluatedExperiment:
        return measure(self.net, self.noise, self.state, x_c, powder, rng,
                       constraints=self.constraints, cost_cfg=self.cost_cfg,
                       session_id=session_id)

    def ignite(self, x_c: ControllableInputs,
               rng: np.random.Generator) -> float:
        return ignite(self.state, x_c, rng)

    def generate_initialization(self, design: Sequence[tuple],
                                seed: int) -> list:
        return generate_initialization(
            self.net, self.noise, design, seed,
            constraints=self.constraints, cost_cfg=self.cost_cfg)


# ---------------------------------------------------------------------------
# Shipped data
# ---------------------------------------------------------------------------


def net_from_dict(d: dict) -> SurrogateNet:
    if d.get("format") != NET_FORMAT:
        raise VersionMismatchError(
            f"expected a {NET_FORMAT} document, got {d.get('format')!r}")
    if d.get("version", 0) > NET_VERSION:
        raise VersionMismatchError(
            f"oracle net version {d['version']} requires migration")
    return SurrogateNet(
        np.asarray(d["w1"], dtype=float), np.asarray(d["b1"], dtype=float),
        np.asarray(d["w2"], dtype=float), np.asarray(d["b2"], dtype=float),
        activation=d.get("activation", "tanh"),
        version=int(d.get("version", NET_VERSION)),
        self_test=dict(d.get("self_test", {})),
        reachability=dict(d.get("reachability", {})))


def net_to_dict(net: SurrogateNet) -> dict:
    return {
        "format": NET_FORMAT,
        "version": net.version,
        "activation": net.activation,
        "input_order": ["primary_gas_flow", "secondary_gas_flow",
                        "gun_current", "carrier_gas_flow",
                        "powder_feed_rate", "standoff_distance",
                        "powder_code", "voltage_V"],
        "outputs": ["microhardness_HV", "porosity_pct"],
        "w1": net.w1.tolist(),
        "b1": net.b1.tolist(),
        "w2": net.w2.tolist(),
        "b2": net.b2.tolist(),
        "self_test": net.self_test,
        "reachability": net.reachability,
    }


def load_default_net() -> SurrogateNet:
    text = resources.files("sprayopt").joinpath("_data/oracle_net.json") \
        .read_text(encoding="utf-8")
    return net_from_dict(json.loads(text))


def run_self_test(net: SurrogateNet, tol: float = 1e-10) -> None:
    """Verify the weight file's embedded reference evaluation."""
    st = net.self_test
    if not st:
        raise InvalidArgumentError("net carries no self-test block")
    got = forward(net, np.asarray(st["input"], dtype=float))
    expected = st["expected"]
    if abs(got[0] - expected[0]) > tol or abs(got[1] - expected[1]) > tol:
        raise InvalidArgumentError(
            f"oracle self-test failed: got {got}, expected {expected}")


def load_default_design() -> list:
    """The shipped 86-point initialization design as
    (ControllableInputs, powder) pairs."""
    text = resources.files("sprayopt").joinpath("_data/init_design.csv") \
        .read_text(encoding="utf-8")
    return design_from_csv(text)


def design_from_csv(text: str) -> list:
    out = []
    reader = csv.DictReader(io.StringIO(text))
    for row in reader:
        x_c = ControllableInputs(
            float(row["primary_gas_flow"]), float(row["secondary_gas_flow"]),
            float(row["gun_current"]), float(row["carrier_gas_flow"]),
            float(row["powder_feed_rate"]), float(row["standoff_distance"]))
        out.append((x_c, row["powder"]))
    return out
