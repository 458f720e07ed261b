"""Parallel batch proposal with virtual data-set expansion, termination
checking, incumbent tracking, and the closed simulated-campaign loop.

A batch of n experiments is assembled sequentially: constraint models are
fitted once per batch on the true history, the pool is scored, a winner
is selected, and the posterior is conditioned on the winner's predicted
outputs (a fantasy point) before the next selection. The true history is
never mutated; fantasy conditioning runs on cached factorizations through
rank-1 Cholesky extension, so a 20000-candidate pool stays cheap.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from . import acquisition as acq
from . import gp
from . import process
from .acquisition import ConstraintSpec, Incumbent
from .errors import InvalidArgumentError
from .process import CostConfig, DomainBounds, InputVector

TRACE_FORMAT = "campaign-trace"
TRACE_VERSION = 1


@dataclass(frozen=True)
class EvaluatedExperiment:
    """One completed experiment: inputs, measured quality outputs, derived
    feasibility and deterministic cost, and the session it was run in."""

    x: InputVector
    measurements: dict
    feasible: bool
    cost: float
    session_id: str = ""

    def to_dict(self) -> dict:
        return {
            "x": self.x.flatten().tolist(),
            "powder": self.x.powder,
            "measurements": {k: self.measurements[k]
                             for k in sorted(self.measurements)},
            "feasible": self.feasible,
            "cost": self.cost,
            "session_id": self.session_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvaluatedExperiment":
        return cls(InputVector.from_flat(np.asarray(d["x"], dtype=float)),
                   dict(d["measurements"]), bool(d["feasible"]),
                   float(d["cost"]), d.get("session_id", ""))


def make_experiment(x: InputVector, measurements: dict,
                    constraints: ConstraintSpec, cost_cfg: CostConfig,
                    session_id: str = "") -> EvaluatedExperiment:
    """Derive feasibility (all constrained outputs inside their bands) and
    cost, then assemble the record."""
    values = [measurements[name] for name in constraints.names]
    feasible = constraints.is_feasible(values)
    cost = process.stress_index(x.controllable, cost_cfg)
    return EvaluatedExperiment(x, dict(measurements), feasible, cost, session_id)


@dataclass(frozen=True)
class OptimizerConfig:
    batch_size: int = 5
    pi: float = 0.4
    epsilon: float = 0.05
    max_batches: int = 20

    def __post_init__(self):
        if self.batch_size < 1:
            raise InvalidArgumentError("batch_size must be >= 1")
        if not 0.0 <= self.pi <= 1.0:
            raise InvalidArgumentError("pi must lie in [0, 1]")
        if not self.epsilon > 0:
            raise InvalidArgumentError("epsilon must be > 0")
        if self.max_batches < 0:
            raise InvalidArgumentError("max_batches must be >= 0")

    def to_dict(self) -> dict:
        return {"batch_size": self.batch_size, "pi": self.pi,
                "epsilon": self.epsilon, "max_batches": self.max_batches}


@dataclass(frozen=True)
class ModelConfig:
    """Everything propose_batch needs besides the history and the pool:
    domain bounds (for input scaling), constraint bands, cost surrogate,
    and GP fitting options."""

    bounds: DomainBounds
    constraints: ConstraintSpec
    cost: CostConfig
    hybrid_mean_output: Optional[str] = "microhardness_HV"
    restarts: int = 2
    maxiter: int = 60
    fit_seed: int = 0
    fantasy: str = "mean"            # "mean" | "sample"
    refit_on_virtual: bool = False   # literal inner-loop re-modeling
    restrict_hfi_to_confident: bool = False
    fixed_params: Optional[dict] = None  # name -> (KernelParams, mean or None)
    # weak MAP regularization keeps small-history fits from collapsing into
    # overconfident degenerate optima
    prior: Optional[gp.HyperPrior] = field(default_factory=gp.default_prior)

    def mean_config_for(self, name: str):
        if name == self.hybrid_mean_output:
            return gp.microhardness_mean_config()
        return None


@dataclass(frozen=True)
class ProposedCandidate:
    x: InputVector
    pool_index: int
    cost: float
    improvement: float
    fp: float
    alpha_fip: float
    alpha_hfi: float
    acquisition_used: str
    constraint_means: dict
    constraint_sds: dict

    def to_dict(self) -> dict:
        return {
            "x": self.x.flatten().tolist(),
            "powder": self.x.powder,
            "pool_index": self.pool_index,
            "cost": self.cost,
            "improvement": self.improvement,
            "fp": self.fp,
            "alpha_fip": self.alpha_fip,
            "alpha_hfi": self.alpha_hfi,
            "acquisition_used": self.acquisition_used,
            "constraint_means": {k: self.constraint_means[k]
                                 for k in sorted(self.constraint_means)},
            "constraint_sds": {k: self.constraint_sds[k]
                               for k in sorted(self.constraint_sds)},
        }


@dataclass(frozen=True)
class BatchProposal:
    candidates: tuple
    fip_values: tuple
    incumbent: Incumbent
    any_feasible_known: bool

    @property
    def size(self) -> int:
        return len(self.candidates)

    def to_dict(self) -> dict:
        return {
            "candidates": [c.to_dict() for c in self.candidates],
            "fip_values": list(self.fip_values),
            "incumbent_cost": self.incumbent.cost,
            "any_feasible_known": self.any_feasible_known,
        }


def best_feasible(history: Sequence[EvaluatedExperiment],
                  fallback_cost: float) -> Incumbent:
    """Feasible experiment with minimal cost; earliest wins ties. With no
    feasible entry, an absent incumbent carrying ``fallback_cost`` (one
    above the pool's maximum cost in the standard workflow)."""
    best_idx = None
    best_cost = math.inf
    for i, e in enumerate(history):
        if e.feasible and e.cost < best_cost:
            best_idx, best_cost = i, e.cost
    if best_idx is None:
        return Incumbent(None, float(fallback_cost))
    return Incumbent(history[best_idx].x, best_cost, best_idx)


def check_termination(proposal: BatchProposal, config: OptimizerConfig) -> bool:
    """At least half of the batch has its feasible-improvement probability
    below the termination threshold."""
    fips = proposal.fip_values
    below = sum(1 for v in fips if v < config.epsilon)
    return below >= math.ceil(len(fips) / 2)


class SequentialPosterior:
    """GP posterior over a fixed candidate pool supporting fantasy-point
    conditioning without changing hyperparameters.

    Maintains the forward-solved cross-covariance V = L^-1 k(X, pool) and
    whitened residual c = L^-1 r; conditioning on a pool member appends one
    row to both in O(p * N) and updates pooled means/variances in place.
    """

    def __init__(self, model: gp.GPModel, X_pool: np.ndarray):
        self.model = model
        self.U_pool = model.scale(X_pool)
        k = model.kernel
        self.noise = k.noise_variance + model.jitter
        prior_mean = self.U_pool @ model.mean.coefficients if model.mean is not None \
            else np.zeros(self.U_pool.shape[0])
        self._prior_mean_pool = prior_mean
        if model.data.size == 0:
            self.V = np.zeros((0, self.U_pool.shape[0]))
            self.c = np.zeros(0)
        else:
            K_star = gp.kernel_matrix(model.scaled_inputs, self.U_pool, k)
            self.V = solve_triangular(model.chol, K_star, lower=True,
                                      check_finite=False)
            self.c = solve_triangular(model.chol, model.residual, lower=True,
                                      check_finite=False)
        self.mean_z = prior_mean + self.V.T @ self.c
        self.var_z = np.maximum(k.signal_variance - np.sum(self.V * self.V,
                                                           axis=0), 0.0)

    def pool_posterior_raw(self) -> tuple:
        """Current latent means and standard deviations in raw units."""
        m = self.model
        return (m.y_mean + m.y_std * self.mean_z,
                m.y_std * np.sqrt(self.var_z))

    def predictive_mean_raw(self, j: int) -> float:
        m = self.model
        return float(m.y_mean + m.y_std * self.mean_z[j])

    def sample_raw(self, j: int, rng: np.random.Generator) -> float:
        m = self.model
        sd = math.sqrt(max(self.var_z[j], 0.0))
        return float(m.y_mean + m.y_std * (self.mean_z[j] + sd * rng.standard_normal()))

    def condition_on(self, j: int, y_raw: float) -> None:
        """Append pool member j with observation y_raw as a fantasy point."""
        m = self.model
        k = m.kernel
        w = self.V[:, j]
        d2 = k.signal_variance + self.noise - float(w @ w)
        d = math.sqrt(max(d2, 1e-12 * k.signal_variance))
        k_row = gp.kernel_matrix(self.U_pool[j:j + 1], self.U_pool, k)[0]
        nu = (k_row - w @ self.V) / d
        z_star = (y_raw - m.y_mean) / m.y_std
        c_star = (z_star - self._prior_mean_pool[j] - float(w @ self.c)) / d
        self.mean_z = self.mean_z + nu * c_star
        self.var_z = np.maximum(self.var_z - nu * nu, 0.0)
        self.V = np.vstack([self.V, nu[None, :]])
        self.c = np.append(self.c, c_star)


def _history_arrays(history: Sequence[EvaluatedExperiment],
                    constraints: ConstraintSpec) -> tuple:
    X = np.array([e.x.flatten() for e in history])
    targets = {}
    for name in constraints.names:
        targets[name] = np.array([e.measurements[name] for e in history])
    return X, targets


def fit_constraint_models(history: Sequence[EvaluatedExperiment],
                          model_config: ModelConfig,
                          data_override: Optional[dict] = None) -> dict:
    """One GP per constrained output, fitted on the history (or on
    ``data_override`` Datasets during literal virtual re-modeling)."""
    constraints = model_config.constraints
    X, targets = _history_arrays(history, constraints)
    bounds8 = model_config.bounds.model_input_bounds()
    models = {}
    for name in constraints.names:
        data = (data_override[name] if data_override is not None
                else gp.Dataset(X, targets[name]))
        if data.size < 2:
            raise InvalidArgumentError(
                f"need at least 2 evaluated points for output {name!r}")
        if model_config.fixed_params is not None and name in model_config.fixed_params:
            kernel, mean = model_config.fixed_params[name]
            # standardization constants always come from the true history so
            # virtual re-modeling is an exact identity under fixed params
            y_mean = float(np.mean(targets[name]))
            y_std = float(np.std(targets[name])) or 1.0
            models[name] = gp.GPModel.build(kernel, mean, data, bounds8,
                                            y_mean, y_std)
        else:
            models[name] = gp.fit(
                data, model_config.mean_config_for(name), restarts=model_config.restarts,
                input_bounds=bounds8, seed=model_config.fit_seed,
                maxiter=model_config.maxiter, prior=model_config.prior)
    return models


def propose_batch(history: Sequence[EvaluatedExperiment],
                  pool: Sequence[InputVector], config: OptimizerConfig,
                  model_config: ModelConfig,
                  rng: Optional[np.random.Generator] = None) -> BatchProposal:
    """Select a batch of ``config.batch_size`` distinct pool members.

    Improvement is computed once per batch from the current incumbent;
    constraint hyperparameters are fitted once on the true history and the
    posterior is then conditioned on each winner's fantasy outputs before
    the next selection (``model_config.refit_on_virtual`` switches to the
    literal re-modeling of the virtual set at every inner step). The
    history is never mutated and no candidate is selected twice.
    """
    n = config.batch_size
    if len(pool) == 0:
        raise InvalidArgumentError("candidate pool is empty")
    X_pool = np.array([x.flatten() for x in pool])
    X6_hist = {tuple(e.x.controllable.as_array()) for e in history}
    eligible = np.array([tuple(r[:6]) not in X6_hist for r in X_pool])
    if int(eligible.sum()) < n:
        raise InvalidArgumentError(
            f"pool has {int(eligible.sum())} unevaluated candidates, "
            f"need {n}")
    costs = process.stress_index_batch(X_pool[:, :6], model_config.cost)
    incumbent = best_feasible(history, fallback_cost=float(np.max(costs)) + 1.0)
    improvements = acq.improvement_batch(costs, incumbent)

    models = fit_constraint_models(history, model_config)
    posteriors = {name: SequentialPosterior(models[name], X_pool)
                  for name in model_config.constraints.names}
    virtual = None
    if model_config.refit_on_virtual:
        X_hist, targets = _history_arrays(history, model_config.constraints)
        virtual = {"X": X_hist, "targets": {k: v.copy() for k, v in targets.items()}}
    if rng is None:
        rng = np.random.default_rng(model_config.fit_seed)

    names = model_config.constraints.names
    chosen = []
    fip_chosen = []
    for i in range(n):
        mean_rows, sd_rows = [], []
        for name in names:
            mu, sd = posteriors[name].pool_posterior_raw()
            mean_rows.append(mu)
            sd_rows.append(sd)
        fp = acq.feasibility_probability_batch(
            np.array(mean_rows), np.array(sd_rows), model_config.constraints)
        a_fip = np.where(improvements > 0, fp, 0.0)
        a_hfi = (fp - config.pi) * improvements
        j, used = acq.select_index(
            a_fip, a_hfi, fp, costs, incumbent.present, config.pi,
            restrict_hfi_to_confident=model_config.restrict_hfi_to_confident,
            mask=eligible)
        eligible[j] = False
        chosen.append(ProposedCandidate(
            x=pool[j], pool_index=j, cost=float(costs[j]),
            improvement=float(improvements[j]), fp=float(fp[j]),
            alpha_fip=float(a_fip[j]), alpha_hfi=float(a_hfi[j]),
            acquisition_used=used,
            constraint_means={name: float(mean_rows[k][j])
                              for k, name in enumerate(names)},
            constraint_sds={name: float(sd_rows[k][j])
                            for k, name in enumerate(names)}))
        fip_chosen.append(float(a_fip[j]))
        if i == n - 1:
            break
        for name in names:
            post = posteriors[name]
            if model_config.fantasy == "sample":
                y_fantasy = post.sample_raw(j, rng)
            else:
                y_fantasy = post.predictive_mean_raw(j)
            if virtual is not None:
                virtual["targets"][name] = np.append(virtual["targets"][name],
                                                     y_fantasy)
            else:
                post.condition_on(j, y_fantasy)
        if virtual is not None:
            virtual["X"] = np.vstack([virtual["X"], X_pool[j]])
            data_override = {name: gp.Dataset(virtual["X"], virtual["targets"][name])
                             for name in names}
            models = fit_constraint_models(history, model_config,
                                           data_override=data_override)
            posteriors = {name: SequentialPosterior(models[name], X_pool)
                          for name in names}

    return BatchProposal(tuple(chosen), tuple(fip_chosen), incumbent,
                         incumbent.present)


# ---------------------------------------------------------------------------
# Simulated closed-loop campaign
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BatchRecord:
    proposal: BatchProposal
    results: tuple  # EvaluatedExperiment per non-dropped candidate
    incumbent_after: Incumbent
    terminated: bool

    def to_dict(self) -> dict:
        return {
            "proposal": self.proposal.to_dict(),
            "results": [e.to_dict() for e in self.results],
            "incumbent_cost_after": self.incumbent_after.cost,
            "incumbent_present_after": self.incumbent_after.present,
            "terminated": self.terminated,
        }


@dataclass(frozen=True)
class CampaignTrace:
    seed: int
    config: OptimizerConfig
    delta_b: float
    initial_incumbent: Incumbent
    batches: tuple
    final_incumbent: Incumbent
    terminated: bool

    @property
    def stopping_batch(self) -> Optional[int]:
        return len(self.batches) if self.terminated else None

    @property
    def evaluations(self) -> int:
        return sum(len(b.results) for b in self.batches)

    def incumbent_costs(self) -> list:
        return [b.incumbent_after.cost for b in self.batches]

    def to_dict(self) -> dict:
        return {
            "format": TRACE_FORMAT,
            "version": TRACE_VERSION,
            "seed": self.seed,
            "config": self.config.to_dict(),
            "delta_b": self.delta_b,
            "initial_incumbent_cost": self.initial_incumbent.cost,
            "initial_incumbent_present": self.initial_incumbent.present,
            "batches": [b.to_dict() for b in self.batches],
            "final_incumbent_cost": self.final_incumbent.cost,
            "final_incumbent_present": self.final_incumbent.present,
            "terminated": self.terminated,
            "stopping_batch": self.stopping_batch,
            "evaluations": self.evaluations,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)


def trace_csv_rows(trace: CampaignTrace) -> list:
    """Flatten a trace into one row per proposed candidate (analysis CSV)."""
    rows = []
    for b_i, batch in enumerate(trace.batches, start=1):
        results_by_pool = {}
        for e in batch.results:
            results_by_pool[tuple(e.x.controllable.as_array())] = e
        for c_i, cand in enumerate(batch.proposal.candidates):
            e = results_by_pool.get(tuple(cand.x.controllable.as_array()))
            row = {
                "batch": b_i,
                "candidate": c_i,
                "acquisition_used": cand.acquisition_used,
                "fp": cand.fp,
                "improvement": cand.improvement,
                "alpha_fip": cand.alpha_fip,
                "alpha_hfi": cand.alpha_hfi,
                "predicted_voltage_V": cand.x.voltage,
                "cost": cand.cost,
                "incumbent_cost_after": batch.incumbent_after.cost,
                "terminated": batch.terminated,
            }
            for f in process.CONTROLLABLE_FIELDS:
                row[f] = getattr(cand.x.controllable, f)
            for name, mu in cand.constraint_means.items():
                row[f"pred_{name}_mean"] = mu
                row[f"pred_{name}_sd"] = cand.constraint_sds[name]
            if e is not None:
                for name, v in e.measurements.items():
                    row[f"measured_{name}"] = v
                row["feasible"] = e.feasible
                row["measured_voltage_V"] = e.x.voltage
            rows.append(row)
    return rows


def trace_experiments(trace: CampaignTrace) -> list:
    """All evaluated experiments of a trace, flat, in evaluation order."""
    out = []
    for batch in trace.batches:
        out.extend(batch.results)
    return out


def run_simulated_campaign(initial: Sequence[EvaluatedExperiment], oracle,
                           config: OptimizerConfig, model_config: ModelConfig,
                           seed: int = 0, *, candidate_count: int = 20000,
                           powder: str = "A", ignition_index: int = 0,
                           ignition_repeats: int = 1) -> CampaignTrace:
    """Closed loop against a simulated process: fit the voltage model,
    estimate the session offset from one ignition, expand a fresh candidate
    grid, then alternate batch proposal and simulated evaluation until the
    termination rule fires or ``config.max_batches`` is reached.

    ``oracle`` must provide ``ignite(x_c, rng) -> float`` and
    ``measure(x_c, powder, rng, session_id) -> EvaluatedExperiment``.
    """
    ss = np.random.SeedSequence(seed)
    rng_ignite, rng_measure, rng_fit = (np.random.default_rng(s)
                                        for s in ss.spawn(3))
    history = list(initial)
    if ignition_index >= len(history):
        raise InvalidArgumentError("ignition_index outside the initial set")

    v_model = process.fit_voltage_model(
        [(e.x.controllable, e.x.powder) for e in history],
        [e.x.voltage for e in history], model_config.bounds,
        seed=seed)
    x_c_b = history[ignition_index].x.controllable
    v_readings = [oracle.ignite(x_c_b, rng_ignite)
                  for _ in range(max(1, ignition_repeats))]
    delta_b = process.estimate_offset(v_model, x_c_b, powder, v_readings)

    cands = process.generate_candidates(model_config.bounds, candidate_count,
                                        seed=seed)
    pool = process.expand_candidates(cands, powder, v_model, delta_b)
    active = list(range(len(pool)))

    costs_all = process.stress_index_batch(
        process.controllables_to_array(cands), model_config.cost)
    fallback = float(np.max(costs_all)) + 1.0
    initial_incumbent = best_feasible(history, fallback)

    batches = []
    terminated = False
    for b_i in range(config.max_batches):
        batch_cfg = replace(model_config,
                            fit_seed=int(rng_fit.integers(0, 2 ** 31 - 1)))
        sub_pool = [pool[i] for i in active]
        proposal = propose_batch(history, sub_pool, config, batch_cfg,
                                 rng=rng_fit)
        session_id = f"sim-s1-b{b_i + 1}"
        results = []
        for cand in proposal.candidates:
            e = oracle.measure(cand.x.controllable, powder, rng_measure,
                               session_id=session_id)
            results.append(e)
        history.extend(results)
        taken = {c.pool_index for c in proposal.candidates}
        active = [i for k, i in enumerate(active) if k not in taken]
        terminated = check_termination(proposal, config)
        batches.append(BatchRecord(proposal, tuple(results),
                                   best_feasible(history, fallback),
                                   terminated))
        if terminated:
            break

    return CampaignTrace(seed, config, float(delta_b), initial_incumbent,
                         tuple(batches), best_feasible(history, fallback),
                         terminated)
