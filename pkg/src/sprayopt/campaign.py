"""Persistent human-in-the-loop campaign management.

A campaign alternates through the phases NeedsIgnition -> ReadyToPropose
-> AwaitingResults -> {ReadyToPropose, Terminated}; an explicit new-session
request returns to NeedsIgnition and the operator can finish a campaign
early at any point. History is append-only, every entry is tagged with the
session it was measured in, and the whole state round-trips through a
versioned JSON document so a campaign can be resumed bit-identically.

Measurement results arrive as CSV rows (one per pending candidate); rows
are validated individually, duplicates are detected by (batch id,
candidate index), and a batch finalizes only once every candidate has
either a result or an explicit dropped flag.
"""

from __future__ import annotations

import copy
import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import optimizer, process
from .acquisition import ConstraintSpec
from .errors import InvalidArgumentError, PhaseError, VersionMismatchError
from .optimizer import (BatchProposal, EvaluatedExperiment, ModelConfig,
                        OptimizerConfig, best_feasible, check_termination,
                        make_experiment, propose_batch)
from .process import (CONTROLLABLE_FIELDS, ControllableInputs, CostConfig,
                      DomainBounds, InputVector)

CAMPAIGN_FORMAT = "campaign"
CAMPAIGN_VERSION = 1

PHASE_NEEDS_IGNITION = "NeedsIgnition"
PHASE_READY = "ReadyToPropose"
PHASE_AWAITING = "AwaitingResults"
PHASE_TERMINATED = "Terminated"

RESULTS_COLUMNS = ("batch_id", "candidate_index", "microhardness_HV",
                   "porosity_pct", "application_rate",
                   "deposition_efficiency_pct", "measured_voltage_V",
                   "dropped_flag")
PROPOSAL_COLUMNS = ("candidate_index",) + CONTROLLABLE_FIELDS + (
    "predicted_voltage_V", "fp", "improvement", "alpha", "acquisition_used")


@dataclass(frozen=True)
class CampaignConfig:
    bounds: DomainBounds
    constraints: ConstraintSpec
    cost: CostConfig
    optimizer: OptimizerConfig
    candidate_count: int = 20000
    powder: str = "A"
    seed: int = 0
    restarts: int = 2
    maxiter: int = 60

    def model_config(self, fit_seed: int) -> ModelConfig:
        return ModelConfig(bounds=self.bounds, constraints=self.constraints,
                           cost=self.cost, restarts=self.restarts,
                           maxiter=self.maxiter, fit_seed=fit_seed)

    def to_dict(self) -> dict:
        return {
            "bounds": self.bounds.to_dict(),
            "constraints": self.constraints.to_dict(),
            "cost": self.cost.to_dict(),
            "optimizer": self.optimizer.to_dict(),
            "candidate_count": self.candidate_count,
            "powder": self.powder,
            "seed": self.seed,
            "restarts": self.restarts,
            "maxiter": self.maxiter,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CampaignConfig":
        return cls(
            bounds=DomainBounds.from_dict(d["bounds"]),
            constraints=ConstraintSpec.from_dict(d["constraints"]),
            cost=CostConfig.from_dict(d["cost"]),
            optimizer=OptimizerConfig(**d["optimizer"]),
            candidate_count=int(d["candidate_count"]),
            powder=d["powder"],
            seed=int(d["seed"]),
            restarts=int(d.get("restarts", 2)),
            maxiter=int(d.get("maxiter", 60)),
        )


@dataclass
class SessionRecord:
    session_id: str
    delta_b: float
    ignition_settings: ControllableInputs
    ignition_voltages: tuple
    history_size_at_ignition: int

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "delta_b": self.delta_b,
            "ignition_settings": self.ignition_settings.as_array().tolist(),
            "ignition_voltages": list(self.ignition_voltages),
            "history_size_at_ignition": self.history_size_at_ignition,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SessionRecord":
        return cls(d["session_id"], float(d["delta_b"]),
                   ControllableInputs.from_array(d["ignition_settings"]),
                   tuple(float(v) for v in d["ignition_voltages"]),
                   int(d["history_size_at_ignition"]))


@dataclass
class PendingBatch:
    batch_id: str
    proposal: BatchProposal
    received: dict = field(default_factory=dict)  # candidate idx -> experiment
    dropped: set = field(default_factory=set)

    @property
    def outstanding(self) -> list:
        n = self.proposal.size
        return [i for i in range(n)
                if i not in self.received and i not in self.dropped]

    def to_dict(self) -> dict:
        return {
            "batch_id": self.batch_id,
            "proposal": self.proposal.to_dict(),
            "received": {str(i): e.to_dict() for i, e in self.received.items()},
            "dropped": sorted(self.dropped),
        }


def _proposal_from_dict(d: dict) -> BatchProposal:
    from .acquisition import Incumbent
    cands = []
    for c in d["candidates"]:
        cands.append(optimizer.ProposedCandidate(
            x=InputVector.from_flat(np.asarray(c["x"], dtype=float)),
            pool_index=int(c["pool_index"]), cost=float(c["cost"]),
            improvement=float(c["improvement"]), fp=float(c["fp"]),
            alpha_fip=float(c["alpha_fip"]), alpha_hfi=float(c["alpha_hfi"]),
            acquisition_used=c["acquisition_used"],
            constraint_means=dict(c["constraint_means"]),
            constraint_sds=dict(c["constraint_sds"])))
    return BatchProposal(tuple(cands), tuple(d["fip_values"]),
                         Incumbent(None, float(d["incumbent_cost"])),
                         bool(d["any_feasible_known"]))


def _pending_from_dict(d: dict) -> PendingBatch:
    return PendingBatch(
        d["batch_id"], _proposal_from_dict(d["proposal"]),
        {int(i): EvaluatedExperiment.from_dict(e)
         for i, e in d["received"].items()},
        set(int(i) for i in d["dropped"]))


@dataclass
class CampaignState:
    id: str
    config: CampaignConfig
    history: list
    pending: Optional[PendingBatch] = None
    session: Optional[SessionRecord] = None
    phase: str = PHASE_NEEDS_IGNITION
    trace: list = field(default_factory=list)
    batch_counter: int = 0
    session_counter: int = 0
    revision: int = 0
    _voltage_model_cache: Optional[process.VoltageModel] = field(
        default=None, repr=False, compare=False)

    def incumbent(self):
        return best_feasible(self.history, fallback_cost=float("inf"))


def new_campaign(campaign_id: str, config: CampaignConfig,
                 initial: Sequence[EvaluatedExperiment]) -> CampaignState:
    """Create a campaign seeded with previously evaluated experiments."""
    if len(initial) < 2:
        raise InvalidArgumentError(
            "a campaign needs at least 2 initial experiments to fit models")
    return CampaignState(id=campaign_id, config=config,
                         history=list(initial), phase=PHASE_NEEDS_IGNITION)


def _voltage_model(state: CampaignState) -> process.VoltageModel:
    if state.session is None:
        raise PhaseError("no active session")
    if state._voltage_model_cache is None:
        subset = state.history[: state.session.history_size_at_ignition]
        state._voltage_model_cache = process.fit_voltage_model(
            [(e.x.controllable, e.x.powder) for e in subset],
            [e.x.voltage for e in subset], state.config.bounds,
            seed=_derived_seed(state.config.seed, "voltage",
                               state.session_counter))
    return state._voltage_model_cache


def _derived_seed(base: int, tag: str, index: int) -> int:
    ss = np.random.SeedSequence([base, sum(ord(c) for c in tag), index])
    return int(ss.generate_state(1)[0] % (2 ** 31 - 1))


def start_session(state: CampaignState, x_c_b: ControllableInputs,
                  v_b) -> CampaignState:
    """Record an ignition experiment and estimate the session offset.

    The ignition settings must belong to an already-evaluated experiment.
    A repeated call replaces the previous session; candidate expansion
    thereafter uses the new offset.
    """
    if state.phase not in (PHASE_NEEDS_IGNITION, PHASE_READY):
        raise PhaseError(f"cannot ignite while {state.phase}")
    key = tuple(x_c_b.as_array())
    if not any(tuple(e.x.controllable.as_array()) == key
               for e in state.history):
        raise InvalidArgumentError(
            "ignition settings must come from the evaluated history")
    readings = np.atleast_1d(np.asarray(v_b, dtype=float))
    state.session_counter += 1
    state.session = SessionRecord(
        session_id=f"s{state.session_counter}",
        delta_b=0.0,
        ignition_settings=x_c_b,
        ignition_voltages=tuple(float(v) for v in readings),
        history_size_at_ignition=len(state.history))
    state._voltage_model_cache = None
    model = _voltage_model(state)
    state.session.delta_b = process.estimate_offset(
        model, x_c_b, state.config.powder, readings)
    state.phase = PHASE_READY
    state.revision += 1
    return state


def request_new_session(state: CampaignState) -> CampaignState:
    """Explicit operator request: the next batch needs a fresh ignition."""
    if state.phase != PHASE_READY:
        raise PhaseError(f"cannot reset session while {state.phase}")
    state.phase = PHASE_NEEDS_IGNITION
    state.revision += 1
    return state


def build_pool(state: CampaignState) -> list:
    """Regenerate the candidate pool with the current session offset,
    excluding every already-evaluated controllable setting."""
    cands = process.generate_candidates(
        state.config.bounds, state.config.candidate_count,
        seed=state.config.seed)
    model = _voltage_model(state)
    pool = process.expand_candidates(cands, state.config.powder, model,
                                     state.session.delta_b)
    seen = {tuple(e.x.controllable.as_array()) for e in state.history}
    return [x for x in pool
            if tuple(x.controllable.as_array()) not in seen]


def propose(state: CampaignState) -> CampaignState:
    """Generate the next batch and await its results.

    On an already-terminated campaign this is a no-op: the termination
    rule has fired and no new batch is queued.
    """
    if state.phase == PHASE_TERMINATED:
        return state
    if state.phase != PHASE_READY:
        raise PhaseError(f"cannot propose while {state.phase}")
    pool = build_pool(state)
    state.batch_counter += 1
    fit_seed = _derived_seed(state.config.seed, "fit", state.batch_counter)
    proposal = propose_batch(state.history, pool, state.config.optimizer,
                             state.config.model_config(fit_seed))
    state.pending = PendingBatch(batch_id=f"b{state.batch_counter:03d}",
                                 proposal=proposal)
    state.phase = PHASE_AWAITING
    state.revision += 1
    return state


def drop_candidate(state: CampaignState, candidate_index: int) -> CampaignState:
    """Operator judgment: exclude one proposed candidate (for example a
    near-duplicate) from the pending batch before running it."""
    if state.phase != PHASE_AWAITING or state.pending is None:
        raise PhaseError("no pending batch to drop from")
    if not 0 <= candidate_index < state.pending.proposal.size:
        raise InvalidArgumentError(f"no candidate {candidate_index} in batch")
    if candidate_index in state.pending.received:
        raise InvalidArgumentError(
            f"candidate {candidate_index} already has a result")
    if len(state.pending.dropped) + 1 >= state.pending.proposal.size:
        raise InvalidArgumentError("cannot drop every candidate in a batch")
    state.pending.dropped.add(candidate_index)
    state.revision += 1
    return state


@dataclass(frozen=True)
class RowReport:
    line: int
    status: str  # accepted | rejected | duplicate | dropped
    message: str = ""

    def to_dict(self) -> dict:
        return {"line": self.line, "status": self.status,
                "message": self.message}


def _match_candidate(row: dict, pending: PendingBatch) -> Optional[int]:
    idx_text = (row.get("candidate_index") or "").strip()
    if idx_text:
        try:
            idx = int(idx_text)
        except ValueError:
            return None
        return idx if 0 <= idx < pending.proposal.size else None
    # fall back to echoed input values: exact match after round-trip format
    try:
        echoed = tuple(float(row[f]) for f in CONTROLLABLE_FIELDS)
    except (KeyError, ValueError, TypeError):
        return None
    for i, cand in enumerate(pending.proposal.candidates):
        if tuple(cand.x.controllable.as_array()) == echoed:
            return i
    return None


def _parse_result_row(row: dict, cand, constraints: ConstraintSpec,
                      cost_cfg: CostConfig, session_id: str):
    measurements = {}
    for col, key in (("microhardness_HV", "microhardness_HV"),
                     ("porosity_pct", "porosity_pct")):
        text = (row.get(col) or "").strip()
        if not text:
            raise ValueError(f"missing required field {col}")
        measurements[key] = float(text)
    for col in ("application_rate", "deposition_efficiency_pct"):
        text = (row.get(col) or "").strip()
        if text:
            measurements[col] = float(text)
    v_text = (row.get("measured_voltage_V") or "").strip()
    if not v_text:
        raise ValueError("missing required field measured_voltage_V")
    x = InputVector(cand.x.controllable, cand.x.powder, float(v_text))
    return make_experiment(x, measurements, constraints, cost_cfg, session_id)


def ingest_results(state: CampaignState, rows: Sequence[dict]) -> tuple:
    """Apply measurement rows to the pending batch.

    Returns ``(state, reports)`` with one RowReport per input row. Rows are
    independent: a malformed row is rejected with its line number and does
    not block the others; replays of already-ingested rows are flagged as
    duplicates and ignored. The batch finalizes (history grows, termination
    is evaluated on the batch's recorded FIP values) only when every
    candidate has a result or an explicit dropped flag.
    """
    if state.phase != PHASE_AWAITING or state.pending is None:
        raise PhaseError(f"cannot ingest results while {state.phase}")
    pending = state.pending
    reports = []
    changed = False
    for line, row in enumerate(rows, start=2):  # line 1 is the header
        batch_id = (row.get("batch_id") or "").strip()
        if batch_id and batch_id != pending.batch_id:
            reports.append(RowReport(line, "rejected",
                                     f"unknown batch id {batch_id!r}"))
            continue
        idx = _match_candidate(row, pending)
        if idx is None:
            reports.append(RowReport(
                line, "rejected", "row references no pending candidate"))
            continue
        dropped_text = (row.get("dropped_flag") or "").strip().lower()
        if dropped_text in ("1", "true", "yes", "dropped"):
            if idx in pending.received:
                reports.append(RowReport(line, "rejected",
                                         f"candidate {idx} already measured"))
            elif idx in pending.dropped:
                reports.append(RowReport(line, "duplicate",
                                         f"candidate {idx} already dropped"))
            else:
                pending.dropped.add(idx)
                reports.append(RowReport(line, "dropped", f"candidate {idx}"))
                changed = True
            continue
        if idx in pending.received or idx in pending.dropped:
            reports.append(RowReport(line, "duplicate",
                                     f"candidate {idx} already ingested"))
            continue
        try:
            exp = _parse_result_row(row, pending.proposal.candidates[idx],
                                    state.config.constraints,
                                    state.config.cost,
                                    state.session.session_id)
        except (ValueError, TypeError) as exc:
            reports.append(RowReport(line, "rejected", str(exc)))
            continue
        pending.received[idx] = exp
        reports.append(RowReport(line, "accepted", f"candidate {idx}"))
        changed = True

    if changed:
        state.revision += 1
    if not pending.outstanding:
        _finalize_batch(state)
    return state, reports


def _finalize_batch(state: CampaignState) -> None:
    pending = state.pending
    results = [pending.received[i] for i in sorted(pending.received)]
    state.history.extend(results)
    terminated = check_termination(pending.proposal, state.config.optimizer)
    inc = best_feasible(state.history, fallback_cost=float("inf"))
    state.trace.append({
        "batch_id": pending.batch_id,
        "proposal": pending.proposal.to_dict(),
        "results": [e.to_dict() for e in results],
        "dropped": sorted(pending.dropped),
        "incumbent_cost_after": inc.cost if inc.present else None,
        "terminated": terminated,
    })
    state.pending = None
    state.phase = PHASE_TERMINATED if terminated else PHASE_READY
    state.revision += 1


def finish(state: CampaignState):
    """Operator early stop: terminate now and report the incumbent."""
    if state.phase != PHASE_TERMINATED:
        state.phase = PHASE_TERMINATED
        state.pending = None
        state.revision += 1
    return state, state.incumbent()


def whatif(state: CampaignState, rows: Sequence[dict]) -> dict:
    """Hypothetical-results preview: what the incumbent and the next batch
    would look like if ``rows`` were ingested now. The given state is left
    untouched."""
    shadow = copy.deepcopy(state)
    shadow._voltage_model_cache = state._voltage_model_cache
    shadow, reports = ingest_results(shadow, rows)
    preview = None
    if shadow.phase == PHASE_READY:
        shadow = propose(shadow)
        preview = shadow.pending.proposal.to_dict()
    inc = shadow.incumbent()
    return {
        "reports": [r.to_dict() for r in reports],
        "incumbent_cost": inc.cost if inc.present else None,
        "incumbent_present": inc.present,
        "terminated": shadow.phase == PHASE_TERMINATED,
        "next_batch_preview": preview,
    }


# ---------------------------------------------------------------------------
# CSV formats
# ---------------------------------------------------------------------------


def proposal_to_csv(state: CampaignState) -> str:
    """Pending-batch export: one row per proposed candidate."""
    if state.pending is None:
        raise PhaseError("no pending batch to export")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("batch_id",) + PROPOSAL_COLUMNS)
    for i, cand in enumerate(state.pending.proposal.candidates):
        active = cand.alpha_hfi if cand.acquisition_used == "HFI" \
            else cand.alpha_fip
        row = [state.pending.batch_id, i]
        row += [repr(float(v)) for v in cand.x.controllable.as_array()]
        row += [repr(float(cand.x.voltage)), repr(float(cand.fp)),
                repr(float(cand.improvement)), repr(float(active)),
                cand.acquisition_used]
        writer.writerow(row)
    return buf.getvalue()


def parse_results_csv(text: str) -> list:
    reader = csv.DictReader(io.StringIO(text))
    return [dict(row) for row in reader]


def history_to_csv(history: Sequence[EvaluatedExperiment]) -> str:
    """Flat analysis export: one row per evaluated experiment."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(CONTROLLABLE_FIELDS)
                    + ["powder", "measured_voltage_V", "microhardness_HV",
                       "porosity_pct", "application_rate",
                       "deposition_efficiency_pct", "feasible", "cost",
                       "session_id"])
    for e in history:
        row = [repr(float(v)) for v in e.x.controllable.as_array()]
        row += [e.x.powder, repr(float(e.x.voltage))]
        for key in ("microhardness_HV", "porosity_pct", "application_rate",
                    "deposition_efficiency_pct"):
            v = e.measurements.get(key)
            row.append("" if v is None else repr(float(v)))
        row += [str(e.feasible).lower(), repr(float(e.cost)), e.session_id]
        writer.writerow(row)
    return buf.getvalue()


def parse_history_csv(text: str, constraints: ConstraintSpec,
                      cost_cfg: CostConfig) -> list:
    """Initial-history import (the inverse of history_to_csv's required
    columns)."""
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        x_c = ControllableInputs(*(float(row[f]) for f in CONTROLLABLE_FIELDS))
        x = InputVector(x_c, row.get("powder", "A"),
                        float(row["measured_voltage_V"]))
        measurements = {"microhardness_HV": float(row["microhardness_HV"]),
                        "porosity_pct": float(row["porosity_pct"])}
        for key in ("application_rate", "deposition_efficiency_pct"):
            if (row.get(key) or "").strip():
                measurements[key] = float(row[key])
        out.append(make_experiment(x, measurements, constraints, cost_cfg,
                                   row.get("session_id", "init")))
    return out


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def state_to_dict(state: CampaignState) -> dict:
    return {
        "format": CAMPAIGN_FORMAT,
        "version": CAMPAIGN_VERSION,
        "id": state.id,
        "config": state.config.to_dict(),
        "history": [e.to_dict() for e in state.history],
        "pending": None if state.pending is None else state.pending.to_dict(),
        "session": None if state.session is None else state.session.to_dict(),
        "phase": state.phase,
        "trace": state.trace,
        "batch_counter": state.batch_counter,
        "session_counter": state.session_counter,
        "revision": state.revision,
    }


def state_from_dict(d: dict) -> CampaignState:
    if d.get("format") != CAMPAIGN_FORMAT:
        raise VersionMismatchError(
            f"expected a {CAMPAIGN_FORMAT} document, got {d.get('format')!r}")
    if d.get("version", 0) > CAMPAIGN_VERSION:
        raise VersionMismatchError(
            f"campaign version {d['version']} requires migration "
            f"(supported: {CAMPAIGN_VERSION})")
    return CampaignState(
        id=d["id"],
        config=CampaignConfig.from_dict(d["config"]),
        history=[EvaluatedExperiment.from_dict(e) for e in d["history"]],
        pending=None if d["pending"] is None else _pending_from_dict(d["pending"]),
        session=None if d["session"] is None else SessionRecord.from_dict(d["session"]),
        phase=d["phase"],
        trace=list(d["trace"]),
        batch_counter=int(d["batch_counter"]),
        session_counter=int(d["session_counter"]),
        revision=int(d["revision"]),
    )


def save(state: CampaignState, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(state_to_dict(state), sort_keys=True,
                               indent=1), encoding="utf-8")
    return path


def load(path) -> CampaignState:
    return state_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
