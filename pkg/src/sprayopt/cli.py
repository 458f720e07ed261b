"""Command-line entry point: simulation studies, the Table-style sweep,
model fitting/validation, campaign operation, and the HTTP service.

All commands read a single JSON configuration file (sections:
domain_bounds, constraints, cost, optimizer, oracle, paths) validated
against a versioned schema; individual flags override config values.
Every seeded command is bit-reproducible: identical config and seed give
byte-identical output files. Exit status is 0 on success and nonzero with
a single machine-parsable ``error:<category>: message`` line on failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import campaign as camp
from . import gp, oracle, optimizer, process
from .acquisition import ConstraintSpec, default_constraints
from .errors import InvalidArgumentError, SprayOptError
from .optimizer import ModelConfig, OptimizerConfig
from .process import CONTROLLABLE_FIELDS, ControllableInputs, CostConfig

CONFIG_FORMAT = "sprayopt-config"
CONFIG_VERSION = 1

CONFIG_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "properties": {
        "format": {"const": CONFIG_FORMAT},
        "version": {"type": "integer", "minimum": 1},
        "domain_bounds": {"type": "object"},
        "constraints": {
            "type": "object",
            "additionalProperties": {
                "type": "array", "items": {"type": "number"},
                "minItems": 2, "maxItems": 2},
        },
        "cost": {"type": "object"},
        "optimizer": {
            "type": "object",
            "properties": {
                "batch_size": {"type": "integer", "minimum": 1},
                "pi": {"type": "number", "minimum": 0, "maximum": 1},
                "epsilon": {"type": "number", "exclusiveMinimum": 0},
                "max_batches": {"type": "integer", "minimum": 0},
            },
        },
        "oracle": {
            "type": "object",
            "properties": {
                "voltage_offset": {"type": "number"},
                "ignition_noise_sd": {"type": "number", "minimum": 0},
                "microhardness_sd": {"type": "number", "minimum": 0},
                "porosity_sd": {"type": "number", "minimum": 0},
                "weights_path": {"type": ["string", "null"]},
            },
        },
        "paths": {
            "type": "object",
            "properties": {
                "store_dir": {"type": "string"},
                "design_path": {"type": ["string", "null"]},
            },
        },
        "candidate_count": {"type": "integer", "minimum": 1},
        "powder": {"enum": ["A", "B"]},
    },
    "required": ["format", "version"],
}


def default_config() -> dict:
    return {
        "format": CONFIG_FORMAT,
        "version": CONFIG_VERSION,
        "domain_bounds": process.default_bounds().to_dict(),
        "constraints": default_constraints().to_dict(),
        "cost": CostConfig().to_dict(),
        "optimizer": {"batch_size": 5, "pi": 0.4, "epsilon": 0.05,
                      "max_batches": 20},
        "oracle": {"voltage_offset": 2.0, "ignition_noise_sd": 0.2,
                   "microhardness_sd": 8.45, "porosity_sd": 0.54,
                   "weights_path": None},
        "paths": {"store_dir": "campaigns", "design_path": None},
        "candidate_count": 20000,
        "powder": "A",
    }


def load_config(path) -> dict:
    import jsonschema

    cfg = default_config()
    if path:
        loaded = json.loads(Path(path).read_text(encoding="utf-8"))
        try:
            jsonschema.validate(loaded, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise InvalidArgumentError(f"config validation failed: "
                                       f"{exc.message}") from exc
        if loaded.get("version", 1) > CONFIG_VERSION:
            from .errors import VersionMismatchError
            raise VersionMismatchError(
                f"config version {loaded['version']} requires migration")
        for key, value in loaded.items():
            if isinstance(value, dict) and isinstance(cfg.get(key), dict):
                cfg[key].update(value)
            else:
                cfg[key] = value
    # environment overrides apply to paths only
    if os.environ.get("SPRAYOPT_STORE_DIR"):
        cfg["paths"]["store_dir"] = os.environ["SPRAYOPT_STORE_DIR"]
    if os.environ.get("SPRAYOPT_DESIGN_PATH"):
        cfg["paths"]["design_path"] = os.environ["SPRAYOPT_DESIGN_PATH"]
    if os.environ.get("SPRAYOPT_WEIGHTS_PATH"):
        cfg["oracle"]["weights_path"] = os.environ["SPRAYOPT_WEIGHTS_PATH"]
    return cfg


def _bounds(cfg) -> process.DomainBounds:
    return process.DomainBounds.from_dict(cfg["domain_bounds"])


def _constraints(cfg) -> ConstraintSpec:
    return ConstraintSpec.from_dict(cfg["constraints"])


def _cost(cfg) -> CostConfig:
    return CostConfig.from_dict(cfg["cost"])


def _optimizer_config(cfg, args=None) -> OptimizerConfig:
    o = dict(cfg["optimizer"])
    if args is not None:
        if getattr(args, "batch_size", None):
            o["batch_size"] = args.batch_size
        if getattr(args, "pi", None) is not None:
            o["pi"] = args.pi
        if getattr(args, "epsilon", None) is not None:
            o["epsilon"] = args.epsilon
        if getattr(args, "max_batches", None):
            o["max_batches"] = args.max_batches
    return OptimizerConfig(**o)


def _simulated_process(cfg) -> oracle.SimulatedProcess:
    o = cfg["oracle"]
    net = oracle.load_default_net() if not o.get("weights_path") else \
        oracle.net_from_dict(json.loads(
            Path(o["weights_path"]).read_text(encoding="utf-8")))
    oracle.run_self_test(net)
    return oracle.SimulatedProcess(
        net=net,
        noise=oracle.NoiseSpec(o["microhardness_sd"], o["porosity_sd"]),
        state=oracle.EquipmentState(o["voltage_offset"],
                                    o["ignition_noise_sd"]),
        constraints=_constraints(cfg),
        cost_cfg=_cost(cfg))


def _load_design(cfg):
    path = cfg["paths"].get("design_path")
    if path:
        return oracle.design_from_csv(Path(path).read_text(encoding="utf-8"))
    return oracle.load_default_design()


def _design_subset(design, n_init: int, seed: int, cell=(0, 0)):
    if n_init >= len(design):
        return list(design)
    rng = np.random.default_rng([seed, n_init, *cell])
    idx = rng.choice(len(design), size=n_init, replace=False)
    return [design[i] for i in idx]


def _model_config(cfg, fit_seed: int = 0) -> ModelConfig:
    return ModelConfig(bounds=_bounds(cfg), constraints=_constraints(cfg),
                       cost=_cost(cfg), fit_seed=fit_seed)


def run_one_campaign(cfg, n_init, batch_size, seed, cell=(0, 0)):
    sim = _simulated_process(cfg)
    design = _design_subset(_load_design(cfg), n_init, seed, cell)
    init = sim.generate_initialization(design, seed=seed)
    opt = OptimizerConfig(batch_size, cfg["optimizer"]["pi"],
                          cfg["optimizer"]["epsilon"],
                          cfg["optimizer"]["max_batches"])
    return optimizer.run_simulated_campaign(
        init, sim, opt, _model_config(cfg), seed=seed,
        candidate_count=cfg["candidate_count"], powder=cfg["powder"])


TRACE_CSV_COLUMNS = (
    ["batch", "candidate", "acquisition_used", "fp", "improvement",
     "alpha_fip", "alpha_hfi"]
    + list(CONTROLLABLE_FIELDS)
    + ["predicted_voltage_V", "cost",
       "pred_microhardness_HV_mean", "pred_microhardness_HV_sd",
       "pred_porosity_pct_mean", "pred_porosity_pct_sd",
       "measured_microhardness_HV", "measured_porosity_pct",
       "measured_voltage_V", "feasible", "incumbent_cost_after",
       "terminated"])


def write_trace_csv(trace, path) -> None:
    rows = optimizer.trace_csv_rows(trace)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_CSV_COLUMNS)
    for row in rows:
        out = []
        for col in TRACE_CSV_COLUMNS:
            v = row.get(col, "")
            if isinstance(v, bool):
                v = str(v).lower()
            elif isinstance(v, float):
                v = repr(v)
            out.append(v)
        writer.writerow(out)
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    batch_size = args.batch_size or cfg["optimizer"]["batch_size"]
    if args.pi is not None:
        cfg["optimizer"]["pi"] = args.pi
    if args.epsilon is not None:
        cfg["optimizer"]["epsilon"] = args.epsilon
    if args.max_batches:
        cfg["optimizer"]["max_batches"] = args.max_batches
    trace = run_one_campaign(cfg, args.n_init, batch_size, args.seed)
    out = Path(args.out)
    out.write_text(trace.to_json() + "\n", encoding="utf-8")
    if args.csv:
        write_trace_csv(trace, args.csv)
    if args.history_csv:
        Path(args.history_csv).write_text(
            camp.history_to_csv(optimizer.trace_experiments(trace)),
            encoding="utf-8")
    inc = trace.final_incumbent
    print(f"simulate: seed={args.seed} batches={len(trace.batches)} "
          f"terminated={trace.terminated} "
          f"feasible={'yes' if inc.present else 'no'} "
          f"min_cost={inc.cost:.3f} -> {out}")
    return 0


def _sweep_cell(job):
    cfg, n_init, batch_size, seed = job
    trace = run_one_campaign(cfg, n_init, batch_size, seed,
                             cell=(batch_size,))
    inc = trace.final_incumbent
    return {"n_init": n_init, "batch_size": batch_size, "seed": seed,
            "min_cost": inc.cost if inc.present else "",
            "feasible_found": str(inc.present).lower(),
            "stopping_batch": len(trace.batches),
            "terminated": str(trace.terminated).lower(),
            "evaluations": trace.evaluations}


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    n_grid = [int(v) for v in args.n_init_grid.split(",")]
    b_grid = [int(v) for v in args.batch_sizes.split(",")]
    jobs = [(cfg, n, b, s) for b in b_grid for n in n_grid
            for s in range(args.seeds)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            rows = list(ex.map(_sweep_cell, jobs))
    else:
        rows = [_sweep_cell(j) for j in jobs]
    cols = ["n_init", "batch_size", "seed", "min_cost", "feasible_found",
            "stopping_batch", "terminated", "evaluations"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for row in rows:
        writer.writerow([repr(row[c]) if isinstance(row[c], float)
                         else row[c] for c in cols])
    Path(args.out).write_text(buf.getvalue(), encoding="utf-8")
    print(f"sweep: {len(rows)} runs "
          f"({len(n_grid)}x{len(b_grid)} cells x {args.seeds} seeds) "
          f"-> {args.out}")
    return 0


def _fit_metrics(train, val, name, mean_config, cfg, seed=0):
    bounds8 = _bounds(cfg).model_input_bounds()
    X_tr = np.array([e.x.flatten() for e in train])
    y_tr = np.array([e.measurements[name] for e in train])
    model = gp.fit(gp.Dataset(X_tr, y_tr), mean_config, restarts=3,
                   seed=seed, input_bounds=bounds8, prior=gp.default_prior())
    X_va = np.array([e.x.flatten() for e in val])
    y_va = np.array([e.measurements[name] for e in val])
    mu, _ = gp.posterior_batch(model, X_va)
    rmse = float(np.sqrt(np.mean((mu - y_va) ** 2)))
    ss_res = float(np.sum((mu - y_va) ** 2))
    ss_tot = float(np.sum((y_va - np.mean(y_va)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else float("nan")
    return rmse, r2


def cmd_fit(args) -> int:
    cfg = load_config(args.config)
    constraints = _constraints(cfg)
    cost_cfg = _cost(cfg)
    train = camp.parse_history_csv(
        Path(args.train).read_text(encoding="utf-8"), constraints, cost_cfg)
    val = camp.parse_history_csv(
        Path(args.validation).read_text(encoding="utf-8"), constraints,
        cost_cfg)
    names = set(train[0].measurements)
    lines = [("output", "mean_function", "rmse", "r2")]
    for name in sorted(names):
        if name == "microhardness_HV":
            configs = [("hybrid", gp.microhardness_mean_config()),
                       ("zero", None)]
        else:
            configs = [("zero", None)]
        for label, mc in configs:
            rmse, r2 = _fit_metrics(train, val, name, mc, cfg, seed=args.seed)
            lines.append((name, label, repr(rmse), repr(r2)))
            print(f"fit: {name:28s} {label:6s} RMSE={rmse:10.4f} R2={r2:7.4f}")
    if args.out:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerows(lines)
        Path(args.out).write_text(buf.getvalue(), encoding="utf-8")
    return 0


# ---------------------------------------------------------------------------
# Campaign subcommands
# ---------------------------------------------------------------------------


def _store_dir(cfg, args) -> Path:
    d = Path(getattr(args, "store", None) or cfg["paths"]["store_dir"])
    d.mkdir(parents=True, exist_ok=True)
    return d


def _campaign_path(cfg, args) -> Path:
    return _store_dir(cfg, args) / f"{args.id}.json"


def _campaign_config(cfg, seed: int) -> camp.CampaignConfig:
    return camp.CampaignConfig(
        bounds=_bounds(cfg), constraints=_constraints(cfg), cost=_cost(cfg),
        optimizer=_optimizer_config(cfg),
        candidate_count=cfg["candidate_count"], powder=cfg["powder"],
        seed=seed)


def cmd_campaign_new(args) -> int:
    cfg = load_config(args.config)
    constraints = _constraints(cfg)
    initial = camp.parse_history_csv(
        Path(args.init).read_text(encoding="utf-8"), constraints, _cost(cfg))
    state = camp.new_campaign(args.id, _campaign_config(cfg, args.seed),
                              initial)
    path = camp.save(state, _campaign_path(cfg, args))
    print(f"campaign new: id={args.id} history={len(state.history)} "
          f"phase={state.phase} -> {path}")
    return 0


def cmd_campaign_ignite(args) -> int:
    cfg = load_config(args.config)
    path = _campaign_path(cfg, args)
    state = camp.load(path)
    if args.settings:
        x_c = ControllableInputs(*(float(v)
                                   for v in args.settings.split(",")))
    else:
        x_c = state.history[args.settings_index].x.controllable
    readings = [float(v) for v in args.voltage.split(",")]
    state = camp.start_session(state, x_c, readings)
    camp.save(state, path)
    print(f"campaign ignite: id={args.id} session={state.session.session_id} "
          f"delta_b={state.session.delta_b:.4f} V phase={state.phase}")
    return 0


def cmd_campaign_propose(args) -> int:
    cfg = load_config(args.config)
    path = _campaign_path(cfg, args)
    state = camp.load(path)
    state = camp.propose(state)
    camp.save(state, path)
    if state.phase == camp.PHASE_TERMINATED:
        print(f"campaign propose: id={args.id} already terminated, "
              f"no new batch")
        return 0
    if args.out:
        Path(args.out).write_text(camp.proposal_to_csv(state),
                                  encoding="utf-8")
    print(f"campaign propose: id={args.id} batch={state.pending.batch_id} "
          f"candidates={state.pending.proposal.size} phase={state.phase}")
    for i, cand in enumerate(state.pending.proposal.candidates):
        print(f"  [{i}] {cand.acquisition_used} fp={cand.fp:.3f} "
              f"I={cand.improvement:.2f} cost={cand.cost:.2f} "
              f"V={cand.x.voltage:.2f}")
    return 0


def cmd_campaign_drop(args) -> int:
    cfg = load_config(args.config)
    path = _campaign_path(cfg, args)
    state = camp.load(path)
    state = camp.drop_candidate(state, args.index)
    camp.save(state, path)
    print(f"campaign drop: id={args.id} dropped="
          f"{sorted(state.pending.dropped)}")
    return 0


def cmd_campaign_ingest(args) -> int:
    cfg = load_config(args.config)
    path = _campaign_path(cfg, args)
    state = camp.load(path)
    rows = camp.parse_results_csv(Path(args.csv).read_text(encoding="utf-8"))
    state, reports = camp.ingest_results(state, rows)
    camp.save(state, path)
    bad = [r for r in reports if r.status == "rejected"]
    for r in reports:
        print(f"  line {r.line}: {r.status} {r.message}")
    print(f"campaign ingest: id={args.id} accepted="
          f"{sum(r.status == 'accepted' for r in reports)} "
          f"rejected={len(bad)} phase={state.phase}")
    return 1 if bad else 0


def cmd_campaign_status(args) -> int:
    cfg = load_config(args.config)
    state = camp.load(_campaign_path(cfg, args))
    inc = state.incumbent()
    doc = {
        "id": state.id, "phase": state.phase,
        "history_size": len(state.history),
        "batches_completed": len(state.trace),
        "incumbent_cost": inc.cost if inc.present else None,
        "session": None if state.session is None
        else state.session.to_dict(),
        "pending_batch": None if state.pending is None
        else state.pending.batch_id,
        "revision": state.revision,
    }
    print(json.dumps(doc, sort_keys=True, indent=1))
    return 0


def cmd_campaign_finish(args) -> int:
    cfg = load_config(args.config)
    path = _campaign_path(cfg, args)
    state = camp.load(path)
    state, inc = camp.finish(state)
    camp.save(state, path)
    cost = f"{inc.cost:.3f}" if inc.present else "none"
    print(f"campaign finish: id={args.id} incumbent_cost={cost}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    cfg = load_config(args.config)
    app = create_app(_store_dir(cfg, args))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sprayopt",
        description="Constrained batch Bayesian optimization for coating "
                    "process configuration")
    parser.add_argument("--config", help="JSON configuration file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one closed-loop simulated campaign")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-init", type=int, default=86)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--pi", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--max-batches", type=int, default=None)
    p.add_argument("--out", default="trace.json")
    p.add_argument("--csv", default=None,
                   help="also write per-candidate batch CSV")
    p.add_argument("--history-csv", default=None,
                   help="also write one row per evaluated experiment")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="initialization x batch-size study")
    p.add_argument("--n-init-grid", default="10,40,86")
    p.add_argument("--batch-sizes", default="5,10")
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--jobs", type=int, default=max(os.cpu_count() or 1, 1))
    p.add_argument("--out", default="sweep.csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit", help="fit quality-output models and report "
                                   "validation metrics")
    p.add_argument("--train", required=True)
    p.add_argument("--validation", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("campaign", help="drive a persistent campaign")
    csub = p.add_subparsers(dest="subcommand", required=True)

    c = csub.add_parser("new")
    c.add_argument("--id", required=True)
    c.add_argument("--init", required=True, help="initial history CSV")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--store", default=None)
    c.set_defaults(func=cmd_campaign_new)

    c = csub.add_parser("ignite")
    c.add_argument("--id", required=True)
    c.add_argument("--settings-index", type=int, default=0,
                   help="history row to re-run for ignition")
    c.add_argument("--settings", default=None,
                   help="six comma-separated controllable values")
    c.add_argument("--voltage", required=True,
                   help="measured ignition voltage(s), comma-separated")
    c.add_argument("--store", default=None)
    c.set_defaults(func=cmd_campaign_ignite)

    c = csub.add_parser("propose")
    c.add_argument("--id", required=True)
    c.add_argument("--out", default=None, help="proposal export CSV")
    c.add_argument("--store", default=None)
    c.set_defaults(func=cmd_campaign_propose)

    c = csub.add_parser("drop")
    c.add_argument("--id", required=True)
    c.add_argument("--index", type=int, required=True)
    c.add_argument("--store", default=None)
    c.set_defaults(func=cmd_campaign_drop)

    c = csub.add_parser("ingest")
    c.add_argument("--id", required=True)
    c.add_argument("--csv", required=True, help="results CSV")
    c.add_argument("--store", default=None)
    c.set_defaults(func=cmd_campaign_ingest)

    c = csub.add_parser("status")
    c.add_argument("--id", required=True)
    c.add_argument("--store", default=None)
    c.set_defaults(func=cmd_campaign_status)

    c = csub.add_parser("finish")
    c.add_argument("--id", required=True)
    c.add_argument("--store", default=None)
    c.set_defaults(func=cmd_campaign_finish)

    p = sub.add_parser("serve", help="start the campaign HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8151)
    p.add_argument("--store", default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SprayOptError as exc:
        print(f"error:{exc.category}: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error:io: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"error:validation: malformed JSON ({exc})", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
