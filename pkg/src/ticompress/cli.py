"""Experiment runner: deterministic, config-driven subcommands.

Exit codes: 0 success, 1 config error, 2 numerical failure. All randomness
flows from one root seed through named substreams, so reruns with the same
config and seed produce byte-identical CSV files regardless of thread
count.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import subprocess
import sys

import numpy as np

from . import __version__
from .bgate import verify_b
from .circuit import gate_counts, save_circuit, load_circuit
from .config import format_config, get, load_config, parse_config
from .hamiltonian import heisenberg_field, random_two_local_ti, spectral_norm
from .lattice import builtin_lattice, load_lattice, validate
from .optimize import (
    CostSpec,
    DescentConfig,
    bootstrap,
    descend,
    evolution_infidelity,
    init_budget_check,
    tcrit_sweep,
    transfer,
)
from .pauliprop import PropagationConfig, local_infidelity
from .trotter import (
    grouped_trotter_circuit,
    heisenberg_partition,
    trotter_circuit,
    trotter_init_point,
)


class ConfigError(Exception):
    pass


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def build_id() -> str:
    try:
        out = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"],
            capture_output=True, text=True, timeout=5,
            cwd=os.path.dirname(os.path.abspath(__file__)),
        )
        if out.returncode == 0:
            return out.stdout.strip()
    except Exception:
        pass
    return "unknown"


def _resolve_lattice(name: str):
    if os.path.exists(name):
        return load_lattice(name)
    return builtin_lattice(name)


def _hamiltonian(cfg, lat, seed):
    kind = get(cfg, "hamiltonian", "heisenberg_field")
    if kind == "heisenberg_field":
        return heisenberg_field(lat)
    if kind == "random_ti":
        return random_two_local_ti(
            lat, seed=get(cfg, "hamiltonian_seed", seed), target_norm=get(cfg, "target_norm", 1.0)
        )
    raise ConfigError(f"unknown hamiltonian kind {kind!r}")


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _write_summary(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if dataclasses.is_dataclass(o):
        return dataclasses.asdict(o)
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o)!r}")


def _descent_config(cfg) -> DescentConfig:
    return DescentConfig(
        max_iters=get(cfg, "max_iters", 5000),
        grad_tol=get(cfg, "grad_tol", 1e-9),
    )


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def run_tcrit(cfg: dict, seed: int, out: str, threads: int) -> int:
    lat = _resolve_lattice(get(cfg, "lattice", "chain(4)"))
    dt_grid = [float(v) for v in get(cfg, "dt_grid", [0.05, 0.1, 0.2, 0.5])]
    searches = get(cfg, "searches", 50)
    fixed = None
    if get(cfg, "fixed_hamiltonian", False):
        fixed = _hamiltonian(cfg, lat, seed)
    report = tcrit_sweep(
        lat,
        dt_grid,
        searches_per_dt=searches,
        norm_cap=get(cfg, "norm_cap", 1.0),
        seed=seed,
        config=_descent_config(cfg),
        fixed_h=fixed,
        workers=threads,
        cluster_threshold=get(cfg, "cluster_threshold", 1e-5),
    )
    rows = [
        (
            e.dt,
            searches,
            e.n_clusters,
            e.n_converged,
            e.best_cost,
            ";".join(str(s) for s in e.cluster_sizes),
        )
        for e in report.entries
    ]
    _write_csv(
        os.path.join(out, "sweep.csv"),
        ["dt", "searches", "n_clusters", "n_converged", "best_cost", "cluster_sizes"],
        rows,
    )
    _write_summary(
        os.path.join(out, "summary.json"),
        dict(
            command="tcrit-sweep",
            config_echo=format_config(cfg),
            seed=seed,
            build=build_id(),
            version=__version__,
            entries=[dataclasses.asdict(e) for e in report.entries],
        ),
    )
    return 0


def run_compress(cfg: dict, seed: int, out: str, threads: int) -> int:
    lat = _resolve_lattice(get(cfg, "lattice", "chain(6)"))
    h = _hamiltonian(cfg, lat, seed)
    t_total = get(cfg, "t_total", 0.1)
    dt = get(cfg, "dt", t_total)
    depth = get(cfg, "depth", lat.n_classes)
    gamma = get(cfg, "gamma", 0)
    samples = get(cfg, "samples", 2000)
    part = heisenberg_partition(h) if h.name == "heisenberg_field" else None
    if part is None:
        raise ConfigError("compress currently targets the heisenberg_field model")

    init = trotter_init_point(part, dt, depth_budget=depth, control_layers=gamma)
    budget = init_budget_check(init, h, dt)
    if not budget.all_within_budget:
        print("warning: initialization exceeds the generator budget", file=sys.stderr)

    kind = get(cfg, "cost", "ticc" if gamma > 0 else "trace_norm")
    spec = CostSpec(kind, h, dt, samples=get(cfg, "cost_samples", 128), seed=seed)
    run = descend(init, spec, _descent_config(cfg))
    reps = int(round(t_total / dt))
    if reps > 1:
        re_spec = CostSpec(kind, h, t_total, samples=get(cfg, "cost_samples", 128), seed=seed)
        final_run = bootstrap(
            run, t_total, reoptimize=get(cfg, "reoptimize", False), spec=re_spec,
            config=_descent_config(cfg),
        )
    else:
        final_run = run
    optimized = final_run.final

    rows = []

    def add_row(label, ansatz, converged, iters):
        counts = gate_counts(ansatz)
        infid, err = evolution_infidelity(ansatz, h, t_total, samples=samples, seed=seed)
        rows.append(
            (label, ansatz.depth, counts.b_gates, counts.cz_gates, infid, err, converged, iters)
        )

    add_row("optimized", optimized, final_run.converged or run.converged, run.n_iters)
    orders = [int(v) for v in get(cfg, "trotter_orders", [1, 2])]
    steps_list = [int(v) for v in get(cfg, "trotter_steps", [1, 2])]
    family = get(cfg, "baseline", "sectors" if gamma > 0 else "grouped")
    for order in orders:
        for steps in steps_list:
            if family == "grouped":
                base = grouped_trotter_circuit(h, t_total, order=order, steps=steps)
            else:
                base = trotter_circuit(part, t_total, order=order, steps=steps,
                                       controlled=gamma > 0)
            add_row(f"trotter-{family}-o{order}-s{steps}", base, True, 0)

    _write_csv(
        os.path.join(out, "compress.csv"),
        ["label", "depth", "b_gates", "cz_gates", "infidelity", "stderr", "converged", "iters"],
        rows,
    )
    _write_csv(
        os.path.join(out, "cost_trace.csv"),
        ["iteration", "cost", "grad_norm"],
        run.cost_trace,
    )
    save_circuit(optimized, os.path.join(out, "optimized.circuit"))
    _write_summary(
        os.path.join(out, "report.json"),
        dict(
            command="compress",
            config_echo=format_config(cfg),
            seed=seed,
            build=build_id(),
            version=__version__,
            spectral_norm=spectral_norm(h),
            budget_report=dataclasses.asdict(budget),
            converged=final_run.converged or run.converged,
            block_iters=run.n_iters,
            final_cost=final_run.final_cost if final_run.cost_trace else run.final_cost,
        ),
    )
    return 0


def run_transfer(cfg: dict, seed: int, out: str, threads: int) -> int:
    src_name = get(cfg, "source_lattice", "chain(4)")
    dst_name = get(cfg, "target_lattice", "chain(8)")
    src = _resolve_lattice(src_name)
    dst = _resolve_lattice(dst_name)
    circuit_path = get(cfg, "circuit", "")
    if not circuit_path or not os.path.exists(circuit_path):
        raise ConfigError(f"source circuit file {circuit_path!r} not found")
    block = load_circuit(circuit_path, src)
    moved = transfer(block, dst)
    t = get(cfg, "t", float(block.meta.get("t_total", block.meta.get("dt", 0.1))))
    h = _hamiltonian(cfg, dst, seed)
    part = heisenberg_partition(h)
    target = trotter_circuit(
        part, t,
        order=get(cfg, "target_order", 4),
        steps=get(cfg, "target_steps", 4),
    )
    rows = []
    for kappa in [float(v) for v in get(cfg, "kappa_grid", [1e-3, 1e-4, 1e-5])]:
        res = local_infidelity(
            target, moved, dst.n_sites,
            PropagationConfig(kappa=kappa, max_terms=get(cfg, "max_terms", 0) or None),
        )
        terms = max(res.term_counts["target"], res.term_counts["approx"])
        rows.append((kappa, terms, res.c1_loc, res.i_loc))
    _write_csv(
        os.path.join(out, "kappa_sweep.csv"),
        ["kappa", "term_count", "c1_loc", "i_loc"],
        rows,
    )
    _write_summary(
        os.path.join(out, "transfer.json"),
        dict(
            command="transfer",
            config_echo=format_config(cfg),
            seed=seed,
            build=build_id(),
            version=__version__,
            source=src_name,
            target=dst_name,
            t=t,
        ),
    )
    return 0


def run_bgate(cfg: dict, seed: int, out: str, threads: int) -> int:
    rep = verify_b()
    payload = dataclasses.asdict(rep)
    perturb = get(cfg, "perturb", 0.0)
    if perturb:
        payload["perturbed"] = dataclasses.asdict(verify_b(detuning_scale=1.0 + perturb))
    payload.update(command="bgate-check", build=build_id(), version=__version__)
    _write_summary(os.path.join(out, "bgate.json"), payload)
    print(json.dumps(payload, sort_keys=True, default=_json_default))
    return 0 if rep.passed else 2


def run_validate(cfg: dict, seed: int, out: str, threads: int) -> int:
    name = get(cfg, "lattice", "")
    if not name:
        raise ConfigError("validate-lattice needs a 'lattice' key or --lattice flag")
    lat = _resolve_lattice(name)
    rep = validate(lat)
    print(f"lattice {lat.name}: sites={lat.n_sites} classes={lat.n_classes} "
          f"bonds={len(lat.bonds)} sublayers={lat.n_sublayers}")
    if rep.valid:
        print("valid")
        return 0
    for v in rep.violations:
        print(f"violation: {v}")
    return 2


_COMMANDS = {
    "tcrit-sweep": run_tcrit,
    "compress": run_compress,
    "transfer": run_transfer,
    "bgate-check": run_bgate,
    "validate-lattice": run_validate,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ticompress",
        description="Compress translationally invariant time evolution into shallow circuits",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", help="path to a key = value config file")
    parser.add_argument("--set", action="append", default=[],
                        help="inline config line, e.g. --set 'lattice = chain(4)'")
    parser.add_argument("--lattice", help="shorthand for --set 'lattice = NAME'")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args(argv)

    try:
        cfg: dict = {}
        if args.config:
            cfg.update(load_config(args.config))
        for line in args.set:
            cfg.update(parse_config(line))
        if args.lattice:
            cfg["lattice"] = args.lattice
        seed = int(cfg.get("seed", args.seed))
        os.makedirs(args.out, exist_ok=True)
    except (OSError, ValueError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](cfg, seed, args.out, args.threads)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (FloatingPointError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
