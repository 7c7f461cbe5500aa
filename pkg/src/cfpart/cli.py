"""Experiment orchestration CLI.

Subcommands: gen-layout, decompose, evaluate, sweep, snapshot. Sweeps are
driven by a single JSON config (flags override fields) and write one CSV
row per (instance, algorithm) plus mean/se aggregate rows. Per-instance
seeds derive from base_seed + instance index, so results are a pure
function of the config; CFPART_WORKERS > 1 fans instances out over a
process pool without changing the output.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .baselines import brute_force, kmeans_bs_centric, kmeans_ue_centric
from .capacity import evaluate_decomposition, sumcut
from .errors import EnumerationBudgetExceeded, InfeasibleProblem
from .netmodel import ChannelModel, NetworkLayout, build_graph, gen_layout, \
    path_gains
from .partition import Decomposition, membership_listing, optimal_m, validate
from .solver_bisect import bisect_decompose
from .solver_bnb import SolveReport, SolverConfig, solve_p4

ALGORITHMS = ("bnb", "bc2f", "brute", "kmeans-ue", "kmeans-bs")

CSV_HEADER = ("seed,instance,algo,K,L,Kmax,M,status,objective_sumcut,"
              "cap_approx,cap_lb,cap_mc,cap_mc_se,nodes,runtime_ms")


@dataclass(frozen=True)
class ExperimentConfig:
    k_list: tuple = (8,)
    l_list: tuple = (10,)
    k_max_list: tuple = (4,)
    realizations: int = 200
    alpha: float = 4.0
    p_over_n0_db: float = 10.0
    area_side: float = 1.0
    algorithms: tuple = ("bnb", "bc2f")
    mc_samples: int = 0
    base_seed: int = 0
    output_path: str = "sweep.csv"
    measure_runtime: bool = True     # off => runtime_ms column is 0, reruns byte-identical
    epsilon: float = 1e-6
    node_limit: int | None = None
    time_limit: float | None = None

    def __post_init__(self):
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        for name in ("k_list", "l_list", "k_max_list", "algorithms"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
            if not getattr(self, name):
                raise ValueError(f"{name} must be non-empty")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {a!r}")

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls(**json.loads(text))

    def channel(self) -> ChannelModel:
        return ChannelModel.from_db(self.p_over_n0_db, alpha=self.alpha)

    def solver_cfg(self, seed: int) -> SolverConfig:
        return SolverConfig(epsilon=self.epsilon, node_limit=self.node_limit,
                            time_limit=self.time_limit, seed=seed)


def run_decompose(config: ExperimentConfig, k: int, l: int, k_max: int,
                  algo: str, instance: int):
    """One (instance, algorithm) cell: decompose, evaluate, time the solver."""
    seed = config.base_seed + instance
    layout = gen_layout(seed, k, l, config.area_side)
    channel = config.channel()
    gains = path_gains(layout, channel)
    graph = build_graph(gains)
    row = {"seed": seed, "instance": instance, "algo": algo, "K": k, "L": l,
           "Kmax": k_max, "M": "", "status": "", "objective_sumcut": "",
           "cap_approx": "", "cap_lb": "", "cap_mc": "", "cap_mc_se": "",
           "nodes": "", "runtime_ms": ""}
    try:
        t0 = time.perf_counter()
        nodes = ""
        if algo == "bnb":
            rep = solve_p4(graph, k_max, config.solver_cfg(seed))
            decomp, status, nodes = rep.decomposition, rep.status, rep.nodes_explored
        elif algo == "bc2f":
            rep = bisect_decompose(graph, k_max, config.solver_cfg(seed))
            decomp, status, nodes = rep.decomposition, rep.status, rep.nodes_explored
        elif algo == "brute":
            decomp, _ = brute_force(graph, k_max, optimal_m(k, k_max))
            status = "optimal"
        elif algo == "kmeans-ue":
            decomp = kmeans_ue_centric(layout, gains, k_max, seed)
            status = "heuristic"
        elif algo == "kmeans-bs":
            decomp = kmeans_bs_centric(layout, gains, k_max, seed)
            status = "heuristic"
        else:
            raise ValueError(f"unknown algorithm {algo!r}")
        elapsed_ms = (time.perf_counter() - t0) * 1000.0
        if decomp is None:
            row["status"] = "error:no-incumbent"
            return row
        if validate(decomp, k_max):
            row["status"] = "error:invalid-output"
            return row
        report = evaluate_decomposition(gains, channel, decomp,
                                        mc_samples=config.mc_samples, seed=seed)
        row.update({
            "M": decomp.m, "status": status,
            "objective_sumcut": repr(sumcut(graph, decomp)),
            "cap_approx": repr(report.sum_approx),
            "cap_lb": repr(report.sum_lb),
            "cap_mc": "" if report.sum_mc is None else repr(report.sum_mc),
            "cap_mc_se": "" if report.mc_std_err is None else repr(report.mc_std_err),
            "nodes": nodes,
            "runtime_ms": repr(elapsed_ms) if config.measure_runtime else "0",
        })
    except (InfeasibleProblem, EnumerationBudgetExceeded) as exc:
        row["status"] = f"error:{type(exc).__name__}"
    return row


def _cells(config: ExperimentConfig):
    for k in config.k_list:
        for l in config.l_list:
            for k_max in config.k_max_list:
                for algo in config.algorithms:
                    for inst in range(config.realizations):
                        yield (k, l, k_max, algo, inst)


def _run_cell(args):
    config, cell = args
    return cell, run_decompose(config, *cell)


def run_sweep(config: ExperimentConfig) -> list[dict]:
    """All rows of the sweep, in deterministic cell order."""
    cells = list(_cells(config))
    workers = int(os.environ.get("CFPART_WORKERS", "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = dict(pool.map(_run_cell, [(config, c) for c in cells],
                                    chunksize=1))
        rows = [results[c] for c in cells]
    else:
        rows = [run_decompose(config, *c) for c in cells]
    return rows


def _aggregate(rows, config):
    """Mean and standard-error rows per (K, L, Kmax, algo) cell."""
    out = []
    if config.realizations < 2:
        return out
    keys = []
    for r in rows:
        key = (r["K"], r["L"], r["Kmax"], r["algo"])
        if key not in keys:
            keys.append(key)
    numeric = ("objective_sumcut", "cap_approx", "cap_lb", "cap_mc",
               "cap_mc_se", "nodes", "runtime_ms")
    for key in keys:
        group = [r for r in rows
                 if (r["K"], r["L"], r["Kmax"], r["algo"]) == key
                 and not str(r["status"]).startswith("error")]
        if not group:
            continue
        for stat in ("mean", "se"):
            row = {"seed": "", "instance": stat, "algo": key[3], "K": key[0],
                   "L": key[1], "Kmax": key[2], "M": "", "status": "",
                   "objective_sumcut": "", "cap_approx": "", "cap_lb": "",
                   "cap_mc": "", "cap_mc_se": "", "nodes": "", "runtime_ms": ""}
            for col in numeric:
                vals = [float(r[col]) for r in group if r[col] != ""]
                if not vals:
                    continue
                if stat == "mean":
                    row[col] = repr(float(np.mean(vals)))
                else:
                    row[col] = repr(float(np.std(vals, ddof=1) / np.sqrt(len(vals)))
                                    if len(vals) > 1 else 0.0)
            out.append(row)
    return out


def rows_to_csv(rows) -> str:
    cols = CSV_HEADER.split(",")
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(",".join(str(r[c]) for c in cols))
    return "\n".join(lines) + "\n"


def write_csv_atomic(text: str, path: str):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def sweep_to_file(config: ExperimentConfig) -> tuple[str, bool]:
    rows = run_sweep(config)
    all_rows = rows + _aggregate(rows, config)
    text = rows_to_csv(all_rows)
    write_csv_atomic(text, config.output_path)
    ok = not any(str(r["status"]).startswith("error") for r in rows)
    return config.output_path, ok


def _load_layout(path) -> NetworkLayout:
    with open(path) as fh:
        return NetworkLayout.from_json(fh.read())


def _add_channel_args(p):
    p.add_argument("--alpha", type=float, default=4.0)
    p.add_argument("--p-over-n0-db", type=float, default=10.0)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cfpart",
        description="Decompose cell-free networks into capped subnetworks")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-layout", help="generate a random layout JSON")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--area-side", type=float, default=1.0)
    p.add_argument("--out", default="-")

    p = sub.add_parser("decompose", help="decompose one instance")
    p.add_argument("--layout", help="layout JSON file (else use --seed/--k/--l)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int)
    p.add_argument("--l", type=int)
    p.add_argument("--area-side", type=float, default=1.0)
    p.add_argument("--algo", choices=ALGORITHMS, required=True)
    p.add_argument("--k-max", type=int, required=True)
    _add_channel_args(p)
    p.add_argument("--mc-samples", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--node-limit", type=int)
    p.add_argument("--time-limit", type=float)
    p.add_argument("--solver-seed", type=int, default=0)
    p.add_argument("--out", default="-")

    p = sub.add_parser("evaluate", help="capacity of a given decomposition")
    p.add_argument("--layout", required=True)
    p.add_argument("--decomposition", required=True)
    _add_channel_args(p)
    p.add_argument("--mc-samples", type=int, default=0)
    p.add_argument("--mc-seed", type=int, default=0)
    p.add_argument("--out", default="-")

    p = sub.add_parser("sweep", help="run an experiment sweep from a config")
    p.add_argument("--config", required=True)
    p.add_argument("--output")
    p.add_argument("--realizations", type=int)
    p.add_argument("--base-seed", type=int)
    p.add_argument("--mc-samples", type=int)
    p.add_argument("--allow-errors", action="store_true")

    p = sub.add_parser("snapshot", help="per-subnetwork membership listing")
    p.add_argument("--layout", required=True)
    p.add_argument("--decomposition", required=True)
    p.add_argument("--out", default="-")

    args = parser.parse_args(argv)

    def emit(text, dest):
        if dest == "-":
            sys.stdout.write(text + "\n")
        else:
            with open(dest, "w") as fh:
                fh.write(text + "\n")

    if args.command == "gen-layout":
        layout = gen_layout(args.seed, args.k, args.l, args.area_side)
        emit(layout.to_json(), args.out)
        return 0

    if args.command == "decompose":
        if args.layout:
            layout = _load_layout(args.layout)
        else:
            if args.k is None or args.l is None:
                parser.error("need --layout or both --k and --l")
            layout = gen_layout(args.seed, args.k, args.l, args.area_side)
        config = ExperimentConfig(
            k_list=(layout.k,), l_list=(layout.l,), k_max_list=(args.k_max,),
            realizations=1, alpha=args.alpha, p_over_n0_db=args.p_over_n0_db,
            area_side=layout.area_side, algorithms=(args.algo,),
            mc_samples=args.mc_samples, base_seed=layout.seed,
            epsilon=args.epsilon, node_limit=args.node_limit,
            time_limit=args.time_limit)
        row = run_decompose(config, layout.k, layout.l, args.k_max,
                            args.algo, 0)
        emit(json.dumps(row), args.out)
        return 0 if not str(row["status"]).startswith("error") else 1

    if args.command == "evaluate":
        layout = _load_layout(args.layout)
        channel = ChannelModel.from_db(args.p_over_n0_db, alpha=args.alpha)
        gains = path_gains(layout, channel)
        with open(args.decomposition) as fh:
            decomp = Decomposition.from_json(fh.read(), layout.k)
        report = evaluate_decomposition(gains, channel, decomp,
                                        mc_samples=args.mc_samples,
                                        seed=args.mc_seed)
        emit(report.to_json(), args.out)
        return 0

    if args.command == "sweep":
        with open(args.config) as fh:
            config = ExperimentConfig.from_json(fh.read())
        overrides = {}
        if args.output is not None:
            overrides["output_path"] = args.output
        if args.realizations is not None:
            overrides["realizations"] = args.realizations
        if args.base_seed is not None:
            overrides["base_seed"] = args.base_seed
        if args.mc_samples is not None:
            overrides["mc_samples"] = args.mc_samples
        if overrides:
            config = replace(config, **overrides)
        path, ok = sweep_to_file(config)
        sys.stdout.write(f"wrote {path}\n")
        return 0 if (ok or args.allow_errors) else 1

    if args.command == "snapshot":
        layout = _load_layout(args.layout)
        with open(args.decomposition) as fh:
            decomp = Decomposition.from_json(fh.read(), layout.k)
        emit(json.dumps(membership_listing(decomp), indent=2), args.out)
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
