"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 infeasible request (not enough
information, enumeration guard), 4 numerical failure.

CSV schemas:
  info   lambda,coordinate,f,v,r_star        (coordinate "total" sums the rows)
  bench  n0,algorithm,replication,seed,tries_to_success,comparisons,wall_time,success
  run    x0_index,x1_index,score,first_try_seen  (candidates)
  oracle lambda,success,tree_bound,forest_tries_bound,big_n
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import engine, information, oracle
from .exponents import NumericalError
from .model import (
    DataModel,
    Dataset,
    ModelError,
    PRESETS,
    generate_instance,
    preset,
    read_dataset,
    read_model,
    sample_pairs,
    write_dataset,
)

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_NUMERIC = 0, 2, 3, 4
ALGORITHMS = ("forest", "sparse", "classic", "greedy", "brute")
BENCH_COLUMNS = ["n0", "algorithm", "replication", "seed", "tries_to_success", "comparisons", "wall_time", "success"]


def load_model(source: str, n0: int | None = None, n1: int | None = None) -> DataModel:
    """A model file path, or a preset spec such as ``bernoulli:p=0.9,d=64``."""
    path = Path(source)
    if path.exists():
        model = read_model(path)
        if n0 is not None:
            model = model.with_sizes(n0, n1 if n1 is not None else n0)
        return model
    name = source.partition(":")[0]
    if name not in PRESETS:
        raise ModelError(f"{source!r} is neither a model file nor a preset ({', '.join(sorted(PRESETS))})")
    return preset(source, n0 or 1024, n1)


def parse_grid(text: str, kind=float) -> list:
    """``0,0.5,1`` or ``start:stop:step`` (inclusive stop)."""
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        if step <= 0:
            raise ValueError("grid step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [kind(start + k * step) for k in range(max(count, 0))]
    return [kind(v) for v in text.split(",") if v.strip()]


def _tries_arg(text: str) -> int | str:
    if text == "auto":
        return text
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("tries must be nonnegative")
    return value


# ---------------------------------------------------------------------------
# Benchmarks
# ---------------------------------------------------------------------------


@dataclass
class ExperimentSpec:
    model: DataModel
    n0_grid: list[int]
    algorithms: list[str] = field(default_factory=lambda: ["forest"])
    replications: int = 1
    seed: int = 0
    window: int = engine.DEFAULT_WINDOW
    max_tries: int = 10_000
    n1: int | None = None
    k: int | None = None
    p: float | None = None
    exponent_mode: str = "exact"
    train_pairs: int = 2000

    def __post_init__(self):
        if not self.n0_grid:
            raise ValueError("the n0 grid is empty")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad or not self.algorithms:
            raise ValueError(f"unknown algorithms {bad}; choose from {ALGORITHMS}")


def replication_seed(seed: int, n0: int, rep: int) -> int:
    return int(np.random.SeedSequence([seed, n0, rep]).generate_state(1, np.uint64)[0])


def _bench_one(spec: ExperimentSpec, algo: str, inst: Dataset, model: DataModel, seed: int):
    cfg = engine.SearchConfig(
        window=spec.window,
        tries=spec.max_tries,
        master_seed=seed,
        stop_on_planted=True,
        collect_candidates=False,
        score=False,
        exponent_mode=spec.exponent_mode,
    )
    if algo == "forest":
        return engine.search(inst, model, cfg)
    if algo == "sparse":
        return engine.sparse_search(inst.to_sparse(), model, cfg)
    if algo == "classic":
        k = spec.k if spec.k is not None else max(0, round(math.log2(inst.n0)))
        return engine.classic_search(inst, spec.p, min(k, inst.d), cfg)
    if algo == "greedy":
        train = sample_pairs(model, spec.train_pairs, seed ^ 0x5EED)
        return engine.greedy_trained_search(train, inst, cfg)
    best = engine.brute_force(inst, engine.RarityScorer(model))
    hit = (best.x0_index, best.x1_index) == inst.planted
    return engine.SearchReport(1, inst.n0 * inst.n1, success=hit, first_success_try=1 if hit else None)


def run_benchmark(spec: ExperimentSpec) -> list[dict]:
    """One row per (n0, algorithm, replication); instances are shared across algorithms."""
    rows = []
    for n0 in spec.n0_grid:
        model = spec.model.with_sizes(n0, spec.n1 if spec.n1 is not None else n0)
        for rep in range(spec.replications):
            seed = replication_seed(spec.seed, n0, rep)
            inst = generate_instance(model, seed)
            for algo in spec.algorithms:
                start = time.perf_counter()
                report = _bench_one(spec, algo, inst, model, seed)
                rows.append(
                    {
                        "n0": n0,
                        "algorithm": algo,
                        "replication": rep,
                        "seed": seed,
                        "tries_to_success": report.first_success_try if report.success else "",
                        "comparisons": report.total_comparisons,
                        "wall_time": round(time.perf_counter() - start, 6),
                        "success": int(report.success),
                    }
                )
    rows.sort(key=lambda r: (r["n0"], r["algorithm"], r["replication"]))
    return rows


def write_rows(rows: list[dict], columns: list[str], out) -> None:
    fh = open(out, "w", newline="") if out and out != "-" else sys.stdout
    try:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if fh is not sys.stdout:
            fh.close()


def _emit_json(payload, out) -> None:
    text = json.dumps(payload, indent=2, default=engine._json_default)
    if out and out != "-":
        Path(out).write_text(text + "\n")
    else:
        print(text)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_gen(args) -> int:
    model = load_model(args.model, args.n0, args.n1)
    ds = generate_instance(model, args.seed, strict=args.strict)
    if args.format == "sparse":
        ds = ds.to_sparse()
    write_dataset(ds, args.out, args.format)
    return EXIT_OK


def cmd_info(args) -> int:
    model = load_model(args.model)
    rows = []
    for lam in parse_grid(args.lambdas):
        f_total = v_total = 0.0
        for i, coord in enumerate(model.coords):
            res = information.forest_information(coord, lam)
            v = information.variance_v(coord, lam)
            f_total += res.f_value
            v_total += v
            if not args.totals_only:
                rows.append({"lambda": lam, "coordinate": i, "f": res.f_value, "v": v, "r_star": res.r_star})
        rows.append({"lambda": lam, "coordinate": "total", "f": f_total, "v": v_total, "r_star": ""})
    write_rows(rows, ["lambda", "coordinate", "f", "v", "r_star"], args.out)
    return EXIT_OK


def cmd_plan(args) -> int:
    model = load_model(args.model)
    result = information.plan_tries(model, args.n0, args.window, args.epsilon, args.delta)
    _emit_json(result.to_dict(), args.out)
    return EXIT_OK


def cmd_cutoff(args) -> int:
    model = load_model(args.model)
    lam, ln_t = information.cutoff_exponent(model, args.n0)
    _emit_json({"lambda_cut": lam, "ln_tries": ln_t, "tries": math.exp(ln_t)}, args.out)
    return EXIT_OK


def cmd_run(args) -> int:
    dataset = read_dataset(args.data)
    model = load_model(args.model, dataset.n0, dataset.n1) if args.model else None
    cfg = engine.SearchConfig(
        window=args.window,
        tries=args.tries,
        master_seed=args.seed,
        stop_on_planted=args.stop_on_planted,
        score_floor=args.score_floor,
        exponent_mode=args.exponent_mode,
        swap_roles=args.swap_roles,
        epsilon=args.epsilon,
        delta=args.delta,
    )
    if args.algo == "forest":
        report = engine.search(dataset, model, cfg)
    elif args.algo == "sparse":
        report = engine.sparse_search(dataset, model, cfg)
    elif args.algo == "classic":
        k = args.k if args.k is not None else max(0, round(math.log2(dataset.n0)))
        report = engine.classic_search(dataset, args.p, k, cfg)
    elif args.algo == "greedy":
        if not args.train:
            raise ValueError("--algo greedy needs --train (a dataset whose i-th X0 and X1 points are pairs)")
        train = read_dataset(args.train).to_dense()
        if train.n0 != train.n1:
            raise ValueError("training file must hold equally many X0 and X1 points")
        report = engine.greedy_trained_search((train.x0, train.x1), dataset, cfg)
    else:
        scorer = engine.RarityScorer(model) if model is not None else engine.AgreementScorer()
        best = engine.brute_force(dataset, scorer)
        report = engine.SearchReport(1, dataset.n0 * dataset.n1)
        report.candidates = [engine.Candidate(best.x0_index, best.x1_index, best.score, 0)]
        report.success = dataset.planted == (best.x0_index, best.x1_index)
        report.first_success_try = 1 if report.success else None
    _emit_json(report.to_dict(), args.out)
    if args.candidates:
        report.write_candidates_csv(args.candidates)
    return EXIT_OK


def cmd_bench(args) -> int:
    spec = ExperimentSpec(
        model=load_model(args.model),
        n0_grid=parse_grid(args.n0_grid, int),
        algorithms=[a for a in args.algo.split(",") if a],
        replications=args.reps,
        seed=args.seed,
        window=args.window,
        max_tries=args.tries,
        n1=args.n1,
        k=args.k,
        p=args.p,
        exponent_mode=args.exponent_mode,
    )
    write_rows(run_benchmark(spec), BENCH_COLUMNS, args.out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    model = load_model(args.model)
    forest = oracle.read_forest(args.forest)
    success = oracle.forest_success_probability(model, forest)
    payload = {"success": success, "trees": len(forest), "tree_sums": [oracle.tree_success_probability(model, t) for t in forest]}
    if args.bounds:
        big_n = 1.0 / oracle.max_leaf_probability(model, forest)
        rows = []
        for lam in parse_grid(args.bounds):
            tree_b = information.tree_success_bound(model, lam, big_n).value
            forest_b = information.forest_tries_lower_bound(model, lam, big_n, success).value if 0 < success < 1 else ""
            rows.append({"lambda": lam, "success": success, "tree_bound": tree_b, "forest_tries_bound": forest_b, "big_n": big_n})
        write_rows(rows, ["lambda", "success", "tree_bound", "forest_tries_bound", "big_n"], args.out)
    else:
        _emit_json(payload, args.out)
    return EXIT_OK


def cmd_dimred(args) -> int:
    res = information.dimred_comparison(args.p01, args.p11, args.p1_star, args.n)
    payload = {
        "c": res.c,
        "ideal_dimred_exp": res.ideal_dimred_exp,
        "im_exp": res.im_exp,
        "direct_exp_exact": res.direct_exp_exact,
        "direct_exp_approx": res.direct_exp_approx,
    }
    if args.n is not None:
        payload["tries"] = res.tries(args.n)
    _emit_json(payload, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lexforest",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    model_help = f"model file or preset spec name[:k=v,...]; presets: {', '.join(sorted(PRESETS))}"

    p = sub.add_parser("gen", help="generate a planted-pair dataset")
    p.add_argument("--model", required=True, help=model_help)
    p.add_argument("--n0", type=int, required=True)
    p.add_argument("--n1", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("dense", "sparse"), default="dense")
    p.add_argument("--strict", action="store_true", help="require explicit X1 marginals")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("info", help="CSV of F and V per coordinate over a lambda grid")
    p.add_argument("--model", required=True, help=model_help)
    p.add_argument("--lambdas", default="0:3:0.25", help="comma list or start:stop:step")
    p.add_argument("--totals-only", action="store_true")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("plan", help="try budget with variance conditions, as JSON")
    p.add_argument("--model", required=True, help=model_help)
    p.add_argument("--n0", type=int, required=True)
    p.add_argument("--window", type=int, default=engine.DEFAULT_WINDOW)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=1 / 14)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("cutoff", help="cutoff exponent and predicted ln T, as JSON")
    p.add_argument("--model", required=True, help=model_help)
    p.add_argument("--n0", type=int, required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_cutoff)

    p = sub.add_parser("run", help="search a dataset file; JSON report plus optional candidate CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--model", help=model_help)
    p.add_argument("--algo", choices=ALGORITHMS, default="forest")
    p.add_argument("--tries", type=_tries_arg, default="auto")
    p.add_argument("--window", type=int, default=engine.DEFAULT_WINDOW)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--k", type=int, help="classic: coordinates per bucket key")
    p.add_argument("--p", type=float, help="classic: agreement probability for the auto budget")
    p.add_argument("--train", help="greedy: training pairs file")
    p.add_argument("--score-floor", type=float, default=-math.inf)
    p.add_argument("--exponent-mode", choices=("exact", "conservative"), default="exact")
    p.add_argument("--swap-roles", action="store_true")
    p.add_argument("--stop-on-planted", action="store_true")
    p.add_argument("--candidates", help="write the candidate CSV here")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="replicated runs over an n0 grid; long-form CSV")
    p.add_argument("--model", required=True, help=model_help)
    p.add_argument("--n0", dest="n0_grid", required=True, help="n0 grid, e.g. 256,512,1024")
    p.add_argument("--n1", type=int)
    p.add_argument("--algo", default="forest", help=f"comma list from {','.join(ALGORITHMS)}")
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tries", type=int, default=10_000, help="per-replication try cap")
    p.add_argument("--window", type=int, default=engine.DEFAULT_WINDOW)
    p.add_argument("--k", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--exponent-mode", choices=("exact", "conservative"), default="exact")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("oracle", help="exact forest success probability, optionally against the bounds")
    p.add_argument("--model", required=True, help=model_help)
    p.add_argument("--forest", required=True)
    p.add_argument("--bounds", help="lambda grid for the bound table")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("dimred", help="dimensionality-reduction exponent comparison")
    p.add_argument("--p01", type=float, required=True)
    p.add_argument("--p11", type=float, required=True)
    p.add_argument("--p1-star", type=float, required=True)
    p.add_argument("--n", type=float)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_dimred)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (information.NotEnoughInformation, oracle.OracleGuardError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
