"""Command-line entry point: gen / seed / solve / bench / compare.

Exit codes: 0 success, 2 usage or validation error, 3 guarded failure (e.g.
the hard-instance generator gave up early), 4 internal error. All randomness
flows from --seed; rerunning with the same seed reproduces outputs byte for
byte, regardless of worker count.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
import traceback
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import bench
from .bench import BenchmarkSpec, PipelineConfig, RunRecord
from .problems import (
    bits_to_str,
    instance_id,
    load_instance,
    save_instance,
)
from .seeds import SdpConfig, rounding_costs, seed_best_of
from .problems import approx_ratio_beta

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_GUARDED = 3
EXIT_INTERNAL = 4


def _derive_seed(base: int, index: int) -> int:
    """Stable per-instance seed from the base seed and instance position."""
    return int(np.random.SeedSequence([base, index]).generate_state(1)[0])


def _pipeline_config(args) -> PipelineConfig:
    return PipelineConfig(
        alpha=args.alpha,
        trotter_steps=args.trotter_steps,
        num_bins=args.bins,
        rounding_trials=args.trials,
        seed_trials=args.seed_trials,
        repetitions=args.repetitions,
        rng_seed=args.seed,
    )


def cmd_gen(args) -> int:
    if args.kind == "max3sat":
        spec = BenchmarkSpec.for_max3sat(
            count=args.count,
            num_vars=args.num_vars,
            num_clauses=args.num_clauses,
            pogs_cutoff=args.cutoff,
            rounding_trials=args.trials,
            rng_seed=args.seed,
        )
    else:
        spec = BenchmarkSpec.for_max_bisection(
            count=args.count,
            num_vertices=args.num_vertices,
            edge_prob=args.edge_prob,
            pogs_cutoff=args.cutoff,
            rounding_trials=args.trials,
            rng_seed=args.seed,
        )
    if args.threshold is not None:
        spec = replace(spec, ratio_threshold=args.threshold)
    instances, stats = bench.gen_hard_instances(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ids = []
    for instance in instances:
        iid = instance_id(instance)
        save_instance(instance, out / f"{iid}.json")
        ids.append(iid)
    manifest = {
        "spec": spec.to_dict(),
        "instances": ids,
        "pogs_estimates": stats.pogs_estimates,
        "attempts": stats.attempts,
        "rejection_rate": stats.rejection_rate,
        "guard_tripped": stats.guard_tripped,
    }
    (out / "gen_manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=1), encoding="utf-8"
    )
    print(f"generated {len(ids)} instance(s) in {out} ({stats.attempts} attempts)")
    if stats.guard_tripped:
        print("warning: attempt guard tripped; set is partial", file=sys.stderr)
        return EXIT_GUARDED
    return EXIT_OK


def cmd_seed(args) -> int:
    instance = load_instance(args.instance)
    rng = np.random.default_rng(np.random.SeedSequence(args.seed))
    cfg = SdpConfig(rng_seed=_derive_seed(args.seed, 0))
    best = seed_best_of(instance, args.trials, rng, cfg=cfg)
    cost = float(rounding_costs(instance, best[None, :])[0])
    payload = {
        "instance_id": instance_id(instance),
        "seed": bits_to_str(best),
        "cost": cost,
        "beta": approx_ratio_beta(instance, best),
    }
    text = json.dumps(payload, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


def cmd_solve(args) -> int:
    instance = load_instance(args.instance)
    record = bench.run_pipeline(instance, args.depth, _pipeline_config(args))
    text = record.to_json()
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


def _bench_one(payload: tuple) -> dict:
    path, depth, config_dict, seed = payload
    instance = load_instance(path)
    config = PipelineConfig(
        alpha=config_dict["alpha"],
        trotter_steps=config_dict["trotter_steps"],
        num_bins=config_dict["num_bins"],
        rounding_trials=config_dict["rounding_trials"],
        seed_trials=config_dict["seed_trials"],
        repetitions=config_dict["repetitions"],
        rng_seed=seed,
    )
    return bench.run_pipeline(instance, depth, config).to_dict()


def cmd_bench(args) -> int:
    paths = sorted(Path(args.instances).glob("*.json"))
    paths = [p for p in paths if not p.name.endswith("manifest.json")]
    if not paths:
        raise ValueError(f"no instance files found in {args.instances}")
    out = Path(args.out)
    records_dir = out / "records"
    records_dir.mkdir(parents=True, exist_ok=True)
    config = _pipeline_config(args)

    pending = []
    records: list[RunRecord] = []
    for index, path in enumerate(paths):
        record_path = records_dir / f"{path.stem}_p{args.depth}.json"
        if record_path.exists():
            records.append(RunRecord.from_json(record_path.read_text(encoding="utf-8")))
            continue
        pending.append((index, path, record_path))

    if pending:
        jobs = [
            (str(path), args.depth, config.to_dict(), _derive_seed(args.seed, index))
            for index, path, _ in pending
        ]
        if args.workers > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=args.workers) as pool:
                results = list(pool.map(_bench_one, jobs))
        else:
            results = [_bench_one(job) for job in jobs]
        for (_, _, record_path), data in zip(pending, results):
            record = RunRecord.from_dict(data)
            record_path.write_text(record.to_json() + "\n", encoding="utf-8")
            records.append(record)

    paths_out = bench.export_results(
        records, out, manifest_extra={"pipeline": config.to_dict(), "base_seed": args.seed}
    )
    print(f"wrote {paths_out['csv']} and {paths_out['manifest']} ({len(records)} records)")
    return EXIT_OK


def cmd_compare(args) -> int:
    rows = []
    for results in args.results:
        path = Path(results)
        csv_path = path / "results.csv" if path.is_dir() else path
        with open(csv_path, encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
            for line in fh:
                rows.append(dict(zip(header, line.strip().split(","))))
    if not rows:
        raise ValueError("no result rows found")
    grouped: dict[tuple[str, str], list[float]] = {}
    for row in rows:
        grouped.setdefault((row["algorithm"], row["threshold"]), []).append(float(row["pogs"]))
    summary = [
        {
            "algorithm": algorithm,
            "threshold": threshold,
            "median_pogs": float(np.median(values)),
            "instances": len(values),
        }
        for (algorithm, threshold), values in sorted(grouped.items())
    ]
    if args.format == "json":
        print(json.dumps(summary))
    elif args.format == "csv":
        print("algorithm,threshold,median_pogs,instances")
        for entry in summary:
            print(f"{entry['algorithm']},{entry['threshold']},{entry['median_pogs']!r},{entry['instances']}")
    else:
        print(f"{'algorithm':<16}{'threshold':<12}{'median_pogs':<14}{'instances'}")
        for entry in summary:
            print(
                f"{entry['algorithm']:<16}{entry['threshold']:<12}"
                f"{entry['median_pogs']:<14.6g}{entry['instances']}"
            )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cbqoa",
        description="Classically-boosted quantum optimization: generate, seed, solve, benchmark.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    default_workers = int(os.environ.get("CBQOA_WORKERS", "1"))

    gen = sub.add_parser("gen", help="generate hard benchmark instances")
    gen.add_argument("--kind", choices=["max3sat", "max_bisection"], required=True)
    gen.add_argument("--count", type=int, default=10)
    gen.add_argument("--out", required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--num-vars", type=int, default=16)
    gen.add_argument("--num-clauses", type=int, default=200)
    gen.add_argument("--num-vertices", type=int, default=12)
    gen.add_argument("--edge-prob", type=float, default=0.5)
    gen.add_argument("--cutoff", type=float, default=0.05)
    gen.add_argument("--threshold", type=float, default=None)
    gen.add_argument("--trials", type=int, default=10000)
    gen.set_defaults(func=cmd_gen)

    seed = sub.add_parser("seed", help="run the classical seed algorithm on an instance")
    seed.add_argument("instance")
    seed.add_argument("--trials", type=int, default=10000)
    seed.add_argument("--seed", type=int, default=0)
    seed.add_argument("--out", default=None)
    seed.set_defaults(func=cmd_seed)

    def add_pipeline_flags(p):
        p.add_argument("--depth", type=int, default=3)
        p.add_argument("--alpha", type=float, default=0.5)
        p.add_argument("--trotter-steps", type=int, default=3)
        p.add_argument("--bins", type=int, default=1000)
        p.add_argument("--trials", type=int, default=10000)
        p.add_argument("--seed-trials", type=int, default=None)
        p.add_argument("--repetitions", type=int, default=None)
        p.add_argument("--seed", type=int, default=0)

    solve = sub.add_parser("solve", help="run the full pipeline on one instance")
    solve.add_argument("instance")
    solve.add_argument("--out", default=None)
    add_pipeline_flags(solve)
    solve.set_defaults(func=cmd_solve)

    benchp = sub.add_parser("bench", help="run the pipeline over a directory of instances")
    benchp.add_argument("instances")
    benchp.add_argument("--out", required=True)
    benchp.add_argument("--workers", type=int, default=default_workers)
    add_pipeline_flags(benchp)
    benchp.set_defaults(func=cmd_bench)

    compare = sub.add_parser("compare", help="summarize exported results")
    compare.add_argument("results", nargs="+", help="results.csv files or bench output dirs")
    compare.add_argument("--format", choices=["table", "json", "csv"], default="table")
    compare.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
