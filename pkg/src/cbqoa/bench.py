"""Hard-instance generation, good-solution probabilities, and pipeline runs.

The quality of a solution is its approximation ratio relative to a uniform
random feasible guess; an algorithm's POGS at threshold x is the probability
that one run outputs a solution with ratio >= x. Quantum algorithms are scored
exactly from their simulated output distribution; classical roundings are
scored empirically. Hard instances are those whose classical rounding rarely
clears the threshold, mirroring the screening procedure used to assemble the
benchmark sets.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Mapping, Optional

import numpy as np

from .cvar import AdamConfig, CvarConfig, tune_ansatz_params, tune_walk_params
from .mixer import WalkParams, build_family
from .problems import (
    CostSummary,
    Max3SatInstance,
    MaxBisectionInstance,
    ProblemInstance,
    as_bits,
    beta_values,
    bits_to_index,
    bits_to_str,
    cost_summary,
    instance_id,
)
from .seeds import SdpConfig, round_batch, rounding_costs, solve_relaxation
from .simulate import (
    AnsatzParams,
    CircuitConfig,
    _apply_layers,
    cbqoa_initial_state,
    uniform_feasible_state,
)

_BETA_TOL = 1e-12


# ---------------------------------------------------------------------------
# Random instance generators


def random_max3sat(
    rng: np.random.Generator, num_vars: int = 16, num_clauses: int = 200
) -> Max3SatInstance:
    """Random 3-literal clauses over distinct variables with U[0,1] weights."""
    clauses = []
    for _ in range(num_clauses):
        variables = rng.choice(num_vars, size=3, replace=False) + 1
        negate = rng.integers(0, 2, size=3)
        labels = [int(v + num_vars) if neg else int(v) for v, neg in zip(variables, negate)]
        clauses.append((*labels, float(rng.uniform(0.0, 1.0))))
    return Max3SatInstance(num_vars=num_vars, clauses=tuple(clauses))


def random_satisfiable_max3sat(
    rng: np.random.Generator, num_vars: int = 10, num_clauses: int = 40
) -> Max3SatInstance:
    """Unit-weight exactly-3-literal instance satisfied by a planted assignment."""
    planted = rng.integers(0, 2, size=num_vars)
    clauses = []
    for _ in range(num_clauses):
        variables = rng.choice(num_vars, size=3, replace=False) + 1
        negate = rng.integers(0, 2, size=3)
        pin = int(rng.integers(0, 3))
        negate[pin] = 1 - planted[variables[pin] - 1]  # that literal agrees with planted
        labels = [int(v + num_vars) if neg else int(v) for v, neg in zip(variables, negate)]
        clauses.append((*labels, 1.0))
    return Max3SatInstance(num_vars=num_vars, clauses=tuple(clauses))


def random_max_bisection(
    rng: np.random.Generator, num_vertices: int = 12, edge_prob: float = 0.5
) -> MaxBisectionInstance:
    """Erdos-Renyi graph with U[-1,1] edge weights."""
    edges = []
    for a in range(1, num_vertices + 1):
        for b in range(a + 1, num_vertices + 1):
            if rng.random() < edge_prob:
                edges.append((a, b, float(rng.uniform(-1.0, 1.0))))
    return MaxBisectionInstance(num_vertices=num_vertices, edges=tuple(edges))


# ---------------------------------------------------------------------------
# POGS metrics


def pogs_exact(
    distribution: Mapping[str, float],
    instance: ProblemInstance,
    threshold: float,
    summary: CostSummary | None = None,
) -> float:
    """Probability mass on solutions with approximation ratio >= threshold."""
    summary = summary or cost_summary(instance)
    betas = beta_values(instance, summary)
    feasible_mask = np.zeros(summary.diagonal.size, dtype=bool)
    feasible_mask[summary.feasible] = True
    total = 0.0
    for key, prob in distribution.items():
        index = bits_to_index(as_bits(key, instance.n))
        if prob > 1e-12 and not feasible_mask[index]:
            raise ValueError(f"distribution puts mass {prob} on infeasible string {key}")
        if betas[index] >= threshold - _BETA_TOL:
            total += prob
    return float(total)


def _pogs_from_probs(probs: np.ndarray, good_mask: np.ndarray) -> float:
    return float(probs[good_mask].sum())


def pogs_monte_carlo(
    sampler: Callable[[], np.ndarray],
    instance: ProblemInstance,
    threshold: float,
    trials: int,
    summary: CostSummary | None = None,
) -> float:
    """Fraction of sampled solutions with approximation ratio >= threshold."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    summary = summary or cost_summary(instance)
    betas = beta_values(instance, summary)
    hits = 0
    for _ in range(trials):
        index = bits_to_index(as_bits(sampler(), instance.n))
        if betas[index] >= threshold - _BETA_TOL:
            hits += 1
    return hits / trials


def pogs_repeated(pogs: float, k: int) -> float:
    """Probability that the best of k independent runs is good: 1 - (1-p)^k."""
    if not 0.0 <= pogs <= 1.0:
        raise ValueError("pogs must be in [0, 1]")
    if k < 1:
        raise ValueError("k must be >= 1")
    return 1.0 - (1.0 - pogs) ** k


# ---------------------------------------------------------------------------
# Hard-instance generation


@dataclass(frozen=True)
class BenchmarkSpec:
    """Generation settings: instance shape, hardness screen, and rng seed."""

    problem: str
    count: int = 100
    num_vars: int = 16
    num_clauses: int = 200
    num_vertices: int = 12
    edge_prob: float = 0.5
    ratio_threshold: float = 0.7
    pogs_cutoff: float = 0.05
    rounding_trials: int = 10000
    rng_seed: int = 0
    max_attempts_factor: int = 100

    def __post_init__(self):
        if self.problem not in ("max3sat", "max_bisection"):
            raise ValueError(f"unknown problem {self.problem!r}")
        if not 0 < self.pogs_cutoff < 1:
            raise ValueError("pogs_cutoff must be in (0, 1)")
        if self.ratio_threshold > 1:
            raise ValueError("ratio_threshold must be <= 1")
        if self.count < 1 or self.rounding_trials < 1:
            raise ValueError("count and rounding_trials must be >= 1")

    @classmethod
    def for_max3sat(cls, **overrides) -> "BenchmarkSpec":
        return cls(problem="max3sat", ratio_threshold=0.7, **overrides)

    @classmethod
    def for_max_bisection(cls, **overrides) -> "BenchmarkSpec":
        return cls(problem="max_bisection", ratio_threshold=0.99, **overrides)

    def to_dict(self) -> dict:
        return {
            "problem": self.problem,
            "count": self.count,
            "num_vars": self.num_vars,
            "num_clauses": self.num_clauses,
            "num_vertices": self.num_vertices,
            "edge_prob": self.edge_prob,
            "ratio_threshold": self.ratio_threshold,
            "pogs_cutoff": self.pogs_cutoff,
            "rounding_trials": self.rounding_trials,
            "rng_seed": self.rng_seed,
            "max_attempts_factor": self.max_attempts_factor,
        }


@dataclass
class GenerationStats:
    attempts: int = 0
    accepted: int = 0
    guard_tripped: bool = False
    pogs_estimates: list[float] = field(default_factory=list)

    @property
    def rejection_rate(self) -> float:
        return 1.0 - self.accepted / self.attempts if self.attempts else 0.0


def estimate_seed_pogs(
    instance: ProblemInstance,
    threshold: float,
    trials: int,
    rng: np.random.Generator,
    sdp_cfg: SdpConfig = SdpConfig(),
    summary: CostSummary | None = None,
) -> float:
    """Empirical POGS of the classical rounding: solve once, round many times."""
    summary = summary or cost_summary(instance)
    vectors = solve_relaxation(instance, sdp_cfg)
    assignments = round_batch(instance, vectors, rng, trials)
    costs = rounding_costs(instance, assignments)
    ratios = (summary.mean_value - costs) / (summary.mean_value - summary.optimum_value)
    return float((ratios >= threshold - _BETA_TOL).mean())


def gen_hard_instances(spec: BenchmarkSpec) -> tuple[list[ProblemInstance], GenerationStats]:
    """Generate instances whose classical rounding rarely clears the threshold.

    Repeatedly draws a random instance, estimates the rounding's POGS from
    `rounding_trials` roundings of one solved relaxation, and keeps the
    instance when the estimate falls below the cutoff. Gives up (returning a
    partial set with the guard flag raised) after max_attempts_factor * count
    attempts.
    """
    root = np.random.SeedSequence(spec.rng_seed)
    stats = GenerationStats()
    accepted: list[ProblemInstance] = []
    max_attempts = spec.max_attempts_factor * spec.count
    while len(accepted) < spec.count and stats.attempts < max_attempts:
        stats.attempts += 1
        gen_seq, sdp_seq, round_seq = root.spawn(3)
        gen_rng = np.random.default_rng(gen_seq)
        if spec.problem == "max3sat":
            instance = random_max3sat(gen_rng, spec.num_vars, spec.num_clauses)
        else:
            instance = random_max_bisection(gen_rng, spec.num_vertices, spec.edge_prob)
        summary = cost_summary(instance)
        if summary.degenerate:
            continue
        estimate = estimate_seed_pogs(
            instance,
            spec.ratio_threshold,
            spec.rounding_trials,
            np.random.default_rng(round_seq),
            SdpConfig(rng_seed=int(sdp_seq.generate_state(1)[0])),
            summary,
        )
        if estimate < spec.pogs_cutoff:
            accepted.append(instance)
            stats.accepted += 1
            stats.pogs_estimates.append(estimate)
    stats.guard_tripped = len(accepted) < spec.count
    return accepted, stats


# ---------------------------------------------------------------------------
# Full pipeline


def default_thresholds(problem: str) -> tuple[float, ...]:
    return (0.7, 0.8) if problem == "max3sat" else (0.99,)


def default_repetitions(problem: str) -> int:
    return 10 if problem == "max3sat" else 5


def default_seed_trials(problem: str, rounding_trials: int) -> int:
    """How many roundings compete to seed the walk.

    Max 3SAT uses a single classical run per pipeline run (the baseline it is
    compared against is the k-repeated classical algorithm). Max Bisection at
    desk scale needs the strong best-of-batch seed: its near-optimal threshold
    is unreachable from the neighborhood of a mediocre seed.
    """
    return 1 if problem == "max3sat" else rounding_trials


@dataclass(frozen=True)
class PipelineConfig:
    """Settings for one end-to-end run on one instance.

    `rounding_trials` sizes the empirical POGS estimate of the classical
    algorithm; `seed_trials` is how many of those roundings compete to become
    the walk seed (None: problem-dependent default, see default_seed_trials).
    """

    alpha: float = 0.5
    trotter_steps: int = 3
    num_bins: int = 1000
    rounding_trials: int = 10000
    seed_trials: Optional[int] = None
    thresholds: Optional[tuple[float, ...]] = None  # None: problem defaults
    repetitions: Optional[int] = None  # None: problem defaults
    adam: AdamConfig = AdamConfig()
    sdp: SdpConfig = SdpConfig()
    rng_seed: int = 0

    def __post_init__(self):
        if self.seed_trials is not None and not 1 <= self.seed_trials <= self.rounding_trials:
            raise ValueError("seed_trials must be in [1, rounding_trials]")

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "trotter_steps": self.trotter_steps,
            "num_bins": self.num_bins,
            "rounding_trials": self.rounding_trials,
            "seed_trials": self.seed_trials,
            "thresholds": list(self.thresholds) if self.thresholds else None,
            "repetitions": self.repetitions,
            "rng_seed": self.rng_seed,
        }


@dataclass
class RunRecord:
    """One benchmark run: seed, tuned parameters, and POGS per algorithm."""

    instance_id: str
    problem: str
    n: int
    depth: int
    seed_bits: str
    seed_cost: float
    seed_beta: float
    walk_time: float
    walk_sharpness: float
    betas: tuple[float, ...]
    gammas: tuple[float, ...]
    gm_betas: tuple[float, ...]
    gm_gammas: tuple[float, ...]
    pogs: dict[str, dict[str, float]]  # algorithm -> {threshold: value}
    pogs_boosted: dict[str, dict[str, float]]
    repetitions: int
    wall_time_s: float

    def to_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "problem": self.problem,
            "n": self.n,
            "depth": self.depth,
            "seed_bits": self.seed_bits,
            "seed_cost": self.seed_cost,
            "seed_beta": self.seed_beta,
            "walk_time": self.walk_time,
            "walk_sharpness": self.walk_sharpness,
            "betas": list(self.betas),
            "gammas": list(self.gammas),
            "gm_betas": list(self.gm_betas),
            "gm_gammas": list(self.gm_gammas),
            "pogs": self.pogs,
            "pogs_boosted": self.pogs_boosted,
            "repetitions": self.repetitions,
            "wall_time_s": self.wall_time_s,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunRecord":
        return cls(
            instance_id=data["instance_id"],
            problem=data["problem"],
            n=int(data["n"]),
            depth=int(data["depth"]),
            seed_bits=data["seed_bits"],
            seed_cost=float(data["seed_cost"]),
            seed_beta=float(data["seed_beta"]),
            walk_time=float(data["walk_time"]),
            walk_sharpness=float(data["walk_sharpness"]),
            betas=tuple(data["betas"]),
            gammas=tuple(data["gammas"]),
            gm_betas=tuple(data["gm_betas"]),
            gm_gammas=tuple(data["gm_gammas"]),
            pogs={a: dict(t) for a, t in data["pogs"].items()},
            pogs_boosted={a: dict(t) for a, t in data["pogs_boosted"].items()},
            repetitions=int(data["repetitions"]),
            wall_time_s=float(data["wall_time_s"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunRecord":
        return cls.from_dict(json.loads(text))


def _threshold_key(x: float) -> str:
    return f"{x:g}"


def run_pipeline(
    instance: ProblemInstance, depth: int, config: PipelineConfig = PipelineConfig()
) -> RunRecord:
    """Seed, tune the walk, tune the layers, and score every algorithm exactly.

    Records POGS for the classical seed algorithm (empirical over the rounding
    batch), the bare walk state, the depth-p ansatz, and the uniform-start
    baseline at the same depth, at every configured threshold.
    """
    iid = instance_id(instance)
    try:
        return _run_pipeline_inner(instance, depth, config, iid)
    except Exception as exc:
        raise RuntimeError(f"pipeline failed for instance {iid}: {exc}") from exc


def _run_pipeline_inner(
    instance: ProblemInstance, depth: int, config: PipelineConfig, iid: str
) -> RunRecord:
    if depth < 0:
        raise ValueError("depth must be >= 0")
    start = time.perf_counter()
    thresholds = config.thresholds or default_thresholds(instance.kind)
    reps = config.repetitions or default_repetitions(instance.kind)
    summary = cost_summary(instance)
    betas_table = beta_values(instance, summary)
    good_masks = {x: betas_table >= x - _BETA_TOL for x in thresholds}
    circuit_cfg = CircuitConfig(trotter_steps=config.trotter_steps)
    cvar_cfg = CvarConfig(alpha=config.alpha)

    root = np.random.SeedSequence(config.rng_seed)
    sdp_seq, round_seq, walk_seq, ansatz_seq, gm_seq = root.spawn(5)

    # Classical seed: one relaxation solve, many roundings.
    vectors = solve_relaxation(
        instance, replace(config.sdp, rng_seed=int(sdp_seq.generate_state(1)[0]))
    )
    assignments = round_batch(
        instance, vectors, np.random.default_rng(round_seq), config.rounding_trials
    )
    costs = rounding_costs(instance, assignments)
    ratios = (summary.mean_value - costs) / (summary.mean_value - summary.optimum_value)
    seed_trials = config.seed_trials or default_seed_trials(
        instance.kind, config.rounding_trials
    )
    best_trial = int(np.argmin(costs[:seed_trials]))
    seed_bits = assignments[best_trial]
    seed_algorithm = "kz" if instance.kind == "max3sat" else "fl"

    pogs: dict[str, dict[str, float]] = {
        seed_algorithm: {
            _threshold_key(x): float((ratios >= x - _BETA_TOL).mean()) for x in thresholds
        }
    }

    # Walk tuning and the bare walk state.
    family = build_family(instance, seed_bits)
    walk_time, walk_sharpness, _ = tune_walk_params(
        instance,
        seed_bits,
        family,
        cvar_cfg,
        replace(config.adam, rng_seed=int(walk_seq.generate_state(1)[0])),
        circuit_cfg,
    )
    walk = WalkParams(time=walk_time, sharpness=walk_sharpness)
    psi = cbqoa_initial_state(instance, seed_bits, walk, family=family, config=circuit_cfg)
    psi_probs = np.abs(psi) ** 2
    pogs["cbqoa_0"] = {
        _threshold_key(x): _pogs_from_probs(psi_probs, good_masks[x]) for x in thresholds
    }

    betas: tuple[float, ...] = ()
    gammas: tuple[float, ...] = ()
    gm_betas: tuple[float, ...] = ()
    gm_gammas: tuple[float, ...] = ()
    if depth >= 1:
        betas, gammas, _ = tune_ansatz_params(
            instance,
            psi,
            depth,
            cvar_cfg,
            replace(config.adam, rng_seed=int(ansatz_seq.generate_state(1)[0])),
            backend="fast_binned",
            num_bins=config.num_bins,
        )
        final = _apply_layers(
            psi.copy(), psi, summary.diagonal, AnsatzParams(betas=betas, gammas=gammas)
        )
        final_probs = np.abs(final) ** 2
        pogs[f"cbqoa_{depth}"] = {
            _threshold_key(x): _pogs_from_probs(final_probs, good_masks[x]) for x in thresholds
        }

    gm_psi = uniform_feasible_state(instance)
    if depth >= 1:
        gm_betas, gm_gammas, _ = tune_ansatz_params(
            instance,
            gm_psi,
            depth,
            cvar_cfg,
            replace(config.adam, rng_seed=int(gm_seq.generate_state(1)[0])),
            backend="fast_binned",
            num_bins=config.num_bins,
        )
        gm_final = _apply_layers(
            gm_psi.copy(), gm_psi, summary.diagonal, AnsatzParams(betas=gm_betas, gammas=gm_gammas)
        )
    else:
        gm_final = gm_psi
    gm_probs = np.abs(gm_final) ** 2
    pogs[f"gm_qaoa_{depth}"] = {
        _threshold_key(x): _pogs_from_probs(gm_probs, good_masks[x]) for x in thresholds
    }

    pogs_boosted = {
        algorithm: {key: pogs_repeated(value, reps) for key, value in per.items()}
        for algorithm, per in pogs.items()
    }

    return RunRecord(
        instance_id=iid,
        problem=instance.kind,
        n=instance.n,
        depth=depth,
        seed_bits=bits_to_str(seed_bits),
        seed_cost=float(costs[best_trial]),
        seed_beta=float(ratios[best_trial]),
        walk_time=walk_time,
        walk_sharpness=walk_sharpness,
        betas=betas,
        gammas=gammas,
        gm_betas=gm_betas,
        gm_gammas=gm_gammas,
        pogs=pogs,
        pogs_boosted=pogs_boosted,
        repetitions=reps,
        wall_time_s=time.perf_counter() - start,
    )


# ---------------------------------------------------------------------------
# Export

RESULTS_COLUMNS = ["instance_id", "problem", "depth", "algorithm", "threshold", "pogs"]


def export_results(records: list[RunRecord], out_dir, manifest_extra: dict | None = None) -> dict:
    """Write results.csv (one row per instance/algorithm/threshold) and manifest.json.

    Rows are sorted by (instance_id, depth) with algorithms in recorded order;
    the manifest carries the full records so an export can be re-imported
    losslessly.
    """
    if not records:
        raise ValueError("no records to export")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ordered = sorted(records, key=lambda r: (r.instance_id, r.depth))
    csv_path = out / "results.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULTS_COLUMNS)
        for record in ordered:
            for algorithm, per in record.pogs.items():
                for key, value in per.items():
                    writer.writerow(
                        [record.instance_id, record.problem, record.depth, algorithm, key, repr(value)]
                    )
    manifest = {
        "format_version": 1,
        "columns": RESULTS_COLUMNS,
        "records": [r.to_dict() for r in ordered],
    }
    if manifest_extra:
        manifest.update(manifest_extra)
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=1), encoding="utf-8")
    return {"csv": csv_path, "manifest": manifest_path}


def import_results(out_dir) -> list[RunRecord]:
    manifest = json.loads((Path(out_dir) / "manifest.json").read_text(encoding="utf-8"))
    return [RunRecord.from_dict(d) for d in manifest["records"]]
