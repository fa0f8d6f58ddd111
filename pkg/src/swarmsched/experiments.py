"""Reproducible experiment campaigns over all solver and simulation backends.

An experiment is a single JSON document with a "kind" discriminator; running
it produces plot-ready CSV files plus a manifest that embeds the spec, the
seeds, and the package version, so a campaign can be reproduced byte for
byte from its manifest alone.  Stochastic kinds fan out over seeds with a
bounded worker pool and merge replications into mean and standard error.
"""

from __future__ import annotations

import io
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._version import __version__ as _version
from .continuum import TwoDegreeSystem, integrate_two_class
from .fullstack import FullStackConfig, PeerClass, run_fullstack
from .game import best_global, build_payoff_table, nash_equilibria
from .graphs import generate_ba, generate_er, generate_ws
from .mean_field import (MeanFieldConfig, integrate_full_rate_equation,
                         solve_fixed_point, startup_latency)
from .state_space import ReductionInstance, check_reduction_conditions
from .stochastic import SimConfig, SimMetrics, StrategyRule, run as run_sim

OUTPUT_ROOT_ENV = "SWARMSCHED_OUTPUT_ROOT"

KINDS = ("mean_field", "continuum", "stochastic", "game", "state_space",
         "fullstack", "figure_recipe")

STOCHASTIC_KINDS = ("stochastic", "fullstack")


class SpecValidationError(ValueError):
    """The experiment document is malformed; maps to exit code 2."""


@dataclass
class ExperimentSpec:
    kind: str
    parameters: dict
    seeds: list[int]
    output_dir: str
    workers: int | None = None

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentSpec":
        if "spec" in doc:  # manifest round-trip: unwrap the embedded spec
            doc = doc["spec"]
        kind = doc.get("kind")
        if kind not in KINDS:
            raise SpecValidationError(
                f"field 'kind' must be one of {KINDS}, got {kind!r}")
        params = doc.get("parameters")
        if not isinstance(params, dict):
            raise SpecValidationError("field 'parameters' must be an object")
        seeds = doc.get("seeds", [])
        if not isinstance(seeds, list) or any(not isinstance(s, int) for s in seeds):
            raise SpecValidationError("field 'seeds' must be a list of integers")
        resolved_kind = kind
        if kind == "figure_recipe":
            recipe = params.get("name")
            if recipe not in FIGURE_RECIPES:
                raise SpecValidationError(
                    f"field 'parameters.name' must be one of "
                    f"{sorted(FIGURE_RECIPES)}, got {recipe!r}")
        if _needs_seeds(resolved_kind, params) and not seeds:
            raise SpecValidationError(
                "field 'seeds' must be non-empty for stochastic kinds")
        out = doc.get("output_dir")
        if not out:
            root = os.environ.get(OUTPUT_ROOT_ENV, ".")
            out = str(Path(root) / f"{kind}-{int(time.time())}")
        return cls(kind, params, seeds, out, doc.get("workers"))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "parameters": self.parameters,
                "seeds": self.seeds, "output_dir": self.output_dir}


def _needs_seeds(kind: str, params: dict) -> bool:
    if kind in STOCHASTIC_KINDS:
        return True
    if kind == "figure_recipe":
        return FIGURE_RECIPES[params["name"]]["kind"] in STOCHASTIC_KINDS
    return False


def _build_graph(params: dict, seed: int):
    model = params.get("graph_model", "ws")
    m = params["peer_count"]
    if model == "ws":
        return generate_ws(m, params.get("ring_degree", 8),
                           params.get("rewire_prob", 0.2), seed)
    if model == "ba":
        return generate_ba(m, params.get("m_attach", 4), seed)
    if model == "er":
        return generate_er(m, params.get("mean_degree", 8.0), seed)
    raise SpecValidationError(f"unknown graph model {model!r}")


def _mean_field_config(params: dict) -> MeanFieldConfig:
    return MeanFieldConfig(
        buffer_len=params["buffer_len"],
        peer_count=params["peer_count"],
        contact_scale=params["contact_scale"],
        degree_classes=[tuple(c) for c in params["degree_classes"]],
    )


def _two_degree_system(params: dict) -> TwoDegreeSystem:
    return TwoDegreeSystem.from_population(
        params["k1"], params["k2"], params["pi1"], params["contact_scale"],
        peer_count=params.get("peer_count"),
        p1_boundary=params.get("p1_boundary"))


def _stochastic_config(params: dict, seed: int) -> SimConfig:
    rule_kind = params.get("strategy_rule", "mixed")
    rule = StrategyRule(rule_kind, params.get("threshold_quantile", 0.2))
    return SimConfig(
        graph=_build_graph(params, params.get("graph_seed", seed)),
        buffer_len=params["buffer_len"],
        contact_scale=params["contact_scale"],
        strategy_rule=rule,
        breakage_prob=params.get("breakage_prob", 0.01),
        shifting=params.get("shifting", "deterministic"),
        horizon=params.get("horizon", 4000),
        burn_in=params.get("burn_in"),
        seed=seed,
    )


def _fullstack_config(params: dict, seed: int) -> FullStackConfig:
    kwargs = dict(params)
    kwargs.pop("graph_seed", None)
    if "classes" in kwargs:
        kwargs["classes"] = [PeerClass(**c) for c in kwargs["classes"]]
    return FullStackConfig(seed=seed, **kwargs)


def _run_stochastic_seed(args) -> SimMetrics:
    params, seed = args
    return run_sim(_stochastic_config(params, seed))


def _run_fullstack_seed(args):
    params, seed = args
    return run_fullstack(_fullstack_config(params, seed))


def _pool_map(fn, jobs, workers: int | None):
    if workers is None:
        workers = os.cpu_count() or 1
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def merge_replications(curves: list[np.ndarray],
                       counts: list[int]) -> tuple[np.ndarray, np.ndarray]:
    """Sample-size-weighted mean and standard error across seeds."""
    stack = np.asarray(curves, dtype=float)
    weights = np.asarray(counts, dtype=float)
    weights = weights / weights.sum()
    mean = weights @ stack
    if len(curves) > 1:
        dev = stack - mean
        var = (weights @ dev ** 2) * len(curves) / (len(curves) - 1)
        se = np.sqrt(var / len(curves))
    else:
        se = np.zeros_like(mean)
    return mean, se


# ---------------------------------------------------------------------------
# kind runners: each returns {filename: csv text} plus a summary dict
# ---------------------------------------------------------------------------

def _run_mean_field(spec: ExperimentSpec):
    cfg = _mean_field_config(spec.parameters)
    table = solve_fixed_point(cfg)
    latency = startup_latency(cfg, table)
    files = {"buffer_table.csv": _tag_rows(table.to_csv(), "analytic")}
    if spec.parameters.get("with_full_state_oracle"):
        oracle = integrate_full_rate_equation(cfg)
        files["full_state_oracle.csv"] = _tag_rows(oracle.to_csv(), "analytic")
    summary = {
        "continuity_global": table.continuity(),
        "startup_latency_global_normalized": latency.global_normalized,
        "normalization": latency.normalization,
    }
    return files, summary


def _run_continuum(spec: ExperimentSpec):
    params = spec.parameters
    sys_ = _two_degree_system(params)
    strategies = tuple(params.get("strategies", ("EDF", "LDF")))
    traj = integrate_two_class(sys_, strategies, float(params["buffer_len"]),
                               step=params.get("step", 0.01))
    files = {"trajectory.csv": _tag_rows(traj.to_csv(), "analytic")}
    return files, {"endpoint": dict(zip(("y1", "y2", "y"), traj.endpoint())),
                   "eps": traj.eps}


def _run_game(spec: ExperimentSpec):
    params = spec.parameters
    sys_ = _two_degree_system(params)
    table = build_payoff_table(sys_, params["buffer_len"],
                               backend=params.get("backend", "mean_field"))
    files = {"payoff_table.csv": _tag_rows(table.to_csv(), "analytic")}
    summary: dict = {"complete": table.complete}
    if table.complete:
        eq = nash_equilibria(table)
        summary["nash_equilibria"] = [list(e) for e in eq]
        summary["best_global"] = list(best_global(table))
        files["game_report.json"] = table.report_json(eq)
    else:
        files["game_report.json"] = table.report_json()
    return files, summary


def _run_state_space(spec: ExperimentSpec):
    params = spec.parameters
    inst = ReductionInstance(params["peer_count"], params["buffer_len"],
                             tuple(params["row_sums"]),
                             params.get("a0", 1.0))
    report = check_reduction_conditions(inst)
    files = {"reduction_report.json": json.dumps(report.as_dict(), indent=2)}
    return files, {"necessary_holds": report.necessary_holds,
                   "sufficient_holds": report.sufficient_holds}


def _run_stochastic(spec: ExperimentSpec):
    jobs = [(spec.parameters, seed) for seed in sorted(spec.seeds)]
    results = _pool_map(_run_stochastic_seed, jobs, spec.workers)
    files = {}
    for metrics in results:
        files[f"seed_{metrics.seed}.csv"] = _tag_rows(metrics.to_csv(),
                                                      str(metrics.seed))
    mean, se = merge_replications([m.buffer_prob_global for m in results],
                                  [m.samples for m in results])
    buf = io.StringIO()
    buf.write("buffer_index,probability,stderr,seed\n")
    for i in range(len(mean)):
        buf.write(f"{i + 1},{mean[i]:.17g},{se[i]:.17g},merged\n")
    files["merged_global.csv"] = buf.getvalue()
    summary = {
        "continuity_global_mean": float(np.mean([m.continuity_global
                                                 for m in results])),
        "continuity_global_se": float(np.std([m.continuity_global
                                              for m in results], ddof=1)
                                      / np.sqrt(len(results)))
        if len(results) > 1 else 0.0,
        "startup_latency_normalized_mean": float(np.mean(
            [m.startup_latency_global_normalized for m in results])),
        "seeds": sorted(spec.seeds),
    }
    return files, summary


def _run_fullstack_kind(spec: ExperimentSpec):
    jobs = [(spec.parameters, seed) for seed in sorted(spec.seeds)]
    results = _pool_map(_run_fullstack_seed, jobs, spec.workers)
    files = {}
    for metrics in results:
        files[f"seed_{metrics.seed}.csv"] = _tag_rows(metrics.to_csv(),
                                                      str(metrics.seed))
    conts = [m.continuity_global for m in results]
    reqs = [m.requests_per_second_global for m in results]
    summary = {
        "continuity_global_mean": float(np.mean(conts)),
        "continuity_global_se": (float(np.std(conts, ddof=1) / np.sqrt(len(conts)))
                                 if len(conts) > 1 else 0.0),
        "requests_per_second_mean": float(np.mean(reqs)),
        "seeds": sorted(spec.seeds),
    }
    return files, summary


def _tag_rows(csv_text: str, seed_tag: str) -> str:
    """Append a seed/provenance column to every CSV row."""
    lines = csv_text.strip().split("\n")
    out = [lines[0] + ",seed"]
    out.extend(f"{line},{seed_tag}" for line in lines[1:])
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# figure recipes: named campaigns mirroring the study's plots
# ---------------------------------------------------------------------------

FIGURE_RECIPES: dict[str, dict] = {
    "ws_buffer_probabilities": {
        "kind": "stochastic",
        "description": "availability curves for the three assignments on a "
                       "small-world graph, M=5000, n=40, contact scale 0.25",
        "sweep": [("pure_ldf", {}), ("pure_edf", {}), ("mixed", {})],
        "parameters": {"graph_model": "ws", "peer_count": 5000,
                       "ring_degree": 8, "rewire_prob": 0.2, "buffer_len": 40,
                       "contact_scale": 0.25, "horizon": 2000},
    },
    "ba_buffer_probabilities": {
        "kind": "stochastic",
        "description": "availability curves for the three assignments on a "
                       "preferential-attachment graph, M=5000, n=40",
        "sweep": [("pure_ldf", {}), ("pure_edf", {}), ("mixed", {})],
        "parameters": {"graph_model": "ba", "peer_count": 5000, "m_attach": 4,
                       "buffer_len": 40, "contact_scale": 0.25,
                       "horizon": 2000},
    },
    "ws_exponential_shifting": {
        "kind": "stochastic",
        "description": "same comparison with per-peer exponential shifting, "
                       "M=2000, n=40",
        "sweep": [("pure_ldf", {}), ("pure_edf", {}), ("mixed", {})],
        "parameters": {"graph_model": "ws", "peer_count": 2000,
                       "ring_degree": 8, "rewire_prob": 0.2, "buffer_len": 40,
                       "contact_scale": 0.25, "shifting": "exponential",
                       "horizon": 2000},
    },
    "ws_mixed_crossover": {
        "kind": "stochastic",
        "description": "weak/strong class curves under the mixed assignment "
                       "on a small-world graph, M=2000, n=40",
        "sweep": [("mixed", {})],
        "parameters": {"graph_model": "ws", "peer_count": 2000,
                       "ring_degree": 8, "rewire_prob": 0.2, "buffer_len": 40,
                       "contact_scale": 0.25, "horizon": 2000},
    },
    "payoff_table": {
        "kind": "game",
        "description": "2x2 scheduling game, n=40, degrees 25/55, weak share "
                       "0.85, M=1000 (ODE backend)",
        "parameters": {"k1": 25, "k2": 55, "pi1": 0.85, "peer_count": 1000,
                       "contact_scale": 0.02, "buffer_len": 40,
                       "backend": "continuum"},
    },
    "ldf_vs_mixed_global": {
        "kind": "continuum",
        "description": "global continuum curves under pure LDF vs the mixed "
                       "assignment (game parameters)",
        "sweep": [("pure_ldf", {"strategies": ["LDF", "LDF"]}),
                  ("mixed", {"strategies": ["EDF", "LDF"]})],
        "parameters": {"k1": 25, "k2": 55, "pi1": 0.85, "peer_count": 1000,
                       "contact_scale": 0.025, "buffer_len": 40},
    },
    "fullstack_scheduler_comparison": {
        "kind": "fullstack",
        "description": "protocol-level continuity and request rate for the "
                       "three strategies, 100 peers, default bandwidth table",
        "sweep": [("pure_ldf", {"strategy": "pure_ldf", "ldf_peer_count": 0}),
                  ("pure_edf", {"strategy": "pure_edf", "ldf_peer_count": 0}),
                  ("mixed", {"strategy": "mixed", "ldf_peer_count": 20})],
        "parameters": {"arrival_rate": 4.0, "sim_duration_s": 400.0},
    },
}


def list_recipes() -> str:
    lines = []
    for name in sorted(FIGURE_RECIPES):
        lines.append(f"{name}: {FIGURE_RECIPES[name]['description']}")
    return "\n".join(lines)


def _run_figure_recipe(spec: ExperimentSpec):
    recipe = FIGURE_RECIPES[spec.parameters["name"]]
    files = {}
    summary: dict = {"recipe": spec.parameters["name"], "variants": {}}
    base = dict(recipe["parameters"])
    base.update(spec.parameters.get("overrides", {}))
    for variant, extra in recipe.get("sweep", [(None, {})]):
        params = dict(base)
        params.update(extra)
        if recipe["kind"] == "stochastic" and "strategy_rule" not in extra:
            params["strategy_rule"] = variant if variant else "mixed"
        sub = ExperimentSpec(recipe["kind"], params, spec.seeds,
                             spec.output_dir, spec.workers)
        sub_files, sub_summary = _KIND_RUNNERS[recipe["kind"]](sub)
        prefix = f"{variant}_" if variant else ""
        for name, text in sub_files.items():
            files[prefix + name] = text
        summary["variants"][variant or "single"] = sub_summary
    return files, summary


_KIND_RUNNERS = {
    "mean_field": _run_mean_field,
    "continuum": _run_continuum,
    "game": _run_game,
    "state_space": _run_state_space,
    "stochastic": _run_stochastic,
    "fullstack": _run_fullstack_kind,
    "figure_recipe": _run_figure_recipe,
}


def run_experiment(spec: ExperimentSpec) -> Path:
    """Execute a campaign and write CSVs plus a reproducibility manifest.

    Returns the output directory.  Solver errors propagate after a failure
    marker and any partial outputs are written.
    """
    out = Path(spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    try:
        files, summary = _KIND_RUNNERS[spec.kind](spec)
    except Exception as exc:
        (out / "FAILED").write_text(f"{type(exc).__name__}: {exc}\n")
        raise
    for name, text in sorted(files.items()):
        (out / name).write_text(text)
    manifest = {
        "spec": spec.to_dict(),
        "seeds": sorted(spec.seeds),
        "software_version": _version,
        "wall_time_s": round(time.time() - started, 3),
        "files": sorted(files),
        "summary": summary,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2,
                                                  sort_keys=True))
    return out


@dataclass
class BackendComparison:
    degrees: tuple[int, ...]
    mean_field_p: np.ndarray
    stochastic_p: np.ndarray
    stochastic_se: np.ndarray
    abs_difference: np.ndarray
    monotonicity_violations_mean_field: int
    monotonicity_violations_stochastic: int

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("degree,buffer_index,mean_field,stochastic,stderr,abs_diff\n")
        for c, k in enumerate(self.degrees):
            for i in range(self.mean_field_p.shape[1]):
                buf.write(f"{k},{i + 1},{self.mean_field_p[c, i]:.17g},"
                          f"{self.stochastic_p[c, i]:.17g},"
                          f"{self.stochastic_se[c, i]:.17g},"
                          f"{self.abs_difference[c, i]:.17g}\n")
        return buf.getvalue()


def compare_backends(mean_field_params: dict, stochastic_params: dict,
                     seeds: list[int], workers: int | None = None,
                     se_floor: float = 1e-4) -> BackendComparison:
    """Cross-validate the analytic fixed point against simulation.

    Both parameter sets must agree on buffer length, contact scale and peer
    count; the mean-field degree classes must match the degrees realized in
    the simulated graph.  Differences are reported per (degree, index) with
    Monte Carlo standard errors (floored for the zero-variance regime).
    """
    for key_mf, key_st in (("buffer_len", "buffer_len"),
                           ("contact_scale", "contact_scale"),
                           ("peer_count", "peer_count")):
        if mean_field_params[key_mf] != stochastic_params[key_st]:
            raise SpecValidationError(
                f"mismatched configurations: {key_mf} differs")
    cfg = _mean_field_config(mean_field_params)
    table = solve_fixed_point(cfg)
    jobs = [(stochastic_params, seed) for seed in sorted(seeds)]
    results = _pool_map(_run_stochastic_seed, jobs, workers)
    sim_degrees = results[0].degrees
    mf_degrees = tuple(int(k) for k in cfg.degrees)
    if sim_degrees != mf_degrees:
        raise SpecValidationError(
            f"mismatched configurations: mean-field degrees {mf_degrees} vs "
            f"simulated degrees {sim_degrees}")
    curves = np.array([m.buffer_prob for m in results])
    sim_mean = curves.mean(axis=0)
    if len(results) > 1:
        sim_se = curves.std(axis=0, ddof=1) / np.sqrt(len(results))
    else:
        sim_se = np.array([m.buffer_prob_se for m in results])[0]
    sim_se = np.maximum(sim_se, se_floor)
    diff = np.abs(table.p - sim_mean)
    mono_mf = int((np.diff(table.p, axis=1) < -1e-12).sum())
    mono_sim = int((np.diff(sim_mean, axis=1) < -3.0 * sim_se[:, 1:]).sum())
    return BackendComparison(mf_degrees, table.p, sim_mean, sim_se, diff,
                             mono_mf, mono_sim)
