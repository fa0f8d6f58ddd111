"""Experiment runner CLI.

    swarmsched run <spec.json>         execute one experiment document
    swarmsched list-recipes            show the named figure recipes
    swarmsched compare <specA> <specB> cross-validate mean-field vs simulation

Exit codes: 0 success, 2 spec validation failure, 3 solver/runtime failure
(partial outputs are kept next to a FAILED marker).  The output root for
specs without an explicit output_dir comes from $SWARMSCHED_OUTPUT_ROOT.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .experiments import (OUTPUT_ROOT_ENV, ExperimentSpec, SpecValidationError,
                          compare_backends, list_recipes, run_experiment)

CSV_COLUMN_HELP = """\
CSV columns by experiment kind:
  mean_field    buffer_table.csv: degree,buffer_index,p,theta,p_global,seed
  continuum     trajectory.csv:   x,y1,y2,y,seed
  game          payoff_table.csv: weak_strategy,strong_strategy,u_weak,u_strong,global,seed
  state_space   reduction_report.json (log-space quantities, per-column chi)
  stochastic    seed_<s>.csv:     strategy,shifting,degree_class,buffer_index,probability,stderr,seed
                merged_global.csv: buffer_index,probability,stderr,seed
  fullstack     seed_<s>.csv:     class,continuity,requests_per_s,mean_in_degree,seed
  compare       comparison.csv:   degree,buffer_index,mean_field,stochastic,stderr,abs_diff

The 'seed' column carries the replication seed, or 'analytic' for
deterministic solver output.  Every run directory receives manifest.json
(spec echo, seeds, software version, wall time); `run` accepts a manifest
in place of a spec and reproduces the campaign byte for byte.
"""


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecValidationError(f"cannot read spec {path}: {exc}") from exc


def _cmd_run(args) -> int:
    spec = ExperimentSpec.from_dict(_load_json(args.spec))
    out = run_experiment(spec)
    print(f"wrote {out}")
    return 0


def _cmd_list_recipes(_args) -> int:
    print(list_recipes())
    return 0


def _cmd_compare(args) -> int:
    doc_a = _load_json(args.spec_a)
    doc_b = _load_json(args.spec_b)
    spec_a = ExperimentSpec.from_dict(doc_a)
    spec_b = ExperimentSpec.from_dict(doc_b)
    kinds = {spec_a.kind, spec_b.kind}
    if kinds != {"mean_field", "stochastic"}:
        raise SpecValidationError(
            "compare needs one mean_field spec and one stochastic spec")
    mf = spec_a if spec_a.kind == "mean_field" else spec_b
    st = spec_b if spec_b.kind == "stochastic" else spec_a
    report = compare_backends(mf.parameters, st.parameters, st.seeds,
                              workers=st.workers)
    out = Path(st.output_dir + "-compare" if not args.output else args.output)
    out.mkdir(parents=True, exist_ok=True)
    (out / "comparison.csv").write_text(report.to_csv())
    summary = {
        "max_abs_difference": float(report.abs_difference.max()),
        "monotonicity_violations_mean_field":
            report.monotonicity_violations_mean_field,
        "monotonicity_violations_stochastic":
            report.monotonicity_violations_stochastic,
        "written": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    (out / "comparison_summary.json").write_text(json.dumps(summary, indent=2))
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swarmsched",
        description=__doc__,
        epilog=CSV_COLUMN_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute an experiment spec or manifest")
    p_run.add_argument("spec", help="path to the JSON document")
    p_run.set_defaults(func=_cmd_run)
    p_list = sub.add_parser("list-recipes", help="list named figure recipes")
    p_list.set_defaults(func=_cmd_list_recipes)
    p_cmp = sub.add_parser(
        "compare", help="agreement report between matched mean-field and "
                        "stochastic specs")
    p_cmp.add_argument("spec_a")
    p_cmp.add_argument("spec_b")
    p_cmp.add_argument("--output", default=None,
                       help=f"output directory (default: derived; root from "
                            f"${OUTPUT_ROOT_ENV})")
    p_cmp.set_defaults(func=_cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SpecValidationError as exc:
        print(f"spec validation failed: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # solver/runtime failure, partial outputs kept
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
