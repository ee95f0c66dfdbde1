"""Command line interface.

Subcommands:

* ``fuzz``            run a coverage-guided campaign
* ``validate-model``  check a manifest/weights pair, one violation per line
* ``mutate``          one-shot candidate generation from a tensor file
* ``coverage``        neuron coverage of a model over a dataset directory
* ``report``          render a campaign report as text or CSV

Exit codes: 0 success, 1 configuration or input error, 2 model validation
violations, 3 campaign aborted mid-run.  The NNFUZZ_LOG environment
variable (error, info, debug) controls log verbosity.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from .coverage import CoverageTracker, activation_profile
from .errors import CampaignAborted, EngineError
from .inference import forward
from .model_format import load_model, neuron_count, validate_files
from .mutation import GeneratorPair, MutatorConfig, batch_generate
from .orchestrator import CampaignConfig, run_campaign, weights_path
from .tensorfile import read_tensor, write_tensor

log = logging.getLogger("nnfuzz")

_FEEDBACK_FLAG_TO_MODE = {
    "parent-relative": "parent_relative",
    "global": "global_cumulative",
}


def _setup_logging() -> None:
    level_name = os.environ.get("NNFUZZ_LOG", "error").lower()
    level = {"error": logging.ERROR, "info": logging.INFO,
             "debug": logging.DEBUG}.get(level_name, logging.ERROR)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def cmd_fuzz(args) -> int:
    config = CampaignConfig(
        classifier=args.classifier,
        extractor=args.extractor,
        dataset=args.dataset,
        corpus=args.corpus,
        report=args.report,
        gen_forward=args.gen_forward,
        gen_backward=args.gen_backward,
        iterations=args.iterations,
        per_parent=args.per_parent,
        top_k=args.top_k,
        sim_threshold=args.sim_threshold,
        act_threshold=args.act_threshold,
        scaling=args.scaling,
        feedback=_FEEDBACK_FLAG_TO_MODE[args.feedback],
        seed=args.seed,
        mutator=args.mutator,
        noise_scale=args.noise_scale,
    )
    report = run_campaign(config)
    final = report["final"]
    print(
        f"final NC: {final['nc_ratio'] * 100:.2f}%"
        f" | findings: {final['findings']}"
        f" | pool size: {final['pool_size']}"
    )
    return 0


def cmd_validate_model(args) -> int:
    violations = validate_files(args.manifest, args.weights)
    for violation in violations:
        print(violation)
    return 2 if violations else 0


def cmd_coverage(args) -> int:
    model = load_model(args.classifier, weights_path(args.classifier))
    tracker = CoverageTracker(neuron_count(model), args.act_threshold, args.scaling)
    names = sorted(
        n for n in os.listdir(args.dataset) if n.endswith(".tensor")
    ) if os.path.isdir(args.dataset) else []
    for name in names:
        image = read_tensor(os.path.join(args.dataset, name))
        _, record = forward(model, image)
        tracker.update(activation_profile(record, tracker.threshold, tracker.mode))
    print(f"{tracker.nc_ratio() * 100:.2f}")
    return 0


def cmd_mutate(args) -> int:
    parent = read_tensor(args.input)
    gens = None
    if args.mutator == "aeg":
        if not args.gen_forward or not args.gen_backward:
            print("error: aeg mutation requires --gen-forward and --gen-backward",
                  file=sys.stderr)
            return 1
        gens = GeneratorPair(
            forward=load_model(args.gen_forward, weights_path(args.gen_forward)),
            backward=load_model(args.gen_backward, weights_path(args.gen_backward)),
            source_range=(args.range_lo, args.range_hi),
        )
    config = MutatorConfig(
        kind=args.mutator,
        per_parent=args.per_parent,
        noise_scale=args.noise_scale,
        value_range=(args.range_lo, args.range_hi),
    )
    rng = np.random.default_rng(args.seed)
    candidates = batch_generate(parent, config, gens, rng)
    os.makedirs(args.out, exist_ok=True)
    for i, candidate in enumerate(candidates):
        write_tensor(os.path.join(args.out, f"cand-{i:03d}.tensor"), candidate)
    print(f"wrote {len(candidates)} candidates to {args.out}")
    return 0


def cmd_report(args) -> int:
    try:
        with open(args.report, "r", encoding="utf-8") as fh:
            report = json.load(fh)
    except OSError as exc:
        print(f"error: cannot read report {args.report}: {exc}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(
            f"error: report {args.report} is corrupt at byte {exc.pos}: {exc.msg}",
            file=sys.stderr,
        )
        return 1

    if args.format == "text":
        initial = report.get("initial", {})
        final = report.get("final", {})
        print(f"iterations: {report.get('iterations_run', 0)}")
        print(f"initial NC: {initial.get('nc_ratio', 0.0) * 100:.2f}%"
              f" over {initial.get('neuron_count', 0)} neurons")
        print(f"final NC: {final.get('nc_ratio', 0.0) * 100:.2f}%")
        print(f"pool size: {final.get('pool_size', 0)}"
              f" (started {initial.get('pool_size', 0)},"
              f" skipped {initial.get('skipped_misclassified', 0)} misclassified)")
        print(f"findings: {final.get('findings', 0)}"
              f" ({final.get('duplicate_findings', 0)} duplicates suppressed)")
        if report.get("incomplete"):
            print("status: INCOMPLETE"
                  + (f" ({report.get('abort_reason')})" if report.get("abort_reason") else ""))
        return 0

    # csv: per-iteration series from the lines file next to the report
    base, _ = os.path.splitext(args.report)
    jsonl = base + ".jsonl"
    try:
        with open(jsonl, "r", encoding="utf-8") as fh:
            lines = [json.loads(line) for line in fh if line.strip()]
    except OSError as exc:
        print(f"error: cannot read iteration log {jsonl}: {exc}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(f"error: iteration log {jsonl} is corrupt at byte {exc.pos}: {exc.msg}",
              file=sys.stderr)
        return 1
    writer = csv.writer(sys.stdout)
    writer.writerow(["iteration", "nc_ratio", "kept", "findings"])
    for line in lines:
        writer.writerow([
            line["iteration"], line["nc_after"], line["kept"], line["findings"],
        ])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nnfuzz",
        description="Coverage-guided fuzzing for feed-forward image classifiers",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fuzz = sub.add_parser("fuzz", help="run a fuzzing campaign")
    fuzz.add_argument("--classifier", required=True,
                      help="classifier manifest path (.bin weights alongside)")
    fuzz.add_argument("--gen-forward", default=None,
                      help="forward generator manifest path")
    fuzz.add_argument("--gen-backward", default=None,
                      help="backward generator manifest path")
    fuzz.add_argument("--extractor", required=True,
                      help="feature extractor manifest path")
    fuzz.add_argument("--dataset", required=True,
                      help="directory of labeled seed tensors")
    fuzz.add_argument("--corpus", required=True,
                      help="output corpus directory")
    fuzz.add_argument("--iterations", type=int, required=True,
                      help="campaign iteration budget")
    fuzz.add_argument("--per-parent", type=int, default=10,
                      help="candidates generated per selected parent")
    fuzz.add_argument("--top-k", type=int, default=5,
                      help="gate survivors kept per iteration")
    fuzz.add_argument("--sim-threshold", type=float, default=0.9,
                      help="minimum feature similarity, exclusive")
    fuzz.add_argument("--act-threshold", type=float, default=0.25,
                      help="neuron activation threshold")
    fuzz.add_argument("--scaling", choices=("raw", "layer_minmax"), default="raw",
                      help="activation scaling before thresholding")
    fuzz.add_argument("--feedback", choices=("parent-relative", "global"),
                      default="parent-relative",
                      help="coverage feedback deciding pool admission")
    fuzz.add_argument("--seed", type=int, default=0, help="rng seed")
    fuzz.add_argument("--report", default="report.json",
                      help="report JSON output path")
    fuzz.add_argument("--mutator", choices=("aeg", "classical"), default="aeg",
                      help="candidate generation strategy")
    fuzz.add_argument("--noise-scale", type=float, default=0.02,
                      help="stddev of pre-generator Gaussian noise")
    fuzz.set_defaults(func=cmd_fuzz)

    validate = sub.add_parser("validate-model", help="validate a model file pair")
    validate.add_argument("--manifest", required=True, help="manifest JSON path")
    validate.add_argument("--weights", required=True, help="weight blob path")
    validate.set_defaults(func=cmd_validate_model)

    mutate = sub.add_parser("mutate", help="generate candidates from one tensor")
    mutate.add_argument("--input", required=True, help="parent tensor file")
    mutate.add_argument("--out", required=True, help="output directory")
    mutate.add_argument("--mutator", choices=("aeg", "classical"), default="aeg")
    mutate.add_argument("--gen-forward", default=None)
    mutate.add_argument("--gen-backward", default=None)
    mutate.add_argument("--per-parent", type=int, default=10)
    mutate.add_argument("--noise-scale", type=float, default=0.02)
    mutate.add_argument("--range-lo", type=float, default=0.0,
                        help="image value range lower bound")
    mutate.add_argument("--range-hi", type=float, default=1.0,
                        help="image value range upper bound")
    mutate.add_argument("--seed", type=int, default=0)
    mutate.set_defaults(func=cmd_mutate)

    coverage = sub.add_parser("coverage", help="neuron coverage over a dataset")
    coverage.add_argument("--classifier", required=True)
    coverage.add_argument("--dataset", required=True)
    coverage.add_argument("--act-threshold", type=float, default=0.25)
    coverage.add_argument("--scaling", choices=("raw", "layer_minmax"), default="raw")
    coverage.set_defaults(func=cmd_coverage)

    report = sub.add_parser("report", help="render a campaign report")
    report.add_argument("--report", required=True, help="report JSON path")
    report.add_argument("--format", choices=("text", "csv"), default="text")
    report.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 1
        return 0 if code == 0 else 1
    try:
        return args.func(args)
    except CampaignAborted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
