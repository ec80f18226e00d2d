"""Command line entry point: ``online-bls {run,generate,compare,report}``."""
import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .datasets import (
    HyperplaneParams,
    SEAParams,
    StreamSpec,
    dataset_spec,
    hyperplane_stream,
    sea_stream,
)
from .errors import OnlineBLSError, PartialFailure
from .harness import MODELS, TrialConfig, compare_models, format_table, load_report_dir, run_experiment

# flag name -> TrialConfig field
CONFIG_FLAGS = {
    "n1": "n1", "n2": "n2", "n3": "n3", "n4": "n4", "lam": "lam", "mu": "mu",
    "lambda1": "lambda1", "lambda2": "lambda2", "seed": "seed", "trials": "trials",
    "output": "output_dir", "shuffle": "shuffle", "max_samples": "max_samples", "jobs": "jobs",
    "shrink": "shrink",
}


def _shrink(text):
    return text if text == "auto" else float(text)


def add_experiment_flags(p):
    # defaults are None so that a --config file is only overridden by explicit flags
    p.add_argument("--config", help="JSON file mirroring TrialConfig")
    p.add_argument("--dataset", help="image-segment, usps, letter, adult, shuttle, mnist, "
                                     "electricity, covertype, sea, hyperplane, or a CSV path")
    p.add_argument("--n1", type=int)
    p.add_argument("--n2", type=int)
    p.add_argument("--n3", type=int)
    p.add_argument("--n4", type=int)
    p.add_argument("--lambda", dest="lam", type=float, help="ridge regularizer (default 1e-8)")
    p.add_argument("--mu", type=float, help="forgetting factor for online-bls-ada (default 0.99)")
    p.add_argument("--lambda1", type=float, help="BLS-CIL different-label weight (default 0.1)")
    p.add_argument("--lambda2", type=float, help="BLS-CIL same-label weight (default 0.1)")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--limit", type=int, help="use only the first LIMIT samples of each trial")
    p.add_argument("--n", type=int, dest="length", help="length of a synthetic stream")
    p.add_argument("--normalize", choices=("none", "minmax"))
    p.add_argument("--shuffle", action=argparse.BooleanOptionalAction, default=None,
                   help="reorder the stream per trial (default: yes)")
    p.add_argument("--shrink", type=_shrink, help="enhancement scale, or 'auto' (default)")
    p.add_argument("--max-samples", type=int, dest="max_samples")
    p.add_argument("--jobs", type=int, help="trials run in parallel processes")
    p.add_argument("--output", help="directory for summary.json and the step logs")


def build_config(args, model=None):
    data = {}
    if args.config:
        data = json.loads(Path(args.config).read_text())
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
    stream = data.get("stream")
    if args.dataset is not None:
        stream = dataset_spec(args.dataset)
    if stream is None:
        raise SystemExit("error: give --dataset or a --config with a stream")
    if isinstance(stream, dict):
        stream = StreamSpec.from_dict(stream)
    overrides = {}
    if args.limit is not None:
        overrides["limit"] = args.limit
    if args.length is not None:
        overrides["n"] = args.length
    if args.normalize is not None:
        overrides["normalization"] = args.normalize
    data["stream"] = replace(stream, **overrides)
    for flag, name in CONFIG_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            data[name] = value
    if model is not None:
        data["model"] = model
    elif getattr(args, "model", None) is not None:
        data["model"] = args.model
    return TrialConfig(**data)


def cmd_run(args):
    config = build_config(args)
    try:
        report, _, _ = run_experiment(config)
    except PartialFailure as exc:
        print(f"failed trials: {sorted(exc.failed)}", file=sys.stderr)
        return 1
    agg = report["aggregate"]
    print(f"{config.model} on {config.stream.path or config.stream.source}: "
          f"{config.trials} trial(s)")
    for key in ("oca", "bacc", "avrbacc", "f1", "mcc"):
        print(f"  {key:<8} {100 * agg[key]['mean']:.2f} +- {100 * agg[key]['sd']:.3f}")
    print(f"  update   {agg['update_time_us']['mean']:.1f} +- {agg['update_time_us']['sd']:.1f} us")
    if config.output_dir:
        print(f"  wrote {config.output_dir}")
    return 0


def cmd_generate(args):
    if args.kind == "sea":
        params = SEAParams(noise=args.noise if args.noise is not None else 0.10)
        stream = sea_stream(args.seed, params, args.n)
    else:
        params = HyperplaneParams(d=args.d,
                                  noise=args.noise if args.noise is not None else 0.01,
                                  drift_magnitude=args.drift)
        stream = hyperplane_stream(args.seed, params, args.n)
    stream.to_csv(args.output)
    print(f"wrote {len(stream)} samples to {args.output}")
    return 0


def cmd_compare(args):
    configs = [build_config(args, model) for model in args.models]
    rows = compare_models(configs)
    print(format_table(rows))
    if args.output:
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        (out / "comparison.json").write_text(json.dumps(rows, indent=2))
    return 0


def cmd_report(args):
    report = load_report_dir(args.directory)
    agg = report["aggregate"]
    print(f"{len(report['trials'])} trial(s) in {args.directory}")
    for key in ("oca", "oce", "bacc", "avrbacc", "f1", "mcc"):
        print(f"  {key:<8} {agg[key]['mean']:.4f} +- {agg[key]['sd']:.4f}")
    return 0


def make_parser():
    parser = argparse.ArgumentParser(prog="online-bls", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a prequential experiment")
    run.add_argument("--model", choices=MODELS)
    add_experiment_flags(run)
    run.set_defaults(func=cmd_run)

    gen = sub.add_parser("generate", help="write a synthetic drifting stream to CSV")
    gen.add_argument("kind", choices=("sea", "hyperplane"))
    gen.add_argument("--n", type=int, default=100_000)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--noise", type=float)
    gen.add_argument("--d", type=int, default=20, help="hyperplane dimension")
    gen.add_argument("--drift", type=float, default=0.005, help="hyperplane drift magnitude")
    gen.add_argument("--output", required=True)
    gen.set_defaults(func=cmd_generate)

    cmp_ = sub.add_parser("compare", help="run several models on one stream")
    cmp_.add_argument("--models", nargs="+", choices=MODELS, default=["online-bls", "ribls"])
    add_experiment_flags(cmp_)
    cmp_.set_defaults(func=cmd_compare)

    rep = sub.add_parser("report", help="re-aggregate the step logs in a directory")
    rep.add_argument("directory")
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OnlineBLSError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
