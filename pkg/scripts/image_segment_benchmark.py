"""All five models on Image Segment with m = 1100, mean and SD over seeded trials.

    python scripts/image_segment_benchmark.py --trials 10 --output runs/is
"""
import argparse
import json
from pathlib import Path

from online_bls.datasets import dataset_spec
from online_bls.harness import MODELS, TrialConfig, compare_models, format_table


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--models", nargs="+", default=list(MODELS), choices=MODELS)
    p.add_argument("--output", default=None)
    args = p.parse_args()

    stream = dataset_spec("image-segment")
    configs = [TrialConfig(model=m, stream=stream, trials=args.trials, seed=args.seed)
               for m in args.models]
    rows = compare_models(configs)
    print(format_table(rows))
    for r in rows:
        print(f"{r['model']:<16} OCA {100 * r['oca']:.1f} +- {100 * r['oca_sd']:.3f}")
    if args.output:
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        (out / "comparison.json").write_text(json.dumps(rows, indent=2))


if __name__ == "__main__":
    main()
