"""Plain vs forgetting-factor Online-BLS on the SEA stream, with per-concept accuracy.

Writes both step logs and a convergence CSV per model when --output is given.
"""
import argparse

import numpy as np

from online_bls.datasets import SEAParams, StreamSpec
from online_bls.harness import TrialConfig, run_experiment


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--noise", type=float, default=0.10)
    p.add_argument("--mu", type=float, default=0.99)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--n3", type=int, default=40)
    p.add_argument("--generator-seed", type=int, default=7)
    p.add_argument("--output", default=None)
    args = p.parse_args()

    params = SEAParams(noise=args.noise)
    stream = StreamSpec(source="sea", n=args.n, params=params, normalization="minmax",
                        generator_seed=args.generator_seed)
    seg = params.segment_length
    for model in ("online-bls", "online-bls-ada"):
        out = f"{args.output}/{model}" if args.output else None
        cfg = TrialConfig(model=model, stream=stream, n1=5, n2=4, n3=args.n3, n4=1,
                          mu=args.mu, trials=args.trials, output_dir=out)
        report, _, results = run_experiment(cfg)
        correct = np.mean([r.steps.correct for r in results], axis=0)
        segments = [100 * correct[s:s + seg].mean() for s in range(0, len(correct), seg)]
        print(f"{model:<16} OCA {100 * report['aggregate']['oca']['mean']:.2f}  "
              f"per concept {' '.join(f'{s:.1f}' for s in segments)}")


if __name__ == "__main__":
    main()
