"""Per-update wall time of every model as the stream grows (m = n1*n2 + n3*n4).

Prints mean update time over consecutive windows, which shows the
k-dependent cost of I-BLS against the flat cost of the others.
"""
import argparse
import time

import numpy as np

from online_bls.adaptive import AdaptiveOnlineBLS
from online_bls.baselines import BLSCIL, IBLS, RIBLS
from online_bls.datasets import StreamSpec, load_stream
from online_bls.features import calibrate_shrink, new_mapper
from online_bls.linalg import warmup
from online_bls.online import OnlineBLS

FACTORIES = {
    "online-bls": lambda m, c: OnlineBLS(m, c, 1e-8),
    "online-bls-ada": lambda m, c: AdaptiveOnlineBLS(m, c, 1e-8, 0.99),
    "ibls": lambda m, c: IBLS(m, c, 1e-8),
    "ribls": lambda m, c: RIBLS(m, c, 1e-8),
    "blscil": lambda m, c: BLSCIL(m, c, 0.1, 0.1),
}


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--n3", type=int, default=400)
    p.add_argument("--windows", type=int, default=10)
    p.add_argument("--models", nargs="+", default=["online-bls", "ibls"], choices=FACTORIES)
    args = p.parse_args()

    stream = load_stream(StreamSpec(source="sea", n=args.n, normalization="minmax"))
    mapper = calibrate_shrink(new_mapper(3, 10, 10, args.n3, 1, seed=0), stream.X)
    A, Y = mapper.map_batch(stream.X), stream.one_hot()
    warmup()
    print(f"m = {mapper.m}, n = {args.n}; mean update time (us) per window")
    for name in args.models:
        model = FACTORIES[name](mapper.m, 2)
        t = np.empty(args.n)
        with np.errstate(all="ignore"):
            for k in range(args.n):
                t0 = time.perf_counter_ns()
                model.update(A[k], Y[k])
                t[k] = (time.perf_counter_ns() - t0) / 1e3
        windows = np.array_split(t, args.windows)
        print(f"{name:<16}" + " ".join(f"{w.mean():9.0f}" for w in windows))


if __name__ == "__main__":
    main()
