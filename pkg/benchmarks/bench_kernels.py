"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--n 52650] [--repeat 50] [--epochs 1]

Times each update kernel on a vector the size of the 784-64-32-10 MLP, then one
training epoch of Adam and MAdam with batchwise pruning on the desk MNIST subset.
"""
import argparse
import os
import time
import timeit

import numpy as np

from paretoprune import kernels, net
from paretoprune.data import load_idx
from paretoprune.pruning import PruningPolicy
from paretoprune.training import TrainConfig, train

DESK = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data", "mnist-desk")


def kernel_cases(n, rng):
    w = rng.standard_normal(n) * 1e-2
    g, g2 = rng.standard_normal(n), rng.standard_normal(n)
    bufs = [np.abs(rng.standard_normal(n)) for _ in range(4)]
    was_zero = np.zeros(n, dtype=np.uint8)
    return {
        "sgd_update": lambda k: k.sgd_update(w, g, 1e-9),
        "momentum_update": lambda k: k.momentum_update(w, bufs[0], g, 1e-9, 0.9),
        "rmsprop_update": lambda k: k.rmsprop_update(w, bufs[0], g, 1e-9, 0.9, 1e-7),
        "adam_update": lambda k: k.adam_update(w, bufs[0], bufs[1], g, 1e-9, 0.9, 0.999, 0.1, 0.001, 1e-8),
        "mrmsprop_update": lambda k: k.mrmsprop_update(w, bufs[0], bufs[1], g, g2, 0.3, 1e-9, 0.9, 1e-7),
        "madam_update": lambda k: k.madam_update(w, *bufs, g, g2, 0.3, 1e-9, 0.9, 0.999, 0.1, 0.001, 1e-8),
        "prune_segment": lambda k: k.prune_segment(w, 1e-3, was_zero),
    }


def bench_kernels(backends, n, repeat):
    cases = kernel_cases(n, np.random.default_rng(0))
    print(f"kernel timings, n={n}, best of {repeat} (microseconds)")
    print(f"{'kernel':<18}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for name, fn in cases.items():
        times = []
        for b in backends:
            impl = kernels.get_backend(b)
            times.append(min(timeit.repeat(lambda: fn(impl), number=10, repeat=repeat)) / 10 * 1e6)
        line = f"{name:<18}" + "".join(f"{t:12.1f}" for t in times)
        if len(times) > 1:
            line += f"{times[1] / times[0]:11.2f}x"
        print(line)


def bench_epochs(backends, epochs):
    train_set = load_idx(os.path.join(DESK, "train-images-idx3-ubyte.gz"),
                         os.path.join(DESK, "train-labels-idx1-ubyte.gz"))
    spec = net.NetworkSpec((784, 64, 32, 10))
    print(f"\ntraining, {epochs} epoch(s) on {len(train_set)} samples, batch 32 (seconds)")
    previous = kernels.BACKEND
    for opt in ("adam", "madam"):
        times = []
        for b in backends:
            kernels.use_backend(b)
            cfg = TrainConfig(spec, optimizer=opt, hyper={"lr": 1e-3}, lam=3e-4,
                              pruning=PruningPolicy("batchwise", 1e-3), epochs=epochs, batch_size=32)
            t0 = time.perf_counter()
            train(cfg, train_set)
            times.append(time.perf_counter() - t0)
        print(f"{opt:<18}" + "".join(f"{t:12.2f}" for t in times))
    kernels.use_backend(previous)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=net.NetworkSpec((784, 64, 32, 10)).n_params)
    parser.add_argument("--repeat", type=int, default=50)
    parser.add_argument("--epochs", type=int, default=1)
    args = parser.parse_args()
    backends = kernels.available_backends()
    if len(backends) == 1:
        print("compiled extension not built; timing the numpy backend only")
    bench_kernels(backends, args.n, args.repeat)
    bench_epochs(backends, args.epochs)


if __name__ == "__main__":
    main()
