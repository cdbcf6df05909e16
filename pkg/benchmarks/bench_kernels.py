"""Compare the compiled and NumPy kernel backends.

    python benchmarks/bench_kernels.py [--repeat N] [--skip-train]

Part one times each kernel on the shapes the bundled experiments use. Part
two times one full ``train_joint`` call per backend in a fresh interpreter,
with the backend chosen through ``LWR_PURE_PYTHON``.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from lwr.kernels import available_backends

# (label, input dim, hidden layers, batch rows)
NETS = [
    ("synthetic rejector 2-2-1", 2, [(2, 1)], 400),
    ("haberman rejector 3-32-64-1", 3, [(32, 1), (64, 1)], 32),
    ("concrete predictor 8-64-32-1", 8, [(64, 2), (32, 2)], 32),
    ("rff linear 1024-1", 1024, [], 32),
]

TRAIN_SNIPPET = """
import time
from lwr.data import gen_synthetic_gaussian
from lwr.kernels import BACKEND
from lwr.nn import MlpSpec
from lwr.numerics import RandomStream
from lwr.trainer import TrainConfig, train_joint
data = gen_synthetic_gaussian(RandomStream(0), n_per_class=150)
h = MlpSpec.from_hidden(2, [(64, "relu"), (32, "relu")])
r = MlpSpec.from_hidden(2, [(64, "tanh"), (32, "tanh")])
start = time.perf_counter()
train_joint(data, h, r, TrainConfig(epochs=40, batch_size=32))
print(BACKEND, time.perf_counter() - start)
"""


def _net(d, hidden, g):
    dims = [d] + [w for w, _ in hidden] + [1]
    acts = tuple(a for _, a in hidden) + (0,)
    Ws = [np.ascontiguousarray(g.normal(size=(o, i))) for i, o in zip(dims[:-1], dims[1:])]
    bs = [g.normal(size=o) for o in dims[1:]]
    return Ws, bs, acts


def _time(fn, repeat):
    best = min(timeit.repeat(fn, number=repeat, repeat=5))
    return best / repeat * 1e6  # microseconds per call


def kernel_table(repeat):
    backends = available_backends()
    names = sorted(backends)
    g = np.random.default_rng(0)
    rows = []
    for label, d, hidden, n in NETS:
        Ws, bs, acts = _net(d, hidden, g)
        X = g.normal(size=(n, d))
        up = g.normal(size=n)
        timings = []
        for name in names:
            k = backends[name]
            _, pres, posts = k.mlp_forward(Ws, bs, acts, X)
            timings.append(_time(lambda: k.mlp_forward(Ws, bs, acts, X), repeat)
                           + _time(lambda: k.mlp_backward(Ws, acts, pres, posts, up), repeat))
        rows.append((f"fwd+bwd {label} (n={n})", timings))

    l, r = np.abs(g.normal(size=32)), g.normal(size=32)
    rows.append(("meta_loss (n=32)", [_time(lambda: backends[b].meta_loss(l, r, 2.0), repeat) for b in names]))
    p, grad = g.normal(size=(64, 32)), g.normal(size=(64, 32))

    def adam(k):
        m, v = np.zeros_like(p), np.zeros_like(p)
        return lambda: k.adam_step(p, grad, m, v, 1e-3, 0.9, 0.999, 1e-8, 1)

    rows.append(("adam_step (64x32)", [_time(adam(backends[b]), repeat) for b in names]))
    s, pos = g.normal(size=1000), g.random(1000) < 0.5
    rows.append(("auc_midrank (n=1000)", [_time(lambda: backends[b].auc_midrank(s, pos), repeat) for b in names]))
    return names, rows


def train_timings():
    out = {}
    for forced in ("0", "1"):
        env = dict(os.environ, LWR_PURE_PYTHON=forced)
        res = subprocess.run([sys.executable, "-c", TRAIN_SNIPPET], env=env, capture_output=True, text=True,
                             check=True)
        backend, seconds = res.stdout.split()
        out[backend] = float(seconds)
    return out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=200)
    parser.add_argument("--skip-train", action="store_true")
    args = parser.parse_args(argv)

    names, rows = kernel_table(args.repeat)
    width = max(len(label) for label, _ in rows)
    print(f"{'kernel':<{width}}  " + "  ".join(f"{n + ' us':>12}" for n in names)
          + ("  speedup" if len(names) == 2 else ""))
    for label, timings in rows:
        line = f"{label:<{width}}  " + "  ".join(f"{t:12.2f}" for t in timings)
        if len(names) == 2:
            line += f"  {timings[names.index('python')] / timings[names.index('cython')]:7.2f}x"
        print(line)
    if len(names) < 2:
        print("compiled backend not built; only the NumPy backend was timed")

    if not args.skip_train:
        t = train_timings()
        print()
        for backend, seconds in sorted(t.items()):
            print(f"train_joint, 40 epochs, 300 rows, backend {backend}: {seconds:.2f}s")
        if len(t) == 2 and "cython" in t:
            print(f"end-to-end speedup: {t['python'] / t['cython']:.2f}x")


if __name__ == "__main__":
    main()
