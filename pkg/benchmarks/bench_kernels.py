"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--points 9000] [--width 30] [--repeat 20]
"""

import argparse
import timeit

import numpy as np

from runn import _kernels_py
from runn.diffnet import NetworkSpec, build_network, evaluate
from runn.spectral import InitPlan

try:
    from runn import _kernels as compiled
except ImportError:  # pragma: no cover - depends on the build
    compiled = None


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=9000)
    ap.add_argument("--width", type=int, default=30)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)
    if compiled is None:
        print("compiled extension not built; nothing to compare")
        return 1

    rng = np.random.default_rng(0)
    N, n = args.points, args.width
    x = rng.uniform(-1, 1, N)
    kappa, w, b = rng.uniform(1, 100, n), rng.uniform(-1, 1, n), rng.uniform(-np.pi, np.pi, n)
    D = _kernels_py.first_layer_stack(x, kappa, w, b, _kernels_py.SIN)
    zb = [rng.normal(size=(N, n)) for _ in range(3)]
    pre = rng.normal(size=(N, n))

    cases = {
        "first_layer_stack[sin]": lambda m: m.first_layer_stack(x, kappa, w, b, _kernels_py.SIN),
        "first_layer_stack[tanh]": lambda m: m.first_layer_stack(x, kappa, w, b, _kernels_py.TANH),
        "first_layer_vjp": lambda m: m.first_layer_vjp(x, kappa, w, D, *zb),
        "activation_stack[relu3]": lambda m: m.activation_stack(pre, _kernels_py.RELU3),
    }
    print(f"N={N} width={n}, best of {args.repeat}")
    print(f"{'kernel':28s} {'numpy ms':>10s} {'compiled ms':>12s} {'speedup':>8s}")
    for name, call in cases.items():
        tp = best(lambda: call(_kernels_py), args.repeat)
        tc = best(lambda: call(compiled), args.repeat)
        print(f"{name:28s} {1e3 * tp:10.3f} {1e3 * tc:12.3f} {tp / tc:8.2f}")

    spec = NetworkSpec(n, depth=2)
    params = build_network(spec, InitPlan(1.0, 100.0), 0)
    tp = best(lambda: evaluate(params, spec, x, 2, backend="python"), args.repeat)
    tc = best(lambda: evaluate(params, spec, x, 2, backend="compiled"), args.repeat)
    print(f"{'evaluate (depth 2, order 2)':28s} {1e3 * tp:10.3f} {1e3 * tc:12.3f} {tp / tc:8.2f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
