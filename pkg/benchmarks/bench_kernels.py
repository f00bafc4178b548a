"""Time the numba and pure-numpy information-density kernels and check they agree.

Run with ``python3 benchmarks/bench_kernels.py``. The sizes mirror the hot
calls: the Smith solver (few test points, up to ~150 mass points), the
relay-grid scans (hundreds of test points, a few mass points) and the
batteryless balanced case (a hundred test points against a hundred-point law).
"""

import argparse
import timeit

import numpy as np

from wetrelay import _kernels
from wetrelay.mi import DEFAULT_QUAD

CASES = {
    "smith-dense": (40, 151),
    "grid-scan": (801, 9),
    "relay-law": (101, 101),
}


def _inputs(n_x, n_mass, rng):
    means = np.sort(rng.uniform(-30, 30, n_mass))
    probs = rng.dirichlet(np.ones(n_mass))
    xs = rng.uniform(-32, 32, n_x)
    return xs, means, probs


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not _kernels.HAVE_NUMBA:
        print("numba path disabled (WETRELAY_DISABLE_NUMBA set or numba missing); timing numpy only")
    z, wz = DEFAULT_QUAD.rule()
    rng = np.random.default_rng(7)
    print(f"{'case':<12} {'points x mass':>14} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8} {'max |diff|':>11}")
    for name, (n_x, n_mass) in CASES.items():
        xs, means, probs = _inputs(n_x, n_mass, rng)
        t_np = min(timeit.repeat(lambda: _kernels.divergence_numpy(xs, means, probs, z, wz), number=1, repeat=args.repeat))
        if _kernels.HAVE_NUMBA:
            _kernels.divergence_numba(xs, means, probs, z, wz)  # compile outside the timing
            t_nb = min(timeit.repeat(lambda: _kernels.divergence_numba(xs, means, probs, z, wz), number=1, repeat=args.repeat))
            a = _kernels.divergence_numpy(xs, means, probs, z, wz)
            b = _kernels.divergence_numba(xs, means, probs, z, wz)
            diff = max(np.max(np.abs(a[0] - b[0])), np.max(np.abs(a[1] - b[1])))
            print(f"{name:<12} {n_x:>6} x {n_mass:<5} {1e3 * t_np:>10.2f} {1e3 * t_nb:>10.2f} {t_np / t_nb:>7.1f}x {diff:>11.1e}")
        else:
            print(f"{name:<12} {n_x:>6} x {n_mass:<5} {1e3 * t_np:>10.2f} {'-':>10} {'-':>8} {'-':>11}")


if __name__ == "__main__":
    main()
