"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--trials 20000] [--repeat 5]

Both backends are imported directly, so the DMTKIT_DISABLE_NUMBA flag does not
matter here.  The first numba call (JIT compile or cache load) is excluded.
"""

import argparse
import timeit

import numpy as np

from dmtkit import kernels
from dmtkit._accel import HAVE_NUMBA


def _best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(0)
    print(f"{'kernel':<22}{'shape':<18}{'numpy ms':>10}{'numba ms':>10}{'speedup':>9}  max |diff|")
    for n in (2, 4, 10, 16):
        H = (rng.standard_normal((args.trials, n, n)) + 1j * rng.standard_normal((args.trials, n, n))) / np.sqrt(2)
        a = kernels.logdet_capacity_numba(H, 10.0)
        b = kernels.logdet_capacity_numpy(H, 10.0)
        t_np = _best(lambda: kernels.logdet_capacity_numpy(H, 10.0), args.repeat)
        t_nb = _best(lambda: kernels.logdet_capacity_numba(H, 10.0), args.repeat)
        print(f"{'logdet_capacity':<22}{f'{args.trials}x{n}x{n}':<18}{1e3 * t_np:>10.2f}{1e3 * t_nb:>10.2f}"
              f"{t_np / t_nb:>9.2f}  {np.max(np.abs(a - b)):.1e}")

        eigs = kernels.gram_eigvals(H)
        scales = 10.0 ** (np.arange(0, 31) / 10) / n
        a = kernels.capacity_from_eigs_numba(eigs, scales)
        b = kernels.capacity_from_eigs_numpy(eigs, scales)
        t_np = _best(lambda: kernels.capacity_from_eigs_numpy(eigs, scales), args.repeat)
        t_nb = _best(lambda: kernels.capacity_from_eigs_numba(eigs, scales), args.repeat)
        print(f"{'capacity_from_eigs':<22}{f'31 SNR x {n} eig':<18}{1e3 * t_np:>10.2f}{1e3 * t_nb:>10.2f}"
              f"{t_np / t_nb:>9.2f}  {np.max(np.abs(a - b)):.1e}")


if __name__ == "__main__":
    main()
