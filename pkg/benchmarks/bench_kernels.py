"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Also times one end-to-end CV-BSM evaluation per backend (fresh cache), since
that is where the displacement kernel dominates.
"""

from __future__ import annotations

import argparse
import math
import timeit

import numpy as np

from teleport_sim import _kernels_py

try:
    from teleport_sim import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

CASES = [(64, 8), (256, 12), (256, 20)]


def _bench(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def _cvbsm(backend) -> float:
    from teleport_sim import kernels
    from teleport_sim.channel import ChannelSpec
    from teleport_sim.experiments.models import CvbsmModel, InputModel

    saved = kernels.displacement_stack
    kernels.displacement_stack = backend.displacement_stack
    try:
        model = CvbsmModel(InputModel("cv-qubit", 1.0))
        return model.fidelity(0.9, math.asinh(1.0), ChannelSpec.from_db(3.0))
    finally:
        kernels.displacement_stack = saved


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    backends = {"python": _kernels_py}
    if _compiled is not None:
        backends["cython"] = _compiled
    else:
        print("compiled extension not available; timing the fallback only")

    print(f"{'kernel':<22}{'n':>6}{'d':>5}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) == 2 else ""))
    for n, d in CASES:
        xi = (rng.normal(size=n) + 1j * rng.normal(size=n)) * 0.8
        ops = rng.normal(size=(4, d, d)) + 1j * rng.normal(size=(4, d, d))
        for name, call in (
            ("displacement_stack", lambda b: b.displacement_stack(xi, d)),
            ("char_stack", lambda b: b.char_stack(ops, xi)),
        ):
            times = {b: _bench(lambda m=m: call(m), args.repeat) for b, m in backends.items()}
            line = f"{name:<22}{n:>6}{d:>5}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times.values())
            if len(times) == 2:
                line += f"{times['python'] / times['cython']:>11.1f}x"
            print(line)

    times = {b: _bench(lambda m=m: _cvbsm(m), args.repeat) for b, m in backends.items()}
    line = f"{'cvbsm fidelity':<22}{'':>6}{'':>5}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times.values())
    if len(times) == 2:
        line += f"{times['python'] / times['cython']:>11.1f}x"
    print(line)


if __name__ == "__main__":
    main()
