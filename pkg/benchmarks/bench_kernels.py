"""Compare the compiled kernels with the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N] [--frames T]

Times the delayed multi-kernel convolution on one 200x200 frame history, and
a full detector run over a looming-disk sequence, once per backend.  Also
checks that both backends give bit-identical output.
"""
import argparse
import statistics
import time

import numpy as np

from opplod import _backend, _pykernels
from opplod.pipeline import DpcParams, MdeParams, build_direction_kernels, run_opplod
from opplod.stimuli import StimulusSpec, render

try:
    from opplod import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times), statistics.median(times)


def use(impl):
    _backend.convolve2d = impl.convolve2d
    _backend.delayed_convolve_multi = impl.delayed_convolve_multi


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--frames", type=int, default=50)
    args = ap.parse_args()

    if _ckernels is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")

    dpc = DpcParams()
    d = dpc.delays()
    weights = np.stack([k.weights for k in build_direction_kernels(dpc, MdeParams())])
    hist = np.random.default_rng(0).random((d.max_delay + 1, 200, 200))
    seq = render(StimulusSpec(frames=args.frames))

    impls = (("cython", _ckernels), ("python", _pykernels))
    results, outputs = {}, {}
    for name, impl in impls:
        k_best, k_med = best_of(lambda: impl.delayed_convolve_multi(hist, d.delays, weights), args.repeat)
        use(impl)
        outputs[name] = [r.response for r in run_opplod(seq)]
        r_best, r_med = best_of(lambda: run_opplod(seq), max(1, args.repeat // 2))
        results[name] = (k_best, k_med, r_best, r_med)
    use(_ckernels)

    print(f"kernel: 4 directional {2 * dpc.kernel_radius + 1}x{2 * dpc.kernel_radius + 1} kernels, "
          f"{d.max_delay + 1}-frame history, 200x200")
    print(f"run:    detector over 200x200x{args.frames} looming disk")
    print(f"{'backend':<8} {'kernel best':>12} {'kernel med':>12} {'run best':>10} {'run med':>10}")
    for name, (kb, km, rb, rm) in results.items():
        print(f"{name:<8} {kb * 1e3:>10.2f}ms {km * 1e3:>10.2f}ms {rb:>9.2f}s {rm:>9.2f}s")
    c, p = results["cython"], results["python"]
    print(f"speedup  kernel x{p[0] / c[0]:.1f}, run x{p[2] / c[2]:.1f}")
    print(f"bit-identical responses: {outputs['cython'] == outputs['python']}")


if __name__ == "__main__":
    main()
