"""Compare the compiled and pure-Python RK4 kernels.

    python benchmarks/bench_kernels.py [--steps N]

Both backends integrate the same driven trajectory from the same state; the
script reports time per step, speed-up, and the largest difference between
the two final states.
"""
import argparse
import time

import numpy as np

from omsim import kernels
from omsim.covariance import default_cosim_dt, initial_covariance, pack_upper
from omsim.dynamics import default_dt
from omsim.model import SystemParams, derive_scales


def run(backend, kind, y0, h, steps, coef):
    mod = kernels.get_backend(backend)
    t0 = time.perf_counter()
    if kind == "classical":
        out = mod.integrate_classical(y0, h, steps, steps, coef, False)
    else:
        out = mod.integrate_cosim(y0, h, steps, steps, coef, 0.05, True)
    return time.perf_counter() - t0, out[4]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=20000, help="steps per backend (python side)")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    params = SystemParams()
    scales = derive_scales(params)
    sc = kernels.Scaling.from_params(params, scales)
    coef = kernels.coefficients(params, scales)
    y_cl = sc.to_internal(params.q_s + 0.3 * params.wavelength, 0.0, 0j)
    y_co = np.concatenate([y_cl, pack_upper(initial_covariance(scales))])
    cases = {
        "classical": (y_cl, default_dt(params, scales) * params.omega_m),
        "cosim": (y_co, default_cosim_dt(params, scales) * params.omega_m),
    }
    print(f"selected backend at import: {kernels.BACKEND}; available: {kernels.available_backends()}")
    print(f"{'kernel':<10} {'backend':<8} {'ns/step':>12} {'speed-up':>9} {'max |diff|':>11}")
    for kind, (y0, h) in cases.items():
        results = {}
        for backend in kernels.available_backends():
            best = min(run(backend, kind, y0, h, args.steps, coef)[0] for _ in range(args.repeat))
            _, last = run(backend, kind, y0, h, args.steps, coef)
            results[backend] = (best / args.steps * 1e9, last)
        base = results["python"]
        for backend, (ns, last) in sorted(results.items()):
            diff = float(np.max(np.abs(last - base[1])))
            print(f"{kind:<10} {backend:<8} {ns:12.1f} {base[0] / ns:9.1f} {diff:11.2e}")


if __name__ == "__main__":
    main()
