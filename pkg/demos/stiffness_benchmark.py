"""Stiff versus explicit integration of the Robertson problem.

Writes docs/benchmark_stiffness.md with accepted/rejected step counts and
wall times for several horizons and tolerances.
"""

import platform
import sys
import time
from pathlib import Path

import numpy as np

from rxnkit import IntegratorConfig, builtin, simulate


def run(method, t1, rtol):
    net, k, c0 = builtin("Robertson")
    t = time.perf_counter()
    tr = simulate(net, k, c0, (0, t1), IntegratorConfig(method, rtol=rtol, atol=1e-12))
    return tr, time.perf_counter() - t


def main(out=Path(__file__).resolve().parent.parent / "docs" / "benchmark_stiffness.md"):
    rows = []
    for t1 in (1.0, 10.0, 100.0):
        for rtol in (1e-4, 1e-6):
            s, ws = run("stiff", t1, rtol)
            e, we = run("explicit", t1, rtol)
            diff = float(np.max(np.abs(s.final - e.final)))
            rows.append(f"| {t1:g} | {rtol:g} | {s.n_steps} ({s.n_rejected}) | {ws:.3f} | "
                        f"{e.n_steps} ({e.n_rejected}) | {we:.2f} | {e.n_steps / s.n_steps:.0f} | {diff:.1e} |")
    text = "\n".join([
        "# Stiffness benchmark: Robertson",
        "",
        "Robertson kinetics (A -> B, 2B -> B + C, B + C -> A + C with k = 0.04, 3e7, 1e4) from (1, 0, 0),",
        "atol 1e-12. \"stiff\" is the Rodas3 Rosenbrock method, \"explicit\" is Dormand-Prince 5(4);",
        "both share the same error norm and step-size controller. Step counts are accepted steps,",
        "rejections in parentheses. The last column is the largest difference of the final states.",
        "",
        "| t1 | rtol | stiff steps | stiff s | explicit steps | explicit s | ratio | max diff |",
        "|---:|---:|---:|---:|---:|---:|---:|---:|",
        *rows,
        "",
        "The explicit method's step size is capped by stability rather than accuracy: h |lambda| must stay",
        "inside its stability region, and the dominant Jacobian eigenvalue grows in magnitude as C",
        "accumulates (about -1e4 C). Its step count therefore grows faster than the horizon, while the",
        "L-stable stiff method takes steps limited only by accuracy and grows roughly logarithmically.",
        "",
        f"Generated by demos/stiffness_benchmark.py with Python {platform.python_version()} on "
        f"{platform.machine()}.",
        "",
    ])
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)
    print(text)


if __name__ == "__main__":
    main(*(Path(a) for a in sys.argv[1:2]))
