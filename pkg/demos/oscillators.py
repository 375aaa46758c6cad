"""Brusselator and Autocatalator: deterministic curves against single stochastic runs."""

import numpy as np

from _out import output_dir
from rxnkit import BUILTINS, AVOGADRO, IntegratorConfig, simulate
from rxnkit.stochastic import simulate_jumps, stochastic_rates
from rxnkit.svgplot import line_plot

out = output_dir()
grid = np.linspace(0, 10, 1001)

b = BUILTINS["Brusselator"]
det = simulate(b.network, b.k, b.c0, (0, 10), IntegratorConfig(output_times=grid))
ssa = simulate_jumps(stochastic_rates(b.network, volume=b.volume), b.x0, 10.0, seed=1)
scale = AVOGADRO * b.volume
print(f"Brusselator SSA: {len(ssa.times) - 1} events, X in [{ssa['X'].min() / scale:.3f}, "
      f"{ssa['X'].max() / scale:.3f}] mol/dm3")
sampled = ssa.at(grid) / scale
(out / "brusselator.svg").write_text(line_plot(
    grid, [det["X"], det["Y"], sampled[:, 0], sampled[:, 1]], ["X (ODE)", "Y (ODE)", "X (SSA)", "Y (SSA)"],
    ylabel="mol/dm3", title="Brusselator, V = 1e-21 dm3"))

a = BUILTINS["Autocatalator"]
adet = simulate(a.network, a.k, a.c0, (0, 10), IntegratorConfig(output_times=grid))
assa = simulate_jumps(stochastic_rates(a.network), a.x0, 10.0, seed=1)
print(f"Autocatalator SSA: {len(assa.times) - 1} events, final counts {assa.final.tolist()}")
(out / "autocatalator.svg").write_text(line_plot(
    assa.times, [assa["X"], assa["Y"]], ["X", "Y"], step=True, ylabel="molecules",
    title="Autocatalator, direct method", markers=[(grid[::25], adet["X"][::25], "X (ODE)")]))
print("wrote", out / "brusselator.svg", "and", out / "autocatalator.svg")
