"""Robertson kinetics over eleven decades of time, with its linear first integral."""

import numpy as np

from _out import output_dir
from rxnkit import IntegratorConfig, builtin, conserved_quantities, simulate
from rxnkit.svgplot import line_plot

net, k, c0 = builtin("Robertson")
print("conserved quantities:", conserved_quantities(net))

times = np.logspace(-6, 11, 300)
tr = simulate(net, k, c0, (0, 1e11), IntegratorConfig(rtol=1e-6, atol=1e-12, output_times=times))
drift = np.max(np.abs(tr.states.sum(axis=1) - 1))
print(f"{tr.n_steps} steps, largest |a + b + c - 1| = {drift:.1e}")

out = output_dir() / "robertson.svg"
# B is four orders of magnitude smaller than A and C; scale it to share the axes
out.write_text(line_plot(tr.times, [tr["A"], 1e4 * tr["B"], tr["C"]], ["A", "1e4 B", "C"],
                         logx=True, ylabel="concentration", title="Robertson"))
print("wrote", out)
