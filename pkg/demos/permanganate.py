"""Elementary steps of the permanganate/oxalic acid system and bounds on its decompositions."""

import time

from rxnkit.decomposition import (
    INITIAL_PRESETS,
    PERMANGANATE_OVERALL,
    ElementaryStep,
    generate_steps,
    load_permanganate_species,
    lp_bounds,
    reactant_complexes,
    volpert_filter,
)
from rxnkit.parser import parse_reaction

species = load_permanganate_species()
names = [s.name for s in species]
t = time.perf_counter()
steps = generate_steps(species)
print(f"{len(reactant_complexes(names))} reactant complexes, {len(steps)} balanced steps "
      f"({time.perf_counter() - t:.1f} s)")

kept, never = volpert_filter(steps, INITIAL_PRESETS["bold"], species=names)
print(f"{len(kept)} steps can fire from the initial species; never formed: {', '.join(never)}")

overall = ElementaryStep.from_reaction_step(parse_reaction(PERMANGANATE_OVERALL))
bounds = lp_bounds(kept, overall)
print(f"any decomposition of {overall} uses at least {bounds.min_total_steps} steps")
for step, lo in bounds.lower_bounds.items():
    print(f"  every decomposition uses {step} at least {lo}x")
