"""Build, mutate, and inspect a modular robot genotype.

Robots are ordered trees: one head at the root (3 attachment slots), rigid
blocks (5 slots), and actuated joints (1 slot, one sine controller each).
The head's third slot is special: its subtree is expanded twice, mirrored
left and right, so one genotype subtree describes both sides of the body.
"""

import numpy as np

from morphevo.genotype import (MutationConfig, expand_phenotype, from_json,
                               iter_nodes, module_count, mutate,
                               random_genotype, to_json, validate)

rng = np.random.default_rng(7)

g = random_genotype(rng)
print(f"random genotype: {module_count(g)} modules after mirror expansion")
depths = {}
for node, parent, slot in iter_nodes(g):
    depths[id(node)] = 0 if parent is None else depths[id(parent)] + 1
    where = "root" if parent is None else f"slot {slot}"
    print(f"  {'  ' * depths[id(node)]}{node.kind.value} ({where})")
print(f"violations: {validate(g) or 'none'}")

print("\none mutation = one structural edit + parameter noise")
child = mutate(g, rng, MutationConfig())
print(f"  parent {module_count(g)} modules -> child {module_count(child)} modules")
print(f"  parent unchanged by mutation: {module_count(g)} modules still")

print("\ngenotypes serialize to canonical JSON")
text = to_json(g)
print(f"  {len(text)} bytes, round-trips exactly: {from_json(text) == g}")

ph = expand_phenotype(g)
print(f"\nphenotype: {ph.module_count} modules, {len(ph.joints)} joints, "
      f"{ph.n_param_sets} independent controller parameter sets")
print("  (mirrored joint pairs share one parameter set, so the learner's")
print("   search space stays small even for wide bodies)")
