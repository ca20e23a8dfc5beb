"""Measure how structurally varied a population is.

Diversity is the mean tree edit distance (insert/delete/relabel, unit
costs) over all unordered pairs of genotypes, computed on module-kind
trees: controller parameters do not count, shape does. Selection pressure
shows up here: cloning collapses diversity, mutation restores some.
"""

import numpy as np

from morphevo.diversity import TedCache, population_diversity, tree_edit_distance, to_labeled_tree
from morphevo.genotype import MutationConfig, mutate, random_genotype

rng = np.random.default_rng(21)

population = [random_genotype(rng) for _ in range(12)]
print(f"random population of {len(population)}: "
      f"diversity {population_diversity(population):.2f}")

a, b = to_labeled_tree(population[0]), to_labeled_tree(population[1])
print(f"single pair distance: {tree_edit_distance(a, b)} edits "
      f"({a.size()} vs {b.size()} nodes)")
print(f"self distance is always zero: {tree_edit_distance(a, a)}")

clones = [population[0].clone() for _ in range(12)]
print(f"\nall-clones population: diversity {population_diversity(clones):.2f}")

drifted = [mutate(population[0], rng, MutationConfig()) for _ in range(12)]
print(f"one mutation step from a single ancestor: "
      f"diversity {population_diversity(drifted):.2f}")

for _ in range(5):
    drifted = [mutate(g, rng, MutationConfig()) for g in drifted]
print(f"after six mutation steps: diversity {population_diversity(drifted):.2f}")

# repeated measurements reuse cached pair distances
import time

cache = TedCache()
t0 = time.perf_counter()
population_diversity(drifted, cache)
first = time.perf_counter() - t0
t0 = time.perf_counter()
population_diversity(drifted, cache)
second = time.perf_counter() - t0
print(f"\nshared cache: first pass {first * 1e3:.1f} ms, "
      f"second pass {second * 1e3:.2f} ms")
