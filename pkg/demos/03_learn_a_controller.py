"""Tune one robot's controller with the Gaussian-process learner.

Within a single fitness evaluation the robot gets a small budget of
simulator trials. A Matern-5/2 GP models fitness over the normalized
controller parameters; an upper-confidence-bound rule picks each next
trial. The first trial is always the genotype's own parameters (warm
start), so a budget of 1 reduces to plain evaluation.
"""

import numpy as np

from morphevo.fitness import generate_terrain, make_locomotion_evaluator
from morphevo.genotype import expand_phenotype, random_genotype
from morphevo.learner import optimize

rng = np.random.default_rng(13)
ph = expand_phenotype(random_genotype(rng))
evaluator = make_locomotion_evaluator(generate_terrain())
print(f"robot: {ph.module_count} modules, {ph.n_param_sets} parameter sets "
      f"(search dimension {2 * ph.n_param_sets})")

budget = 30
result = optimize(lambda p: evaluator(ph, p), ph.initial_params, budget,
                  2 * ph.n_param_sets, np.random.default_rng(0))
warm = result.history[0][1]
print(f"\nwarm start fitness:     {warm:+.3f} m")
print(f"best after {budget} trials:   {result.best_fitness:+.3f} m")
print(f"simulator calls used:   {result.evaluations_used}")

print("\nbest-so-far curve:")
best = -np.inf
for i, (_, value) in enumerate(result.history, start=1):
    best = max(best, value)
    if i in (1, 2, 3, 5, 10, 20, 30):
        print(f"  trial {i:2d}: {best:+.3f} m")

# same seeds in, same answer out
again = optimize(lambda p: evaluator(ph, p), ph.initial_params, budget,
                 2 * ph.n_param_sets, np.random.default_rng(0))
print(f"\ndeterministic: rerun best identical -> {again.best_fitness == result.best_fitness}")

uniform = np.random.default_rng(0).uniform(size=(budget, 2 * ph.n_param_sets))
random_best = max(evaluator(ph, s) for s in uniform)
print(f"random search, same budget: {random_best:+.3f} m")
