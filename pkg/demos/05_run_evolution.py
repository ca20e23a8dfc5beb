"""Evolve robot bodies, with and without intra-life learning.

The outer loop is a plain evolutionary algorithm: tournament parent
selection, one mutated offspring per parent, then survivor selection.
Elitist selection keeps the best of parents and offspring; generational
selection keeps only the offspring. With a learning budget, every new
robot tunes its controller before being scored, which costs budget
simulator calls per individual instead of one.
"""

from morphevo.evolution import EvolutionConfig, evolve, posthoc_learning_phase
from morphevo.fitness import generate_terrain, make_locomotion_evaluator


def show(tag, log):
    print(f"\n{tag}")
    print("  gen   evals   best-so-far   pop-best    pop-mean   diversity")
    for r in log.records:
        print(f"  {r.generation:3d}  {r.cumulative_evaluations:6d}"
              f"  {r.best_so_far:10.3f}  {r.best_in_population:9.3f}"
              f"  {r.mean_fitness:9.3f}  {r.diversity:9.2f}")


base = dict(population_size=10, offspring_count=10, tournament_size=3,
            generations=6, master_seed=4)

evaluator = make_locomotion_evaluator(generate_terrain())
log = evolve(EvolutionConfig(survivor_mode="elitist", learning_budget=None,
                             **base), evaluator)
show(f"elitist, no learning ({evaluator.count} simulator calls)", log)

evaluator = make_locomotion_evaluator(generate_terrain())
log = evolve(EvolutionConfig(survivor_mode="generational", learning_budget=None,
                             **base), evaluator)
show(f"generational, no learning ({evaluator.count} calls; "
     "pop-best may drop, best-so-far never does)", log)

evaluator = make_locomotion_evaluator(generate_terrain())
learned = evolve(EvolutionConfig(survivor_mode="elitist", learning_budget=5,
                                 **base), evaluator)
show(f"elitist, learning budget 5 ({evaluator.count} calls; "
     "5x the cost per generation)", learned)

# archives keep every robot ever scored, so a run can be extended after
# the fact with a bigger learning budget
final = learned.population
improved = posthoc_learning_phase(final, budget=10, evaluator=evaluator,
                                  master_seed=base["master_seed"])
best_before = max(i.fitness for i in final)
best_after = max(i.fitness for i in improved)
print(f"\nextra learning phase on the final population (budget 10):")
print(f"  population best {best_before:+.3f} -> {best_after:+.3f}")
