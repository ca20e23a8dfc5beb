"""Simulate a hand-built crawler on flat and rough ground.

The simulator folds the body in a vertical plane with forward kinematics,
anchors whichever module digs deepest into the terrain each step, and
converts that module's horizontal motion into body translation, scaled by a
slope-dependent grip. Fitness is the displacement of the body's center of
mass after 30 simulated seconds.
"""

import numpy as np

from morphevo.fitness import (SimConfig, flat_terrain, generate_terrain,
                              simulate)
from morphevo.genotype import (ControllerParams, Genotype, GenotypeNode,
                               HEAD_FRONT, ModuleKind, expand_phenotype)


def joint(amplitude, phase, child=None):
    children = {} if child is None else {0: child}
    return GenotypeNode(ModuleKind.JOINT, children,
                        ControllerParams(amplitude, phase))


def block(child=None):
    children = {} if child is None else {0: child}
    return GenotypeNode(ModuleKind.BLOCK, children)


# a three-joint inchworm: head, then alternating joints and blocks
body = GenotypeNode(ModuleKind.HEAD, {
    HEAD_FRONT: joint(1.0, 0.0, block(joint(0.8, 2.0, block(joint(0.6, 4.0))))),
})
g = Genotype(body, alternating_phase=False)
ph = expand_phenotype(g)
print(f"inchworm: {ph.module_count} modules, {len(ph.joints)} joints")

cfg = SimConfig()
params = ph.initial_params
flat = simulate(ph, params, flat_terrain(), cfg)
print(f"flat ground displacement over {cfg.duration:.0f}s: {flat:+.3f} m")

rough = generate_terrain(seed=0)
print(f"rough displacement:  {simulate(ph, params, rough, cfg):+.3f} m")
print(f"same seed, again:    {simulate(ph, params, rough, cfg):+.3f} m  (bit-identical)")
print(f"other terrain seed:  {simulate(ph, params, generate_terrain(seed=9), cfg):+.3f} m")

# the trace shows how the gait accumulates distance step by step
_, trace = simulate(ph, params, flat_terrain(), cfg, return_trace=True)
marks = np.linspace(0, len(trace) - 1, 7).astype(int)
print("\ncenter-of-mass trajectory (flat ground):")
for i in marks:
    print(f"  t={i * cfg.dt:5.1f}s  x={trace[i]:+.3f} m")

print("\ncontroller parameters matter: zero amplitude cannot move")
zero = np.zeros_like(params)
zero[1::2] = params[1::2]
print(f"  zero-amplitude displacement: {simulate(ph, zero, flat_terrain(), cfg):+.3f} m")
