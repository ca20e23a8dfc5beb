"""Deterministic fitness evaluation.

Locomotion fitness comes from a kinematic proxy instead of a physics
engine: the module tree is posed in the sagittal plane by forward
kinematics, and each step the module pressing deepest into the terrain acts
as an anchor whose ground contact is treated as planted.  Whatever
body-frame motion that contact point undergoes is transferred (sign-flipped
and grip-scaled) to the whole body as travel-axis translation.  The model
is crude on purpose: deterministic, cheap, sensitive to both morphology and
controller parameters, and simple enough to re-derive by hand.

Synthetic benchmark functions for validating the learner live here too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .controller import DEFAULT_FREQUENCY, DEFAULT_OFFSET
from .genotype import ModuleKind, Phenotype, iter_phenotype_modules

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

DEFAULT_TERRAIN_SEED = 0
DEFAULT_TERRAIN_CELLS = 256
DEFAULT_CELL_SIZE = 0.2
DEFAULT_TERRAIN_AMPLITUDE = 0.03


class InvalidParamsError(Exception):
    """Parameter vector has the wrong length or out-of-bounds entries."""


@dataclass
class SimConfig:
    duration: float = 30.0
    dt: float = 0.05
    max_deflection: float = math.pi / 3.0
    module_length: float = 0.1

    @property
    def n_steps(self) -> int:
        steps = self.duration / self.dt
        rounded = round(steps)
        if abs(steps - rounded) > 1e-9:
            raise ValueError("duration must be a whole number of timesteps")
        return int(rounded)


@dataclass
class Heightmap:
    grid: np.ndarray        # (cells, cells), indexed [ix, iy], meters
    cell_size: float
    seed: int
    amplitude: float
    #: height profile along the travel line y=0, linear in x between lattice
    #: columns; precomputed because the simulator only ever queries y=0
    line: np.ndarray = field(init=False)

    def __post_init__(self):
        cells = self.grid.shape[0]
        center = (cells - 1) / 2.0
        lo = int(math.floor(center))
        frac = center - lo
        if lo + 1 < cells:
            self.line = (1.0 - frac) * self.grid[:, lo] + frac * self.grid[:, lo + 1]
        else:
            self.line = self.grid[:, lo].copy()

    @property
    def cells(self) -> int:
        return self.grid.shape[0]

    def height(self, x, y):
        """Bilinear height at world (x, y); queries clamp to the grid edge."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        cells = self.cells
        center = (cells - 1) / 2.0
        u = np.clip(x / self.cell_size + center, 0.0, cells - 1.0)
        v = np.clip(y / self.cell_size + center, 0.0, cells - 1.0)
        iu = np.minimum(u.astype(np.int64), cells - 2)
        iv = np.minimum(v.astype(np.int64), cells - 2)
        fu = u - iu
        fv = v - iv
        g = self.grid
        h = (g[iu, iv] * (1 - fu) * (1 - fv)
             + g[iu + 1, iv] * fu * (1 - fv)
             + g[iu, iv + 1] * (1 - fu) * fv
             + g[iu + 1, iv + 1] * fu * fv)
        return h if h.shape else float(h)


def generate_terrain(seed: int = DEFAULT_TERRAIN_SEED,
                     cells: int = DEFAULT_TERRAIN_CELLS,
                     cell_size: float = DEFAULT_CELL_SIZE,
                     amplitude: float = DEFAULT_TERRAIN_AMPLITUDE) -> Heightmap:
    """Value-noise heightmap: seeded uniform lattice in [-amplitude, amplitude]
    with bilinear interpolation between lattice points."""
    if cells < 2:
        raise ValueError("need at least a 2x2 lattice")
    rng = np.random.default_rng(seed)
    grid = rng.uniform(-amplitude, amplitude, size=(cells, cells))
    return Heightmap(grid, cell_size, seed, amplitude)


def flat_terrain(cells: int = 2, cell_size: float = DEFAULT_CELL_SIZE) -> Heightmap:
    return Heightmap(np.zeros((cells, cells)), cell_size, seed=0, amplitude=0.0)


def export_terrain(terrain: Heightmap, path) -> None:
    """Plain-text row-major float grid with a parameter header comment."""
    header = (f"cells={terrain.cells} cell_size={terrain.cell_size!r} "
              f"seed={terrain.seed} amplitude={terrain.amplitude!r}")
    np.savetxt(path, terrain.grid, header=header)


# ---------------------------------------------------------------------------
# forward kinematics


@dataclass
class CompiledBody:
    """Flattened phenotype: everything FK needs, as arrays in pre-order."""

    parents: np.ndarray        # (M,) int, -1 for root
    anchors: np.ndarray        # (M,) attachment fraction along the parent
    rot_const: np.ndarray      # (M,) accumulated fixed rotations from root
    path: np.ndarray           # (J, M) 1.0 where joint j is on the chain to m
    joint_module: np.ndarray   # (J,) module index of each joint
    params_index: np.ndarray   # (J,) distinct-parameter-set index
    mirrored: np.ndarray       # (J,) bool
    n_param_sets: int
    alternating: bool


def compile_body(ph: Phenotype) -> CompiledBody:
    mods = iter_phenotype_modules(ph)
    n = len(mods)
    parents = np.empty(n, dtype=np.int64)
    anchors = np.empty(n)
    rot_const = np.empty(n)
    n_joints = len(ph.joints)
    path = np.zeros((n_joints, n))
    joint_module = np.full(n_joints, -1, dtype=np.int64)
    params_index = np.array([j.params_index for j in ph.joints], dtype=np.int64)
    mirrored = np.array([j.mirrored for j in ph.joints], dtype=bool)
    for m, (mod, parent) in enumerate(mods):
        parents[m] = parent
        anchors[m] = mod.anchor
        rot_const[m] = mod.rotation + (rot_const[parent] if parent >= 0 else 0.0)
        if parent >= 0:
            path[:, m] = path[:, parent]
        if mod.joint_index >= 0:
            # a joint's own angle rotates its own segment and its subtree
            path[mod.joint_index, m] = 1.0
            joint_module[mod.joint_index] = m
    return CompiledBody(parents, anchors, rot_const, path, joint_module,
                        params_index, mirrored, ph.n_param_sets, ph.alternating_phase)


def _pose_arrays(body: CompiledBody, angles: np.ndarray, cfg: SimConfig,
                 heading: float = 0.0):
    """Segment endpoints over time.

    angles: (T, J) joint angles in radians.  Returns base and tip arrays of
    shape (T, M, 2) with columns (x, z), body frame.
    """
    T = angles.shape[0]
    M = body.parents.shape[0]
    theta = heading + body.rot_const[None, :] + angles @ body.path
    ct, st = np.cos(theta), np.sin(theta)
    L = cfg.module_length
    base = np.zeros((T, M, 2))
    for m in range(M):
        p = body.parents[m]
        if p >= 0:
            a = body.anchors[m] * L
            base[:, m, 0] = base[:, p, 0] + a * ct[:, p]
            base[:, m, 1] = base[:, p, 1] + a * st[:, p]
    tip = np.empty_like(base)
    tip[:, :, 0] = base[:, :, 0] + L * ct
    tip[:, :, 1] = base[:, :, 1] + L * st
    return base, tip


def forward_kinematics(ph: Phenotype, joint_angles, cfg: SimConfig | None = None,
                       heading: float = 0.0):
    """Pose every module at one instant.

    joint_angles: one radian value per phenotype joint.  Returns (base, tip,
    heading) arrays of shapes (M, 2), (M, 2), (M,), modules in pre-order.
    """
    cfg = cfg or SimConfig()
    body = compile_body(ph)
    angles = np.asarray(joint_angles, dtype=float).reshape(1, -1)
    if angles.shape[1] != len(ph.joints):
        raise ValueError(f"expected {len(ph.joints)} joint angles, got {angles.shape[1]}")
    base, tip = _pose_arrays(body, angles, cfg, heading)
    theta = heading + body.rot_const + angles[0] @ body.path
    return base[0], tip[0], theta


# ---------------------------------------------------------------------------
# the anchored-crawler simulator


def _joint_angles(body: CompiledBody, params: np.ndarray, cfg: SimConfig,
                  frequency: float, offset: float) -> np.ndarray:
    """Angles (T+1, J) for steps 0..T."""
    T = cfg.n_steps
    phi = np.arange(T + 1) * (cfg.dt * frequency)
    if body.params_index.shape[0] == 0:
        return np.zeros((T + 1, 0))
    amp = params[2 * body.params_index]
    phase = params[2 * body.params_index + 1] * (2.0 * math.pi)
    if body.alternating:
        phase = phase + np.where(body.mirrored, math.pi, 0.0)
    return cfg.max_deflection * (amp[None, :] * np.sin(phi[:, None] + phase[None, :])
                                 + offset)


@njit(cache=True)
def _crawl(end_x, end_z, n_steps, line, cell_size, cells, start_x):
    """Sequential anchor-and-drag loop.

    end_x, end_z: (T+1, M, 2) endpoint coordinates, last axis (base, tip).
    Returns the accumulated body offset per step, shape (T+1,).
    """
    center = (cells - 1) / 2.0
    offsets = np.empty(n_steps + 1)
    offsets[0] = start_x
    M = end_x.shape[1]
    for t in range(1, n_steps + 1):
        prev = offsets[t - 1]
        # anchor: lowest endpoint per module (ties to base), then the module
        # deepest relative to the local terrain wins (first index on ties)
        best_depth = np.inf
        anchor = 0
        endpoint = 0
        for m in range(M):
            if end_z[t, m, 1] < end_z[t, m, 0]:
                e = 1
            else:
                e = 0
            wx = end_x[t, m, e] + prev
            u = wx / cell_size + center
            if u < 0.0:
                u = 0.0
            elif u > cells - 1.0:
                u = cells - 1.0
            iu = int(u)
            if iu > cells - 2:
                iu = cells - 2
            h = line[iu] + (u - iu) * (line[iu + 1] - line[iu])
            depth = end_z[t, m, e] - h
            if depth < best_depth:
                best_depth = depth
                anchor = m
                endpoint = e
        # that material endpoint is planted: transfer its body-frame motion
        q1 = end_x[t, anchor, endpoint]
        q0 = end_x[t - 1, anchor, endpoint]
        wx = q1 + prev
        u = wx / cell_size + center
        if u < 0.0:
            u = 0.0
        elif u > cells - 1.0:
            u = cells - 1.0
        iu = int(u)
        if iu > cells - 2:
            iu = cells - 2
        slope = (line[iu + 1] - line[iu]) / cell_size
        grip = 1.0 / (1.0 + slope * slope)
        offsets[t] = prev - grip * (q1 - q0)
    return offsets


def simulate(ph: Phenotype, params, terrain: Heightmap, cfg: SimConfig | None = None,
             start_x: float = 0.0, frequency: float = DEFAULT_FREQUENCY,
             offset: float = DEFAULT_OFFSET, return_trace: bool = False):
    """Travel-axis center-of-mass displacement over one episode.

    params: normalized vector, two entries per distinct parameter set
    (amplitude, phase / 2*pi), all in [0, 1].  With return_trace the world
    center-of-mass x at every step (0..n_steps) is returned alongside.
    """
    cfg = cfg or SimConfig()
    params = np.asarray(params, dtype=float).ravel()
    if params.shape[0] != 2 * ph.n_param_sets:
        raise InvalidParamsError(
            f"expected {2 * ph.n_param_sets} parameters, got {params.shape[0]}")
    if params.size and (params.min() < 0.0 or params.max() > 1.0):
        raise InvalidParamsError("parameters must lie in [0, 1]")
    body = compile_body(ph)
    angles = _joint_angles(body, params, cfg, frequency, offset)
    base, tip = _pose_arrays(body, angles, cfg)
    end_x = np.stack((base[:, :, 0], tip[:, :, 0]), axis=2)
    end_z = np.stack((base[:, :, 1], tip[:, :, 1]), axis=2)
    offsets = _crawl(np.ascontiguousarray(end_x), np.ascontiguousarray(end_z),
                     cfg.n_steps, terrain.line, terrain.cell_size,
                     terrain.cells, start_x)
    com_body = 0.5 * (base[:, :, 0] + tip[:, :, 0]).mean(axis=1)
    trace = com_body + offsets
    displacement = float(trace[-1] - trace[0])
    if return_trace:
        return displacement, trace
    return displacement


# ---------------------------------------------------------------------------
# benchmark objectives for learner validation


def sphere_benchmark(x) -> float:
    """Negated squared distance to the box center; maximum 0 at 0.5^d."""
    x = np.asarray(x, dtype=float)
    return float(-np.sum((x - 0.5) ** 2))


def rastrigin_benchmark(x) -> float:
    """Negated Rastrigin mapped onto [0,1]^d; maximum 0 at the center."""
    x = np.asarray(x, dtype=float)
    z = (x - 0.5) * 10.24
    return float(-(10.0 * x.size + np.sum(z * z - 10.0 * np.cos(2.0 * math.pi * z))))


class CountingEvaluator:
    """Wraps a fitness callable and counts every invocation.

    The evolutionary loop's bookkeeping is audited against this counter, so
    every simulator call must be routed through here.
    """

    def __init__(self, fn):
        self._fn = fn
        self.count = 0

    def __call__(self, *args, **kwargs):
        self.count += 1
        return self._fn(*args, **kwargs)


def make_locomotion_evaluator(terrain: Heightmap | None = None,
                              cfg: SimConfig | None = None) -> CountingEvaluator:
    """Counting evaluator of (phenotype, params) on the shared terrain."""
    terrain = terrain if terrain is not None else generate_terrain()
    cfg = cfg or SimConfig()

    def evaluate(ph: Phenotype, params) -> float:
        return simulate(ph, params, terrain, cfg)

    return CountingEvaluator(evaluate)
