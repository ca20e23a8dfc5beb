"""Tree-encoded modular robot morphologies.

A robot is a rooted tree of modules: exactly one head at the root, plus
blocks and joints hanging off attachment slots.  The encoding is
symmetry-aware: the head exposes a single "side" slot whose subtree is
instantiated twice (left and right) when the genotype is expanded into a
phenotype, and mirrored joints share one controller parameter set.

Genotypes are treated as immutable values; every operator returns a new
tree and leaves its input untouched.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

TWO_PI = 2.0 * math.pi

#: Hard cap on phenotype module count (head counts once, side subtrees twice).
MAX_MODULES = 20

#: Size range for freshly initialized genotypes.
INIT_MIN_MODULES = 15
INIT_MAX_MODULES = 20

GENOTYPE_FORMAT_VERSION = 1


class ModuleKind(str, Enum):
    HEAD = "head"
    BLOCK = "block"
    JOINT = "joint"


# Genotype-side slot counts.  The phenotype has one more attachment point per
# non-root module (the face occupied by the parent) and splits the head's
# shared side slot into left and right.
SLOT_COUNTS = {
    ModuleKind.HEAD: 3,   # front, back, side (left/right shared)
    ModuleKind.BLOCK: 5,  # front, left, right, up, down
    ModuleKind.JOINT: 1,  # far end
}

HEAD_FRONT, HEAD_BACK, HEAD_SIDE = 0, 1, 2


@dataclass(frozen=True)
class ControllerParams:
    """Sine-wave parameters of one joint: amplitude in [0, 1] (fraction of
    maximum deflection) and phase offset in [0, 2*pi) radians."""

    amplitude: float
    phase_offset: float

    def normalized(self) -> tuple[float, float]:
        """Map to the unit box the learner operates in."""
        return self.amplitude, self.phase_offset / TWO_PI

    @staticmethod
    def from_normalized(a: float, p: float) -> "ControllerParams":
        return ControllerParams(float(a), float(p) * TWO_PI)

    @staticmethod
    def random(rng: np.random.Generator) -> "ControllerParams":
        return ControllerParams(float(rng.random()), float(rng.random()) * TWO_PI)

    def perturbed(self, rng: np.random.Generator, sigma: float) -> "ControllerParams":
        """Gaussian noise with stddev ``sigma`` in normalized units on each
        field; amplitude clamped, phase wrapped."""
        a = min(1.0, max(0.0, self.amplitude + sigma * float(rng.standard_normal())))
        p = (self.phase_offset / TWO_PI + sigma * float(rng.standard_normal())) % 1.0
        return ControllerParams(a, p * TWO_PI)


@dataclass
class GenotypeNode:
    kind: ModuleKind
    children: dict[int, "GenotypeNode"] = field(default_factory=dict)
    controller: ControllerParams | None = None

    def clone(self) -> "GenotypeNode":
        return GenotypeNode(
            self.kind,
            {slot: child.clone() for slot, child in self.children.items()},
            self.controller,
        )

    def sorted_children(self) -> list[tuple[int, "GenotypeNode"]]:
        return sorted(self.children.items())


@dataclass
class Genotype:
    root: GenotypeNode
    alternating_phase: bool

    def clone(self) -> "Genotype":
        return Genotype(self.root.clone(), self.alternating_phase)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Genotype):
            return NotImplemented
        return (
            self.alternating_phase == other.alternating_phase
            and _nodes_equal(self.root, other.root)
        )


def _nodes_equal(a: GenotypeNode, b: GenotypeNode) -> bool:
    if a.kind != b.kind or a.controller != b.controller:
        return False
    if set(a.children) != set(b.children):
        return False
    return all(_nodes_equal(child, b.children[slot]) for slot, child in a.children.items())


@dataclass
class MutationConfig:
    """Probabilities and scales of the genotype mutation operator."""

    p_add: float = 1.0 / 3.0
    p_remove: float = 1.0 / 3.0
    p_flip: float = 1.0 / 3.0
    sigma: float = 0.1          # parameter noise, normalized units
    max_change: int = 3         # modules added/removed per structural mutation
    max_retries: int = 100      # attempts before falling back to parameter-only
    max_modules: int = MAX_MODULES


class NoCapacityError(Exception):
    """No legal insertion position exists."""


class NothingToRemoveError(Exception):
    """Only the head remains; there is no removable module."""


# ---------------------------------------------------------------------------
# counting and traversal


def module_count(g: Genotype) -> int:
    """Phenotype module count: head once, side-subtree modules twice."""
    return _count(g.root, 1)


def _count(node: GenotypeNode, multiplicity: int) -> int:
    total = multiplicity
    for slot, child in node.children.items():
        child_mult = 2 if (node.kind is ModuleKind.HEAD and slot == HEAD_SIDE) else multiplicity
        total += _count(child, child_mult)
    return total


def iter_nodes(g: Genotype):
    """Pre-order (node, parent, slot) triples; root has parent None."""
    stack = [(g.root, None, -1)]
    while stack:
        node, parent, slot = stack.pop()
        yield node, parent, slot
        for s, child in sorted(node.children.items(), reverse=True):
            stack.append((child, node, s))


def _open_slots(g: Genotype) -> list[tuple[GenotypeNode, int, int]]:
    """All unoccupied (node, slot, multiplicity) positions."""
    out = []
    for node, mult in _nodes_with_multiplicity(g):
        for slot in range(SLOT_COUNTS[node.kind]):
            if slot in node.children:
                continue
            slot_mult = 2 if (node.kind is ModuleKind.HEAD and slot == HEAD_SIDE) else mult
            out.append((node, slot, slot_mult))
    return out


def _nodes_with_multiplicity(g: Genotype) -> list[tuple[GenotypeNode, int]]:
    out = []

    def walk(node: GenotypeNode, mult: int) -> None:
        out.append((node, mult))
        for slot, child in node.sorted_children():
            child_mult = 2 if (node.kind is ModuleKind.HEAD and slot == HEAD_SIDE) else mult
            walk(child, child_mult)

    walk(g.root, 1)
    return out


# ---------------------------------------------------------------------------
# initialization and mutation operators


def random_genotype(rng: np.random.Generator, min_modules: int = INIT_MIN_MODULES,
                    max_modules: int = INIT_MAX_MODULES) -> Genotype:
    """Grow a random genotype from a lone head.

    A target size is drawn uniformly from [min_modules, max_modules]; modules
    are then attached one at a time at uniformly random open slots (block or
    joint, each with probability 1/2) until the target is reached.  Side-slot
    attachments count twice, so only slots that still fit the remaining
    budget are eligible.
    """
    if not (1 <= min_modules <= max_modules):
        raise ValueError("need 1 <= min_modules <= max_modules")
    g = Genotype(GenotypeNode(ModuleKind.HEAD), alternating_phase=False)
    target = int(rng.integers(min_modules, max_modules + 1))
    count = 1
    while count < target:
        slots = [s for s in _open_slots(g) if s[2] <= target - count]
        if not slots:
            break
        node, slot, mult = slots[int(rng.integers(len(slots)))]
        node.children[slot] = _random_module(rng)
        count += mult
    g.alternating_phase = bool(rng.random() < 0.5)
    return g


def _random_module(rng: np.random.Generator) -> GenotypeNode:
    if rng.random() < 0.5:
        return GenotypeNode(ModuleKind.BLOCK)
    return GenotypeNode(ModuleKind.JOINT, controller=ControllerParams.random(rng))


def add_modules(g: Genotype, rng: np.random.Generator, n: int) -> Genotype:
    """Insert ``n`` modules one at a time at uniformly random positions.

    Positions include occupied slots: inserting there splices the new module
    between parent and existing child.  The size cap is not checked here;
    the caller retries cap-violating mutations.
    """
    h = g.clone()
    for _ in range(n):
        positions = []
        for node, _, _ in iter_nodes(h):
            for slot in range(SLOT_COUNTS[node.kind]):
                positions.append((node, slot))
        if not positions:
            raise NoCapacityError("no insertion position available")
        node, slot = positions[int(rng.integers(len(positions)))]
        new = _random_module(rng)
        existing = node.children.get(slot)
        if existing is not None:
            # splice: the displaced child re-attaches to the new module's
            # first slot (always free on a fresh module)
            new.children[0] = existing
        node.children[slot] = new
    return h


def remove_modules(g: Genotype, rng: np.random.Generator, n: int) -> Genotype:
    """Delete up to ``n`` uniformly chosen non-head modules.

    The removed node's first child (slot order) splices into the freed slot;
    its remaining children are dropped with their subtrees.  Stops early if
    only the head remains; raises if there was nothing to remove at all.
    """
    h = g.clone()
    removed = 0
    for _ in range(n):
        candidates = [(node, parent, slot) for node, parent, slot in iter_nodes(h)
                      if parent is not None]
        if not candidates:
            if removed == 0:
                raise NothingToRemoveError("only the head remains")
            break
        node, parent, slot = candidates[int(rng.integers(len(candidates)))]
        kids = node.sorted_children()
        if kids:
            parent.children[slot] = kids[0][1]
        else:
            del parent.children[slot]
        removed += 1
    return h


def flip_phase(g: Genotype) -> Genotype:
    h = g.clone()
    h.alternating_phase = not h.alternating_phase
    return h


def _perturb_params(g: Genotype, rng: np.random.Generator, sigma: float) -> Genotype:
    h = g.clone()

    def walk(node: GenotypeNode) -> None:
        if node.controller is not None:
            node.controller = node.controller.perturbed(rng, sigma)
        for _, child in node.sorted_children():
            walk(child)

    walk(h.root)
    return h


def mutate(g: Genotype, rng: np.random.Generator, cfg: MutationConfig | None = None) -> Genotype:
    """One mutation event: a structural edit (add / remove / phase flip)
    plus Gaussian perturbation of every controller parameter set.

    Structural edits that would break the module cap (or removals on a bare
    head) are re-attempted with fresh draws up to ``cfg.max_retries``; after
    that only the parameter perturbation applies.
    """
    cfg = cfg or MutationConfig()
    total = cfg.p_add + cfg.p_remove + cfg.p_flip
    structural = None
    for _ in range(cfg.max_retries):
        r = float(rng.random()) * total
        if r < cfg.p_add:
            n = int(rng.integers(1, cfg.max_change + 1))
            candidate = add_modules(g, rng, n)
            if module_count(candidate) <= cfg.max_modules:
                structural = candidate
                break
        elif r < cfg.p_add + cfg.p_remove:
            n = int(rng.integers(1, cfg.max_change + 1))
            try:
                structural = remove_modules(g, rng, n)
                break
            except NothingToRemoveError:
                continue
        else:
            structural = flip_phase(g)
            break
    if structural is None:
        structural = g
    return _perturb_params(structural, rng, cfg.sigma)


# ---------------------------------------------------------------------------
# phenotype expansion


@dataclass
class PhenotypeJoint:
    """One actuated hinge of the expanded robot."""

    params_index: int   # which distinct parameter set drives it
    mirrored: bool      # True for the right-side copy of a side-subtree joint


@dataclass
class PhenotypeModule:
    kind: ModuleKind
    anchor: float       # attachment point on the parent segment: 0 base, 0.5 mid, 1 tip
    rotation: float     # fixed in-plane rotation relative to the parent heading
    mirrored: bool
    joint_index: int    # index into Phenotype.joints, -1 for non-joints
    children: list["PhenotypeModule"] = field(default_factory=list)


@dataclass
class Phenotype:
    """Symmetry-expanded robot: mirrored side subtrees instantiated twice,
    with mirrored joints sharing one parameter set."""

    root: PhenotypeModule
    joints: list[PhenotypeJoint]
    n_param_sets: int
    initial_params: np.ndarray      # normalized [0,1]^(2 * n_param_sets)
    alternating_phase: bool
    module_count: int


# (anchor, rotation) per genotype slot, for the non-mirrored instantiation.
_HEAD_SLOT_GEOMETRY = {
    HEAD_FRONT: (1.0, 0.0),
    HEAD_BACK: (0.0, math.pi),
}
_HEAD_SIDE_GEOMETRY = (0.5, math.pi / 2.0)
_BLOCK_SLOT_GEOMETRY = {
    0: (1.0, 0.0),                # front
    1: (0.5, math.pi / 2.0),      # left
    2: (0.5, -math.pi / 2.0),     # right
    3: (0.5, math.pi / 2.0),      # up, folded into the plane
    4: (0.5, -math.pi / 2.0),     # down, folded into the plane
}
_JOINT_SLOT_GEOMETRY = {0: (1.0, 0.0)}


def _slot_geometry(kind: ModuleKind, slot: int) -> tuple[float, float]:
    if kind is ModuleKind.BLOCK:
        return _BLOCK_SLOT_GEOMETRY[slot]
    if kind is ModuleKind.JOINT:
        return _JOINT_SLOT_GEOMETRY[slot]
    return _HEAD_SLOT_GEOMETRY[slot]


def expand_phenotype(g: Genotype) -> Phenotype:
    """Expand the genotype to its mirrored phenotype.

    The head's side subtree is instantiated twice; the right copy is marked
    mirrored (its lateral slot rotations flip sign, and its joints carry the
    mirrored flag so the controller can apply the alternating phase shift).
    """
    param_ids: dict[int, int] = {}
    param_values: list[ControllerParams] = []

    def param_id(node: GenotypeNode) -> int:
        key = id(node)
        if key not in param_ids:
            param_ids[key] = len(param_values)
            param_values.append(node.controller)
        return param_ids[key]

    joints: list[PhenotypeJoint] = []
    n_modules = 0

    def build(node: GenotypeNode, anchor: float, rotation: float, mirrored: bool) -> PhenotypeModule:
        nonlocal n_modules
        n_modules += 1
        joint_index = -1
        if node.kind is ModuleKind.JOINT:
            joint_index = len(joints)
            joints.append(PhenotypeJoint(param_id(node), mirrored))
        mod = PhenotypeModule(node.kind, anchor, rotation, mirrored, joint_index)
        for slot, child in node.sorted_children():
            if node.kind is ModuleKind.HEAD and slot == HEAD_SIDE:
                a, rot = _HEAD_SIDE_GEOMETRY
                mod.children.append(build(child, a, rot, False))
                mod.children.append(build(child, a, -rot, True))
            else:
                a, rot = _slot_geometry(node.kind, slot)
                # mirror reflection flips every in-plane rotation
                mod.children.append(build(child, a, rot if not mirrored else -rot, mirrored))
        return mod

    root = build(g.root, 0.0, 0.0, False)
    initial = np.empty(2 * len(param_values))
    for i, p in enumerate(param_values):
        initial[2 * i], initial[2 * i + 1] = p.normalized()
    return Phenotype(root, joints, len(param_values), initial,
                     g.alternating_phase, n_modules)


def iter_phenotype_modules(ph: Phenotype):
    """Pre-order (module, parent_index) pairs, matching expansion order."""
    out = []

    def walk(mod: PhenotypeModule, parent: int) -> None:
        index = len(out)
        out.append((mod, parent))
        for child in mod.children:
            walk(child, index)

    walk(ph.root, -1)
    return out


# ---------------------------------------------------------------------------
# validation


def validate(g: Genotype) -> list[str]:
    """Invariant check; returns human-readable violations (empty if valid)."""
    violations: list[str] = []
    if g.root.kind is not ModuleKind.HEAD:
        violations.append(f"root must be a head, found {g.root.kind.value}")
    for node, parent, slot in iter_nodes(g):
        if node.kind is ModuleKind.HEAD and parent is not None:
            violations.append("head module found below the root")
        arity = SLOT_COUNTS[node.kind]
        for s in node.children:
            if not (0 <= s < arity):
                violations.append(f"{node.kind.value} has child in invalid slot {s}")
        if node.kind is ModuleKind.JOINT:
            if node.controller is None:
                violations.append("joint without controller parameters")
            else:
                c = node.controller
                if not (0.0 <= c.amplitude <= 1.0):
                    violations.append(f"amplitude {c.amplitude} outside [0, 1]")
                if not (0.0 <= c.phase_offset < TWO_PI):
                    violations.append(f"phase offset {c.phase_offset} outside [0, 2*pi)")
        elif node.controller is not None:
            violations.append(f"controller parameters on a {node.kind.value} module")
    count = module_count(g)
    if count > MAX_MODULES:
        violations.append(f"module count {count} exceeds cap of {MAX_MODULES}")
    return violations


# ---------------------------------------------------------------------------
# serialization


def _node_to_dict(node: GenotypeNode) -> dict:
    out: dict = {
        "kind": node.kind.value,
        "children": {str(slot): _node_to_dict(child) for slot, child in node.sorted_children()},
    }
    if node.controller is not None:
        out["controller"] = {
            "amplitude": node.controller.amplitude,
            "phase_offset": node.controller.phase_offset,
        }
    return out


def _node_from_dict(d: dict) -> GenotypeNode:
    controller = None
    if "controller" in d:
        controller = ControllerParams(float(d["controller"]["amplitude"]),
                                      float(d["controller"]["phase_offset"]))
    return GenotypeNode(
        ModuleKind(d["kind"]),
        {int(slot): _node_from_dict(child) for slot, child in d.get("children", {}).items()},
        controller,
    )


def to_json(g: Genotype) -> str:
    """Canonical JSON; floats serialize via repr so round-trips are lossless."""
    payload = {
        "format_version": GENOTYPE_FORMAT_VERSION,
        "alternating_phase": g.alternating_phase,
        "root": _node_to_dict(g.root),
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def from_json(text: str) -> Genotype:
    payload = json.loads(text)
    version = payload.get("format_version")
    if version != GENOTYPE_FORMAT_VERSION:
        raise ValueError(f"unsupported genotype format version {version!r}")
    return Genotype(_node_from_dict(payload["root"]), bool(payload["alternating_phase"]))
