"""Morphological diversity via ordered tree edit distance.

Genotypes map to kind-labeled ordered trees (controller parameters and the
phase flag are not morphology and are excluded); distance is the classic
Zhang-Shasha unit-cost edit distance, and population diversity is the mean
over all unordered pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .genotype import Genotype, GenotypeNode


class TooFewError(Exception):
    """Diversity needs at least two genotypes."""


@dataclass
class LabeledTree:
    label: str
    children: list["LabeledTree"] = field(default_factory=list)

    def as_tuple(self):
        return (self.label, tuple(c.as_tuple() for c in self.children))

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children)


def to_labeled_tree(g: Genotype) -> LabeledTree:
    """Kind-labeled ordered tree; child slots serialize in ascending order."""

    def convert(node: GenotypeNode) -> LabeledTree:
        return LabeledTree(node.kind.value,
                           [convert(child) for _, child in node.sorted_children()])

    return convert(g.root)


# ---------------------------------------------------------------------------
# Zhang-Shasha ordered tree edit distance, unit costs


def _flatten(tree: LabeledTree):
    """Postorder labels, leftmost-leaf-descendant indices, and keyroots."""
    labels: list[str] = []
    lmld: list[int] = []

    def walk(node: LabeledTree) -> int:
        first_leaf = -1
        for child in node.children:
            leaf = walk(child)
            if first_leaf < 0:
                first_leaf = leaf
        index = len(labels)
        labels.append(node.label)
        lmld.append(first_leaf if first_leaf >= 0 else index)
        return lmld[index]

    walk(tree)
    n = len(labels)
    seen: set[int] = set()
    keyroots = []
    # a keyroot is the highest node owning its leftmost leaf; scanning the
    # postorder from the top keeps only the first owner of each leaf
    for i in range(n - 1, -1, -1):
        if lmld[i] not in seen:
            seen.add(lmld[i])
            keyroots.append(i)
    keyroots.reverse()
    return labels, lmld, keyroots


def tree_edit_distance(a: LabeledTree, b: LabeledTree) -> int:
    """Minimum unit-cost insertions, deletions, and relabelings turning the
    ordered tree ``a`` into ``b``."""
    la, lla, kra = _flatten(a)
    lb, llb, krb = _flatten(b)
    m, n = len(la), len(lb)
    dist = np.zeros((m, n), dtype=np.int64)
    for i in kra:
        for j in krb:
            _treedist(i, j, la, lb, lla, llb, dist)
    return int(dist[m - 1, n - 1])


def _treedist(i: int, j: int, la, lb, lla, llb, dist) -> None:
    li, lj = lla[i], llb[j]
    rows = i - li + 2
    cols = j - lj + 2
    fd = np.zeros((rows, cols), dtype=np.int64)
    fd[1:, 0] = np.arange(1, rows)
    fd[0, 1:] = np.arange(1, cols)
    for x in range(1, rows):
        ix = li + x - 1
        for y in range(1, cols):
            jy = lj + y - 1
            if lla[ix] == li and llb[jy] == lj:
                cost = 0 if la[ix] == lb[jy] else 1
                fd[x, y] = min(fd[x - 1, y] + 1,
                               fd[x, y - 1] + 1,
                               fd[x - 1, y - 1] + cost)
                dist[ix, jy] = fd[x, y]
            else:
                px = lla[ix] - li
                py = llb[jy] - lj
                fd[x, y] = min(fd[x - 1, y] + 1,
                               fd[x, y - 1] + 1,
                               fd[px, py] + dist[ix, jy])


class TedCache:
    """Distance memo keyed by canonical tree content, shared across calls."""

    def __init__(self):
        self._memo: dict = {}

    def distance(self, a: LabeledTree, b: LabeledTree) -> int:
        ka, kb = a.as_tuple(), b.as_tuple()
        if kb < ka:
            ka, kb, a, b = kb, ka, b, a
        key = (ka, kb)
        if key not in self._memo:
            self._memo[key] = tree_edit_distance(a, b)
        return self._memo[key]


def population_diversity(genotypes, cache: TedCache | None = None) -> float:
    """Mean pairwise tree edit distance over all unordered pairs."""
    genotypes = list(genotypes)
    if len(genotypes) < 2:
        raise TooFewError("diversity needs at least two genotypes")
    cache = cache or TedCache()
    trees = [to_labeled_tree(g) for g in genotypes]
    total = 0
    pairs = 0
    for i in range(len(trees)):
        for j in range(i + 1, len(trees)):
            total += cache.distance(trees[i], trees[j])
            pairs += 1
    return total / pairs
