"""Tree edit distance against an independent oracle, plus metric axioms."""

import numpy as np
import pytest

import ted_oracle
from morphevo.diversity import (
    LabeledTree,
    TedCache,
    TooFewError,
    population_diversity,
    to_labeled_tree,
    tree_edit_distance,
)
from morphevo.genotype import (
    HEAD_FRONT,
    ControllerParams,
    Genotype,
    GenotypeNode,
    ModuleKind,
    MutationConfig,
    flip_phase,
    mutate,
    random_genotype,
)


def leaf(label):
    return LabeledTree(label)


def tree(label, *children):
    return LabeledTree(label, list(children))


def random_labeled_tree(rng, max_nodes):
    """Uniform-ish random ordered tree with 1..max_nodes nodes."""
    n = int(rng.integers(1, max_nodes + 1))
    labels = ["head", "block", "joint"]
    nodes = [LabeledTree(labels[int(rng.integers(3))]) for _ in range(n)]
    for i in range(1, n):
        parent = nodes[int(rng.integers(i))]
        parent.children.append(nodes[i])
    return nodes[0]


def test_identical_trees_distance_zero():
    a = tree("head", leaf("block"), tree("joint", leaf("block")))
    assert tree_edit_distance(a, a) == 0


def test_single_insertion_costs_one():
    assert tree_edit_distance(leaf("head"), tree("head", leaf("block"))) == 1


def test_relabel_costs_one():
    a = tree("head", leaf("block"))
    b = tree("head", leaf("joint"))
    assert tree_edit_distance(a, b) == 1


def test_matches_independent_oracle_on_random_pairs():
    rng = np.random.default_rng(77)
    for _ in range(200):
        a = random_labeled_tree(rng, 8)
        b = random_labeled_tree(rng, 8)
        expected = ted_oracle.tree_distance(a.as_tuple(), b.as_tuple())
        assert tree_edit_distance(a, b) == expected


def test_matches_oracle_on_genotype_trees():
    rng = np.random.default_rng(78)
    for _ in range(40):
        a = to_labeled_tree(random_genotype(rng, 2, 8))
        b = to_labeled_tree(random_genotype(rng, 2, 8))
        assert tree_edit_distance(a, b) == ted_oracle.tree_distance(a.as_tuple(),
                                                                    b.as_tuple())


def test_metric_axioms_on_random_triples():
    rng = np.random.default_rng(79)
    for _ in range(500):
        a = random_labeled_tree(rng, 7)
        b = random_labeled_tree(rng, 7)
        c = random_labeled_tree(rng, 7)
        dab = tree_edit_distance(a, b)
        dba = tree_edit_distance(b, a)
        assert dab >= 0
        assert dab == dba
        assert (dab == 0) == (a.as_tuple() == b.as_tuple())
        assert dab <= tree_edit_distance(a, c) + tree_edit_distance(c, b)
        assert dab <= a.size() + b.size()


def test_phase_and_params_excluded():
    rng = np.random.default_rng(80)
    g = random_genotype(rng)
    assert to_labeled_tree(g).as_tuple() == to_labeled_tree(flip_phase(g)).as_tuple()
    params_only = mutate(g, np.random.default_rng(3),
                         MutationConfig(p_add=0, p_remove=0, p_flip=1, sigma=0.5))
    assert to_labeled_tree(g).as_tuple() == to_labeled_tree(params_only).as_tuple()


def test_lone_head_maps_to_single_node():
    t = to_labeled_tree(Genotype(GenotypeNode(ModuleKind.HEAD), False))
    assert t.as_tuple() == ("head", ())


def test_population_diversity_examples():
    g0 = Genotype(GenotypeNode(ModuleKind.HEAD), False)
    assert population_diversity([g0, g0.clone(), g0.clone()]) == 0.0

    chain = g0.clone()
    node = chain.root
    for _ in range(4):
        child = GenotypeNode(ModuleKind.BLOCK)
        node.children[HEAD_FRONT if node.kind is ModuleKind.HEAD else 0] = child
        node = child
    # lone head vs 4-block chain: 4 insertions
    assert tree_edit_distance(to_labeled_tree(g0), to_labeled_tree(chain)) == 4
    assert population_diversity([g0, chain]) == 4.0


def test_population_diversity_mean_of_pairs():
    def chain(n, kind):
        g = Genotype(GenotypeNode(ModuleKind.HEAD), False)
        node = g.root
        for _ in range(n):
            params = ControllerParams(0.5, 0.0) if kind is ModuleKind.JOINT else None
            child = GenotypeNode(kind, controller=params)
            node.children[HEAD_FRONT if node.kind is ModuleKind.HEAD else 0] = child
            node = child
        return g

    a = chain(0, ModuleKind.BLOCK)
    b = chain(2, ModuleKind.BLOCK)
    c = chain(4, ModuleKind.BLOCK)
    # pairwise distances 2, 2, 4
    assert population_diversity([a, b, c]) == pytest.approx((2 + 2 + 4) / 3)


def test_population_diversity_needs_two():
    with pytest.raises(TooFewError):
        population_diversity([Genotype(GenotypeNode(ModuleKind.HEAD), False)])


def test_cache_reuses_distances():
    rng = np.random.default_rng(81)
    pop = [random_genotype(rng, 3, 8) for _ in range(10)]
    cache = TedCache()
    d1 = population_diversity(pop, cache)
    d2 = population_diversity(pop, cache)
    assert d1 == d2
    fresh = population_diversity(pop)
    assert d1 == fresh
