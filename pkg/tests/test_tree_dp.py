from fractions import Fraction

import networkx as nx
import pytest

from core import Instance, evaluate_cost, validate
from errors import ContractError, InfeasibleError
from generators import enumerate_trees, random_distances
from oracle import brute_force_disjoint
from tree_dp import RootedTree, build_tables, reconstruct, solve_tree, solve_tree_fixed


def _tree_instances(n, k, draw=0, rational=None):
    for index, edges in enumerate(enumerate_trees(n)):
        dist = random_distances(n, seed=1000 * draw + 100 * n + index)
        if rational is True:
            dist = [[Fraction(value, 7) for value in row] for row in dist]
        elif rational is False:
            dist = [[value / 7 for value in row] for row in dist]
        yield Instance(dist, edges, k, rational=rational)


def test_rooted_tree():
    """Test l'enracinement et les requêtes de sous-arbre."""
    tree = RootedTree.from_graph(nx.Graph([(0, 1), (0, 2), (2, 3)]))
    assert tree.children[0] == [1, 2]
    assert tree.parent[3] == 2
    assert tree.contains(2, 3) and not tree.contains(1, 3)
    assert tree.subtree(2) == [2, 3]
    assert tree.bottom_up()[-1] == 0
    with pytest.raises(ContractError):
        RootedTree.from_graph(nx.cycle_graph(3))
    with pytest.raises(ContractError):
        RootedTree.from_graph(nx.path_graph(3), root=7)


def test_solve_tree_chemin(path_instance):
    """Test la DP sur le chemin a - b - c."""
    cost, clustering = solve_tree(path_instance)
    assert cost == 1
    assert len(clustering) == 2
    cost, clustering = solve_tree(path_instance, k=1)
    assert cost == 2
    assert clustering.canonical() == [(1, (0, 1, 2))]


def test_solve_tree_un_noeud():
    """Test l'arbre à un seul noeud."""
    cost, clustering = solve_tree(Instance([[0]], [], 1))
    assert cost == 0
    assert clustering.canonical() == [(0, (0,))]


def test_solve_tree_graphe_non_arbre(cycle_instance):
    """Test le refus d'un graphe qui n'est pas un arbre."""
    with pytest.raises(ContractError):
        solve_tree(cycle_instance)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6, 7])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_solve_tree_egale_oracle(n, k):
    """Test la DP contre l'oracle exhaustif sur tous les arbres à n noeuds, trois tirages de distances."""
    for draw in range(3):
        for instance in _tree_instances(n, k, draw):
            cost, clustering = solve_tree(instance)
            reference, _ = brute_force_disjoint(instance)
            assert cost == reference
            assert evaluate_cost(instance, clustering) == cost
            assert validate(instance, clustering, "disjoint").feasible


@pytest.mark.parametrize("n", [2, 4, 7])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_solve_tree_rationnel_et_flottant(n, k):
    """Test l'égalité exacte en mode rationnel et à 1e-9 près en mode flottant."""
    for draw in range(3):
        for instance in _tree_instances(n, k, draw, rational=True):
            cost, _ = solve_tree(instance)
            reference, _ = brute_force_disjoint(instance)
            assert cost == reference
        for instance in _tree_instances(n, k, draw, rational=False):
            cost, _ = solve_tree(instance)
            reference, _ = brute_force_disjoint(instance)
            assert cost == pytest.approx(reference, abs=1e-9)


def test_solve_tree_monotone_en_k():
    """Test que l'optimum décroît quand k augmente et s'annule pour k = n."""
    for instance in _tree_instances(6, 6):
        tables = build_tables(instance)
        values = [tables.value(tables.tree.root, kk) for kk in range(1, 7)]
        assert all(later <= earlier for earlier, later in zip(values, values[1:]))
        assert values[-1] == 0


def test_operations_quadratiques():
    """Test le nombre d'opérations de fusion, au plus n²(k+1)²."""
    for n, k in ((6, 2), (7, 3)):
        for instance in _tree_instances(n, k):
            tables = build_tables(instance)
            assert tables.operations <= n * n * (k + 1) ** 2


def test_reconstruct_k_plus_petit():
    """Test la reconstruction pour un budget inférieur à celui des tables."""
    instance = next(_tree_instances(5, 3))
    tables = build_tables(instance)
    clustering = reconstruct(tables, instance, k=2)
    assert len(clustering) <= 2
    assert evaluate_cost(instance, clustering) == tables.value(tables.tree.root, 2)
    with pytest.raises(ContractError):
        reconstruct(tables, instance, k=4)


def test_reconstruct_infaisable():
    """Test qu'un budget nul n'a pas de solution."""
    instance = next(_tree_instances(3, 1))
    tables = build_tables(instance)
    with pytest.raises(InfeasibleError):
        reconstruct(tables, instance, k=0)


def test_centres_fixes():
    """Test la variante à centres fixés contre la DP générale."""
    for instance in _tree_instances(6, 2):
        cost, clustering = solve_tree(instance)
        fixed_cost, fixed = solve_tree_fixed(instance, clustering.centers)
        assert fixed_cost == cost
        assert sorted(fixed.centers) == sorted(clustering.centers)
        assert validate(instance, fixed, "disjoint").feasible
        other_cost, _ = solve_tree_fixed(instance, [0, 5])
        assert other_cost >= cost
    with pytest.raises(ContractError):
        solve_tree_fixed(instance, [])
