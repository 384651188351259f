import itertools
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest

from core import Instance, evaluate_cost, validate
from errors import ContractError, GuardError, InfeasibleError
from generators import CnfFormula, gen_from_3sat, gen_from_dominating_set
from oracle import (
    brute_force_disjoint,
    brute_force_dominating_set,
    brute_force_non_disjoint,
    brute_force_satisfiable,
    connected_masks,
)
from tests.conftest import random_instance


def _unit_instance(graph, k):
    n = graph.number_of_nodes()
    dist = [[0 if i == j else 1 for j in range(n)] for i in range(n)]
    return Instance(dist, graph.edges, k)


@pytest.fixture
def unsat_formula():
    """Les quatre clauses sur deux variables : formule insatisfiable, instance à 18 noeuds."""
    return CnfFormula.make(2, [[1, 2], [1, -2], [-1, 2], [-1, -2]])


def test_connected_masks():
    """Test la table de connexité des masques sur le chemin 0 - 1 - 2."""
    adjacency = [0b010, 0b101, 0b010]
    conn = connected_masks(3, adjacency)
    assert not conn[0]
    assert conn[0b001] and conn[0b011] and conn[0b111]
    assert not conn[0b101]


@pytest.mark.parametrize("graph, k, expected", [
    (nx.complete_graph(4), 3, 1),
    (nx.cycle_graph(4), 2, 2),
    (nx.star_graph(3), 1, 3),
    (nx.path_graph(5), 2, 3),
])
def test_brute_force_disjoint_petits_graphes(graph, k, expected):
    """Test l'oracle disjoint sur des graphes à distances unitaires."""
    instance = _unit_instance(graph, k)
    cost, clustering = brute_force_disjoint(instance)
    assert cost == expected
    assert evaluate_cost(instance, clustering) == cost
    assert validate(instance, clustering, "disjoint").feasible


def test_brute_force_disjoint_k_grand(path_instance):
    """Test que k ≥ n donne des singletons de coût nul."""
    cost, clustering = brute_force_disjoint(path_instance, k=3)
    assert cost == 0
    assert len(clustering) == 3


def test_brute_force_disjoint_infaisable():
    """Test qu'un graphe à trois composantes n'admet pas deux clusters connexes."""
    instance = Instance([[0, 1, 1], [1, 0, 1], [1, 1, 0]], [], 2)
    with pytest.raises(InfeasibleError):
        brute_force_disjoint(instance)


def test_brute_force_rationnel():
    """Test l'oracle en mode rationnel exact."""
    dist = [[0, "1/3", "2/3"], ["1/3", 0, "1/3"], ["2/3", "1/3", 0]]
    instance = Instance(dist, [(0, 1), (1, 2)], 1, rational=True)
    cost, _ = brute_force_disjoint(instance)
    assert cost == Fraction(2, 3)
    cost, _ = brute_force_non_disjoint(instance)
    assert cost == Fraction(2, 3)


@pytest.mark.parametrize("seed", range(4))
def test_non_disjoint_minore_disjoint(seed):
    """Test que le recouvrement ne coûte jamais plus que la partition."""
    instance = random_instance(7, 3, seed)
    disjoint, _ = brute_force_disjoint(instance)
    cover, clustering = brute_force_non_disjoint(instance)
    assert cover <= disjoint
    assert evaluate_cost(instance, clustering) == cover
    assert validate(instance, clustering, "non-disjoint").feasible
    fixed, fixed_clustering = brute_force_non_disjoint(instance, centers=[0, 1])
    assert fixed >= brute_force_non_disjoint(instance, k=2)[0]
    assert sorted(fixed_clustering.centers) == [0, 1]


def test_non_disjoint_centres_fixes(path_instance):
    """Test la version à centres fixés sur un chemin non métrique."""
    instance = Instance([[0, 1, 5], [1, 0, 1], [5, 1, 0]], [(0, 1), (1, 2)], 2)
    cost, clustering = brute_force_non_disjoint(instance, centers=[0, 2])
    assert cost == 1
    assert sorted(clustering.centers) == [0, 2]
    with pytest.raises(ContractError):
        brute_force_non_disjoint(path_instance, centers=[])


def test_gardes():
    """Test les limites de taille des oracles."""
    instance = Instance([[0] * 21 for _ in range(21)], [], 2)
    with pytest.raises(GuardError):
        brute_force_disjoint(instance)
    with pytest.raises(GuardError):
        brute_force_non_disjoint(instance)


def test_reduction_3sat_satisfiable():
    """Test que la réduction d'une formule satisfiable coûte exactement 2a."""
    formula = CnfFormula.make(2, [[-1, 2], [1, 2]])
    assert brute_force_satisfiable(formula)
    cost, clustering = brute_force_disjoint(gen_from_3sat(formula, 2))
    assert cost == 2 * formula.num_variables
    assert len(clustering) == 2


def test_reduction_3sat_insatisfiable(unsat_formula):
    """Test que la réduction d'une formule insatisfiable coûte plus de 2a."""
    instance = gen_from_3sat(unsat_formula, 2)
    assert instance.n == 18
    assert not brute_force_satisfiable(unsat_formula)
    cost, _ = brute_force_disjoint(instance)
    assert cost > 2 * unsat_formula.num_variables


_TWO_VARIABLE_CLAUSES = [[1], [-1], [2], [-2], [1, 2], [1, -2], [-1, 2], [-1, -2]]


@pytest.mark.parametrize("clauses", [list(pair) for pair in itertools.combinations(_TWO_VARIABLE_CLAUSES, 2)])
def test_reduction_3sat_enumeration(clauses):
    """Test la dichotomie des coûts sur toutes les formules à deux variables et deux clauses."""
    formula = CnfFormula.make(2, clauses)
    instance = gen_from_3sat(formula, 2)
    assert instance.n == 14
    cost, clustering = brute_force_disjoint(instance)
    assert validate(instance, clustering, "disjoint").feasible
    if brute_force_satisfiable(formula):
        assert cost == 2 * formula.num_variables
    else:
        assert cost > 2 * formula.num_variables


@pytest.mark.parametrize("graph, size", [
    (nx.path_graph(4), 2),
    (nx.star_graph(3), 1),
    (nx.cycle_graph(5), 2),
    (nx.complete_graph(3), 1),
])
def test_reduction_ensemble_dominant(graph, size):
    """Test l'égalité entre le coût non disjoint et la domination."""
    assert brute_force_dominating_set(graph) == size
    instance = gen_from_dominating_set(graph)
    cost, _ = brute_force_non_disjoint(instance)
    assert cost == size
    fixed, _ = brute_force_non_disjoint(instance, centers=instance.fixed_centers)
    assert fixed == size


def _small_graphs():
    return [graph for graph in nx.graph_atlas_g() if 1 <= graph.number_of_nodes() <= 5]


def _domination_number(graph):
    for size in range(graph.number_of_nodes() + 1):
        if any(nx.is_dominating_set(graph, chosen) for chosen in itertools.combinations(graph.nodes, size)):
            return size
    return graph.number_of_nodes()


def test_reduction_ensemble_dominant_tous_les_petits_graphes():
    """Test la réduction sur tous les graphes d'au plus cinq noeuds."""
    graphs = _small_graphs()
    assert len(graphs) == 52
    for graph in graphs:
        size = _domination_number(graph)
        assert brute_force_dominating_set(graph) == size
        instance = gen_from_dominating_set(graph)
        cost, clustering = brute_force_non_disjoint(instance)
        assert cost == size
        assert validate(instance, clustering, "non-disjoint").feasible
        fixed, _ = brute_force_non_disjoint(instance, centers=instance.fixed_centers)
        assert fixed == size


def _relabel(instance, order):
    """Renumérote les noeuds : le noeud v devient order[v]."""
    n = instance.n
    inverse = [0] * n
    for v, image in enumerate(order):
        inverse[image] = v
    dist = [[instance.dist[inverse[i]][inverse[j]] for j in range(n)] for i in range(n)]
    edges = [(order[u], order[v]) for u, v in instance.edges]
    return Instance(dist, edges, instance.k)


@pytest.mark.parametrize("seed", range(10))
def test_optimum_invariant_par_renumerotation(seed):
    """Test que les optima exacts ne dépendent pas de la numérotation des noeuds."""
    instance = random_instance(6, 2, seed)
    order = [int(v) for v in np.random.default_rng(seed).permutation(instance.n)]
    relabeled = _relabel(instance, order)
    disjoint, _ = brute_force_disjoint(instance)
    cost, clustering = brute_force_disjoint(relabeled)
    assert cost == disjoint
    assert validate(relabeled, clustering, "disjoint").feasible
    cover, _ = brute_force_non_disjoint(instance)
    assert brute_force_non_disjoint(relabeled)[0] == cover
    fixed, _ = brute_force_non_disjoint(instance, centers=[0, 1])
    assert brute_force_non_disjoint(relabeled, centers=[order[0], order[1]])[0] == fixed
