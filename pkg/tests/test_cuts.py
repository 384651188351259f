import itertools
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest

from cuts import (
    CutQuery,
    brute_force_sep,
    delta,
    hull,
    interior,
    is_cut,
    marginals,
    max_flow_value,
    sep,
    separation,
)
from errors import ContractError
from tests.conftest import connected_graph


@pytest.fixture
def path_graph():
    return nx.path_graph(3)


def _weights(n, seed):
    rng = np.random.default_rng(seed)
    return rng.integers(0, 5, size=n).astype(float)


def test_sep_sur_un_chemin(path_graph):
    """Test la fonction sep sur le chemin 0 - 1 - 2."""
    result = sep(CutQuery.make(path_graph, [1.0, 0.5, 1.0], {0}, {2}))
    assert result.value == pytest.approx(0.5)
    assert result.cut_nodes == frozenset({1})
    assert result.interior == frozenset({0})
    assert result.hull == frozenset({0, 1})


def test_sep_ensembles_qui_se_touchent(path_graph):
    """Test que S ∩ T non vide force un noeud commun dans la coupe."""
    weights = [2.0, 1.0, 3.0]
    assert separation(path_graph, weights, {0}, {0}) == pytest.approx(2.0)
    assert separation(path_graph, weights, {0, 1}, {1, 2}) == pytest.approx(1.0)


def test_sep_graphe_deconnecte():
    """Test qu'aucune coupe n'est nécessaire entre deux composantes."""
    graph = nx.Graph()
    graph.add_nodes_from(range(4))
    graph.add_edges_from([(0, 1), (2, 3)])
    assert separation(graph, [1.0] * 4, {0}, {3}) == 0


def test_sep_requete_invalide(path_graph):
    """Test les erreurs de contrat de sep."""
    with pytest.raises(ContractError):
        sep(CutQuery.make(path_graph, [1.0] * 3, set(), {2}))
    with pytest.raises(ContractError):
        sep(CutQuery.make(path_graph, [1.0] * 3, {0}, set()))
    with pytest.raises(ContractError):
        sep(CutQuery.make(path_graph, [1.0, -1.0, 1.0], {0}, {2}))
    with pytest.raises(ContractError):
        max_flow_value(path_graph, [1.0] * 3, 1, 1)


@pytest.mark.parametrize("seed", range(8))
def test_sep_egale_enumeration(seed):
    """Test sep contre l'énumération de toutes les coupes."""
    graph = connected_graph(6, seed)
    weights = _weights(6, seed)
    sources, targets = {0, seed % 3}, {5}
    result = sep(CutQuery.make(graph, weights, sources, targets))
    value, cut = brute_force_sep(graph, weights, sources, targets)
    assert result.value == pytest.approx(value)
    assert result.cut_nodes == cut
    assert is_cut(graph, result.cut_nodes, sources, targets)


def _random_case(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 7))
    return rng, n, connected_graph(n, seed), rng.integers(0, 5, size=n).astype(float)


def _subset(rng, nodes, p=0.4):
    return {v for v in nodes if rng.random() < p}


def _sep_oracle(graph, weights, sources, target):
    if not sources:
        return 0.0
    value, _ = brute_force_sep(graph, weights, sources, {target})
    return value


def test_sep_symetrique():
    """Test la symétrie sep(S, T) = sep(T, S) sur 200 graphes contre l'énumération."""
    for seed in range(200):
        rng, n, graph, weights = _random_case(seed)
        sources = _subset(rng, range(n)) or {0}
        targets = _subset(rng, range(n)) or {n - 1}
        expected, _ = brute_force_sep(graph, weights, targets, sources)
        assert separation(graph, weights, sources, targets) == pytest.approx(expected)


def test_delta_sous_modulaire():
    """Test la sous-modularité Δ(S', v, t) ≤ Δ(S, v, t) pour S ⊆ S' sur 200 graphes, tous les v."""
    for seed in range(200):
        rng, n, graph, weights = _random_case(seed)
        t = int(rng.integers(0, n))
        others = [v for v in range(n) if v != t]
        small = _subset(rng, others)
        large = small | _subset(rng, others)
        base_small = _sep_oracle(graph, weights, small, t)
        base_large = _sep_oracle(graph, weights, large, t)
        for v in range(n):
            gain_small = _sep_oracle(graph, weights, small | {v}, t) - base_small
            gain_large = _sep_oracle(graph, weights, large | {v}, t) - base_large
            assert gain_large <= gain_small + 1e-9
            assert delta(CutQuery.make(graph, weights, large, {t}), v) == pytest.approx(gain_large)


def test_coupe_d_une_coupe():
    """Test sep(N ∪ S', t) ≥ sep(S ∪ S', t) pour toute coupe N entre S et t."""
    for seed in range(200):
        rng, n, graph, weights = _random_case(seed)
        t = int(rng.integers(0, n))
        others = [v for v in range(n) if v != t]
        sources = _subset(rng, others) or {others[0]}
        extra = _subset(rng, others)
        reference = _sep_oracle(graph, weights, sources | extra, t)
        for size in range(1, n + 1):
            for cut in itertools.combinations(range(n), size):
                if is_cut(graph, cut, sources, {t}):
                    assert separation(graph, weights, set(cut) | extra, {t}) >= reference - 1e-9


def test_sep_departage_lexicographique(path_graph):
    """Test qu'entre plusieurs coupes de même valeur sep retient le plus petit ensemble."""
    result = sep(CutQuery.make(path_graph, [1, 1, 1], {2}, {0}))
    assert result.value == 1
    assert result.cut_nodes == frozenset({0})
    result = sep(CutQuery.make(path_graph, [2, 1, 1], {2}, {0}))
    assert result.cut_nodes == frozenset({1})


def test_delta_base_vide(path_graph):
    """Test Δ avec S vide, qui vaut sep({v}, T)."""
    weights = [1.0, 0.5, 1.0]
    query = CutQuery.make(path_graph, weights, set(), {2})
    assert delta(query, 0) == pytest.approx(0.5)
    assert delta(CutQuery.make(path_graph, weights, {0}, {2}), 0) == 0


def test_marginals_egale_delta():
    """Test que marginals calcule Δ pour tous les noeuds."""
    graph = connected_graph(6, 3)
    weights = _weights(6, 3)
    base, targets = {0}, {5}
    values = marginals(graph, weights, base, targets)
    query = CutQuery.make(graph, weights, base, targets)
    for v in range(6):
        assert values[v] == pytest.approx(delta(query, v))


def test_sep_rationnel(path_graph):
    """Test sep avec des poids exacts."""
    result = sep(CutQuery.make(path_graph, [Fraction(1), Fraction(1, 3), Fraction(1)], {0}, {2}))
    assert result.value == Fraction(1, 3)


def test_enveloppe(path_graph):
    """Test interior et hull."""
    assert interior(path_graph, {1}, {2}) == frozenset({0})
    assert hull(path_graph, {1}, {2}) == frozenset({0, 1})
    assert is_cut(path_graph, {2}, {0}, {2})
    assert not is_cut(path_graph, set(), {0}, {2})
