"""
Coupes minimales pondérées sur les noeuds.

Chaque noeud v est dédoublé en v_in -> v_out de capacité w(v) ; les arêtes du
graphe deviennent des arcs de capacité « infinie » (Σw + 1) dans les deux
sens. Une super-source alimente v_in pour v dans S et les v_out des cibles
se déversent dans un super-puits, de sorte que {t} reste une coupe valide
même quand S et T se touchent. Le flot maximal est calculé par Edmonds-Karp
(networkx).
"""

import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, FrozenSet, Hashable, Iterable, List, Optional, Set, Tuple

import networkx as nx
import numpy as np
from networkx.algorithms.flow import edmonds_karp

from errors import ContractError, GuardError, InvariantViolation

logger = logging.getLogger(__name__)

SOURCE = "__source__"
SINK = "__sink__"


@dataclass(frozen=True)
class CutQuery:
    """Requête de séparation : graphe, poids par noeud, ensembles S et T."""

    graph: nx.Graph
    weights: Any
    sources: FrozenSet[int]
    targets: FrozenSet[int]

    @classmethod
    def make(cls, graph: nx.Graph, weights: Any, sources: Iterable[int], targets: Iterable[int]) -> "CutQuery":
        return cls(graph, weights, frozenset(sources), frozenset(targets))


@dataclass(frozen=True)
class CutResult:
    value: Any
    cut_nodes: FrozenSet[int]
    interior: FrozenSet[int]
    hull: FrozenSet[int]


def _weight_map(graph: nx.Graph, weights: Any) -> Dict[int, Any]:
    values = {}
    for v in graph.nodes:
        w = weights[v]
        if w < 0:
            raise ContractError(f"Poids négatif sur le noeud {v} : {w}")
        values[v] = w
    return values


def build_split_graph(graph: nx.Graph, weights: Any) -> Tuple[nx.DiGraph, Any]:
    """
    Construit le graphe dédoublé sans source ni puits.

    Args:
        graph (nx.Graph): Graphe de connexité
        weights: Poids indexables par noeud

    Returns:
        Tuple[nx.DiGraph, Any]: Le graphe orienté et la capacité « infinie »
    """
    values = _weight_map(graph, weights)
    infinite = sum(values.values()) + 1
    split = nx.DiGraph()
    split.add_node(SOURCE)
    split.add_node(SINK)
    for v, w in values.items():
        split.add_edge(("in", v), ("out", v), capacity=w)
    for u, v in graph.edges:
        split.add_edge(("out", u), ("in", v), capacity=infinite)
        split.add_edge(("out", v), ("in", u), capacity=infinite)
    split.graph["infinite"] = infinite
    return split, infinite


def _attach(split: nx.DiGraph, sources: Iterable[int], targets: Iterable[int]) -> List[Tuple[Hashable, Hashable]]:
    infinite = split.graph["infinite"]
    added = []
    for s in sources:
        if not split.has_edge(SOURCE, ("in", s)):
            split.add_edge(SOURCE, ("in", s), capacity=infinite)
            added.append((SOURCE, ("in", s)))
    for t in targets:
        if not split.has_edge(("out", t), SINK):
            split.add_edge(("out", t), SINK, capacity=infinite)
            added.append((("out", t), SINK))
    return added


def _flow(split: nx.DiGraph, sources: Iterable[int], targets: Iterable[int]) -> nx.DiGraph:
    added = _attach(split, sources, targets)
    try:
        return edmonds_karp(split, SOURCE, SINK, capacity="capacity")
    finally:
        split.remove_edges_from(added)


def _check_query(query: CutQuery) -> None:
    if not query.sources:
        raise ContractError("Ensemble source vide")
    if not query.targets:
        raise ContractError("Ensemble cible vide")
    for v in query.sources | query.targets:
        if v not in query.graph:
            raise ContractError(f"Noeud {v} absent du graphe")


def interior(graph: nx.Graph, cut_nodes: Iterable[int], targets: Iterable[int]) -> FrozenSet[int]:
    """Noeuds hors de N qui n'atteignent plus T une fois N retiré."""
    removed = set(cut_nodes)
    remaining = graph.subgraph(v for v in graph.nodes if v not in removed)
    reached: Set[int] = set()
    for t in targets:
        if t in remaining and t not in reached:
            reached |= nx.node_connected_component(remaining, t)
    return frozenset(v for v in remaining.nodes if v not in reached)


def hull(graph: nx.Graph, cut_nodes: Iterable[int], targets: Iterable[int]) -> FrozenSet[int]:
    nodes = frozenset(cut_nodes)
    return nodes | interior(graph, nodes, targets)


def _constrained_value(
    split: nx.DiGraph, values: Dict[int, Any], query: CutQuery, forced: Iterable[int], excluded: Iterable[int]
) -> Any:
    """Coupe minimale contenant `forced` et évitant `excluded` (capacités 0 et « infinie »)."""
    infinite = split.graph["infinite"]
    saved: Dict[int, Any] = {}
    forced_weight: Any = 0
    for v in forced:
        saved[v] = split[("in", v)][("out", v)]["capacity"]
        split[("in", v)][("out", v)]["capacity"] = 0
        forced_weight += values[v]
    for v in excluded:
        saved[v] = split[("in", v)][("out", v)]["capacity"]
        split[("in", v)][("out", v)]["capacity"] = infinite
    try:
        return _flow(split, query.sources, query.targets).graph["flow_value"] + forced_weight
    finally:
        for v, capacity in saved.items():
            split[("in", v)][("out", v)]["capacity"] = capacity


def _lexicographic_cut(split: nx.DiGraph, values: Dict[int, Any], query: CutQuery, value: Any) -> FrozenSet[int]:
    """
    Plus petite coupe optimale au sens lexicographique (tuples triés).

    Chaque noeud choisi est le plus petit qui laisse une coupe de valeur
    `value` en excluant tous les candidats plus petits non retenus ; on
    s'arrête dès que les noeuds choisis forment eux-mêmes une coupe.
    """
    exact = isinstance(value, Fraction)
    slack = 0 if exact else 1e-9 * max(1.0, float(value))
    candidates = sorted(v for v, w in values.items() if w <= value + slack)
    chosen: List[int] = []
    excluded: Set[int] = set()
    while not is_cut(query.graph, chosen, query.sources, query.targets):
        last = chosen[-1] if chosen else None
        skipped: List[int] = []
        for v in candidates:
            if last is not None and v <= last:
                continue
            if _constrained_value(split, values, query, chosen + [v], excluded | set(skipped)) <= value + slack:
                chosen.append(v)
                break
            skipped.append(v)
        else:
            raise InvariantViolation(f"Aucune coupe de valeur {value} ne prolonge {chosen}")
        excluded |= set(skipped)
    return frozenset(chosen)


def sep(query: CutQuery) -> CutResult:
    """
    Coupe minimale pondérée entre S et T.

    La valeur vient du flot maximal ; parmi les coupes optimales on retient
    l'ensemble de noeuds le plus petit au sens lexicographique, comme
    `brute_force_sep`.

    Args:
        query (CutQuery): Requête de séparation

    Returns:
        CutResult: Valeur, noeuds de coupe, intérieur et enveloppe

    Raises:
        ContractError: Si S ou T est vide, ou si un poids est négatif
    """
    _check_query(query)
    values = _weight_map(query.graph, query.weights)
    split, _ = build_split_graph(query.graph, query.weights)
    value = _flow(split, query.sources, query.targets).graph["flow_value"]
    cut_nodes = _lexicographic_cut(split, values, query, value)
    value = sum((values[v] for v in sorted(cut_nodes)), 0 * value)
    inner = interior(query.graph, cut_nodes, query.targets)
    logger.debug(f"sep({sorted(query.sources)}, {sorted(query.targets)}) = {value} via {sorted(cut_nodes)}")
    return CutResult(value=value, cut_nodes=cut_nodes, interior=inner, hull=cut_nodes | inner)


def separation(graph: nx.Graph, weights: Any, sources: Iterable[int], targets: Iterable[int]) -> Any:
    """Valeur seule de sep^w(S,T), par le flot maximal."""
    query = CutQuery.make(graph, weights, sources, targets)
    _check_query(query)
    split, _ = build_split_graph(graph, weights)
    return _flow(split, query.sources, query.targets).graph["flow_value"]


def _clamp(value: Any) -> Any:
    if isinstance(value, Fraction):
        return value
    return value if value > 0 else 0.0


def delta(query: CutQuery, v: int) -> Any:
    """
    Accroissement de sep quand v rejoint S ; sep(∅, T) vaut 0 par convention.

    Args:
        query (CutQuery): Requête de base (S peut être vide)
        v (int): Noeud ajouté

    Returns:
        Any: sep(S ∪ {v}, T) - sep(S, T), jamais négatif
    """
    if not query.targets:
        raise ContractError("Ensemble cible vide")
    if v in query.sources:
        return 0
    split, _ = build_split_graph(query.graph, query.weights)
    base = _flow(split, query.sources, query.targets).graph["flow_value"] if query.sources else 0
    extended = _flow(split, query.sources | {v}, query.targets).graph["flow_value"]
    return _clamp(extended - base)


def marginals(graph: nx.Graph, weights: Any, base: Iterable[int], targets: Iterable[int]) -> np.ndarray:
    """
    Δ^w(base, v, T) pour tous les noeuds v en un seul appel.

    Le graphe dédoublé est construit une fois ; seule l'arête de source de v
    est ajoutée puis retirée à chaque calcul.
    """
    base_set = frozenset(base)
    target_set = frozenset(targets)
    if not target_set:
        raise ContractError("Ensemble cible vide")
    split, _ = build_split_graph(graph, weights)
    reference = _flow(split, base_set, target_set).graph["flow_value"] if base_set else 0
    nodes = sorted(graph.nodes)
    result = np.zeros(max(nodes) + 1 if nodes else 0, dtype=object if isinstance(reference, Fraction) else float)
    for v in nodes:
        if v in base_set:
            continue
        value = _flow(split, base_set | {v}, target_set).graph["flow_value"]
        result[v] = _clamp(value - reference)
    return result


def max_flow_value(graph: nx.Graph, node_capacities: Any, s: int, t: int) -> Any:
    """Flot maximal entre s et t avec capacités sur les noeuds (égal à sep({s},{t}))."""
    if s == t:
        raise ContractError(f"Source et puits identiques : {s}")
    return separation(graph, node_capacities, {s}, {t})


def is_cut(graph: nx.Graph, cut_nodes: Iterable[int], sources: Iterable[int], targets: Iterable[int]) -> bool:
    """N coupe S de T ssi S est inclus dans l'enveloppe H_T(N)."""
    return frozenset(sources) <= hull(graph, cut_nodes, targets)


def brute_force_sep(
    graph: nx.Graph, weights: Any, sources: Iterable[int], targets: Iterable[int], max_nodes: int = 12
) -> Tuple[Any, FrozenSet[int]]:
    """
    Coupe minimale par énumération de tous les sous-ensembles (oracle de test).

    Returns:
        Tuple: (valeur, ensemble de coupe le plus petit lexicographiquement parmi les optimaux)
    """
    nodes = sorted(graph.nodes)
    if len(nodes) > max_nodes:
        raise GuardError(f"Énumération des coupes limitée à {max_nodes} noeuds")
    source_set, target_set = frozenset(sources), frozenset(targets)
    best: Optional[Tuple[Any, Tuple[int, ...]]] = None
    for size in range(len(nodes) + 1):
        for subset in itertools.combinations(nodes, size):
            if not is_cut(graph, subset, source_set, target_set):
                continue
            value = sum((weights[v] for v in subset), 0)
            if best is None or value < best[0] or (value == best[0] and subset < best[1]):
                best = (value, subset)
    assert best is not None
    return best[0], frozenset(best[1])
