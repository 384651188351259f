"""
Arbre de Steiner pondéré sur les noeuds.

Approximation de Klein et Ravi par fusion d'araignées : à chaque tour on
choisit un noeud centre et des plus courts chemins (pondérés par les noeuds)
vers r ≥ 2 composantes de la sélection courante, en minimisant le rapport
(poids du centre + poids des chemins) / r. Les noeuds déjà sélectionnés ne
coûtent plus rien.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

import networkx as nx

from cuts import CutQuery, sep, separation
from errors import ContractError, GuardError, InfeasibleError, SolverError
from lp import INFEASIBLE, OPTIMAL, LinearProgram, solve_lp

logger = logging.getLogger(__name__)

_RATIO_TOL = 1e-12


@dataclass(frozen=True)
class SteinerInstance:
    graph: nx.Graph
    terminals: FrozenSet[int]
    weights: Any

    @classmethod
    def make(cls, graph: nx.Graph, terminals: Iterable[int], weights: Any) -> "SteinerInstance":
        inst = cls(graph, frozenset(terminals), weights)
        inst.check()
        return inst

    def check(self) -> None:
        if not self.terminals:
            raise ContractError("Ensemble de terminaux vide")
        for t in self.terminals:
            if t not in self.graph:
                raise ContractError(f"Terminal {t} absent du graphe")
        for v in self.graph.nodes:
            w = self.weights[v]
            if w < 0 or (isinstance(w, float) and not math.isfinite(w)):
                raise ContractError(f"Poids invalide sur le noeud {v} : {w}")

    def weight(self, v: int) -> Any:
        return self.weights[v]


def steiner_cost(inst: SteinerInstance, nodes: Iterable[int]) -> Any:
    """Poids des noeuds ajoutés (hors terminaux)."""
    return sum(inst.weight(v) for v in set(nodes) - inst.terminals)


def _require_connected_terminals(inst: SteinerInstance) -> None:
    first = min(inst.terminals)
    component = nx.node_connected_component(inst.graph, first)
    missing = sorted(inst.terminals - component)
    if missing:
        raise InfeasibleError(f"Terminaux {missing} non connectés au terminal {first}")


def _components(graph: nx.Graph, selected: Set[int]) -> List[FrozenSet[int]]:
    parts = [frozenset(part) for part in nx.connected_components(graph.subgraph(selected))]
    return sorted(parts, key=min)


def _best_spider(inst: SteinerInstance, selected: Set[int], parts: List[FrozenSet[int]]) -> Tuple[float, int, List[List[int]]]:
    """Araignée de rapport minimal : (rapport, centre, chemins vers les composantes retenues)."""
    graph = inst.graph

    def cost(v: int) -> Any:
        return 0 if v in selected else inst.weight(v)

    directed = nx.DiGraph()
    directed.add_nodes_from(sorted(graph.nodes))
    for u, w in sorted(graph.edges):
        directed.add_edge(u, w, weight=cost(w))
        directed.add_edge(w, u, weight=cost(u))
    part_of = {v: index for index, part in enumerate(parts) for v in part}

    best: Optional[Tuple[float, int, List[List[int]]]] = None
    for center in sorted(graph.nodes):
        distances, paths = nx.single_source_dijkstra(directed, center, weight="weight")
        reach: Dict[int, Tuple[Any, int]] = {}
        for node in sorted(distances):
            index = part_of.get(node)
            if index is None:
                continue
            if index not in reach or distances[node] < reach[index][0]:
                reach[index] = (distances[node], node)
        legs = sorted((dist, index, node) for index, (dist, node) in reach.items())
        if len(legs) < 2:
            continue
        total = cost(center)
        chosen_r = 0
        chosen_ratio = math.inf
        for r, (dist, _, _) in enumerate(legs, start=1):
            total += dist
            if r < 2:
                continue
            ratio = float(total) / r
            if ratio <= chosen_ratio + _RATIO_TOL:
                chosen_ratio, chosen_r = min(ratio, chosen_ratio), r
        if best is None or chosen_ratio < best[0] - _RATIO_TOL:
            best = (chosen_ratio, center, [paths[node] for _, _, node in legs[:chosen_r]])
    if best is None:
        raise InfeasibleError("Aucune araignée ne relie deux composantes")
    return best


def node_weighted_steiner(inst: SteinerInstance) -> Set[int]:
    """
    Arbre de Steiner pondéré sur les noeuds (Klein-Ravi).

    Args:
        inst (SteinerInstance): Graphe, terminaux et poids

    Returns:
        Set[int]: Ensemble S ⊇ T induisant un sous-graphe connexe

    Raises:
        InfeasibleError: Si les terminaux ne sont pas dans une même composante
    """
    inst.check()
    _require_connected_terminals(inst)
    selected = set(inst.terminals)
    parts = _components(inst.graph, selected)
    rounds = 0
    while len(parts) > 1:
        ratio, center, legs = _best_spider(inst, selected, parts)
        added = {center}
        for path in legs:
            added.update(path)
        logger.debug(f"Araignée centrée en {center} : {len(legs)} composantes, rapport {ratio:.6g}")
        selected |= added
        parts = _components(inst.graph, selected)
        rounds += 1
    logger.debug(f"Steiner : {len(selected) - len(inst.terminals)} noeuds ajoutés en {rounds} araignées")
    return selected


def steiner_lp_value(inst: SteinerInstance, tol: float = 1e-9) -> float:
    """
    Valeur du LP de Steiner fractionnaire (poids des noeuds non terminaux).

    Les terminaux valent 1 dans le graphe de séparation ; on sépare les paires
    (t0, t) par coupe minimale et on ajoute les coupes violées Σ_{N} s_v ≥ 1.
    """
    inst.check()
    _require_connected_terminals(inst)
    terminals = sorted(inst.terminals)
    free = [v for v in sorted(inst.graph.nodes) if v not in inst.terminals]
    if len(terminals) <= 1 or not free:
        return 0.0

    lp = LinearProgram("steiner")
    for v in free:
        lp.add_variable(f"s_{v}", 0.0, 1.0)
    lp.set_objective({f"s_{v}": float(inst.weight(v)) for v in free})
    seen: Set[FrozenSet[int]] = set()
    while True:
        solution = solve_lp(lp)
        if solution.status == INFEASIBLE:
            raise InfeasibleError("LP de Steiner infaisable")
        if solution.status != OPTIMAL:
            raise SolverError(f"LP de Steiner : statut {solution.status}")
        weights: Dict[int, float] = {t: 1.0 for t in terminals}
        weights.update({v: max(0.0, solution.values[f"s_{v}"]) for v in free})
        fresh = 0
        stale = 0
        for t in terminals[1:]:
            if separation(inst.graph, weights, {terminals[0]}, {t}) >= 1 - tol:
                continue
            cut_nodes = sep(CutQuery.make(inst.graph, weights, {terminals[0]}, {t})).cut_nodes
            if cut_nodes in seen:
                stale += 1
                continue
            seen.add(cut_nodes)
            lp.add_constraint({f"s_{v}": 1.0 for v in cut_nodes}, ">=", 1.0)
            fresh += 1
        if fresh == 0 and stale:
            raise SolverError(f"LP de Steiner : {stale} coupes déjà ajoutées restent violées")
        if fresh == 0:
            assert solution.objective_value is not None
            return float(solution.objective_value)


def brute_force_steiner(inst: SteinerInstance, max_nodes: int = 12) -> Tuple[Any, Set[int]]:
    """Optimum exact par énumération des sous-ensembles de non-terminaux (oracle de test)."""
    inst.check()
    _require_connected_terminals(inst)
    free = [v for v in sorted(inst.graph.nodes) if v not in inst.terminals]
    if len(free) > max_nodes:
        raise GuardError(f"Énumération de Steiner limitée à {max_nodes} non-terminaux")
    best: Optional[Tuple[Any, Set[int]]] = None
    for size in range(len(free) + 1):
        for extra in itertools.combinations(free, size):
            nodes = set(inst.terminals) | set(extra)
            if not nx.is_connected(inst.graph.subgraph(nodes)):
                continue
            value = sum(inst.weight(v) for v in extra)
            if best is None or value < best[0]:
                best = (value, nodes)
    assert best is not None
    return best
