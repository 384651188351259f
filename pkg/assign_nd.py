"""
Affectation non disjointe à centres fixés, approximation O(k log n).

Le LP relâché est résolu, multiplié par le nombre de centres, puis chaque
centre c reçoit ses terminaux T_c = {c} ∪ {v : k·x_v^c ≥ 1} ; un arbre de
Steiner pondéré par d(·, c) relie ces terminaux et devient le cluster de c.
Les distances n'ont pas besoin d'être métriques.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

import networkx as nx
import numpy as np

from config_manager import config
from core import Clustering, Instance, Number, evaluate_cost, is_connected_subset, number_to_json
from cuts import separation
from errors import ContractError, InfeasibleError, InvariantViolation
from lp import solve_flow_lp
from steiner import SteinerInstance, node_weighted_steiner

logger = logging.getLogger(__name__)


@dataclass
class AssignmentResult:
    clustering: Clustering
    lp_value: float
    terminal_sets: Dict[int, FrozenSet[int]]
    cost: Number
    stats: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        data = self.clustering.to_dict()
        data.update({
            "cost": number_to_json(self.cost),
            "lp_value": self.lp_value,
            "terminal_sets": {str(c): sorted(nodes) for c, nodes in sorted(self.terminal_sets.items())},
            "stats": self.stats,
        })
        return data


def check_reachability(instance: Instance, centers: Iterable[int]) -> None:
    """Chaque composante du graphe doit contenir au moins un centre."""
    center_set = set(centers)
    for component in nx.connected_components(instance.graph):
        if not component & center_set:
            raise InfeasibleError(f"Noeuds {sorted(component)} inaccessibles depuis les centres")


def build_terminal_sets(scaled: np.ndarray, centers: Iterable[int], threshold: Optional[float] = None) -> Dict[int, FrozenSet[int]]:
    """T_c = {c} ∪ {v : scaled[v][c] ≥ 1 - seuil}."""
    margin = config.get_setting("assignment.terminal_threshold", 1e-7) if threshold is None else threshold
    sets = {}
    for c in centers:
        members = set(np.flatnonzero(scaled[:, c] >= 1 - margin).tolist())
        members.add(c)
        sets[c] = frozenset(int(v) for v in members)
    return sets


def check_split_feasibility(
    instance: Instance, scaled: np.ndarray, terminal_sets: Dict[int, FrozenSet[int]], tol: float = 1e-6
) -> List[Tuple[int, int, float]]:
    """
    Vérifie que la colonne c mise à l'échelle est réalisable pour le LP de Steiner sur T_c.

    Returns:
        List: Triplets (c, t, sep) dont la coupe entre c et t est inférieure à 1
    """
    violations = []
    for c, terminals in sorted(terminal_sets.items()):
        weights = np.clip(scaled[:, c], 0.0, None).copy()
        weights[list(terminals)] = np.maximum(weights[list(terminals)], 1.0)
        for t in sorted(terminals - {c}):
            value = separation(instance.graph, weights, {c}, {t})
            if value < 1 - tol:
                violations.append((c, t, float(value)))
    return violations


def _steiner_for_center(instance: Instance, center: int, terminals: FrozenSet[int]) -> Set[int]:
    component = nx.node_connected_component(instance.graph, center)
    stray = sorted(terminals - component)
    if stray:
        raise InvariantViolation(f"Terminaux {stray} hors de la composante du centre {center}")
    inst = SteinerInstance.make(instance.graph.subgraph(component), terminals, instance.dist[center])
    return node_weighted_steiner(inst)


def integralize(
    instance: Instance, scaled: np.ndarray, centers: Iterable[int], threshold: Optional[float] = None
) -> Tuple[Dict[int, Set[int]], Dict[int, FrozenSet[int]]]:
    """
    Transforme une affectation 1-connexe mise à l'échelle en clusters connexes.

    Returns:
        Tuple: (clusters par centre, terminaux par centre)

    Raises:
        InvariantViolation: Si l'union des T_c ne couvre pas tous les noeuds
    """
    order = sorted(set(centers))
    terminal_sets = build_terminal_sets(scaled, order, threshold)
    covered = set().union(*terminal_sets.values()) if terminal_sets else set()
    missing = sorted(set(range(instance.n)) - covered)
    if missing:
        raise InvariantViolation(f"Noeuds {missing} dans aucun ensemble de terminaux")

    workers = max(1, int(config.get_setting("assignment.max_workers", 1)))
    clusters: Dict[int, Set[int]] = {}
    if workers > 1 and len(order) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(_steiner_for_center, instance, c, terminal_sets[c]) for c in order]
            for c, future in zip(order, futures):
                clusters[c] = future.result()
    else:
        for c in order:
            clusters[c] = _steiner_for_center(instance, c, terminal_sets[c])
    return clusters, terminal_sets


def trim_clusters(instance: Instance, clusters: Dict[int, Set[int]]) -> Dict[int, Set[int]]:
    """
    Retire un noeud des clusters autres que le moins cher quand la connexité le permet.

    Un centre n'est jamais retiré de son propre cluster.
    """
    trimmed = {c: set(members) for c, members in clusters.items()}
    removed = 0
    for v in range(instance.n):
        owners = sorted(c for c, members in trimmed.items() if v in members)
        if len(owners) < 2:
            continue
        keep = min(owners, key=lambda c: (instance.dist[v][c], c))
        for c in owners:
            if c == keep or c == v:
                continue
            rest = trimmed[c] - {v}
            if is_connected_subset(instance.graph, rest):
                trimmed[c] = rest
                removed += 1
    logger.info(f"Élagage : {removed} appartenances retirées")
    return trimmed


def assign_non_disjoint(
    instance: Instance, centers: Optional[Iterable[int]] = None, trim: Optional[bool] = None
) -> AssignmentResult:
    """
    Clustering non disjoint à centres fixés (approximation O(k log n)).

    Args:
        instance (Instance): Instance du problème (distances quelconques)
        centers (optional): Centres imposés, instance.fixed_centers par défaut
        trim (bool, optional): Passe d'élagage, config assignment.trim par défaut

    Returns:
        AssignmentResult: Clustering, valeur du LP, terminaux et coût

    Raises:
        ContractError: Aucun centre fourni
        InfeasibleError: Un noeud n'atteint aucun centre
    """
    chosen = sorted(set(centers if centers is not None else (instance.fixed_centers or ())))
    if not chosen:
        raise ContractError("Aucun centre fourni pour la version à centres fixés")
    for c in chosen:
        if not 0 <= c < instance.n:
            raise ContractError(f"Centre {c} hors de l'instance")
    check_reachability(instance, chosen)

    x, lp_value = solve_flow_lp(instance, centers=chosen)
    scaled = x.x * len(chosen)
    clusters, terminal_sets = integralize(instance, scaled, chosen)
    if trim if trim is not None else config.get_setting("assignment.trim", False):
        clusters = trim_clusters(instance, clusters)

    clustering = Clustering.from_pairs(sorted(clusters.items()))
    cost = evaluate_cost(instance, clustering)
    stats = {
        "centers": len(chosen),
        "terminals": sum(len(nodes) for nodes in terminal_sets.values()),
        "steiner_added": sum(len(clusters[c] - terminal_sets[c]) for c in chosen),
        "memberships": sum(len(members) for members in clusters.values()),
    }
    logger.info(f"Affectation non disjointe : coût {cost}, LP {lp_value:.6g}")
    return AssignmentResult(clustering, lp_value, terminal_sets, cost, stats)
