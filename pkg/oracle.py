"""
Solveurs exacts exponentiels servant de vérité terrain sur les petites instances.

Les sous-ensembles de noeuds sont codés en masques de bits. La connexité de
tous les masques est calculée une fois par couches de cardinal : M est
connexe s'il existe v ∈ M tel que M \\ {v} est connexe et touche v.
Les égalités sont départagées par le plus petit codage.
"""

import itertools
import logging
import math
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from config_manager import config
from core import Clustering, Instance, Number
from errors import ContractError, GuardError, InfeasibleError

logger = logging.getLogger(__name__)

INF = math.inf


def _guard(size: int, key: str, label: str) -> None:
    limit = int(config.get_setting(f"oracle.{key}", 16))
    if size > limit:
        raise GuardError(f"{label} : taille {size} au-delà de la limite {limit} (oracle.{key})")


def _masks(n: int) -> np.ndarray:
    return np.arange(1 << n, dtype=np.int64)


def _popcount(masks: np.ndarray, n: int) -> np.ndarray:
    counts = np.zeros(len(masks), dtype=np.int64)
    for v in range(n):
        counts += (masks >> v) & 1
    return counts


def _adjacency(graph: nx.Graph, n: int) -> List[int]:
    adjacency = [0] * n
    for u, w in graph.edges:
        adjacency[u] |= 1 << w
        adjacency[w] |= 1 << u
    return adjacency


def _decode(mask: int) -> List[int]:
    return [v for v in range(mask.bit_length()) if mask >> v & 1]


def _argmin(values: np.ndarray) -> int:
    """Premier indice minimal, y compris pour les tableaux d'objets (Fraction)."""
    if values.dtype == object:
        return min(range(len(values)), key=lambda i: values[i])
    return int(np.argmin(values))


def connected_masks(n: int, adjacency: Sequence[int]) -> np.ndarray:
    """
    Table conn[M] : vrai si le masque M induit un sous-graphe connexe (M non vide).

    Args:
        n (int): Nombre de noeuds
        adjacency: Masque des voisins de chaque noeud

    Returns:
        np.ndarray: Tableau booléen de taille 2^n
    """
    masks = _masks(n)
    counts = _popcount(masks, n)
    conn = np.zeros(1 << n, dtype=bool)
    for v in range(n):
        conn[1 << v] = True
    for size in range(2, n + 1):
        layer = masks[counts == size]
        for v in range(n):
            members = layer[(layer >> v) & 1 == 1]
            rest = members ^ (1 << v)
            conn[members] |= conn[rest] & ((rest & adjacency[v]) != 0)
    return conn


def _center_costs(instance: Instance, c: int, masks: np.ndarray) -> np.ndarray:
    """cost_c[S] = Σ_{v∈S} d(c, v)."""
    row = instance.dist[c]
    if instance.rational:
        total = np.zeros(len(masks), dtype=object)
        for v in range(instance.n):
            total = total + ((masks >> v) & 1).astype(object) * row[v]
        return total
    total = np.zeros(len(masks))
    for v in range(instance.n):
        total += ((masks >> v) & 1) * float(row[v])
    return total


def _best_center_table(instance: Instance, conn: np.ndarray, masks: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """h[S] = min_{c∈S} cost_c[S] si S est connexe, ∞ sinon ; h[0] = 0."""
    dtype = object if instance.rational else float
    best = np.full(len(masks), INF, dtype=dtype)
    center = np.full(len(masks), -1, dtype=np.int64)
    for c in range(instance.n):
        cost = _center_costs(instance, c, masks)
        valid = conn & (((masks >> c) & 1) == 1)
        better = valid & np.asarray(cost < best, dtype=bool)
        best[better] = cost[better]
        center[better] = c
    best[0] = 0
    return best, center


def _partition_dp(best: np.ndarray, n: int, parts: int) -> Tuple[Number, List[int]]:
    """Partition de V en au plus `parts` masques connexes, par sous-masques contenant le bit de poids faible."""
    h = best.tolist()
    size = 1 << n
    current = list(h)
    choices: List[List[int]] = [list(range(size))]
    for _ in range(2, parts + 1):
        nxt: List[Any] = [INF] * size
        nxt[0] = 0
        choice = [0] * size
        for s in range(1, size):
            low = s & -s
            rest = s ^ low
            sub = rest
            while True:
                block = sub | low
                if h[block] != INF:
                    value = h[block] + current[s ^ block]
                    if value < nxt[s] or (value == nxt[s] and block < choice[s]):
                        nxt[s], choice[s] = value, block
                if sub == 0:
                    break
                sub = (sub - 1) & rest
        current = nxt
        choices.append(choice)
    full = size - 1
    blocks = []
    remaining = full
    for choice in reversed(choices):
        if remaining == 0:
            break
        block = choice[remaining]
        blocks.append(block)
        remaining ^= block
    return current[full], blocks


def brute_force_disjoint(instance: Instance, k: Optional[int] = None) -> Tuple[Number, Clustering]:
    """
    Optimum exact de la variante disjointe : partitions de V en au plus k parties connexes.

    Returns:
        Tuple: (coût optimal, clustering)

    Raises:
        GuardError: Instance trop grande pour l'énumération
    """
    n = instance.n
    budget = instance.k if k is None else k
    if budget >= n:
        return 0, Clustering.from_pairs((v, [v]) for v in range(n))
    if budget <= 2:
        _guard(n, "max_nodes_partition", "Oracle disjoint")
    else:
        _guard(n, "max_nodes_multi", "Oracle disjoint multi-clusters")

    masks = _masks(n)
    conn = connected_masks(n, _adjacency(instance.graph, n))
    best, center = _best_center_table(instance, conn, masks)
    full = (1 << n) - 1
    if budget == 1:
        cost, blocks = best[full], [full]
    elif budget == 2:
        halves = (_masks(n - 1) << 1) | 1
        values = best[halves] + best[full ^ halves]
        index = _argmin(values)
        cost = values[index]
        block = int(halves[index])
        blocks = [block] if block == full else [block, full ^ block]
    else:
        cost, blocks = _partition_dp(best, n, budget)
    if cost == INF:
        raise InfeasibleError(f"Aucune partition connexe en {budget} parties")
    clustering = Clustering.from_pairs(sorted((int(center[b]), _decode(b)) for b in blocks))
    logger.debug(f"Oracle disjoint : coût {cost} pour n = {n}, k = {budget}")
    return cost, clustering


def _superset_min(values: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """F[M] = min_{S ⊇ M} values[S] et le masque S réalisant ce minimum."""
    best = values.copy()
    arg = _masks(n).copy()
    for v in range(n):
        step = 1 << v
        view = best.reshape(-1, 2, step)
        args = arg.reshape(-1, 2, step)
        better = np.asarray(view[:, 1, :] < view[:, 0, :], dtype=bool)
        view[:, 0, :] = np.where(better, view[:, 1, :], view[:, 0, :])
        args[:, 0, :] = np.where(better, args[:, 1, :], args[:, 0, :])
    return best, arg


def _cover_tables(instance: Instance, conn: np.ndarray, masks: np.ndarray, c: int) -> Tuple[np.ndarray, np.ndarray]:
    dtype = object if instance.rational else float
    cost = _center_costs(instance, c, masks)
    values = np.full(len(masks), INF, dtype=dtype)
    valid = conn & (((masks >> c) & 1) == 1)
    values[valid] = cost[valid]
    return _superset_min(values, instance.n)


def _assign_parts(tables: List[np.ndarray], n: int) -> Tuple[Number, List[int]]:
    """min Σ F_i[M_i] sur les partitions (M_1, ..., M_m) de V, parties vides permises."""
    full = (1 << n) - 1
    if len(tables) == 1:
        return tables[0][full], [full]
    if len(tables) == 2:
        masks = _masks(n)
        values = tables[0][masks] + tables[1][full ^ masks]
        index = _argmin(values)
        return values[index], [int(index), full ^ int(index)]
    current = tables[0].tolist()
    picks: List[List[int]] = []
    for table in tables[1:]:
        column = table.tolist()
        nxt = [INF] * (full + 1)
        pick = [0] * (full + 1)
        for s in range(full + 1):
            sub = s
            while True:
                value = column[sub] + current[s ^ sub]
                if value < nxt[s]:
                    nxt[s], pick[s] = value, sub
                if sub == 0:
                    break
                sub = (sub - 1) & s
        current = nxt
        picks.append(pick)
    parts = []
    remaining = full
    for pick in reversed(picks):
        part = pick[remaining]
        parts.append(part)
        remaining ^= part
    parts.append(remaining)
    return current[full], list(reversed(parts))


def brute_force_non_disjoint(
    instance: Instance, k: Optional[int] = None, centers: Optional[Iterable[int]] = None
) -> Tuple[Number, Clustering]:
    """
    Optimum exact de la variante non disjointe (recouvrement par clusters connexes).

    Args:
        instance (Instance): Instance du problème
        k (int, optional): Nombre maximal de clusters, instance.k par défaut
        centers (optional): Centres imposés (version affectation)

    Returns:
        Tuple: (coût optimal, clustering)

    Raises:
        GuardError: Instance trop grande
    """
    n = instance.n
    budget = instance.k if k is None else k
    fixed = sorted(set(centers)) if centers is not None else None
    if fixed is not None and not fixed:
        raise ContractError("Ensemble de centres vide")
    if fixed is None and budget >= n:
        return 0, Clustering.from_pairs((v, [v]) for v in range(n))
    width = len(fixed) if fixed is not None else min(budget, n)
    _guard(n, "max_nodes_cover" if width <= 2 else "max_nodes_multi", "Oracle non disjoint")

    masks = _masks(n)
    conn = connected_masks(n, _adjacency(instance.graph, n))
    cache: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}

    def tables_for(c: int) -> Tuple[np.ndarray, np.ndarray]:
        if c not in cache:
            cache[c] = _cover_tables(instance, conn, masks, c)
        return cache[c]

    candidates: Iterable[Tuple[int, ...]] = [tuple(fixed)] if fixed is not None else itertools.combinations(range(n), width)
    best: Optional[Tuple[Any, Tuple[int, ...], List[int]]] = None
    for combo in candidates:
        value, parts = _assign_parts([tables_for(c)[0] for c in combo], n)
        if value == INF:
            continue
        if best is None or value < best[0]:
            best = (value, combo, parts)
    if best is None:
        raise InfeasibleError("Aucun recouvrement connexe réalisable")

    cost, combo, parts = best
    pairs = []
    for c, part in zip(combo, parts):
        if part == 0 and fixed is None:
            continue
        pairs.append((c, _decode(int(tables_for(c)[1][part]))))
    logger.debug(f"Oracle non disjoint : coût {cost} avec les centres {list(combo)}")
    return cost, Clustering.from_pairs(sorted(pairs))


def brute_force_dominating_set(graph: nx.Graph) -> int:
    """Taille minimale d'un ensemble dominant, par énumération vectorisée des sous-ensembles."""
    nodes = sorted(graph.nodes)
    n = len(nodes)
    if n == 0:
        return 0
    _guard(n, "max_nodes_dominating_set", "Ensemble dominant")
    index = {v: i for i, v in enumerate(nodes)}
    closed = [1 << i for i in range(n)]
    for u, w in graph.edges:
        closed[index[u]] |= 1 << index[w]
        closed[index[w]] |= 1 << index[u]
    dominated = np.zeros(1 << n, dtype=np.int64)
    for v in range(n):
        dominated[1 << v: 1 << (v + 1)] = dominated[: 1 << v] | closed[v]
    full = (1 << n) - 1
    sizes = _popcount(_masks(n), n)
    return int(sizes[dominated == full].min())


def brute_force_satisfiable(formula: Any) -> bool:
    """Vérification indépendante par essai de toutes les valuations (littéraux signés)."""
    count = int(formula.num_variables)
    _guard(count, "max_variables_sat", "SAT par énumération")
    for values in itertools.product((False, True), repeat=count):
        if all(any(values[abs(lit) - 1] == (lit > 0) for lit in clause) for clause in formula.clauses):
            return True
    return False
