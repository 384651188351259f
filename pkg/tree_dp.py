"""
Programme dynamique exact pour la variante disjointe sur un arbre de connexité.

Pour chaque noeud a (traité après ses enfants) et chaque noeud b :
  I(a, b, k') : coût minimal de T_a en au plus k' clusters, le cluster de a
               étant centré en b ∈ T_a ;
  C(a, b, k') : coût minimal de T_a quand b ∉ T_a, a rejoignant le cluster de
               b (hors budget) ou T_a restant autonome, min(Y, I(a, k')).
Les tables auxiliaires X_a et Y_a fusionnent les enfants un par un. Les
distances peuvent être quelconques (non métriques). L'infini est math.inf.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

import networkx as nx

from core import Clustering, Instance, Number, evaluate_cost
from errors import ContractError, InfeasibleError

logger = logging.getLogger(__name__)

INF = math.inf


def _add(left: Number, right: Number) -> Number:
    if left == INF or right == INF:
        return INF
    return left + right


@dataclass
class RootedTree:
    root: int
    parent: List[int]
    children: List[List[int]]
    tin: List[int]
    tout: List[int]
    height: List[int]
    preorder: List[int]

    @classmethod
    def from_graph(cls, graph: nx.Graph, root: int = 0) -> "RootedTree":
        """
        Enracine un arbre ; les enfants sont rangés par indice croissant.

        Raises:
            ContractError: Si le graphe n'est pas un arbre ou si la racine est absente
        """
        if graph.number_of_nodes() == 0 or not nx.is_tree(graph):
            raise ContractError("Le graphe de connexité n'est pas un arbre")
        if root not in graph:
            raise ContractError(f"Racine {root} absente du graphe")
        n = graph.number_of_nodes()
        parent = [-1] * n
        children: List[List[int]] = [[] for _ in range(n)]
        tin = [0] * n
        tout = [0] * n
        height = [0] * n
        preorder: List[int] = []
        stack: List[Tuple[int, bool]] = [(root, False)]
        clock = 0
        while stack:
            node, done = stack.pop()
            if done:
                tout[node] = clock
                height[node] = 1 + max((height[c] for c in children[node]), default=-1)
                continue
            tin[node] = clock
            clock += 1
            preorder.append(node)
            kids = sorted(v for v in graph.neighbors(node) if v != parent[node])
            for v in kids:
                parent[v] = node
            children[node] = kids
            stack.append((node, True))
            stack.extend((v, False) for v in reversed(kids))
        return cls(root, parent, children, tin, tout, height, preorder)

    @classmethod
    def from_instance(cls, instance: Instance, root: int = 0) -> "RootedTree":
        return cls.from_graph(instance.graph, root)

    @property
    def n(self) -> int:
        return len(self.parent)

    def contains(self, a: int, b: int) -> bool:
        """Vrai si b ∈ T_a."""
        return self.tin[a] <= self.tin[b] < self.tout[a]

    def subtree(self, a: int) -> List[int]:
        return sorted(v for v in range(self.n) if self.contains(a, v))

    def bottom_up(self) -> List[int]:
        """Noeuds par hauteur croissante puis par indice."""
        return sorted(range(self.n), key=lambda v: (self.height[v], v))


@dataclass
class DpTables:
    tree: RootedTree
    k: int
    inside: List[List[List[Number]]]
    outside: List[List[List[Number]]]
    best: List[List[Number]]
    x_arg: Dict[Tuple[int, int], List[List[int]]] = field(default_factory=dict)
    y_arg: Dict[Tuple[int, int], List[List[int]]] = field(default_factory=dict)
    joined: List[List[List[bool]]] = field(default_factory=list)
    operations: int = 0

    def value(self, a: int, k: int) -> Number:
        """I(a, k') = min_b I(a, b, k')."""
        return self.best[a][k]

    @property
    def optimum(self) -> Number:
        return self.best[self.tree.root][self.k]

    def best_center(self, a: int, k: int) -> int:
        """Plus petit b réalisant I(a, k')."""
        row = [self.inside[a][b][k] for b in range(self.tree.n)]
        target = self.best[a][k]
        return next(b for b, value in enumerate(row) if value == target)


def _merge_child(
    tables: DpTables,
    a: int,
    step: int,
    child: int,
    owner: List[Optional[int]],
    x: List[List[Number]],
    y: List[List[Number]],
) -> Tuple[List[List[Number]], List[List[Number]]]:
    n, k = tables.tree.n, tables.k
    new_x: List[List[Number]] = [[INF] * (k + 1) for _ in range(n)]
    new_y: List[List[Number]] = [[INF] * (k + 1) for _ in range(n)]
    x_arg = [[-1] * (k + 1) for _ in range(n)]
    y_arg = [[-1] * (k + 1) for _ in range(n)]
    inside = tables.inside[child]
    outside = tables.outside[child]
    ops = 0
    for b in range(n):
        where = owner[b]
        if where is not None and where < step:
            # b déjà dans la partie gauche : l'enfant rejoint b ou reste autonome
            for kk in range(1, k + 1):
                for k1 in range(1, kk + 1):
                    ops += 1
                    value = _add(x[b][k1], outside[b][kk - k1])
                    if value < new_x[b][kk]:
                        new_x[b][kk], x_arg[b][kk] = value, k1
        elif where == step:
            # b dans le nouvel enfant : a est relié à b à travers lui
            for kk in range(1, k + 1):
                for k1 in range(0, kk):
                    ops += 1
                    value = _add(y[b][k1], inside[b][kk - k1])
                    if value < new_x[b][kk]:
                        new_x[b][kk], x_arg[b][kk] = value, k1
        else:
            for kk in range(0, k + 1):
                for k1 in range(0, kk + 1):
                    ops += 1
                    value = _add(y[b][k1], outside[b][kk - k1])
                    if value < new_y[b][kk]:
                        new_y[b][kk], y_arg[b][kk] = value, k1
    tables.x_arg[(a, step)] = x_arg
    tables.y_arg[(a, step)] = y_arg
    tables.operations += ops
    return new_x, new_y


def _owner_map(tree: RootedTree, a: int) -> List[Optional[int]]:
    """-1 pour a, j pour le sous-arbre du j-ième enfant, None hors de T_a."""
    owner: List[Optional[int]] = [None] * tree.n
    owner[a] = -1
    for j, child in enumerate(tree.children[a]):
        for v in range(tree.n):
            if tree.contains(child, v):
                owner[v] = j
    return owner


def build_tables(instance: Instance, k: Optional[int] = None, root: int = 0) -> DpTables:
    """
    Remplit les tables I et C de bas en haut.

    Args:
        instance (Instance): Instance dont le graphe est un arbre
        k (int, optional): Nombre maximal de clusters, instance.k par défaut
        root (int): Racine choisie

    Returns:
        DpTables: Tables et argmins pour la reconstruction
    """
    tree = RootedTree.from_instance(instance, root)
    budget = instance.k if k is None else k
    if budget < 1:
        raise ContractError(f"k doit être au moins 1, reçu {budget}")
    n = tree.n
    dist = instance.dist
    tables = DpTables(
        tree=tree,
        k=budget,
        inside=[[] for _ in range(n)],
        outside=[[] for _ in range(n)],
        best=[[] for _ in range(n)],
        joined=[[] for _ in range(n)],
    )
    for a in tree.bottom_up():
        x: List[List[Number]] = [[INF] * (budget + 1) for _ in range(n)]
        y: List[List[Number]] = [[INF] * (budget + 1) for _ in range(n)]
        for kk in range(1, budget + 1):
            x[a][kk] = 0
        for b in range(n):
            if b != a:
                y[b] = [dist[b][a]] * (budget + 1)
        owner = _owner_map(tree, a)
        for step, child in enumerate(tree.children[a]):
            x, y = _merge_child(tables, a, step, child, owner, x, y)

        inside = [[x[b][kk] if owner[b] is not None else INF for kk in range(budget + 1)] for b in range(n)]
        best = [min(inside[b][kk] for b in range(n)) for kk in range(budget + 1)]
        outside: List[List[Number]] = []
        joined: List[List[bool]] = []
        for b in range(n):
            if owner[b] is not None:
                outside.append([INF] * (budget + 1))
                joined.append([False] * (budget + 1))
                continue
            outside.append([y[b][kk] if y[b][kk] <= best[kk] else best[kk] for kk in range(budget + 1)])
            joined.append([y[b][kk] != INF and y[b][kk] <= best[kk] for kk in range(budget + 1)])
        tables.inside[a] = inside
        tables.outside[a] = outside
        tables.best[a] = best
        tables.joined[a] = joined
    logger.debug(f"DP sur arbre : {tables.operations} opérations pour n = {n}, k = {budget}")
    return tables


def reconstruct(tables: DpTables, instance: Instance, k: Optional[int] = None) -> Clustering:
    """
    Reconstruit un clustering optimal à partir des argmins enregistrés.

    Raises:
        ContractError: Si les argmins manquent
        InfeasibleError: Si l'optimum est infini
    """
    tree = tables.tree
    budget = tables.k if k is None else k
    if budget > tables.k:
        raise ContractError(f"Tables calculées pour k = {tables.k}, reconstruction demandée pour {budget}")
    if not tables.inside[tree.root]:
        raise ContractError("Tables vides : aucune trace d'argmin")
    if tables.best[tree.root][budget] == INF:
        raise InfeasibleError(f"Aucune partition connexe en {budget} clusters")

    center = [-1] * tree.n
    work: List[Tuple[str, int, int, int]] = [("I", tree.root, tables.best_center(tree.root, budget), budget)]
    while work:
        kind, a, b, kk = work.pop()
        if kind == "C":
            if tables.joined[a][b][kk]:
                kind = "Y"
            else:
                work.append(("I", a, tables.best_center(a, kk), kk))
                continue
        mode = "X" if kind == "I" else "Y"
        center[a] = b
        owner = _owner_map(tree, a)
        for step in range(len(tree.children[a]) - 1, -1, -1):
            child = tree.children[a][step]
            key = (a, step)
            if key not in tables.x_arg:
                raise ContractError(f"Argmin manquant pour le noeud {a}, étape {step}")
            k1 = (tables.x_arg if mode == "X" else tables.y_arg)[key][b][kk]
            if k1 < 0:
                raise ContractError(f"Argmin absent pour ({a}, {b}, {kk})")
            if mode == "X" and owner[b] == step:
                work.append(("I", child, b, kk - k1))
                mode = "Y"
            else:
                work.append(("C", child, b, kk - k1))
            kk = k1

    groups: Dict[int, List[int]] = {}
    for v, c in enumerate(center):
        groups.setdefault(c, []).append(v)
    return Clustering.from_pairs(sorted(groups.items()))


def solve_tree_fixed(instance: Instance, centers: Iterable[int]) -> Tuple[Number, Clustering]:
    """
    Variante à centres fixés : chaque centre a son cluster, O(n·|centres|).

    Returns:
        Tuple: (coût optimal, clustering)

    Raises:
        ContractError: Graphe non arbre ou centres vides
    """
    tree = RootedTree.from_instance(instance)
    chosen = sorted(set(centers))
    if not chosen:
        raise ContractError("Aucun centre fourni")
    n = tree.n
    dist = instance.dist
    chosen_set = set(chosen)
    cost: List[Dict[int, Number]] = [{} for _ in range(n)]
    best: List[Tuple[Number, int]] = [(INF, -1)] * n
    for a in tree.bottom_up():
        for c in chosen:
            if a in chosen_set and c != a:
                cost[a][c] = INF
                continue
            total: Number = dist[c][a]
            for child in tree.children[a]:
                if tree.contains(child, c):
                    total = _add(total, cost[child][c])
                else:
                    total = _add(total, min(cost[child][c], best[child][0]))
            cost[a][c] = total
        inner = [(cost[a][c], c) for c in chosen if tree.contains(a, c)]
        best[a] = min(inner) if inner else (INF, -1)

    root_value, root_center = best[tree.root]
    if root_value == INF:
        raise InfeasibleError("Aucun clustering connexe pour ces centres")
    assigned = [-1] * n
    work = [(tree.root, root_center)]
    while work:
        a, c = work.pop()
        assigned[a] = c
        for child in tree.children[a]:
            if tree.contains(child, c) or cost[child][c] <= best[child][0]:
                work.append((child, c))
            else:
                work.append((child, best[child][1]))
    groups: Dict[int, List[int]] = {}
    for v, c in enumerate(assigned):
        groups.setdefault(c, []).append(v)
    return root_value, Clustering.from_pairs(sorted(groups.items()))


def solve_tree(
    instance: Instance, k: Optional[int] = None, fixed_centers: Optional[Iterable[int]] = None
) -> Tuple[Number, Clustering]:
    """
    Optimum exact de la k-médiane connexe disjointe sur un arbre.

    Args:
        instance (Instance): Instance dont le graphe est un arbre
        k (int, optional): Nombre maximal de clusters, instance.k par défaut
        fixed_centers (optional): Centres imposés (variante O(nk))

    Returns:
        Tuple: (coût optimal, clustering reconstruit)

    Raises:
        ContractError: Le graphe n'est pas un arbre
    """
    if fixed_centers is not None:
        return solve_tree_fixed(instance, fixed_centers)
    tables = build_tables(instance, k)
    clustering = reconstruct(tables, instance)
    cost = tables.optimum
    check = evaluate_cost(instance, clustering)
    if check != cost and abs(float(check) - float(cost)) > 1e-9 * max(1.0, abs(float(cost))):
        raise ContractError(f"Reconstruction incohérente : {check} au lieu de {cost}")
    logger.info(f"DP sur arbre : coût {cost} en {len(clustering)} clusters")
    return cost, clustering
