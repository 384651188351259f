"""
Construction d'instances : réductions depuis 3-SAT et l'ensemble dominant,
instances en étoile et instances aléatoires.

Toutes les fonctions sont pures et déterministes pour une graine donnée.
"""

import logging
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterator, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from config_manager import config
from core import Instance
from errors import ContractError, InfeasibleError, MalformedFormula

logger = logging.getLogger(__name__)

GROUP_L, GROUP_M, GROUP_R = "L", "M", "R"
_GROUP_DISTANCE = {
    frozenset((GROUP_L, GROUP_M)): 1,
    frozenset((GROUP_R, GROUP_M)): 1,
    frozenset((GROUP_L, GROUP_R)): 2,
}


@dataclass(frozen=True)
class CnfFormula:
    """Formule CNF : littéraux entiers signés, la variable i vaut ±i (1 ≤ i ≤ num_variables)."""

    num_variables: int
    clauses: Tuple[Tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if self.num_variables < 1:
            raise MalformedFormula("La formule doit avoir au moins une variable")
        if not self.clauses:
            raise MalformedFormula("La formule doit avoir au moins une clause")
        for index, clause in enumerate(self.clauses):
            if not 1 <= len(clause) <= 3:
                raise MalformedFormula(f"Clause {index + 1} de taille {len(clause)} (1 à 3 littéraux)")
            for literal in clause:
                if literal == 0 or abs(literal) > self.num_variables:
                    raise MalformedFormula(f"Littéral {literal} invalide dans la clause {index + 1}")

    @classmethod
    def make(cls, num_variables: int, clauses: Sequence[Sequence[int]]) -> "CnfFormula":
        return cls(int(num_variables), tuple(tuple(int(lit) for lit in clause) for clause in clauses))

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    def evaluate(self, values: Sequence[bool]) -> bool:
        return all(any(values[abs(lit) - 1] == (lit > 0) for lit in clause) for clause in self.clauses)


def parse_clauses(text: str) -> List[List[int]]:
    """Clauses séparées par « ; » ou des retours à la ligne, littéraux séparés par des espaces ("-1 2; 1 -2")."""
    clauses = []
    for chunk in text.replace("\n", ";").split(";"):
        literals = [token for token in chunk.replace(",", " ").split() if token != "0"]
        if not literals:
            continue
        try:
            clauses.append([int(token) for token in literals])
        except ValueError as e:
            raise MalformedFormula(f"Clause illisible : {chunk.strip()!r}") from e
    return clauses


def read_dimacs(source: Union[str, Path]) -> CnfFormula:
    """
    Lit une formule au format DIMACS CNF.

    Args:
        source: Chemin d'un fichier ou texte DIMACS

    Returns:
        CnfFormula: Formule validée

    Raises:
        MalformedFormula: En-tête absent ou clause invalide
    """
    if isinstance(source, Path) or ("\n" not in source and os.path.isfile(source)):
        with open(source, "r", encoding="utf-8") as f:
            text = f.read()
    else:
        text = str(source)

    num_variables: Optional[int] = None
    declared = 0
    clauses: List[List[int]] = []
    current: List[int] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise MalformedFormula(f"En-tête DIMACS invalide : {line!r}")
            try:
                num_variables, declared = int(parts[2]), int(parts[3])
            except ValueError as e:
                raise MalformedFormula(f"En-tête DIMACS invalide : {line!r}") from e
            continue
        for token in line.split():
            try:
                literal = int(token)
            except ValueError as e:
                raise MalformedFormula(f"Littéral illisible : {token!r}") from e
            if literal == 0:
                clauses.append(current)
                current = []
            else:
                current.append(literal)
    if current:
        clauses.append(current)
    if num_variables is None:
        raise MalformedFormula("En-tête « p cnf » manquant")
    if declared != len(clauses):
        logger.warning(f"DIMACS : {declared} clauses annoncées, {len(clauses)} lues")
    return CnfFormula.make(num_variables, clauses)


def gen_from_3sat(formula: CnfFormula, m: int, epsilon: Optional[float] = None) -> Instance:
    """
    Réduction de 3-SAT vers la k-médiane connexe disjointe (k = 2).

    Ordre des noeuds : T, F, c_{i,j} (clause i, copie j), x_i et ¬x_i, e_{i,j}.

    Args:
        formula (CnfFormula): Formule à au plus trois littéraux par clause
        m (int): Nombre de copies des noeuds de clause et de variable
        epsilon (float, optional): Remplace les distances nulles intra-groupe

    Returns:
        Instance: Instance à n = 2 + (m+2)a + mb noeuds

    Raises:
        ContractError: m < 1 ou epsilon non positif
    """
    if m < 1:
        raise ContractError(f"m doit être au moins 1, reçu {m}")
    if epsilon is not None and not 0 < epsilon <= 1:
        raise ContractError(f"epsilon doit être dans ]0, 1], reçu {epsilon}")
    a, b = formula.num_variables, formula.num_clauses
    if a < 2 or b < 2:
        logger.warning(f"Réduction 3-SAT avec a = {a}, b = {b} : la dichotomie des coûts suppose a, b ≥ 2")

    names: List[str] = ["T", "F"]
    groups: List[str] = [GROUP_L, GROUP_R]
    clause_node = {}
    for i in range(b):
        for j in range(m):
            clause_node[(i, j)] = len(names)
            names.append(f"c_{i + 1}_{j + 1}")
            groups.append(GROUP_L)
    literal_node = {}
    for i in range(1, a + 1):
        for literal, label in ((i, f"x_{i}"), (-i, f"~x_{i}")):
            literal_node[literal] = len(names)
            names.append(label)
            groups.append(GROUP_M)
    copy_node = {}
    for i in range(1, a + 1):
        for j in range(m):
            copy_node[(i, j)] = len(names)
            names.append(f"e_{i}_{j + 1}")
            groups.append(GROUP_R)

    edges = []
    for i in range(1, a + 1):
        for literal in (i, -i):
            node = literal_node[literal]
            edges.extend([(0, node), (1, node)])
            edges.extend((node, copy_node[(i, j)]) for j in range(m))
    for i, clause in enumerate(formula.clauses):
        for literal in set(clause):
            edges.extend((literal_node[literal], clause_node[(i, j)]) for j in range(m))

    same = 0 if epsilon is None else epsilon
    n = len(names)
    dist: List[List[Any]] = [[0] * n for _ in range(n)]
    for u in range(n):
        for v in range(u + 1, n):
            value = same if groups[u] == groups[v] else _GROUP_DISTANCE[frozenset((groups[u], groups[v]))]
            dist[u][v] = dist[v][u] = value
    logger.info(f"Réduction 3-SAT : a = {a}, b = {b}, m = {m}, n = {n}")
    return Instance(dist, edges, 2, metric=True, names=names)


def gen_from_dominating_set(graph: nx.Graph) -> Instance:
    """
    Réduction de l'ensemble dominant vers la variante non disjointe (k = 2).

    Noeuds : a = 0, b = 1, x_i = 2 + i, y_i = 2 + n + i ; a et les x_i sont en
    position 0, b et les y_i en position 1. Les centres naturels a et b sont
    enregistrés comme centres fixés.
    """
    nodes = sorted(graph.nodes)
    index = {v: i for i, v in enumerate(nodes)}
    n = len(nodes)
    x = [2 + i for i in range(n)]
    y = [2 + n + i for i in range(n)]
    edges = []
    for i in range(n):
        edges.extend([(x[i], 0), (x[i], 1), (x[i], y[i])])
    for u, w in graph.edges:
        if u == w:
            logger.warning(f"Boucle ignorée sur le noeud {u}")
            continue
        i, j = index[u], index[w]
        edges.extend([(x[i], y[j]), (x[j], y[i])])
    positions = [0, 1] + [0] * n + [1] * n
    dist = [[abs(p - q) for q in positions] for p in positions]
    names = ["a", "b"] + [f"x_{i + 1}" for i in range(n)] + [f"y_{i + 1}" for i in range(n)]
    return Instance(dist, edges, 2, fixed_centers=[0, 1], metric=True, names=names)


def _euclidean_ceil(points: np.ndarray) -> List[List[int]]:
    """Distances euclidiennes arrondies au supérieur : l'inégalité triangulaire reste exacte."""
    diff = points[:, None, :] - points[None, :, :]
    dist = np.ceil(np.sqrt((diff.astype(float) ** 2).sum(axis=2)))
    return [[int(value) for value in row] for row in dist]


def gen_star(n: int, seed: int = 0, k: int = 2) -> Instance:
    """Étoile : le noeud 0 est relié à tous les autres ; points entiers aléatoires dans le plan."""
    if n < 3:
        raise ContractError(f"Une étoile demande au moins 3 noeuds, reçu {n}")
    rng = np.random.default_rng(seed)
    points = rng.integers(0, 100, size=(n, 2))
    edges = [(0, v) for v in range(1, n)]
    return Instance(_euclidean_ceil(points), edges, k, metric=True)


def _random_graph(n: int, model: str, p: float, rng: np.random.Generator) -> nx.Graph:
    if model == "tree":
        if n <= 2:
            return nx.path_graph(n)
        return nx.from_prufer_sequence([int(v) for v in rng.integers(0, n, size=n - 2)])
    if model == "grid":
        side = max(1, math.ceil(math.sqrt(n)))
        grid = nx.grid_2d_graph(side, side)
        keep = {(r, c): r * side + c for r, c in grid.nodes if r * side + c < n}
        graph = nx.Graph()
        graph.add_nodes_from(range(n))
        graph.add_edges_from((keep[u], keep[w]) for u, w in grid.edges if u in keep and w in keep)
        return graph
    if model == "gnp":
        retries = int(config.get_setting("generators.connect_retries", 100))
        for attempt in range(retries):
            graph = nx.gnp_random_graph(n, p, seed=int(rng.integers(0, 2**31 - 1)))
            if nx.is_connected(graph):
                logger.debug(f"G(n, p) connexe après {attempt + 1} tirages")
                return graph
        raise InfeasibleError(f"G({n}, {p}) non connexe après {retries} tirages")
    raise ContractError(f"Modèle de graphe inconnu : {model!r}")


def gen_random(
    n: int,
    k: int,
    seed: int = 0,
    model: str = "gnp",
    p: float = 0.5,
    metric: str = "euclidean",
) -> Instance:
    """
    Instance aléatoire à graphe connexe.

    Args:
        n (int): Nombre de noeuds
        k (int): Nombre de clusters
        seed (int): Graine
        model (str): "gnp", "tree" ou "grid"
        p (float): Probabilité d'arête pour gnp
        metric (str): "euclidean" (points entiers, arrondi supérieur) ou "shortest_path"

    Returns:
        Instance: Instance métrique déterministe pour la graine

    Raises:
        ContractError: n < k, k < 1 ou paramètres inconnus
        InfeasibleError: Graphe G(n, p) jamais connexe dans le budget de tirages
    """
    if k < 1 or n < k:
        raise ContractError(f"Paramètres invalides : n = {n}, k = {k} (n ≥ k ≥ 1)")
    rng = np.random.default_rng(seed)
    graph = _random_graph(n, model, p, rng)
    edges = sorted(tuple(sorted((int(u), int(w)))) for u, w in graph.edges)
    if metric == "euclidean":
        dist = _euclidean_ceil(rng.integers(0, 100, size=(n, 2)))
    elif metric == "shortest_path":
        weighted = nx.Graph()
        weighted.add_nodes_from(range(n))
        for u, w in edges:
            weighted.add_edge(u, w, weight=int(rng.integers(1, 11)))
        matrix = nx.floyd_warshall_numpy(weighted, nodelist=list(range(n)), weight="weight")
        dist = [[int(value) for value in row] for row in matrix]
    else:
        raise ContractError(f"Métrique inconnue : {metric!r}")
    return Instance(dist, edges, k, metric=True)


def random_distances(n: int, seed: int = 0, high: int = 10) -> List[List[int]]:
    """Matrice symétrique aléatoire à diagonale nulle, sans inégalité triangulaire."""
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.integers(0, high + 1, size=(n, n)), 1)
    return [[int(value) for value in row] for row in upper + upper.T]


def enumerate_trees(n: int) -> Iterator[List[Tuple[int, int]]]:
    """Listes d'arêtes de tous les arbres non isomorphes à n noeuds."""
    if n < 1:
        raise ContractError(f"n doit être positif, reçu {n}")
    if n == 1:
        yield []
        return
    for tree in nx.nonisomorphic_trees(n):
        yield sorted(tuple(sorted((int(u), int(w)))) for u, w in tree.edges)
