"""
Modèle de données du problème de k-médiane connexe.

Une instance associe une métrique (matrice de distances) à un graphe de
connexité sans rapport avec elle : chaque cluster doit induire un sous-graphe
connexe de ce graphe. Les noeuds sont des indices denses 0..n-1 ; les noms
externes ne vivent que dans la couche d'entrée/sortie.
"""

import json
import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from config_manager import config
from errors import StructuralError

logger = logging.getLogger(__name__)

Number = Union[int, float, Fraction]


class Variant(str, Enum):
    """Variante du problème : partition stricte ou simple recouvrement."""

    DISJOINT = "disjoint"
    NON_DISJOINT = "non-disjoint"

    @classmethod
    def parse(cls, value: Union[str, "Variant"]) -> "Variant":
        try:
            return cls(value)
        except ValueError as e:
            raise StructuralError(f"Variante inconnue : {value!r}") from e


def parse_number(value: Any, rational: bool) -> Number:
    """
    Convertit une valeur JSON en distance.

    Args:
        value (Any): Nombre ou chaîne "p/q"
        rational (bool): Mode rationnel exact

    Returns:
        Number: Fraction en mode rationnel, float sinon
    """
    if isinstance(value, bool):
        raise StructuralError(f"Distance invalide : {value!r}")
    try:
        if rational:
            return Fraction(value) if not isinstance(value, float) else Fraction(value).limit_denominator(10**12)
        return float(Fraction(value)) if isinstance(value, str) else float(value)
    except (TypeError, ValueError, ZeroDivisionError) as e:
        raise StructuralError(f"Distance invalide : {value!r}") from e


def number_to_json(value: Any) -> Any:
    """Sérialise un nombre : entier si possible, "p/q" pour une fraction non entière."""
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return value.numerator
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, (np.floating, np.integer)):
        value = value.item()
    if isinstance(value, float):
        if math.isinf(value) or math.isnan(value):
            return None
        if value.is_integer() and abs(value) < 2**53:
            return int(value)
    return value


class Instance:
    """Instance immuable : distances, graphe de connexité, k et centres fixés éventuels."""

    def __init__(
        self,
        dist: Sequence[Sequence[Any]],
        edges: Iterable[Sequence[int]],
        k: int,
        fixed_centers: Optional[Iterable[int]] = None,
        metric: bool = False,
        names: Optional[Sequence[str]] = None,
        rational: Optional[bool] = None,
    ):
        if rational is None:
            rational = config.is_rational()
        self.rational = rational
        self.n = len(dist)
        rows: List[Tuple[Number, ...]] = []
        for i, row in enumerate(dist):
            if len(row) != self.n:
                raise StructuralError(f"La ligne {i} de la matrice de distances a {len(row)} colonnes au lieu de {self.n}")
            rows.append(tuple(parse_number(value, rational) for value in row))
        self.dist: Tuple[Tuple[Number, ...], ...] = tuple(rows)

        if isinstance(k, np.integer):
            k = int(k)
        if not isinstance(k, int) or isinstance(k, bool) or k < 1:
            raise StructuralError(f"k doit être un entier positif, reçu {k!r}")
        self.k = k
        self.metric = bool(metric)
        self.edges = self._normalize_edges(edges)
        self.fixed_centers: Optional[Tuple[int, ...]] = None
        if fixed_centers is not None:
            centers = tuple(int(c) for c in fixed_centers)
            self._check_nodes(centers, "centre fixé")
            if len(set(centers)) != len(centers):
                raise StructuralError("Centres fixés en double")
            self.fixed_centers = centers
        if names is not None and len(names) != self.n:
            raise StructuralError(f"{len(names)} noms fournis pour {self.n} noeuds")
        self.names: Optional[Tuple[str, ...]] = tuple(str(name) for name in names) if names is not None else None

        self._arrays: Dict[str, np.ndarray] = {}
        self._check_distances()
        self.graph = nx.Graph()
        self.graph.add_nodes_from(range(self.n))
        self.graph.add_edges_from(self.edges)

    def _check_nodes(self, nodes: Iterable[int], label: str) -> None:
        for v in nodes:
            if not isinstance(v, (int, np.integer)) or not 0 <= v < self.n:
                raise StructuralError(f"Indice de {label} invalide : {v!r} (n = {self.n})")

    def _normalize_edges(self, edges: Iterable[Sequence[int]]) -> Tuple[Tuple[int, int], ...]:
        normalized = set()
        for edge in edges:
            if len(edge) != 2:
                raise StructuralError(f"Arête mal formée : {edge!r}")
            u, v = int(edge[0]), int(edge[1])
            self._check_nodes((u, v), "arête")
            if u == v:
                raise StructuralError(f"Boucle interdite sur le noeud {u}")
            normalized.add((min(u, v), max(u, v)))
        return tuple(sorted(normalized))

    def _check_distances(self) -> None:
        tol = 0 if self.rational else config.tolerance()
        for i in range(self.n):
            if self.dist[i][i] != 0:
                raise StructuralError(f"d({i},{i}) = {self.dist[i][i]} au lieu de 0")
            for j in range(i + 1, self.n):
                a, b = self.dist[i][j], self.dist[j][i]
                if a < 0 or b < 0 or (not self.rational and not (math.isfinite(a) and math.isfinite(b))):
                    raise StructuralError(f"Distance négative ou infinie entre {i} et {j}")
                if abs(a - b) > tol:
                    raise StructuralError(f"Matrice non symétrique : d({i},{j}) = {a}, d({j},{i}) = {b}")
        if self.metric and self.n:
            violation = triangle_violation(self.dist_array(), tol)
            if violation is not None:
                i, j, l = violation
                raise StructuralError(f"Inégalité triangulaire violée : d({i},{l}) > d({i},{j}) + d({j},{l})")

    def dist_array(self, dtype: Optional[Any] = None) -> np.ndarray:
        """
        Matrice des distances sous forme numpy (lecture seule).

        Args:
            dtype (optional): float ou object ; par défaut object en mode rationnel

        Returns:
            np.ndarray: Matrice n x n
        """
        if dtype is None:
            dtype = object if self.rational else float
        key = np.dtype(dtype).str
        if key not in self._arrays:
            array = np.array(self.dist, dtype=dtype).reshape(self.n, self.n)
            array.setflags(write=False)
            self._arrays[key] = array
        return self._arrays[key]

    def is_tree(self) -> bool:
        return self.n >= 1 and nx.is_tree(self.graph)

    def with_k(self, k: int) -> "Instance":
        """Copie de l'instance avec un autre k."""
        return Instance(self.dist, self.edges, k, self.fixed_centers, self.metric, self.names, self.rational)

    def with_centers(self, centers: Optional[Iterable[int]]) -> "Instance":
        return Instance(self.dist, self.edges, self.k, centers, self.metric, self.names, self.rational)

    @classmethod
    def from_dict(cls, data: Dict[str, Any], rational: Optional[bool] = None) -> "Instance":
        """
        Construit une instance depuis le schéma JSON.

        Args:
            data (Dict): {"n", "k", "dist", "edges", "centers"?, "metric"?, "names"?}
            rational (bool, optional): Force le mode numérique

        Returns:
            Instance: Instance validée
        """
        try:
            dist = data["dist"]
            k = data["k"]
        except (KeyError, TypeError) as e:
            raise StructuralError(f"Champ obligatoire manquant dans l'instance : {e}") from e
        if "n" in data and data["n"] != len(dist):
            raise StructuralError(f"n = {data['n']} ne correspond pas à la matrice ({len(dist)} lignes)")
        return cls(
            dist,
            data.get("edges", []),
            k,
            fixed_centers=data.get("centers"),
            metric=data.get("metric", False),
            names=data.get("names"),
            rational=rational,
        )

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "n": self.n,
            "k": self.k,
            "dist": [[number_to_json(value) for value in row] for row in self.dist],
            "edges": [list(edge) for edge in self.edges],
            "metric": self.metric,
        }
        if self.fixed_centers is not None:
            data["centers"] = list(self.fixed_centers)
        if self.names is not None:
            data["names"] = list(self.names)
        return data

    def __repr__(self) -> str:
        return f"Instance(n={self.n}, k={self.k}, edges={len(self.edges)}, metric={self.metric})"


def triangle_violation(dist: np.ndarray, tol: float = 0.0) -> Optional[Tuple[int, int, int]]:
    """Renvoie un triplet (i, j, l) avec d(i,l) > d(i,j) + d(j,l) + tol, ou None."""
    through = dist[:, :, None] + dist[None, :, :]
    bad = np.argwhere(dist[:, None, :] > through + tol)
    if len(bad) == 0:
        return None
    i, j, l = (int(value) for value in bad[0])
    return i, j, l


@dataclass(frozen=True)
class Cluster:
    center: int
    members: FrozenSet[int]


@dataclass(frozen=True)
class Clustering:
    """Liste de clusters (centre, membres). La disjonction est une question de variante."""

    clusters: Tuple[Cluster, ...]

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[int, Iterable[int]]]) -> "Clustering":
        return cls(tuple(Cluster(int(center), frozenset(int(v) for v in members)) for center, members in pairs))

    def __len__(self) -> int:
        return len(self.clusters)

    def __iter__(self) -> Iterator[Cluster]:
        return iter(self.clusters)

    @property
    def centers(self) -> List[int]:
        return [cluster.center for cluster in self.clusters]

    def memberships(self, v: int) -> int:
        """Nombre de clusters contenant v."""
        return sum(1 for cluster in self.clusters if v in cluster.members)

    def to_matrix(self, n: int) -> np.ndarray:
        """Affectation entière équivalente x[v][c] (1 si v appartient au cluster de c)."""
        x = np.zeros((n, n))
        for cluster in self.clusters:
            for v in cluster.members:
                x[v, cluster.center] = 1.0
        return x

    def canonical(self) -> List[Tuple[int, Tuple[int, ...]]]:
        """Forme triée, pratique pour comparer deux solutions."""
        return sorted((cluster.center, tuple(sorted(cluster.members))) for cluster in self.clusters)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Clustering":
        try:
            return cls.from_pairs((item["center"], item["members"]) for item in data["clusters"])
        except (KeyError, TypeError, ValueError) as e:
            raise StructuralError(f"Solution mal formée : {e}") from e

    def to_dict(self) -> Dict[str, Any]:
        return {
            "clusters": [
                {"center": cluster.center, "members": sorted(cluster.members)}
                for cluster in self.clusters
            ]
        }


class FractionalAssignment:
    """Matrice x[v][c] des affectations fractionnaires ; les ouvertures sont sur la diagonale."""

    def __init__(self, x: Any):
        array = np.array(x, dtype=float)
        if array.ndim != 2 or array.shape[0] != array.shape[1]:
            raise StructuralError(f"Affectation fractionnaire de forme {array.shape}, matrice carrée attendue")
        self.x = array

    @property
    def n(self) -> int:
        return int(self.x.shape[0])

    def __getitem__(self, index: Any) -> Any:
        return self.x[index]

    def openings(self) -> np.ndarray:
        return np.diag(self.x).copy()

    def copy(self) -> "FractionalAssignment":
        return FractionalAssignment(self.x.copy())

    def to_list(self) -> List[List[float]]:
        return [[float(value) for value in row] for row in self.x]


def is_connected_subset(graph: nx.Graph, nodes: Iterable[int]) -> bool:
    """Vrai si l'ensemble (non vide) induit un sous-graphe connexe."""
    members = list(nodes)
    if not members:
        return False
    return bool(nx.is_connected(graph.subgraph(members)))


def _check_clustering_indices(instance: Instance, clustering: Clustering) -> None:
    for cluster in clustering:
        for v in (cluster.center, *cluster.members):
            if not 0 <= v < instance.n:
                raise StructuralError(f"Noeud {v} hors de l'instance (n = {instance.n})")


def evaluate_cost(instance: Instance, clustering: Clustering) -> Number:
    """
    Coût k-médiane : somme des distances membre-centre, chaque appartenance comptant.

    Args:
        instance (Instance): Instance du problème
        clustering (Clustering): Solution à évaluer

    Returns:
        Number: Coût total (exact en mode rationnel)
    """
    _check_clustering_indices(instance, clustering)
    total: Number = 0
    for cluster in clustering:
        row = instance.dist[cluster.center]
        for v in cluster.members:
            total += row[v]
    return total


@dataclass
class ValidationReport:
    violations: List[Dict[str, Any]]

    @property
    def feasible(self) -> bool:
        return not self.violations

    def kinds(self) -> List[str]:
        return [violation["kind"] for violation in self.violations]

    def to_dict(self) -> Dict[str, Any]:
        return {"feasible": self.feasible, "violations": self.violations}


def validate(
    instance: Instance,
    clustering: Clustering,
    variant: Union[str, Variant] = Variant.NON_DISJOINT,
    k: Optional[int] = None,
) -> ValidationReport:
    """
    Liste toutes les contraintes violées par une solution ; rapport vide si réalisable.

    Args:
        instance (Instance): Instance du problème
        clustering (Clustering): Solution à vérifier
        variant: "disjoint" ou "non-disjoint"
        k (int, optional): Nombre maximal de clusters, instance.k par défaut

    Returns:
        ValidationReport: Violations détectées
    """
    variant = Variant.parse(variant)
    limit = instance.k if k is None else k
    violations: List[Dict[str, Any]] = []

    for index, cluster in enumerate(clustering):
        bad = sorted(v for v in (cluster.center, *cluster.members) if not 0 <= v < instance.n)
        if bad:
            violations.append({"kind": "index", "cluster": index, "nodes": bad})
            continue
        if cluster.center not in cluster.members:
            violations.append({"kind": "center_membership", "cluster": index, "center": cluster.center})
        if cluster.members and not is_connected_subset(instance.graph, cluster.members):
            violations.append({"kind": "connectivity", "cluster": index, "center": cluster.center})

    covered = set()
    for cluster in clustering:
        covered.update(cluster.members)
    uncovered = sorted(set(range(instance.n)) - covered)
    if uncovered:
        violations.append({"kind": "coverage", "nodes": uncovered})

    if variant is Variant.DISJOINT:
        seen: Dict[int, int] = {}
        shared = set()
        for index, cluster in enumerate(clustering):
            for v in cluster.members:
                if v in seen:
                    shared.add(v)
                seen.setdefault(v, index)
        if shared:
            violations.append({"kind": "disjointness", "nodes": sorted(shared)})

    if len(clustering) > limit:
        violations.append({"kind": "cluster_count", "count": len(clustering), "k": limit})

    if violations:
        logger.debug(f"Solution invalide : {[v['kind'] for v in violations]}")
    return ValidationReport(violations)


def fractional_cost(instance: Instance, x: Union[FractionalAssignment, np.ndarray]) -> float:
    """Coût Σ d(v,c)·x[v][c] d'une affectation fractionnaire."""
    matrix = x.x if isinstance(x, FractionalAssignment) else np.asarray(x, dtype=float)
    if matrix.shape != (instance.n, instance.n):
        raise StructuralError(f"Affectation de forme {matrix.shape} pour une instance à {instance.n} noeuds")
    return float(np.sum(instance.dist_array(float) * matrix))


def check_fractional(
    instance: Instance,
    x: Union[FractionalAssignment, np.ndarray],
    k: Optional[int] = None,
    tol: Optional[float] = None,
) -> List[str]:
    """
    Vérifie les invariants d'une affectation fractionnaire.

    Returns:
        List[str]: Descriptions des violations (vide si tout va bien)
    """
    matrix = x.x if isinstance(x, FractionalAssignment) else np.asarray(x, dtype=float)
    tol = config.tolerance() if tol is None else tol
    problems = []
    if matrix.shape != (instance.n, instance.n):
        return [f"forme {matrix.shape} au lieu de {(instance.n, instance.n)}"]
    sums = matrix.sum(axis=1)
    for v in np.flatnonzero(sums < 1 - tol):
        problems.append(f"couverture du noeud {v} : {sums[v]:.9g} < 1")
    if (matrix < -tol).any():
        problems.append("valeurs négatives")
    if (matrix > 1 + tol).any():
        problems.append("valeurs supérieures à 1")
    if k is not None and np.trace(matrix) > k + tol:
        problems.append(f"ouvertures {np.trace(matrix):.9g} > k = {k}")
    return problems


def load_instance(path: Union[str, Path], rational: Optional[bool] = None) -> Instance:
    """Charge une instance JSON."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise StructuralError(f"JSON invalide dans {path} : {e}") from e
    return Instance.from_dict(data, rational)


def save_instance(instance: Instance, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(instance.to_dict(), f, indent=2)


def load_clustering(path: Union[str, Path]) -> Clustering:
    """Charge une solution JSON ({"clusters": [...]}, champs supplémentaires ignorés)."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise StructuralError(f"JSON invalide dans {path} : {e}") from e
    return Clustering.from_dict(data)


def save_clustering(clustering: Clustering, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(clustering.to_dict(), f, indent=2)
