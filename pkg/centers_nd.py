"""
Recherche des centres pour la variante non disjointe, approximation O(k² log n).

Chaîne complète :
  1. LP des centres à flots (budget Σ x_c^c ≤ k), solution x̃ ;
  2. rayons moyens r_v = p_v / m_v ;
  3. demi-ouverture : les noeuds sont traités par rayon croissant, deviennent
     centres ou rejoignent l'environnement S_c d'un centre, et l'ouverture des
     autres noeuds est déplacée vers les centres par des transferts (shifts)
     qui mettent x à jour par les accroissements de coupe Δ et y par des
     incréments plafonnés ;
  4. séparation des centres en C1 / C1/2 avec successeurs ;
  5. cassure des cycles impairs et bipartition du graphe des successeurs ;
  6. construction de z sur au plus k centres, 1/(16k)-connexe ;
  7. mise à l'échelle par 16k et intégralisation par arbres de Steiner.

Tous les argmin départagent par (valeur, plus petit indice, plus petit partenaire).
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Set, Tuple, Union

import networkx as nx
import numpy as np

from assign_nd import AssignmentResult, integralize
from config_manager import config
from core import Clustering, FractionalAssignment, Instance, evaluate_cost, number_to_json
from cuts import marginals, separation
from errors import ContractError, InvariantViolation
from lp import solve_flow_lp

logger = logging.getLogger(__name__)


def _matrix(x: Union[FractionalAssignment, np.ndarray]) -> np.ndarray:
    return np.array(x.x if isinstance(x, FractionalAssignment) else x, dtype=float)


@dataclass
class RadiiProfile:
    mass: np.ndarray
    price: np.ndarray
    radius: np.ndarray

    def order(self) -> List[int]:
        """Noeuds triés par (r_v, indice), ordre de la file Q."""
        return sorted(range(len(self.radius)), key=lambda v: (float(self.radius[v]), v))

    def good_mass(self, instance: Instance, x: Union[FractionalAssignment, np.ndarray]) -> np.ndarray:
        """Σ_{c : d(v,c) ≤ 4 r_v} x_v^c pour chaque v."""
        matrix = _matrix(x)
        dist = instance.dist_array(float)
        good = dist <= 4 * self.radius[:, None] + 1e-12
        return np.asarray((matrix * good).sum(axis=1))

    def to_dict(self) -> Dict[str, List[float]]:
        return {"mass": self.mass.tolist(), "price": self.price.tolist(), "radius": self.radius.tolist()}


def compute_radii(instance: Instance, x_tilde: Union[FractionalAssignment, np.ndarray]) -> RadiiProfile:
    """
    Masse, prix et rayon moyen de chaque noeud.

    Args:
        instance (Instance): Instance du problème
        x_tilde: Affectation fractionnaire (lignes de somme ≥ 1)

    Returns:
        RadiiProfile: m_v, p_v et r_v

    Raises:
        ContractError: Si un noeud a une masse nulle
    """
    matrix = _matrix(x_tilde)
    if matrix.shape != (instance.n, instance.n):
        raise ContractError(f"Affectation de forme {matrix.shape} pour n = {instance.n}")
    mass = matrix.sum(axis=1)
    empty = np.flatnonzero(mass <= 0)
    if len(empty):
        raise ContractError(f"Masse nulle pour les noeuds {empty.tolist()}")
    if (mass < 1 - config.audit_tolerance()).any():
        logger.warning("Certaines lignes de x̃ ont une masse inférieure à 1")
    price = (matrix * instance.dist_array(float)).sum(axis=1)
    return RadiiProfile(mass, price, price / mass)


@dataclass
class ShiftRecord:
    step: int
    source: int
    center: int
    via: int
    amount: float
    distance: float
    r_next: Optional[float]


class HalfOpenState:
    """État mutable de la demi-ouverture : x, y indicé par (c', c), D, u, centres et environnements."""

    def __init__(self, instance: Instance, x_tilde: Union[FractionalAssignment, np.ndarray], k: int, radii: Optional[RadiiProfile] = None):
        self.instance = instance
        self.n = instance.n
        self.k = k
        self.zero = config.zero_threshold()
        matrix = np.clip(_matrix(x_tilde), 0.0, 1.0)
        matrix[matrix < self.zero] = 0.0
        self.x_tilde = matrix
        self.x = matrix.copy()
        self.radii = radii or compute_radii(instance, matrix)
        self.dist = instance.dist_array(float)
        self.y: Dict[Tuple[int, int], np.ndarray] = {}
        self.u: Dict[Tuple[int, int], np.ndarray] = {}
        self.D: Dict[int, Set[int]] = {c: set() for c in range(self.n)}
        self.centers: List[int] = []
        self.env: Dict[int, List[int]] = {}
        self.queue: List[int] = self.radii.order()
        self.r_star = 0.0
        self.r_next = math.inf
        self.trace: List[ShiftRecord] = []
        self.events: List[Dict[str, Any]] = []

    def open_center(self, v: int) -> None:
        if v in self.env:
            raise ContractError(f"{v} est déjà un centre")
        self.centers.append(v)
        self.env[v] = [v]

    def attach(self, v: int, c: int) -> None:
        """Ajoute v à l'environnement S_c."""
        if c not in self.env:
            raise ContractError(f"{c} n'est pas un centre")
        if v not in self.env[c]:
            self.env[c].append(v)
            self.env[c].sort()

    def y_total(self) -> np.ndarray:
        """Y[v][c] = Σ_{c'} y_v^{c',c}."""
        total = np.zeros((self.n, self.n))
        for (_, c), column in self.y.items():
            total[:, c] += column
        return total

    def shift_source(self, c: int, c_prime: int) -> Optional[int]:
        """Plus petit ṽ de S_c avec x[ṽ][c'] > 0, ou None."""
        for v in self.env[c]:
            if self.x[v, c_prime] > self.zero:
                return v
        return None

    def cheapest_shift(self) -> Optional[Tuple[float, int, int]]:
        """Transfert possible de distance minimale : (d(c,c'), c, c')."""
        best: Optional[Tuple[float, int, int]] = None
        for c in sorted(self.centers):
            rows = self.x[self.env[c], :]
            for c_prime in np.flatnonzero((rows > self.zero).any(axis=0)):
                key = (float(self.dist[c, c_prime]), c, int(c_prime))
                if best is None or key < best:
                    best = key
        return best

    def apply_shift(self, c_prime: int, c: int, v_tilde: int) -> ShiftRecord:
        """
        Déplace l'ouverture de c' vers le centre c en passant par ṽ ∈ S_c.

        Args:
            c_prime (int): Noeud dont l'ouverture est déplacée
            c (int): Centre destinataire
            v_tilde (int): Noeud de l'environnement de c

        Returns:
            ShiftRecord: Trace du transfert
        """
        if c not in self.env:
            raise ContractError(f"{c} n'est pas un centre")
        if v_tilde not in self.env[c]:
            raise ContractError(f"{v_tilde} n'appartient pas à l'environnement de {c}")
        amount = float(self.x[v_tilde, c_prime])
        if amount <= 0:
            raise ContractError(f"x[{v_tilde}][{c_prime}] est nul, transfert impossible")

        key = (c_prime, c)
        if key not in self.y:
            self.y[key] = np.zeros(self.n)
        if self.y[key][c] == 0:
            self.u[key] = self.x[:, c_prime].copy()

        self.D[c_prime].add(v_tilde)
        column = np.asarray(marginals(self.instance.graph, self.x_tilde[:, c_prime], self.D[c_prime], {c_prime}), dtype=float)
        column[column < self.zero] = 0.0
        self.x[:, c_prime] = column

        y = self.y[key]
        y[c] += amount
        others = np.arange(self.n) != c
        y[others] = np.minimum(self.u[key][others], y[c])

        record = ShiftRecord(
            step=len(self.trace),
            source=c_prime,
            center=c,
            via=v_tilde,
            amount=amount,
            distance=float(self.dist[c, c_prime]),
            r_next=None if math.isinf(self.r_next) else float(self.r_next),
        )
        self.trace.append(record)
        logger.debug(f"Transfert {c_prime} -> {c} via {v_tilde} : {amount:.6g}")
        return record


def apply_shift(state: HalfOpenState, c_prime: int, c: int, v_tilde: int) -> HalfOpenState:
    """Forme fonctionnelle de HalfOpenState.apply_shift ; renvoie l'état mis à jour."""
    state.apply_shift(c_prime, c, v_tilde)
    return state


class InvariantAuditor:
    """Vérifie les invariants de la demi-ouverture et lève InvariantViolation au premier écart."""

    def __init__(self, state: HalfOpenState, tol: Optional[float] = None):
        self.state = state
        self.tol = config.audit_tolerance() if tol is None else tol
        self.checks = 0

    def _fail(self, message: str) -> None:
        logger.error(f"Invariant violé : {message}")
        raise InvariantViolation(message)

    def check_coverage(self) -> None:
        totals = (self.state.x + self.state.y_total()).sum(axis=1)
        for v in np.flatnonzero(totals < 1 - self.tol):
            self._fail(f"couverture du noeud {v} : {totals[v]:.9g} < 1")

    def check_budget(self) -> None:
        total = float(np.trace(self.state.x) + np.trace(self.state.y_total()))
        if total > self.state.k + self.tol:
            self._fail(f"ouvertures x + y = {total:.9g} > k = {self.state.k}")

    def check_x_connectivity(self, columns: Optional[List[int]] = None) -> None:
        state = self.state
        for c in range(state.n) if columns is None else columns:
            weights = state.x[:, c]
            for v in np.flatnonzero(weights > state.zero):
                if v == c:
                    continue
                value = separation(state.instance.graph, weights, {int(v)}, {c})
                if value < weights[v] - self.tol:
                    self._fail(f"sep^x({v},{c}) = {value:.9g} < x = {weights[v]:.9g}")

    def check_y_connectivity(self, columns: Optional[List[int]] = None) -> None:
        state = self.state
        total = state.y_total()
        threshold = 1.0 / (8 * state.k)
        for c in state.centers if columns is None else columns:
            weights = total[:, c]
            for v in np.flatnonzero(weights > self.tol):
                if v == c:
                    continue
                value = separation(state.instance.graph, weights, {int(v)}, {c})
                if value < min(threshold, weights[v]) - self.tol:
                    self._fail(f"sep^y({v},{c}) = {value:.9g} < min(1/8k, {weights[v]:.9g})")

    def check_marginals(self, c_prime: int) -> None:
        state = self.state
        if not state.D[c_prime]:
            return
        expected = np.asarray(marginals(state.instance.graph, state.x_tilde[:, c_prime], state.D[c_prime], {c_prime}), dtype=float)
        expected[expected < state.zero] = 0.0
        gap = np.abs(expected - state.x[:, c_prime]).max()
        if gap > self.tol:
            self._fail(f"x[·][{c_prime}] s'écarte de Δ(D, ·, {c_prime}) de {gap:.3g}")

    def check_initial(self) -> None:
        self.check_coverage()
        self.check_budget()
        self.check_x_connectivity()
        self.checks += 1

    def after_shift(self, c_prime: int, c: int) -> None:
        self.check_coverage()
        self.check_budget()
        self.check_x_connectivity([c_prime])
        self.check_y_connectivity([c])
        self.check_marginals(c_prime)
        self.checks += 1


@dataclass
class HalfOpenResult:
    y: Dict[Tuple[int, int], np.ndarray]
    y_total: np.ndarray
    centers: List[int]
    env: Dict[int, List[int]]
    trace: List[ShiftRecord]
    events: List[Dict[str, Any]]
    x_tilde: np.ndarray
    radii: RadiiProfile
    audits: int = 0

    @property
    def shifts(self) -> int:
        return len(self.trace)

    def cost_y(self, instance: Instance) -> float:
        return float((instance.dist_array(float) * self.y_total).sum())

    def cost_x_tilde(self, instance: Instance) -> float:
        return float((instance.dist_array(float) * self.x_tilde).sum())


def _audit_enabled(instance: Instance, audit: Optional[bool]) -> bool:
    if audit is not None:
        return audit
    mode = config.get_setting("centers.audit", "auto")
    if mode == "on":
        return True
    if mode == "off":
        return False
    return instance.n <= int(config.get_setting("centers.audit_max_nodes", 12))


def half_open(
    instance: Instance,
    x_tilde: Union[FractionalAssignment, np.ndarray],
    k: int,
    radii: Optional[RadiiProfile] = None,
    audit: Optional[bool] = None,
) -> HalfOpenResult:
    """
    Demi-ouverture des centres par transferts d'ouverture.

    Args:
        instance (Instance): Instance du problème
        x_tilde: Solution optimale du LP des centres
        k (int): Budget de centres
        radii (RadiiProfile, optional): Rayons déjà calculés
        audit (bool, optional): Audit des invariants après chaque transfert

    Returns:
        HalfOpenResult: y, centres C, environnements et trace

    Raises:
        InvariantViolation: Aucun centre éligible, file épuisée ou plafond de transferts dépassé
    """
    state = HalfOpenState(instance, x_tilde, k, radii)
    auditor = InvariantAuditor(state) if _audit_enabled(instance, audit) else None
    if auditor:
        auditor.check_initial()
    tol = config.audit_tolerance()
    radius = state.radii.radius
    cap = state.n * state.n + 1

    while (state.x > state.zero).any():
        if not state.queue:
            raise InvariantViolation("File vide alors que x n'est pas nul")
        v = state.queue.pop(0)
        state.r_star = float(radius[v])
        near = state.dist[:, v] <= 4 * state.r_star + 1e-12
        if state.x[v, near].sum() >= 0.5 - tol:
            state.open_center(v)
            state.events.append({"node": v, "radius": state.r_star, "action": "center"})
            logger.debug(f"Noeud {v} (r = {state.r_star:.6g}) devient centre")
        else:
            totals = state.y_total()
            eligible = [c for c in state.centers if totals[v, c] >= 1.0 / (8 * k) - tol]
            if not eligible:
                raise InvariantViolation(f"Aucun centre éligible pour le noeud {v}")
            c_star = min(eligible, key=lambda c: (float(state.dist[v, c]), c))
            state.attach(v, c_star)
            state.events.append({"node": v, "radius": state.r_star, "action": "environment", "center": c_star})

        state.r_next = float(radius[state.queue[0]]) if state.queue else math.inf
        while True:
            best = state.cheapest_shift()
            if best is None or best[0] > 4 * state.r_next + 1e-12:
                break
            _, c, c_prime = best
            v_tilde = state.shift_source(c, c_prime)
            while v_tilde is not None:
                state.apply_shift(c_prime, c, v_tilde)
                if len(state.trace) > cap:
                    raise InvariantViolation(f"Plus de {cap - 1} transferts : arrêt")
                if auditor:
                    auditor.after_shift(c_prime, c)
                v_tilde = state.shift_source(c, c_prime)

    logger.info(f"Demi-ouverture : {len(state.centers)} centres, {len(state.trace)} transferts")
    return HalfOpenResult(
        y=state.y,
        y_total=state.y_total(),
        centers=list(state.centers),
        env={c: list(members) for c, members in state.env.items()},
        trace=state.trace,
        events=state.events,
        x_tilde=state.x_tilde,
        radii=state.radii,
        audits=auditor.checks if auditor else 0,
    )


def replacement_cost(instance: Instance, y: np.ndarray, c: int, c_tilde: int, k: int) -> float:
    """
    Coût de remplacement R(c, c̃) du centre c par c̃.

    Args:
        instance (Instance): Instance du problème
        y (np.ndarray): Matrice agrégée Y[v][c]
        c (int): Centre remplacé
        c_tilde (int): Centre remplaçant
        k (int): Budget

    Returns:
        float: M_c·d(c,c̃), plus le coût de mise à l'échelle si Y_c^{c̃} < 1/(16k)

    Raises:
        ContractError: Si Y_c^{c̃} est nul
    """
    link = float(y[c, c_tilde])
    if link <= 0:
        raise ContractError(f"Y[{c}][{c_tilde}] est nul")
    dist = instance.dist_array(float)
    base = float(y[:, c].sum()) * float(dist[c, c_tilde])
    threshold = 1.0 / (16 * k)
    if link >= threshold:
        return base
    spread = float((y[:, c_tilde] * dist[:, c_tilde]).sum())
    return base + spread / link * threshold


@dataclass
class CenterSplit:
    c1: List[int]
    c_half: List[int]
    successor: Dict[int, int]
    a: Dict[int, float]
    phi: Dict[int, float]
    mass: Dict[int, float]
    high: List[int]
    opened: List[int]
    loop_heads: List[float] = field(default_factory=list)
    replacements: List[Dict[str, Any]] = field(default_factory=list)


def split_centers(
    instance: Instance, y: np.ndarray, centers: List[int], k: int, radii: RadiiProfile, tol: Optional[float] = None
) -> CenterSplit:
    """
    Répartit les centres en C1 (ouverts) et C1/2 (demi-ouverts avec successeur).

    Returns:
        CenterSplit: C1, C1/2, successeurs, a_c, Φ_c et masses

    Raises:
        InvariantViolation: Centre sans successeur éligible ou invariant de budget violé
    """
    tol = config.audit_tolerance() if tol is None else tol
    dist = instance.dist_array(float)
    cost_y = float((dist * y).sum())
    mass = {c: float(y[:, c].sum()) for c in centers}
    a = {c: float(min(1.0, max(0.0, 1.0 - y[c, c]))) for c in centers}
    phi = {c: 3 * mass[c] * float(radii.radius[c]) + cost_y / (16 * k) for c in centers}
    high = sorted(c for c in centers if y[c, c] < 0.75)
    opened = sorted(c for c in centers if y[c, c] >= 0.75)

    successor: Dict[int, int] = {}
    c_half: List[int] = []
    for c in high:
        eligible = [ct for ct in centers if ct != c and y[c, ct] >= 1.0 / (16 * k) - tol]
        if not eligible:
            raise InvariantViolation(f"Centre {c} à moins de 3/4 sans successeur éligible")
        successor[c] = min(eligible, key=lambda ct: (float(dist[c, ct]), ct))
        c_half.append(c)

    remaining = list(opened)
    c1: List[int] = []
    split = CenterSplit(c1, c_half, successor, a, phi, mass, high, opened)
    while len(remaining) + len(c1) + 0.5 * len(c_half) > k:
        head = len(c1) + 0.5 * len(c_half) + sum(float(y[c, c]) for c in remaining)
        split.loop_heads.append(head)
        if head > k + tol:
            raise InvariantViolation(f"|C1| + |C1/2|/2 + Σ y_c^c = {head:.9g} > k = {k}")
        candidates = [c for c in remaining if a[c] > 1e-9]
        if not candidates:
            raise InvariantViolation("Aucun centre de O' remplaçable")
        c = min(candidates, key=lambda ct: (phi[ct] / a[ct], ct))
        partners = [ct for ct in centers if ct != c and y[c, ct] > tol]
        if not partners:
            raise InvariantViolation(f"Centre {c} sans partenaire de remplacement")
        costs = {ct: replacement_cost(instance, y, c, ct, k) for ct in partners}
        successor[c] = min(partners, key=lambda ct: (costs[ct], ct))
        remaining.remove(c)
        c_half.append(c)

        node = successor[c]
        seen = {c}
        while node in successor and node not in seen:
            seen.add(node)
            node = successor[node]
        promoted = None
        if node in remaining:
            remaining.remove(node)
            c1.append(node)
            promoted = node
        split.replacements.append({
            "center": c, "successor": successor[c], "cost": costs[successor[c]], "promoted": promoted,
        })
        logger.debug(f"Centre {c} remplacé par {successor[c]} (R = {costs[successor[c]]:.6g})")

    split.loop_heads.append(len(c1) + 0.5 * len(c_half) + sum(float(y[c, c]) for c in remaining))
    c1.extend(remaining)
    c1.sort()
    logger.info(f"Séparation : |C1| = {len(c1)}, |C1/2| = {len(c_half)}")
    return split


@dataclass
class Bipartition:
    f: List[int]
    successor: Dict[int, int]
    cycles: List[List[int]]
    rewired: List[Dict[str, Any]]
    c1_final: List[int]
    c0: List[int]


def _successor_cycles(nodes: List[int], successor: Dict[int, int]) -> List[List[int]]:
    """Cycles du graphe fonctionnel restreint à C1/2, chacun dans l'ordre de parcours."""
    state: Dict[int, int] = {}
    cycles = []
    node_set = set(nodes)
    for start in sorted(nodes):
        if start in state:
            continue
        path = []
        node = start
        while node in node_set and node not in state:
            state[node] = 1
            path.append(node)
            node = successor[node]
        if node in node_set and state.get(node) == 1:
            cycle = path[path.index(node):]
            pivot = cycle.index(min(cycle))
            cycles.append(cycle[pivot:] + cycle[:pivot])
        for visited in path:
            state[visited] = 2
    return cycles


def break_cycles_bipartition(instance: Instance, split: CenterSplit) -> Bipartition:
    """
    Rend le graphe des successeurs biparti puis choisit F, le plus petit côté de chaque composante.

    Returns:
        Bipartition: F, successeurs mis à jour, cycles traités, C1 final et C0

    Raises:
        InvariantViolation: Cycle contenant au moins deux centres de O
    """
    dist = instance.dist_array(float)
    successor = dict(split.successor)
    opened = set(split.opened)
    half = sorted(split.c_half)
    cycles = _successor_cycles(half, successor)
    rewired = []
    for cycle in cycles:
        o_nodes = [v for v in cycle if v in opened]
        if len(o_nodes) >= 2:
            raise InvariantViolation(f"Cycle {cycle} avec plusieurs centres de O : {o_nodes}")
        if len(cycle) % 2 == 0:
            continue
        c = o_nodes[0] if o_nodes else min(cycle)
        position = cycle.index(c)
        p = cycle[position - 1]
        g = cycle[position - 2]
        if dist[g, p] <= dist[p, c]:
            successor[p] = g
            rewired.append({"cycle": cycle, "node": p, "successor": g})
        else:
            successor[g] = c
            rewired.append({"cycle": cycle, "node": g, "successor": c})
        logger.debug(f"Cycle impair {cycle} recâblé : {rewired[-1]}")

    graph = nx.Graph()
    graph.add_nodes_from(half)
    graph.add_edges_from((c, successor[c]) for c in half if successor[c] in graph)
    f: List[int] = []
    for component in sorted((sorted(part) for part in nx.connected_components(graph)), key=lambda part: part[0]):
        sub = graph.subgraph(component)
        try:
            colors = nx.bipartite.color(sub)
        except nx.NetworkXError as e:
            raise InvariantViolation(f"Composante {component} non bipartie après recâblage") from e
        sides = [sorted(v for v in component if colors[v] == side) for side in (0, 1)]
        smaller = min(sides, key=lambda side: (len(side), side[0] if side else math.inf))
        f.extend(smaller)
    f.sort()
    c1_final = sorted(set(split.c1) | set(f))
    c0 = sorted(set(half) - set(f))
    return Bipartition(f, successor, cycles, rewired, c1_final, c0)


def integralize_centers(
    instance: Instance,
    y: np.ndarray,
    c1_final: List[int],
    c0: List[int],
    successor: Dict[int, int],
    k: int,
    opened: Optional[List[int]] = None,
) -> FractionalAssignment:
    """
    Construit z sur les colonnes C1 final : diagonale à 1, mise à l'échelle par α_c, fusion des colonnes de C0.

    Raises:
        InvariantViolation: Plus de k centres, ou successeur hors de C1 final
    """
    if len(c1_final) > k:
        raise InvariantViolation(f"{len(c1_final)} centres retenus pour k = {k}")
    opened_set = set(opened or [])
    final = set(c1_final)
    z = np.zeros((instance.n, instance.n))
    for c in c1_final:
        column = y[:, c].copy()
        weights = [
            1.0 / (16 * k * y[ct, c]) for ct in c0
            if ct in opened_set and successor.get(ct) == c and y[ct, c] > 0
        ]
        alpha = max(weights, default=0.0)
        if alpha > 1:
            column = np.minimum(1.0, alpha * column)
        column[c] = 1.0
        z[:, c] = column
    for c in c0:
        target = successor.get(c)
        if target not in final:
            raise InvariantViolation(f"Successeur {target} de {c} hors de C1 final")
        z[:, target] = np.minimum(1.0, z[:, target] + y[:, c])
    return FractionalAssignment(z)


@dataclass
class BoundCheck:
    name: str
    value: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.value <= self.bound + config.audit_tolerance()


def half_open_bounds(instance: Instance, result: HalfOpenResult, k: int) -> List[BoundCheck]:
    """Bornes garanties en fin de demi-ouverture (x̃ optimal)."""
    y = result.y_total
    dist = instance.dist_array(float)
    radius = result.radii.radius
    cost_x = result.cost_x_tilde(instance)
    checks = [
        BoundCheck("half_opened", -min((float(y[c, c]) for c in result.centers), default=1.0), -0.5),
        BoundCheck("center_count", float(len(result.centers)), float(2 * k)),
        BoundCheck("cost_y", result.cost_y(instance), 20 * k * cost_x),
        BoundCheck("shift_by_radius", float(sum(y[:, c].sum() * radius[c] for c in result.centers)), 4.5 * k * cost_x),
        BoundCheck("shift_count", float(result.shifts), float(instance.n ** 2)),
    ]
    worst = -math.inf
    for (c_prime, c), column in result.y.items():
        for v in np.flatnonzero(column > config.zero_threshold()):
            worst = max(worst, float(radius[c] - 0.25 * dist[v, c_prime] - 2 * radius[v]))
    checks.append(BoundCheck("radius_shift", worst if worst > -math.inf else 0.0, 0.0))

    deficit = 0.0
    for (c_prime, c), column in result.y.items():
        targets = set(result.env[c])
        for v in np.flatnonzero(column > config.zero_threshold()):
            if int(v) in targets:
                continue
            value = separation(instance.graph, column, {int(v)}, targets)
            deficit = max(deficit, float(column[v] - value))
    checks.append(BoundCheck("shift_cut", deficit, 0.0))
    return checks


def split_bounds(instance: Instance, result: HalfOpenResult, split: CenterSplit, k: int) -> List[BoundCheck]:
    """Bornes de la séparation des centres : potentiel, remplacement et budget."""
    y = result.y_total
    cost_x = result.cost_x_tilde(instance)
    cost_y = result.cost_y(instance)
    checks = [
        BoundCheck("budget_at_exit", float(len(split.c1) + 0.5 * len(split.c_half)), float(k)),
        BoundCheck("loop_heads", max(split.loop_heads, default=0.0), float(k)),
        BoundCheck("potential", float(sum(split.phi[c] for c in split.opened)), 13.5 * k * cost_x + cost_y / 8),
    ]
    replaced = [c for c in split.c_half if c in set(split.opened)]
    total = sum(replacement_cost(instance, y, c, split.successor[c], k) for c in replaced)
    checks.append(BoundCheck("replacement_total", float(total), 27 * k * cost_x + cost_y / 4))
    worst = -math.inf
    for c in split.opened:
        if split.a[c] <= 1e-9:
            continue
        partners = [ct for ct in result.centers if ct != c and y[c, ct] > 0]
        if partners:
            best = min(replacement_cost(instance, y, c, ct, k) for ct in partners)
            worst = max(worst, best - split.phi[c] / split.a[c])
    checks.append(BoundCheck("replacement_potential", worst if worst > -math.inf else 0.0, 0.0))
    return checks


class CenterFindingResult(AssignmentResult):
    """Résultat de find_centers avec les artefacts de chaque étape."""

    def __init__(
        self,
        base: AssignmentResult,
        x_tilde: np.ndarray,
        radii: RadiiProfile,
        half: HalfOpenResult,
        split: CenterSplit,
        bipartition: Bipartition,
        z: FractionalAssignment,
        bounds: List[BoundCheck],
    ):
        super().__init__(base.clustering, base.lp_value, base.terminal_sets, base.cost, base.stats)
        self.x_tilde = x_tilde
        self.radii = radii
        self.half = half
        self.split = split
        self.bipartition = bipartition
        self.z = z
        self.bounds = bounds

    def to_trace(self) -> Dict[str, Any]:
        """Artefacts sérialisables pour l'inspection hors ligne."""
        return {
            "lp_value": self.lp_value,
            "x_tilde": self.x_tilde.tolist(),
            "radii": self.radii.to_dict(),
            "centers": self.half.centers,
            "environments": {str(c): members for c, members in self.half.env.items()},
            "events": self.half.events,
            "shifts": [asdict(record) for record in self.half.trace],
            "y": self.half.y_total.tolist(),
            "split": {
                "c1": self.split.c1,
                "c_half": self.split.c_half,
                "successor": {str(c): s for c, s in self.split.successor.items()},
                "a": {str(c): value for c, value in self.split.a.items()},
                "phi": {str(c): value for c, value in self.split.phi.items()},
                "loop_heads": self.split.loop_heads,
                "replacements": self.split.replacements,
            },
            "bipartition": {
                "f": self.bipartition.f,
                "cycles": self.bipartition.cycles,
                "rewired": self.bipartition.rewired,
                "c1_final": self.bipartition.c1_final,
                "c0": self.bipartition.c0,
            },
            "z": self.z.to_list(),
            "bounds": [
                {"name": check.name, "value": check.value, "bound": check.bound, "holds": check.holds}
                for check in self.bounds
            ],
            "clusters": self.clustering.to_dict()["clusters"],
            "cost": number_to_json(self.cost),
        }


def save_trace(result: CenterFindingResult, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(result.to_trace(), f, indent=2)


def find_centers(instance: Instance, k: Optional[int] = None, audit: Optional[bool] = None) -> CenterFindingResult:
    """
    Chaîne complète de recherche des centres pour la variante non disjointe.

    Args:
        instance (Instance): Instance du problème
        k (int, optional): Budget de centres, instance.k par défaut
        audit (bool, optional): Audit des invariants (par défaut selon centers.audit)

    Returns:
        CenterFindingResult: Clustering réalisable à au plus k centres et artefacts

    Raises:
        InfeasibleError: LP des centres infaisable (plus de k composantes)
        InvariantViolation: Une étape a perdu un invariant
    """
    budget = instance.k if k is None else k
    x, lp_value = solve_flow_lp(instance, k=budget)
    x_tilde = np.clip(x.x, 0.0, 1.0)
    x_tilde[x_tilde < config.zero_threshold()] = 0.0
    radii = compute_radii(instance, x_tilde)
    half = half_open(instance, x_tilde, budget, radii, audit)
    y = half.y_total
    split = split_centers(instance, y, half.centers, budget, radii)
    bipartition = break_cycles_bipartition(instance, split)
    z = integralize_centers(
        instance, y, bipartition.c1_final, bipartition.c0, bipartition.successor, budget, split.opened
    )
    scaled = np.minimum(1.0, 16 * budget * z.x)
    clusters, terminal_sets = integralize(instance, scaled, bipartition.c1_final)

    clustering = Clustering.from_pairs(sorted(clusters.items()))
    cost = evaluate_cost(instance, clustering)
    bounds = half_open_bounds(instance, half, budget) + split_bounds(instance, half, split, budget)
    cost_x = half.cost_x_tilde(instance)
    bounds.append(BoundCheck("cost_z", float((instance.dist_array(float) * z.x).sum()), 196 * budget * cost_x))
    for check in bounds:
        if not check.holds:
            logger.warning(f"Borne {check.name} dépassée : {check.value:.6g} > {check.bound:.6g}")
    stats = {
        "centers": len(bipartition.c1_final),
        "half_open_centers": len(half.centers),
        "shifts": half.shifts,
        "audits": half.audits,
        "c1": len(split.c1),
        "c_half": len(split.c_half),
        "f": len(bipartition.f),
        "cost_x_tilde": cost_x,
        "cost_y": half.cost_y(instance),
    }
    base = AssignmentResult(clustering, lp_value, terminal_sets, cost, stats)
    logger.info(f"Recherche des centres : {len(bipartition.c1_final)} centres, coût {cost}")
    return CenterFindingResult(base, x_tilde, radii, half, split, bipartition, z, bounds)
