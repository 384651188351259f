"""
Programmes linéaires : représentation, résolution et formulations du problème.

Deux moteurs sont disponibles : un simplexe tabulaire dense à deux phases
(pivot de Dantzig, règle de Bland après une série de pivots dégénérés) pour
les petits programmes, et HiGHS via scipy pour les grands. Les formulations
fournies sont le LP d'affectation à flots, le LP des centres à flots (budget
d'ouverture k) et la résolution par plans coupants des LP à coupes, dont
l'oracle de séparation est une coupe minimale pondérée sur les noeuds.
"""

import itertools
import logging
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse
from scipy.optimize import linprog

from config_manager import config
from core import FractionalAssignment, Instance, fractional_cost
from cuts import CutQuery, sep, separation
from errors import ContractError, InfeasibleError, SolverError

logger = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

SENSES = ("<=", ">=", "=")

_EPS = 1e-9
_dump_counter = itertools.count()
_dump_lock = threading.Lock()


@dataclass
class Variable:
    name: str
    lower: float = 0.0
    upper: Optional[float] = None


@dataclass
class Constraint:
    coeffs: Dict[int, float]
    sense: str
    rhs: float
    name: str


class LinearProgram:
    """Programme de minimisation à variables nommées et contraintes creuses."""

    def __init__(self, name: str = "lp"):
        self.name = name
        self.variables: List[Variable] = []
        self.constraints: List[Constraint] = []
        self.objective: Dict[int, float] = {}
        self._index: Dict[str, int] = {}

    @property
    def num_variables(self) -> int:
        return len(self.variables)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def add_variable(self, name: str, lower: float = 0.0, upper: Optional[float] = None) -> int:
        """
        Déclare une variable.

        Args:
            name (str): Nom unique
            lower (float): Borne inférieure finie (0 par défaut)
            upper (float, optional): Borne supérieure

        Returns:
            int: Indice de la variable
        """
        if name in self._index:
            raise ContractError(f"Variable déjà déclarée : {name}")
        if not math.isfinite(lower) or (upper is not None and math.isnan(upper)):
            raise ContractError(f"Bornes invalides pour {name} : [{lower}, {upper}]")
        self._index[name] = len(self.variables)
        self.variables.append(Variable(name, float(lower), None if upper is None else float(upper)))
        return self._index[name]

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError as e:
            raise ContractError(f"Variable non déclarée : {name}") from e

    def has_variable(self, name: str) -> bool:
        return name in self._index

    def _resolve(self, coeffs: Mapping[str, float]) -> Dict[int, float]:
        resolved: Dict[int, float] = {}
        for name, coef in coeffs.items():
            coef = float(coef)
            if not math.isfinite(coef):
                raise ContractError(f"Coefficient non fini pour {name}")
            j = self.index(name)
            resolved[j] = resolved.get(j, 0.0) + coef
        return {j: coef for j, coef in resolved.items() if coef != 0.0}

    def set_objective(self, coeffs: Mapping[str, float]) -> None:
        self.objective = self._resolve(coeffs)

    def add_constraint(self, coeffs: Mapping[str, float], sense: str, rhs: float, name: Optional[str] = None) -> int:
        """
        Ajoute une contrainte linéaire Σ coeff·x (sense) rhs.

        Returns:
            int: Indice de la contrainte
        """
        if sense not in SENSES:
            raise ContractError(f"Sens de contrainte inconnu : {sense}")
        if not math.isfinite(rhs):
            raise ContractError("Second membre non fini")
        label = name or f"r{len(self.constraints)}"
        self.constraints.append(Constraint(self._resolve(coeffs), sense, float(rhs), label))
        return len(self.constraints) - 1

    def to_lp_format(self) -> str:
        """Texte au format CPLEX-LP (débogage)."""

        def terms(coeffs: Dict[int, float]) -> str:
            parts = [f"{coef:+.12g} {self.variables[j].name}" for j, coef in sorted(coeffs.items())]
            if not parts:
                return f"0 {self.variables[0].name}" if self.variables else "0"
            lines = [" ".join(parts[i:i + 8]) for i in range(0, len(parts), 8)]
            return "\n   ".join(lines)

        out = [f"\\ {self.name}", "Minimize", f" obj: {terms(self.objective)}", "Subject To"]
        for con in self.constraints:
            out.append(f" {con.name}: {terms(con.coeffs)} {con.sense} {con.rhs:.12g}")
        out.append("Bounds")
        for var in self.variables:
            if var.upper is None:
                out.append(f" {var.name} >= {var.lower:.12g}")
            else:
                out.append(f" {var.lower:.12g} <= {var.name} <= {var.upper:.12g}")
        out.append("End")
        return "\n".join(out) + "\n"

    def write_lp(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_lp_format())


@dataclass
class LpSolution:
    status: str
    values: Dict[str, float] = field(default_factory=dict)
    objective_value: Optional[float] = None
    backend: str = ""
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    def __getitem__(self, name: str) -> float:
        return self.values[name]


def _dense_rows(lp: LinearProgram) -> Tuple[np.ndarray, np.ndarray, List[str]]:
    a = np.zeros((lp.num_constraints, lp.num_variables))
    b = np.zeros(lp.num_constraints)
    senses = []
    for i, con in enumerate(lp.constraints):
        for j, coef in con.coeffs.items():
            a[i, j] = coef
        b[i] = con.rhs
        senses.append(con.sense)
    return a, b, senses


def _pivot(tableau: np.ndarray, i: int, j: int) -> None:
    tableau[i] /= tableau[i, j]
    column = tableau[:, j].copy()
    column[i] = 0.0
    tableau -= np.outer(column, tableau[i])
    tableau[np.abs(tableau) < 1e-13] = 0.0


def _iterate(tableau: np.ndarray, basis: List[int], cost: np.ndarray, allowed: np.ndarray, counter: List[int]) -> str:
    """Itérations du simplexe primal sur un tableau déjà en base réalisable."""
    width = tableau.shape[1] - 1
    reduced = cost - cost[basis] @ tableau[:, :width]
    max_pivots = int(config.get_setting("lp.max_pivots", 50000))
    streak_limit = int(config.get_setting("lp.degenerate_streak", 50))
    degenerate = 0
    while True:
        candidates = np.flatnonzero((reduced < -_EPS) & allowed)
        if len(candidates) == 0:
            return OPTIMAL
        if degenerate >= streak_limit:
            j = int(candidates[0])
        else:
            j = int(candidates[np.argmin(reduced[candidates])])
        column = tableau[:, j]
        rows = np.flatnonzero(column > _EPS)
        if len(rows) == 0:
            return UNBOUNDED
        ratios = tableau[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12]
        i = int(min(ties, key=lambda r: basis[r]))
        degenerate = degenerate + 1 if best <= _EPS else 0
        _pivot(tableau, i, j)
        reduced -= reduced[j] * tableau[i, :width]
        basis[i] = j
        counter[0] += 1
        if counter[0] > max_pivots:
            raise SolverError(f"Plus de {max_pivots} pivots pour le LP")


def _solve_simplex(lp: LinearProgram) -> LpSolution:
    """Simplexe tabulaire dense à deux phases, déterministe."""
    n = lp.num_variables
    lower = np.array([var.lower for var in lp.variables])
    a, b, senses = _dense_rows(lp)
    b = b - a @ lower if n else b

    rows: List[np.ndarray] = []
    rhs: List[float] = []
    kinds: List[str] = []
    for i, sense in enumerate(senses):
        if sense == "=":
            rows.extend([a[i], a[i]])
            rhs.extend([b[i], b[i]])
            kinds.extend(["<=", ">="])
        else:
            rows.append(a[i])
            rhs.append(b[i])
            kinds.append(sense)
    for j, var in enumerate(lp.variables):
        if var.upper is not None:
            if var.upper < var.lower - _EPS:
                return LpSolution(INFEASIBLE, backend="simplex")
            unit = np.zeros(n)
            unit[j] = 1.0
            rows.append(unit)
            rhs.append(var.upper - var.lower)
            kinds.append("<=")

    m = len(rows)
    for i in range(m):
        if rhs[i] < 0:
            rows[i] = -rows[i]
            rhs[i] = -rhs[i]
            kinds[i] = ">=" if kinds[i] == "<=" else "<="
    n_slack = m
    n_art = sum(1 for kind in kinds if kind == ">=")
    width = n + n_slack + n_art
    tableau = np.zeros((m, width + 1))
    basis: List[int] = []
    artificial = np.zeros(width, dtype=bool)
    art_col = n + n_slack
    for i in range(m):
        tableau[i, :n] = rows[i]
        tableau[i, -1] = rhs[i]
        if kinds[i] == "<=":
            tableau[i, n + i] = 1.0
            basis.append(n + i)
        else:
            tableau[i, n + i] = -1.0
            tableau[i, art_col] = 1.0
            artificial[art_col] = True
            basis.append(art_col)
            art_col += 1

    counter = [0]
    allowed = np.ones(width, dtype=bool)
    if n_art:
        phase_one = artificial.astype(float)
        status = _iterate(tableau, basis, phase_one, allowed, counter)
        infeasibility = float(phase_one[basis] @ tableau[:, -1])
        scale = max(1.0, float(np.max(np.abs(tableau[:, -1]))) if m else 1.0)
        if status != OPTIMAL or infeasibility > 1e-8 * scale:
            logger.debug(f"LP {lp.name} infaisable (phase 1 = {infeasibility:.3g})")
            return LpSolution(INFEASIBLE, backend="simplex", iterations=counter[0])
        keep = []
        for i in range(m):
            if artificial[basis[i]]:
                candidates = np.flatnonzero((np.abs(tableau[i, :width]) > _EPS) & ~artificial)
                if len(candidates) == 0:
                    continue
                _pivot(tableau, i, int(candidates[0]))
                basis[i] = int(candidates[0])
            keep.append(i)
        tableau = tableau[keep]
        basis = [basis[i] for i in keep]
        allowed = ~artificial

    cost = np.zeros(width)
    for j, coef in lp.objective.items():
        cost[j] = coef
    status = _iterate(tableau, basis, cost, allowed, counter)
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED, backend="simplex", iterations=counter[0])

    x = np.zeros(width)
    x[basis] = tableau[:, -1]
    values = x[:n] + lower
    objective = float(sum(coef * values[j] for j, coef in lp.objective.items()))
    return LpSolution(
        OPTIMAL,
        {var.name: float(values[j]) for j, var in enumerate(lp.variables)},
        objective,
        backend="simplex",
        iterations=counter[0],
    )


def _solve_highs(lp: LinearProgram) -> LpSolution:
    """Résolution par HiGHS (scipy.optimize.linprog) sur matrices creuses."""
    n = lp.num_variables
    c = np.zeros(n)
    for j, coef in lp.objective.items():
        c[j] = coef
    ub_rows: List[int] = []
    ub_cols: List[int] = []
    ub_vals: List[float] = []
    ub_rhs: List[float] = []
    eq_rows: List[int] = []
    eq_cols: List[int] = []
    eq_vals: List[float] = []
    eq_rhs: List[float] = []
    for con in lp.constraints:
        if con.sense == "=":
            row = len(eq_rhs)
            for j, coef in con.coeffs.items():
                eq_rows.append(row)
                eq_cols.append(j)
                eq_vals.append(coef)
            eq_rhs.append(con.rhs)
        else:
            sign = 1.0 if con.sense == "<=" else -1.0
            row = len(ub_rhs)
            for j, coef in con.coeffs.items():
                ub_rows.append(row)
                ub_cols.append(j)
                ub_vals.append(sign * coef)
            ub_rhs.append(sign * con.rhs)
    a_ub = scipy.sparse.coo_matrix((ub_vals, (ub_rows, ub_cols)), shape=(len(ub_rhs), n)).tocsr() if ub_rhs else None
    a_eq = scipy.sparse.coo_matrix((eq_vals, (eq_rows, eq_cols)), shape=(len(eq_rhs), n)).tocsr() if eq_rhs else None
    bounds = [(var.lower, var.upper) for var in lp.variables]
    result = linprog(
        c,
        A_ub=a_ub,
        b_ub=np.array(ub_rhs) if ub_rhs else None,
        A_eq=a_eq,
        b_eq=np.array(eq_rhs) if eq_rhs else None,
        bounds=bounds,
        method="highs",
    )
    iterations = int(getattr(result, "nit", 0) or 0)
    if result.status == 2:
        return LpSolution(INFEASIBLE, backend="highs", iterations=iterations)
    if result.status == 3:
        return LpSolution(UNBOUNDED, backend="highs", iterations=iterations)
    if result.status != 0:
        raise SolverError(f"HiGHS a échoué sur {lp.name} : {result.message}")
    values = np.asarray(result.x, dtype=float)
    return LpSolution(
        OPTIMAL,
        {var.name: float(values[j]) for j, var in enumerate(lp.variables)},
        float(result.fun),
        backend="highs",
        iterations=iterations,
    )


def _dump(lp: LinearProgram) -> None:
    directory = config.get_setting("lp.dump_dir")
    if not directory:
        return
    with _dump_lock:
        number = next(_dump_counter)
    path = Path(directory) / f"{lp.name}_{number:04d}.lp"
    path.parent.mkdir(parents=True, exist_ok=True)
    lp.write_lp(path)
    logger.debug(f"LP écrit dans {path}")


def solve_lp(lp: LinearProgram, backend: Optional[str] = None) -> LpSolution:
    """
    Résout un programme linéaire de minimisation.

    Args:
        lp (LinearProgram): Programme à résoudre
        backend (str, optional): "simplex", "highs" ou "auto" (config lp.backend par défaut)

    Returns:
        LpSolution: Statut, valeurs et objectif ; infaisable et non borné sont des statuts, pas des erreurs

    Raises:
        SolverError: Échec numérique ou plafond de pivots dépassé
    """
    choice = backend or config.get_setting("lp.backend", "auto")
    if choice == "auto":
        limit = int(config.get_setting("lp.simplex_max_variables", 250))
        choice = "simplex" if lp.num_variables <= limit else "highs"
    _dump(lp)
    if choice == "simplex":
        solution = _solve_simplex(lp)
    elif choice == "highs":
        solution = _solve_highs(lp)
    else:
        raise ContractError(f"Moteur LP inconnu : {choice}")
    logger.debug(
        f"LP {lp.name} ({lp.num_variables} var., {lp.num_constraints} contr.) : "
        f"{solution.status} via {solution.backend}, objectif {solution.objective_value}"
    )
    return solution


def x_name(v: int, c: int) -> str:
    return f"x_{v}_{c}"


def _flow_name(v: int, c: int, u: int, w: int) -> str:
    return f"f_{v}_{c}_{u}_{w}"


def _add_commodity(lp: LinearProgram, instance: Instance, v: int, c: int) -> None:
    """Flot de valeur x_v^c de v vers c, capacité x_u^c sur les noeuds intermédiaires."""
    arcs = [(u, w) for u, w in instance.edges] + [(w, u) for u, w in instance.edges]
    outgoing: Dict[int, List[str]] = {u: [] for u in range(instance.n)}
    incoming: Dict[int, List[str]] = {u: [] for u in range(instance.n)}
    for u, w in arcs:
        name = _flow_name(v, c, u, w)
        lp.add_variable(name)
        outgoing[u].append(name)
        incoming[w].append(name)

    net: Dict[str, float] = {name: 1.0 for name in outgoing[v]}
    for name in incoming[v]:
        net[name] = net.get(name, 0.0) - 1.0
    net[x_name(v, c)] = net.get(x_name(v, c), 0.0) - 1.0
    lp.add_constraint(net, "=", 0.0, f"src_{v}_{c}")

    for u in range(instance.n):
        if u in (v, c) or not (incoming[u] or outgoing[u]):
            continue
        balance = {name: 1.0 for name in incoming[u]}
        for name in outgoing[u]:
            balance[name] = balance.get(name, 0.0) - 1.0
        lp.add_constraint(balance, "=", 0.0, f"cons_{v}_{c}_{u}")
        capacity = {name: 1.0 for name in incoming[u]}
        capacity[x_name(u, c)] = -1.0
        lp.add_constraint(capacity, "<=", 0.0, f"cap_{v}_{c}_{u}")


def _add_assignment_core(lp: LinearProgram, instance: Instance, columns: Sequence[int]) -> None:
    for c in columns:
        for v in range(instance.n):
            lp.add_variable(x_name(v, c), 0.0, 1.0)
    lp.set_objective({x_name(v, c): float(instance.dist[v][c]) for c in columns for v in range(instance.n)})
    for v in range(instance.n):
        lp.add_constraint({x_name(v, c): 1.0 for c in columns}, ">=", 1.0, f"cover_{v}")


def build_flow_assignment_lp(instance: Instance, centers: Iterable[int]) -> LinearProgram:
    """
    LP d'affectation à centres fixés, connexité exprimée par des flots.

    Args:
        instance (Instance): Instance du problème
        centers: Centres imposés (non vide)

    Returns:
        LinearProgram: Variables x_v_c (c centre) et f_v_c_u_w par commodité
    """
    columns = sorted(set(centers))
    if not columns:
        raise ContractError("Ensemble de centres vide")
    lp = LinearProgram("flow_assignment")
    _add_assignment_core(lp, instance, columns)
    for c in columns:
        lp.add_constraint({x_name(c, c): 1.0}, "=", 1.0, f"open_{c}")
    for c in columns:
        for v in range(instance.n):
            if v != c:
                _add_commodity(lp, instance, v, c)
    return lp


def build_flow_center_lp(instance: Instance, k: int) -> LinearProgram:
    """LP des centres : tout noeud est centre potentiel, Σ x_c^c ≤ k et x_v^c ≤ x_c^c."""
    if k < 1:
        raise ContractError(f"k doit être au moins 1, reçu {k}")
    columns = list(range(instance.n))
    lp = LinearProgram("flow_centers")
    _add_assignment_core(lp, instance, columns)
    lp.add_constraint({x_name(c, c): 1.0 for c in columns}, "<=", float(k), "budget")
    for c in columns:
        for v in columns:
            if v != c:
                lp.add_constraint({x_name(v, c): 1.0, x_name(c, c): -1.0}, "<=", 0.0, f"open_{v}_{c}")
    for c in columns:
        for v in columns:
            if v != c:
                _add_commodity(lp, instance, v, c)
    return lp


def assignment_from_solution(instance: Instance, solution: LpSolution, columns: Iterable[int]) -> FractionalAssignment:
    """Extrait la matrice x[v][c] d'une solution (colonnes absentes à zéro)."""
    x = np.zeros((instance.n, instance.n))
    for c in columns:
        for v in range(instance.n):
            x[v, c] = solution.values[x_name(v, c)]
    return FractionalAssignment(np.clip(x, 0.0, 1.0))


def solve_flow_lp(
    instance: Instance, centers: Optional[Iterable[int]] = None, k: Optional[int] = None
) -> Tuple[FractionalAssignment, float]:
    """
    Résout le LP à flots : affectation si des centres sont donnés, sinon LP des centres.

    Returns:
        Tuple[FractionalAssignment, float]: Solution optimale et valeur de l'objectif

    Raises:
        InfeasibleError: LP infaisable (noeud inaccessible, k trop petit)
    """
    if centers is not None:
        columns = sorted(set(centers))
        lp = build_flow_assignment_lp(instance, columns)
    else:
        columns = list(range(instance.n))
        lp = build_flow_center_lp(instance, instance.k if k is None else k)
    solution = solve_lp(lp)
    if solution.status == INFEASIBLE:
        raise InfeasibleError(f"LP {lp.name} infaisable")
    if solution.status != OPTIMAL:
        raise SolverError(f"LP {lp.name} : statut {solution.status}")
    assert solution.objective_value is not None
    logger.info(f"LP {lp.name} résolu : objectif {solution.objective_value:.6g} ({solution.backend})")
    return assignment_from_solution(instance, solution, columns), solution.objective_value


@dataclass
class CutLpResult:
    assignment: FractionalAssignment
    objective: float
    rows_added: int
    rounds: int


def separation_sweep(
    instance: Instance, x: Union[FractionalAssignment, np.ndarray], columns: Iterable[int], tol: Optional[float] = None
) -> List[Tuple[int, int, frozenset]]:
    """
    Cherche les contraintes de coupe violées : sep^{x[·][c]}({v},{c}) < x_v^c - tol.

    Returns:
        List: Triplets (v, c, N) avec N la coupe minimale trouvée
    """
    matrix = x.x if isinstance(x, FractionalAssignment) else np.asarray(x, dtype=float)
    tol = config.tolerance() if tol is None else tol
    violated = []
    for c in columns:
        weights = np.clip(matrix[:, c], 0.0, None)
        for v in range(instance.n):
            if v == c or matrix[v, c] <= tol:
                continue
            if separation(instance.graph, weights, {v}, {c}) < matrix[v, c] - tol:
                violated.append((v, c, sep(CutQuery.make(instance.graph, weights, {v}, {c})).cut_nodes))
    return violated


def solve_cut_lp(
    instance: Instance,
    centers: Optional[Iterable[int]] = None,
    k: Optional[int] = None,
    max_rows: Optional[int] = None,
) -> CutLpResult:
    """
    Résout le LP à coupes (affectation ou centres) par génération de contraintes.

    Args:
        instance (Instance): Instance du problème
        centers (optional): Centres imposés ; sinon budget Σ x_c^c ≤ k
        k (int, optional): Budget d'ouverture, instance.k par défaut
        max_rows (int, optional): Plafond de lignes ajoutées, 10·n³ par défaut

    Returns:
        CutLpResult: Solution certifiée par un balayage complet de séparation

    Raises:
        InfeasibleError: LP infaisable
        SolverError: Plafond de lignes dépassé
    """
    n = instance.n
    fixed = centers is not None
    columns = sorted(set(centers)) if centers is not None else list(range(n))
    if fixed and not columns:
        raise ContractError("Ensemble de centres vide")
    budget = instance.k if k is None else k
    cap = max_rows if max_rows is not None else int(config.get_setting("lp.cut_rows_factor", 10)) * max(n, 1) ** 3
    tol = max(config.tolerance(), 1e-9)

    lp = LinearProgram("cut_assignment" if fixed else "cut_centers")
    _add_assignment_core(lp, instance, columns)
    if fixed:
        for c in columns:
            lp.add_constraint({x_name(c, c): 1.0}, "=", 1.0, f"open_{c}")
    else:
        lp.add_constraint({x_name(c, c): 1.0 for c in columns}, "<=", float(budget), "budget")

    seen = set()
    rows_added = 0
    rounds = 0
    while True:
        rounds += 1
        solution = solve_lp(lp)
        if solution.status == INFEASIBLE:
            raise InfeasibleError(f"LP {lp.name} infaisable")
        if solution.status != OPTIMAL:
            raise SolverError(f"LP {lp.name} : statut {solution.status}")
        x = assignment_from_solution(instance, solution, columns)
        fresh = 0
        violated = separation_sweep(instance, x, columns, tol)
        for v, c, cut_nodes in violated:
            key = (v, c, cut_nodes)
            if key in seen:
                continue
            seen.add(key)
            coeffs = {x_name(u, c): 1.0 for u in cut_nodes}
            coeffs[x_name(v, c)] = coeffs.get(x_name(v, c), 0.0) - 1.0
            lp.add_constraint(coeffs, ">=", 0.0, f"cut{len(seen)}")
            fresh += 1
        rows_added += fresh
        logger.debug(f"Plans coupants, tour {rounds} : {fresh} coupes ajoutées")
        if fresh == 0 and violated:
            raise SolverError(f"LP {lp.name} : {len(violated)} coupes déjà ajoutées restent violées")
        if fresh == 0:
            objective = fractional_cost(instance, x)
            logger.info(f"LP à coupes résolu en {rounds} tours ({rows_added} coupes) : {objective:.6g}")
            return CutLpResult(x, objective, rows_added, rounds)
        if rows_added > cap:
            raise SolverError(f"Plus de {cap} coupes ajoutées sans convergence")
