"""
Banc d'essai : algorithmes contre oracles exacts sur de petites instances.

Trois suites :
  small       instances aléatoires non disjointes (affectation et recherche des centres) ;
  trees       DP sur arbres contre l'oracle disjoint ;
  reductions  réductions 3-SAT et ensemble dominant contre leurs oracles.
"""

import csv
import io
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Callable, List, Optional, TextIO, Union

import networkx as nx

from assign_nd import assign_non_disjoint
from centers_nd import find_centers
from config_manager import config
from core import Instance
from errors import ContractError
from generators import CnfFormula, gen_from_3sat, gen_from_dominating_set, gen_random, random_distances
from oracle import brute_force_disjoint, brute_force_dominating_set, brute_force_non_disjoint
from tree_dp import build_tables, reconstruct
from ui_manager import ui

logger = logging.getLogger(__name__)

SUITES = ("small", "trees", "reductions")


@dataclass
class BenchRow:
    suite: str
    instance: str
    n: int
    k: int
    algorithm: str
    cost: float
    reference: float
    ratio: float
    seconds: float
    ops: Optional[int] = None


def ratio(cost: float, reference: float) -> float:
    """cost / reference ; 1 si les deux sont nuls, ∞ si seule la référence l'est."""
    if reference == 0:
        return 1.0 if cost == 0 else math.inf
    return cost / reference


def _row(suite: str, name: str, instance: Instance, algorithm: str, cost: Any, reference: Any, seconds: float, ops: Optional[int] = None) -> BenchRow:
    return BenchRow(suite, name, instance.n, instance.k, algorithm, float(cost), float(reference), ratio(float(cost), float(reference)), seconds, ops)


def _small_task(seed: int) -> Callable[[], List[BenchRow]]:
    def task() -> List[BenchRow]:
        instance = gen_random(6, 2, seed=seed, model="gnp", p=0.5)
        name = f"gnp-6-{seed}"
        reference, optimum = brute_force_non_disjoint(instance)
        rows = []
        start = time.perf_counter()
        assignment = assign_non_disjoint(instance, optimum.centers)
        fixed_reference, _ = brute_force_non_disjoint(instance, centers=optimum.centers)
        rows.append(_row("small", name, instance, "nd-assignment", assignment.cost, fixed_reference, time.perf_counter() - start))
        start = time.perf_counter()
        result = find_centers(instance)
        rows.append(_row("small", name, instance, "nd-full", result.cost, reference, time.perf_counter() - start))
        return rows
    return task


def _tree_task(seed: int) -> Callable[[], List[BenchRow]]:
    def task() -> List[BenchRow]:
        base = gen_random(6 + seed % 4, 1, seed=seed, model="tree")
        instance = Instance(random_distances(base.n, seed), base.edges, 2 + seed % 2)
        reference, _ = brute_force_disjoint(instance)
        start = time.perf_counter()
        tables = build_tables(instance)
        reconstruct(tables, instance)
        return [_row("trees", f"tree-{base.n}-{seed}", instance, "disjoint-tree", tables.optimum, reference, time.perf_counter() - start, tables.operations)]
    return task


_FORMULAS = {
    "sat-2x2": CnfFormula.make(2, [[-1, 2], [1, 2]]),
    "unsat-2x4": CnfFormula.make(2, [[1, 2], [1, -2], [-1, 2], [-1, -2]]),
}


def _reduction_tasks() -> List[Callable[[], List[BenchRow]]]:
    tasks: List[Callable[[], List[BenchRow]]] = []
    for label, formula in _FORMULAS.items():
        def sat_task(label: str = label, formula: CnfFormula = formula) -> List[BenchRow]:
            instance = gen_from_3sat(formula, 2)
            start = time.perf_counter()
            cost, _ = brute_force_disjoint(instance)
            return [_row("reductions", label, instance, "oracle-disjoint", cost, 2 * formula.num_variables, time.perf_counter() - start)]
        tasks.append(sat_task)
    for label, graph in (("path-4", nx.path_graph(4)), ("star-4", nx.star_graph(3)), ("cycle-5", nx.cycle_graph(5))):
        def domset_task(label: str = label, graph: nx.Graph = graph) -> List[BenchRow]:
            instance = gen_from_dominating_set(graph)
            start = time.perf_counter()
            cost, _ = brute_force_non_disjoint(instance)
            return [_row("reductions", label, instance, "oracle-nd", cost, brute_force_dominating_set(graph), time.perf_counter() - start)]
        tasks.append(domset_task)
    return tasks


def run_suite(suite: str, instances: Optional[int] = None, seed: Optional[int] = None, max_workers: Optional[int] = None) -> List[BenchRow]:
    """
    Exécute une suite et renvoie ses lignes dans l'ordre des tâches.

    Args:
        suite (str): "small", "trees" ou "reductions"
        instances (int, optional): Nombre d'instances aléatoires (bench.instances)
        seed (int, optional): Première graine (bench.seed)
        max_workers (int, optional): Threads (bench.max_workers)

    Returns:
        List[BenchRow]: Résultats
    """
    count = int(instances if instances is not None else config.get_setting("bench.instances", 5))
    first = int(seed if seed is not None else config.get_setting("bench.seed", 0))
    workers = max(1, int(max_workers if max_workers is not None else config.get_setting("bench.max_workers", 1)))
    if suite == "small":
        tasks = [_small_task(first + i) for i in range(count)]
    elif suite == "trees":
        tasks = [_tree_task(first + i) for i in range(count)]
    elif suite == "reductions":
        tasks = _reduction_tasks()
    else:
        raise ContractError(f"Suite inconnue : {suite!r} (choix : {', '.join(SUITES)})")

    rows: List[BenchRow] = []
    with ui.show_progress(total=len(tasks), description=f"Suite {suite}") as (progress, task_id):
        with ThreadPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(task) for task in tasks]
            for future in futures:
                rows.extend(future.result())
                progress.update(task_id, advance=1)
    logger.info(f"Suite {suite} : {len(rows)} lignes")
    return rows


def write_csv(rows: List[BenchRow], target: Union[str, Path, TextIO, None] = None) -> str:
    """Écrit les lignes en CSV dans un fichier ou un flux ; renvoie le texte produit."""
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=[f.name for f in fields(BenchRow)], lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(asdict(row))
    text = buffer.getvalue()
    if isinstance(target, (str, Path)):
        with open(target, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    elif target is not None:
        target.write(text)
    return text
