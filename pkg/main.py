#!/usr/bin/env python3

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import networkx as nx
from rich.traceback import install

from assign_nd import assign_non_disjoint
from bench import SUITES, ratio, run_suite, write_csv
from centers_nd import find_centers, save_trace
from config_manager import config
from core import Clustering, Variant, evaluate_cost, load_clustering, load_instance, number_to_json, save_instance, validate
from errors import EXIT_INFEASIBLE, EXIT_INTERNAL, EXIT_INTERRUPTED, EXIT_OK, EXIT_USAGE, CkmError, ContractError, exit_code_for
from generators import CnfFormula, gen_from_3sat, gen_from_dominating_set, gen_random, gen_star, parse_clauses, read_dimacs
from oracle import brute_force_disjoint, brute_force_non_disjoint
from tree_dp import solve_tree
from ui_manager import ui

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
SOLVE_VARIANTS = ("nd-assignment", "nd-full", "disjoint-tree", "oracle-disjoint", "oracle-nd")


def setup_logging(verbose: bool = False, debug: bool = False, log_file: Optional[str] = None) -> None:
    """Journal sur la sortie d'erreur, plus un fichier si paths.log_file est défini."""
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    level = logging.DEBUG if debug else logging.INFO if verbose else logging.WARNING
    logging.basicConfig(level=level, format=LOG_FORMAT, handlers=handlers, force=True)


def _centers(text: Optional[str]) -> Optional[List[int]]:
    if text is None:
        return None
    try:
        return [int(token) for token in text.replace(",", " ").split()]
    except ValueError as e:
        raise ContractError(f"Liste de centres illisible : {text!r}") from e


def _edges(text: str) -> List[List[int]]:
    edges = []
    for token in text.replace(" ", "").split(","):
        if not token:
            continue
        try:
            u, w = token.split("-")
            edges.append([int(u), int(w)])
        except ValueError as e:
            raise ContractError(f"Arête illisible : {token!r} (format u-v)") from e
    return edges


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ckm", description="k-médiane avec contraintes de connexité")
    parser.add_argument("-v", "--verbose", action="store_true", help="Mode verbeux")
    parser.add_argument("--debug", action="store_true", help="Mode debug")
    parser.add_argument("-q", "--quiet", action="store_true", help="Masque les messages et la progression")
    parser.add_argument("--config", type=str, help="Fichier de configuration JSON")
    parser.add_argument("--rational", action="store_true", help="Arithmétique rationnelle exacte")
    sub = parser.add_subparsers(dest="command", required=True)

    generate = sub.add_parser("generate", help="Générer une instance")
    generate.add_argument("--kind", choices=("3sat", "domset", "star", "random"), required=True)
    generate.add_argument("--out", type=str, help="Fichier JSON de sortie (sinon sortie standard)")
    generate.add_argument("--cnf", type=str, help="Formule DIMACS (3sat)")
    generate.add_argument("--clauses", type=str, help='Clauses en ligne, ex. "-1 2; 1 -2" (3sat)')
    generate.add_argument("--variables", type=int, help="Nombre de variables pour --clauses")
    generate.add_argument("--m", type=int, default=2, help="Copies des noeuds (3sat)")
    generate.add_argument("--epsilon", type=float, help="Distance intra-groupe non nulle (3sat)")
    generate.add_argument("--nodes", type=int, help="Noeuds du graphe source (domset)")
    generate.add_argument("--edges", type=str, default="", help='Arêtes du graphe source, ex. "0-1,1-2" (domset)')
    generate.add_argument("--n", type=int, default=6)
    generate.add_argument("--k", type=int, default=2)
    generate.add_argument("--seed", type=int, default=0)
    generate.add_argument("--model", choices=("gnp", "tree", "grid"), default="gnp")
    generate.add_argument("--p", type=float, default=0.5)
    generate.add_argument("--metric", choices=("euclidean", "shortest_path"), default="euclidean")

    solve = sub.add_parser("solve", help="Résoudre une instance")
    solve.add_argument("--variant", choices=SOLVE_VARIANTS, required=True)
    solve.add_argument("--in", dest="input", type=str, required=True)
    solve.add_argument("--centers", type=str, help="Centres imposés, ex. 0,3")
    solve.add_argument("--k", type=int, help="Remplace le k de l'instance")
    solve.add_argument("--trace", type=str, help="Trace JSON des étapes (nd-full)")
    solve.add_argument("--trim", action="store_true", help="Élagage des appartenances (nd-assignment)")
    solve.add_argument("--out", type=str, help="Fichier JSON de sortie")

    check = sub.add_parser("validate", help="Valider une solution")
    check.add_argument("--in", dest="input", type=str, required=True)
    check.add_argument("--solution", type=str, required=True)
    check.add_argument("--variant", choices=[v.value for v in Variant], default=Variant.NON_DISJOINT.value)
    check.add_argument("--k", type=int)

    compare = sub.add_parser("compare", help="Comparer un algorithme à l'oracle exact")
    compare.add_argument("--in", dest="input", type=str, required=True)
    compare.add_argument("--variant", choices=("nd-full", "nd-assignment", "disjoint-tree"), default="nd-full")
    compare.add_argument("--centers", type=str)
    compare.add_argument("--k", type=int)

    bench = sub.add_parser("bench", help="Banc d'essai contre les oracles")
    bench.add_argument("--suite", choices=SUITES, required=True)
    bench.add_argument("--instances", type=int)
    bench.add_argument("--seed", type=int)
    bench.add_argument("--workers", type=int)
    bench.add_argument("--out", type=str, help="Fichier CSV (sinon sortie standard)")
    return parser


def _emit(data: Dict[str, Any], out: Optional[str]) -> None:
    text = json.dumps(data, indent=2)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
        ui.show_success(f"Résultat écrit dans {out}")
    else:
        print(text)


def cmd_generate(args: argparse.Namespace) -> int:
    if args.kind == "3sat":
        if args.cnf:
            formula = read_dimacs(Path(args.cnf))
        elif args.clauses:
            clauses = parse_clauses(args.clauses)
            count = args.variables or max(abs(lit) for clause in clauses for lit in clause)
            formula = CnfFormula.make(count, clauses)
        else:
            raise ContractError("--cnf ou --clauses requis pour --kind 3sat")
        instance = gen_from_3sat(formula, args.m, args.epsilon)
    elif args.kind == "domset":
        graph = nx.Graph()
        edges = _edges(args.edges)
        graph.add_nodes_from(range(args.nodes if args.nodes is not None else 0))
        graph.add_edges_from(edges)
        instance = gen_from_dominating_set(graph)
    elif args.kind == "star":
        instance = gen_star(args.n, args.seed, args.k)
    else:
        instance = gen_random(args.n, args.k, args.seed, args.model, args.p, args.metric)
    if args.out:
        save_instance(instance, args.out)
        ui.show_success(f"Instance {args.kind} (n = {instance.n}) écrite dans {args.out}")
    else:
        print(json.dumps(instance.to_dict(), indent=2))
    return EXIT_OK


def solve_instance(instance: Any, variant: str, centers: Optional[List[int]] = None, trace: Optional[str] = None, trim: bool = False) -> Dict[str, Any]:
    """Résout selon la variante demandée ; renvoie le document JSON de sortie."""
    if variant == "nd-assignment":
        result = assign_non_disjoint(instance, centers, trim=trim or None)
        return result.to_dict()
    if variant == "nd-full":
        found = find_centers(instance)
        if trace:
            save_trace(found, trace)
        return found.to_dict()
    if variant == "disjoint-tree":
        cost, clustering = solve_tree(instance, fixed_centers=centers)
        data = clustering.to_dict()
        data.update({"cost": number_to_json(cost), "stats": {"clusters": len(clustering)}})
        return data
    if variant == "oracle-disjoint":
        cost, clustering = brute_force_disjoint(instance)
    else:
        cost, clustering = brute_force_non_disjoint(instance, centers=centers)
    data = clustering.to_dict()
    data.update({"cost": number_to_json(cost), "stats": {"clusters": len(clustering)}})
    return data


def cmd_solve(args: argparse.Namespace) -> int:
    instance = load_instance(args.input)
    if args.k is not None:
        instance = instance.with_k(args.k)
    start = time.perf_counter()
    data = solve_instance(instance, args.variant, _centers(args.centers), args.trace, args.trim)
    ui.show_summary(
        {"variante": args.variant, "coût": data["cost"], "clusters": len(data["clusters"]),
         "durée": ui.format_duration(time.perf_counter() - start)},
        title="Résolution",
    )
    _emit(data, args.out)
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    instance = load_instance(args.input)
    clustering = load_clustering(args.solution)
    report = validate(instance, clustering, args.variant, args.k)
    data = report.to_dict()
    if report.feasible:
        data["cost"] = number_to_json(evaluate_cost(instance, clustering))
        ui.show_success("Solution réalisable")
    else:
        ui.show_error(f"Solution invalide : {', '.join(report.kinds())}")
    print(json.dumps(data, indent=2))
    return EXIT_OK if report.feasible else EXIT_INFEASIBLE


def cmd_compare(args: argparse.Namespace) -> int:
    instance = load_instance(args.input)
    if args.k is not None:
        instance = instance.with_k(args.k)
    centers = _centers(args.centers)
    data = solve_instance(instance, args.variant, centers)
    if args.variant == "disjoint-tree":
        optimum, _ = brute_force_disjoint(instance)
    elif args.variant == "nd-assignment":
        optimum, _ = brute_force_non_disjoint(instance, centers=centers or instance.fixed_centers)
    else:
        optimum, _ = brute_force_non_disjoint(instance)
    cost = float(evaluate_cost(instance, Clustering.from_dict(data)))
    result = {
        "algorithm": args.variant,
        "cost": data["cost"],
        "optimum": number_to_json(optimum),
        "ratio": ratio(cost, float(optimum)),
    }
    ui.show_table("Comparaison", ["algorithme", "coût", "optimum", "ratio"],
                  [[args.variant, str(result["cost"]), str(result["optimum"]), f"{result['ratio']:.4f}"]])
    print(json.dumps(result, indent=2))
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    rows = run_suite(args.suite, args.instances, args.seed, args.workers)
    if args.out:
        write_csv(rows, args.out)
        ui.show_success(f"{len(rows)} lignes écrites dans {args.out}")
    else:
        write_csv(rows, sys.stdout)
    worst = max((row.ratio for row in rows), default=1.0)
    ui.show_info(f"Suite {args.suite} : {len(rows)} lignes, ratio maximal {worst:.4f}")
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "solve": cmd_solve,
    "validate": cmd_validate,
    "compare": cmd_compare,
    "bench": cmd_bench,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Exécute la ligne de commande et renvoie le code de sortie."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE

    try:
        if args.config:
            config.load_file(args.config)
        if args.rational:
            config.set_setting("numeric.mode", "rational")
        ui.quiet = args.quiet
        setup_logging(args.verbose, args.debug, config.get_setting("paths.log_file"))
        return COMMANDS[args.command](args)
    except KeyboardInterrupt:
        ui.show_warning("\nOpération annulée par l'utilisateur")
        return EXIT_INTERRUPTED
    except CkmError as e:
        ui.show_error(str(e))
        return exit_code_for(e)
    except FileNotFoundError as e:
        ui.show_error(f"Fichier introuvable : {e.filename}")
        return EXIT_USAGE
    except Exception as e:
        logger.exception("Erreur inattendue")
        ui.show_error(f"Une erreur inattendue s'est produite : {e}")
        return EXIT_INTERNAL


def main() -> int:
    """Point d'entrée principal de l'application."""
    install(show_locals=True)
    return run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
