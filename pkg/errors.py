"""Hiérarchie des exceptions du solveur de k-médiane connexe."""


class CkmError(Exception):
    """Erreur de base du solveur."""


class StructuralError(CkmError, ValueError):
    """Données mal formées : indices invalides, dimensions, matrice non symétrique."""


class ContractError(CkmError, ValueError):
    """Précondition d'une opération non respectée."""


class GuardError(ContractError):
    """Taille d'instance au-delà des gardes d'un oracle exhaustif."""


class MalformedFormula(ContractError):
    """Formule CNF invalide pour la réduction 3-SAT."""


class InfeasibleError(CkmError):
    """Aucune solution réalisable (noeud inaccessible, LP infaisable...)."""


class InvariantViolation(CkmError):
    """Un invariant interne des algorithmes d'arrondi n'est plus respecté."""


class SolverError(CkmError):
    """Échec numérique du solveur LP ou dépassement d'un plafond d'itérations."""


#: Codes de sortie de la ligne de commande
EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_USAGE = 2
EXIT_INTERNAL = 3
EXIT_INTERRUPTED = 130


def exit_code_for(error: BaseException) -> int:
    """
    Associe une exception au code de sortie de la CLI.

    Args:
        error (BaseException): Exception levée pendant la commande

    Returns:
        int: Code de sortie
    """
    if isinstance(error, KeyboardInterrupt):
        return EXIT_INTERRUPTED
    if isinstance(error, InfeasibleError):
        return EXIT_INFEASIBLE
    if isinstance(error, (InvariantViolation, SolverError)):
        return EXIT_INTERNAL
    if isinstance(error, (ContractError, StructuralError, FileNotFoundError)):
        return EXIT_USAGE
    return EXIT_INTERNAL
