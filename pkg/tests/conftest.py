import networkx as nx
import numpy as np
import pytest

from config_manager import config
from core import Instance


@pytest.fixture(autouse=True)
def fresh_config():
    """Repart de la configuration par défaut pour chaque test."""
    config.reset()
    yield config
    config.reset()


@pytest.fixture
def path_instance():
    """Chemin a - b - c, distances de la droite réelle, k = 2."""
    return Instance([[0, 1, 2], [1, 0, 1], [2, 1, 0]], [(0, 1), (1, 2)], 2, names=["a", "b", "c"])


@pytest.fixture
def cycle_instance():
    """Cycle de 4 noeuds, distances égales à 1 hors diagonale."""
    dist = [[0 if i == j else 1 for j in range(4)] for i in range(4)]
    return Instance(dist, [(0, 1), (1, 2), (2, 3), (3, 0)], 1)


def connected_graph(n, seed, p=0.4):
    """Graphe aléatoire rendu connexe par un chemin 0 - 1 - ... - n-1."""
    graph = nx.gnp_random_graph(n, p, seed=seed)
    graph.add_edges_from((i, i + 1) for i in range(n - 1))
    return graph


def random_instance(n, k, seed):
    """Instance aléatoire connexe aux distances entières symétriques (non métriques)."""
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.integers(1, 10, size=(n, n)), 1)
    dist = (upper + upper.T).tolist()
    return Instance(dist, connected_graph(n, seed).edges, k)
