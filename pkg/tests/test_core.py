import json
from fractions import Fraction

import numpy as np
import pytest

from core import (
    Clustering,
    FractionalAssignment,
    Instance,
    Variant,
    check_fractional,
    evaluate_cost,
    fractional_cost,
    load_clustering,
    load_instance,
    number_to_json,
    parse_number,
    save_clustering,
    save_instance,
    triangle_violation,
    validate,
)
from errors import StructuralError


def test_instance_normalise_les_aretes():
    """Test la normalisation des arêtes (doublons, orientation)."""
    instance = Instance([[0, 1, 2], [1, 0, 1], [2, 1, 0]], [(1, 0), (0, 1), (2, 1)], 2)
    assert instance.edges == ((0, 1), (1, 2))
    assert instance.graph.number_of_edges() == 2
    assert instance.is_tree()


@pytest.mark.parametrize("dist, edges, k", [
    ([[0, 1], [2, 0]], [], 1),
    ([[1, 1], [1, 0]], [], 1),
    ([[0, -1], [-1, 0]], [], 1),
    ([[0, 1], [1, 0]], [(0, 0)], 1),
    ([[0, 1], [1, 0]], [(0, 5)], 1),
    ([[0, 1], [1, 0]], [(0, 1)], 0),
    ([[0, 1]], [], 1),
])
def test_instance_invalide(dist, edges, k):
    """Test le rejet des instances mal formées."""
    with pytest.raises(StructuralError):
        Instance(dist, edges, k)


def test_instance_metrique_verifie_triangle():
    """Test la vérification de l'inégalité triangulaire quand metric est demandé."""
    dist = [[0, 1, 5], [1, 0, 1], [5, 1, 0]]
    Instance(dist, [(0, 1)], 1)
    with pytest.raises(StructuralError):
        Instance(dist, [(0, 1)], 1, metric=True)
    assert triangle_violation(np.array(dist, dtype=float)) == (0, 1, 2)


def test_instance_rationnelle():
    """Test le mode rationnel exact."""
    instance = Instance([[0, "1/3"], ["1/3", 0]], [(0, 1)], 1, rational=True)
    assert instance.dist[0][1] == Fraction(1, 3)
    assert instance.to_dict()["dist"][0][1] == "1/3"
    assert parse_number("3/4", rational=False) == 0.75
    assert number_to_json(Fraction(4, 2)) == 2
    assert number_to_json(2.0) == 2


def test_instance_from_dict(path_instance):
    """Test la construction depuis le schéma JSON."""
    data = path_instance.to_dict()
    assert data["names"] == ["a", "b", "c"]
    clone = Instance.from_dict(data)
    assert clone.dist == path_instance.dist
    assert clone.edges == path_instance.edges
    with pytest.raises(StructuralError):
        Instance.from_dict({"dist": [[0]]})
    with pytest.raises(StructuralError):
        Instance.from_dict({"n": 3, "k": 1, "dist": [[0]]})


def test_with_k_et_with_centers(path_instance):
    """Test les copies modifiées d'une instance."""
    assert path_instance.with_k(1).k == 1
    assert path_instance.with_centers([0, 2]).fixed_centers == (0, 2)
    with pytest.raises(StructuralError):
        path_instance.with_centers([0, 0])


def test_variant_parse():
    """Test la lecture des variantes."""
    assert Variant.parse("disjoint") is Variant.DISJOINT
    with pytest.raises(StructuralError):
        Variant.parse("overlap")


def test_evaluate_cost(path_instance):
    """Test la fonction evaluate_cost, chaque appartenance comptant."""
    clustering = Clustering.from_pairs([(0, [0, 1]), (2, [1, 2])])
    assert evaluate_cost(path_instance, clustering) == 2
    assert evaluate_cost(path_instance, Clustering.from_pairs([(1, [0, 1, 2])])) == 2
    with pytest.raises(StructuralError):
        evaluate_cost(path_instance, Clustering.from_pairs([(7, [7])]))


def test_validate_solution_realisable(path_instance):
    """Test la fonction validate sur une solution réalisable."""
    report = validate(path_instance, Clustering.from_pairs([(0, [0]), (2, [1, 2])]), "disjoint")
    assert report.feasible
    assert report.to_dict() == {"feasible": True, "violations": []}


def test_validate_liste_les_violations(path_instance):
    """Test la fonction validate sur une solution fautive."""
    clustering = Clustering.from_pairs([(0, [0, 2]), (1, [0, 1]), (2, [2])])
    report = validate(path_instance, clustering, Variant.DISJOINT)
    kinds = report.kinds()
    assert "connectivity" in kinds
    assert "disjointness" in kinds
    assert "cluster_count" in kinds
    assert not report.feasible

    report = validate(path_instance, Clustering.from_pairs([(0, [1])]), "non-disjoint")
    assert set(report.kinds()) == {"center_membership", "coverage"}


def test_validate_non_disjoint_accepte_le_partage(path_instance):
    """Test que le partage d'un noeud est permis en non disjoint."""
    clustering = Clustering.from_pairs([(0, [0, 1]), (2, [1, 2])])
    assert validate(path_instance, clustering, "non-disjoint").feasible
    assert not validate(path_instance, clustering, "disjoint").feasible


def test_fractional(path_instance):
    """Test le coût et les invariants d'une affectation fractionnaire."""
    x = np.zeros((3, 3))
    x[0, 0] = 1
    x[2, 2] = 1
    x[1, 0] = x[1, 2] = 0.5
    assignment = FractionalAssignment(x)
    assert fractional_cost(path_instance, assignment) == pytest.approx(1.0)
    assert check_fractional(path_instance, assignment, k=2) == []
    assert check_fractional(path_instance, assignment, k=1)
    x[1, 2] = 0.25
    assert any("couverture" in problem for problem in check_fractional(path_instance, x))
    with pytest.raises(StructuralError):
        FractionalAssignment(np.zeros((2, 3)))


def test_clustering_matrice(path_instance):
    """Test les conversions d'un clustering."""
    clustering = Clustering.from_pairs([(2, [1, 2]), (0, [0])])
    assert clustering.centers == [2, 0]
    assert clustering.canonical() == [(0, (0,)), (2, (1, 2))]
    assert clustering.memberships(1) == 1
    matrix = clustering.to_matrix(3)
    assert matrix[1, 2] == 1 and matrix[1, 0] == 0
    with pytest.raises(StructuralError):
        Clustering.from_dict({"clusters": [{"members": [0]}]})


def test_fichiers(tmp_path, path_instance):
    """Test la lecture et l'écriture des fichiers JSON."""
    instance_file = tmp_path / "instance.json"
    save_instance(path_instance, instance_file)
    assert load_instance(instance_file).edges == path_instance.edges

    solution_file = tmp_path / "solution.json"
    save_clustering(Clustering.from_pairs([(1, [0, 1, 2])]), solution_file)
    data = json.loads(solution_file.read_text())
    data["cost"] = 2
    solution_file.write_text(json.dumps(data))
    assert load_clustering(solution_file).canonical() == [(1, (0, 1, 2))]

    broken = tmp_path / "broken.json"
    broken.write_text("{")
    with pytest.raises(StructuralError):
        load_instance(broken)
