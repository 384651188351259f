import json

import pytest

from core import Clustering, Instance, load_instance, save_clustering, save_instance
from errors import EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE
from main import build_parser, run


@pytest.fixture
def path_file(tmp_path, path_instance):
    """Instance du chemin a - b - c enregistrée en JSON."""
    path = tmp_path / "path.json"
    save_instance(path_instance, path)
    return str(path)


def _stdout_json(capsys):
    return json.loads(capsys.readouterr().out)


def test_build_parser():
    """Test l'analyse des arguments de la sous-commande solve."""
    args = build_parser().parse_args(["--rational", "solve", "--variant", "nd-full", "--in", "x.json", "--k", "3"])
    assert args.rational
    assert args.command == "solve"
    assert args.input == "x.json"
    assert args.k == 3


def test_generate_random(tmp_path):
    """Test la génération d'une instance aléatoire dans un fichier."""
    out = tmp_path / "random.json"
    assert run(["generate", "--kind", "random", "--n", "7", "--k", "2", "--seed", "4", "--out", str(out)]) == EXIT_OK
    instance = load_instance(out)
    assert instance.n == 7
    assert instance.k == 2


def test_generate_3sat_et_domset(capsys):
    """Test les réductions générées sur la sortie standard."""
    assert run(["generate", "--kind", "3sat", "--clauses", "-1 2; 1 2"]) == EXIT_OK
    assert _stdout_json(capsys)["n"] == 14
    assert run(["generate", "--kind", "domset", "--nodes", "3", "--edges", "0-1,1-2"]) == EXIT_OK
    data = _stdout_json(capsys)
    assert data["n"] == 8
    assert data["centers"] == [0, 1]
    assert run(["generate", "--kind", "3sat"]) == EXIT_USAGE


def test_generate_cnf(tmp_path, capsys):
    """Test la génération depuis un fichier DIMACS."""
    cnf = tmp_path / "formula.cnf"
    cnf.write_text("p cnf 2 2\n-1 2 0\n1 2 0\n")
    assert run(["generate", "--kind", "3sat", "--cnf", str(cnf), "--m", "1"]) == EXIT_OK
    assert _stdout_json(capsys)["n"] == 2 + 3 * 2 + 2


def test_solve_disjoint_tree(path_file, capsys):
    """Test la résolution exacte sur arbre."""
    assert run(["solve", "--variant", "disjoint-tree", "--in", path_file]) == EXIT_OK
    data = _stdout_json(capsys)
    assert data["cost"] == 1
    assert len(data["clusters"]) == 2
    assert run(["solve", "--variant", "disjoint-tree", "--in", path_file, "--k", "1"]) == EXIT_OK
    assert _stdout_json(capsys)["cost"] == 2


def test_solve_nd_assignment(path_file, tmp_path):
    """Test l'affectation à centres fixés avec écriture du résultat."""
    out = tmp_path / "solution.json"
    assert run(["solve", "--variant", "nd-assignment", "--in", path_file, "--centers", "0,2", "--out", str(out)]) == EXIT_OK
    data = json.loads(out.read_text())
    assert sorted(cluster["center"] for cluster in data["clusters"]) == [0, 2]
    assert data["lp_value"] == pytest.approx(1.0)


def test_solve_nd_full_trace(path_file, tmp_path, capsys):
    """Test la recherche des centres avec trace."""
    trace = tmp_path / "trace.json"
    assert run(["solve", "--variant", "nd-full", "--in", path_file, "--trace", str(trace)]) == EXIT_OK
    data = _stdout_json(capsys)
    assert len(data["clusters"]) <= 2
    assert "bounds" in json.loads(trace.read_text())


def test_solve_oracles(path_file, capsys):
    """Test les oracles exposés par la CLI."""
    assert run(["solve", "--variant", "oracle-disjoint", "--in", path_file]) == EXIT_OK
    assert _stdout_json(capsys)["cost"] == 1
    assert run(["solve", "--variant", "oracle-nd", "--in", path_file, "--centers", "1"]) == EXIT_OK
    assert _stdout_json(capsys)["cost"] == 2


def test_solve_rationnel(tmp_path, capsys):
    """Test le mode --rational de bout en bout."""
    path = tmp_path / "rational.json"
    path.write_text(json.dumps({"n": 2, "k": 1, "dist": [[0, "1/3"], ["1/3", 0]], "edges": [[0, 1]]}))
    assert run(["--rational", "solve", "--variant", "disjoint-tree", "--in", str(path)]) == EXIT_OK
    assert _stdout_json(capsys)["cost"] == "1/3"


def test_validate(path_file, tmp_path, capsys):
    """Test la validation d'une solution réalisable puis invalide."""
    good = tmp_path / "good.json"
    save_clustering(Clustering.from_pairs([(0, [0, 1]), (2, [1, 2])]), good)
    assert run(["validate", "--in", path_file, "--solution", str(good)]) == EXIT_OK
    data = _stdout_json(capsys)
    assert data["feasible"] and data["cost"] == 2

    assert run(["validate", "--in", path_file, "--solution", str(good), "--variant", "disjoint"]) == EXIT_INFEASIBLE
    data = _stdout_json(capsys)
    assert [v["kind"] for v in data["violations"]] == ["disjointness"]


def test_compare(path_file, capsys):
    """Test la comparaison à l'oracle."""
    assert run(["compare", "--in", path_file, "--variant", "disjoint-tree"]) == EXIT_OK
    data = _stdout_json(capsys)
    assert data["ratio"] == 1.0
    assert run(["compare", "--in", path_file, "--variant", "nd-assignment", "--centers", "0,2"]) == EXIT_OK
    assert _stdout_json(capsys)["ratio"] >= 1.0


def test_bench_csv(tmp_path):
    """Test le banc d'essai avec écriture CSV."""
    out = tmp_path / "bench.csv"
    assert run(["bench", "--suite", "trees", "--instances", "2", "--workers", "1", "--out", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0].startswith("suite,instance,n,k,algorithm")
    assert len(lines) == 3


def test_codes_de_sortie(tmp_path, cycle_instance):
    """Test les codes de sortie en cas d'erreur."""
    assert run(["solve", "--variant", "disjoint-tree", "--in", str(tmp_path / "absent.json")]) == EXIT_USAGE
    assert run(["solve", "--variant", "inconnue", "--in", "x.json"]) == EXIT_USAGE
    assert run([]) == EXIT_USAGE

    cycle = tmp_path / "cycle.json"
    save_instance(cycle_instance, cycle)
    assert run(["solve", "--variant", "disjoint-tree", "--in", str(cycle)]) == EXIT_USAGE

    split = tmp_path / "split.json"
    save_instance(Instance([[0, 1, 1], [1, 0, 1], [1, 1, 0]], [(0, 1)], 1), split)
    assert run(["solve", "--variant", "nd-assignment", "--in", str(split), "--centers", "0"]) == EXIT_INFEASIBLE

    broken = tmp_path / "broken.json"
    broken.write_text(json.dumps({"n": 2, "k": 1, "dist": [[0, 1], [2, 0]], "edges": []}))
    assert run(["solve", "--variant", "oracle-disjoint", "--in", str(broken)]) == EXIT_USAGE


def test_mode_silencieux(tmp_path, capsys):
    """Test que --quiet masque les messages de succès."""
    out = tmp_path / "star.json"
    assert run(["-q", "generate", "--kind", "star", "--n", "5", "--out", str(out)]) == EXIT_OK
    assert "✓" not in capsys.readouterr().err
    assert run(["generate", "--kind", "star", "--n", "5", "--out", str(out)]) == EXIT_OK
    assert "✓" in capsys.readouterr().err
