import io
import math

import pytest

from bench import BenchRow, ratio, run_suite, write_csv
from errors import ContractError


def test_ratio():
    """Test la fonction ratio et ses cas limites."""
    assert ratio(3, 2) == 1.5
    assert ratio(0, 0) == 1.0
    assert math.isinf(ratio(1, 0))


def test_suite_trees():
    """Test que la DP sur arbre atteint l'optimum sur toute la suite."""
    rows = run_suite("trees", instances=3, seed=0, max_workers=2)
    assert len(rows) == 3
    assert [row.instance for row in rows] == ["tree-6-0", "tree-7-1", "tree-8-2"]
    for row in rows:
        assert row.algorithm == "disjoint-tree"
        assert row.ratio == 1.0
        assert row.ops is not None and row.ops <= row.n ** 2 * (row.k + 1) ** 2


def test_suite_reductions():
    """Test la suite des réductions : dichotomie 3-SAT et ensemble dominant."""
    rows = {row.instance: row for row in run_suite("reductions", max_workers=1)}
    assert rows["sat-2x2"].ratio == 1.0
    assert rows["unsat-2x4"].ratio > 1.0
    for name in ("path-4", "star-4", "cycle-5"):
        assert rows[name].ratio == 1.0


def test_suite_small():
    """Test la suite des petites instances non disjointes."""
    rows = run_suite("small", instances=1, seed=3, max_workers=1)
    assert [row.algorithm for row in rows] == ["nd-assignment", "nd-full"]
    for row in rows:
        assert row.ratio >= 1.0 - 1e-9
        assert row.n == 6


def test_suite_inconnue():
    """Test le refus d'une suite inconnue."""
    with pytest.raises(ContractError):
        run_suite("huge")


def test_write_csv(tmp_path):
    """Test l'écriture CSV dans un flux et dans un fichier."""
    rows = [BenchRow("trees", "tree-6-0", 6, 2, "disjoint-tree", 4.0, 4.0, 1.0, 0.01, 120)]
    buffer = io.StringIO()
    text = write_csv(rows, buffer)
    assert buffer.getvalue() == text
    assert text.splitlines()[1].startswith("trees,tree-6-0,6,2,disjoint-tree,4.0,4.0,1.0")
    path = tmp_path / "rows.csv"
    write_csv(rows, path)
    assert path.read_text() == text
