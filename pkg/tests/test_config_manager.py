import json

import pytest

from config_manager import ConfigManager


def test_valeurs_par_defaut(tmp_path):
    """Test la configuration par défaut quand le fichier est absent."""
    manager = ConfigManager(str(tmp_path / "absent.json"))
    assert manager.get_setting("lp.backend") == "auto"
    assert manager.get_setting("oracle.max_nodes_partition") == 20
    assert manager.get_setting("bench.max_workers") == 4
    assert ConfigManager().get_setting("bench.max_workers") == 4
    assert manager.get_setting("lp.inconnu", 42) == 42
    assert not manager.is_rational()
    assert manager.tolerance() == 1e-9


def test_set_setting_et_reset(tmp_path):
    """Test la modification puis le rechargement."""
    manager = ConfigManager(str(tmp_path / "absent.json"))
    manager.set_setting("numeric.mode", "rational")
    assert manager.is_rational()
    assert manager.tolerance() == 0.0
    manager.reset()
    assert not manager.is_rational()
    with pytest.raises(KeyError):
        manager.set_setting("sans_section", 1)


def test_fichier_et_surcharges(tmp_path):
    """Test la fusion d'un fichier utilisateur et des surcharges."""
    base = tmp_path / "base.json"
    base.write_text(json.dumps({"lp": {"backend": "highs"}}))
    manager = ConfigManager(str(base), overrides={"centers.audit": "off"})
    assert manager.get_setting("lp.backend") == "highs"
    assert manager.get_setting("lp.max_pivots") == 50000
    assert manager.get_setting("centers.audit") == "off"

    extra = tmp_path / "extra.json"
    extra.write_text(json.dumps({"numeric": {"tolerance": 1e-6}}))
    manager.load_file(str(extra))
    assert manager.tolerance() == 1e-6

    broken = tmp_path / "broken.json"
    broken.write_text("{")
    with pytest.raises(ValueError):
        manager.load_file(str(broken))


def test_variables_d_environnement(tmp_path, monkeypatch):
    """Test CKM_CONFIG et CKM_TOL."""
    extra = tmp_path / "env.json"
    extra.write_text(json.dumps({"bench": {"seed": 7}}))
    monkeypatch.setenv("CKM_CONFIG", str(extra))
    monkeypatch.setenv("CKM_TOL", "1e-5")
    manager = ConfigManager(str(tmp_path / "absent.json"))
    assert manager.get_setting("bench.seed") == 7
    assert manager.tolerance() == 1e-5
    monkeypatch.setenv("CKM_TOL", "abc")
    assert ConfigManager(str(tmp_path / "absent.json")).tolerance() == 1e-9


def test_save(tmp_path):
    """Test la sauvegarde de la configuration."""
    manager = ConfigManager(str(tmp_path / "absent.json"))
    target = tmp_path / "saved.json"
    manager.save(str(target))
    assert json.loads(target.read_text())["numeric"]["mode"] == "float"
