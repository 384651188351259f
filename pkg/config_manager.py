import copy
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

from ui_manager import ui

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_FILE = Path(__file__).resolve().parent / "config" / "default_config.json"


class ConfigManager:
    """Gestionnaire de configuration centralisé du solveur."""

    DEFAULT_CONFIG: Dict[str, Dict[str, Any]] = {
        "numeric": {
            "mode": "float",
            "tolerance": 1e-9,
            "audit_tolerance": 1e-7,
            "zero_threshold": 1e-9,
        },
        "lp": {
            "backend": "auto",
            "simplex_max_variables": 250,
            "max_pivots": 50000,
            "degenerate_streak": 50,
            "cut_rows_factor": 10,
            "dump_dir": None,
        },
        "assignment": {
            "terminal_threshold": 1e-7,
            "trim": False,
            "max_workers": 1,
        },
        "centers": {
            "audit": "auto",
            "audit_max_nodes": 12,
        },
        "oracle": {
            "max_nodes_partition": 20,
            "max_nodes_multi": 10,
            "max_nodes_cover": 16,
            "max_nodes_dominating_set": 16,
            "max_variables_sat": 20,
        },
        "generators": {
            "connect_retries": 100,
        },
        "bench": {
            "max_workers": 4,
            "seed": 0,
            "instances": 5,
        },
        "paths": {
            "log_file": None,
        },
    }

    def __init__(self, config_file: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None):
        """
        Initialise le gestionnaire de configuration.

        Args:
            config_file (str, optional): Fichier JSON de base, par défaut config/default_config.json
            overrides (Dict, optional): Valeurs prioritaires, en clés pointées ("lp.backend")
        """
        self.config_file = Path(config_file) if config_file else DEFAULT_CONFIG_FILE
        self._overrides = dict(overrides or {})
        self.config = self._load_config()

    def _load_config(self) -> Dict[str, Any]:
        """
        Charge la configuration depuis le fichier JSON puis les surcharges.

        Returns:
            Dict: Configuration chargée ou configuration par défaut
        """
        config = copy.deepcopy(self.DEFAULT_CONFIG)
        for path in (self.config_file, os.environ.get("CKM_CONFIG")):
            if not path:
                continue
            try:
                with open(path, "r", encoding="utf-8") as f:
                    self._update_config_structure(json.load(f), config)
            except FileNotFoundError:
                logger.warning(f"Fichier de configuration introuvable : {path}")
            except (OSError, json.JSONDecodeError) as e:
                ui.show_error(f"Erreur lors du chargement de la configuration : {str(e)}")
                logger.error(f"Configuration ignorée ({path}) : {e}")

        env_tol = os.environ.get("CKM_TOL")
        if env_tol:
            try:
                config["numeric"]["tolerance"] = float(env_tol)
            except ValueError:
                logger.warning(f"CKM_TOL invalide, ignoré : {env_tol!r}")

        for key, value in self._overrides.items():
            self._set_path(config, key, value)
        return config

    @staticmethod
    def _update_config_structure(source: Dict[str, Any], target: Dict[str, Any]) -> Dict[str, Any]:
        """
        Fusionne récursivement une configuration utilisateur dans la cible.

        Args:
            source (Dict): Valeurs lues
            target (Dict): Configuration à mettre à jour

        Returns:
            Dict: La cible mise à jour
        """
        for key, value in source.items():
            if isinstance(value, dict) and isinstance(target.get(key), dict):
                ConfigManager._update_config_structure(value, target[key])
            else:
                target[key] = value
        return target

    @staticmethod
    def _set_path(config: Dict[str, Any], key: str, value: Any) -> None:
        section, _, name = key.partition(".")
        if not name:
            raise KeyError(f"Clé de configuration sans section : {key}")
        config.setdefault(section, {})[name] = value

    def get_setting(self, key: str, default: Any = None) -> Any:
        """
        Récupère un paramètre de configuration.

        Args:
            key (str): Clé pointée du paramètre, par exemple "numeric.tolerance"
            default (Any, optional): Valeur par défaut si la clé n'existe pas

        Returns:
            Any: Valeur du paramètre
        """
        section, _, name = key.partition(".")
        return self.config.get(section, {}).get(name, default)

    def set_setting(self, key: str, value: Any) -> None:
        """
        Définit un paramètre de configuration en mémoire.

        Args:
            key (str): Clé pointée du paramètre
            value (Any): Nouvelle valeur
        """
        self._set_path(self.config, key, value)

    def load_file(self, path: str) -> None:
        """Fusionne un fichier de configuration utilisateur (option --config)."""
        try:
            with open(path, "r", encoding="utf-8") as f:
                self._update_config_structure(json.load(f), self.config)
        except json.JSONDecodeError as e:
            raise ValueError(f"Configuration invalide dans {path} : {e}") from e
        logger.info(f"Configuration chargée depuis {path}")

    def save(self, path: str) -> None:
        """
        Sauvegarde la configuration courante en JSON.

        Args:
            path (str): Fichier de destination
        """
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.config, f, indent=4)

    def reset(self) -> None:
        """Recharge la configuration initiale (fichier, environnement, surcharges)."""
        self.config = self._load_config()

    def is_rational(self) -> bool:
        return self.get_setting("numeric.mode", "float") == "rational"

    def tolerance(self) -> float:
        """Tolérance de faisabilité ; nulle en mode rationnel exact."""
        if self.is_rational():
            return 0.0
        return float(self.get_setting("numeric.tolerance", 1e-9))

    def audit_tolerance(self) -> float:
        return float(self.get_setting("numeric.audit_tolerance", 1e-7))

    def zero_threshold(self) -> float:
        return float(self.get_setting("numeric.zero_threshold", 1e-9))


# Instance globale du gestionnaire de configuration
config = ConfigManager()
