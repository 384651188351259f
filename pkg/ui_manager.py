import contextlib
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

from rich.console import Console
from rich.progress import BarColumn, Progress, SpinnerColumn, TaskID, TextColumn, TimeRemainingColumn
from rich.table import Table
from rich.tree import Tree


PALETTE = {
    "primary": "blue",
    "secondary": "cyan",
    "success": "green",
    "warning": "yellow",
    "error": "red",
    "info": "white",
    "muted": "grey70",
}


class UIManager:
    """Affichage humain sur la sortie d'erreur ; la sortie standard reste réservée au JSON/CSV."""

    def __init__(self, console: Optional[Console] = None):
        self.console = console or Console(stderr=True)
        self.colors = dict(PALETTE)
        self.quiet = False

    def format_duration(self, seconds: float) -> str:
        """Formate une durée en secondes en une chaîne lisible."""
        hours = int(seconds // 3600)
        minutes = int((seconds % 3600) // 60)
        seconds = seconds % 60
        if hours > 0:
            return f"{hours}h {minutes}m {seconds:.1f}s"
        elif minutes > 0:
            return f"{minutes}m {seconds:.1f}s"
        return f"{seconds:.2f}s"

    def show_summary(self, data: Dict[str, Any], title: Optional[str] = None) -> None:
        """Affiche un résumé imbriqué sous forme d'arbre."""
        if self.quiet:
            return

        def build_tree(tree: Tree, data: Dict[str, Any]) -> None:
            for key, value in data.items():
                if isinstance(value, dict):
                    branch = tree.add(f"[{self.colors['primary']}]{key}[/]")
                    build_tree(branch, value)
                else:
                    tree.add(f"[{self.colors['muted']}]{key}:[/] {value}")

        tree = Tree(
            f"[bold {self.colors['primary']}]{title or 'Résumé'}[/]",
            guide_style=self.colors['secondary'],
        )
        build_tree(tree, data)
        self.console.print(tree)

    def show_table(self, title: str, columns: Sequence[str], rows: List[Sequence[Any]]) -> None:
        """Affiche un tableau de résultats."""
        if self.quiet:
            return
        table = Table(title=title, header_style=f"bold {self.colors['primary']}")
        for column in columns:
            table.add_column(column)
        for row in rows:
            table.add_row(*[str(cell) for cell in row])
        self.console.print(table)

    @contextlib.contextmanager
    def show_progress(self, total: int, description: str = "Progression") -> Iterator[Tuple[Progress, TaskID]]:
        """Crée et gère une barre de progression stylisée."""
        progress = Progress(
            SpinnerColumn(),
            TextColumn(f"[{self.colors['primary']}]" + "{task.description}"),
            BarColumn(complete_style=self.colors['primary']),
            TextColumn("[progress.percentage]{task.percentage:>3.0f}%"),
            TimeRemainingColumn(),
            console=self.console,
            disable=self.quiet,
        )
        task_id = progress.add_task(description, total=total)
        try:
            with progress:
                yield progress, task_id
        finally:
            if not progress.finished:
                progress.update(task_id, completed=total)

    def show_error(self, message: str) -> None:
        """Affiche un message d'erreur."""
        self.console.print(f"[bold {self.colors['error']}]✗ Erreur : {message}[/]")

    def show_warning(self, message: str) -> None:
        """Affiche un avertissement."""
        self.console.print(f"[bold {self.colors['warning']}]⚠ Attention : {message}[/]")

    def show_info(self, message: str) -> None:
        """Affiche un message d'information."""
        if not self.quiet:
            self.console.print(f"[{self.colors['info']}]ℹ {message}[/]")

    def show_success(self, message: str) -> None:
        """Affiche un message de succès."""
        if not self.quiet:
            self.console.print(f"[bold {self.colors['success']}]✓ {message}[/]")


# Instance globale du gestionnaire d'interface
ui = UIManager()
