"""Difficulty-stratified accuracy tables from records and selection rows."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..prompts import Strategy
from ..selection import ORACLE
from .records import EvalRecord, SelectionRow

KK_STRATA = ("3 Person", "4 Person", "5 Person", "6 Person")
KK_COLUMNS = KK_STRATA + ("Avg.",)
ZEBRA_COLUMNS = ("Easy Avg.", "Hard Avg.", "All Avg.")


@dataclass
class Cell:
    correct: int = 0
    total: int = 0

    def add(self, ok: bool) -> None:
        self.total += 1
        self.correct += int(ok)

    @property
    def accuracy(self) -> float | None:
        return None if self.total == 0 else self.correct / self.total


@dataclass
class ReportTable:
    """Rows are single strategies, then criteria, then the oracle; columns
    are the family's difficulty strata plus the overall average."""

    family: str
    columns: tuple[str, ...]
    rows: list[tuple[str, dict[str, Cell]]] = field(default_factory=list)

    def row(self, name: str) -> dict[str, Cell]:
        for row_name, cells in self.rows:
            if row_name == name:
                return cells
        cells = {column: Cell() for column in self.columns}
        self.rows.append((name, cells))
        return cells

    def accuracy(self, name: str, column: str) -> float | None:
        return self.row(name)[column].accuracy

    def to_markdown(self) -> str:
        header = f"| {'':24} | " + " | ".join(self.columns) + " |"
        divider = "|" + "-" * 26 + "|" + "|".join("-" * (len(c) + 2) for c in self.columns) + "|"
        lines = [header, divider]
        for name, cells in self.rows:
            rendered = []
            for column in self.columns:
                cell = cells[column]
                rendered.append("-" if cell.accuracy is None else f"{cell.accuracy * 100:.1f}%")
            lines.append(f"| {name:24} | " + " | ".join(rendered) + " |")
        return "\n".join(lines)

    def to_csv(self) -> str:
        lines = ["row," + ",".join(self.columns)]
        for name, cells in self.rows:
            rendered = []
            for column in self.columns:
                cell = cells[column]
                rendered.append("" if cell.accuracy is None else f"{cell.accuracy:.6f}")
            lines.append(f"{name}," + ",".join(rendered))
        return "\n".join(lines)


def _kk_columns_for(difficulty: str) -> tuple[str, ...]:
    return (difficulty, "Avg.")


def _zebra_columns_for(difficulty: str) -> tuple[str, ...]:
    return ("Easy Avg." if difficulty == "easy" else "Hard Avg.", "All Avg.")


def _columns_for(family: str, difficulty: str) -> tuple[str, ...]:
    return _kk_columns_for(difficulty) if family == "kk" else _zebra_columns_for(difficulty)


def stratify(records: list[EvalRecord], selections: list[SelectionRow], family: str) -> ReportTable:
    """Accuracy per (row, stratum): strategy rows from records, criterion
    and oracle rows from selection outcomes."""
    columns = KK_COLUMNS if family == "kk" else ZEBRA_COLUMNS
    table = ReportTable(family=family, columns=columns)

    for strategy in Strategy:  # fix row order up front
        table.row(strategy.title)
    for record in records:
        if record.family != family:
            continue
        cells = table.row(Strategy.from_key(record.strategy).title)
        for column in _columns_for(family, record.difficulty):
            cells[column].add(record.correct)

    for row in selections:
        if row.family != family:
            continue
        name = "Oracle" if row.criterion == ORACLE else row.criterion
        cells = table.row(name)
        for column in _columns_for(family, row.difficulty):
            cells[column].add(row.correct)
    return table


def clue_count_series(
    records: list[EvalRecord], selections: list[SelectionRow]
) -> list[tuple[str, int, float, int]]:
    """Accuracy grouped by zebra clue count: (row name, n_clues, accuracy,
    total) tuples, plot-ready."""
    cells: dict[tuple[str, int], Cell] = {}

    def bump(name: str, n_clues: int | None, ok: bool) -> None:
        if n_clues is None:
            return
        cells.setdefault((name, n_clues), Cell()).add(ok)

    for record in records:
        if record.family == "zebra":
            bump(Strategy.from_key(record.strategy).title, record.n_clues, record.correct)
    for row in selections:
        if row.family == "zebra":
            name = "Oracle" if row.criterion == ORACLE else row.criterion
            bump(name, row.n_clues, row.correct)
    series = [
        (name, n_clues, cell.accuracy or 0.0, cell.total)
        for (name, n_clues), cell in cells.items()
    ]
    series.sort(key=lambda item: (item[0], item[1]))
    return series


def clue_series_csv(series: list[tuple[str, int, float, int]]) -> str:
    lines = ["row,n_clues,accuracy,total"]
    for name, n_clues, accuracy, total in series:
        lines.append(f"{name},{n_clues},{accuracy:.6f},{total}")
    return "\n".join(lines)
