"""Lambda sweeps: re-run max_prob / min_entropy selection from stored
per-segment scores across a grid of lambda values, no backend calls."""

from __future__ import annotations

from ..errors import ConfigError, NoAnswerError
from ..prompts import Strategy
from ..selection import (
    MAX_PROB,
    MIN_ENTROPY,
    Candidate,
    CandidatePool,
    select_max_prob,
    select_min_entropy,
)
from .records import EvalRecord

DEFAULT_GRID = tuple(i / 100 for i in range(100))  # 0.00, 0.01, ..., 0.99


def pools_from_records(records: list[EvalRecord]) -> list[tuple[CandidatePool, list[EvalRecord]]]:
    """Rebuild per-(puzzle, sample) pools; selection needs only the stored
    answers and segment scores."""
    grouped: dict[tuple[str, int], list[EvalRecord]] = {}
    order: list[tuple[str, int]] = []
    for record in records:
        key = (record.puzzle_id, record.sample)
        if key not in grouped:
            grouped[key] = []
            order.append(key)
        grouped[key].append(record)
    pools = []
    for key in order:
        members = sorted(grouped[key], key=lambda r: Strategy.from_key(r.strategy))
        pool = CandidatePool(
            puzzle_id=key[0],
            family=members[0].family,
            candidates=[
                Candidate(
                    strategy=Strategy.from_key(r.strategy),
                    answer=r.answer,
                    confidence=r.confidence,
                )
                for r in members
            ],
        )
        pools.append((pool, members))
    return pools


def sweep(
    records: list[EvalRecord],
    criterion: str,
    grid: tuple[float, ...] = DEFAULT_GRID,
) -> list[tuple[float, float, int]]:
    """(lambda, accuracy, pool count) per grid point.

    A pool with no scorable candidate counts as incorrect, mirroring the
    run-time handling.
    """
    if criterion not in (MAX_PROB, MIN_ENTROPY):
        raise ConfigError(f"sweep supports {MAX_PROB} and {MIN_ENTROPY}, not {criterion!r}")
    if any(not 0 <= lam <= 1 for lam in grid):
        raise ConfigError("sweep grid values must lie in [0, 1]")
    pools = pools_from_records(records)
    if not pools:
        raise ConfigError("no records to sweep")
    rows = []
    for lam in grid:
        correct = 0
        for pool, members in pools:
            try:
                if criterion == MAX_PROB:
                    result = select_max_prob(pool, lambda_p=lam)
                else:
                    result = select_min_entropy(pool, lambda_e=lam)
            except (NoAnswerError, ValueError):
                continue
            if members[result.chosen_index].correct:
                correct += 1
        rows.append((lam, correct / len(pools), len(pools)))
    return rows


def sweep_csv(rows: list[tuple[float, float, int]]) -> str:
    lines = ["lambda,accuracy,pools"]
    for lam, accuracy, pools in rows:
        lines.append(f"{lam:.2f},{accuracy:.6f},{pools}")
    return "\n".join(lines)
