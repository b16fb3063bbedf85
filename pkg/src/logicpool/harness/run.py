"""End-to-end experiment driver.

A run directory holds the corpus, the request/response journal, EvalRecords
(JSONL + token sidecar), per-puzzle selection rows, reports, and a
manifest. Everything downstream of the journal is pure, so re-running a
completed directory (or replaying its journal into a fresh one) reproduces
records and reports byte-for-byte with zero backend calls.
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass

from .. import __version__
from ..errors import BackendError, ConfigError, LogicPoolError, NoAnswerError
from ..inference import JournalingClient, ModelResponse, token_to_obj
from ..prompts import TEMPLATE_VERSION, RenderedPrompt, Strategy, kk_question, render, zebra_question
from ..puzzles import KnightsKnavesPuzzle, Puzzle, generate_kk, generate_zebra, puzzle_from_obj, puzzle_to_obj
from ..scoring import score_response, segment
from ..selection import (
    MAJORITY_VOTE,
    MAX_PROB,
    MIN_ENTROPY,
    ORACLE,
    VERIFIER,
    VOTE_PROB,
    VOTE_VERIFIER,
    Candidate,
    CandidatePool,
    SelectionResult,
    majority_groups,
    extract_answer,
    majority_vote,
    oracle,
    select_max_prob,
    select_min_entropy,
    select_verifier,
    truth_answer,
    vote_plus_prob,
    vote_plus_verifier,
)
from ..verifier import chunk, verify
from .config import ExperimentConfig
from .records import EvalRecord, SelectionRow, append_jsonl, load_records, read_jsonl, write_jsonl
from .report import ReportTable, clue_count_series, clue_series_csv, stratify

RECORDS_FILE = "records.jsonl"
TOKENS_FILE = "tokens.jsonl"
SELECTIONS_FILE = "selections.jsonl"
JOURNAL_FILE = "journal.jsonl"
VERIFIER_JOURNAL_FILE = "verifier_journal.jsonl"
CORPUS_FILE = "corpus.jsonl"
MANIFEST_FILE = "manifest.json"
FAILURES_FILE = "failures.jsonl"
REPORT_MD_FILE = "report.md"
LOCK_FILE = ".lock"


@dataclass
class RunResult:
    run_dir: str
    records: list[EvalRecord]
    selections: list[SelectionRow]
    tables: dict[str, ReportTable]
    failures: list[dict]
    backend_calls: int
    exit_code: int


class _RunLock:
    """One process owns a run directory at a time."""

    def __init__(self, run_dir: str) -> None:
        self.path = os.path.join(run_dir, LOCK_FILE)

    def __enter__(self) -> "_RunLock":
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise ConfigError(
                f"run directory is locked by {self.path}; remove it if the owner is gone"
            ) from None
        with os.fdopen(fd, "w") as handle:
            handle.write(str(os.getpid()))
        return self

    def __exit__(self, *exc_info) -> None:
        try:
            os.remove(self.path)
        except FileNotFoundError:
            pass


def build_corpus(config: ExperimentConfig) -> list[Puzzle]:
    """Deterministic corpus: generated from the spec or loaded from JSONL."""
    if config.corpus_path:
        return [puzzle_from_obj(obj) for obj in read_jsonl(config.corpus_path)]
    spec = config.generate
    assert spec is not None
    puzzles: list[Puzzle] = []
    index = 0
    for size in spec.kk_sizes:
        for _ in range(spec.kk_per_size):
            puzzles.append(generate_kk(size, seed=spec.seed + index))
            index += 1
    for houses, attrs, count in spec.zebra_configs:
        for offset in range(count):
            puzzles.append(generate_zebra(houses, attrs, seed=spec.seed + offset))
    return puzzles


def _sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


def _prompt_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _question_for(puzzle: Puzzle) -> str:
    if isinstance(puzzle, KnightsKnavesPuzzle):
        return kk_question(puzzle)
    return zebra_question(puzzle)


@dataclass
class _CandidateTask:
    puzzle: Puzzle
    strategy: Strategy
    sample: int
    prompt: RenderedPrompt
    prompt_sha256: str
    future: Future | None = None
    record: EvalRecord | None = None  # reused from a previous run
    is_new: bool = False
    tokens: tuple = ()


def _generate_one(client: JournalingClient, prompt: RenderedPrompt, params, tag: str) -> tuple:
    return client.generate_timed(prompt, params, tag=tag)


class _Runner:
    def __init__(self, config: ExperimentConfig) -> None:
        self.config = config
        self.failures: list[dict] = []
        self.records: list[EvalRecord] = []
        self.selections: list[SelectionRow] = []
        self.records_dirty: set[tuple] = set()

    # -- record construction -------------------------------------------------

    def _build_record(
        self,
        task: _CandidateTask,
        response: ModelResponse | None,
        elapsed: float,
        error: str | None,
    ) -> EvalRecord:
        puzzle = task.puzzle
        truth = truth_answer(puzzle)
        if response is None:
            answer = extract_answer("", puzzle)
            confidence = None
            text = ""
            finish_reason = "error"
        else:
            text = response.full_text
            finish_reason = response.finish_reason
            answer = extract_answer(text, puzzle)
            confidence = score_response(
                segment(response),
                lambda_p=self.config.lambda_p,
                lambda_e=self.config.lambda_e,
                entropy_tail=self.config.entropy_tail,
            )
            task.tokens = response.tokens
        return EvalRecord(
            puzzle_id=puzzle.puzzle_id,
            family=puzzle.family,
            difficulty=puzzle.difficulty,
            strategy=task.strategy.key,
            sample=task.sample,
            prompt_sha256=task.prompt_sha256,
            response_text=text,
            finish_reason=finish_reason,
            answer=answer,
            correct=answer.parse_ok and answer == truth,
            confidence=confidence,
            verifier=None,
            elapsed_s=elapsed,
            n_clues=len(puzzle.clues) if hasattr(puzzle, "clues") else None,
            error=error,
        )

    # -- verification ---------------------------------------------------------

    def _ensure_verified(
        self,
        pool_tasks: list[_CandidateTask],
        indices: list[int],
        question: str,
        verifier_client,
        executor: ThreadPoolExecutor,
    ) -> bool:
        """Verify the given candidates (skipping cached scores); returns
        False if any verification failed outright."""
        pending = [
            task
            for i in indices
            if (task := pool_tasks[i]).record is not None
            and task.record.verifier is None
            and task.record.answer.parse_ok
        ]

        def verify_task(task: _CandidateTask):
            return verify(question, chunk(task.record.response_text), verifier_client)

        futures = [(task, executor.submit(verify_task, task)) for task in pending]
        ok = True
        for task, future in futures:
            try:
                task.record.verifier = future.result()
                self.records_dirty.add(task.record.key)
            except (BackendError, LogicPoolError) as exc:
                ok = False
                self.failures.append(
                    {
                        "kind": "verify",
                        "puzzle_id": task.puzzle.puzzle_id,
                        "strategy": task.strategy.key,
                        "sample": task.sample,
                        "error": str(exc),
                    }
                )
        return ok

    # -- selection -------------------------------------------------------------

    def _select(
        self,
        pool: CandidatePool,
        pool_tasks: list[_CandidateTask],
        puzzle: Puzzle,
        sample: int,
        question: str,
        verifier_client,
        executor: ThreadPoolExecutor,
    ) -> None:
        truth = truth_answer(puzzle)
        parse_ok_indices = [i for i, c in enumerate(pool.candidates) if c.answer.parse_ok]

        if VERIFIER in self.config.criteria:
            self._ensure_verified(pool_tasks, parse_ok_indices, question, verifier_client, executor)
        elif VOTE_VERIFIER in self.config.criteria and parse_ok_indices:
            winners, tie = majority_groups(pool)
            if tie:
                tied = [i for group in winners for i in group]
                self._ensure_verified(pool_tasks, tied, question, verifier_client, executor)
        for i, candidate in enumerate(pool.candidates):
            candidate.verifier_score = pool_tasks[i].record.verifier

        base = dict(
            puzzle_id=puzzle.puzzle_id,
            family=puzzle.family,
            difficulty=puzzle.difficulty,
            n_clues=len(puzzle.clues) if hasattr(puzzle, "clues") else None,
        )
        for criterion in self.config.criteria:
            if criterion == ORACLE:
                self.selections.append(
                    SelectionRow(criterion=ORACLE, correct=oracle(pool, truth), sample=sample, **base)
                )
                continue
            try:
                result = self._apply_criterion(criterion, pool)
            except (NoAnswerError, ValueError) as exc:
                self.selections.append(
                    SelectionRow(criterion=criterion, correct=False, error=str(exc), sample=sample, **base)
                )
                continue
            chosen = pool.candidates[result.chosen_index]
            self.selections.append(
                SelectionRow(
                    criterion=criterion,
                    correct=chosen.answer == truth,
                    chosen_strategy=chosen.strategy.key,
                    tie_occurred=result.tie_occurred,
                    tie_breaker_used=result.tie_breaker_used,
                    sample=sample,
                    **base,
                )
            )

    def _apply_criterion(self, criterion: str, pool: CandidatePool) -> SelectionResult:
        if criterion == MAJORITY_VOTE:
            return majority_vote(pool)
        if criterion == MAX_PROB:
            return select_max_prob(pool, self.config.lambda_p)
        if criterion == MIN_ENTROPY:
            return select_min_entropy(pool, self.config.lambda_e)
        if criterion == VERIFIER:
            return select_verifier(pool)
        if criterion == VOTE_PROB:
            return vote_plus_prob(pool, self.config.lambda_p)
        if criterion == VOTE_VERIFIER:
            return vote_plus_verifier(pool)
        raise ConfigError(f"unknown criterion {criterion!r}")

    # -- main loop ---------------------------------------------------------------

    def run(self) -> RunResult:
        config = self.config
        os.makedirs(config.run_dir, exist_ok=True)
        with _RunLock(config.run_dir):
            return self._run_locked()

    def _run_locked(self) -> RunResult:
        config = self.config
        run_dir = config.run_dir

        corpus_path = os.path.join(run_dir, CORPUS_FILE)
        if config.corpus_path and os.path.abspath(config.corpus_path) != os.path.abspath(corpus_path):
            shutil.copyfile(config.corpus_path, corpus_path)
            corpus = build_corpus(config)
        elif os.path.exists(corpus_path):
            corpus = [puzzle_from_obj(obj) for obj in read_jsonl(corpus_path)]
        else:
            corpus = build_corpus(config)
            write_jsonl(corpus_path, [puzzle_to_obj(p) for p in corpus])

        journal_path = os.path.join(run_dir, JOURNAL_FILE)
        mode = "replay" if config.replay else "record"
        inner = None if config.replay else config.backend.build()
        client = JournalingClient(journal_path, inner, mode=mode)
        if config.verifier_backend is not None:
            verifier_inner = None if config.replay else config.verifier_backend.build()
            verifier_client = JournalingClient(
                os.path.join(run_dir, VERIFIER_JOURNAL_FILE), verifier_inner, mode=mode
            )
        else:
            verifier_client = client

        records_path = os.path.join(run_dir, RECORDS_FILE)
        existing: dict = {}
        if os.path.exists(records_path):
            for record in load_records(records_path):
                existing[record.key] = record
        any_reused = bool(existing)

        tokens_path = os.path.join(run_dir, TOKENS_FILE)
        strategies = config.strategy_pool()

        with ThreadPoolExecutor(max_workers=config.concurrency) as executor:
            # fan out every missing generation, in deterministic task order
            tasks: list[_CandidateTask] = []
            for puzzle in corpus:
                for sample in range(config.samples):
                    for strategy in strategies:
                        prompt = render(strategy, puzzle, instruction_tags=config.instruction_tags)
                        task = _CandidateTask(
                            puzzle=puzzle,
                            strategy=strategy,
                            sample=sample,
                            prompt=prompt,
                            prompt_sha256=_prompt_hash(prompt.full_text),
                        )
                        key = (puzzle.puzzle_id, strategy.key, sample, task.prompt_sha256)
                        if key in existing:
                            task.record = existing[key]
                        else:
                            task.future = executor.submit(
                                _generate_one, client, prompt, config.sampling, f"s{sample}"
                            )
                        tasks.append(task)

            # consume in order: records, then per-pool verification + selection
            by_pool: dict[tuple[str, int], list[_CandidateTask]] = {}
            for task in tasks:
                if task.future is not None:
                    error = None
                    response = None
                    elapsed = 0.0
                    try:
                        response, elapsed = task.future.result()
                    except (BackendError, LogicPoolError) as exc:
                        error = str(exc)
                        self.failures.append(
                            {
                                "kind": "generate",
                                "puzzle_id": task.puzzle.puzzle_id,
                                "strategy": task.strategy.key,
                                "sample": task.sample,
                                "error": error,
                            }
                        )
                    task.record = self._build_record(task, response, elapsed, error)
                    task.is_new = True
                by_pool.setdefault((task.puzzle.puzzle_id, task.sample), []).append(task)

            order: list[tuple[str, int]] = []
            seen = set()
            for task in tasks:
                key = (task.puzzle.puzzle_id, task.sample)
                if key not in seen:
                    seen.add(key)
                    order.append(key)

            for key in order:
                pool_tasks = by_pool[key]
                puzzle = pool_tasks[0].puzzle
                pool = CandidatePool(
                    puzzle_id=puzzle.puzzle_id,
                    family=puzzle.family,
                    candidates=[
                        Candidate(
                            strategy=t.strategy,
                            answer=t.record.answer,
                            confidence=t.record.confidence,
                            verifier_score=t.record.verifier,
                        )
                        for t in pool_tasks
                    ],
                )
                self._select(
                    pool, pool_tasks, puzzle, key[1], _question_for(puzzle), verifier_client, executor
                )
                for task in pool_tasks:
                    self.records.append(task.record)
                    if task.is_new:
                        append_jsonl(records_path, task.record.to_obj())
                        append_jsonl(
                            tokens_path,
                            {
                                "key": list(task.record.key),
                                "tokens": [token_to_obj(t) for t in task.tokens],
                            },
                        )

        if any_reused and self.records_dirty:
            # lazily computed verifier scores must land back in the records
            tmp = records_path + ".tmp"
            write_jsonl(tmp, [r.to_obj() for r in self.records])
            os.replace(tmp, records_path)

        write_jsonl(os.path.join(run_dir, SELECTIONS_FILE), [s.to_obj() for s in self.selections])
        if self.failures:
            write_jsonl(os.path.join(run_dir, FAILURES_FILE), self.failures)

        tables = write_reports(run_dir, self.records, self.selections)
        self._write_manifest(run_dir, corpus_path, len(corpus))

        backend_calls = client.stats.backend_calls
        if verifier_client is not client:
            backend_calls += verifier_client.stats.backend_calls
        return RunResult(
            run_dir=run_dir,
            records=self.records,
            selections=self.selections,
            tables=tables,
            failures=self.failures,
            backend_calls=backend_calls,
            exit_code=2 if self.failures else 0,
        )

    def _write_manifest(self, run_dir: str, corpus_path: str, corpus_size: int) -> None:
        config = self.config
        manifest = {
            "package_version": __version__,
            "template_version": TEMPLATE_VERSION,
            "corpus_sha256": _sha256_file(corpus_path),
            "corpus_size": corpus_size,
            "strategies": list(config.strategies),
            "criteria": list(config.criteria),
            "lambda_p": config.lambda_p,
            "lambda_e": config.lambda_e,
            "entropy_tail": config.entropy_tail,
            "samples": config.samples,
            "sampling": {
                "top_p": config.sampling.top_p,
                "temperature": config.sampling.temperature,
                "max_tokens": config.sampling.max_tokens,
                "seed": config.sampling.seed,
                "top_k": config.sampling.top_k,
            },
            "backend_kind": config.backend.kind,
            "record_count": len(self.records),
        }
        with open(os.path.join(run_dir, MANIFEST_FILE), "w", encoding="utf-8") as handle:
            json.dump(manifest, handle, indent=2, ensure_ascii=False)
            handle.write("\n")


def write_reports(
    run_dir: str, records: list[EvalRecord], selections: list[SelectionRow]
) -> dict[str, ReportTable]:
    tables: dict[str, ReportTable] = {}
    sections: list[str] = []
    for family, heading in (("kk", "Knights and knaves"), ("zebra", "Zebra")):
        if not any(r.family == family for r in records):
            continue
        table = stratify(records, selections, family)
        tables[family] = table
        sections.append(f"## {heading}\n\n{table.to_markdown()}\n")
        with open(os.path.join(run_dir, f"report_{family}.csv"), "w", encoding="utf-8") as handle:
            handle.write(table.to_csv() + "\n")
    if any(r.family == "zebra" for r in records):
        series = clue_count_series(records, selections)
        with open(os.path.join(run_dir, "clue_accuracy.csv"), "w", encoding="utf-8") as handle:
            handle.write(clue_series_csv(series) + "\n")
    with open(os.path.join(run_dir, REPORT_MD_FILE), "w", encoding="utf-8") as handle:
        handle.write("# Accuracy report\n\n" + "\n".join(sections))
    return tables


def run(config: ExperimentConfig) -> RunResult:
    """Execute (or resume / replay) an experiment under its run directory."""
    return _Runner(config).run()
