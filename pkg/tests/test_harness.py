import json
import os
import shutil

import pytest

from logicpool.errors import ConfigError
from logicpool.harness.config import (
    BackendConfig,
    ExperimentConfig,
    GenerateSpec,
    config_from_obj,
    desk_generate_spec,
)
from logicpool.harness.records import EvalRecord, SelectionRow, load_records, read_jsonl
from logicpool.harness.report import stratify
from logicpool.harness.run import build_corpus, run
from logicpool.selection import CanonicalAnswer

from conftest import ClosedWorld


def mock_config(tmp_path, world_paths, run_name="run", **overrides):
    defaults = dict(
        run_dir=str(tmp_path / run_name),
        corpus_path=world_paths["corpus"],
        backend=BackendConfig(kind="mock", script_path=world_paths["script"]),
        concurrency=3,
    )
    defaults.update(overrides)
    return ExperimentConfig(**defaults)


@pytest.fixture(scope="module")
def world(tmp_path_factory):
    world = ClosedWorld()
    paths = world.write(tmp_path_factory.mktemp("world"))
    return world, paths


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------


def test_config_requires_exactly_one_corpus_source(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig(run_dir=str(tmp_path))
    with pytest.raises(ConfigError):
        ExperimentConfig(
            run_dir=str(tmp_path), corpus_path="x.jsonl", generate=GenerateSpec(kk_sizes=(3,), kk_per_size=1)
        )


def test_config_rejects_unknown_criterion(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig(run_dir=str(tmp_path), corpus_path="x.jsonl", criteria=("coin_flip",))


def test_config_rejects_bad_lambdas_and_duplicates(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig(run_dir=str(tmp_path), corpus_path="x.jsonl", lambda_p=1.2)
    with pytest.raises(ConfigError):
        ExperimentConfig(
            run_dir=str(tmp_path),
            corpus_path="x.jsonl",
            strategies=("no_strategy", "no_strategy"),
        )


def test_config_from_obj_with_presets(tmp_path):
    obj = {
        "run_dir": "rd",
        "corpus": {"generate": {"preset": "desk", "seed": 3}},
        "strategies": "strategies_only",
        "backend": {"kind": "mock", "script": "mock.json"},
    }
    config = config_from_obj(obj, base_dir=str(tmp_path))
    assert config.run_dir == str(tmp_path / "rd")
    assert config.generate.kk_per_size == 40
    assert config.generate.kk_sizes == (3, 4, 5, 6)
    assert len(config.generate.zebra_configs) == 9
    assert config.strategies == (
        "supposition_following",
        "chain_construction",
        "compound_strategy",
        "concatenation_strategy",
    )
    assert config.backend.script_path == str(tmp_path / "mock.json")


def test_env_overrides_backend(monkeypatch, tmp_path):
    monkeypatch.setenv("LOGICPOOL_ENDPOINT", "http://env-host/v1")
    monkeypatch.setenv("LOGICPOOL_MODEL", "env-model")
    monkeypatch.setenv("LOGICPOOL_API_KEY", "env-key")
    obj = {
        "run_dir": "rd",
        "corpus": {"path": "c.jsonl"},
        "backend": {"kind": "openai", "base_url": "http://file-host/v1", "model": "file-model"},
    }
    config = config_from_obj(obj, base_dir=str(tmp_path))
    assert config.backend.base_url == "http://env-host/v1"
    assert config.backend.model == "env-model"
    assert config.backend.api_key == "env-key"


def test_desk_spec_counts():
    spec = desk_generate_spec()
    assert len(spec.kk_sizes) * spec.kk_per_size == 160
    easy = sum(c for h, a, c in spec.zebra_configs if (h == 2) or (h == 3 and a in (2, 3)))
    hard = sum(c for h, a, c in spec.zebra_configs) - easy
    assert (easy, hard) == (20, 10)
    assert all(h <= 4 and a <= 4 for h, a, c in spec.zebra_configs if not (h == 2 or (h == 3 and a in (2, 3))))


def test_build_corpus_generate_counts():
    spec = GenerateSpec(kk_sizes=(3, 4), kk_per_size=2, zebra_configs=((2, 2, 2),), seed=5)
    config = ExperimentConfig(run_dir="unused", generate=spec)
    corpus = build_corpus(config)
    assert len(corpus) == 6
    assert [p.family for p in corpus] == ["kk"] * 4 + ["zebra"] * 2
    assert len({p.puzzle_id for p in corpus}) == 6


# ---------------------------------------------------------------------------
# end-to-end closed world
# ---------------------------------------------------------------------------


def test_closed_world_report_matches_hand_computation(tmp_path, world):
    world_obj, paths = world
    config = mock_config(tmp_path, paths)
    result = run(config)
    assert result.exit_code == 0
    assert result.failures == []
    # record count = |corpus| x |strategy pool| x samples
    assert len(result.records) == 4 * 5 * 1

    for row, expected_cells in world_obj.EXPECTED_KK.items():
        for column, expected in expected_cells.items():
            got = result.tables["kk"].accuracy(row, column)
            assert got == expected, f"kk {row} / {column}: {got} != {expected}"
    for row, expected_cells in world_obj.EXPECTED_ZEBRA.items():
        for column, expected in expected_cells.items():
            got = result.tables["zebra"].accuracy(row, column)
            assert got == expected, f"zebra {row} / {column}: {got} != {expected}"


def test_closed_world_tie_bookkeeping(tmp_path, world):
    _, paths = world
    result = run(mock_config(tmp_path, paths))
    rows = {(r.puzzle_id, r.criterion): r for r in result.selections}
    kk_a = next(p for p in result.records if p.difficulty == "3 Person").puzzle_id
    kk_b = next(p for p in result.records if p.difficulty == "4 Person").puzzle_id
    assert rows[(kk_a, "majority_vote")].tie_occurred
    assert rows[(kk_a, "vote_prob")].tie_breaker_used == "max_prob"
    assert rows[(kk_a, "vote_verifier")].tie_breaker_used == "verifier"
    assert not rows[(kk_b, "majority_vote")].tie_occurred
    assert rows[(kk_b, "vote_prob")].tie_breaker_used is None


def test_rerun_issues_zero_backend_calls(tmp_path, world):
    _, paths = world
    config = mock_config(tmp_path, paths)
    first = run(config)
    assert first.backend_calls > 0
    records_before = open(os.path.join(config.run_dir, "records.jsonl"), "rb").read()
    second = run(mock_config(tmp_path, paths))
    assert second.backend_calls == 0
    records_after = open(os.path.join(config.run_dir, "records.jsonl"), "rb").read()
    assert records_before == records_after
    assert [r.to_obj() for r in first.records] == [r.to_obj() for r in second.records]


def test_replay_into_fresh_directory_is_byte_identical(tmp_path, world):
    _, paths = world
    config_a = mock_config(tmp_path, paths, run_name="runA")
    run(config_a)
    run_b_dir = tmp_path / "runB"
    os.makedirs(run_b_dir)
    shutil.copyfile(os.path.join(config_a.run_dir, "journal.jsonl"), run_b_dir / "journal.jsonl")
    config_b = mock_config(tmp_path, paths, run_name="runB", replay=True)
    result_b = run(config_b)
    assert result_b.backend_calls == 0
    for name in ("records.jsonl", "selections.jsonl", "tokens.jsonl", "report.md",
                 "report_kk.csv", "report_zebra.csv", "clue_accuracy.csv"):
        a = open(os.path.join(config_a.run_dir, name), "rb").read()
        b = open(run_b_dir / name, "rb").read()
        assert a == b, f"{name} differs between original and replay"


def test_oracle_only_run_never_verifies(tmp_path, world):
    _, paths = world
    config = mock_config(tmp_path, paths, criteria=("oracle",))
    run(config)
    journal = read_jsonl(os.path.join(config.run_dir, "journal.jsonl"))
    kinds = {entry["kind"] for entry in journal}
    assert kinds == {"generate"}


def test_vote_verifier_only_verifies_tied_pools(tmp_path, world):
    _, paths = world
    config = mock_config(tmp_path, paths, criteria=("vote_verifier", "oracle"))
    run(config)
    journal = read_jsonl(os.path.join(config.run_dir, "journal.jsonl"))
    verify_entries = [e for e in journal if e["kind"] == "completion_probability"]
    # only kkA's pool ties; its four parseable candidates get verified
    assert len(verify_entries) == 4


def test_resumed_run_backfills_verifier_scores(tmp_path, world):
    _, paths = world
    config = mock_config(tmp_path, paths, criteria=("majority_vote", "oracle"))
    first = run(config)
    assert all(r.verifier is None for r in first.records)
    config_full = mock_config(tmp_path, paths, criteria=("verifier", "oracle"))
    second = run(config_full)
    verified = [r for r in second.records if r.verifier is not None]
    assert verified  # lazily computed on resume
    reloaded = load_records(os.path.join(config.run_dir, "records.jsonl"))
    assert sum(1 for r in reloaded if r.verifier is not None) == len(verified)


def test_partial_failure_sets_exit_code(tmp_path, world):
    world_obj, paths = world
    # drop kkB's fallback rule: its no_strategy prompt then matches nothing
    script = world_obj.mock_script()
    script["responses"] = [
        r for r in script["responses"] if r.get("match") != world_obj.question_needle("kkB")
    ]
    script_path = tmp_path / "broken.json"
    with open(script_path, "w") as handle:
        json.dump(script, handle)
    config = mock_config(
        tmp_path, {"corpus": paths["corpus"], "script": str(script_path)}, run_name="broken"
    )
    result = run(config)
    assert result.exit_code == 2
    assert len(result.failures) == 1
    assert result.failures[0]["kind"] == "generate"
    failed = [r for r in result.records if r.error]
    assert len(failed) == 1
    assert failed[0].finish_reason == "error"
    assert not failed[0].answer.parse_ok
    assert os.path.exists(os.path.join(config.run_dir, "failures.jsonl"))


def test_sweep_midpoint_matches_run_selection(tmp_path, world):
    from logicpool.harness.sweep import sweep

    _, paths = world
    result = run(mock_config(tmp_path, paths))
    for criterion in ("max_prob", "min_entropy"):
        rows = sweep(result.records, criterion)
        at_half = next(accuracy for lam, accuracy, _ in rows if lam == 0.5)
        selected = [s for s in result.selections if s.criterion == criterion]
        run_accuracy = sum(s.correct for s in selected) / len(selected)
        assert at_half == run_accuracy


def test_run_with_generated_corpus_and_unparseable_responses(tmp_path):
    # a generic mock rule with no answer block: every candidate is
    # unparseable, criteria degrade to no-answer rows, oracle scores 0
    script_path = tmp_path / "generic.json"
    with open(script_path, "w") as handle:
        json.dump({"responses": [{"match": "", "text": "I have no conclusion."}]}, handle)
    config = ExperimentConfig(
        run_dir=str(tmp_path / "gen_run"),
        generate=GenerateSpec(kk_sizes=(3,), kk_per_size=2, zebra_configs=((2, 2, 1),), seed=11),
        backend=BackendConfig(kind="mock", script_path=str(script_path)),
        criteria=("majority_vote", "max_prob", "oracle"),
    )
    result = run(config)
    assert result.exit_code == 0
    assert os.path.exists(os.path.join(config.run_dir, "corpus.jsonl"))
    assert len(result.records) == 3 * 5
    assert all(not r.answer.parse_ok for r in result.records)
    for row in result.selections:
        assert not row.correct
        if row.criterion != "oracle":
            assert row.error  # no parseable candidate to select
    # resume reuses the generated corpus and the journal
    second = run(
        ExperimentConfig(
            run_dir=config.run_dir,
            generate=config.generate,
            backend=config.backend,
            criteria=config.criteria,
        )
    )
    assert second.backend_calls == 0
    assert [r.to_obj() for r in second.records] == [r.to_obj() for r in result.records]


def test_run_directory_lock(tmp_path, world):
    _, paths = world
    config = mock_config(tmp_path, paths, run_name="locked")
    os.makedirs(config.run_dir)
    with open(os.path.join(config.run_dir, ".lock"), "w") as handle:
        handle.write("12345")
    with pytest.raises(ConfigError):
        run(config)


def test_separate_verifier_backend_uses_own_journal(tmp_path, world):
    _, paths = world
    config = mock_config(
        tmp_path,
        paths,
        verifier_backend=BackendConfig(kind="mock", script_path=paths["script"]),
    )
    result = run(config)
    assert result.exit_code == 0
    generation_kinds = {e["kind"] for e in read_jsonl(os.path.join(config.run_dir, "journal.jsonl"))}
    assert generation_kinds == {"generate"}
    verifier_entries = read_jsonl(os.path.join(config.run_dir, "verifier_journal.jsonl"))
    assert verifier_entries
    assert {e["kind"] for e in verifier_entries} == {"completion_probability"}
    assert result.backend_calls == 20 + len(verifier_entries)


def test_strategy_pool_preset_runs_without_baseline(tmp_path, world):
    _, paths = world
    config = mock_config(
        tmp_path,
        paths,
        strategies=(
            "supposition_following",
            "chain_construction",
            "compound_strategy",
            "concatenation_strategy",
        ),
        criteria=("majority_vote", "max_prob", "oracle"),
    )
    result = run(config)
    assert len(result.records) == 4 * 4
    assert "no_strategy" not in {r.strategy for r in result.records}
    # kkA now has one correct (supp) vs two wrong (chain, comp): majority wrong
    kk_a = next(r.puzzle_id for r in result.records if r.difficulty == "3 Person")
    majority = next(
        s for s in result.selections if s.puzzle_id == kk_a and s.criterion == "majority_vote"
    )
    assert not majority.correct and not majority.tie_occurred


def test_samples_multiply_records(tmp_path, world):
    _, paths = world
    config = mock_config(tmp_path, paths, run_name="sampled", samples=2)
    result = run(config)
    assert len(result.records) == 4 * 5 * 2
    assert {r.sample for r in result.records} == {0, 1}
    per_sample_rows = {(s.puzzle_id, s.sample) for s in result.selections}
    assert len(per_sample_rows) == 8


# ---------------------------------------------------------------------------
# stratify unit fixture
# ---------------------------------------------------------------------------


def _record(puzzle_id, difficulty, strategy, correct, family="kk"):
    return EvalRecord(
        puzzle_id=puzzle_id,
        family=family,
        difficulty=difficulty,
        strategy=strategy,
        sample=0,
        prompt_sha256="h",
        response_text="",
        finish_reason="stop",
        answer=CanonicalAnswer.unparsed(family),
        correct=correct,
    )


def test_record_roundtrip_with_annotations():
    record = _record("p1", "3 Person", "no_strategy", True)
    record.annotations = {"observed_strategy": "supposition_following", "annotator": "rk"}
    record.verifier = None
    clone = EvalRecord.from_obj(json.loads(json.dumps(record.to_obj())))
    assert clone.to_obj() == record.to_obj()
    assert clone.annotations["observed_strategy"] == "supposition_following"


def test_clue_accuracy_series(tmp_path, world):
    _, paths = world
    result = run(mock_config(tmp_path, paths))
    from logicpool.harness.report import clue_count_series

    series = clue_count_series(result.records, result.selections)
    assert series, "zebra records must produce clue-count rows"
    names = {name for name, _, _, _ in series}
    assert "Oracle" in names and "No strategy" in names
    zebra_records = [r for r in result.records if r.family == "zebra"]
    observed_counts = {r.n_clues for r in zebra_records}
    assert {n for _, n, _, _ in series} <= observed_counts
    # within each (row, clue count) cell the accuracy is correct/total
    for name, n_clues, accuracy, total in series:
        assert 0.0 <= accuracy <= 1.0 and total >= 1


def test_stratify_exact_percentages():
    records = [
        _record("p1", "3 Person", "no_strategy", True),
        _record("p2", "3 Person", "no_strategy", False),
        _record("p3", "5 Person", "no_strategy", True),
        _record("p1", "3 Person", "chain_construction", False),
    ]
    selections = [
        SelectionRow("p1", "kk", "3 Person", "majority_vote", True),
        SelectionRow("p2", "kk", "3 Person", "majority_vote", False),
        SelectionRow("p3", "kk", "5 Person", "majority_vote", False),
    ]
    table = stratify(records, selections, "kk")
    assert table.accuracy("No strategy", "3 Person") == 0.5
    assert table.accuracy("No strategy", "5 Person") == 1.0
    assert table.accuracy("No strategy", "Avg.") == pytest.approx(2 / 3)
    assert table.accuracy("No strategy", "4 Person") is None
    assert table.accuracy("Chain Construction", "3 Person") == 0.0
    assert table.accuracy("majority_vote", "Avg.") == pytest.approx(1 / 3)
    markdown = table.to_markdown()
    assert "| No strategy" in markdown and "66.7%" in markdown
    csv = table.to_csv()
    assert csv.splitlines()[0] == "row,3 Person,4 Person,5 Person,6 Person,Avg."
