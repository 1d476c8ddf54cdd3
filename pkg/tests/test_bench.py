import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spatialkit.agent import MockChatClient
from spatialkit.bench import (
    MRA_THRESHOLDS,
    BenchItem,
    BenchResult,
    agent_pipeline,
    build_report,
    grade,
    load_dataset,
    read_results_log,
    run_bench,
    score_accuracy,
    score_mra,
    split_options,
)
from spatialkit.bundle import load_bundle
from spatialkit.errors import DatasetError
from spatialkit.fixtures import FIXTURE_CONFIG


def _item(item_id="i1", category="other", answer_type="multi-choice",
          truth="A", options=None, images=()):
    if options is None and answer_type == "multi-choice":
        options = {"A": "left", "B": "right"}
    return BenchItem(id=item_id, question="q?", options=options or {},
                     image_paths=tuple(images), category=category,
                     ground_truth=truth, answer_type=answer_type)


def _result(item_id="i1", prediction="A", correct=True, failure=None):
    return BenchResult(item_id=item_id, prediction=prediction,
                       correct=correct,
                       timings={"codegen": 0.1, "execution": 0.2,
                                "answer": 0.1},
                       failure_stage=failure)


# --- option splitting -------------------------------------------------------------

def test_split_options_basic():
    q = ("In which direction did I move?\n"
         "A. Diagonally forward and left\n"
         "B. Directly right\n"
         "C. Directly left\n"
         "D. Diagonally forward and right")
    stem, options = split_options(q)
    assert stem == "In which direction did I move?"
    assert len(options) == 4
    assert options["B"] == "Directly right"


def test_split_options_free_text_fallback():
    stem, options = split_options("Just a question with no options?")
    assert options == {}
    assert stem.startswith("Just a question")


def test_split_options_single_letter_not_enough():
    stem, options = split_options("One line\nA. only one option")
    assert options == {}


# --- scoring ---------------------------------------------------------------------

def test_score_mra_exact():
    assert score_mra(10, 10) == 1.0


def test_score_mra_partial():
    assert score_mra(12, 10) == 0.6


def test_score_mra_total_miss():
    assert score_mra(20, 10) == 0.0


def test_score_mra_zero_truth():
    with pytest.raises(ValueError):
        score_mra(1, 0)


def test_mra_threshold_set():
    assert len(MRA_THRESHOLDS) == 10
    assert MRA_THRESHOLDS[0] == 0.50
    assert MRA_THRESHOLDS[-1] == pytest.approx(0.95)


@settings(deadline=None, max_examples=300)
@given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
def test_mra_is_multiple_of_tenth(pred, truth):
    if truth == 0.0:
        return
    score = score_mra(pred, truth)
    assert 0.0 <= score <= 1.0
    assert round(score * 10) == pytest.approx(score * 10)


def test_grade_multi_choice():
    assert grade(_item(truth="A"), "A") is True
    assert grade(_item(truth="A"), "B") is False
    assert grade(_item(truth="A"), None) is False


def test_grade_numeric():
    item = _item(answer_type="numeric-count", truth=4, options={})
    assert grade(item, 4.0) is True
    assert grade(item, 5.0) is False
    other = _item(answer_type="numeric-other", truth=10.0, options={})
    assert grade(other, 12.0) == 0.6
    zero = _item(answer_type="numeric-other", truth=0.0, options={})
    assert grade(zero, 1.0) is None  # excluded from scoring


def test_score_accuracy_basic():
    items = [_item("a", "rotation"), _item("b", "rotation"),
             _item("c", "among"), _item("d", "among")]
    results = [_result("a", correct=True), _result("b", correct=False),
               _result("c", correct=True), _result("d", correct=True)]
    overall, per_cat = score_accuracy(results, items)
    assert overall == 0.75
    assert per_cat == {"rotation": 0.5, "among": 1.0}
    assert "around" not in per_cat


def test_score_accuracy_length_mismatch():
    with pytest.raises(ValueError):
        score_accuracy([_result("a")], [])


def test_rescoring_log_is_pure(tmp_path):
    items = [_item("a"), _item("b")]
    results = [_result("a", correct=True), _result("b", correct=False)]
    log = tmp_path / "log.jsonl"
    log.write_text("\n".join(r.to_json() for r in results) + "\n")
    reloaded = read_results_log(log)
    r1 = build_report(results, items)
    r2 = build_report(reloaded, items)
    assert json.dumps(r1.to_dict(), sort_keys=True) == \
        json.dumps(r2.to_dict(), sort_keys=True)


def test_report_failure_counts_sum():
    items = [_item(c) for c in "abcd"]
    results = [_result("a", correct=True),
               _result("b", correct=False, failure="execution"),
               _result("c", correct=False, failure="execution"),
               _result("d", correct=False, failure="answer")]
    report = build_report(results, items)
    assert sum(report.failure_counts.values()) == 3
    assert report.failure_counts == {"execution": 2, "answer": 1}


def test_report_table_columns():
    items = [_item("a", "rotation")]
    results = [_result("a", correct=True)]
    table = build_report(results, items).table()
    for col in ("Overall", "Rotation", "Among", "Around"):
        assert col in table


# --- loading ----------------------------------------------------------------------

def test_load_dataset_mindcube(bench_fixture):
    items = load_dataset(bench_fixture["dataset_mindcube"],
                         format="mindcube",
                         images_root=bench_fixture["root"])
    assert len(items) == 7
    assert all(len(i.options) == 4 for i in items)
    assert {i.category for i in items} <= {"rotation", "among", "around"}


def test_load_dataset_omni3d(bench_fixture):
    items = load_dataset(bench_fixture["dataset"], format="omni3d",
                         images_root=bench_fixture["root"])
    assert len(items) == 10
    types = {i.answer_type for i in items}
    assert types == {"multi-choice", "yes-no", "numeric-count",
                     "numeric-other"}


def test_load_dataset_malformed_record(tmp_path):
    p = tmp_path / "bad.jsonl"
    p.write_text('{"id": 1}\nnot json\n')
    with pytest.raises(DatasetError) as e:
        load_dataset(p, format="mindcube")
    assert ":1:" in str(e.value) or ":2:" in str(e.value)


def test_load_dataset_missing_image(tmp_path):
    p = tmp_path / "d.jsonl"
    p.write_text(json.dumps({
        "id": "x", "question": "q?\nA. a\nB. b", "images": ["gone.png"],
        "setting": "rotation", "answer": "A"}) + "\n")
    with pytest.raises(DatasetError) as e:
        load_dataset(p, format="mindcube", images_root=tmp_path)
    assert "gone.png" in str(e.value)


def test_load_dataset_unknown_format(tmp_path):
    p = tmp_path / "d.jsonl"
    p.write_text("")
    with pytest.raises(ValueError):
        load_dataset(p, format="csv")


# --- runner -----------------------------------------------------------------------

def _fixture_pipeline(bench_fixture):
    items = load_dataset(bench_fixture["dataset"], format="omni3d",
                         images_root=bench_fixture["root"])
    bundles = {i.id: load_bundle(bench_fixture["bundles_root"] / i.id)
               for i in items}
    client = MockChatClient(bench_fixture["chat_fixtures"])
    return items, agent_pipeline(client, FIXTURE_CONFIG,
                                 lambda it: bundles[it.id])


def test_run_bench_full_marks(bench_fixture, tmp_path):
    items, pipeline = _fixture_pipeline(bench_fixture)
    report, results, _ = run_bench(items, pipeline,
                                   results_path=tmp_path / "r.jsonl")
    assert report.overall == 1.0
    assert report.item_count == 10
    assert report.mra == 1.0
    assert report.failure_counts == {}


def test_run_bench_parallel_matches_serial(bench_fixture, tmp_path):
    items, pipeline = _fixture_pipeline(bench_fixture)
    r1, _, _ = run_bench(items, pipeline, parallelism=1,
                         results_path=tmp_path / "s.jsonl")
    r4, _, _ = run_bench(items, pipeline, parallelism=4,
                         results_path=tmp_path / "p.jsonl")
    d1, d4 = r1.to_dict(), r4.to_dict()
    d1.pop("mean_timings"), d4.pop("mean_timings")
    assert d1 == d4


def test_run_bench_resume(bench_fixture, tmp_path):
    items, pipeline = _fixture_pipeline(bench_fixture)
    log = tmp_path / "resume.jsonl"
    run_bench(items[:4], pipeline, results_path=log)
    assert len(read_results_log(log)) == 4
    report, results, _ = run_bench(items, pipeline, results_path=log,
                                   resume=True)
    assert report.overall == 1.0
    logged = read_results_log(log)
    assert len(logged) == 10  # no duplicates appended
    assert len({r.item_id for r in logged}) == 10


def test_run_bench_duplicate_ids_rejected(bench_fixture):
    items, pipeline = _fixture_pipeline(bench_fixture)
    with pytest.raises(ValueError):
        run_bench([items[0], items[0]], pipeline)


def test_run_bench_item_failure_is_tagged(bench_fixture, tmp_path):
    items, _ = _fixture_pipeline(bench_fixture)
    # a client with no fixtures: every stage fails, nothing crashes
    client = MockChatClient()
    pipeline = agent_pipeline(client, FIXTURE_CONFIG,
                              lambda it: (_ for _ in ()).throw(
                                  RuntimeError("unused")))
    report, results, _ = run_bench(items[:3], pipeline)
    assert report.overall == 0.0
    assert all(r.failure_stage == "program-generation" for r in results)
