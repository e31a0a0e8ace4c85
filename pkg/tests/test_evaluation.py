from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

import pytest

from sentmap.core import ObjectQuery, find_object
from sentmap.errors import ConfigError
from sentmap.evaluation import (
    BASELINE,
    ENHANCED,
    ENHANCED_OWNERSHIP,
    REFUSAL,
    SUCCESS,
    Cell,
    Condition,
    EvalReport,
    PlannerSpec,
    TaskSpec,
    compute_averages,
    format_percent,
    load_conditions,
    load_tasks,
    map_variant,
    reference_environment,
    render_report,
    run_suite,
)
from sentmap.goals import GoalSpec

GOLDEN = Path(__file__).parent / "golden"

SUITES = [
    ("tasks_table1.json", "fixture_table1.json", "planner-rows", "table1_fixture.md"),
    ("tasks_table2.json", "fixture_table2.json", "task-rows", "table2_fixture.md"),
    ("tasks_table1.json", "oracle_both.json", "planner-rows", "table1_oracle.md"),
    ("tasks_table2.json", "oracle_table2.json", "task-rows", "table2_oracle.md"),
]


def suite(data_dir, tasks, conditions, **kw):
    return run_suite(load_tasks(data_dir / tasks), load_conditions(data_dir / conditions), reference_environment(), base_dir=data_dir, **kw)


def table_rows(markdown: str) -> list[list[str]]:
    return [[c.strip() for c in line.strip("|").split("|")] for line in markdown.strip().splitlines()]


# --- bundled suites ---


def test_task_suites(data_dir):
    t1 = load_tasks(data_dir / "tasks_table1.json")
    assert [t.name for t in t1] == ["Get-Sponge", "Get-Coffee", "Get-Tissue"]
    t2 = load_tasks(data_dir / "tasks_table2.json")
    assert [t.name for t in t2] == [
        "Watch TV",
        "Runny Nose",
        "Private listening",
        "Sanitization",
        "Call a friend",
        "Flavor Coffee",
        "Store Bob's leftovers",
        "Get Bob his drink",
        "Bob's things to Alice",
    ]
    assert all(t.query_indirect for t in t2)


def test_task_round_trip(data_dir):
    for t in load_tasks(data_dir / "tasks_table2.json"):
        assert TaskSpec.from_dict(json.loads(json.dumps(t.to_dict()))) == t


def test_map_variants(ref_map):
    assert map_variant(ref_map, BASELINE).object_count() == 0
    assert find_object(map_variant(ref_map, ENHANCED), ObjectQuery(owner="Bob")) == []
    assert map_variant(ref_map, ENHANCED_OWNERSHIP) == ref_map


# --- oracle runs ---


def test_oracle_table1(data_dir):
    report = suite(data_dir, "tasks_table1.json", "oracle_both.json")
    assert report.averages["enhanced/direct"][""] == 1
    assert report.averages["baseline/direct"][""] == 0


def test_oracle_tissue_baseline_fails(data_dir):
    report = suite(data_dir, "tasks_table1.json", "oracle_both.json")
    cell = next(c for c in report.cells if c.condition == "baseline/direct" and c.task == "Get-Tissue")
    assert cell.outcome == "failure"


def test_oracle_ownership_split(data_dir):
    report = suite(data_dir, "tasks_table2.json", "oracle_table2.json")
    for task in ("Store Bob's leftovers", "Get Bob his drink", "Bob's things to Alice"):
        assert report.outcome("oracle", "enhanced/direct", task) == "failure"
        assert report.outcome("oracle", "enhanced+ownership/direct", task) == SUCCESS
    assert report.outcome("oracle", "enhanced/indirect", "Watch TV") == "n/a"


def test_fixture_refusal_rendered_as_empty_set(data_dir):
    report = suite(data_dir, "tasks_table1.json", "fixture_table1.json")
    assert report.outcome("model-b", "baseline/direct", "Get-Sponge") == REFUSAL
    assert "∅" in render_report(report)


def test_parallel_matches_serial(data_dir):
    serial = suite(data_dir, "tasks_table2.json", "fixture_table2.json")
    parallel = suite(data_dir, "tasks_table2.json", "fixture_table2.json", workers=4)
    assert parallel.cells == serial.cells


# --- rendering ---


@pytest.mark.parametrize("tasks,conditions,layout,golden", SUITES)
def test_golden_tables(data_dir, tasks, conditions, layout, golden):
    report = suite(data_dir, tasks, conditions)
    assert render_report(report, "markdown", layout) == (GOLDEN / golden).read_text(encoding="utf-8")


@pytest.mark.parametrize("golden", [g for *_, g in SUITES])
def test_golden_averages_follow_rows(golden):
    rows = table_rows((GOLDEN / golden).read_text(encoding="utf-8"))
    header, body = rows[0], rows[2:]
    symbols = {"✓", "✗", "∅"}
    if header[0] == "Task":
        for col in range(1, len(header)):
            marks = [r[col] for r in body[:-1] if r[col] in symbols]
            expected = format_percent(Fraction(marks.count("✓"), len(marks)) if marks else None)
            assert body[-1][col] == expected
    else:
        avg_cols = [i for i, h in enumerate(header) if h.endswith(": Average")]
        start = 1
        for col in avg_cols:
            all_marks = []
            for r in body[:-1]:
                marks = [m for m in r[start:col] if m in symbols]
                all_marks += marks
                assert r[col] == format_percent(Fraction(marks.count("✓"), len(marks)) if marks else None)
            overall = Fraction(all_marks.count("✓"), len(all_marks)) if all_marks else None
            assert body[-1][col] == format_percent(overall)
            start = col + 1


def test_format_percent():
    assert format_percent(Fraction(1)) == "100%"
    assert format_percent(Fraction(0)) == "0.0%"
    assert format_percent(Fraction(2, 3)) == "66.7%"
    assert format_percent(Fraction(7, 18)) == "38.9%"
    assert format_percent(None) == "n/a"


def test_averages_are_exact():
    cells = [Cell("p", "c", t, o) for t, o in zip("abc", [SUCCESS, "failure", SUCCESS])]
    cells.append(Cell("p", "c", "d", "n/a"))
    assert compute_averages(cells)["c"][""] == Fraction(2, 3)


def test_json_round_trip(data_dir):
    report = suite(data_dir, "tasks_table2.json", "fixture_table2.json")
    text = render_report(report, "json")
    again = EvalReport.from_dict(json.loads(text))
    assert again == report
    assert render_report(again, "json") == text


def test_json_tampered_averages_rejected(data_dir):
    data = suite(data_dir, "tasks_table1.json", "oracle_both.json").to_dict()
    data["averages"]["enhanced/direct"]["overall"] = "1/2"
    with pytest.raises(ValueError):
        EvalReport.from_dict(data)


def test_render_rejects_unknown_format(data_dir):
    report = suite(data_dir, "tasks_table1.json", "oracle_both.json")
    with pytest.raises(ValueError):
        render_report(report, "html")


# --- configuration errors ---


def test_empty_inputs(ref_map, data_dir):
    tasks = load_tasks(data_dir / "tasks_table1.json")
    with pytest.raises(ConfigError):
        run_suite(tasks, [], ref_map)
    with pytest.raises(ConfigError):
        run_suite([], [Condition(ENHANCED, PlannerSpec("oracle"))], ref_map)


def test_missing_transcripts(ref_map, data_dir, tmp_path):
    tasks = load_tasks(data_dir / "tasks_table1.json")
    cond = Condition(ENHANCED, PlannerSpec("fixture", "ghost", "nowhere.json"))
    with pytest.raises(ConfigError):
        run_suite(tasks, [cond], ref_map, base_dir=tmp_path)


def test_replay_miss_is_config_error(ref_map, data_dir):
    tasks = [TaskSpec("Odd", "fetch the piano", GoalSpec.object_held(category="sponge"), "office_desk")]
    cond = Condition(ENHANCED, PlannerSpec("fixture", "model-a", "transcripts/model-a.json"))
    with pytest.raises(ConfigError):
        run_suite(tasks, [cond], ref_map, base_dir=data_dir)


def test_bad_condition_values():
    with pytest.raises(ConfigError):
        Condition("semantic-ish", PlannerSpec("oracle"))
    with pytest.raises(ConfigError):
        PlannerSpec.from_dict({"kind": "fixture", "label": "x"})


def test_start_node_must_exist(ref_map):
    tasks = [TaskSpec("T", "q", GoalSpec.object_held(category="sponge"), "attic")]
    with pytest.raises(ConfigError):
        run_suite(tasks, [Condition(ENHANCED, PlannerSpec("oracle"))], ref_map)
