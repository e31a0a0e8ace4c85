#!/usr/bin/env python3
"""Regenerate the bundled replay transcripts for the fixture planners.

The transcripts are authored, not recorded from a provider: each cell's
reply is chosen from the outcome tables below so that replaying them
through ``run_suite`` exercises success, failure and refusal rows. Rerun
this whenever the reference map, the task suites or the prompt layout
change, since replay is keyed by a hash of the exact request.

    python scripts/author_transcripts.py
"""

from __future__ import annotations

import json
from pathlib import Path

from sentmap.core import SentMap, find_object
from sentmap.evaluation import (
    DIRECT,
    INDIRECT,
    TaskSpec,
    cell_prompt,
    data_path,
    load_conditions,
    load_tasks,
    reference_environment,
)
from sentmap.goals import ALL_OF, GoalSpec
from sentmap.llm import make_request, request_hash
from sentmap.planning import oracle_plan, resolve_object
from sentmap.skills import Plan, SkillCall, default_skill_api

OK, BAD, REFUSE = "ok", "bad", "refuse"

# (label, map variant, query form) -> outcome per task, in suite order
TABLE1 = {
    ("model-a", "baseline", DIRECT): [OK, BAD, OK],
    ("model-a", "enhanced", DIRECT): [OK, OK, OK],
    ("model-b", "baseline", DIRECT): [REFUSE, REFUSE, REFUSE],
    ("model-b", "enhanced", DIRECT): [OK, OK, OK],
}
TABLE2 = {
    ("model-a", "baseline", DIRECT): [BAD, OK, BAD, BAD, BAD, OK, BAD, BAD, BAD],
    ("model-a", "baseline", INDIRECT): [BAD] * 9,
    ("model-a", "enhanced", DIRECT): [OK] * 9,
    ("model-a", "enhanced", INDIRECT): [OK] * 7 + [BAD, BAD],
    ("model-a", "enhanced+ownership", DIRECT): [OK] * 9,
    ("model-a", "enhanced+ownership", INDIRECT): [OK] * 9,
}

WRAPPERS = [
    "Here is the plan.\n\n{block}\n",
    "Sure! I'll take care of that.\n{block}\nThe robot should finish with the item in hand.",
    "{bare}\n\nReasoning: the item is listed at that location in the scene.",
    "Plan:\n```\n{{\"plan\": {bare}}}\n```\nLet me know if anything changes.",
]


def _first_goal(goal: GoalSpec) -> GoalSpec:
    return goal.goals[0] if goal.kind == ALL_OF else goal


def wrong_plan(m: SentMap, task: TaskSpec) -> Plan:
    """A plausible but wrong guess for ``task``."""
    goal = _first_goal(task.goal)
    query = goal.object
    assert query is not None
    if query.owner is not None:
        # hand over a same-category item that belongs to nobody
        loose = query.without_owner()
        unowned = [h for h in find_object(m, loose) if h[2].owner is None]  # type: ignore[arg-type]
        # prefer an item that can be picked without opening anything
        open_access = [h for h in unowned if m.nodes[h[0]].semantic.entity_named(h[1]).state is None]
        node, _, obj = (open_access or unowned)[0]
        steps = [SkillCall("goto", (node,)), SkillCall("pick", (obj.name,))]
        if goal.person is not None:
            person = m.person(goal.person)
            steps += [SkillCall("goto", (person.location,)), SkillCall("give", (obj.name, person.name))]
        return Plan(steps)
    node, _, obj = resolve_object(m, query)
    guess = sorted(n for n in m.nodes if n != node and n.split("_")[0] != node.split("_")[0])[0]
    return Plan([SkillCall("goto", (guess,)), SkillCall("pick", (obj.name,))])


def reply_for(outcome: str, m: SentMap, task: TaskSpec, index: int) -> str:
    if outcome == REFUSE:
        return (
            "I can't determine where that item is: the scene only lists locations, not the items at them. "
            "I need more context about which objects are at each location before I can plan this."
        )
    plan = oracle_plan(m, task.goal, task.start) if outcome == OK else wrong_plan(m, task)
    bare = json.dumps(plan.to_list(), ensure_ascii=False)
    return WRAPPERS[index % len(WRAPPERS)].format(block=plan.render(), bare=bare)


def author(tables: list[tuple[dict, str, str]]) -> dict[str, list[dict]]:
    m = reference_environment()
    api = default_skill_api()
    out: dict[str, list[dict]] = {}
    counter = 0
    for table, tasks_file, conditions_file in tables:
        tasks = load_tasks(data_path(tasks_file))
        for cond in load_conditions(data_path(conditions_file)):
            outcomes = table[(cond.planner.label, cond.map_variant, cond.query_form)]
            for task, outcome in zip(tasks, outcomes):
                prompt = cell_prompt(m, task, cond, api)
                if prompt is None:
                    continue
                request = make_request(cond.planner.label, prompt.messages(), 0.0)
                response = reply_for(outcome, m, task, counter)
                counter += 1
                out.setdefault(cond.planner.label, []).append(
                    {"request_hash": request_hash(request), "request": request, "response": response}
                )
    return out


def main() -> None:
    transcripts = author(
        [
            (TABLE1, "tasks_table1.json", "fixture_table1.json"),
            (TABLE2, "tasks_table2.json", "fixture_table2.json"),
        ]
    )
    target = data_path("transcripts")
    target.mkdir(exist_ok=True)
    for label, entries in sorted(transcripts.items()):
        path = Path(target) / f"{label}.json"
        path.write_text(json.dumps(entries, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
        print(f"wrote {len(entries)} entries to {path}")


if __name__ == "__main__":
    main()
