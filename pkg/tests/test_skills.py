from __future__ import annotations

import pytest

from sentmap.errors import ArityMismatch, UnknownSkill
from sentmap.skills import (
    REQUIRED_SKILLS,
    Plan,
    RobotConstraints,
    SkillApi,
    SkillCall,
    SkillSpec,
    default_skill_api,
    entity_ref,
    split_entity_ref,
)


def test_default_api_shape(api):
    assert [s.name for s in api.skills] == list(REQUIRED_SKILLS)
    assert api.constraints.arm_count == 1
    assert "1 arm" in api.constraints.render()


def test_pick_signature(api):
    assert api.get("pick").params == (("object", "object"),)


def test_skill_specs_round_trip_through_text(api):
    for spec in api.skills:
        assert SkillSpec.parse(spec.render()) == spec
    lines = api.render().splitlines()
    assert [SkillSpec.parse(line) for line in lines] == list(api.skills)


def test_api_requires_core_skills(api):
    with pytest.raises(ValueError):
        SkillApi(api.skills[:-1])
    with pytest.raises(ValueError):
        SkillApi(api.skills + api.skills[:1])


def test_bad_param_kind():
    with pytest.raises(ValueError):
        SkillSpec("fly", (("where", "sky"),), "d", "p")


def test_constraints_positive():
    with pytest.raises(ValueError):
        RobotConstraints(arm_count=0)


def test_check_call(api):
    api.check_call(SkillCall("goto", ("a",)), 0)
    with pytest.raises(UnknownSkill) as info:
        api.check_call(SkillCall("teleport", ("a",)), 4)
    assert (info.value.name, info.value.step_index) == ("teleport", 4)
    with pytest.raises(ArityMismatch):
        api.check_call(SkillCall("place", ("mug",)), 0)


def test_plan_list_round_trip():
    plan = Plan([SkillCall("goto", ("kitchen_sink",)), SkillCall("pick", ("sponge",))])
    assert Plan.from_list(plan.to_list()) == plan
    assert plan.render().startswith("```json\n[")
    assert Plan().render() == "```json\n[]\n```"


def test_entity_refs():
    assert entity_ref("fridge", "kitchen_fridge") == "fridge@kitchen_fridge"
    assert split_entity_ref("fridge@kitchen_fridge") == ("fridge", "kitchen_fridge")
    assert split_entity_ref("fridge") == ("fridge", None)


def test_default_api_is_stable():
    assert default_skill_api() == default_skill_api()
