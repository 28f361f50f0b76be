import json
import os

import pytest

from errors import (DuplicateResourceId, InvalidBudget, InvalidConstraints, MalformedDocument,
                    MissingGoal)
from spec_model import (Constraints, load_task_spec, parse_task_spec, serialize_task_spec,
                        task_spec_from_dict, validate_constraints)


def test_minimal_spec_has_empty_context_and_resources():
    spec = parse_task_spec('{"goal":"summarize a marker table","constraints":{"budget":1000,"max_repair_rounds":3}}')

    assert spec.goal == "summarize a marker table"
    assert spec.context == ''
    assert spec.resources == ()
    assert spec.constraints.budget == 1000
    assert spec.constraints.max_repair_rounds == 3
    assert spec.constraints.output_format == 'free_text'


def test_missing_goal():
    with pytest.raises(MissingGoal):
        parse_task_spec('{"context":"...","constraints":{"budget":1000}}')


def test_blank_goal_is_missing():
    with pytest.raises(MissingGoal):
        task_spec_from_dict({'goal': '   '})


@pytest.mark.parametrize('budget', [0, -5])
def test_non_positive_budget(budget):
    with pytest.raises(InvalidBudget):
        task_spec_from_dict({'goal': 'x', 'constraints': {'budget': budget}})


@pytest.mark.parametrize('budget', ['lots', 2.5, True])
def test_non_integer_budget_is_malformed(budget):
    with pytest.raises(MalformedDocument):
        task_spec_from_dict({'goal': 'x', 'constraints': {'budget': budget}})


@pytest.mark.parametrize('data, error', [
    ({'resources': [{'id': 'r', 'kind': 'planet'}]}, MalformedDocument),
    ({'constraints': {'budget': 'lots'}}, MalformedDocument),
    ({'goal': '', 'constraints': {'budget': 0}}, MissingGoal),
    ({'goal': 'x', 'constraints': {'budget': 0, 'max_repair_rounds': -1}}, InvalidBudget),
    ({'goal': 'x', 'constraints': {'max_repair_rounds': -1},
      'resources': [{'id': 'r', 'kind': 'dataset'}, {'id': 'r', 'kind': 'dataset'}]}, InvalidConstraints),
])
def test_errors_surface_in_a_fixed_order(data, error):
    with pytest.raises(error):
        task_spec_from_dict(data)


def test_unknown_top_level_key():
    with pytest.raises(MalformedDocument):
        task_spec_from_dict({'goal': 'x', 'deadline': 'tomorrow'})


def test_unknown_constraint_key():
    with pytest.raises(MalformedDocument):
        task_spec_from_dict({'goal': 'x', 'constraints': {'budget': 10, 'speed': 'fast'}})


def test_invalid_json_is_malformed():
    with pytest.raises(MalformedDocument):
        parse_task_spec('{"goal": ')


def test_non_object_document_is_malformed():
    with pytest.raises(MalformedDocument):
        parse_task_spec('["goal"]')


def test_duplicate_resource_ids():
    data = {'goal': 'x', 'resources': [
        {'id': 'r1', 'kind': 'dataset', 'locator': 'a.csv'},
        {'id': 'r1', 'kind': 'document', 'locator': 'b.txt'},
    ]}
    with pytest.raises(DuplicateResourceId):
        task_spec_from_dict(data)


def test_repository_requires_locator():
    with pytest.raises(MalformedDocument):
        task_spec_from_dict({'goal': 'x', 'resources': [{'id': 'repo', 'kind': 'repository'}]})


def test_unknown_resource_kind():
    with pytest.raises(MalformedDocument):
        task_spec_from_dict({'goal': 'x', 'resources': [{'id': 'r', 'kind': 'spreadsheet'}]})


def test_repair_rounds_above_cap():
    with pytest.raises(InvalidConstraints):
        task_spec_from_dict({'goal': 'x', 'constraints': {'max_repair_rounds': 17}})


def test_repair_rounds_at_cap_is_accepted():
    spec = task_spec_from_dict({'goal': 'x', 'constraints': {'max_repair_rounds': 16}})
    assert spec.constraints.max_repair_rounds == 16


def test_evaluate_against_must_name_a_resource():
    with pytest.raises(InvalidConstraints):
        task_spec_from_dict({'goal': 'x', 'constraints': {'evaluate_against': ['cellmarker']}})


def test_validate_constraints_lists_every_violation():
    constraints = Constraints(budget=0, max_runtime=-1, output_format='', max_repair_rounds=40)
    report = validate_constraints(constraints)

    assert not report.ok
    assert report.codes() == ['InvalidBudget', 'InvalidConstraints', 'InvalidConstraints', 'InvalidConstraints']
    assert report.first().field == 'budget'


def test_validate_constraints_accepts_defaults():
    assert validate_constraints(Constraints()).ok


def test_serialization_is_canonical_and_stable(fixtures_dir):
    for name in sorted(os.listdir(os.path.join(fixtures_dir, 'specs'))):
        spec = load_task_spec(os.path.join(fixtures_dir, 'specs', name))
        text = serialize_task_spec(spec)

        assert serialize_task_spec(parse_task_spec(text)) == text
        assert parse_task_spec(text) == spec
        assert text == json.dumps(json.loads(text), sort_keys=True, separators=(',', ':'), ensure_ascii=False)


def test_serialization_emits_every_field():
    data = json.loads(serialize_task_spec(parse_task_spec('{"goal":"x"}')))

    assert sorted(data) == ['constraints', 'context', 'goal', 'resources']
    assert sorted(data['constraints']) == ['budget', 'environment_requirements', 'evaluate_against',
                                           'max_repair_rounds', 'max_runtime', 'output_format']


def test_resource_lookup(parallel_spec):
    assert parallel_spec.resource('cellmarker').kind == 'dataset'
    assert parallel_spec.resource('missing') is None
    assert parallel_spec.constraints.evaluate_against == ('cellmarker',)


def test_error_codes_name_the_class():
    error = MissingGoal("goal is absent or empty")
    assert error.code == 'MissingGoal'
    assert str(error) == "MissingGoal: goal is absent or empty"
