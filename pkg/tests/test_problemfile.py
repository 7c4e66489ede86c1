import copy
import json

import numpy as np
import pytest

from wassball import InputError
from wassball.problemfile import (
    digest,
    instance_from_dict,
    instance_to_dict,
    load_measure,
    load_problem,
    load_shipped,
    loads,
    shipped_instances,
)

BASE = {
    "dimension": 2,
    "metric": {"kind": "qnorm", "p": 2, "q": 3},
    "reference": {"atoms": [[0.0, 1.0], [2.0, -1.0]], "weights": [0.25, 0.75]},
    "radius": 0.5,
    "objective": "x1 - abs(x2)",
    "search_box": {"lo": [-3.0, -3.0], "hi": [3.0, 3.0]},
}


def test_round_trip_and_digest():
    inst = instance_from_dict(BASE)
    doc = instance_to_dict(inst)
    again = instance_to_dict(instance_from_dict(json.loads(json.dumps(doc))))
    assert doc == again
    assert digest(doc) == digest(again)
    changed = copy.deepcopy(doc)
    changed["radius"] = 0.6
    assert digest(changed) != digest(doc)
    assert inst.metric.q == 3.0 and inst.reference.weights.tolist() == [0.25, 0.75]


@pytest.mark.parametrize(
    "path, value",
    [
        (("extra",), 1),
        (("metric", "extra"), 1),
        (("reference", "extra"), 1),
        (("search_box", "extra"), 1),
        (("solver",), {"restart": 3}),
        (("metric", "weights"), [1.0, 1.0]),
        (("radius",), -1.0),
        (("radius",), "1"),
        (("dimension",), True),
        (("objective",), 3),
        (("objective",), "x3"),
        (("reference", "weights"), [0.5, 0.6]),
        (("reference", "weights"), [1.0]),
        (("search_box", "lo"), [4.0, -3.0]),
        (("format",), "other/2"),
        (("solver",), {"restarts": 0}),
    ],
)
def test_strict_validation(path, value):
    doc = copy.deepcopy(BASE)
    target = doc
    for key in path[:-1]:
        target = target[key]
    target[path[-1]] = value
    with pytest.raises(InputError):
        instance_from_dict(doc)


@pytest.mark.parametrize("key", sorted(BASE))
def test_missing_keys(key):
    doc = copy.deepcopy(BASE)
    del doc[key]
    with pytest.raises(InputError, match=key):
        instance_from_dict(doc)


def test_renormalize_flag():
    doc = copy.deepcopy(BASE)
    doc["reference"]["weights"] = [1.0, 3.0]
    with pytest.raises(InputError):
        instance_from_dict(doc)
    doc["solver"] = {"renormalize": True}
    assert instance_from_dict(doc).reference.weights.tolist() == [0.25, 0.75]


def test_non_finite_and_malformed_json():
    with pytest.raises(InputError, match="non-finite"):
        loads('{"radius": NaN}')
    with pytest.raises(InputError, match="non-finite"):
        loads('{"radius": Infinity}')
    with pytest.raises(InputError, match="line 2 column"):
        loads('{\n "radius": ,}')


def test_file_loading(tmp_path):
    p = tmp_path / "prob.json"
    p.write_text(json.dumps(BASE))
    assert instance_to_dict(load_problem(p)) == instance_to_dict(instance_from_dict(BASE))
    m = tmp_path / "mu.json"
    m.write_text(json.dumps({"format": "wassball-measure/1", "atoms": [[1.0]], "weights": [1.0]}))
    assert load_measure(m).atoms.tolist() == [[1.0]]
    with pytest.raises(OSError):
        load_problem(tmp_path / "missing.json")


def test_shipped_instances_load():
    names = shipped_instances()
    assert len(names) >= 25
    assert "analytic-linear-p1" in names
    for name in names:
        inst = load_shipped(name)
        assert inst.settings["name"] == name
        assert np.all(inst.search_box.lo < inst.search_box.hi)
    with pytest.raises(InputError):
        load_shipped("no-such-instance")
