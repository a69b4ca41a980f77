import json

import numpy as np
import pytest

from mzforge.design import DiscreteMeasure, OptimizerConfig
from mzforge.errors import InvalidInput
from mzforge.frames import build_entf
from mzforge.indexsets import l1ball
from mzforge.io import (load_design, load_entf_transform, load_operator, read_csv, save_design, save_entf,
                        save_operator, write_csv)
from mzforge.recovery import PeriodicSobolevSpectrum, build_recovery
from mzforge.systems import SphereSystem, TrigSystem, real_trig_system


@pytest.mark.parametrize("system", [TrigSystem(l1ball(2, 1)), SphereSystem(2)], ids=["torus", "sphere"])
def test_design_round_trip_is_bit_exact(tmp_path, system):
    rng = np.random.default_rng(0)
    m = DiscreteMeasure(system.sample(rng, 6), rng.random(6))
    path = tmp_path / "d.json"
    save_design(path, system, m, 0.25, False, meta={"seed": 3})
    back = load_design(path)
    assert np.array_equal(back.measure.points, m.points) and np.array_equal(back.measure.weights, m.weights)
    assert back.system.describe() == system.describe()
    assert back.meta["seed"] == 3 and back.p == 2 and back.mz_constant == 0.25


def test_csv_round_trip(tmp_path):
    m = DiscreteMeasure(np.array([[0.1, 1 / 3], [0.7, 2 / 7]]), [0.25, 0.75])
    write_csv(tmp_path / "d.csv", m)
    back = read_csv(tmp_path / "d.csv")
    assert np.array_equal(back.points, m.points) and np.array_equal(back.weights, m.weights)


@pytest.mark.parametrize("edit,match", [
    (lambda d: d.pop("weights"), "missing field 'weights'"),
    (lambda d: d.update(domain="cube"), "field 'domain'"),
    (lambda d: d.update(p=3), "field 'p'"),
    (lambda d: d.update(schema="other/9"), "field 'schema'"),
])
def test_design_diagnostics(tmp_path, edit, match):
    path = tmp_path / "d.json"
    save_design(path, TrigSystem(l1ball(1, 1)), DiscreteMeasure(np.zeros((1, 1)), [1.0]), 0.0, True)
    data = json.loads(path.read_text())
    edit(data)
    path.write_text(json.dumps(data))
    with pytest.raises(InvalidInput, match=match):
        load_design(path)


def test_malformed_json_reports_position(tmp_path):
    path = tmp_path / "d.json"
    path.write_text('{\n "schema": "mzdesign/1",\n "points": [1,\n')
    with pytest.raises(InvalidInput, match="line 4"):
        load_design(path)


def test_operator_round_trip(tmp_path):
    op = build_recovery(PeriodicSobolevSpectrum(2.0, 1), 4, OptimizerConfig(max_restarts=3))
    save_operator(tmp_path / "op.json", op)
    back = load_operator(tmp_path / "op.json")
    assert back.exact and back.n == 4
    np.testing.assert_array_equal(back.matrix, op.matrix)


def test_entf_transform_round_trip(tmp_path):
    res = build_entf(real_trig_system(1), OptimizerConfig(max_restarts=2), samples=1000)
    save_entf(tmp_path / "f.json", res)
    np.testing.assert_array_equal(load_entf_transform(tmp_path / "f.json"), res.transform.entries)
