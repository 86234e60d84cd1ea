import json

import numpy as np
import pytest

from pseudopost import formats
from pseudopost.engine import CalibrationConfig, run_calibration
from pseudopost.errors import DatasetFormatError
from pseudopost.experiments import nonunbiasedness_check
from pseudopost.simulators import ToyModel
from pseudopost.surrogate import Dataset, SurrogateFit


def test_dataset_round_trip(tmp_path):
    data = Dataset(np.array([[0.1, 2.0], [1e-300, -3.5]]), np.array([1 / 3, 7.0]))
    path = tmp_path / "d.csv"
    formats.write_dataset(data, path)
    back = formats.read_dataset(path)
    np.testing.assert_array_equal(back.xs, data.xs)
    np.testing.assert_array_equal(back.ys, data.ys)


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("x1,y\n1,2\n2,abc\n", "row 3"),
        ("x1,y\n1,2,3\n", "row 2"),
        ("a,b\n1,2\n", "row 1"),
        ("x1,y\n1,nan\n", "row 2"),
        ("", "empty"),
    ],
)
def test_malformed_dataset(tmp_path, text, fragment):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(DatasetFormatError, match=fragment):
        formats.read_dataset(path)


def test_fit_round_trip():
    fit = SurrogateFit(np.array([0.25, -1.0]), 10, 0.5, 3.0)
    back = formats.fit_from_dict(json.loads(formats.dumps_json(formats.fit_to_dict(fit))))
    np.testing.assert_array_equal(back.beta, fit.beta)
    assert (back.n_fit, back.residual_variance, back.gram_condition) == (10, 0.5, 3.0)


def test_particles_round_trip():
    ps = run_calibration(ToyModel(), SurrogateFit.from_coefficients([-1.0, 3.0]), CalibrationConfig(50, 4, 3.0, 1))
    obj = json.loads(formats.dumps_json(formats.particles_to_dict(ps)))
    assert obj["config"] == {"n_theta": 50, "batch_size": 4, "bandwidth": 3.0, "seed": 1}
    assert obj["diagnostics"]["degenerate_weights"] is False
    back = formats.particles_from_dict(obj)
    np.testing.assert_array_equal(back.weights, ps.weights)
    lines = formats.particles_to_csv(ps).splitlines()
    assert lines[0] == "theta_1,theta_2,R,log_w,w" and len(lines) == 51


def test_write_report(tmp_path):
    report = nonunbiasedness_check()
    written = formats.write_report(report, tmp_path)
    assert {p.name for p in written} == {"report.json", "gaps.csv"}
    obj = json.loads((tmp_path / "report.json").read_text())
    assert obj["passed"] is True and obj["name"] == "nonunbiasedness"


def test_atomic_write_leaves_no_temp_files(tmp_path):
    formats.atomic_write_text(tmp_path / "a.txt", "hello")
    assert [p.name for p in tmp_path.iterdir()] == ["a.txt"]
