import json
import math
import os
from enum import Enum

import numpy as np

from _helpers import TempDirTestCase

from lib.errors import FieldFileError
from lib.report import REPORT_NAME, RunReport, config_hash, curve_table, read_csv, write_csv
from lib.utils import canonical_json, jsonable, loglog_slope


class Color(Enum):
    RED = "red"


class TestUtils(TempDirTestCase):

    def test_jsonable(self):
        value = {
            "array": np.arange(3),
            "float": np.float64(0.5),
            "flag": np.bool_(True),
            "tuple": (1, 2),
            "set": {"b", "a"},
            "enum": Color.RED,
        }
        assert jsonable(value) == {
            "array": [0, 1, 2],
            "float": 0.5,
            "flag": True,
            "tuple": [1, 2],
            "set": ["a", "b"],
            "enum": "red",
        }

    def test_canonical_json_ignores_key_order(self):
        assert canonical_json({"b": 1, "a": [1.5]}) == canonical_json({"a": [1.5], "b": 1})
        assert canonical_json({"a": 1}) == '{"a":1}'

    def test_config_hash(self):
        assert config_hash({"x": 1, "y": 2}) == config_hash({"y": 2, "x": 1})
        assert config_hash({"x": 1}) != config_hash({"x": 2})
        assert len(config_hash({})) == 64

    def test_loglog_slope(self):
        x = np.array([0.1, 0.2, 0.4])
        assert math.isclose(loglog_slope(x, 3 * x ** 2), 2.0, rel_tol=1e-12)
        assert math.isnan(loglog_slope(x, [1.0, 0.0, 2.0]))
        assert math.isnan(loglog_slope([1.0], [1.0]))


class TestCsv(TempDirTestCase):

    def test_curve_table_round_trip(self):
        fieldnames, rows = curve_table([0.1, 0.2], [1.0 / 3.0, 2.0], [[0.5, -0.5], [1.0, 1.0]], ["t0", "t1"])
        assert fieldnames == ["scale", "value", "t0", "t1"]
        path = write_csv(self.path("curve.csv"), fieldnames, rows)
        back = read_csv(path)
        assert back[0]["value"] == 1.0 / 3.0
        assert back[1] == {"scale": 0.2, "value": 2.0, "t0": 1.0, "t1": 1.0}

    def test_write_error(self):
        with self.assertRaises(FieldFileError):
            write_csv(self.path("nowhere", "x.csv"), ["a"], [{"a": 1.0}])


class TestRunReport(TempDirTestCase):

    def test_writes_json_and_csv(self):
        report = RunReport(self.path("out"))
        report.add(command="yaglom structure", values=np.array([1.0, 2.0]))
        report.add_curve("structure.csv", [0.1, 0.2], [1.0, 2.0], [[1.0], [2.0]], ["term"])
        path = report.write()
        with open(path) as handle:
            data = json.load(handle)
        assert data["command"] == "yaglom structure"
        assert data["values"] == [1.0, 2.0]
        assert data["outputs"] == ["structure.csv"]
        assert os.path.basename(path) == REPORT_NAME

    def test_formats_select_outputs(self):
        report = RunReport(self.path("csv-only"), formats=["CSV"])
        report.add_table("t.csv", ["a"], [{"a": 1.0}])
        assert report.write() is None
        assert os.listdir(self.path("csv-only")) == ["t.csv"]
        report = RunReport(self.path("json-only"), formats=["json"])
        assert report.add_curve("c.csv", [1.0], [1.0], [[]], []) is None
        report.write()
        assert os.listdir(self.path("json-only")) == [REPORT_NAME]

    def test_directory_cannot_be_created(self):
        blocker = self.path("file")
        with open(blocker, "w") as handle:
            handle.write("x")
        with self.assertRaises(FieldFileError):
            RunReport(os.path.join(blocker, "sub"))
