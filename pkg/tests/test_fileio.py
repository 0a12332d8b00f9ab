import json
import math

import numpy as np
import pytest

from swym import fileio


def test_format_float_roundtrips_doubles():
    awkward = [math.pi, 1.0 / 3.0, 0.1, 6.4641016151377535, 1e-300,
               -2.5e17, 5.0]
    for value in awkward:
        assert float(fileio.format_float(value)) == value


def test_format_float_rejects_nonfinite():
    with pytest.raises(ValueError):
        fileio.format_float(float("nan"))
    with pytest.raises(ValueError):
        fileio.format_float(float("inf"))


def test_json_bytes_deterministic(tmp_path):
    payload = {
        "format_version": fileio.FORMAT_VERSION,
        "b": [1.0, 2.0, np.float64(0.3)],
        "a": {"nested": None, "flag": True},
    }
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    fileio.write_json(p1, payload)
    fileio.write_json(p2, payload)
    assert p1.read_bytes() == p2.read_bytes()


def test_json_preserves_key_order():
    text = fileio.dumps_json({"zeta": 1, "alpha": 2})
    assert text.index("zeta") < text.index("alpha")


def test_json_roundtrip_values(tmp_path):
    path = tmp_path / "vals.json"
    fileio.write_json(path, {"format_version": fileio.FORMAT_VERSION,
                             "x": [math.pi, 1e-17], "n": 3})
    data = fileio.read_json(path)
    assert data["x"] == [math.pi, 1e-17]
    assert data["n"] == 3


def test_numpy_arrays_serialize(tmp_path):
    path = tmp_path / "arr.json"
    fileio.write_json(path, {"format_version": fileio.FORMAT_VERSION,
                             "v": np.linspace(0, 1, 5)})
    data = fileio.read_json(path)
    assert data["v"] == [0.0, 0.25, 0.5, 0.75, 1.0]


def test_version_gate():
    fileio.check_format_version({"format_version": fileio.FORMAT_VERSION})
    minor_bump = fileio.FORMAT_VERSION.split(".")[0] + ".9"
    fileio.check_format_version({"format_version": minor_bump})
    with pytest.raises(fileio.FormatVersionError):
        fileio.check_format_version({"format_version": "999.0"})
    with pytest.raises(fileio.FormatVersionError):
        fileio.check_format_version({})


def test_read_json_enforces_version(tmp_path):
    path = tmp_path / "old.json"
    path.write_text(json.dumps({"format_version": "999.1", "x": 1}))
    with pytest.raises(fileio.FormatVersionError):
        fileio.read_json(path)


def test_csv_roundtrip(tmp_path):
    path = tmp_path / "cols.csv"
    x = np.linspace(-1.0, 1.0, 7)
    y = np.sin(x)
    fileio.write_csv(path, ["x", "y"], [x, y])
    header, cols = fileio.read_csv(path)
    assert header == ["x", "y"]
    np.testing.assert_array_equal(cols["x"], x)
    np.testing.assert_array_equal(cols["y"], y)


def test_csv_rejects_ragged_columns(tmp_path):
    with pytest.raises(ValueError):
        fileio.write_csv(tmp_path / "bad.csv", ["a", "b"],
                         [np.zeros(3), np.zeros(4)])


def test_csv_bytes_deterministic(tmp_path):
    x = np.geomspace(1e-8, 1e8, 33)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    fileio.write_csv(p1, ["x"], [x])
    fileio.write_csv(p2, ["x"], [x])
    assert p1.read_bytes() == p2.read_bytes()
