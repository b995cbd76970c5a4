
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dropout_mi.harness import read_csv, read_manifest, write_csv, write_manifest
from dropout_mi.harness.output import format_value


def test_header_only_for_empty_table(tmp_path):
    path = write_csv([], tmp_path / "t.csv", ["epoch", "mi_xz"])
    assert path.read_bytes() == b"epoch,mi_xz\n"
    with pytest.raises(ValueError):
        write_csv([], tmp_path / "u.csv")


def test_identical_rows_identical_bytes(tmp_path):
    rows = [{"a": 1, "b": 0.1 + 0.2, "c": None, "d": True}]
    a = write_csv(rows, tmp_path / "a.csv").read_bytes()
    b = write_csv(rows, tmp_path / "b.csv").read_bytes()
    assert a == b == b"a,b,c,d\n1,0.30000000000000004,,true\n"


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_format_round_trips(x):
    assert float(format_value(x)) == x


def test_format_special_values():
    assert format_value(np.float64("nan")) == "nan"
    assert format_value(np.int64(3)) == "3"
    assert format_value(None) == ""


def test_csv_read_back(tmp_path):
    write_csv([{"x": 1.5, "y": "a,b"}], tmp_path / "t.csv")
    assert read_csv(tmp_path / "t.csv") == [{"x": "1.5", "y": "a,b"}]


def test_unwritable_path_names_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError, match="file"):
        write_csv([{"a": 1}], blocker / "t.csv")


def test_manifest_contents(tmp_path):
    path = write_manifest({"seed": 3, "arr": np.arange(2)}, tmp_path / "m.json", {"extra": (1, 2)})
    doc = read_manifest(path)
    assert doc["config"] == {"seed": 3, "arr": [0, 1]}
    assert doc["extra"] == [1, 2]
    assert doc["environment"]["zero_floor"] == 1e-8
    assert "Philox" in doc["environment"]["rng"]
    assert path.read_text() == write_manifest({"seed": 3, "arr": np.arange(2)}, tmp_path / "n.json",
                                              {"extra": (1, 2)}).read_text()
