import json
import logging

import numpy as np

from pyqspectral.utils import atomic_write_json, digest, format_number, print_and_log, write_csv


def test_format_number_round_trips():
    x = 0.1 + 0.2
    assert float(format_number(x)) == x
    assert format_number(1.0) == "1.0000000000000000e+00"


def test_write_csv_cells(tmp_path):
    path = tmp_path / "out.csv"
    write_csv(str(path), ("k", "x", "ok"), [(np.int64(3), np.float64(0.125), np.bool_(True))])
    assert path.read_text() == "k,x,ok\n3,1.2500000000000000e-01,true\n"
    assert not (tmp_path / "out.csv.tmp").exists()


def test_atomic_write_json_numpy(tmp_path):
    path = tmp_path / "nested" / "data.json"
    atomic_write_json(str(path), {"a": np.arange(3), "z": 1 + 2j, "n": np.float64(0.5)})
    assert json.loads(path.read_text()) == {"a": [0, 1, 2], "z": [1.0, 2.0], "n": 0.5}


def test_digest_is_stable():
    a = np.linspace(0.0, 1.0, 5)
    assert digest(a, m=1.0) == digest(a.copy(), m=1.0)
    assert digest(a, m=1.0) != digest(a, m=2.0)
    assert digest(a) != digest(a.astype(np.float32))


def test_print_and_log(capsys, caplog):
    with caplog.at_level(logging.INFO):
        print_and_log("quiet")
        print_and_log("loud", verbose=True)
    assert capsys.readouterr().out == "loud\n"
    assert [r.message for r in caplog.records] == ["quiet", "loud"]
