import csv
import json
import os

import numpy as np
import pytest

from openwg import cli
from test_modes import oracle_roots

DATA = os.path.join(os.path.dirname(__file__), "data")
SMALL_GRID = {"x1": [-9.0, 9.0, 4], "x2": [-9.0, 9.0, 7], "exclude": 0.25}


def write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def strip_timing(man):
    man = dict(man)
    man.pop("timing")
    return man


def test_modes_scenario_matches_oracle(tmp_path, capsys):
    cfg = write(tmp_path, {"scenario": "modes", "k": 1.0, "k1": 3.0, "d": 4.0})
    code, out, _ = run(["--config", cfg, "--out-dir", str(tmp_path / "o")], capsys)
    assert code == 0
    man = json.loads(out)
    xi = np.array([m["xi"] for m in man["modes"]])
    assert np.max(np.abs(xi - oracle_roots(1.0, 3.0, 4.0))) <= 1e-10
    on_disk = json.loads((tmp_path / "o" / "modes.json").read_text())
    assert [m["xi"] for m in on_disk] == list(xi)
    assert json.loads((tmp_path / "o" / "manifest.json").read_text())["modes"] == man["modes"]


def test_configuration_errors(tmp_path, capsys):
    code, _, err = run([], capsys)
    assert code == 2 and "usage" in err
    code, _, err = run(["nonsense"], capsys)
    assert code == 2 and "unknown scenario" in err
    code, _, _ = run(["modes", "--config", str(tmp_path / "missing.json")], capsys)
    assert code == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["modes", "--config", str(bad)], capsys)[0] == 2
    for obj in ({"k": -1.0}, {"k1": "two"}, {"grid": {"x1": [1, 0, 3], "x2": [0, 1, 3]}}):
        code, _, err = run(["transmit", "--config", write(tmp_path, obj)], capsys)
        assert code == 2, obj
    code, _, err = run(["transmit", "--config", write(tmp_path, {"incoming": {"type": "mode"}})], capsys)
    assert code == 2 and "junction" in err


def test_numerical_failure_exit_status(tmp_path, capsys):
    cfg = write(tmp_path, {"k": 1.0, "k1": 3.0, "d": 200.0})
    code, out, err = run(["modes", "--config", cfg, "--out-dir", str(tmp_path / "o")], capsys)
    assert code == 3 and "numerical failure" in err and out == ""


def test_transmit_is_deterministic(tmp_path, capsys):
    cfg = write(tmp_path, {"grid": {"x1": [-5.0, 5.0, 6], "x2": [-5.0, 5.0, 6]}})
    mans = []
    for name in ("a", "b"):
        code, out, _ = run(["transmit", "--config", cfg, "--out-dir", str(tmp_path / name), "--threads", "1"],
                           capsys)
        assert code == 0
        mans.append(json.loads(out))
    assert strip_timing(mans[0]) == strip_timing(mans[1])
    assert mans[0]["analytic_error"] <= 1e-10
    for f in ("field.csv", "density.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_greens_scenario(tmp_path, capsys):
    cfg = write(tmp_path, {"grid": {"x1": [-3.0, 3.0, 3], "x2": [-3.0, 3.0, 4]}})
    code, _, _ = run(["greens", "--config", cfg, "--out-dir", str(tmp_path / "o")], capsys)
    assert code == 0
    head, vals = read_csv(tmp_path / "o" / "field.csv")
    assert head == ["x1", "x2", "re_u", "im_u"] and vals.shape == (11, 4)  # the source node is dropped
    assert np.all(np.isfinite(vals))


@pytest.fixture(scope="module")
def matched_runs(tmp_path_factory, cache_dir):
    """The default matched scenario on a small grid, with and without the cache."""
    root = tmp_path_factory.mktemp("matched")
    cfg = root / "cfg.json"
    cfg.write_text(json.dumps({"grid": SMALL_GRID}))
    old = os.environ.get("OPENWG_CACHE_DIR")
    os.environ["OPENWG_CACHE_DIR"] = cache_dir
    try:
        codes = [cli.main(["matched", "--config", str(cfg), "--out-dir", str(root / "cached")]),
                 cli.main(["matched", "--config", str(cfg), "--out-dir", str(root / "fresh"), "--no-cache"])]
    finally:
        if old is None:
            del os.environ["OPENWG_CACHE_DIR"]
        else:
            os.environ["OPENWG_CACHE_DIR"] = old
    return root, codes


def test_matched_cache_is_transparent(matched_runs):
    root, codes = matched_runs
    assert codes == [0, 0]
    assert (root / "cached" / "field.csv").read_bytes() == (root / "fresh" / "field.csv").read_bytes()
    man = json.loads((root / "cached" / "manifest.json").read_text())
    assert man["analytic_error"] <= 1e-6 and man["cond"] < 1e4


def test_matched_regression_snapshot(matched_runs):
    root, _ = matched_runs
    _, got = read_csv(root / "cached" / "field.csv")
    _, ref = read_csv(os.path.join(DATA, "matched_snapshot.csv"))
    assert got.shape == ref.shape
    assert np.array_equal(got[:, :2], ref[:, :2])
    assert np.max(np.abs(got[:, 2:] - ref[:, 2:])) <= 1e-8


def test_dirichlet_terminated_scenario(tmp_path, capsys):
    cfg = write(tmp_path, {"grid": {"x1": [-6.0, 6.0, 5], "x2": [-6.0, 6.0, 5], "exclude": 0.25}})
    code, out, _ = run(["dirichlet-terminated", "--config", cfg, "--out-dir", str(tmp_path / "o")], capsys)
    assert code == 0
    man = json.loads(out)
    assert man["analytic_error"] <= 1e-6 and man["residual"] <= 1e-12
    assert man["arc_cond"] < 1e6 and man["cond"] < 1e3
    assert json.loads((tmp_path / "o" / "manifest.json").read_text())["cond"] == man["cond"]
