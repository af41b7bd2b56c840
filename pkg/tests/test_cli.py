import json
import logging
import math

import numpy as np
import pytest

from pdgeo import io, symcore
from pdgeo.cli import main
from pdgeo.exceptions import DomainError

from conftest import random_cloud

E = math.e


def write_json(path, points):
    path.write_text(json.dumps({"n": len(points[0]), "points": [np.asarray(p).tolist() for p in points]}))
    return str(path)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


# -- loading ---------------------------------------------------------------


def test_load_json_identity(tmp_path):
    data = io.load_dataset(write_json(tmp_path / "i.json", [np.eye(2)]))
    assert data.n == 2 and len(data) == 1
    np.testing.assert_array_equal(data.points[0], np.eye(2))


def test_load_csv_upper_triangle(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("n=2\n2,1,1\n")
    data = io.load_dataset(path)
    np.testing.assert_array_equal(data.points[0], [[2.0, 1.0], [1.0, 1.0]])
    path.write_text("3\n1,0,0,1,0,1\n")
    np.testing.assert_array_equal(io.load_dataset(path).points[0], np.eye(3))


def test_load_rejects_non_spd(tmp_path):
    path = write_json(tmp_path / "bad.json", [np.eye(2), np.diag([1.0, -2.0])])
    with pytest.raises(DomainError, match=r"point 1 .*min eigenvalue -2"):
        io.load_dataset(path)


def test_load_parse_errors_carry_lines(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("n=2\n1,0,1\n1,0\n")
    with pytest.raises(DomainError, match="line 3"):
        io.load_dataset(bad)
    broken = tmp_path / "broken.json"
    broken.write_text('{"n": 2,\n "points": [[[1, 0], [0, 1]]\n')
    with pytest.raises(DomainError, match="line"):
        io.load_dataset(broken)
    with pytest.raises(DomainError, match="format"):
        io.load_dataset(tmp_path / "x.txt")


def test_load_symmetrizes_with_warning(tmp_path, caplog):
    path = write_json(tmp_path / "a.json", [[[2.0, 1.0], [1.1, 1.0]]])
    with caplog.at_level(logging.WARNING):
        data = io.load_dataset(path)
    assert "asymmetric" in caplog.text
    assert data.points[0][0, 1] == data.points[0][1, 0] == pytest.approx(1.05)


# -- serialization ---------------------------------------------------------


def test_hull_round_trip_bit_exact(hull12, cloud12, tmp_path):
    text = io.dumps(io.hull_to_dict(hull12))
    path = tmp_path / "h.json"
    path.write_text(text)
    back = io.load_hull(path)
    assert io.dumps(io.hull_to_dict(back)) == text
    assert np.array_equal(back.violation(cloud12), hull12.violation(cloud12))


def test_center_round_trip(tmp_path):
    from pdgeo.centerpt import CenterResult

    res = CenterResult(symcore.spd_exp(np.array([[0.1, 1 / 3], [1 / 3, -0.2]])), -1e-9, 0.1 / 3, 5, 7, 2, 9)
    path = tmp_path / "c.json"
    io.save_json(io.center_to_dict(res), path)
    back = io.load_center(path)
    assert np.array_equal(back["p_hat"], res.point)
    assert back["objective"] == res.objective and back["seed"] == 9


# -- commands --------------------------------------------------------------


def test_hull_single_point(tmp_path, capsys):
    code, out, err = run(capsys, "hull", write_json(tmp_path / "i.json", [np.eye(2)]))
    assert code == 0
    doc = json.loads(out)
    assert doc["d_X"] == 0.0 and all(b["level"] == 0.0 for b in doc["horoballs"])
    assert "horoballs" in err and "wall" in err


def test_hull_resource_exit(tmp_path, capsys, cloud12):
    code, _, err = run(capsys, "hull", write_json(tmp_path / "d.json", cloud12), "--epsilon", "1e-6")
    assert code == 3 and "cap" in err


def test_hull_output_file_deterministic(tmp_path, capsys, cloud12):
    data = write_json(tmp_path / "d.json", cloud12)
    run(capsys, "hull", data, "-o", tmp_path / "a.json")
    run(capsys, "hull", data, "-o", tmp_path / "b.json", "--threads", "3")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_center_near_identity_and_determinism(tmp_path, capsys, rng):
    pts = [symcore.spd_exp(1e-7 * symcore.sym(rng.standard_normal((2, 2)))) for _ in range(6)]
    data = write_json(tmp_path / "c.json", pts)
    code, out, err = run(capsys, "center", data, "--seed", "5")
    assert code == 0 and "constraints" in err
    doc = json.loads(out)
    assert np.abs(np.array(doc["p_hat"]) - np.eye(2)).max() <= 1e-5
    assert doc["seed"] == 5
    _, again, _ = run(capsys, "center", data, "--seed", "5")
    assert again == out


def test_center_subset_cap_refusal(tmp_path, capsys, rng):
    data = write_json(tmp_path / "big.json", random_cloud(rng, 41, 2, 0.3))
    code, _, err = run(capsys, "center", data)
    assert code == 3 and "subsample" in err


def test_seed_from_environment(tmp_path, capsys, monkeypatch, cloud12):
    data = write_json(tmp_path / "d.json", cloud12)
    monkeypatch.setenv("PDGEO_SEED", "17")
    _, out, _ = run(capsys, "extent", data, "--random", "3")
    doc = json.loads(out)
    assert doc["seed"] == 17
    _, out2, _ = run(capsys, "extent", data, "--random", "3", "--seed", "17")
    assert out2 == out
    monkeypatch.setenv("PDGEO_SEED", "x")
    assert run(capsys, "extent", data, "--random", "3")[0] == 2


def test_extent_examples(tmp_path, capsys):
    code, out, _ = run(capsys, "extent", write_json(tmp_path / "i.json", [np.eye(2)]),
                       "--direction", "0.8,-0.6")
    assert code == 0 and json.loads(out)["extents"][0]["extent"] == 0.0
    two = write_json(tmp_path / "two.json", [np.diag([E, 1.0]), np.diag([1 / E, 1.0])])
    a = 1 / math.sqrt(2)
    code, out, _ = run(capsys, "extent", two, "--no-shift", "--direction", f"{a!r},{-a!r}")
    assert json.loads(out)["extents"][0]["extent"] == pytest.approx(math.sqrt(2), abs=1e-14)


@pytest.mark.parametrize("direction,hint", [("1,1", "divide"), ("-0.6,0.8", "sort")])
def test_extent_bad_direction(tmp_path, capsys, direction, hint):
    code, _, err = run(capsys, "extent", write_json(tmp_path / "i.json", [np.eye(2)]),
                       f"--direction={direction}")
    assert code == 2 and hint in err


def test_plot2_examples(tmp_path, capsys):
    data = write_json(tmp_path / "p.json", [np.eye(2), np.diag([E, 1 / E])])
    code, out, _ = run(capsys, "plot2", data)
    rows = [line.split(",") for line in out.strip().splitlines()[1:]]
    assert [float(x) for x in rows[0][2:]] == [0.0, 0.0, 0.0]
    logdet, x, y = (float(v) for v in rows[1][2:])
    assert logdet == pytest.approx(0.0, abs=1e-15)
    # disk radius tanh(1/2): hyperbolic radius 1, times sqrt(2) gives d(p, I)
    r = math.hypot(x, y)
    assert math.sqrt(2) * 2 * math.atanh(r) == pytest.approx(symcore.metric_dist(np.diag([E, 1 / E]), np.eye(2)))


def test_plot2_with_hull_traces(tmp_path, capsys, cloud12):
    data = write_json(tmp_path / "d.json", cloud12[:4])
    run(capsys, "hull", data, "--epsilon", "0.5", "-o", tmp_path / "h.json")
    code, out, _ = run(capsys, "plot2", data, "--hull", tmp_path / "h.json", "--trace-points", "4")
    lines = out.strip().splitlines()
    assert code == 0 and any(line.startswith("horosphere") for line in lines)


def test_plot2_requires_pd2(tmp_path, capsys):
    code, _, err = run(capsys, "plot2", write_json(tmp_path / "i.json", [np.eye(3)]))
    assert code == 2 and "n=2" in err


def test_grid_and_validate(tmp_path, capsys, cloud12):
    code, out, _ = run(capsys, "grid", "--d-x", "1.0")
    delta = 0.05 / (2 * math.sqrt(2) * math.sinh(1 / math.sqrt(2)))
    assert code == 0 and json.loads(out)["cell_count"] == math.ceil(2 * math.pi / delta)
    code, out, _ = run(capsys, "validate", write_json(tmp_path / "d.json", cloud12))
    assert code == 0 and json.loads(out)["count"] == 12
    assert run(capsys, "validate", tmp_path / "missing.json")[0] == 2
    assert run(capsys, "hull", write_json(tmp_path / "e.json", [np.eye(2)]), "--epsilon", "-1")[0] == 2
