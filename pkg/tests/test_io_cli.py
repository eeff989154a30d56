import json

import numpy as np
import pytest

from rtlab import io
from rtlab.cipher import KeyStream
from rtlab.cli import main
from rtlab.errors import EXIT_CODES
from rtlab.plant import CloudPolicy, PlantModel, simulate


@pytest.fixture
def scalar_plant(tmp_path):
    path = tmp_path / "plant.json"
    path.write_text(json.dumps({"A": [[0.5]], "B": [[1.0]], "K": [[0.0]], "excitation": 1.0, "excitation_seed": 3}))
    return path


@pytest.fixture
def plant3(tmp_path):
    rng = np.random.default_rng(0)
    Q = rng.normal(size=(3, 3))
    A = Q @ np.diag([0.8, 0.3, -0.5]) @ np.linalg.inv(Q)
    path = tmp_path / "plant3.json"
    path.write_text(json.dumps({"A": A.tolist(), "B": rng.normal(size=(3, 1)).tolist(),
                                "K": [[0.0, 0.0, 0.0]], "excitation": 1.0}))
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_key_document_roundtrip():
    ks = KeyStream(4, 2.0, 3.0, "Deterministic", 2, 1)
    kp, okp = io.load_keys(json.loads(io.dumps(io.key_document(ks))))
    assert np.array_equal(kp.R, ks.keys_at(0).R) and np.array_equal(kp.r, ks.keys_at(0).r)
    assert np.array_equal(okp.S, ks.output_keys_at(0).S)


def test_key_document_probabilistic_reloads_stream():
    ks = KeyStream(4, 2.0, 3.0, "ResampleBoth", 2, 1)
    back = io.load_keys(json.loads(io.dumps(io.key_document(ks))))
    assert isinstance(back, KeyStream)
    assert np.array_equal(back.keys_at(9).R, ks.keys_at(9).R)


def test_trace_csv_roundtrip():
    ks = KeyStream(1, 2.0, 2.0, "Deterministic", 2, 1)
    tr = simulate(PlantModel([[0.5, 0.1], [0.0, 0.2]], [[1.0], [0.5]]), CloudPolicy([[0.1, 0.0]], 0.3, 1), ks, T=7)
    text = io.trace_to_csv(tr)
    assert text.splitlines()[0] == "k,x_0,x_1,u_0,y_0,y_1,z_0"
    back = io.trace_from_csv(text)
    for f in ("x", "u", "y", "z"):
        assert np.array_equal(getattr(back, f), getattr(tr, f))


def test_trace_csv_bad_header():
    with pytest.raises(ValueError):
        io.trace_from_csv("k,a,b\n0,1,2\n")


@pytest.mark.parametrize("hex_bits", [False, True])
def test_figure2_csv_roundtrip(hex_bits):
    axis = np.array([-6.5, 0.0, 0.0659, 6.5])
    axis = np.asarray(axis, dtype=np.float16).astype(float)
    D = np.array([[0, 0.1, 0.2, 0.3], [0.1, 0, 0.4, 0.5], [0.2, 0.4, 0, 0.6], [0.3, 0.5, 0.6, 0]])
    text = io.figure2_csv(axis, D, hex_bits)
    if hex_bits:
        assert text.splitlines()[0].split(",")[1] == "c680"
    a, d = io.figure2_from_csv(text)
    assert np.array_equal(a, axis) and np.array_equal(d, D)


def test_keygen_examples(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["keygen", "--n", "2", "--rmax", "10", "--Rmax", "10", "--seed", "1", "--out", str(a)]) == 0
    assert main(["keygen", "--n", "2", "--rmax", "10", "--Rmax", "10", "--seed", "1", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    doc = json.loads(a.read_text())
    assert np.array(doc["R"]).shape == (2, 2)


def test_keygen_zero_bound(capsys):
    code, _, err = run(capsys, "keygen", "--n", "2", "--Rmax", "0")
    assert code == EXIT_CODES["RejectionLimitExceeded"] != 0
    assert "RejectionLimitExceeded" in err


def test_help_lists_exit_codes(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    for name, code in EXIT_CODES.items():
        assert f"{code}  {name}" in out or f"{code} {name}" in out


def test_exit_codes_distinct():
    codes = list(EXIT_CODES.values())
    assert len(set(codes)) == len(codes) and 0 not in codes and 2 not in codes


def test_missing_file_is_io_error(tmp_path, capsys):
    code, _, _ = run(capsys, "simulate", "--plant", tmp_path / "missing.json")
    assert code == 15


def test_simulate_and_attack_kpa(tmp_path, capsys, plant3):
    keys, trace = tmp_path / "k.json", tmp_path / "t.csv"
    assert main(["keygen", "--n", "3", "--m", "1", "--Rmax", "5", "--rmax", "5", "--out", str(keys)]) == 0
    assert main(["simulate", "--plant", str(plant3), "--keys", str(keys), "--T", "50", "--out", str(trace)]) == 0
    assert len(trace.read_text().splitlines()) == 52
    code, out, err = run(capsys, "attack", "kpa", "--trace", trace, "--truth", keys)
    assert code == 0
    doc = json.loads(out)
    assert doc["relative_key_error"] <= 1e-8 and "key error" in err
    code, out, _ = run(capsys, "attack", "plant", "--trace", trace, "--plant", plant3, "--truth", keys, "--start", 4)
    doc = json.loads(out)
    assert doc["nullspace_dim"] == 3 and doc["max_state_error"] <= 1e-6
    assert doc["relative_key_error"] <= 1e-6
    assert np.allclose(sorted(e[0] for e in doc["eigenvalues"]), [-0.5, 0.3, 0.8], atol=1e-7)


def test_simulate_deterministic_output(tmp_path, plant3):
    keys = tmp_path / "k.json"
    main(["keygen", "--n", "3", "--m", "1", "--variant", "ResampleBoth", "--out", str(keys)])
    outs = []
    for name in ("a.csv", "b.csv"):
        main(["simulate", "--plant", str(plant3), "--keys", str(keys), "--T", "20", "--seed", "5", "--out", str(tmp_path / name)])
        outs.append((tmp_path / name).read_bytes())
    assert outs[0] == outs[1]


def test_attack_lsq_noisy(tmp_path, capsys, plant3):
    keys, trace = tmp_path / "k.json", tmp_path / "t.csv"
    main(["keygen", "--n", "3", "--m", "1", "--out", str(keys)])
    main(["simulate", "--plant", str(plant3), "--keys", str(keys), "--T", "300", "--out", str(trace)])
    code, out, _ = run(capsys, "attack", "lsq", "--trace", trace, "--sigma", "0.01", "--pairs", "200", "--truth", keys)
    doc = json.loads(out)
    assert code == 0 and doc["residual"] > 0
    assert doc["key_error"] < 0.5


def test_attack_plant_scalar(tmp_path, capsys, scalar_plant):
    keys, trace = tmp_path / "k.json", tmp_path / "t.csv"
    main(["keygen", "--n", "1", "--Rmax", "4", "--rmax", "2", "--out", str(keys)])
    main(["simulate", "--plant", str(scalar_plant), "--keys", str(keys), "--T", "20", "--x0", "1.0", "--out", str(trace)])
    code, out, err = run(capsys, "attack", "plant", "--trace", trace, "--plant", scalar_plant)
    assert code == 0
    assert json.loads(out)["eigenvalues"] == [[pytest.approx(0.5, abs=1e-12), 0.0]]
    assert "{0.5}" in err


def test_attack_plant_zero_trace(tmp_path, capsys):
    plant = tmp_path / "p.json"
    plant.write_text(json.dumps({"A": [[0.5]], "B": [[1.0]]}))
    keys, trace = tmp_path / "k.json", tmp_path / "t.csv"
    main(["keygen", "--n", "1", "--out", str(keys)])
    main(["simulate", "--plant", str(plant), "--keys", str(keys), "--T", "10", "--x0", "0", "--out", str(trace)])
    code, _, err = run(capsys, "attack", "plant", "--trace", trace, "--plant", plant)
    assert code == EXIT_CODES["NeedMoreData"] and "NeedMoreData" in err


@pytest.mark.parametrize("argv,D", [
    (["det", "--x1", "1", "--x2", "2"], 1.0),
    (["det", "--x1", "3,3", "--x2", "3,3"], 0.0),
    (["prob-r", "--x1", "0", "--x2", "2", "--rmax", "2"], 0.5),
    (["prob-r", "--x1", "0", "--x2", "6", "--rmax", "2"], 1.0),
    (["prob-r", "--x1", "0", "--x2", "1", "--kappa", "3"], 1 / 16),
    (["prob-rr", "--x1", "1", "--x2", "2", "--Rmax", "1", "--rmax", "2"], 0.125),
    (["prob-rr", "--x1", "2", "--x2", "-2", "--Rmax", "1", "--rmax", "4"], 0.0),
])
def test_distance_closed_forms(capsys, argv, D):
    code, out, _ = run(capsys, "distance", *argv)
    assert code == 0 and json.loads(out)["D"] == D


def test_distance_precondition(capsys):
    code, _, err = run(capsys, "distance", "prob-rr", "--x1", "1", "--x2", "3", "--Rmax", "1", "--rmax", "2")
    assert code == EXIT_CODES["PreconditionViolated"] and "PreconditionViolated" in err


def test_distance_mc(capsys):
    code, out, _ = run(capsys, "distance", "mc", "--setup", "prob-rr", "--x1", "1", "--x2", "2",
                       "--Rmax", "1", "--rmax", "2", "--samples", "200000")
    doc = json.loads(out)
    assert code == 0 and abs(doc["D"] - 0.125) <= 0.02 and doc["method"] == "MonteCarlo"


def test_f16_fig1(tmp_path):
    path = tmp_path / "f1.csv"
    assert main(["f16", "fig1", "--stride", "200", "--out", str(path)]) == 0
    lines = path.read_text().splitlines()
    assert lines[0] == "value,probability" and len(lines) == 1 + 307


def test_f16_fig2_small(tmp_path):
    path = tmp_path / "f2.csv"
    assert main(["f16", "fig2", "--points", "10", "--out", str(path)]) == 0
    axis, D = io.figure2_from_csv(path.read_text())
    assert D.shape == (10, 10) and np.all(np.diag(D) == 0)


def test_f16_distance(capsys):
    code, out, _ = run(capsys, "f16", "distance", "--x1", "1.5", "--x2", "0", "--rmax", "65504")
    doc = json.loads(out)
    assert code == 0 and 0 <= doc["D"] <= 1 and doc["method"] == "ExhaustiveFloat"


def test_f16_distance_snaps_to_nearest(capsys):
    code, out, _ = run(capsys, "f16", "distance", "--x1", "0.1", "--x2", "0.1")
    doc = json.loads(out)
    assert doc["D"] == 0.0 and doc["x1"] == float(np.float16(0.1))
