import hashlib
import json
import math

import numpy as np
import pytest

from kmsproc.cli import main
from kmsproc.config import eval_time, load_config, parse_vector
from kmsproc.errors import ConfigParse
from kmsproc.report import to_json

CRYSTAL = """
[model]
variant = crystal
L = 2
[thermal]
beta = 1
[sampler]
seed = 3
samples = 400
modes = 64
grid = 16
coords = e0; e1
[green]
letters = e0; e1
times = 0, *
scan = 0:beta:9
"""


@pytest.fixture
def cfg(tmp_path):
    def write(text=CRYSTAL, name="run.ini"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)

    return write


def _sha(path):
    return hashlib.sha256(open(path, "rb").read()).hexdigest()


def test_verify_passes(cfg, tmp_path):
    out = tmp_path / "v.json"
    assert main(["verify", "--config", cfg(), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["all_pass"] and doc["manifest"]["digest"]
    names = {c["check_name"] for c in doc["checks"]}
    assert {"kms_reflection", "markov", "char_functional", "image_sum"} <= names
    assert all({"residual", "tolerance", "pass", "ref"} <= set(c) for c in doc["checks"])


def test_verify_is_reproducible(cfg, tmp_path):
    out = tmp_path / "a.json"
    path = cfg()
    main(["verify", "--config", path, "--out", str(out)])
    first = out.read_bytes()
    main(["verify", "--config", path, "--out", str(out)])
    assert out.read_bytes() == first


def test_verify_corrupted_fails(cfg, tmp_path):
    text = CRYSTAL.replace("beta = 1\n", "beta = 1\nb_override = corrupted\n")
    out = tmp_path / "bad.json"
    assert main(["verify", "--config", cfg(text), "--out", str(out)]) == 1
    doc = json.loads(out.read_text())
    kms = next(c for c in doc["checks"] if c["check_name"] == "kms_reflection")
    assert not kms["pass"] and kms["residual"] > 1e-3


def test_usage_errors(cfg, tmp_path):
    assert main(["verify", "--config", cfg("")]) == 2
    assert main(["verify", "--config", str(tmp_path / "missing.ini")]) == 2
    assert main(["verify", "--config", cfg(), "--tolerance", "nonsense=1"]) == 2
    assert main(["frobnicate"]) == 2
    assert main(["verify", "--config", cfg("[model]\nvariant = crystal\nkappa = -1\n")]) == 2


def test_tolerance_override_can_fail_a_check(cfg, tmp_path):
    assert main(["verify", "--config", cfg(), "--tolerance", "fourier_series=1e-12", "--out", str(tmp_path / "x")]) == 1


def test_ground_state_verify(cfg, tmp_path):
    assert main(["verify", "--config", cfg(), "--beta", "inf", "--out", str(tmp_path / "g.json")]) == 0


def test_green_csv(cfg, tmp_path):
    out = tmp_path / "g.csv"
    assert main(["green", "--config", cfg(), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# manifest=")
    assert lines[1] == "s_1,s_2,re,im,cross_check_absdiff,error"
    vals = np.array([[float(x) for x in ln.split(",")[:5]] for ln in lines[2:]])
    # two-letter real word: symmetric under s -> beta - s
    np.testing.assert_allclose(vals[:, 2], vals[::-1, 2], rtol=1e-13)
    assert np.all(vals[:, 4] <= 1e-10)


def test_green_single_letter_constant(cfg, tmp_path):
    text = CRYSTAL.replace("letters = e0; e1\ntimes = 0, *", "letters = e0\ntimes = *")
    out = tmp_path / "g1.csv"
    main(["green", "--config", cfg(text), "--out", str(out)])
    re_col = [float(ln.split(",")[1]) for ln in out.read_text().splitlines()[2:]]
    assert np.ptp(re_col) == 0.0


def test_green_row_errors(cfg, tmp_path):
    text = CRYSTAL.replace("times = 0, *", "times = beta/2, *")
    out = tmp_path / "g2.csv"
    assert main(["green", "--config", cfg(text), "--out", str(out)]) == 0
    rows = out.read_text().splitlines()[2:]
    assert "UnorderedWord" in rows[0] and rows[-1].endswith(",")


def test_sample_determinism_and_sidecar(cfg, tmp_path):
    out = tmp_path / "p.csv"
    path = cfg()
    assert main(["sample", "--config", path, "--out", str(out)]) == 0
    d1 = _sha(out)
    main(["sample", "--config", path, "--out", str(out)])
    assert _sha(out) == d1
    lines = out.read_text().splitlines()
    assert lines[1] == "sample,s,coord,value"
    assert len(lines) == 2 + 400 * 16 * 2
    meta = json.loads((tmp_path / "p.csv.json").read_text())
    assert meta["seed"] == 3 and meta["n_modes"] == 64 and meta["grid_size"] == 16
    assert meta["model_hash"] and len(meta["covariance"]) == 8
    assert lines[0] == f"# manifest={meta['manifest']['digest']}"


def test_sample_truncation_bound_halving(cfg, tmp_path):
    path = cfg()
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["sample", "--config", path, "--out", str(a), "--modes", "64", "--samples", "2"])
    main(["sample", "--config", path, "--out", str(b), "--modes", "32", "--samples", "2"])
    ba = json.loads((tmp_path / "a.csv.json").read_text())["truncation_bound"][0]
    bb = json.loads((tmp_path / "b.csv.json").read_text())["truncation_bound"][0]
    assert bb == pytest.approx(2 * ba, rel=1e-15)


def test_sample_rejects_quadrature(cfg, tmp_path):
    text = "[model]\nvariant = minkowski\nnodes = 32\n"
    assert main(["sample", "--config", cfg(text), "--out", str(tmp_path / "q.csv")]) == 2


def test_report_writes_figures(cfg, tmp_path):
    out = tmp_path / "rep"
    assert main(["report", "--config", cfg(), "--out", str(out), "--samples", "500"]) == 0
    for name in ("report.json", "kernel.csv", "kernel.png", "checks.png", "covariance.csv", "covariance.png"):
        assert (out / name).stat().st_size > 0
    assert (out / "kernel.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_rindler_default_beta(cfg):
    c = load_config(cfg("[model]\nvariant = rindler\ngrid = 8\n"))
    assert c.build().beta == pytest.approx(2 * math.pi)


def test_config_helpers(cfg):
    c = load_config(cfg())
    ctx = c.build()
    assert eval_time("beta/2", 3.0) == 1.5 and eval_time("-0.25*beta + 1", 4.0) == 0.0
    with pytest.raises(ConfigParse):
        eval_time("__import__('os')", 1.0)
    np.testing.assert_array_equal(parse_vector(ctx, "-e1"), [0.0, -1.0])
    np.testing.assert_array_equal(parse_vector(ctx, "[0.5, 2]"), [0.5, 2.0])
    with pytest.raises(ConfigParse):
        parse_vector(ctx, "e7")


def test_json_floats_roundtrip():
    x = [0.1, 1 / 3, 1e-300, math.inf]
    text = to_json({"x": x})
    assert '"inf"' in text
    back = json.loads(text)["x"]
    assert back[:3] == x[:3]
    assert "0.10000000000000001" in text
