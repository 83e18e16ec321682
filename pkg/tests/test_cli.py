import json
import subprocess
import sys

import numpy as np
import pytest

from hardystein import cli
from hardystein.quadrature import QuadratureDivergence
from hardystein.spectral import GridFunction
from hardystein.testfunctions import gaussian_bump

ASYM = {"family": "stable_asymmetric", "alpha": 1.2, "c_plus": 2.0, "c_minus": 1.0, "d": 1}
CAUCHY = {"family": "stable_asymmetric", "alpha": 1.0, "c_plus": 1 / np.pi,
          "c_minus": 1 / np.pi, "d": 1}
POISSON = {"family": "compound_poisson", "rate": 2.0,
           "jumps": {"kind": "atoms", "values": [1.0, -1.0], "probs": [0.5, 0.5]}}
SMALL = ["--grid-n", "512", "--grid-l", "20"]


def _write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def _run(tmp_path, verb, cfg, *extra, out="out"):
    c = _write(tmp_path / (verb + ".json"), cfg)
    code = cli.main([verb, c, "--out", str(tmp_path / out), *extra])
    return code, tmp_path / out


def _report(d, name="report.json"):
    return json.loads((d / name).read_text())


def test_unknown_verb_and_help(capsys):
    assert cli.main(["frobnicate"]) == cli.EXIT_USAGE
    assert cli.main([]) == cli.EXIT_USAGE
    assert "unknown verb" in capsys.readouterr().err
    assert cli.main(["--help"]) == cli.EXIT_OK


def test_malformed_json_leaves_no_output(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    assert cli.main(["symmetrize", str(bad), "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG
    assert not (tmp_path / "o").exists()
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".hs-")]


@pytest.mark.parametrize("cfg", [
    {"measure": {"family": "custom", "alpha": 1.0}},
    {"measure": dict(ASYM, alpha=2.5)},
    {"measure": ASYM, "p": 0.5},
    {"measure": ASYM, "grid": {"N": 1000}},
    {},
])
def test_config_errors(tmp_path, cfg):
    code, out = _run(tmp_path, "verify-hardy-stein", cfg)
    assert code == cli.EXIT_CONFIG and not out.exists()


def test_simulate_config_errors(tmp_path):
    assert _run(tmp_path, "simulate", {"measure": POISSON})[0] == cli.EXIT_CONFIG
    assert _run(tmp_path, "simulate", {"measure": ASYM, "spec": {"kind": "zero"}})[0] == \
        cli.EXIT_CONFIG
    assert _run(tmp_path, "square-function", {"measure": ASYM}, "--p", "1.5,x")[0] == \
        cli.EXIT_CONFIG
    assert _run(tmp_path, "verify-hardy-stein", {"measure": ASYM}, "--p", "1.5,3")[0] == \
        cli.EXIT_CONFIG


def test_numerical_divergence_exit_code(tmp_path, monkeypatch):
    def builder(cfg, base):
        def run():
            raise QuadratureDivergence("tail does not converge")
        return run
    monkeypatch.setitem(cli.BUILDERS, "hw-profile", builder)
    code, out = _run(tmp_path, "hw-profile", {"measure": ASYM})
    assert code == cli.EXIT_NUMERIC and not out.exists()


def test_verify_report(tmp_path):
    cfg = {"measure": CAUCHY, "p": 2.0, "T": 1.0, "levels": 1}
    code, out = _run(tmp_path, "verify-hardy-stein", cfg, *SMALL)
    assert code == 0
    rep = _report(out)
    assert rep["config"]["grid"] == {"N": 512, "L": 20.0}
    assert rep["package_version"] == cli.__version__
    assert len(rep["input_sha256"]) == 64
    assert rep["result"]["rel_error"] <= 1e-2
    assert len(rep["result"]["refinement_trace"]) == 2
    lines = (out / "refinement.csv").read_text().splitlines()
    assert lines[0].startswith("# columns:")
    assert lines[1] == "level,lhs,rhs,rel_error"
    meta = _report(out, "report.meta.json")
    assert "created_unix" in meta and "threads" not in json.dumps(rep)


def test_t_horizon_and_p_flags(tmp_path):
    m = _write(tmp_path / "m.json", CAUCHY)
    code = cli.main(["verify-hardy-stein", "--measure", m, "--p", "1.5", "--t-horizon", "0.5",
                     "--out", str(tmp_path / "r.json"), *SMALL])
    assert code == 0
    rep = _report(tmp_path, "r.json")
    assert rep["config"]["p"] == 1.5 and rep["config"]["T"] == 0.5
    assert (tmp_path / "r.meta.json").exists()


def test_symmetrize_table(tmp_path):
    code, out = _run(tmp_path, "run", {"measure": ASYM}, out="sym")
    assert code == cli.EXIT_USAGE
    c = _write(tmp_path / "asym.json", {"measure": ASYM})
    assert cli.main(["run", "symmetrize", c, "--out", str(tmp_path / "sym")]) == 0
    rep = _report(tmp_path / "sym")
    r = np.array([row["r"] for row in rep["result"]["r_table"]])
    y = np.array([row["y"] for row in rep["result"]["r_table"]])
    assert np.allclose(r, np.sign(y) / 3, atol=1e-12)
    assert rep["result"]["reconstruction_rel_error"] < 1e-12


def test_compute_symbol_csv(tmp_path):
    code, out = _run(tmp_path, "compute-symbol", {"measure": ASYM, "phi": {"kind": "const",
                                                                          "value": 1.0}}, *SMALL)
    assert code == 0
    lines = (out / "m_phi.csv").read_text().splitlines()
    assert lines[1] == "xi,re_m,im_m"
    xi = [float(l.split(",")[0]) for l in lines[2:]]
    assert xi == sorted(xi) and len(xi) == 512
    assert _report(out)["result"]["sup_m"] <= 1 + 1e-6


def test_apply_multiplier_binary(tmp_path):
    f = gaussian_bump(512, 20.0)
    f.save(tmp_path / "f.bin")
    m = _write(tmp_path / "m.json", ASYM)
    phi = _write(tmp_path / "phi.json", {"kind": "half_space_y", "sign": "+"})
    code = cli.main(["apply-multiplier", "--measure", m, "--phi", phi, "--input",
                     str(tmp_path / "f.bin"), "--out", str(tmp_path / "res" / "g.bin")])
    assert code == 0
    g = GridFunction.load(tmp_path / "res" / "g.bin")
    assert g.is_real and g.grid == f.grid
    rep = _report(tmp_path / "res", "g.json")
    assert rep["result"]["norm_out"] < rep["result"]["norm_in"]
    # the hash covers the input bytes
    other = gaussian_bump(512, 20.0, width=2.0)
    other.save(tmp_path / "f.bin")
    cli.main(["apply-multiplier", "--measure", m, "--phi", phi, "--input",
              str(tmp_path / "f.bin"), "--out", str(tmp_path / "res2" / "g.bin")])
    assert _report(tmp_path / "res2", "g.json")["input_sha256"] != rep["input_sha256"]


def test_square_function_variant_and_p_list(tmp_path):
    cfg = {"measure": ASYM, "f": {"kind": "zero_mean_family", "index": 1}}
    code, out = _run(tmp_path, "square-function", cfg, "--variant", "starred", "--p", "1.5,2,3",
                     *SMALL)
    assert code == 0
    rep = _report(out)
    assert [r["p"] for r in rep["result"]["norms"]] == [1.5, 2.0, 3.0]
    assert {r["variant"] for r in rep["result"]["norms"]} == {"starred"}
    assert rep["result"]["starred_violations"] == 0
    assert (out / "g.csv").read_text().splitlines()[1] == "x,g_full,g_starred"


def test_adjoint_and_hw_profile(tmp_path):
    code, out = _run(tmp_path, "adjoint-check", {"measure": ASYM, "phi": {"kind": "exp_decay_t"}},
                     *SMALL)
    assert code == 0
    assert _report(out)["result"]["normalized_discrepancy"] < 1e-2
    code, out = _run(tmp_path, "hw-profile", {"measure": POISSON}, out="hw")
    assert code == 0 and _report(out)["result"]["verdict"] == "HW fails"


def test_simulate_is_deterministic_across_threads(tmp_path):
    cfg = {"measure": POISSON, "spec": {"kind": "y_up_to_time", "t1": 1.0}, "p": 3.0, "T": 1.5,
           "paths": 4000, "seed": 42}
    c = _write(tmp_path / "sim.json", cfg)
    blobs = []
    for threads, name in (("1", "a"), ("8", "b"), ("1", "c")):
        assert cli.main(["simulate", c, "--threads", threads, "--out", str(tmp_path / name)]) == 0
        blobs.append({p.name: p.read_bytes() for p in (tmp_path / name).iterdir()
                      if not p.name.endswith(".meta.json")})
    assert blobs[0] == blobs[1] == blobs[2]
    rep = json.loads(blobs[0]["report.json"])
    assert rep["rng"].startswith("numpy Philox")
    assert blobs[0]["mc.csv"].decode().splitlines()[1] == "quantity,estimate,std_error"


def test_existing_output_directory_is_updated(tmp_path):
    c = _write(tmp_path / "s.json", {"measure": ASYM})
    out = tmp_path / "o"
    out.mkdir()
    (out / "keep.txt").write_text("x")
    assert cli.main(["symmetrize", c, "--out", str(out)]) == 0
    assert (out / "keep.txt").exists() and (out / "report.json").exists()


def test_module_entry_point(tmp_path):
    c = _write(tmp_path / "s.json", {"measure": ASYM})
    proc = subprocess.run([sys.executable, "-m", "hardystein", "symmetrize", c, "--out",
                           str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip().endswith("report.json")


def test_dumps_handles_non_finite():
    text = cli.dumps({"b": np.float64(np.inf), "a": [np.int64(2), np.nan]})
    assert json.loads(text) == {"a": [2, None], "b": None}
    assert text.index('"a"') < text.index('"b"')
