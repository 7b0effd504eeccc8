import numpy as np
import pytest

import rotbound as rb
from rotbound.cli import ParseError, ValidationError, main, parse_config

FAST = "n = 64\nmax_iters = 20000\n"


def test_parse_defaults():
    cfg = parse_config("")
    assert cfg.n == 128
    assert cfg.extent == 8.0
    assert cfg.physics.k == 4.0
    assert cfg.physics.lam == 1.0
    assert cfg.solver.tol_grad == 1e-6
    assert cfg.dt == 1e-3
    assert cfg.rng_seed == 42


def test_parse_values_and_comments():
    cfg = parse_config("# comment\nn = 64\nl = 1.5  # inline\nl_grid = -1:1:0.5\n")
    assert cfg.n == 64
    assert cfg.l == 1.5
    assert np.allclose(cfg.l_grid, [-1.0, -0.5, 0.0, 0.5, 1.0])


def test_parse_rejects_unknown_key():
    with pytest.raises(ParseError, match="unknown key"):
        parse_config("bogus = 1\n")


def test_parse_rejects_garbage_line():
    with pytest.raises(ParseError, match="line 2"):
        parse_config("n = 64\nnot a pair\n")


def test_validation_k_strict():
    with pytest.raises(ValidationError, match="k must exceed 2"):
        parse_config("k = 2.0\n")


def test_validation_focusing_powers():
    cfg = parse_config("lambda = -1\nsigma = 0.5\n")
    assert cfg.physics.lam == -1.0
    with pytest.raises(ValidationError, match="sigma"):
        parse_config("lambda = -1\nsigma = 1.5\n")


def test_validation_extent():
    with pytest.raises(ValidationError, match="extent"):
        parse_config("extent = 3.0\nn = 64\n")


def test_cmd_minimize_writes_outputs(tmp_path):
    out = tmp_path / "run"
    code = main(
        ["minimize", "n=64", "m=1", "l=1", f"output_dir={out}"]
    )
    assert code == 0
    assert (out / "report.txt").exists()
    assert (out / "history.csv").exists()
    report = (out / "report.txt").read_text()
    assert "converged: true" in report
    f = rb.read_field(out / "minimizer.nlsb")
    assert abs(rb.mass(f) - 1.0) < 1e-10
    header = (out / "history.csv").read_text().splitlines()[0]
    assert header == "iter,energy,mass_err,angmom_err,gradnorm"


def test_cmd_minimize_infeasible_exit(tmp_path):
    code = main(
        ["minimize", "n=64", "m=1", "l=0.5", "seeds=0", f"output_dir={tmp_path}"]
    )
    assert code == 3


def test_cmd_minimize_not_converged_exit(tmp_path):
    code = main(
        ["minimize", "n=64", "m=1", "l=0.5", "max_iters=5", f"output_dir={tmp_path}"]
    )
    assert code == 4
    assert (tmp_path / "report.txt").exists()


def test_cmd_scan_curve(tmp_path):
    out = tmp_path / "scan"
    code = main(
        ["scan", "n=64", "m=1", "l_grid=-0.5:0.5:0.5", f"output_dir={out}"]
    )
    assert code == 0
    rows = (out / "curve.csv").read_text().splitlines()
    assert rows[0] == "l,e,converged,omega,Omega"
    assert len(rows) == 4
    ls = [float(r.split(",")[0]) for r in rows[1:]]
    assert ls == [-0.5, 0.0, 0.5]
    es = [float(r.split(",")[1]) for r in rows[1:]]
    assert abs(es[0] - es[2]) < 2e-6 * max(1.0, abs(es[0]))


def test_cmd_evolve_trace(tmp_path):
    out = tmp_path / "ev"
    code = main(
        ["evolve", "n=64", "m=1", "l=0", "T=0.5", f"output_dir={out}"]
    )
    assert code == 0
    rows = (out / "trace.csv").read_text().splitlines()
    assert rows[0] == "t,mass_drift,energy_drift,angmom_drift,orbit_distance"
    assert len(rows) >= 4
    assert (out / "final.nlsb").exists()


def test_cmd_evolve_from_checkpoint(tmp_path):
    grid = rb.make_grid(64, 8.0)
    f = rb.single_mode_seed(grid, 1.0, 0)
    ckpt = tmp_path / "start.nlsb"
    rb.write_field(f, ckpt)
    out = tmp_path / "ev2"
    code = main(["evolve", "n=64", f"field={ckpt}", "T=0.2", f"output_dir={out}"])
    assert code == 0
    rows = (out / "trace.csv").read_text().splitlines()
    assert rows[1].endswith(",")  # no orbit reference -> empty distance column


def test_cmd_stability(tmp_path):
    out = tmp_path / "stab"
    code = main(
        ["stability", "n=64", "m=1", "l=0", "T=0.5", "epsilon=0.01", f"output_dir={out}"]
    )
    assert code == 0
    rep = (out / "report.txt").read_text()
    assert "sup_distance" in rep


def test_cmd_verify_reduced(tmp_path, capsys):
    out = tmp_path / "verify"
    code = main(
        [
            "verify", "n=64", "m=1", "l=1", "T=1.0", "epsilon=0.01",
            "l_grid=0:1:0.5", "Omega=0.5", f"output_dir={out}",
        ]
    )
    captured = capsys.readouterr()
    assert code == 0, captured.out
    assert "PASS" in captured.out
    assert "FAIL" not in captured.out
    assert (out / "verify.txt").exists()


def test_scan_energies_reproducible_by_minimize(tmp_path):
    # every curve.csv energy is reproducible by a cold minimize at that l
    out = tmp_path / "scan"
    assert main(["scan", "n=64", "m=1", "l_grid=0:0.5:0.25", f"output_dir={out}"]) == 0
    rows = (out / "curve.csv").read_text().splitlines()[1:]
    l_val, e_scan = (float(rows[1].split(",")[i]) for i in (0, 1))
    out2 = tmp_path / "single"
    assert main(["minimize", "n=64", "m=1", f"l={l_val}", f"output_dir={out2}"]) == 0
    report = dict(
        line.split(": ", 1) for line in (out2 / "report.txt").read_text().splitlines()
    )
    assert abs(float(report["energy"]) - e_scan) < 1e-6 * max(1.0, abs(e_scan))


def test_cli_determinism(tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        code = main(
            ["minimize", "n=64", "m=1", "l=0.5", "max_iters=300", f"output_dir={out}"]
        )
        assert code in (0, 4)
        outs.append((out / "history.csv").read_bytes())
    assert outs[0] == outs[1]


def test_cli_bad_config_exit(tmp_path):
    assert main(["minimize", "k=2.0", f"output_dir={tmp_path}"]) == 2
    assert main(["minimize", "bogus=1", f"output_dir={tmp_path}"]) == 2
