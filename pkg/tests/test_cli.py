import subprocess
import sys

import numpy as np
import pytest

from subsetvi.cli import EXIT_CAP, EXIT_ERROR, EXIT_OK, EXIT_RESOURCE, main
from subsetvi.io.files import read_stats, read_value
from subsetvi.io.generators import near_discernible_grid
from subsetvi.io.pomdpfile import read_pomdp, write_pomdp
from subsetvi.model import PomdpModel

CLI = [sys.executable, "-m", "subsetvi.cli"]


@pytest.fixture
def unit_model(tmp_path):
    p = tmp_path / "one.pomdp"
    write_pomdp(PomdpModel(np.ones((1, 1, 1)), np.ones((1, 1, 1)), np.ones((1, 1)), 0.95), p)
    return p


def test_gen_pipe_analyze():
    gen = subprocess.run(CLI + ["gen", "example3"], capture_output=True, text=True, check=True)
    out = subprocess.run(CLI + ["analyze", "-"], input=gen.stdout, capture_output=True,
                         text=True, check=True).stdout
    assert "verdict: proper" in out
    assert sum(": rank" in ln and ln.endswith("degenerate") for ln in out.splitlines()) == 4


def test_gen_params_and_determinism(tmp_path, capsys):
    p1, p2 = tmp_path / "a.pomdp", tmp_path / "b.pomdp"
    assert main(["gen", "grid", "seed=3", "rows=2", "cols=3", "--out", str(p1)]) == EXIT_OK
    assert main(["gen", "grid", "seed=3", "rows=2", "cols=3", "--out", str(p2)]) == EXIT_OK
    assert p1.read_text() == p2.read_text()
    g = near_discernible_grid(seed=3)
    np.testing.assert_array_equal(read_pomdp(p1).observation, g.observation)
    np.testing.assert_array_equal(read_pomdp(p1).transition, g.transition)


def test_solve_vi_unit_model(unit_model, tmp_path, capsys):
    stats, out = tmp_path / "s.csv", tmp_path / "v.txt"
    code = main(["solve", str(unit_model), "--algo", "vi", "--epsilon", "0.01",
                 "--stats", str(stats), "--out", str(out)])
    assert code == EXIT_OK
    rows = read_stats(stats)
    assert rows[-1].residual <= 2.6316e-4
    v = read_value(out, read_pomdp(unit_model))
    assert abs(v.values[0, 0] - 20.0) <= 0.01
    assert "residual-met" in capsys.readouterr().out


def test_solve_cap_exit_code(unit_model, capsys):
    assert main(["solve", str(unit_model), "--algo", "vi", "--max-iter", "3"]) == EXIT_CAP


def test_solve_resource_exit_code(tmp_path, capsys):
    p = tmp_path / "m.pomdp"
    main(["gen", "random", "seed=1", "states=3", "actions=3", "observations=3", "--out", str(p)])
    assert main(["solve", str(p), "--algo", "vi", "--enum-cap", "2"]) == EXIT_RESOURCE
    assert "resource abort" in capsys.readouterr().err


def test_spvi_without_rich_actions(tmp_path, capsys):
    p = tmp_path / "m.pomdp"
    # dense random observations: every support is the whole space, so nothing is rich
    main(["gen", "random", "seed=2", "states=3", "actions=2", "observations=2", "--out", str(p)])
    assert main(["solve", str(p), "--algo", "spvi"]) == EXIT_ERROR
    assert "SPVI requires information-rich actions" in capsys.readouterr().err


def test_spvi_with_classes_file(tmp_path, capsys):
    m, c = tmp_path / "g.pomdp", tmp_path / "classes.txt"
    main(["gen", "grid", "seed=1", "--out", str(m)])
    c.write_text("look rich\n")
    code = main(["solve", str(m), "--algo", "spvi", "--classes", str(c), "--max-iter", "3",
                 "--max-expansions", "1", "--incremental"])
    assert code in (EXIT_OK, EXIT_CAP)
    assert "spvi:" in capsys.readouterr().out
    # exhaustive enumeration over 7 observations blows the cap once histories grow
    code = main(["solve", str(m), "--algo", "spvi", "--classes", str(c), "--max-iter", "3",
                 "--max-expansions", "1"])
    assert code == EXIT_RESOURCE
    assert "exceeds cap" in capsys.readouterr().err


def test_simulate_qmdp_and_set(unit_model, tmp_path, capsys):
    out = tmp_path / "v.txt"
    main(["solve", str(unit_model), "--algo", "vi", "--out", str(out)])
    capsys.readouterr()
    assert main(["simulate", str(unit_model), "qmdp", "--trials", "5", "--csv"]) == EXIT_OK
    text = capsys.readouterr().out.splitlines()
    assert text[0] == "trials,horizon,mean,stderr,seed"
    assert float(text[1].split(",")[2]) == pytest.approx(19.8815, abs=1e-4)
    assert main(["simulate", str(unit_model), str(out), "--trials", "5"]) == EXIT_OK
    assert "19.88" in capsys.readouterr().out


def test_missing_file_is_error(capsys):
    assert main(["analyze", "/nonexistent/model.pomdp"]) == EXIT_ERROR
    assert capsys.readouterr().err.startswith("subsetvi analyze: error:")


def test_unknown_flag_is_usage_error():
    r = subprocess.run(CLI + ["solve", "x", "--algo", "vi", "--bogus"], capture_output=True,
                       text=True)
    assert r.returncode != 0 and "unrecognized arguments" in r.stderr and not r.stdout


def test_bad_gen_param(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["gen", "grid", "seed"])
    assert exc.value.code != 0
