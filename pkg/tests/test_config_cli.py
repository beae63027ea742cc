import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlkpp import cli, config, io
from nlkpp.errors import ConfigurationError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_shipped_configs_parse():
    for p in sorted(CONFIGS.glob("*.ini")):
        cfg = config.load_config(p)
        assert config.parse_config(config.dump_config(cfg)) == cfg


def test_defaults():
    cfg = config.parse_config("")
    assert cfg.kernel_spec().shape == "gaussian"
    assert cfg.driver_spec().a0 == 1.0
    assert cfg.run.seeds == (0,)


@settings(max_examples=40, deadline=None)
@given(
    st.sampled_from(["gaussian", "laplace", "tent"]),
    st.floats(0.5, 3.0),
    st.sampled_from(["constant", "periodic", "telegraph"]),
    st.floats(0.05, 0.4),
    st.lists(st.integers(0, 1000), min_size=1, max_size=4, unique=True),
    st.booleans(),
)
def test_round_trip(shape, param, kind, mu_frac, seeds, figures):
    driver = {
        "constant": "a0 = 1.3",
        "periodic": "a0 = 1.0\namplitude = 0.4\nperiod = 3.0",
        "telegraph": "a_lo = 0.5\na_hi = 1.5\nrate_up = 1.0\nrate_down = 2.0",
    }[kind]
    pkey = config.KERNEL_PARAM[shape]
    text = (f"[kernel]\nshape = {shape}\n{pkey} = {param!r}\n[driver]\nkind = {kind}\n{driver}\n"
            f"[wave]\nmu = {mu_frac * param if shape == 'laplace' else mu_frac!r}\n"
            f"[run]\nseeds = {', '.join(map(str, seeds))}\n[output]\nfigures = {figures}\n")
    cfg = config.parse_config(text)
    again = config.parse_config(config.dump_config(cfg))
    assert again == cfg
    assert config.dump_config(again) == config.dump_config(cfg)


def test_all_violations_reported():
    text = "[kernel]\nshape = laplace\nbeta = 2\ns = 1\n[driver]\nkind = constant\nperiod = 3\n[time]\ndt = 5\nfoo = 1\n[wave]\nmu = 2.5\n[extra]\nx = 1\n"
    with pytest.raises(ConfigurationError) as exc:
        config.parse_config(text)
    msg = str(exc.value)
    assert "6 configuration violation(s)" in msg
    for part in ("[extra]: unknown section", "[kernel] s: not applicable", "[driver] period: not applicable",
                 "[time] foo: unknown key", "kernels: mu=2.5", "suggested dt <= 0.166667"):
        assert part in msg


def test_bad_grid_resolution():
    with pytest.raises(ConfigurationError, match="length scale"):
        config.parse_config("[grid]\nL = 40\nN = 101\n")


def test_csv_round_trip(tmp_path):
    rows = np.array([[0.1, 1.0 / 3.0], [math.pi, -2e-300]])
    p = io.write_csv(tmp_path / "a.csv", ["x", "y"], rows, {"seed": 3})
    meta, cols, data = io.read_csv(p)
    assert cols == ["x", "y"] and meta["seed"] == "3" and "nlkpp" in next(iter(meta))
    assert np.array_equal(data, rows)
    assert io.body_of(p).splitlines()[0] == "x,y"


def test_cli_speed(tmp_path, capsys):
    out = tmp_path / "speed"
    code = cli.main(["speed", "--config", str(CONFIGS / "gaussian.ini"), "--out", str(out)])
    assert code == 0
    _, cols, data = io.read_csv(out / "summary.csv")
    assert cols == ["seed", "mu_star", "c_star", "censored"]
    assert data[0, 1] == pytest.approx(1.0, abs=1e-3)
    assert data[0, 2] == pytest.approx(math.exp(0.5), abs=1e-3)
    assert (out / "config.ini").exists() and (out / "speed.png").exists()
    assert "mu_star,c_star" in capsys.readouterr().out


def test_cli_config_errors_exit_2(tmp_path, capsys):
    bad_dt = _write(tmp_path, "[time]\ndt = 1.0\n")
    assert cli.main(["simulate", "--config", str(bad_dt), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "suggested dt" in err
    unknown = _write(tmp_path, "[time]\nhorizon = 5\nspeed = 3\n", "u.ini")
    assert cli.main(["means", "--config", str(unknown), "--out", str(tmp_path / "o")]) == 2
    assert "[time] speed: unknown key" in capsys.readouterr().err
    assert cli.main(["means", "--config", str(tmp_path / "missing.ini")]) == 2


def test_cli_rerun_is_byte_identical(tmp_path):
    ini = _write(tmp_path, (CONFIGS / "telegraph.ini").read_text() + "\n[output]\nfigures = false\n")
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert cli.main(["means", "--config", str(ini), "--out", str(d), "--threads", "2"]) == 0
    names = sorted(p.name for p in a.glob("*.csv"))
    assert names == ["means.csv", "path_seed1.csv", "path_seed2.csv"]
    for n in names:
        assert io.body_of(a / n) == io.body_of(b / n)
        assert (a / n).read_bytes() == (b / n).read_bytes()


def test_cli_simulate_and_out_precedence(tmp_path, monkeypatch):
    ini = _write(tmp_path, "[time]\nhorizon = 4\nsnapshot_every = 2\n[grid]\nL = 30\nN = 601\n[output]\nfigures = false\n")
    monkeypatch.setenv(cli.ENV_OUT, str(tmp_path / "env"))
    assert cli.main(["simulate", "--config", str(ini), "--seed", "3"]) == 0
    out = tmp_path / "env" / "simulate"
    meta, cols, diag = io.read_csv(out / "diagnostics.csv")
    assert meta["seed"] == "3" and cols[:2] == ["t", "front_pos"]
    assert np.allclose(diag[:, 0], [0, 2, 4])


def test_cli_verify_small(tmp_path, capsys):
    ini = _write(tmp_path, "[grid]\nL = 30\nN = 1201\n[wave]\nmu = 0.5\n[run]\npairs = 4\n")
    assert cli.main(["verify", "--config", str(ini), "--out", str(tmp_path / "v")]) == 0
    text = (tmp_path / "v" / "verify.csv").read_text()
    for name in ("comparison_4_pairs", "comparison_equal_pair", "residual_phi_plus", "residual_phi_minus",
                 "lipschitz_derived", "invariant_interval"):
        assert f"0,{name},pass," in text
    assert "fail" not in capsys.readouterr().out


def test_cli_build_wave_and_stability(tmp_path):
    ini = _write(tmp_path, "[grid]\nL = 40\nN = 801\n[wave]\nmu = 0.5\nn_schedule = 10, 20, 40\n"
                           "[stability]\nkind = bump\namplitude = 0.3\nwidth = 5\nhorizon = 10\ntarget = 0.5\n")
    out = tmp_path / "w"
    assert cli.main(["build-wave", "--config", str(ini), "--out", str(out)]) == 0
    _, cols, prof = io.read_csv(out / "profile.csv")
    assert cols == ["x", "U", "phi_plus", "phi_minus"]
    assert np.all(prof[:, 1] <= prof[:, 2] + 1e-3) and (out / "wave.png").exists()
    out2 = tmp_path / "s"
    assert cli.main(["stability", "--config", str(ini), "--out", str(out2)]) == 0
    _, cols, tab = io.read_csv(out2 / "stability.csv")
    assert cols[:3] == ["t", "distance", "alpha"]
    assert tab[-1, 1] < tab[0, 1]
