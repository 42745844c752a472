import numpy as np
import pytest

from helpers import small_config
from sqgobstacle.config import DEFAULTS, parse_config, parse_config_text
from sqgobstacle.errors import ConfigError
from sqgobstacle.fields import GridSpec, ScalarField
from sqgobstacle.io import (
    load_checkpoint, load_snapshot, read_diagnostics_csv, save_checkpoint, save_snapshot, write_diagnostics_csv,
)
from sqgobstacle.scheme import run_simulation


def test_empty_file_gives_defaults(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("")
    rc = parse_config(p)
    cfg = rc.sim
    assert (cfg.grid.n_r, cfg.grid.n_theta, cfg.grid.r_max) == (128, 256, 6.0)
    assert cfg.kernel.delta == 0.1 and cfg.kernel.cutoff_width == 0.5
    assert cfg.dt == 2e-3 and cfg.t_end == 1.0
    assert not cfg.motion.translates and cfg.motion.theta.is_zero
    assert rc.perturbation_eps == DEFAULTS["initial"]["perturbation_eps"][1]


def test_full_file():
    text = """
[grid]
r_max = 5
n_r = 64
n_theta = 128
[kernel]
delta = 0.2
deltas = 0.4, 0.2
[motion]
h1_sin = 1:0.2
theta_poly = 0, 0.5   # constant rate
[time]
dt = 0.01
t_end = 0.5
limiter = no
[output]
snapshot_format = csv
"""
    rc = parse_config_text(text)
    assert rc.sim.motion.h1.sin == ((1.0, 0.2),)
    assert rc.sim.motion.theta.poly == (0.0, 0.5)
    assert rc.deltas == (0.4, 0.2)
    assert rc.sim.limiter is False
    assert rc.snapshot_format == "csv"


@pytest.mark.parametrize("text, line, word", [
    ("[grid]\nn_r = 64\nr_max = 30\n", 3, "2/delta"),
    ("[time]\n\ndt = -0.1\n", 3, "dt"),
    ("[time]\ndt = 1e-3\nbogus = 1\n", 3, "unknown key"),
    ("[nonsense]\nx = 1\n", 1, "unknown section"),
    ("[grid]\nn_r = sixty\n", 2, "integer"),
    ("[grid]\nn_r = 64\nn_r = 32\n", 3, "duplicate"),
    ("[motion]\nh1_sin = 1;0.2\n", 2, "freq:amp"),
    ("[kernel]\ndeltas = 0.4, 0.2\n[grid]\nr_max = 6\n", 4, "2/delta"),
])
def test_errors_carry_line_numbers(text, line, word):
    with pytest.raises(ConfigError) as e:
        parse_config_text(text)
    assert e.value.line == line
    assert word in str(e.value)


def test_r_max_three_over_delta_names_outer_cutoff():
    with pytest.raises(ConfigError, match="outer cutoff"):
        parse_config_text("[kernel]\ndelta = 0.1\n[grid]\nr_max = 30\n")


@pytest.mark.parametrize("fmt", ["binary", "csv"])
def test_snapshot_round_trip_is_bit_exact(tmp_path, fmt):
    g = GridSpec(1.0, 4.0, 16, 32)
    rng = np.random.default_rng(2)
    f = ScalarField(g, rng.normal(size=g.shape) * 10.0 ** rng.integers(-300, 300, size=g.shape), 0.123456789)
    p = tmp_path / f"s.{fmt}"
    save_snapshot(f, p, fmt)
    back = load_snapshot(p)
    assert back.grid == g and back.time_tag == f.time_tag
    assert back.values.tobytes() == f.values.tobytes()


def test_diagnostics_csv_round_trip(tmp_path):
    res = run_simulation(small_config(t_end=0.02))
    p = tmp_path / "d.csv"
    write_diagnostics_csv(res.diagnostics, p)
    rows = read_diagnostics_csv(p)
    header = p.read_text().splitlines()[0].split(",")
    assert header[:13] == ["t", "R", "N", "L1", "L2", "Linf", "H1", "H2", "H3", "H4",
                           "blowup_integral", "osgood_bound", "picard_iters"]
    for a, b in zip(rows, res.diagnostics.rows):
        for k in header:
            assert a[k] == float(b[k])


def test_checkpoint_resume_matches_ten_more_steps(tmp_path):
    cfg = small_config(t_end=0.14)
    full = run_simulation(cfg, keep_trajectory=False)
    from dataclasses import replace

    part = run_simulation(replace(cfg, t_end=0.04), keep_trajectory=False)
    ck = tmp_path / "ck.json"
    save_checkpoint(part.state, cfg, ck)
    st = load_checkpoint(ck, cfg)
    assert st.state_hash() == part.state.state_hash()
    rest = run_simulation(cfg, state=st, keep_trajectory=False)
    assert rest.state.step == part.state.step + 10
    assert rest.state.omega.values.tobytes() == full.state.omega.values.tobytes()
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_diagnostics_csv(full.diagnostics, a)
    write_diagnostics_csv(rest.diagnostics, b)
    assert a.read_bytes() == b.read_bytes()


def test_checkpoint_rejects_other_config(tmp_path):
    cfg = small_config(t_end=0.01)
    res = run_simulation(cfg, keep_trajectory=False)
    ck = tmp_path / "ck.json"
    save_checkpoint(res.state, cfg, ck)
    with pytest.raises(ConfigError):
        load_checkpoint(ck, small_config(t_end=0.02))
    text = ck.read_text().replace('"step": 1', '"step": 2')
    ck.write_text(text)
    with pytest.raises(ConfigError, match="hash"):
        load_checkpoint(ck, cfg)
