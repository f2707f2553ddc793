import pytest
from hypothesis import given, strategies as st

from wente_lab.config import ConfigError, LabConfig, format_config, load_config, parse_config


def test_defaults_valid():
    cfg = LabConfig()
    assert cfg.ladder[0] == pytest.approx(1e-1) and cfg.ladder[-1] == pytest.approx(1e-4)
    assert all(a > b for a, b in zip(cfg.ladder, cfg.ladder[1:]))
    assert len(cfg.glue_ladder) == 5


def test_parse_and_comments():
    cfg = parse_config("""
# experiment
grid.n_r = 32   # radial
grid.n_theta = 64
robin.coeffs = 1 0 0; 2 1 0.5
robin.arcs = -2.5 -0.5; 1 2
grid.focus = auto
glue.greedy = yes
""")
    assert (cfg.n_r, cfg.n_theta) == (32, 64)
    assert cfg.coeffs == ((1.0, 0.0, 0.0), (2.0, 1.0, 0.5))
    assert cfg.arcs == ((-2.5, -0.5), (1.0, 2.0))
    assert cfg.focus is None and cfg.glue_greedy


@pytest.mark.parametrize("text, where", [
    ("grid.n_r = 0", "n_r"),
    ("tol.check = -1e-3", "tolerance"),
    ("eps.max = 1e-3\neps.min = 1e-2", "decreasing"),
    ("bogus.key = 1", "line 1"),
    ("\ngrid.n_r 5", "line 2"),
    ("grid.n_r = five", "line 1"),
    ("glue.depth = 5", "depth"),
    ("robin.coeffs = 0 1 1", "alpha"),
    ("robin.arcs = 1 0", "arc"),
    ("grid.n_theta = 33", "even"),
])
def test_invalid(text, where):
    with pytest.raises(ConfigError, match=where):
        parse_config(text)


def test_single_step_ladder():
    assert LabConfig(eps_steps=1, eps_max=1e-2, eps_min=1e-2).ladder == [1e-2]


@given(st.integers(4, 512), st.floats(1e-6, 1e-2), st.integers(1, 9), st.booleans())
def test_format_roundtrip(n_r, eps_min, steps, greedy):
    cfg = LabConfig(n_r=n_r, eps_min=eps_min, eps_steps=steps, glue_greedy=greedy)
    assert parse_config(format_config(cfg)) == cfg


def test_overrides():
    cfg = LabConfig().with_overrides(n_r=16, eps_min=None)
    assert cfg.n_r == 16 and cfg.eps_min == LabConfig().eps_min
    with pytest.raises(ConfigError):
        LabConfig().with_overrides(check_tol=0.0)


def test_load_missing(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "none.cfg")
