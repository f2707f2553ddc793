import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from wente_lab import sweep as sweep_mod
from wente_lab.config import LabConfig
from wente_lab.plotting import chart_series, plot_sweep
from wente_lab.sweep import COLUMNS, SweepParseError, read_sweep_csv, rows_finite, run_sweep, write_sweep_csv

SMALL = dict(n_r=64, n_theta=128, fem_h=0.1, eps_max=1e-1, eps_min=1e-2, eps_steps=3,
             coeffs=((1.0, 0.0, 0.0), (1.0, 1.0, 1.0)))


@pytest.fixture(scope="module")
def rows():
    return run_sweep(LabConfig(**SMALL))


def test_row_layout(rows):
    assert len(rows) == 3 * 2
    eps = [r.epsilon for r in rows]
    assert eps == sorted(eps, reverse=True)
    assert all(r.status == "ok" for r in rows)
    assert rows_finite(rows)
    assert COLUMNS[:12] == [
        "epsilon", "grad_V_l2", "grad_V_l21", "mprime_l21", "f_l1", "f_hminus1", "dirichlet_u_linf",
        "dirichlet_grad_l2", "neumann_v_linf", "neumann_grad_l2", "robin_grad_l2", "cross_solver_residual",
    ]


def test_growth_along_ladder(rows):
    base = [r for r in rows if r.beta == 0]
    assert all(a.neumann_grad_l2 < b.neumann_grad_l2 for a, b in zip(base, base[1:]))
    assert all(a.robin_grad_l2 < b.robin_grad_l2 for a, b in zip(base, base[1:]))
    ratios = [r.wente_ratio for r in base]
    assert max(ratios) / min(ratios) < 3


def test_single_epsilon():
    cfg = LabConfig(**{**SMALL, "eps_steps": 1, "coeffs": ((1.0, 0.0, 0.0),)})
    assert len(run_sweep(cfg)) == 1


def test_flagging_and_failures(monkeypatch):
    cfg = LabConfig(**{**SMALL, "eps_steps": 2, "cross_tol": 1e-12, "coeffs": ((1.0, 0.0, 0.0),)})
    rows = run_sweep(cfg)
    assert all(r.status == "flagged: cross_solver" for r in rows)

    def boom(*a, **k):
        raise RuntimeError("solver down")

    monkeypatch.setattr(sweep_mod, "robin_grad", boom)
    rows = run_sweep(LabConfig(**{**SMALL, "eps_steps": 2, "coeffs": ((1.0, 0.0, 0.0),)}))
    assert len(rows) == 2
    assert all(r.status.startswith("error: RuntimeError") and math.isnan(r.robin_grad_l2) for r in rows)
    assert all(np.isfinite(r.neumann_grad_l2) for r in rows)


def test_csv_roundtrip_and_determinism(rows, tmp_path):
    a = write_sweep_csv(rows, tmp_path / "a.csv")
    b = write_sweep_csv(run_sweep(LabConfig(**SMALL)), tmp_path / "b.csv")
    assert a.read_bytes() == b.read_bytes()
    back = read_sweep_csv(a)
    assert [r.numeric for r in back] == [r.numeric for r in rows]
    assert a.read_text().splitlines()[0] == ",".join(COLUMNS)


def test_plot_points_match_csv(rows, tmp_path):
    path = write_sweep_csv(rows, tmp_path / "sweep.csv")
    files = plot_sweep(path, tmp_path / "plots")
    assert sorted(p.name for p in files) == ["energies.svg", "hminus1.svg", "l21_norms.svg", "wente_ratio.svg"]
    expected = chart_series(read_sweep_csv(path))
    for p in files:
        root = ET.parse(p).getroot()
        got = {}
        for g in root.iter("{http://www.w3.org/2000/svg}g"):
            got[g.get("data-name")] = [(float(c.get("data-x")), float(c.get("data-y"))) for c in g]
        _, _, series = expected[p.stem]
        assert got == {k: v for k, v in series.items()}
    # energies carry the raw CSV values
    csv_vals = {float(line.split(",")[COLUMNS.index("neumann_grad_l2")])
                for line in path.read_text().splitlines()[1:]}
    svg = ET.parse(tmp_path / "plots" / "energies.svg").getroot()
    neumann = next(g for g in svg.iter("{http://www.w3.org/2000/svg}g") if g.get("data-name") == "neumann")
    assert {float(c.get("data-y")) for c in neumann} == csv_vals


def test_plot_single_row(rows, tmp_path):
    path = write_sweep_csv(rows[:1], tmp_path / "one.csv")
    for p in plot_sweep(path, tmp_path / "plots"):
        root = ET.parse(p).getroot()
        assert root.tag.endswith("svg")
        assert len(list(root.iter("{http://www.w3.org/2000/svg}circle"))) >= 1


def test_plot_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text(",".join(COLUMNS) + "\n")
    with pytest.raises(SweepParseError):
        plot_sweep(path, tmp_path / "plots")
    assert not (tmp_path / "plots").exists()


def test_malformed_csv_line_number(rows, tmp_path):
    path = write_sweep_csv(rows, tmp_path / "bad.csv")
    lines = path.read_text().splitlines()
    lines[3] = lines[3].replace(lines[3].split(",")[2], "abc", 1)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(SweepParseError, match="line 4"):
        read_sweep_csv(path)
    path.write_text(lines[0] + "\n1,2\n")
    with pytest.raises(SweepParseError, match="line 2"):
        read_sweep_csv(path)
    path.write_text("")
    with pytest.raises(SweepParseError, match="line 1"):
        read_sweep_csv(path)
