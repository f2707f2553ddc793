import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wente_lab.disc import make_polar_grid
from wente_lab.mobius import BubbleSpec
from wente_lab.norms import (
    NormReport, concentration_integral, distribution_function, hminus1, lorentz21, lp_norm,
    mprime_lorentz21, norm_report,
)
from tests.test_oracles import LORENTZ_MPRIME

samples = st.integers(1, 60).flatmap(
    lambda n: st.tuples(
        st.lists(st.floats(-1e3, 1e3), min_size=n, max_size=n),
        st.lists(st.floats(1e-3, 10), min_size=n, max_size=n),
    )
)


def test_lp_rejects_small_p():
    with pytest.raises(ValueError):
        lp_norm(np.ones(3), 0.5, np.ones(3))


def test_raw_samples_need_weights():
    with pytest.raises(ValueError):
        lp_norm(np.ones(3), 2.0)
    with pytest.raises(ValueError):
        lp_norm(np.ones(3), 2.0, np.ones(4))


def test_constant_on_disc():
    g = make_polar_grid(16, 32)
    f = g.constant(-2.0)
    assert lp_norm(f, 1) == pytest.approx(2 * np.pi)
    assert lp_norm(f, 2) == pytest.approx(2 * np.sqrt(np.pi))
    assert lp_norm(f, np.inf) == 2.0
    # constant c on a set of measure |D|: ||c||_{2,1} = 2 c |D|^{1/2}
    assert lorentz21(f, floor=0.0) == pytest.approx(4 * np.sqrt(np.pi))


def test_norm_report_validation():
    with pytest.raises(ValueError):
        NormReport(linf=-1.0, l2=0.0)


def test_norm_report_with_hminus1():
    g = make_polar_grid(32, 64)
    rep = norm_report(g.constant(1.0), with_hminus1=True)
    # u = (1 - r^2)/4 has ||grad u||^2 = pi / 8
    assert rep.hminus1 == pytest.approx(np.sqrt(np.pi / 8), rel=1e-3)
    assert set(rep.lp) == {1.0, 1.5, 2.0}
    with pytest.raises(ValueError):
        norm_report(np.ones(3), np.ones(3), with_hminus1=True)


@settings(max_examples=60)
@given(samples)
def test_lorentz_between_l2_and_l1_bounds(data):
    v, w = map(np.asarray, data)
    l2 = lp_norm(v, 2, w)
    l21 = lorentz21(v, w, floor=0.0)
    # Minkowski over level sets: ||f||_2 <= int mu(t)^{1/2} dt = ||f||_{2,1} / 2
    assert 2 * l2 <= l21 * (1 + 1e-9) + 1e-12
    assert l21 <= 2 * np.sqrt(w.sum()) * np.abs(v).max() * (1 + 1e-12) + 1e-12


@settings(max_examples=60)
@given(samples, st.floats(0.1, 10))
def test_lorentz_homogeneous(data, c):
    v, w = map(np.asarray, data)
    assert lorentz21(c * v, w, floor=0.0) == pytest.approx(c * lorentz21(v, w, floor=0.0), rel=1e-9, abs=1e-12)


@settings(max_examples=60)
@given(samples)
def test_lorentz_rearrangement_invariant(data):
    v, w = map(np.asarray, data)
    perm = np.random.default_rng(0).permutation(v.size)
    assert lorentz21(v[perm], w[perm], floor=0.0) == pytest.approx(lorentz21(v, w, floor=0.0), rel=1e-12, abs=1e-12)


@settings(max_examples=60)
@given(samples, st.floats(0, 1e3))
def test_distribution_function_monotone(data, t):
    v, w = map(np.asarray, data)
    assert distribution_function(v, t, w) >= distribution_function(v, t + 1.0, w)
    assert distribution_function(v, 0.0, w) <= w.sum()


def test_distribution_rejects_negative_level():
    with pytest.raises(ValueError):
        distribution_function(np.ones(2), -1.0, np.ones(2))


@pytest.mark.parametrize("eps", [1e-1, 1e-2, 1e-3, 1e-4])
def test_mprime_lorentz_matches_oracle(eps):
    assert mprime_lorentz21(eps) == pytest.approx(LORENTZ_MPRIME, rel=1e-3)


def test_mprime_tail_correction_improves():
    raw = mprime_lorentz21(1e-2, tail=False)
    full = mprime_lorentz21(1e-2)
    assert abs(full - LORENTZ_MPRIME) < abs(raw - LORENTZ_MPRIME)


def test_hminus1_grows_with_concentration():
    from wente_lab.checks import bubble_density
    from wente_lab.disc import focus_for_epsilon

    vals = []
    for eps in (1e-1, 1e-2):
        g = make_polar_grid(128, 256, 0.5, focus_for_epsilon(eps / 10))
        vals.append((hminus1(bubble_density(g, eps)), hminus1(bubble_density(g, eps / 10))))
    for a, b in vals:
        assert b > a


def test_concentration_limit():
    bump = lambda z: np.exp(-np.abs(z) ** 2 / 0.02)
    errs = [abs(concentration_integral(BubbleSpec(e), bump) - np.pi) for e in (1e-2, 1e-3, 1e-4)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[1] <= 0.02 * np.pi
