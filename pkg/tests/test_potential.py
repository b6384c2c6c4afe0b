from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy import integrate

from katowave.grids import CartesianGrid, RadialGrid
from katowave.potential import (
    SELFADJOINT_THRESHOLD, KatoDivergenceError, TruncationWarning, PotentialSpec, ball_well, check_hypotheses,
    gaussian, inverse_decay, kato_constant, kato_modulus, kato_norm, kato_report, load_catalog,
    lorentz_321_norm, mollify, split_potential, tabulated, unit_ball, zero,
)

GRID = RadialGrid(4.0, 800)


def newton_at_origin(V, r_max=np.inf):
    """int V(y)/|y| dy for radial V by adaptive quadrature."""
    return integrate.quad(lambda s: 4 * math.pi * s * float(V.radial(np.array(s))), 0, r_max, limit=200)[0]


# ---- evaluation invariants -------------------------------------------------

CATALOG = [unit_ball(), ball_well(0.9), gaussian(-0.7, 1.3), inverse_decay(0.5, 0.5),
           ball_well(2.0, 0.5) + gaussian(0.3, 2.0)]


@pytest.mark.parametrize("V", CATALOG, ids=repr)
def test_sign_decomposition_reconstructs(V):
    x = np.random.default_rng(0).normal(size=(500, 3)) * 1.5
    assert np.allclose(V(x), V.positive_part()(x) - V.negative_part()(x))
    assert np.all(V.positive_part()(x) >= 0) and np.all(V.negative_part()(x) >= 0)


@given(st.floats(0.01, 5.0), st.integers(0, 10**6))
def test_radial_spec_depends_only_on_radius(r, seed):
    assume(min(abs(r - 1.0), abs(r - 0.5)) > 1e-9)   # jump radii of the ball wells
    u = np.random.default_rng(seed).normal(size=(4, 3))
    x = r * u / np.linalg.norm(u, axis=1, keepdims=True)
    for V in CATALOG:
        vals = V(x)
        assert np.allclose(vals, vals[0], rtol=1e-12)


def test_dict_roundtrip_preserves_values():
    V = ball_well(2.0, 0.5) + gaussian(0.3, 2.0).rescaled(4.0)
    W = PotentialSpec.from_dict(json.loads(json.dumps(V.to_dict())))
    r = np.linspace(0, 3, 50)
    assert np.array_equal(V.radial(r), W.radial(r))


def test_load_catalog_toml(tmp_path):
    p = tmp_path / "cat.toml"
    p.write_text('[well]\nkind = "ball-well"\nradius = 1.0\ndepth = 0.4\nsplit_radius = 1.5\n')
    cat = load_catalog(p)
    V, R = cat["well"]
    assert R == 1.5 and V.radial(np.array([0.5]))[0] == -0.4


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        PotentialSpec("square")


# ---- Kato norm ---------------------------------------------------------------

def test_kato_unit_ball_closed_form():
    assert kato_norm(unit_ball(), RadialGrid(2.0, 2000)) == pytest.approx(2 * math.pi, rel=1e-3)


def test_kato_zero():
    assert kato_norm(zero(), GRID) == 0.0


def test_kato_depth_09_well_is_linear_in_amplitude():
    assert kato_norm(ball_well(0.9), GRID) == pytest.approx(0.9 * 2 * math.pi, rel=1e-3)


@pytest.mark.parametrize("V", [gaussian(1.0, 1.0), gaussian(-2.0, 0.5), ball_well(-1.0, 1.0) + gaussian(0.5, 0.7)],
                         ids=repr)
def test_kato_radially_decreasing_profile_peaks_at_origin(V):
    # the Newtonian potential of a radially nonincreasing density is maximal at the centre
    assert kato_norm(V, RadialGrid(8.0, 1600)) == pytest.approx(abs(newton_at_origin(V, 8.0)), rel=1e-3)


def test_kato_ball_shell_maximum_off_origin():
    # shell a<|y|<b has constant Newtonian potential 2 pi (b^2 - a^2) inside the hole
    V = ball_well(-1.0, 2.0) - ball_well(-1.0, 1.0)
    assert kato_norm(V, RadialGrid(3.0, 1200)) == pytest.approx(2 * math.pi * 3, rel=1e-3)


def test_kato_cartesian_agrees_with_radial():
    V = gaussian(1.0, 1.0)
    cart = kato_norm(V, CartesianGrid(4.0, 41))
    assert cart == pytest.approx(math.pi**1.5 * 2 / math.sqrt(math.pi), rel=0.03)


def test_kato_divergence_detected():
    V = PotentialSpec("inverse-decay", {"C": 1.0, "eps": 0.0})   # 1/(2|x|^2): log-divergent
    with pytest.raises(KatoDivergenceError):
        kato_norm(V, RadialGrid(2.0, 512), check_convergence=True)


def test_kato_convergence_check_passes_for_bounded():
    kato_norm(gaussian(1.0), RadialGrid(6.0, 512), check_convergence=True)


@given(st.sampled_from([0.25, 1.0, 4.0]), st.sampled_from(range(3)))
def test_kato_scaling_invariance(theta, which):
    V = [ball_well(0.8, 1.0), gaussian(1.0, 1.0), ball_well(0.5, 0.5) + gaussian(-0.3, 1.5)][which]
    grid = RadialGrid(12.0, 3000)
    assert kato_norm(V.rescaled(theta), grid) == pytest.approx(kato_norm(V, grid), rel=5e-3)


@given(st.floats(-3, 3), st.floats(0.3, 2.0), st.floats(-3, 3), st.floats(0.3, 2.0))
def test_kato_subadditive(a1, w1, a2, w2):
    V1, V2 = gaussian(a1, w1), ball_well(a2, w2)
    absum = PotentialSpec("sign-part", {"sign": "+"}, (V1,)) + V1.negative_part() \
        + V2.positive_part() + V2.negative_part()
    assert kato_norm(absum, GRID) <= kato_norm(V1, GRID) + kato_norm(V2, GRID) + 1e-9


# ---- Kato modulus -----------------------------------------------------------

def test_modulus_unit_ball_closed_form():
    # a ball of radius r <= 1 fits inside the unit ball, where the integral is 2 pi r^2
    radii = [0.25, 0.5, 0.75, 1.0]
    mod = kato_modulus(unit_ball(), radii, RadialGrid(3.0, 1200))
    for r, eta in mod:
        assert eta == pytest.approx(2 * math.pi * r**2, rel=2e-3)


def test_modulus_zero():
    assert all(eta == 0.0 for _, eta in kato_modulus(zero(), [0.1, 1.0], GRID))


@given(st.floats(0.2, 3.0), st.floats(0.2, 2.0))
def test_modulus_bounded_by_sup_norm(M, w):
    V = gaussian(M, w)
    for r, eta in kato_modulus(V, [0.05, 0.2, 0.5], GRID):
        assert eta <= 2 * math.pi * M * r**2 * (1 + 1e-3)


def test_modulus_monotone_and_converges_to_norm():
    V = ball_well(1.0, 1.0) + gaussian(0.4, 0.5)
    grid = RadialGrid(3.0, 600)
    mod = kato_modulus(V, np.geomspace(0.05, 8.0, 12), grid)
    etas = np.array([e for _, e in mod])
    assert np.all(np.diff(etas) >= -1e-12)
    assert etas[-1] == pytest.approx(kato_norm(V, grid), rel=1e-6)


def test_modulus_rejects_unsorted():
    with pytest.raises(ValueError):
        kato_modulus(unit_ball(), [0.5, 0.1], GRID)


def test_kato_report_invariants_and_json():
    rep = kato_report(ball_well(0.9), GRID)
    etas = [e for _, e in rep.modulus_samples]
    assert all(e <= rep.kato_norm * (1 + 1e-9) for e in etas)
    assert rep.class_verdict
    assert json.loads(rep.to_json())["kato_norm"] == pytest.approx(rep.kato_norm)


# ---- Lorentz norm -----------------------------------------------------------

def test_lorentz_zero():
    assert lorentz_321_norm(zero(), GRID).value == 0.0


def test_lorentz_unit_ball_closed_form():
    assert lorentz_321_norm(unit_ball(), GRID).value == pytest.approx((4 * math.pi / 3) ** (2 / 3), rel=1e-9)


def test_lorentz_gaussian_closed_form():
    # mu{e^{-r^2} > s} = 4pi/3 log(1/s)^{3/2}; integrate its 2/3 power over s
    exact = (4 * math.pi / 3) ** (2 / 3) * integrate.quad(lambda s: math.log(1 / s), 0, 1)[0]
    assert lorentz_321_norm(gaussian(1.0), RadialGrid(8.0, 4000)).value == pytest.approx(exact, rel=2e-3)


@given(st.floats(0.1, 10.0))
def test_lorentz_positive_homogeneity(a):
    V = ball_well(1.0) + gaussian(0.5, 0.7)
    assert lorentz_321_norm(V * a, GRID).value == pytest.approx(a * lorentz_321_norm(V, GRID).value, rel=1e-9)


def test_lorentz_tail_bound_for_power_decay():
    with pytest.warns(TruncationWarning):
        ln = lorentz_321_norm(inverse_decay(1.0, 0.5), RadialGrid(20.0, 2000))
    assert 0 < ln.tail_bound < math.inf


def test_lorentz_dominates_kato_with_one_constant():
    grid = RadialGrid(10.0, 2000)
    cat = [unit_ball(), ball_well(0.9, 0.5), gaussian(1.0, 1.0), gaussian(-2.0, 0.3),
           ball_well(1.0, 2.0) - ball_well(1.0, 1.0)]
    ratios = [kato_norm(V, grid) / lorentz_321_norm(V, grid).value for V in cat]
    # the sharp constant for the Kato kernel against L^{3/2,1} is attained by balls
    c0 = ratios[0]
    assert max(ratios) <= c0 * (1 + 1e-3)


# ---- split, mollify, hypotheses --------------------------------------------

def test_split_reconstructs():
    V = gaussian(1.0, 1.0)
    V1, V2 = split_potential(V, 1.3)
    r = GRID.nodes
    assert np.allclose(V1.radial(r) + V2.radial(r), V.radial(r))


def test_split_beyond_support_leaves_zero_tail():
    _, V2 = split_potential(ball_well(1.0, 1.0), 1.5)
    assert kato_norm(V2, GRID) == 0.0


def test_split_at_zero():
    V = gaussian(1.0)
    V1, V2 = split_potential(V, 0.0)
    assert kato_norm(V1, GRID) == 0.0
    assert kato_norm(V2, GRID) == pytest.approx(kato_norm(V, GRID))


def test_split_tail_decreases_monotonically():
    grid = RadialGrid(8.0, 1600)
    tails = [kato_norm(split_potential(gaussian(1.0), R)[1], grid) for R in (0.5, 1, 2, 3, 4)]
    assert np.all(np.diff(tails) < 0) and tails[-1] < 1e-5


@pytest.mark.parametrize("eps", [0.1, 0.2])
def test_mollify_positivity_and_support(eps):
    grid = RadialGrid(2.0, 400)
    m = mollify(ball_well(-1.0, 1.0), eps, grid)
    assert np.all(m.potential.sample(grid) >= 0)
    assert m.support_radius <= 1.0 + eps + 1e-12
    assert np.all(m.potential.radial(grid.nodes[grid.nodes > 1 + eps]) == 0)


def test_mollify_kato_distance_linear_for_smooth():
    grid = RadialGrid(3.0, 1200)
    V = tabulated(np.linspace(0, 1, 400), np.cos(np.linspace(0, 1, 400) * math.pi / 2) ** 2)
    d = [mollify(V, e, grid).kato_distance for e in (0.05, 0.1, 0.2)]
    assert d[0] < d[1] < d[2]
    # at most linear: halving eps at least halves the distance up to a margin
    assert d[1] / d[0] > 1.5 and d[2] / d[1] > 1.5


def test_constants():
    assert kato_constant(3) == 2 * math.pi
    assert SELFADJOINT_THRESHOLD == 4 * math.pi
    assert kato_constant(5) == pytest.approx(2 * math.pi**2.5 / math.gamma(1.5))


def test_hypotheses_compact_support():
    rep = check_hypotheses(ball_well(-0.5), 2.0, GRID)
    assert rep.thm_main_ii_value == 0.0 and rep.thm_main_ii and rep.thm_main_i


def test_hypotheses_depth_09_well():
    rep = check_hypotheses(ball_well(0.9), 2.0, GRID)
    assert rep.thm_main_iii_value == pytest.approx(1.8 * math.pi, rel=1e-3)
    assert rep.thm_main_iii and rep.selfadjoint_ok
    assert not rep.heat_ok


@given(st.floats(-3.0, 3.0))
def test_hypothesis_flags_are_functions_of_margins(g):
    rep = check_hypotheses(ball_well(g), 2.0, RadialGrid(2.0, 200))
    assert rep.heat_ok == (rep.heat_margin > 0)
    assert rep.selfadjoint_ok == (rep.selfadjoint_margin > 0)
    assert rep.thm_main_iii == (rep.thm_main_iii_value < 2 * math.pi)
    assert rep.thm_main_ii == (rep.thm_main_ii_value < 4 * math.pi)
    again = check_hypotheses(ball_well(g), 2.0, RadialGrid(2.0, 200))
    assert again.to_json() == rep.to_json()
