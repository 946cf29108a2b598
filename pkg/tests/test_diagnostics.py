import numpy as np
import pytest
from scipy.integrate import quad

from shocklab import (Field, change_of_variable, dissipation_x, dissipation_y,
                      evaluate_dissipation, gagliardo_nirenberg_ratio,
                      make_perturbed_quadratic, norms, poincare_check, shift_rhs,
                      sine_perturbation)
from shocklab.diagnostics import PerturbationY

RNG = np.random.default_rng(20240817)


def _field(profile, pert_fn, L=20.0, nx=2048):
    xs = np.linspace(-L, L, nx)
    s, sp = profile.sample(xs)
    return Field(xs=xs, u=s + pert_fn(xs, s, sp), t=0.0)


def _mode_pert(profile, rng, amp=0.15, n_modes=4, with_linear=True):
    """Random smooth perturbation expressed in the state variable."""
    u_plus, u_minus = profile.u_plus, profile.u_minus
    alpha = u_minus - u_plus
    cc = rng.normal(size=n_modes) * amp
    cs = rng.normal(size=n_modes) * amp
    lin = rng.normal() * amp if with_linear else 0.0

    def pert(x, s, sp):
        frac = (s - u_plus) / alpha
        w = lin * (s - 0.5 * (u_plus + u_minus))
        for k in range(n_modes):
            w = w + cc[k] * np.cos((k + 1) * np.pi * frac) \
                + cs[k] * np.sin((k + 1) * np.pi * frac)
        return w

    return pert


# ---------------------------------------------------------------------------
# change of variable


def test_change_of_variable_zero(burgers_profile):
    # floor set by the two interpolation passes (inverse map, field sampling)
    v = _field(burgers_profile, lambda x, s, sp: 0.0 * x)
    wp = change_of_variable(v, burgers_profile)
    assert np.max(np.abs(wp.w)) < 1e-6
    assert wp.strength == pytest.approx(2.0)


def test_change_of_variable_constant(burgers_profile):
    v = _field(burgers_profile, lambda x, s, sp: np.full_like(x, 0.07))
    wp = change_of_variable(v, burgers_profile)
    assert np.max(np.abs(wp.w - 0.07)) < 1e-6
    assert wp.wbar == pytest.approx(0.07, abs=1e-7)


def test_change_of_variable_derivative_mode(burgers_profile):
    # V = S + S' maps to w(y) = -(1 - y^2)
    v = _field(burgers_profile, lambda x, s, sp: sp)
    wp = change_of_variable(v, burgers_profile)
    assert np.max(np.abs(wp.w + (1.0 - wp.ys ** 2))) < 1e-4


def test_change_of_variable_needs_min_resolution(burgers_profile):
    v = _field(burgers_profile, lambda x, s, sp: 0.0 * x)
    with pytest.raises(ValueError):
        change_of_variable(v, burgers_profile, ny=8)


# ---------------------------------------------------------------------------
# dissipation forms


def test_dissipation_zero_perturbation(burgers_flux, burgers_profile):
    v = _field(burgers_profile, lambda x, s, sp: 0.0 * x)
    rep = evaluate_dissipation(v, burgers_profile, burgers_flux)
    for val in (rep.D_x, rep.D_y, rep.I1, rep.I2, rep.I3, rep.I4):
        assert abs(val) < 1e-7


def test_dissipation_constant_w_cancels(burgers_flux, burgers_profile):
    # w = c with the feedback shift: I1 = 4c^2, I2 = -4c^2, I3 = I4 = 0
    c = 0.11
    v = _field(burgers_profile, lambda x, s, sp: np.full_like(x, c))
    xd = shift_rhs(v, burgers_profile, burgers_flux)
    assert xd == pytest.approx(c, abs=1e-6)
    rep = evaluate_dissipation(v, burgers_profile, burgers_flux, xdot=xd)
    assert rep.I1 == pytest.approx(4 * c * c, abs=1e-5)
    assert rep.I2 == pytest.approx(-4 * c * c, abs=1e-5)
    assert abs(rep.I3) < 1e-6 and abs(rep.I4) < 1e-12
    assert abs(rep.D_y) < 1e-5
    assert abs(rep.D_x) < 1e-5


def test_dissipation_parabolic_oracle(burgers_flux, burgers_profile):
    # w(y) = -(1 - y^2) via V = S + S'; oracle integrals computed by quadrature
    v = _field(burgers_profile, lambda x, s, sp: sp)
    xd = shift_rhs(v, burgers_profile, burgers_flux)
    assert xd == pytest.approx(-2.0 / 3.0, abs=1e-9)
    rep = evaluate_dissipation(v, burgers_profile, burgers_flux, xdot=xd)
    i1_oracle = 2.0 * (-2.0 / 3.0) * quad(lambda y: -(1 - y * y), -1, 1)[0]
    i2_oracle = quad(lambda y: -2.0 * (1 - y * y) ** 2, -1, 1)[0]
    i3_oracle = quad(lambda y: 2.0 * (1 - y) * (1 + y) * (2 * y) ** 2, -1, 1)[0]
    assert rep.I1 == pytest.approx(i1_oracle, abs=2e-5)      # 16/9
    assert rep.I2 == pytest.approx(i2_oracle, abs=2e-5)      # -32/15
    assert rep.I3 == pytest.approx(i3_oracle, abs=2e-5)      # 32/15
    assert abs(rep.I4) < 1e-12
    assert rep.D_y == pytest.approx(16.0 / 9.0, abs=5e-5)
    assert rep.D_y > 0.0
    assert rep.D_x == pytest.approx(rep.D_y, abs=1e-4)


def test_dissipation_x_direct_oracle(burgers_flux, burgers_profile):
    # same case evaluated purely in physical space against closed forms
    xs = np.linspace(-25, 25, 4097)
    s, sp = burgers_profile.sample(xs)
    v = Field(xs=xs, u=s + sp, t=0.0)
    d = dissipation_x(v, burgers_profile, -2.0 / 3.0, burgers_flux)
    assert d == pytest.approx(16.0 / 9.0, abs=1e-6)


def test_forms_agree_on_random_modes(burgers_flux, burgers_profile, sine_flux,
                                     sine_profile):
    rng = np.random.default_rng(7)
    for _ in range(50):
        for f, p in ((burgers_flux, burgers_profile), (sine_flux, sine_profile)):
            v = _field(p, _mode_pert(p, rng))
            rep = evaluate_dissipation(v, p, f)
            assert abs(rep.D_x - rep.D_y) <= 1e-4 * (1.0 + abs(rep.D_y))


def test_split_weight_equals_general_weight(burgers_flux, burgers_profile,
                                            sine_flux, sine_profile):
    # I3 + I4 must reproduce the unsplit weight evaluation identically
    rng = np.random.default_rng(11)
    for f, p in ((burgers_flux, burgers_profile), (sine_flux, sine_profile)):
        v = _field(p, _mode_pert(p, rng))
        rep = evaluate_dissipation(v, p, f)
        assert rep.D_y_general == pytest.approx(rep.D_y, abs=1e-9 * (1 + abs(rep.D_y)))


def test_i4_taylor_bound(sine_flux, sine_profile):
    # |I4| <= g2_sup * int W |w'|^2
    rng = np.random.default_rng(13)
    for _ in range(100):
        v = _field(sine_profile, _mode_pert(sine_profile, rng))
        rep = evaluate_dissipation(v, sine_profile, sine_flux)
        assert abs(rep.I4) <= sine_flux.g2_sup * rep.weighted_grad + 1e-10


def test_i1_plus_i2_mean_bound(burgers_flux, burgers_profile, sine_flux,
                               sine_profile):
    # with the feedback shift, I1 + I2 >= -(2a + g2_sup) int (w - wbar)^2
    rng = np.random.default_rng(17)
    for _ in range(100):
        for f, p in ((burgers_flux, burgers_profile), (sine_flux, sine_profile)):
            v = _field(p, _mode_pert(p, rng))
            xd = shift_rhs(v, p, f)
            wp = change_of_variable(v, p)
            rep = dissipation_y(wp, xd, f, p.sigma)
            dy = wp.dy
            mean_dev = np.trapezoid((wp.w - wp.wbar) ** 2, dx=dy)
            bound = -(2 * f.a + f.g2_sup) * mean_dev
            # equality holds for g = 0, so allow quadrature rounding either side
            assert rep.I1 + rep.I2 >= bound - 1e-7 * (1.0 + abs(bound))


def test_provable_lower_bound_lambda_over_6(burgers_flux, burgers_profile,
                                            sine_flux, sine_profile):
    # the weighted Poincare inequality yields D >= (lam/6) int W |w'|^2 with
    # lam = 2a - 11 g2_sup; this is the constant the estimate chain supports
    rng = np.random.default_rng(19)
    for _ in range(200):
        for f, p, lam in ((burgers_flux, burgers_profile, 2.0),
                          (sine_flux, sine_profile, 1.45)):
            v = _field(p, _mode_pert(p, rng))
            rep = evaluate_dissipation(v, p, f)
            assert rep.D_y >= (lam / 6.0) * rep.weighted_grad - 1e-6


def test_claimed_lower_bound_fails_without_factor_6(burgers_flux, burgers_profile):
    # closed-form counterexample to D >= lam * int W |w'|^2 with lam = 2a:
    # w(y) = y gives D = 4/3 but lam * int W |w'|^2 = 8/3
    xs = np.linspace(-25, 25, 4097)
    s, sp = burgers_profile.sample(xs)
    v = Field(xs=xs, u=2 * s, t=0.0)  # w(y) = y
    xd = shift_rhs(v, burgers_profile, burgers_flux)
    rep = evaluate_dissipation(v, burgers_profile, burgers_flux, xdot=xd)
    assert rep.D_y == pytest.approx(4.0 / 3.0, abs=1e-4)
    assert rep.lambda_lower_bound == pytest.approx(8.0 / 3.0, abs=1e-4)
    assert rep.D_y < rep.lambda_lower_bound - 1.0  # violated by a full unit


# ---------------------------------------------------------------------------
# Poincare inequality


def test_poincare_constant_function():
    lhs, rhs = poincare_check(lambda x: np.full_like(x, 3.0), (-1.0, 1.0))
    assert lhs == pytest.approx(0.0, abs=1e-12)
    assert rhs == pytest.approx(0.0, abs=1e-12)


def test_poincare_linear_oracle():
    lhs, rhs = poincare_check(lambda x: x, (-1.0, 1.0))
    assert lhs == pytest.approx(2.0 / 3.0, abs=1e-10)
    assert rhs == pytest.approx(10.0 / 9.0, abs=1e-10)


def test_poincare_cosine_oracle():
    lhs, rhs = poincare_check(np.cos if False else lambda x: np.cos(np.pi * x),
                              (0.0, 1.0))
    assert lhs == pytest.approx(0.5, abs=1e-9)
    assert rhs == pytest.approx(5 * np.pi ** 2 / 72 + 5.0 / 24.0, abs=1e-8)


def test_poincare_sampled_input():
    xs = np.linspace(-1, 1, 2049)
    lhs, rhs = poincare_check(xs.copy(), (-1.0, 1.0))
    assert lhs == pytest.approx(2.0 / 3.0, abs=1e-10)
    assert rhs == pytest.approx(10.0 / 9.0, abs=1e-10)


def test_poincare_random_sweep():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(300):
        u_plus = rng.uniform(-3, 2)
        u_minus = u_plus + rng.uniform(0.5, 4.0)
        coeffs = rng.normal(size=6)

        def v(x):
            frac = (x - u_plus) / (u_minus - u_plus)
            out = np.zeros_like(x)
            for k, c in enumerate(coeffs):
                out = out + c * np.sin((k + 1) * np.pi * frac + k)
            return out

        lhs, rhs = poincare_check(v, (u_plus, u_minus))
        assert lhs <= rhs * (1 + 1e-9) + 1e-12
        if rhs > 1e-12:
            worst = max(worst, lhs / rhs)
    # the sharp ratio for this inequality is 0.6, attained by linear functions
    assert worst < 1.0


def test_poincare_linear_is_extremal():
    lhs, rhs = poincare_check(lambda x: x, (-1.0, 1.0))
    assert lhs / rhs == pytest.approx(0.6, abs=1e-9)


# ---------------------------------------------------------------------------
# Gagliardo-Nirenberg ratio


def test_gn_gaussian_oracle():
    xs = np.linspace(-15, 15, 8193)
    ratio = gagliardo_nirenberg_ratio(xs, np.exp(-xs ** 2))
    # closed forms: ||f||2 = (pi/2)^(1/4), ||f||1 = sqrt(pi), ||f'||2 = (pi/2)^(1/4)
    oracle = (np.pi / 2) ** (1 / 6) / np.pi ** (1 / 3)
    assert ratio == pytest.approx(oracle, abs=1e-6)
    assert ratio == pytest.approx(0.7361562810567395, abs=1e-6)


def test_gn_scale_invariance():
    xs = np.linspace(-30, 30, 16385)
    base = gagliardo_nirenberg_ratio(xs, np.exp(-xs ** 2))
    dilated = gagliardo_nirenberg_ratio(xs, np.exp(-(1.7 * xs) ** 2))
    scaled = gagliardo_nirenberg_ratio(xs, 3.4 * np.exp(-xs ** 2))
    assert dilated == pytest.approx(base, rel=1e-5)
    assert scaled == pytest.approx(base, rel=1e-12)


def test_gn_zero_function():
    xs = np.linspace(-5, 5, 257)
    assert gagliardo_nirenberg_ratio(xs, np.zeros_like(xs)) == 0.0


# ---------------------------------------------------------------------------
# norms


def test_norms_oracles(burgers_profile):
    xs = np.linspace(-20, 20, 4097)
    s, _ = burgers_profile.sample(xs)
    v = Field(xs=xs, u=s, t=0.0)
    assert norms(v, burgers_profile) == (pytest.approx(0.0, abs=1e-9),
                                         pytest.approx(0.0, abs=1e-9))
    v = Field(xs=xs, u=s + np.exp(-xs ** 2), t=0.0)
    l1, l2 = norms(v, burgers_profile)
    assert l1 == pytest.approx(np.sqrt(np.pi), rel=1e-8)
    assert l2 == pytest.approx((np.pi / 2) ** 0.25, rel=1e-8)


def test_norms_refinement(burgers_profile):
    vals = []
    for nx in (1025, 2049):
        xs = np.linspace(-20, 20, nx)
        s, _ = burgers_profile.sample(xs)
        v = Field(xs=xs, u=s + np.exp(-np.abs(xs)), t=0.0)
        vals.append(norms(v, burgers_profile)[1])
    exact = 1.0  # ||exp(-|x|)||_2 = 1
    assert abs(vals[1] - exact) < abs(vals[0] - exact)
