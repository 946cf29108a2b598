import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shocklab import (FluxError, contraction_admissible, flux_from_spec,
                      make_perturbed_quadratic, sine_perturbation,
                      tabulated_perturbation)


def test_pure_quadratic_eval():
    f = make_perturbed_quadratic(1.0, interval=(-3, 3))
    a, a1, a2 = f.flux_eval(2.0)
    assert (a, a1, a2) == (4.0, 4.0, 2.0)


def test_sine_perturbed_eval_at_zero():
    f = make_perturbed_quadratic(1.0, sine_perturbation(0.05), g2_sup=0.05)
    a, a1, a2 = f.flux_eval(0.0)
    assert a == pytest.approx(0.0, abs=1e-15)
    assert a1 == pytest.approx(0.05)
    assert a2 == pytest.approx(2.0)


def test_curvature_at_origin_is_2a_plus_g2():
    f = make_perturbed_quadratic(0.7, sine_perturbation(0.02), g2_sup=0.02)
    # g''(0) = 0 for the sine perturbation
    assert f.curvature(0.0) == pytest.approx(1.4)


def test_rejects_nonpositive_a():
    with pytest.raises(FluxError):
        make_perturbed_quadratic(0.0)
    with pytest.raises(FluxError):
        make_perturbed_quadratic(-1.0)


def test_rejects_g2_bound_violation():
    # claim a bound smaller than the actual sup|g''|
    with pytest.raises(FluxError, match="exceeds certified"):
        make_perturbed_quadratic(1.0, sine_perturbation(0.1), g2_sup=0.05)


def test_rejects_nonconvex():
    g = sine_perturbation(3.0)  # |g''| up to 3 > 2a = 2
    with pytest.raises(FluxError, match="convex"):
        make_perturbed_quadratic(1.0, g, g2_sup=3.0)


def test_admissibility_threshold():
    assert contraction_admissible(make_perturbed_quadratic(1.0)).lam == 2.0
    f = make_perturbed_quadratic(1.0, sine_perturbation(0.1), g2_sup=0.1)
    adm = contraction_admissible(f)
    assert adm.lam == pytest.approx(0.9)
    assert adm.admissible
    f2 = make_perturbed_quadratic(1.0, sine_perturbation(0.2), g2_sup=0.2)
    adm2 = contraction_admissible(f2)
    assert adm2.lam == pytest.approx(-0.2)
    assert not adm2.admissible


def test_require_admissible_rejects_02_sine():
    # 0.2 > 2/11 = 0.1818...
    with pytest.raises(FluxError, match="rejected"):
        make_perturbed_quadratic(1.0, sine_perturbation(0.2), g2_sup=0.2,
                                 require_admissible=True)
    # 0.05 < 2/11 passes
    make_perturbed_quadratic(1.0, sine_perturbation(0.05), g2_sup=0.05,
                             require_admissible=True)


def test_relative_flux_burgers_closed_form():
    f = make_perturbed_quadratic(1.0, interval=(-4, 4))
    assert f.relative_flux(3.0, 1.0) == pytest.approx(4.0)
    assert f.relative_flux(1.3, 1.3) == 0.0


def test_relative_flux_taylor_bound_sine():
    f = make_perturbed_quadratic(1.0, sine_perturbation(0.05), g2_sup=0.05)
    val = f.relative_flux(1.5, 1.0)
    assert abs(val - 1.0 * 0.25) <= 0.05 * 0.25 / 2 + 1e-15


@settings(max_examples=200, deadline=None)
@given(u=st.floats(-2.0, 2.0), v=st.floats(-2.0, 2.0))
def test_relative_flux_nonnegative_and_bounded(u, v):
    f = make_perturbed_quadratic(1.0, sine_perturbation(0.05), g2_sup=0.05)
    val = f.relative_flux(u, v)
    assert val >= -1e-12
    assert abs(val - (u - v) ** 2) <= 0.05 * (u - v) ** 2 / 2 + 1e-12


def test_domain_check():
    f = make_perturbed_quadratic(1.0, interval=(-1, 1))
    with pytest.raises(FluxError, match="validity"):
        f.value(1.5)
    with pytest.raises(FluxError, match="validity"):
        f.relative_flux(0.5, -1.2)


def test_slope_matches_finite_differences():
    f = make_perturbed_quadratic(1.0, sine_perturbation(0.05), g2_sup=0.05)
    us = np.linspace(-1.5, 1.5, 7)
    errs = []
    for h in (1e-3, 5e-4):
        fd = (f.value(us + h) - f.value(us - h)) / (2 * h)
        errs.append(np.max(np.abs(fd - f.slope(us))))
    # central differences converge at second order
    assert errs[1] <= errs[0] / 3.0


def test_tabulated_matches_callable():
    us = np.linspace(-2.5, 2.5, 801)
    g, g1, g2 = sine_perturbation(0.05)
    f_tab = tabulated_perturbation(1.0, us, g(us), g2_sup=0.0501)
    f_ref = make_perturbed_quadratic(1.0, (g, g1, g2), g2_sup=0.05)
    probe = np.linspace(-2.0, 2.0, 101)
    assert np.allclose(f_tab.value(probe), f_ref.value(probe), atol=1e-9)
    assert np.allclose(f_tab.slope(probe), f_ref.slope(probe), atol=1e-7)
    assert np.allclose(f_tab.curvature(probe), f_ref.curvature(probe), atol=1e-4)


def test_flux_from_spec_kinds(tmp_path):
    f = flux_from_spec({"flux_kind": "quadratic", "flux_a": 2.0})
    assert f.a == 2.0 and f.g2_sup == 0.0
    f = flux_from_spec({"flux_kind": "quadratic_plus_sine", "flux_a": 1.0,
                        "flux_sine_amplitude": 0.05})
    assert f.g2_sup == pytest.approx(0.05)
    us = np.linspace(-3, 3, 401)
    table = tmp_path / "g.csv"
    np.savetxt(table, np.column_stack([us, 0.01 * us ** 2]), delimiter=",")
    f = flux_from_spec({"flux_kind": "tabulated", "flux_a": 1.0,
                        "flux_table_path": str(table), "flux_g2_sup": 0.021})
    assert f.curvature(0.0) == pytest.approx(2.02, abs=1e-3)
    with pytest.raises(FluxError):
        flux_from_spec({"flux_kind": "nope"})
