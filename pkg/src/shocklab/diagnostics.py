"""Relative-entropy diagnostics for shifted runs.

The squared L2 distance to the profile obeys an exact balance

    d/dt ||v - S||_L2^2 + D(t) = 0,

and D(t) can be evaluated two ways that must agree:

  physical form (x):
    D = -[ 2 (Xdot - sigma) int (v - S) S' dx
           - 2 int A(v|S) S' dx - 2 int |d/dx (v - S)|^2 dx ]

  state form (y), after the monotone change of variable y = S(x) with
  w(y) = v(x(y)) - y on [u_plus, u_minus]:
    D = I1 + I2 + I3 + I4
    I1 = 2 (Xdot - sigma) int w dy
    I2 = -2 int A(w + y | y) dy
    I3 = 2a int (u_minus - y)(y - u_plus) |w'|^2 dy
    I4 = -2 int J |w'|^2 dy,
    J  = g(y) - g(u_minus) - (g(u_minus) - g(u_plus)) / (u_minus - u_plus) * (y - u_minus)

together with the unsplit weight A(y) - A(u_minus) - sigma (y - u_minus),
which equals -(a (u_minus - y)(y - u_plus) - J) identically; both
evaluations are computed and reconciled.

The module also provides the weighted Poincare inequality check

    int (v - vbar)^2 <= 5/6 int (u_minus - x)(x - u_plus) |v'|^2,

a Gagliardo-Nirenberg ratio diagnostic, perturbation norms and the shift
drift report.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import PchipInterpolator

from .fluxes import FluxModel, contraction_admissible
from .numerics import deriv1_o4, integrate_uniform
from .profiles import ShockProfile, StepProfile
from .solver import Field, ShiftTrajectory, shift_rhs

__all__ = [
    "PerturbationY",
    "DissipationReport",
    "ShiftDriftReport",
    "change_of_variable",
    "dissipation_y",
    "dissipation_x",
    "evaluate_dissipation",
    "poincare_check",
    "gagliardo_nirenberg_ratio",
    "norms",
    "shift_drift_diagnostic",
    "fit_drift_constant",
]


@dataclass(frozen=True)
class PerturbationY:
    """Perturbation in the state variable: w(y) on a uniform grid over [u_plus, u_minus]."""

    ys: np.ndarray
    w: np.ndarray
    wbar: float
    strength: float  # u_minus - u_plus

    @property
    def u_plus(self):
        return float(self.ys[0])

    @property
    def u_minus(self):
        return float(self.ys[-1])

    @property
    def dy(self):
        return float(self.ys[1] - self.ys[0])


@dataclass
class DissipationReport:
    """Dissipation at one time with its component breakdown.

    ``D_y_general`` evaluates the unsplit weight; it must agree with
    I3 + I4 (checked at construction).  ``weighted_grad`` stores
    int (u_minus - y)(y - u_plus)|w'|^2 dy so callers can form lower
    bounds with any coefficient; ``lambda_lower_bound`` is
    (2a - 11 g2_sup) times it.
    """

    t: float
    D_x: float
    D_y: float
    I1: float
    I2: float
    I3: float
    I4: float
    lambda_lower_bound: float
    weighted_grad: float
    D_y_general: float


def change_of_variable(v: Field, p: ShockProfile, ny: int | None = None) -> PerturbationY:
    """w(y) = v(x(y)) - y on a uniform y-grid over [u_plus, u_minus].

    x(y) inverts the strictly decreasing profile by monotone interpolation;
    beyond the tabulated range (the far tails) x is clamped, which is exact
    for boundary-settled fields.
    """
    if ny is None:
        ny = len(v.xs)
    if ny < 16:
        raise ValueError("change of variable needs ny >= 16")
    x_of_y = p.monotone_inverse()
    ys = np.linspace(p.u_plus, p.u_minus, int(ny))
    y_clamped = np.clip(ys, p.values[-1], p.values[0])
    x = x_of_y(y_clamped)
    v_interp = PchipInterpolator(v.xs, v.u)
    vx = v_interp(np.clip(x, v.xs[0], v.xs[-1]))
    w = vx - ys
    wbar = integrate_uniform(w, ys[1] - ys[0]) / (p.u_minus - p.u_plus)
    return PerturbationY(ys=ys, w=w, wbar=float(wbar),
                         strength=float(p.u_minus - p.u_plus))


def _dissipation_y_parts(wp: PerturbationY, xdot: float, flux: FluxModel, sigma: float):
    y, w, dy = wp.ys, wp.w, wp.dy
    u_plus, u_minus = wp.u_plus, wp.u_minus
    dw = deriv1_o4(w, dy)
    dw2 = dw * dw
    weight = (u_minus - y) * (y - u_plus)

    I1 = 2.0 * (xdot - sigma) * integrate_uniform(w, dy)
    I2 = -2.0 * integrate_uniform(flux.relative_flux(w + y, y), dy)
    I3 = 2.0 * flux.a * integrate_uniform(weight * dw2, dy)
    g_y = flux.value(y) - flux.a * y * y
    g_minus = flux.value(u_minus) - flux.a * u_minus ** 2
    g_plus = flux.value(u_plus) - flux.a * u_plus ** 2
    j = g_y - g_minus - (g_minus - g_plus) / (u_minus - u_plus) * (y - u_minus)
    I4 = -2.0 * integrate_uniform(j * dw2, dy)

    gen_weight = (flux.value(y) - flux.value(u_minus) - sigma * (y - u_minus))
    D_general = I1 + I2 - 2.0 * integrate_uniform(gen_weight * dw2, dy)
    weighted_grad = float(integrate_uniform(weight * dw2, dy))
    return I1, I2, I3, I4, D_general, weighted_grad


def dissipation_y(wp: PerturbationY, xdot: float, flux: FluxModel, sigma: float,
                  t: float = 0.0) -> DissipationReport:
    """State-space dissipation with its I1..I4 decomposition.

    The split (quadratic weight + J) and the unsplit general weight are
    algebraically identical; both are evaluated and must agree to
    quadrature rounding.
    """
    I1, I2, I3, I4, D_general, weighted_grad = _dissipation_y_parts(
        wp, xdot, flux, sigma)
    D_y = I1 + I2 + I3 + I4
    scale = 1.0 + abs(D_y) + abs(I2) + abs(I3)
    if abs(D_general - D_y) > 1e-9 * scale:
        raise AssertionError(
            f"split and general dissipation weights disagree: {D_y} vs {D_general}")
    lam = contraction_admissible(flux).lam
    return DissipationReport(t=t, D_x=np.nan, D_y=float(D_y), I1=float(I1),
                             I2=float(I2), I3=float(I3), I4=float(I4),
                             lambda_lower_bound=float(lam * weighted_grad),
                             weighted_grad=weighted_grad,
                             D_y_general=float(D_general))


def dissipation_x(v: Field, p: ShockProfile, xdot: float, flux: FluxModel) -> float:
    """Physical-space dissipation on the field's grid."""
    s, sp = p.sample(v.xs)
    diff = v.u - s
    d_diff = deriv1_o4(diff, v.dx)
    term_shift = 2.0 * (xdot - p.sigma) * integrate_uniform(diff * sp, v.dx)
    term_flux = -2.0 * integrate_uniform(flux.relative_flux(v.u, s) * sp, v.dx)
    term_grad = -2.0 * integrate_uniform(d_diff * d_diff, v.dx)
    return float(-(term_shift + term_flux + term_grad))


def evaluate_dissipation(v: Field, p: ShockProfile, flux: FluxModel,
                         xdot: float | None = None, ny: int | None = None,
                         t: float | None = None) -> DissipationReport:
    """Full report: both dissipation forms for one field snapshot.

    When ``xdot`` is None the feedback shift velocity is used.
    """
    if xdot is None:
        xdot = shift_rhs(v, p, flux)
    wp = change_of_variable(v, p, ny=ny)
    rep = dissipation_y(wp, xdot, flux, p.sigma, t=v.t if t is None else t)
    rep.D_x = dissipation_x(v, p, xdot, flux)
    return rep


def poincare_check(v, interval=None, n: int = 4097):
    """(lhs, rhs) of the weighted Poincare inequality on [u_plus, u_minus].

    ``v`` is either a callable (sampled on n uniform points of
    ``interval``) or an array of samples on a uniform grid spanning
    ``interval``.  Quadrature is Simpson; the derivative uses the
    fourth-order stencil, so polynomial test cases up to cubic order are
    reproduced to rounding.
    """
    if callable(v):
        if interval is None:
            raise ValueError("interval required when v is a callable")
        u_plus, u_minus = float(interval[0]), float(interval[1])
        xs = np.linspace(u_plus, u_minus, int(n))
        vals = np.asarray(v(xs), dtype=float)
    else:
        vals = np.asarray(v, dtype=float)
        if interval is None:
            raise ValueError("interval required for sampled input")
        u_plus, u_minus = float(interval[0]), float(interval[1])
        xs = np.linspace(u_plus, u_minus, len(vals))
    if not u_minus > u_plus:
        raise ValueError("interval must satisfy u_minus > u_plus")
    dx = xs[1] - xs[0]
    vbar = simpson(vals, dx=dx) / (u_minus - u_plus)
    lhs = simpson((vals - vbar) ** 2, dx=dx)
    dv = deriv1_o4(vals, dx)
    rhs = (5.0 / 6.0) * simpson((u_minus - xs) * (xs - u_plus) * dv * dv, dx=dx)
    return float(lhs), float(rhs)


def gagliardo_nirenberg_ratio(xs, values) -> float:
    """||f||_L2 / (||f||_L1^(2/3) ||f'||_L2^(1/3)); 0 for the zero function.

    Invariant under both dilation and amplitude scaling.
    """
    xs = np.asarray(xs, dtype=float)
    f = np.asarray(values, dtype=float)
    dx = xs[1] - xs[0]
    l2 = np.sqrt(integrate_uniform(f * f, dx))
    l1 = integrate_uniform(np.abs(f), dx)
    df = deriv1_o4(f, dx)
    l2p = np.sqrt(integrate_uniform(df * df, dx))
    denom = l1 ** (2.0 / 3.0) * l2p ** (1.0 / 3.0)
    if denom == 0.0:
        return 0.0
    return float(l2 / denom)


def norms(v: Field, ref) -> tuple:
    """(L1, L2) norms of v minus a reference profile sampled on v's grid."""
    if isinstance(ref, ShockProfile):
        r, _ = ref.sample(v.xs)
    elif isinstance(ref, StepProfile):
        r = ref.sample(v.xs)
    else:
        r = np.asarray(ref, dtype=float)
    diff = v.u - r
    l1 = float(integrate_uniform(np.abs(diff), v.dx))
    l2 = float(np.sqrt(integrate_uniform(diff * diff, v.dx)))
    return l1, l2


@dataclass
class ShiftDriftReport:
    sup_drift: float
    fitted_constant: float
    bound: float | None
    satisfied: bool | None


def shift_drift_diagnostic(traj: ShiftTrajectory, sigma: float,
                           norm_l1_0: float, norm_l2_0: float,
                           C0: float | None = None) -> ShiftDriftReport:
    """sup_t |X(t) - sigma t| against the shape C (1 + L2_0^2 + L1_0).

    With ``C0`` given the bound is checked; otherwise the constant is
    fitted (the smallest C making the bound hold for this run), to be
    aggregated across runs by ``fit_drift_constant``.
    """
    drift = np.abs(traj.X - sigma * traj.ts)
    sup_drift = float(np.max(drift))
    shape = 1.0 + norm_l2_0 ** 2 + norm_l1_0
    fitted = sup_drift / shape
    if C0 is None:
        return ShiftDriftReport(sup_drift, fitted, None, None)
    bound = C0 * shape
    return ShiftDriftReport(sup_drift, fitted, bound, sup_drift <= bound)


def fit_drift_constant(reports) -> float:
    """Smallest constant C making every run satisfy sup drift <= C * shape."""
    return max(r.fitted_constant for r in reports)
