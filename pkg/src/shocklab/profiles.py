"""Viscous shock profiles and the limiting step shock.

The traveling wave S connecting u_minus (at -inf) to u_plus (at +inf)
solves the first-order autonomous ODE

    S' = -sigma*(S - u_pm) + A(S) - A(u_pm),

with sigma the Rankine-Hugoniot speed.  Both endpoint forms of the right
hand side agree.  The profile is defined up to translation; we pin the
midpoint, S(0) = (u_minus + u_plus)/2, which makes the Burgers answer
exactly -tanh(x).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .fluxes import FluxModel
from .numerics import integrate_uniform, uniform_grid

__all__ = [
    "ShockProfile",
    "StepProfile",
    "ProfileTailError",
    "shock_speed",
    "compute_profile",
    "profile_sample",
    "profile_l2_norms",
    "write_profile_csv",
]


class ProfileTailError(RuntimeError):
    """Profile tails did not settle at the truncated boundary."""

    def __init__(self, message, required_half_width):
        super().__init__(message)
        self.required_half_width = required_half_width


def shock_speed(flux: FluxModel, u_minus: float, u_plus: float) -> float:
    """Rankine-Hugoniot speed (A(u_plus) - A(u_minus)) / (u_plus - u_minus)."""
    if not u_minus > u_plus:
        raise ValueError(f"need u_minus > u_plus, got {u_minus} <= {u_plus}")
    return float((flux.value(u_plus) - flux.value(u_minus)) / (u_plus - u_minus))


@dataclass
class StepProfile:
    """Inviscid shock: u_minus for x < 0, u_plus for x >= 0."""

    u_minus: float
    u_plus: float

    def __post_init__(self):
        if not self.u_minus > self.u_plus:
            raise ValueError("step profile needs u_minus > u_plus")

    def sample(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0.0, self.u_minus, self.u_plus)


@dataclass
class ShockProfile:
    """Tabulated traveling-wave profile with its ODE-exact derivative.

    Treated as immutable after construction.  ``sample`` extends by the
    constant endpoint states (zero derivative) beyond the stored grid,
    and evaluates the derivative as the profile ODE right hand side at
    the interpolated value, never by differencing.
    """

    u_minus: float
    u_plus: float
    sigma: float
    xs: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    c_minus: float
    c_plus: float
    flux: FluxModel = field(repr=False)
    _interp: CubicHermiteSpline = field(repr=False, default=None)

    def __post_init__(self):
        if self._interp is None:
            self._interp = CubicHermiteSpline(self.xs, self.values, self.derivs)

    @property
    def half_width(self):
        return float(self.xs[-1])

    def ode_rhs(self, s):
        """-sigma*(s - u_plus) + A(s) - A(u_plus); negative strictly between the states."""
        return (-self.sigma * (s - self.u_plus)
                + self.flux.value(s) - self.flux.value(self.u_plus))

    def sample(self, x):
        """Return (S(x), S'(x)) with constant extension beyond the grid."""
        x = np.asarray(x, dtype=float)
        inside = (x >= self.xs[0]) & (x <= self.xs[-1])
        s = np.where(x < self.xs[0], self.u_minus, self.u_plus)
        s = np.where(inside, self._interp(np.clip(x, self.xs[0], self.xs[-1])), s)
        ds = np.where(inside, self.ode_rhs(np.clip(s, self.u_plus, self.u_minus)), 0.0)
        if x.ndim == 0:
            return float(s), float(ds)
        return s, ds

    def monotone_inverse(self):
        """Interpolant x(y) of the inverse map on the strictly decreasing core.

        Rounding-flat tail samples are dropped so the interpolation nodes
        are strictly monotone.
        """
        vals = self.values
        run_min = np.minimum.accumulate(vals)
        keep = np.concatenate([[True], vals[1:] < run_min[:-1]])
        from scipy.interpolate import PchipInterpolator

        return PchipInterpolator(vals[keep][::-1], self.xs[keep][::-1])

    def tail_rates_fitted(self, fraction=0.25):
        """Log-linear decay rates fitted on the outer grid quarters.

        Cross-check for the linearization rates (c_minus, c_plus); returns
        (rate_minus, rate_plus) as positive numbers.
        """
        n = len(self.xs)
        k = max(8, int(fraction * n))
        right = np.abs(self.values[-k:] - self.u_plus)
        left = np.abs(self.values[:k] - self.u_minus)
        rate_plus = -np.polyfit(self.xs[-k:], np.log(right), 1)[0]
        rate_minus = np.polyfit(self.xs[:k], np.log(left), 1)[0]
        return float(rate_minus), float(rate_plus)


def compute_profile(flux: FluxModel, u_minus: float, u_plus: float,
                    half_width: float | None = None, n: int = 4097,
                    rtol: float = 1e-12, settle_rtol: float = 1e-8) -> ShockProfile:
    """Integrate the profile ODE outward from the pinned midpoint.

    The midpoint value (u_minus + u_plus)/2 sits at x = 0; integration
    runs to +-half_width with a high-order adaptive integrator.  The
    endpoint linearization rates c_pm = |A'(u_pm) - sigma| set the default
    half_width = 20 / min(c_pm) so that tail truncation is below 1e-8
    relative.  Raises ProfileTailError when the tails have not settled to
    settle_rtol * (u_minus - u_plus) at the boundary.
    """
    if not u_minus > u_plus:
        raise ValueError(f"need u_minus > u_plus, got {u_minus} <= {u_plus}")
    sigma = shock_speed(flux, u_minus, u_plus)
    c_minus = abs(float(flux.slope(u_minus)) - sigma)
    c_plus = abs(float(flux.slope(u_plus)) - sigma)
    if min(c_minus, c_plus) <= 0.0:
        raise ValueError("degenerate endpoint linearization: A'(u_pm) equals sigma")
    if half_width is None:
        half_width = 20.0 / min(c_minus, c_plus)

    a_plus = flux.value(u_plus)
    lo, hi = flux.validity_interval

    def rhs(_x, s):
        # trial stages of the adaptive integrator may overshoot the saturated
        # tails; clamping Lipschitz-extends the RHS without changing it on
        # the range the profile actually lives in
        s = np.clip(s, lo, hi)
        return -sigma * (s - u_plus) + flux.value(s) - a_plus

    mid = 0.5 * (u_minus + u_plus)
    alpha = u_minus - u_plus
    atol = 1e-13 * alpha
    max_step = half_width / 20.0
    xs = uniform_grid(half_width, n)
    right = solve_ivp(rhs, (0.0, half_width), [mid], method="DOP853",
                      dense_output=True, rtol=rtol, atol=atol, max_step=max_step)
    left = solve_ivp(rhs, (0.0, -half_width), [mid], method="DOP853",
                     dense_output=True, rtol=rtol, atol=atol, max_step=max_step)
    if not (right.success and left.success):
        raise RuntimeError(f"profile integration failed: {right.message} / {left.message}")

    values = np.empty(n)
    neg = xs < 0.0
    values[neg] = left.sol(xs[neg])[0]
    values[~neg] = right.sol(xs[~neg])[0]

    gap_minus = abs(values[0] - u_minus)
    gap_plus = abs(values[-1] - u_plus)
    tol = settle_rtol * alpha
    if max(gap_minus, gap_plus) > tol:
        need = half_width + np.log(max(gap_minus, gap_plus) / tol) / min(c_minus, c_plus)
        raise ProfileTailError(
            f"profile tails not settled at |x| = {half_width:g}: gaps "
            f"({gap_minus:.3e}, {gap_plus:.3e}) exceed {tol:.3e}; "
            f"need half_width >= {need:.1f}", required_half_width=float(need))

    # saturated tails may round onto (or one ulp past) the endpoint states;
    # tolerate rounding-level excursions and pin values strictly inside
    over = np.maximum(values - u_minus, u_plus - values)
    if np.max(over) > 1e-12 * alpha:
        raise RuntimeError("computed profile leaves the interval (u_plus, u_minus)")
    values = np.clip(values, np.nextafter(u_plus, u_minus), np.nextafter(u_minus, u_plus))
    diffs = np.diff(values)
    if np.any(diffs >= 0.0):
        bad = np.where(diffs >= 0.0)[0]
        gap = np.minimum(u_minus - values[bad], values[bad] - u_plus)
        if np.any(gap > 1e-12 * alpha) or np.any(diffs > 1e-14 * alpha):
            raise RuntimeError("computed profile is not strictly decreasing")
    derivs = np.asarray(rhs(None, values))
    return ShockProfile(u_minus=float(u_minus), u_plus=float(u_plus), sigma=sigma,
                        xs=xs, values=values, derivs=derivs,
                        c_minus=c_minus, c_plus=c_plus, flux=flux)


def profile_sample(profile: ShockProfile, x):
    """Functional form of ShockProfile.sample."""
    return profile.sample(x)


def profile_l2_norms(profile: ShockProfile):
    """(||S'||_L2, ||S - S0||_L2) by trapezoid on the stored grid.

    The integrands decay exponentially, so truncation at the stored
    half-width is negligible once the tails have settled.
    """
    dx = profile.xs[1] - profile.xs[0]
    norm_deriv = float(np.sqrt(integrate_uniform(profile.derivs ** 2, dx)))
    step = StepProfile(profile.u_minus, profile.u_plus)
    diff = profile.values - step.sample(profile.xs)
    norm_step = float(np.sqrt(integrate_uniform(diff ** 2, dx)))
    return norm_deriv, norm_step


def write_profile_csv(profile: ShockProfile, path):
    """Two-column CSV (x, S) with full double precision."""
    with open(path, "w") as fh:
        fh.write("x,S\n")
        for x, s in zip(profile.xs, profile.values):
            fh.write(f"{x:.17g},{s:.17g}\n")
