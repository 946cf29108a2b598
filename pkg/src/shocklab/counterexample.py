"""Construction of a strictly convex flux that defeats contraction.

For endpoint states +-a, a corner parameter alpha in (0, a/5) defines a
piecewise-linear convex trough

    A_pw(x) = -a - x        on (-a, -a + alpha)
            = -alpha        on [-a + alpha, a - alpha)
            = x - a         on [a - alpha, a)

and a continuous odd perturbation shape

    psi(x)  = -sqrt(x + a)              on (-a, -a + alpha)
            = sqrt(alpha)/(a - alpha) x on [-a + alpha, a - alpha)
            = sqrt(a - x)               on [a - alpha, a).

Two exact integrals drive everything: the corner (distributional second
derivative) term equals 2 alpha, and the weighted gradient term equals
-2 alpha^2/(a - alpha) - alpha/2.  Their combination

    margin = 2 alpha + 2 (-2 alpha^2/(a - alpha) - alpha/2)
           = alpha - 4 alpha^2 / (a - alpha)

is positive exactly when alpha < a/5.  Mollifying both functions with a
narrow Gaussian preserves the sign, a tiny quadratic term enforces strict
convexity, and an affine correction restores A(+-a) = 0 so the shock
speed is exactly zero.  The resulting initial data
u0 = S(x) + eps0 * phi(S(x)) makes the initial dissipation negative
independently of the shift velocity (phi has zero mean), so the squared
distance to the profile initially grows for every shift.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .fluxes import FluxModel, tabulated_perturbation
from .numerics import deriv1_o4, integrate_uniform
from .profiles import ShockProfile, compute_profile
from .solver import Field, SolveOptions, evolve_shifted

__all__ = [
    "CounterexampleSpec",
    "CounterexampleBuild",
    "AdversarialReport",
    "MarginError",
    "piecewise_A",
    "piecewise_psi",
    "exact_integrals",
    "mollify",
    "build_counterexample",
    "initial_dissipation",
    "adversarial_shift_test",
]


class MarginError(RuntimeError):
    """The smoothed construction lost the positive margin."""


@dataclass(frozen=True)
class CounterexampleSpec:
    """Parameters of the construction; endpoints are u_plus = -a, u_minus = +a."""

    a: float = 1.0
    alpha: float = 0.1
    mollifier_width: float = 0.0125
    eps0: float = 1e-2

    def __post_init__(self):
        if self.a <= 0.0:
            raise ValueError("a must be positive")
        if not 0.0 < self.alpha < self.a / 5.0:
            raise ValueError(
                f"alpha must lie in (0, a/5) = (0, {self.a / 5.0:g}), got {self.alpha}")
        if exact_integrals(self.a, self.alpha).margin <= 0.0:
            raise ValueError("corner margin not positive")  # unreachable given alpha < a/5
        if self.mollifier_width <= 0.0:
            raise ValueError("mollifier width must be positive")
        if self.mollifier_width >= self.alpha / 2.0:
            raise ValueError(
                f"mollifier width {self.mollifier_width:g} >= alpha/2 = "
                f"{self.alpha / 2.0:g} would destroy the corner structure")
        if self.eps0 <= 0.0:
            raise ValueError("eps0 must be positive")


def piecewise_A(a: float, alpha: float, x):
    """Three-branch convex trough; defined on [-a, a]."""
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > a):
        raise ValueError(f"argument outside [-{a}, {a}]")
    out = np.select(
        [x < -a + alpha, x < a - alpha],
        [-a - x, np.full_like(x, -alpha)],
        default=x - a)
    return out if out.ndim else float(out)


def piecewise_psi(a: float, alpha: float, x):
    """Three-branch odd perturbation shape; defined on [-a, a]."""
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > a):
        raise ValueError(f"argument outside [-{a}, {a}]")
    out = np.select(
        [x < -a + alpha, x < a - alpha],
        [-np.sqrt(np.maximum(x + a, 0.0)), np.sqrt(alpha) / (a - alpha) * x],
        default=np.sqrt(np.maximum(a - x, 0.0)))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ExactIntegrals:
    i_second: float  # corner term: |psi(-a+alpha)|^2 + |psi(a-alpha)|^2 = 2 alpha
    i_weight: float  # int A_pw psi'^2 = -2 alpha^2/(a-alpha) - alpha/2
    margin: float    # i_second + 2 i_weight, positive iff alpha < a/5


def exact_integrals(a: float, alpha: float) -> ExactIntegrals:
    """Closed forms of the two defining integrals and their margin."""
    if not 0.0 < alpha < a:
        raise ValueError(f"alpha must lie in (0, a), got {alpha}")
    i_second = 2.0 * alpha
    i_weight = -2.0 * alpha * alpha / (a - alpha) - alpha / 2.0
    return ExactIntegrals(i_second=i_second, i_weight=i_weight,
                          margin=i_second + 2.0 * i_weight)


def mollify(xs, values, width: float):
    """Convolve samples with a unit-mass Gaussian of standard deviation width.

    The kernel is normalized to unit discrete sum, so constants are
    preserved exactly and odd input on a symmetric grid stays mean-zero
    to rounding.  The grid must be uniform and resolve the kernel; output
    within one kernel radius (8 width) of the ends is polluted by the
    implicit zero padding, so callers pad their input accordingly.
    """
    xs = np.asarray(xs, dtype=float)
    values = np.asarray(values, dtype=float)
    dx = xs[1] - xs[0]
    if width <= 0.0:
        raise ValueError("width must be positive")
    if dx > width / 4.0:
        raise ValueError(f"grid spacing {dx:g} too coarse for mollifier width {width:g}")
    radius = int(np.ceil(8.0 * width / dx))
    ks = np.arange(-radius, radius + 1) * dx
    kernel = np.exp(-0.5 * (ks / width) ** 2)
    kernel /= kernel.sum()
    return np.convolve(values, kernel, mode="same")


def _A_extended(a, alpha, x):
    """The trough with its outer branches continued linearly beyond +-a."""
    x = np.asarray(x, dtype=float)
    return np.select(
        [x < -a + alpha, x < a - alpha],
        [-a - x, np.full_like(x, -alpha)],
        default=x - a)


def _psi_extended(a, alpha, x):
    """psi continued beyond +-a preserving global oddness (sqrt branches reflected)."""
    x = np.asarray(x, dtype=float)
    return np.select(
        [x < -a, x < -a + alpha, x < a - alpha, x <= a],
        [np.sqrt(np.maximum(-a - x, 0.0)),
         -np.sqrt(np.maximum(x + a, 0.0)),
         np.sqrt(alpha) / (a - alpha) * x,
         np.sqrt(np.maximum(a - x, 0.0))],
        default=-np.sqrt(np.maximum(x - a, 0.0)))


@dataclass
class CounterexampleBuild:
    """Everything the experiments need from one construction."""

    spec: CounterexampleSpec
    flux: FluxModel
    profile: ShockProfile
    u0: Field
    phi: CubicSpline = field(repr=False)
    ys_fine: np.ndarray = field(repr=False)
    phi_fine: np.ndarray = field(repr=False)
    corner_integral: float       # int A'' phi^2 over [-a, a] of the smoothed flux
    weight_integral: float       # int A phi'^2 over [-a, a]
    margin_smoothed: float       # corner + 2 * weight, must stay positive
    margin_exact: float
    initial_D: float


def _smoothed_flux_and_phi(spec: CounterexampleSpec, samples_per_width: int = 16):
    """Mollified flux table and perturbation shape on a padded fine grid."""
    a, alpha, w = spec.a, spec.alpha, spec.mollifier_width
    pad = 8.0 * w
    margin_domain = 1.0  # validity buffer beyond the endpoint states
    half = a + margin_domain + pad
    dx = w / samples_per_width
    n = 2 * int(np.ceil(half / dx)) + 1  # symmetric grid with a node at 0
    xs = np.linspace(-half, half, n)

    a_smooth = mollify(xs, _A_extended(a, alpha, xs), w)
    delta = 1e-6 * a
    a_smooth = a_smooth + delta * (xs * xs - a * a)
    # affine correction restoring A(+-a) = 0, hence shock speed exactly zero
    va = np.interp([-a, a], xs, a_smooth)
    slope = (va[1] - va[0]) / (2.0 * a)
    a_smooth = a_smooth - (va[0] + slope * (xs + a))

    phi_vals = mollify(xs, _psi_extended(a, alpha, xs), w)

    keep = np.abs(xs) <= a + margin_domain + 1e-12
    return xs[keep], a_smooth[keep], phi_vals[keep], delta


def smoothed_integrals(spec: CounterexampleSpec, samples_per_width: int = 16):
    """(corner_integral, weight_integral, margin) of the mollified construction.

    Converges to (2 alpha, i_weight, margin) at first order in the
    mollifier width.
    """
    xs, a_vals, phi_vals, _ = _smoothed_flux_and_phi(spec, samples_per_width)
    dx = xs[1] - xs[0]
    spline_a = CubicSpline(xs, a_vals)
    inside = np.abs(xs) <= spec.a + 1e-12
    y = xs[inside]
    a2 = spline_a(y, 2)
    phi = phi_vals[inside]
    dphi = deriv1_o4(phi, dx)
    corner = float(integrate_uniform(a2 * phi * phi, dx))
    weight = float(integrate_uniform(spline_a(y) * dphi * dphi, dx))
    return corner, weight, corner + 2.0 * weight


def build_counterexample(spec: CounterexampleSpec, half_width: float = 45.0,
                         n_profile: int = 4097, field_half_width: float | None = None,
                         nx: int = 2049, samples_per_width: int = 16,
                         check_eps0: bool = True) -> CounterexampleBuild:
    """Assemble flux, profile, perturbation shape and initial data.

    Raises MarginError when the mollified margin is not positive, or when
    the chosen eps0 fails the full nonlinear acceptance test
    D(0) < -margin/2 * eps0^2 (suggesting a smaller width or eps0).
    """
    xs, a_vals, phi_vals, delta = _smoothed_flux_and_phi(spec, samples_per_width)
    a, eps0 = spec.a, spec.eps0
    dx = xs[1] - xs[0]

    g_vals = a_vals - delta * xs * xs
    spline_a = CubicSpline(xs, a_vals)
    g2_sampled = float(np.max(np.abs(spline_a(xs, 2) - 2.0 * delta)))
    flux = tabulated_perturbation(delta, xs, g_vals, g2_sup=g2_sampled * (1.0 + 1e-9),
                                  n_check=len(xs))

    phi = CubicSpline(xs, phi_vals)
    inside = np.abs(xs) <= a + 1e-12
    y_in, phi_in = xs[inside], phi_vals[inside]
    dphi = deriv1_o4(phi_in, dx)
    corner = float(integrate_uniform(spline_a(y_in, 2) * phi_in * phi_in, dx))
    weight = float(integrate_uniform(spline_a(y_in) * dphi * dphi, dx))
    margin_smoothed = corner + 2.0 * weight
    exact = exact_integrals(a, spec.alpha)
    if margin_smoothed <= 0.0:
        raise MarginError(
            f"smoothed margin {margin_smoothed:g} not positive (exact {exact.margin:g}); "
            "use a smaller mollifier width")

    profile = compute_profile(flux, a, -a, half_width=half_width, n=n_profile)
    if field_half_width is None:
        field_half_width = half_width + 5.0
    grid = np.linspace(-field_half_width, field_half_width, int(nx))
    s, _ = profile.sample(grid)
    u0 = Field(xs=grid, u=s + eps0 * phi(np.clip(s, -a, a)), t=0.0)

    d0 = initial_dissipation(flux, u0, profile, 0.0, phi=phi, eps0=eps0)
    if check_eps0 and not d0 < -0.5 * margin_smoothed * eps0 ** 2:
        raise MarginError(
            f"eps0 acceptance failed: D(0) = {d0:g} not below "
            f"{-0.5 * margin_smoothed * eps0 ** 2:g}; "
            "use a smaller eps0 or mollifier width")

    return CounterexampleBuild(
        spec=spec, flux=flux, profile=profile, u0=u0, phi=phi,
        ys_fine=xs, phi_fine=phi_vals,
        corner_integral=corner, weight_integral=weight,
        margin_smoothed=margin_smoothed, margin_exact=exact.margin,
        initial_D=d0)


def initial_dissipation(flux: FluxModel, u0: Field, p: ShockProfile, xdot0: float,
                        phi=None, eps0: float | None = None,
                        ny: int = 8193) -> float:
    """Initial dissipation D(0) by the full nonlinear state-space formula.

    Because the perturbation shape has zero mean, the shift-velocity term
    carries a vanishing factor and the result is independent of xdot0.
    With ``phi``/``eps0`` given, the perturbation is sampled from the
    exact construction w(y) = eps0 * phi(y) (mean zero to rounding, so the
    independence holds to near machine precision); otherwise w comes from
    the generic change of variable applied to u0.
    """
    from .diagnostics import PerturbationY, change_of_variable, dissipation_y

    if phi is not None:
        if eps0 is None:
            raise ValueError("eps0 required when phi is given")
        ys = np.linspace(p.u_plus, p.u_minus, int(ny))
        w = eps0 * np.asarray(phi(ys), dtype=float)
        wbar = integrate_uniform(w, ys[1] - ys[0]) / (p.u_minus - p.u_plus)
        wp = PerturbationY(ys=ys, w=w, wbar=float(wbar),
                           strength=float(p.u_minus - p.u_plus))
    else:
        wp = change_of_variable(u0, p, ny=ny)
    return dissipation_y(wp, xdot0, flux, p.sigma).D_y


@dataclass
class AdversarialReport:
    """Outcome of evolving against a family of prescribed shifts."""

    velocities: np.ndarray
    exceedance_times: np.ndarray   # nan where no exceedance observed
    max_norms: np.ndarray
    initial_norm: float
    all_exceeded: bool
    min_max_norm: float


def adversarial_shift_test(flux: FluxModel, u0: Field, p: ShockProfile,
                           lipschitz_bound: float, t_max: float,
                           n_shifts: int = 21, n_random: int = 0,
                           seed: int = 0, opts: SolveOptions | None = None,
                           snapshot_times=None) -> AdversarialReport:
    """Evolve under prescribed shifts and record when the distance exceeds its start.

    The family is constant velocities spanning [-M, M] plus optional
    random piecewise-linear shifts with slopes bounded by M.  A finite
    family cannot certify the universal claim; this is evidence, with the
    earliest exceedance time tabulated per member.
    """
    from .diagnostics import norms

    if opts is None:
        opts = SolveOptions(rtol=1e-9, atol=1e-11)
    if snapshot_times is None:
        early = np.linspace(0.0, min(0.05, t_max), 21)[1:]
        late = np.linspace(min(0.05, t_max), t_max, 40)
        snapshot_times = np.unique(np.concatenate([[0.0], early, late]))

    _, l2_0 = norms(u0, p)
    rng = np.random.default_rng(seed)
    shifts = [("constant", float(v)) for v in
              np.linspace(-lipschitz_bound, lipschitz_bound, int(n_shifts))]
    for _ in range(int(n_random)):
        k = 5
        slopes = rng.uniform(-lipschitz_bound, lipschitz_bound, size=k)
        knots = np.linspace(0.0, t_max, k + 1)
        shifts.append(("piecewise", (knots, slopes)))

    vels, t_exceed, max_norms = [], [], []
    for kind, payload in shifts:
        if kind == "constant":
            v = payload

            def xdot_fn(t, v=v):
                return v
            vels.append(v)
        else:
            knots, slopes = payload

            def xdot_fn(t, knots=knots, slopes=slopes):
                idx = min(np.searchsorted(knots, t, side="right") - 1, len(slopes) - 1)
                return float(slopes[max(idx, 0)])
            vels.append(float(np.max(np.abs(slopes))))
        traj, _ = evolve_shifted(flux, p, u0, t_max, snapshot_times=snapshot_times,
                                 opts=opts, xdot_fn=xdot_fn)
        l2s = np.array([norms(f, p)[1] for f in traj.snapshots])
        above = l2s > l2_0 * (1.0 + 1e-9)
        t_exceed.append(traj.times[above][0] if np.any(above) else np.nan)
        max_norms.append(float(np.max(l2s)))

    t_exceed = np.asarray(t_exceed)
    return AdversarialReport(
        velocities=np.asarray(vels),
        exceedance_times=t_exceed,
        max_norms=np.asarray(max_norms),
        initial_norm=l2_0,
        all_exceeded=bool(np.all(np.isfinite(t_exceed))),
        min_max_norm=float(np.min(max_norms)))
