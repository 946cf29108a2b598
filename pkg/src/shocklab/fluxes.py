"""Strictly convex fluxes of the form A(u) = a*u^2 + g(u).

The quadratic part dominates; g is a C^2 perturbation whose second
derivative is bounded by a user-certified constant ``g2_sup``.  The
contraction theory applies when g2_sup < 2a/11, i.e. when
``lam = 2a - 11*g2_sup`` is positive.
"""

from collections import namedtuple
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

__all__ = [
    "FluxModel",
    "FluxError",
    "make_perturbed_quadratic",
    "tabulated_perturbation",
    "sine_perturbation",
    "contraction_admissible",
    "flux_from_spec",
    "Admissibility",
]


class FluxError(ValueError):
    """Invalid flux construction or evaluation outside the validity interval."""


Admissibility = namedtuple("Admissibility", ["lam", "admissible"])

_ZERO = (lambda u: np.zeros_like(np.asarray(u, dtype=float)),) * 3


@dataclass(frozen=True)
class FluxModel:
    """A(u) = a*u^2 + g(u) on a finite validity interval.

    Immutable; all evaluations are pure and vectorized.  ``g2_sup`` is a
    certified bound on sup|g''| over [lo, hi]; for tabulated g it cannot
    be inferred and must be supplied by whoever built the table.
    """

    a: float
    g2_sup: float
    lo: float
    hi: float
    _g: Callable = field(repr=False, default=_ZERO[0])
    _g1: Callable = field(repr=False, default=_ZERO[1])
    _g2: Callable = field(repr=False, default=_ZERO[2])

    def _check_domain(self, u):
        u = np.asarray(u, dtype=float)
        if u.size and (np.min(u) < self.lo or np.max(u) > self.hi):
            raise FluxError(
                f"argument outside flux validity interval [{self.lo}, {self.hi}]: "
                f"range [{np.min(u)}, {np.max(u)}]"
            )
        return u

    def value(self, u):
        u = self._check_domain(u)
        return self.a * u * u + self._g(u)

    def slope(self, u):
        u = self._check_domain(u)
        return 2.0 * self.a * u + self._g1(u)

    def curvature(self, u):
        u = self._check_domain(u)
        return 2.0 * self.a + self._g2(u)

    def flux_eval(self, u):
        """Return (A(u), A'(u), A''(u))."""
        u = self._check_domain(u)
        return (self.a * u * u + self._g(u),
                2.0 * self.a * u + self._g1(u),
                2.0 * self.a + self._g2(u))

    def relative_flux(self, u, v):
        """A(u|v) = A(u) - A(v) - A'(v)(u - v); equals a(u-v)^2 for g = 0."""
        u = self._check_domain(u)
        v = self._check_domain(v)
        w = u - v
        return self.a * w * w + self._g(u) - self._g(v) - self._g1(v) * w

    @property
    def validity_interval(self):
        return (self.lo, self.hi)


def _validate(model: FluxModel, n_check: int) -> FluxModel:
    us = np.linspace(model.lo, model.hi, n_check)
    a2 = 2.0 * model.a + model._g2(us)
    if np.min(a2) <= 0.0:
        u_bad = us[int(np.argmin(a2))]
        raise FluxError(f"sampled A'' <= 0 at u = {u_bad:g}: flux not strictly convex")
    gmax = float(np.max(np.abs(model._g2(us))))
    # tiny relative slack: the certified bound is analytic, samples carry rounding
    if gmax > model.g2_sup * (1.0 + 1e-12) + 1e-14:
        raise FluxError(
            f"sampled |g''| = {gmax:g} exceeds certified bound g2_sup = {model.g2_sup:g}"
        )
    return model


def make_perturbed_quadratic(a, g_spec=None, g2_sup=0.0, interval=(-3.0, 3.0),
                             n_check=10_000, require_admissible=False):
    """Build a FluxModel from the quadratic coefficient and a perturbation.

    ``g_spec`` is None (pure quadratic) or a triple of vectorized callables
    (g, g', g'').  Convexity and the |g''| bound are verified by sampling
    A'' at ``n_check`` points; g2_sup itself remains a certified input.
    With ``require_admissible`` the construction refuses fluxes for which
    2a - 11*g2_sup <= 0.
    """
    if a <= 0.0:
        raise FluxError(f"quadratic coefficient must be positive, got {a}")
    if g2_sup < 0.0:
        raise FluxError(f"g2_sup must be nonnegative, got {g2_sup}")
    lo, hi = float(interval[0]), float(interval[1])
    if not lo < hi:
        raise FluxError(f"empty validity interval [{lo}, {hi}]")
    g, g1, g2 = _ZERO if g_spec is None else g_spec
    model = _validate(FluxModel(float(a), float(g2_sup), lo, hi, g, g1, g2), n_check)
    if require_admissible:
        adm = contraction_admissible(model)
        if not adm.admissible:
            raise FluxError(
                f"flux rejected: lam = 2a - 11*g2_sup = {adm.lam:g} <= 0 "
                f"(needs g2_sup < 2a/11 = {2.0 * a / 11.0:g})"
            )
    return model


def tabulated_perturbation(a, us, g_values, g2_sup, n_check=10_000,
                           require_admissible=False):
    """FluxModel with g given by a cubic interpolant of (us, g_values).

    g'' comes from differentiating the interpolant; g2_sup must still be
    certified by the caller since a table cannot bound the true function.
    """
    us = np.asarray(us, dtype=float)
    if us.ndim != 1 or us.size < 4 or np.any(np.diff(us) <= 0):
        raise FluxError("tabulated g needs at least 4 strictly increasing nodes")
    spline = CubicSpline(us, np.asarray(g_values, dtype=float))
    d1, d2 = spline.derivative(1), spline.derivative(2)
    return make_perturbed_quadratic(
        a, (spline, d1, d2), g2_sup=g2_sup, interval=(us[0], us[-1]),
        n_check=n_check, require_admissible=require_admissible)


def sine_perturbation(amplitude, frequency=1.0):
    """(g, g', g'') for g(u) = amplitude * sin(frequency * u); sup|g''| = amplitude*frequency^2."""
    amp, k = float(amplitude), float(frequency)

    def g(u):
        return amp * np.sin(k * np.asarray(u, dtype=float))

    def g1(u):
        return amp * k * np.cos(k * np.asarray(u, dtype=float))

    def g2(u):
        return -amp * k * k * np.sin(k * np.asarray(u, dtype=float))

    return g, g1, g2


def contraction_admissible(flux: FluxModel) -> Admissibility:
    """lam = 2a - 11*g2_sup; the contraction hypothesis holds iff lam > 0."""
    lam = 2.0 * flux.a - 11.0 * flux.g2_sup
    return Admissibility(lam=lam, admissible=lam > 0.0)


def flux_from_spec(spec: dict) -> FluxModel:
    """Construct a flux from flat config entries.

    Recognized kinds: quadratic, quadratic_plus_sine, tabulated,
    counterexample.  Keys are prefixed ``flux_`` (or ``cx_`` for the
    counterexample construction parameters).
    """
    kind = spec.get("flux_kind", "quadratic")
    interval = (spec.get("flux_lo", -3.0), spec.get("flux_hi", 3.0))
    if kind == "quadratic":
        return make_perturbed_quadratic(spec.get("flux_a", 1.0), interval=interval)
    if kind == "quadratic_plus_sine":
        amp = spec.get("flux_sine_amplitude", 0.05)
        freq = spec.get("flux_sine_frequency", 1.0)
        return make_perturbed_quadratic(
            spec.get("flux_a", 1.0), sine_perturbation(amp, freq),
            g2_sup=abs(amp) * freq * freq, interval=interval)
    if kind == "tabulated":
        table = np.loadtxt(spec["flux_table_path"], delimiter=",", ndmin=2)
        return tabulated_perturbation(
            spec.get("flux_a", 1.0), table[:, 0], table[:, 1],
            g2_sup=spec["flux_g2_sup"])
    if kind == "counterexample":
        from .counterexample import CounterexampleSpec, build_counterexample

        cx = build_counterexample(CounterexampleSpec(
            a=spec.get("cx_a", 1.0),
            alpha=spec.get("cx_alpha", 0.1),
            mollifier_width=spec.get("cx_width", spec.get("cx_alpha", 0.1) / 8.0),
            eps0=spec.get("cx_eps0", 1e-2)))
        return cx.flux
    raise FluxError(f"unknown flux kind {kind!r}")
