"""Small shared numerical kernels: quadrature wrappers and difference stencils."""

import numpy as np
from scipy.integrate import trapezoid

__all__ = ["integrate_uniform", "deriv1_o4", "uniform_grid", "log_log_slope"]


def integrate_uniform(values, dx):
    """Composite trapezoid of samples on a uniform grid with spacing dx."""
    return trapezoid(values, dx=dx)


def deriv1_o4(values, dx):
    """Fourth-order first derivative on a uniform grid.

    Central five-point stencil in the interior, one-sided five-point
    closures at the two boundary pairs.  Needs at least 5 samples.
    """
    f = np.asarray(values, dtype=float)
    n = f.shape[-1]
    if n < 5:
        raise ValueError("fourth-order stencil needs at least 5 samples")
    d = np.empty_like(f)
    d[..., 2:-2] = (f[..., :-4] - 8.0 * f[..., 1:-3]
                    + 8.0 * f[..., 3:-1] - f[..., 4:]) / (12.0 * dx)
    d[..., 0] = (-25.0 * f[..., 0] + 48.0 * f[..., 1] - 36.0 * f[..., 2]
                 + 16.0 * f[..., 3] - 3.0 * f[..., 4]) / (12.0 * dx)
    d[..., 1] = (-3.0 * f[..., 0] - 10.0 * f[..., 1] + 18.0 * f[..., 2]
                 - 6.0 * f[..., 3] + f[..., 4]) / (12.0 * dx)
    d[..., -2] = -(-3.0 * f[..., -1] - 10.0 * f[..., -2] + 18.0 * f[..., -3]
                   - 6.0 * f[..., -4] + f[..., -5]) / (12.0 * dx)
    d[..., -1] = -(-25.0 * f[..., -1] + 48.0 * f[..., -2] - 36.0 * f[..., -3]
                   + 16.0 * f[..., -4] - 3.0 * f[..., -5]) / (12.0 * dx)
    return d


def uniform_grid(half_width, n):
    """Symmetric uniform grid of n nodes on [-half_width, half_width]."""
    if n < 2:
        raise ValueError("grid needs at least 2 nodes")
    return np.linspace(-float(half_width), float(half_width), int(n))


def log_log_slope(x, y):
    """Least-squares slope, intercept and rms residual of log y vs log x."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    slope, intercept = np.polyfit(lx, ly, 1)
    residual = float(np.sqrt(np.mean((ly - (slope * lx + intercept)) ** 2)))
    return float(slope), float(intercept), residual
