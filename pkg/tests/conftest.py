import numpy as np
import pytest

from shocklab import (CounterexampleSpec, build_counterexample, compute_profile,
                      make_perturbed_quadratic, sine_perturbation)


@pytest.fixture(scope="session")
def burgers_flux():
    return make_perturbed_quadratic(1.0, interval=(-2.5, 2.5))


@pytest.fixture(scope="session")
def burgers_profile(burgers_flux):
    return compute_profile(burgers_flux, 1.0, -1.0)


@pytest.fixture(scope="session")
def sine_flux():
    # g = 0.05 sin(u): sup|g''| = 0.05 < 2/11, admissible
    return make_perturbed_quadratic(1.0, sine_perturbation(0.05), g2_sup=0.05,
                                    interval=(-2.5, 2.5))


@pytest.fixture(scope="session")
def sine_profile(sine_flux):
    return compute_profile(sine_flux, 1.0, -1.0)


@pytest.fixture(scope="session")
def cx_build():
    return build_counterexample(
        CounterexampleSpec(a=1.0, alpha=0.1, mollifier_width=0.0125, eps0=1e-2))
