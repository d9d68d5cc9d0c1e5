from __future__ import annotations

import math

import numpy as np
import pytest

from spliceopt import QuadraticObjective, SubsolverError
from spliceopt.objectives import Objective, RestrictedProblem


def separable_quadratic(c) -> QuadraticObjective:
    """f(theta) = 0.5 * ||theta - c||^2, realized as least squares.

    With X = sqrt(n) I and y = sqrt(n) c the 1/(2n)-scaled residual equals
    the separable quadratic exactly, so restricted minima are just the
    coordinates of c and objective values are readable off by hand.
    """
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    return QuadraticObjective(math.sqrt(n) * np.eye(n), math.sqrt(n) * c)


class GenericView(Objective):
    """Wrapper that hides an objective's specialized fast paths.

    Forces the embedding-based restricted problem and the iterative
    subsolver, so tests can cross-check them against closed forms.
    """

    def __init__(self, inner: Objective):
        self.inner = inner

    @property
    def dimension(self) -> int:
        return self.inner.dimension

    def value(self, theta):
        return self.inner.value(theta)

    def gradient(self, theta):
        return self.inner.gradient(theta)

    def restricted_hessian(self, theta, support):
        return self.inner.restricted_hessian(theta, support)

    def restricted_problem(self, support):
        return RestrictedProblem(self, support)


class FailingSupports(Objective):
    """Delegating objective whose restricted solve fails on chosen supports."""

    def __init__(self, inner: Objective, bad_supports):
        self.inner = inner
        self.bad = {frozenset(s) for s in bad_supports}

    @property
    def dimension(self) -> int:
        return self.inner.dimension

    def value(self, theta):
        return self.inner.value(theta)

    def gradient(self, theta):
        return self.inner.gradient(theta)

    def restricted_minimize(self, support, config=None, warm=None):
        if support.as_set() in self.bad:
            raise SubsolverError(f"forced failure on {support.indices}")
        return self.inner.restricted_minimize(support, config=config, warm=warm)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
