"""Two-disk geometry and neighbor-count expectations for random placement.

Distances are in units of the transmission range R unless a radius is
passed explicitly. Densities are counts per R**2.
"""

import math
import threading
from dataclasses import dataclass

from scipy import integrate

QUAD_TOL = 1e-8


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, what, estimate, abserr):
        super().__init__(f"{what}: estimate {estimate!r} with error {abserr:.3g} > {QUAD_TOL:g}")
        self.estimate = estimate
        self.abserr = abserr


def _check_gamma(gamma, R):
    if R <= 0:
        raise ValueError(f"radius must be positive, got {R}")
    if not 0.0 <= gamma <= R:
        raise ValueError(f"center distance must lie in [0, R={R}], got {gamma}")


def lens_area(gamma, R=1.0):
    """Intersection area of two radius-R disks whose centers are gamma apart."""
    _check_gamma(gamma, R)
    half = gamma / (2.0 * R)
    return 2.0 * R * R * math.acos(half) - gamma * math.sqrt(R * R - gamma * gamma / 4.0)


def crescent_area(gamma, R=1.0):
    """Area of one disk lying outside the other (complement of the lens)."""
    return math.pi * R * R - lens_area(gamma, R)


def _quad(f, a, b, what):
    val, err = integrate.quad(f, a, b, epsabs=QUAD_TOL * 1e-2, epsrel=1e-12, limit=200)
    if err > QUAD_TOL:
        raise QuadratureError(what, val, err)
    return val


def _neighbor_pdf(r):
    # distance of a uniform point in the unit disk from its center
    return 2.0 * r


def _exclusive_given_neighbor():
    return _quad(lambda r: crescent_area(r) * _neighbor_pdf(r), 0.0, 1.0, "exclusive|neighbor")


def _inner_angle(r2, r):
    c = (r2 * r2 + r * r - 1.0) / (2.0 * r2 * r)
    return math.acos(min(1.0, max(-1.0, c)))


def _exclusive_outside_partner(r):
    """Mean exclusive area of v when v is i's neighbor but not j's, |ij| = r."""
    a_c = crescent_area(r)

    def integrand(r2):
        return 2.0 * r2 * crescent_area(r2) / a_c * (math.pi - _inner_angle(r2, r))

    return _quad(integrand, 1.0 - r, 1.0, "exclusive|crescent")


def _exclusive_in_lens(r, c_neighbor):
    """Mean exclusive area of v when v is a common neighbor of i and j, |ij| = r."""
    if r == 0.0:
        return c_neighbor
    p1 = lens_area(r) / math.pi
    return c_neighbor / p1 - (1.0 / p1 - 1.0) * _exclusive_outside_partner(r)


def _exclusive_given_common(c_neighbor):
    return _quad(
        lambda r: _exclusive_in_lens(r, c_neighbor) * _neighbor_pdf(r),
        0.0,
        1.0,
        "exclusive|common",
    )


def _common():
    return _quad(lambda r: lens_area(r) * _neighbor_pdf(r), 0.0, 1.0, "common")


@dataclass(frozen=True)
class ExpectationConstants:
    """Mean neighbor counts per unit density (multiply by n)."""

    c_exclusive_given_neighbor: float
    c_exclusive_given_common: float
    c_common: float

    def __post_init__(self):
        if not 0 < self.c_exclusive_given_common < self.c_exclusive_given_neighbor < math.pi:
            raise ValueError(f"inconsistent exclusive constants: {self}")
        if not 0 < self.c_common < math.pi:
            raise ValueError(f"inconsistent common constant: {self}")


_constants = None
_constants_lock = threading.Lock()


def expectation_constants():
    """Quadrature-derived constants, computed once per process."""
    global _constants
    if _constants is None:
        with _constants_lock:
            if _constants is None:
                c_a = _exclusive_given_neighbor()
                _constants = ExpectationConstants(
                    c_exclusive_given_neighbor=c_a,
                    c_exclusive_given_common=_exclusive_given_common(c_a),
                    c_common=_common(),
                )
    return _constants


def _check_density(n):
    if n < 0:
        raise ValueError(f"density must be non-negative, got {n}")


def expected_exclusive_neighbors_given_neighbor(n):
    """E[# neighbors of v that are not i's neighbors | v is i's neighbor]."""
    _check_density(n)
    return expectation_constants().c_exclusive_given_neighbor * n


def expected_exclusive_neighbors_given_common(n):
    """Same count as above, conditioned on v being a common neighbor of i and j."""
    _check_density(n)
    return expectation_constants().c_exclusive_given_common * n


def expected_common_neighbors(n):
    """E[# common neighbors of two neighboring nodes]."""
    _check_density(n)
    return expectation_constants().c_common * n


def poisson_power_expectation(p, k_bar):
    """E[p**K] for K ~ Poisson(k_bar)."""
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    if k_bar < 0:
        raise ValueError(f"mean count must be non-negative, got {k_bar}")
    return math.exp(-(1.0 - p) * k_bar)
