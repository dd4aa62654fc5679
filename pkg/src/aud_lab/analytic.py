"""Closed-form steady-state quantities for the M/M/1 update-and-decide queue.

These are the oracles the simulator is checked against.  The average age
upon decisions is available through two independent derivations (a direct
closed form and a renewal-reward ratio of moments) that must agree to
near machine precision; keeping both guards each against transcription
slips in the other.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, localcontext
from typing import NamedTuple

import numpy as np

from .errors import DivergenceError, ParameterError, StabilityError
from .queueing import SystemParams

# Utilizations this close to 1 are rejected rather than evaluated: the
# closed forms blow up and silent overflow would poison parameter sweeps.
STABILITY_GUARD = 1e-9


def require_stable(params: SystemParams) -> None:
    if params.utilization >= 1.0 - STABILITY_GUARD:
        raise StabilityError(
            f"utilization {params.utilization:.6g} is not safely below 1"
        )


def stationary_queue_dist(params: SystemParams, max_length: int) -> np.ndarray:
    """Geometric stationary number-in-system probabilities for levels 0..max_length."""
    require_stable(params)
    if max_length < 0:
        raise ParameterError(f"max_length must be >= 0, got {max_length}")
    rho = params.utilization
    return (1.0 - rho) * rho ** np.arange(max_length + 1)


def system_time_rate(params: SystemParams) -> float:
    """Exponential rate of the stationary system time: service_rate * (1 - utilization)."""
    require_stable(params)
    return params.service_rate * (1.0 - params.utilization)


def system_time_pdf(params: SystemParams, x):
    """Stationary system-time density at x >= 0."""
    rate = system_time_rate(params)
    x = np.asarray(x, dtype=float)
    if (x < 0.0).any():
        raise ParameterError("system-time density is defined for x >= 0 only")
    return rate * np.exp(-rate * x)


def mean_system_time(params: SystemParams) -> float:
    return 1.0 / system_time_rate(params)


def interdeparture_pdf(params: SystemParams, x):
    """Stationary inter-departure density: exponential at the arrival rate."""
    require_stable(params)
    x = np.asarray(x, dtype=float)
    if (x < 0.0).any():
        raise ParameterError("inter-departure density is defined for x >= 0 only")
    return params.arrival_rate * np.exp(-params.arrival_rate * x)


def mean_interdeparture(params: SystemParams) -> float:
    require_stable(params)
    return 1.0 / params.arrival_rate


def second_moment_interdeparture(params: SystemParams) -> float:
    require_stable(params)
    return 2.0 / params.arrival_rate**2


def prob_busy_on_arrival(params: SystemParams) -> float:
    """Probability an arriving update finds its predecessor still in the system."""
    require_stable(params)
    return params.utilization


def interdeparture_mgf_given_idle_arrival(params: SystemParams, s: float) -> float:
    """MGF of the departure gap when the update arrived to an empty system.

    Such a gap is the leftover arrival wait plus a fresh service time, so
    the transform is the product of two exponential MGFs; it diverges for
    s >= min(arrival_rate, service_rate).
    """
    require_stable(params)
    lam, mu = params.arrival_rate, params.service_rate
    if s >= min(lam, mu):
        raise DivergenceError(f"transform diverges for s >= {min(lam, mu):.6g}")
    return lam * mu / ((lam - s) * (mu - s))


def interdeparture_mgf_given_busy_arrival(params: SystemParams, s: float) -> float:
    """MGF of the departure gap when the update arrived to a busy system (pure service)."""
    require_stable(params)
    mu = params.service_rate
    if s >= mu:
        raise DivergenceError(f"transform diverges for s >= {mu:.6g}")
    return mu / (mu - s)


def interdeparture_mgf(params: SystemParams, s: float) -> float:
    """Unconditional MGF of the departure gap: exponential at the arrival rate."""
    require_stable(params)
    lam = params.arrival_rate
    if s >= lam:
        raise DivergenceError(f"transform diverges for s >= {lam:.6g}")
    return lam / (lam - s)


def cross_moment_system_interdeparture(params: SystemParams) -> float:
    """Expected product of an update's system time and the following departure gap.

    Diverges as utilization -> 0 (the idle-wait term grows like 1/utilization).
    """
    require_stable(params)
    mu, rho = params.service_rate, params.utilization
    return 1.0 / (mu**2 * (1.0 - rho)) + (1.0 - rho) / (mu**2 * rho)


def average_aud(params: SystemParams) -> float:
    """Mean age upon decisions; depends on the two queue rates only.

    Poisson-timed decisions see the time-average age (PASTA), so the
    decision rate does not appear: making decisions more often cannot make
    them act on fresher data.
    """
    require_stable(params)
    mu, rho = params.service_rate, params.utilization
    return (1.0 / mu) * (1.0 + 1.0 / rho + rho**2 / (1.0 - rho))


def average_aud_renewal(params: SystemParams) -> float:
    """Mean age upon decisions assembled from renewal-reward moment ratios.

    Equals ``average_aud`` to within floating-point noise; the two paths are
    kept separate deliberately.
    """
    y1 = mean_interdeparture(params)
    y2 = second_moment_interdeparture(params)
    ty = cross_moment_system_interdeparture(params)
    return (y2 + 2.0 * ty) / (2.0 * y1)


class OptimalOperatingPoint(NamedTuple):
    utilization: float
    arrival_rate: float


def _aud_shape(rho: Decimal) -> Decimal:
    # service_rate * average_aud as a function of utilization alone
    one = Decimal(1)
    return one + one / rho + rho * rho / (one - rho)


def optimal_utilization(service_rate: float = 1.0) -> OptimalOperatingPoint:
    """Utilization (and matching arrival rate) minimizing the average age upon decisions.

    Golden-section search on the utilization profile, evaluated in 50-digit
    decimal arithmetic: double precision cannot rank points closer than
    ~1e-8 near the flat minimum, which would defeat the 1e-9 tolerance.
    The minimizer does not depend on the service rate.
    """
    if not (math.isfinite(service_rate) and service_rate > 0.0):
        raise ParameterError(f"service_rate must be positive, got {service_rate!r}")
    with localcontext() as ctx:
        ctx.prec = 50
        inv_phi = (Decimal(5).sqrt() - 1) / 2
        a = Decimal("1e-6")
        b = Decimal(1) - Decimal("1e-6")
        c = b - (b - a) * inv_phi
        d = a + (b - a) * inv_phi
        fc, fd = _aud_shape(c), _aud_shape(d)
        while b - a > Decimal("1e-13"):
            if fc < fd:
                b, d, fd = d, c, fc
                c = b - (b - a) * inv_phi
                fc = _aud_shape(c)
            else:
                a, c, fc = c, d, fd
                d = a + (b - a) * inv_phi
                fd = _aud_shape(d)
        rho_star = float((a + b) / 2)
    return OptimalOperatingPoint(rho_star, rho_star * service_rate)


@dataclass(frozen=True)
class AnalyticReport:
    """Bundle of every closed-form quantity at one parameter point."""

    avg_aud: float
    avg_aud_via_renewal: float
    mean_system_time: float
    mean_interdeparture: float
    second_moment_interdeparture: float
    cross_moment_system_interdeparture: float
    prob_busy_on_arrival: float
    stationary_dist_head: np.ndarray


def analytic_report(params: SystemParams, max_queue_levels: int = 10) -> AnalyticReport:
    return AnalyticReport(
        avg_aud=average_aud(params),
        avg_aud_via_renewal=average_aud_renewal(params),
        mean_system_time=mean_system_time(params),
        mean_interdeparture=mean_interdeparture(params),
        second_moment_interdeparture=second_moment_interdeparture(params),
        cross_moment_system_interdeparture=cross_moment_system_interdeparture(params),
        prob_busy_on_arrival=prob_busy_on_arrival(params),
        stationary_dist_head=stationary_queue_dist(params, max_queue_levels),
    )
