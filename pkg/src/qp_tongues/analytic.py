"""Closed-form boundaries, eigenvalues and continued-fraction approximants."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .errors import InvalidDomain, InvalidParameter, PrecisionExhausted


class BoundaryBranch(NamedTuple):
    """Four values of delta1/Omega where the averaged mean flow changes stability."""

    branch1: float
    branch2: float
    branch3: float
    branch4: float


def mean_boundaries(mu, delta_cap) -> BoundaryBranch:
    """Perturbative stability boundaries (in delta1/Omega) of the Omega/2 mean slow flow.

    Only trustworthy for small ``mu``.
    """
    if mu < 0:
        raise InvalidParameter(f"mu must be >= 0, got {mu!r}")
    # plain arithmetic so mpmath inputs stay in extended precision
    minus = ((mu - 8 * delta_cap) ** 2 + 4) ** 0.5
    plus = ((mu + 8 * delta_cap) ** 2 + 4) ** 0.5
    return BoundaryBranch(
        -(minus + mu) / 16,
        (minus - mu) / 16,
        -(plus - mu) / 16,
        (plus + mu) / 16,
    )


def mean_boundaries_array(mu, delta_cap):
    """Vectorised :func:`mean_boundaries`; returns an array of shape ``(4, len(delta_cap))``."""
    d = np.asarray(delta_cap, dtype=np.float64)
    minus = np.sqrt((mu - 8.0 * d) ** 2 + 4.0)
    plus = np.sqrt((mu + 8.0 * d) ** 2 + 4.0)
    return np.stack([-(minus + mu), minus - mu, -(plus - mu), plus + mu]) / 16.0


def mean_slowflow_matrix(mu, delta_cap, delta1_over_omega, scaled=True, dtype=np.float64) -> np.ndarray:
    """Coefficient matrix of the harmonic-balance system for (alpha1, beta1, alpha2, beta2).

    The mean slow-flow amplitudes are expanded as
    ``A = alpha1 cos(tau/2) + beta1 sin(tau/2)`` and likewise ``B`` with
    (alpha2, beta2).  The unscaled matrix ``N`` gives ``Delta X' = N X``;
    with ``scaled=True`` and ``Delta != 0`` it is divided by ``Delta``.
    Pass ``dtype=object`` to keep mpmath/Fraction entries exact.
    """
    d = delta1_over_omega
    lo = (1 + mu / 2) / 8
    hi = (1 - mu / 2) / 8
    p = delta_cap / 2 + mu / 16
    q = delta_cap / 2 - mu / 16
    zero = 0 * d
    n = np.array(
        [
            [zero, -p, d - lo, zero],
            [q, zero, zero, d - hi],
            [-(d + lo), zero, zero, -q],
            [zero, -(d + hi), p, zero],
        ],
        dtype=dtype,
    )
    if scaled and delta_cap != 0:
        return n / delta_cap
    return n


def variance_eigen_mu0(delta1_over_omega, delta_cap=None) -> np.ndarray:
    """Roots of the mu = 0 variance slow flow.

    Returns the three products ``Delta*lambda`` = ``{0, +r, -r}`` with
    ``r = sqrt(1/16 - 4 (delta1/Omega)^2)`` (complex when the radicand is
    negative).  If ``delta_cap`` is given the rates ``lambda`` are returned
    instead.
    """
    radicand = 1.0 / 16.0 - 4.0 * delta1_over_omega ** 2
    r = complex(math.sqrt(radicand)) if radicand >= 0 else 1j * math.sqrt(-radicand)
    roots = np.array([0.0, r, -r], dtype=np.complex128)
    if delta_cap is not None:
        if delta_cap == 0:
            raise InvalidParameter("delta_cap must be nonzero to convert to rates")
        return roots / delta_cap
    return roots


class QuarterCurve(NamedTuple):
    delta: float
    omega: float


def quarter_resonance_curve(epsilon, omega_drive) -> QuarterCurve:
    """Periodic-orbit curve near omega = Omega/4: ``omega^2 = Omega^2/16 + delta`` with ``delta = -eps^2/Omega^2``."""
    if epsilon < 0 or omega_drive <= 0:
        raise InvalidParameter("need epsilon >= 0 and omega_drive > 0")
    delta = -(epsilon ** 2) / omega_drive ** 2
    w2 = omega_drive ** 2 / 16.0 + delta
    if w2 < 0:
        raise InvalidDomain(f"Omega^2/16 + delta = {w2!r} < 0")
    return QuarterCurve(delta, math.sqrt(w2))


class Rational(NamedTuple):
    p: int
    q: int

    def __float__(self):
        return self.p / self.q

    def __str__(self):
        return f"{self.p}/{self.q}"


def _partial_quotients(x: Fraction, limit: int):
    out = []
    while len(out) < limit:
        a = math.floor(x)
        out.append(a)
        frac = x - a
        if frac == 0:
            break
        x = 1 / frac
    return out


def cf_approximants(alpha, count) -> list:
    """First ``count`` nontrivial continued-fraction convergents of ``alpha`` in (0, 1).

    The trivial convergents 0/1 and 1/1 are skipped.  A partial quotient is
    trusted only if the expansions of ``alpha - ulp`` and ``alpha + ulp``
    agree on it; running out of trusted quotients raises
    :class:`PrecisionExhausted` with the convergents obtained so far.
    """
    if not 0 < alpha < 1:
        raise InvalidParameter(f"alpha must lie in (0, 1), got {alpha!r}")
    if not 1 <= count <= 20:
        raise InvalidParameter(f"count must be in [1, 20], got {count!r}")
    u = math.ulp(alpha)
    limit = 2 * count + 4
    lo = _partial_quotients(Fraction(alpha) - Fraction(u), limit)
    hi = _partial_quotients(Fraction(alpha) + Fraction(u), limit)

    result = []
    p_prev, q_prev = 1, 0
    p, q = 0, 1
    for k, (a, b) in enumerate(zip(lo, hi)):
        if a != b:
            break
        if k == 0:
            p_prev, q_prev, p, q = 1, 0, a, 1
        else:
            p_prev, p = p, a * p + p_prev
            q_prev, q = q, a * q + q_prev
        if 0 < p < q:
            result.append(Rational(p, q))
            if len(result) == count:
                return result
    raise PrecisionExhausted(count, result)


def drive_period(approximant: Rational, omega_drive) -> float:
    """Fundamental period ``2 pi q / Omega`` of the drive when alpha = p/q."""
    return 2.0 * math.pi * approximant.q / omega_drive
