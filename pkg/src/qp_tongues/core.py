"""Domain types for the quasi-periodically driven parametric oscillator.

The stiffness is modulated as ``omega**2 * (1 + eps * f(t))`` with the
two-tone drive

    f(t) = cos(Omega t) + mu cos(Omega2 t)

where the second angular frequency is either ``Omega (1 + eps Delta)``
(epsilon-scaled detuning) or ``Omega (1 + alpha)`` (fixed ratio).  Both modes
are resolved to a single ``omega2`` so everything downstream is mode-agnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np
from numba import njit

from .errors import InvalidParameter


@dataclass(frozen=True)
class EpsilonScaled:
    """Second frequency ``Omega (1 + eps * delta_cap)``."""

    delta_cap: float


@dataclass(frozen=True)
class FixedRatio:
    """Second frequency ``Omega (1 + alpha)``."""

    alpha: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise InvalidParameter(f"alpha must be a finite real > 0, got {self.alpha!r}")


Detuning = Union[EpsilonScaled, FixedRatio]


def _check_finite(name, value):
    if not math.isfinite(value):
        raise InvalidParameter(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class ModulationSpec:
    """The two-tone drive ``f(t)``.

    Parameters
    ----------
    omega_drive : float
        Base angular frequency Omega (> 0).
    epsilon : float
        Drive amplitude (>= 0).
    mu : float
        Relative amplitude of the second tone (>= 0).
    detuning : EpsilonScaled or FixedRatio
        How the second frequency is placed relative to Omega.
    """

    omega_drive: float
    epsilon: float
    mu: float
    detuning: Detuning = EpsilonScaled(0.0)

    def __post_init__(self):
        for name in ("omega_drive", "epsilon", "mu"):
            _check_finite(name, getattr(self, name))
        if self.omega_drive <= 0:
            raise InvalidParameter(f"omega_drive must be > 0, got {self.omega_drive!r}")
        if self.epsilon < 0:
            raise InvalidParameter(f"epsilon must be >= 0, got {self.epsilon!r}")
        if self.mu < 0:
            raise InvalidParameter(f"mu must be >= 0, got {self.mu!r}")
        if not isinstance(self.detuning, (EpsilonScaled, FixedRatio)):
            raise InvalidParameter(f"unknown detuning mode {self.detuning!r}")
        if isinstance(self.detuning, EpsilonScaled):
            _check_finite("delta_cap", self.detuning.delta_cap)

    @property
    def omega2(self) -> float:
        return second_frequency(self)


def second_frequency(spec: ModulationSpec) -> float:
    """Angular frequency of the second drive tone."""
    if isinstance(spec.detuning, FixedRatio):
        return spec.omega_drive * (1.0 + spec.detuning.alpha)
    return spec.omega_drive * (1.0 + spec.epsilon * spec.detuning.delta_cap)


@njit(cache=True, nogil=True)
def drive(t, omega, omega2, mu):
    """Return ``(f, df/dt)`` for the resolved two-tone drive."""
    f = np.cos(omega * t) + mu * np.cos(omega2 * t)
    fdot = -omega * np.sin(omega * t) - mu * omega2 * np.sin(omega2 * t)
    return f, fdot


def forcing(spec: ModulationSpec, t):
    """Evaluate the drive and its time derivative at ``t`` (scalar or array)."""
    omega2 = second_frequency(spec)
    if np.ndim(t) == 0:
        f, fdot = drive(float(t), spec.omega_drive, omega2, spec.mu)
        return float(f), float(fdot)
    return drive(np.asarray(t, dtype=np.float64), spec.omega_drive, omega2, spec.mu)


@dataclass(frozen=True)
class OscillatorConfig:
    """A full problem instance: natural frequency, mass and drive."""

    omega: float
    modulation: ModulationSpec
    mass: float = 1.0

    def __post_init__(self):
        _check_finite("omega", self.omega)
        _check_finite("mass", self.mass)
        if self.omega <= 0:
            raise InvalidParameter(f"omega must be > 0, got {self.omega!r}")
        if self.mass <= 0:
            raise InvalidParameter(f"mass must be > 0, got {self.mass!r}")

    @classmethod
    def near_quarter(cls, modulation: ModulationSpec, delta: float, mass: float = 1.0):
        """omega = Omega/4 + delta."""
        return cls(modulation.omega_drive / 4.0 + delta, modulation, mass)

    @classmethod
    def near_half(cls, modulation: ModulationSpec, delta: float, mass: float = 1.0):
        """omega = Omega/2 + delta."""
        return cls(modulation.omega_drive / 2.0 + delta, modulation, mass)

    @classmethod
    def near_half_scaled(cls, modulation: ModulationSpec, delta1: float, mass: float = 1.0):
        """omega = Omega/2 + eps*delta1, with delta1 the first-order detuning coefficient."""
        return cls.near_half(modulation, modulation.epsilon * delta1, mass)

    @property
    def delta_half(self) -> float:
        return self.omega - self.modulation.omega_drive / 2.0

    @property
    def delta_quarter(self) -> float:
        return self.omega - self.modulation.omega_drive / 4.0

    @property
    def delta1_half(self) -> float:
        if self.modulation.epsilon == 0:
            raise InvalidParameter("delta1 is undefined for epsilon == 0")
        return self.delta_half / self.modulation.epsilon


class MeanState(NamedTuple):
    x: float
    v: float


class VarianceState(NamedTuple):
    var: float
    dvar: float
    ddvar: float


class MomentsState(NamedTuple):
    """Second moments <x^2>, <p^2> and <xp + px>."""

    xx: float
    pp: float
    xp: float


class SlowFlowMean(NamedTuple):
    a: float
    b: float


class SlowFlowVariance(NamedTuple):
    """Amplitudes of ``V ~ c + a cos(Omega t) + b sin(Omega t)``."""

    a: float
    b: float
    c: float


class SlowFlowQuarter(NamedTuple):
    """Amplitudes of ``V ~ a0 + a cos(Omega t/2) + b sin(Omega t/2)``."""

    a0: float
    a: float
    b: float
