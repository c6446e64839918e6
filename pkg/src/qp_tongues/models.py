"""Right-hand sides for the mean, variance, moment and slow-flow dynamics.

Every model has one numba kernel ``kernel(t, y, params, out)``; the typed
helpers below (``rhs_mean`` and friends) call the same kernels, so there is a
single implementation per equation.

Full models take the parameter vector built by :func:`full_params`.  Slow
flows use the dimensionless group ``delta1/Omega`` together with ``mu`` and
``Delta``; the quarter-resonance flow runs in physical time.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import (
    MeanState,
    MomentsState,
    OscillatorConfig,
    SlowFlowMean,
    SlowFlowQuarter,
    SlowFlowVariance,
    VarianceState,
    drive,
    forcing,
    second_frequency,
)
from .errors import DegenerateSlowTime, InvalidParameter
from .integrate import CompiledRHS


class ModelKind(enum.Enum):
    MEAN_FULL = "mean"
    VARIANCE_FULL = "variance"
    MOMENTS_ORACLE = "moments"
    SLOW_FLOW_MEAN_HALF = "slow-mean"
    SLOW_FLOW_VARIANCE_HALF = "slow-variance"
    SLOW_FLOW_QUARTER_RES = "slow-quarter"

    @property
    def dim(self) -> int:
        return _DIMS[self]

    @property
    def is_slow(self) -> bool:
        return self in (ModelKind.SLOW_FLOW_MEAN_HALF, ModelKind.SLOW_FLOW_VARIANCE_HALF)

    @property
    def is_full(self) -> bool:
        return self in (ModelKind.MEAN_FULL, ModelKind.VARIANCE_FULL, ModelKind.MOMENTS_ORACLE)


_DIMS = {
    ModelKind.MEAN_FULL: 2,
    ModelKind.VARIANCE_FULL: 3,
    ModelKind.MOMENTS_ORACLE: 3,
    ModelKind.SLOW_FLOW_MEAN_HALF: 2,
    ModelKind.SLOW_FLOW_VARIANCE_HALF: 3,
    ModelKind.SLOW_FLOW_QUARTER_RES: 3,
}


@dataclass(frozen=True)
class SlowFlowParams:
    """Parameters of the Omega/2 slow flows."""

    delta1_over_omega: float
    mu: float
    delta_cap: float

    @classmethod
    def from_delta1(cls, delta1, omega_drive, mu, delta_cap):
        return cls(delta1 / omega_drive, mu, delta_cap)

    @classmethod
    def from_delta(cls, delta, epsilon, omega_drive, mu, delta_cap):
        """From the absolute offset ``delta = omega - Omega/2 = eps*delta1``."""
        if epsilon == 0:
            raise InvalidParameter("epsilon must be nonzero to recover delta1")
        return cls(delta / (epsilon * omega_drive), mu, delta_cap)

    def vector(self) -> np.ndarray:
        if self.delta_cap == 0:
            raise DegenerateSlowTime("Delta == 0: slow time collapses, integrate the full equation")
        return np.array([self.delta1_over_omega, self.mu, self.delta_cap], dtype=np.float64)


@dataclass(frozen=True)
class QuarterParams:
    delta1: float
    epsilon: float

    def vector(self) -> np.ndarray:
        return np.array([self.delta1, self.epsilon], dtype=np.float64)


# -- kernels ---------------------------------------------------------------
# full-model parameter layout: [omega, eps, mu, Omega, Omega2, mass]


@njit(cache=True, nogil=True)
def mean_kernel(t, y, p, out):
    f, _ = drive(t, p[3], p[4], p[2])
    out[0] = y[1]
    out[1] = -p[0] * p[0] * (1.0 + p[1] * f) * y[0]


@njit(cache=True, nogil=True)
def variance_kernel(t, y, p, out):
    f, fdot = drive(t, p[3], p[4], p[2])
    w2 = p[0] * p[0]
    out[0] = y[1]
    out[1] = y[2]
    out[2] = -4.0 * w2 * (1.0 + p[1] * f) * y[1] - 2.0 * w2 * p[1] * fdot * y[0]


@njit(cache=True, nogil=True)
def moments_kernel(t, y, p, out):
    f, _ = drive(t, p[3], p[4], p[2])
    m = p[5]
    stiff = m * p[0] * p[0] * (1.0 + p[1] * f)
    out[0] = y[2] / m
    out[1] = -stiff * y[2]
    out[2] = 2.0 * y[1] / m - 2.0 * stiff * y[0]


@njit(cache=True, nogil=True)
def slow_mean_kernel(tau, y, p, out):
    d = p[0]
    mu = p[1]
    s = math.sin(tau)
    c = math.cos(tau)
    a = y[0]
    b = y[1]
    out[0] = ((d - 0.125) * b - mu / 8.0 * (a * s + b * c)) / p[2]
    out[1] = (-(d + 0.125) * a - mu / 8.0 * (a * c - b * s)) / p[2]


@njit(cache=True, nogil=True)
def slow_variance_kernel(tau, y, p, out):
    # y = (a, b, c): V ~ c + a cos(Omega t) + b sin(Omega t)
    d = p[0]
    mu = p[1]
    s = math.sin(tau)
    c = math.cos(tau)
    a = y[0]
    b = y[1]
    cc = y[2]
    out[0] = (2.0 * d * b - 0.25 * mu * cc * s) / p[2]
    out[1] = (-2.0 * d * a - 0.25 * mu * cc * c - 0.25 * cc) / p[2]
    out[2] = (-0.25 * b - 0.25 * mu * (a * s + b * c)) / p[2]


@njit(cache=True, nogil=True)
def slow_quarter_kernel(t, y, p, out):
    rate = 2.0 * p[0] * p[1]
    out[0] = 0.0
    out[1] = rate * y[2]
    out[2] = -rate * y[1]


_KERNELS = {
    ModelKind.MEAN_FULL: mean_kernel,
    ModelKind.VARIANCE_FULL: variance_kernel,
    ModelKind.MOMENTS_ORACLE: moments_kernel,
    ModelKind.SLOW_FLOW_MEAN_HALF: slow_mean_kernel,
    ModelKind.SLOW_FLOW_VARIANCE_HALF: slow_variance_kernel,
    ModelKind.SLOW_FLOW_QUARTER_RES: slow_quarter_kernel,
}


def full_params(cfg: OscillatorConfig) -> np.ndarray:
    mod = cfg.modulation
    return np.array(
        [cfg.omega, mod.epsilon, mod.mu, mod.omega_drive, second_frequency(mod), cfg.mass],
        dtype=np.float64,
    )


def make_system(kind: ModelKind, params) -> CompiledRHS:
    """Bind a model kernel to its parameters.

    ``params`` is an :class:`OscillatorConfig` for full models, a
    :class:`SlowFlowParams` for the Omega/2 slow flows and a
    :class:`QuarterParams` for the Omega/4 flow.
    """
    kind = ModelKind(kind)
    if kind.is_full:
        if not isinstance(params, OscillatorConfig):
            raise InvalidParameter(f"{kind.value} needs an OscillatorConfig")
        vec = full_params(params)
    elif kind.is_slow:
        if not isinstance(params, SlowFlowParams):
            raise InvalidParameter(f"{kind.value} needs SlowFlowParams")
        vec = params.vector()
    else:
        if not isinstance(params, QuarterParams):
            raise InvalidParameter(f"{kind.value} needs QuarterParams")
        vec = params.vector()
    return CompiledRHS(_KERNELS[kind], vec, kind.dim)


def _apply(kernel, vec, t, state, cls):
    out = np.empty(len(state))
    kernel(float(t), np.asarray(state, dtype=np.float64), vec, out)
    return cls(*map(float, out))


def rhs_mean(cfg: OscillatorConfig, t, s: MeanState) -> MeanState:
    """Classical quasi-periodic Mathieu equation for <x>."""
    return _apply(mean_kernel, full_params(cfg), t, s, MeanState)


def rhs_variance(cfg: OscillatorConfig, t, s: VarianceState) -> VarianceState:
    """Third-order variance equation written as a first-order system."""
    return _apply(variance_kernel, full_params(cfg), t, s, VarianceState)


def rhs_moments(cfg: OscillatorConfig, t, s: MomentsState) -> MomentsState:
    return _apply(moments_kernel, full_params(cfg), t, s, MomentsState)


def rhs_slowflow_mean(params: SlowFlowParams, tau, s: SlowFlowMean) -> SlowFlowMean:
    return _apply(slow_mean_kernel, params.vector(), tau, s, SlowFlowMean)


def rhs_slowflow_variance(params: SlowFlowParams, tau, s: SlowFlowVariance) -> SlowFlowVariance:
    return _apply(slow_variance_kernel, params.vector(), tau, s, SlowFlowVariance)


def rhs_slowflow_quarter(params: QuarterParams, t, s: SlowFlowQuarter) -> SlowFlowQuarter:
    return _apply(slow_quarter_kernel, params.vector(), t, s, SlowFlowQuarter)


def moments_to_variance(cfg: OscillatorConfig, t, s: MomentsState) -> VarianceState:
    """Map second moments to (V, dV/dt, d2V/dt2), assuming <x> = 0."""
    f, _ = forcing(cfg.modulation, t)
    m = cfg.mass
    w2 = cfg.omega ** 2
    return VarianceState(
        s.xx,
        s.xp / m,
        2.0 * s.pp / m ** 2 - 2.0 * w2 * (1.0 + cfg.modulation.epsilon * f) * s.xx,
    )


def variance_to_moments(cfg: OscillatorConfig, t, s: VarianceState) -> MomentsState:
    """Inverse of :func:`moments_to_variance`."""
    f, _ = forcing(cfg.modulation, t)
    m = cfg.mass
    w2 = cfg.omega ** 2
    pp = 0.5 * m ** 2 * (s.ddvar + 2.0 * w2 * (1.0 + cfg.modulation.epsilon * f) * s.var)
    return MomentsState(s.var, pp, m * s.dvar)


def energy(cfg: OscillatorConfig, t, s: MomentsState) -> float:
    """<E> = <p^2>/2m + (m omega^2/2)(1 + eps f) <x^2>."""
    f, _ = forcing(cfg.modulation, t)
    m = cfg.mass
    return s.pp / (2.0 * m) + 0.5 * m * cfg.omega ** 2 * (1.0 + cfg.modulation.epsilon * f) * s.xx


def energy_drift(cfg: OscillatorConfig, t, xx):
    """d<E>/dt = <dH/dt> = (1/2) m omega^2 eps <x^2> df/dt."""
    _, fdot = forcing(cfg.modulation, t)
    return 0.5 * cfg.mass * cfg.omega ** 2 * cfg.modulation.epsilon * xx * fdot
