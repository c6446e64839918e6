"""Fixed-step classical RK4 for time-dependent linear systems.

A single stepping routine serves two kinds of right-hand side:

* :class:`CompiledRHS` wraps a numba kernel ``kernel(t, y, params, out)`` and
  runs the loop in machine code (releasing the GIL);
* any Python callable ``rhs(t, y) -> dy`` runs the very same loop in the
  interpreter, which is fine for short horizons and tests.

Besides sampled states the loop keeps the running max-norm, per-window maxima
(used for growth-rate fits) and the maximum over the final slice of the
horizon, so envelope-only runs over millions of steps stay cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import InvalidParameter, NonFiniteState

COMPLETED = "completed"
BAILED_OUT = "bailed_out"
NON_FINITE = "non_finite"
_STATUS = {0: COMPLETED, 1: BAILED_OUT, 2: NON_FINITE}


@dataclass(frozen=True)
class IntegrationPlan:
    t0: float
    t_end: float
    h: float
    record_stride: int = 1
    envelope_only: bool = False
    n_windows: int = 20
    final_fraction: float = 0.05

    def __post_init__(self):
        if not (math.isfinite(self.t0) and math.isfinite(self.t_end) and math.isfinite(self.h)):
            raise InvalidParameter("t0, t_end and h must be finite")
        if self.h <= 0:
            raise InvalidParameter(f"step h must be > 0, got {self.h!r}")
        if self.t_end <= self.t0:
            raise InvalidParameter("t_end must exceed t0")
        if (self.t_end - self.t0) / self.h < 1.0 - 1e-12:
            raise InvalidParameter("horizon must span at least one step")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise InvalidParameter("record_stride must be a positive integer")
        if self.n_windows < 1:
            raise InvalidParameter("n_windows must be >= 1")
        if not 0 < self.final_fraction <= 1:
            raise InvalidParameter("final_fraction must lie in (0, 1]")

    def step_layout(self):
        """Return ``(n_full, last_h)``: full steps of size h, then one step of last_h (0 if none)."""
        span = self.t_end - self.t0
        n_full = int(math.floor(span / self.h + 1e-9))
        rem = span - n_full * self.h
        if rem > 1e-9 * self.h:
            return n_full, rem
        return n_full, 0.0

    @property
    def n_steps(self) -> int:
        n_full, last_h = self.step_layout()
        return n_full + (1 if last_h > 0 else 0)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    max_abs: float
    final: np.ndarray
    window_max: np.ndarray
    final_window_max: float
    steps: int
    n_steps: int
    status: str = COMPLETED
    t_final: float = field(default=float("nan"))
    t0: float = field(default=float("nan"))
    t_end: float = field(default=float("nan"))

    @property
    def completed(self) -> bool:
        return self.status == COMPLETED


@dataclass(frozen=True, eq=False)
class CompiledRHS:
    """A numba right-hand side ``kernel(t, y, params, out)`` bound to its parameters."""

    kernel: object
    params: np.ndarray
    dim: int

    def __call__(self, t, y):
        out = np.empty(self.dim)
        self.kernel(float(t), np.ascontiguousarray(y, dtype=np.float64), self.params, out)
        return out


@njit(cache=True, nogil=True)
def _rk4_loop(rhs, p, y0, t0, h, n_full, last_h, stride, record, n_windows,
              final_start, bail):
    dim = y0.size
    n = n_full + (1 if last_h > 0.0 else 0)
    n_rec = 0
    if record:
        n_rec = n // stride + 1
        if n % stride != 0:
            n_rec += 1
    times = np.empty(n_rec)
    states = np.empty((n_rec, dim))
    window_max = np.full(n_windows, np.nan)
    y = y0.copy()
    k1 = np.empty(dim)
    k2 = np.empty(dim)
    k3 = np.empty(dim)
    k4 = np.empty(dim)
    tmp = np.empty(dim)

    max_abs = 0.0
    for j in range(dim):
        if abs(y[j]) > max_abs:
            max_abs = abs(y[j])
    final_max = 0.0
    rec = 0
    if record:
        times[0] = t0
        for j in range(dim):
            states[0, j] = y[j]
        rec = 1

    status = 0
    steps = 0
    t = t0
    for i in range(n):
        if i < n_full:
            t = t0 + i * h
            hs = h
        else:
            t = t0 + n_full * h
            hs = last_h
        half = 0.5 * hs
        rhs(t, y, p, k1)
        for j in range(dim):
            tmp[j] = y[j] + half * k1[j]
        rhs(t + half, tmp, p, k2)
        for j in range(dim):
            tmp[j] = y[j] + half * k2[j]
        rhs(t + half, tmp, p, k3)
        for j in range(dim):
            tmp[j] = y[j] + hs * k3[j]
        rhs(t + hs, tmp, p, k4)

        norm = 0.0
        finite = True
        for j in range(dim):
            y[j] = y[j] + hs / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
            a = abs(y[j])
            if not (a < np.inf):
                finite = False
            elif a > norm:
                norm = a
        steps = i + 1
        if i + 1 == n:
            t = t0 + n_full * h + last_h
        else:
            t = t0 + (i + 1) * h

        if not finite:
            status = 2
            break
        if norm > max_abs:
            max_abs = norm
        w = (i * n_windows) // n
        if not (window_max[w] >= norm):
            window_max[w] = norm
        if i + 1 >= final_start and norm > final_max:
            final_max = norm
        if record and ((i + 1) % stride == 0 or i + 1 == n):
            times[rec] = t
            for j in range(dim):
                states[rec, j] = y[j]
            rec += 1
        if max_abs > bail:
            status = 1
            break

    if record and status != 0:
        # keep the state that ended the run
        if rec == 0 or times[rec - 1] != t:
            times[rec] = t
            for j in range(dim):
                states[rec, j] = y[j]
            rec += 1
    return times[:rec], states[:rec], max_abs, y, window_max, final_max, steps, n, status, t


def _python_adapter(rhs):
    def kernel(t, y, p, out):
        out[:] = rhs(t, y.copy())

    return kernel


def rk4_integrate(rhs, y0, plan: IntegrationPlan, bail_out=None) -> Trajectory:
    """Integrate ``dy/dt = rhs(t, y)`` with fixed-step RK4.

    The last step is shortened so that the run lands exactly on
    ``plan.t_end``.  If ``bail_out`` is given the run stops as soon as the
    running max-norm exceeds it (status ``"bailed_out"``).

    Raises
    ------
    NonFiniteState
        If a component becomes NaN/Inf; the partial trajectory is attached.
    """
    y0 = np.array(y0, dtype=np.float64).ravel()
    if not np.all(np.isfinite(y0)):
        raise InvalidParameter("initial state must be finite")
    n_full, last_h = plan.step_layout()
    n = n_full + (1 if last_h > 0 else 0)
    final_start = n - max(1, math.ceil(plan.final_fraction * n)) + 1
    bail = math.inf if bail_out is None else float(bail_out)
    args = (
        y0, float(plan.t0), float(plan.h), n_full, float(last_h),
        int(plan.record_stride), not plan.envelope_only, int(plan.n_windows),
        final_start, bail,
    )
    if isinstance(rhs, CompiledRHS):
        if rhs.dim != y0.size:
            raise InvalidParameter(f"state has {y0.size} components, system expects {rhs.dim}")
        out = _rk4_loop(rhs.kernel, rhs.params, *args)
    else:
        out = _rk4_loop.py_func(_python_adapter(rhs), None, *args)
    times, states, max_abs, final, window_max, final_max, steps, n_steps, status, t_fin = out
    if plan.envelope_only:
        times = np.array([t_fin])
        states = final.reshape(1, -1).copy()
    traj = Trajectory(
        times=times, states=states, max_abs=float(max_abs), final=final,
        window_max=window_max, final_window_max=float(final_max), steps=int(steps),
        n_steps=int(n_steps), status=_STATUS[int(status)], t_final=float(t_fin),
        t0=float(plan.t0), t_end=float(plan.t_end),
    )
    if traj.status == NON_FINITE:
        raise NonFiniteState(traj.steps, traj)
    return traj


def fundamental_matrix(rhs, dim: int, plan: IntegrationPlan) -> np.ndarray:
    """State-transition matrix Phi(t_end, t0) of a linear system.

    Column ``j`` is the solution started from the ``j``-th canonical basis
    vector.
    """
    env_plan = IntegrationPlan(plan.t0, plan.t_end, plan.h, envelope_only=True)
    phi = np.empty((dim, dim))
    for j in range(dim):
        e = np.zeros(dim)
        e[j] = 1.0
        phi[:, j] = rk4_integrate(rhs, e, env_plan).final
    return phi
