"""Trajectory classification, parameter-plane sweeps and zone comparison.

A run is judged on the envelope over the final slice of its horizon:

* at or above ``divergence_threshold`` (or blown up / bailed out) -> divergent;
* at or below ``stable_threshold`` -> stable;
* in between, a least-squares fit of ``log(window max)`` against time
  decides: a rate within ``growth_tol`` counts as a bounded beat (stable),
  anything faster stays ambiguous and carries the fitted rate.

Sweeps evaluate every lattice cell independently and write into a
pre-assigned slot, so results do not depend on the number of workers.
"""

from __future__ import annotations

import enum
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np

from .core import EpsilonScaled, FixedRatio, ModulationSpec, OscillatorConfig, VarianceState
from .errors import (
    DegenerateSlowTime,
    EmptyTrajectory,
    InvalidParameter,
    NonFiniteState,
    QPTonguesError,
    SpecMismatch,
)
from .integrate import BAILED_OUT, NON_FINITE, IntegrationPlan, Trajectory, rk4_integrate
from .models import ModelKind, QuarterParams, SlowFlowParams, make_system, variance_to_moments


@dataclass(frozen=True)
class ClassifierPolicy:
    """Thresholds and integration protocol for a stability verdict.

    Horizons are in the model's own time: slow time for the Omega/2 slow
    flows, physical time for everything else.
    """

    divergence_threshold: float = 10.0
    stable_threshold: float = 1.0
    initial_value: float = 0.001
    slow_horizon: float = 7000.0
    full_horizon: float = 5000.0
    step: float = 0.001
    growth_tol: float = 1e-3
    final_fraction: float = 0.05
    n_windows: int = 20
    bail_out: Optional[float] = 1e6

    def __post_init__(self):
        if not self.divergence_threshold > self.stable_threshold > self.initial_value > 0:
            raise InvalidParameter(
                "need divergence_threshold > stable_threshold > initial_value > 0"
            )
        if not (self.slow_horizon > 0 and self.full_horizon > 0 and self.step > 0):
            raise InvalidParameter("horizons and step must be positive")
        if self.growth_tol < 0:
            raise InvalidParameter("growth_tol must be >= 0")
        if not 0 < self.final_fraction <= 1:
            raise InvalidParameter("final_fraction must lie in (0, 1]")
        if self.n_windows < 2:
            raise InvalidParameter("n_windows must be >= 2 for a growth fit")
        if self.bail_out is not None and not self.bail_out >= self.divergence_threshold:
            raise InvalidParameter("bail_out must not undercut divergence_threshold")

    @classmethod
    def reference(cls) -> "ClassifierPolicy":
        """Single-point protocol: tau = 7000 or t = 5000 at h = 0.001."""
        return cls()

    @classmethod
    def desk(cls) -> "ClassifierPolicy":
        """Sweep protocol: horizon 2000 at h = 0.01."""
        return cls(slow_horizon=2000.0, full_horizon=2000.0, step=0.01)

    def horizon_for(self, kind: ModelKind) -> float:
        return self.slow_horizon if ModelKind(kind).is_slow else self.full_horizon

    def plan_for(self, kind: ModelKind, record_stride=1, envelope_only=True) -> IntegrationPlan:
        return IntegrationPlan(
            0.0, self.horizon_for(kind), self.step, record_stride=record_stride,
            envelope_only=envelope_only, n_windows=self.n_windows,
            final_fraction=self.final_fraction,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ClassifierPolicy":
        return cls(**data)


class Verdict(enum.Enum):
    STABLE = "stable"
    DIVERGENT = "divergent"
    AMBIGUOUS = "ambiguous"


@dataclass(frozen=True)
class StabilityVerdict:
    kind: Verdict
    max_abs: float
    growth_rate: Optional[float] = None
    final_envelope: float = float("nan")
    note: Optional[str] = None


def growth_rate(traj: Trajectory) -> Optional[float]:
    """Slope of ``log(window max)`` against window-centre time, or None.

    Windows that were never reached (early bail-out) are skipped; at least
    two usable windows are needed.
    """
    wm = np.asarray(traj.window_max, dtype=np.float64)
    n = wm.size
    if n < 2 or not (math.isfinite(traj.t0) and math.isfinite(traj.t_end)):
        return None
    width = (traj.t_end - traj.t0) / n
    centres = traj.t0 + (np.arange(n) + 0.5) * width
    ok = np.isfinite(wm) & (wm > 0)
    if ok.sum() < 2:
        return None
    slope, _ = np.polyfit(centres[ok], np.log(wm[ok]), 1)
    return float(slope)


def classify(traj: Trajectory, policy: ClassifierPolicy) -> StabilityVerdict:
    """Turn a trajectory into a verdict under ``policy``.

    Raises
    ------
    EmptyTrajectory
        If the trajectory took no steps.
    """
    if traj.steps < 1:
        raise EmptyTrajectory("trajectory took no integration steps")
    rate = growth_rate(traj)
    final_env = float(traj.final_window_max)
    if traj.status == NON_FINITE:
        return StabilityVerdict(Verdict.DIVERGENT, math.inf, rate, math.inf, "non-finite state")
    if traj.status == BAILED_OUT:
        return StabilityVerdict(Verdict.DIVERGENT, traj.max_abs, rate, traj.max_abs, "bailed out")
    if final_env >= policy.divergence_threshold:
        return StabilityVerdict(Verdict.DIVERGENT, traj.max_abs, rate, final_env)
    if final_env <= policy.stable_threshold:
        return StabilityVerdict(Verdict.STABLE, traj.max_abs, None, final_env)
    if rate is not None and rate > policy.growth_tol:
        return StabilityVerdict(Verdict.AMBIGUOUS, traj.max_abs, rate, final_env, "divergent-leaning")
    return StabilityVerdict(Verdict.STABLE, traj.max_abs, None, final_env, "bounded beat")


def initial_state(kind: ModelKind, params, policy: ClassifierPolicy) -> np.ndarray:
    """Every state component starts at ``policy.initial_value``.

    The moment oracle starts from the moments equivalent to that variance
    state, so it follows the same solution as the variance model.
    """
    kind = ModelKind(kind)
    y0 = np.full(kind.dim, policy.initial_value)
    if kind is ModelKind.MOMENTS_ORACLE:
        y0 = np.array(variance_to_moments(params, 0.0, VarianceState(*y0)), dtype=np.float64)
    return y0


def run_point(kind, params, policy: ClassifierPolicy, record_stride=None, y0=None):
    """Integrate one parameter point and classify it.

    ``record_stride=None`` keeps only the envelope statistics.  Returns
    ``(trajectory, verdict)``; a blown-up run yields its partial trajectory.
    """
    kind = ModelKind(kind)
    system = make_system(kind, params)
    plan = policy.plan_for(kind, record_stride=record_stride or 1,
                           envelope_only=record_stride is None)
    if y0 is None:
        y0 = initial_state(kind, params, policy)
    try:
        traj = rk4_integrate(system, y0, plan, bail_out=policy.bail_out)
    except NonFiniteState as exc:
        traj = exc.trajectory
    return traj, classify(traj, policy)


def point_verdict(kind, params, policy: Optional[ClassifierPolicy] = None) -> StabilityVerdict:
    """Verdict for a single parameter point (reference protocol by default)."""
    return run_point(kind, params, policy or ClassifierPolicy.reference())[1]


# -- grids -----------------------------------------------------------------


class Plane(enum.Enum):
    """``delta-delta1``: x = delta1, y = Delta.  ``epsilon-omega``: x = omega, y = epsilon."""

    DELTA_DELTA1 = "delta-delta1"
    EPSILON_OMEGA = "epsilon-omega"


@dataclass(frozen=True)
class Axis:
    lo: float
    hi: float
    n: int

    def __post_init__(self):
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise InvalidParameter("axis range must be finite")
        if self.hi < self.lo:
            raise InvalidParameter(f"axis range [{self.lo!r}, {self.hi!r}] is reversed")
        if int(self.n) != self.n or self.n < 2:
            raise InvalidParameter(f"axis resolution must be an integer >= 2, got {self.n!r}")

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, int(self.n))

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)


@dataclass(frozen=True)
class GridSpec:
    """A rectangular lattice over one parameter plane.

    In the ``delta-delta1`` plane full models use ``omega = Omega/2 + eps*x``
    (or ``Omega/4 + eps*x`` with ``resonance="quarter"``) and need a fixed
    ``epsilon``; the slow-quarter flow reads x as delta1 and ignores y.
    The ``epsilon-omega`` plane needs exactly one of ``delta_cap`` and
    ``alpha`` and only accepts full models.
    """

    plane: Plane
    model: ModelKind
    x: Axis
    y: Axis
    omega_drive: float = 2.0 * math.pi
    mu: float = 0.0
    epsilon: Optional[float] = None
    delta_cap: Optional[float] = None
    alpha: Optional[float] = None
    resonance: str = "half"

    def __post_init__(self):
        object.__setattr__(self, "plane", Plane(self.plane))
        object.__setattr__(self, "model", ModelKind(self.model))
        for name in ("omega_drive", "mu", "epsilon", "delta_cap", "alpha"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, float(value))
        if not (math.isfinite(self.omega_drive) and self.omega_drive > 0):
            raise InvalidParameter("omega_drive must be finite and > 0")
        if not (math.isfinite(self.mu) and self.mu >= 0):
            raise InvalidParameter("mu must be finite and >= 0")
        if self.resonance not in ("half", "quarter"):
            raise InvalidParameter(f"resonance must be 'half' or 'quarter', got {self.resonance!r}")
        if self.plane is Plane.DELTA_DELTA1:
            if self.model.is_full and not (self.epsilon is not None and self.epsilon > 0):
                raise InvalidParameter("full models in the delta-delta1 plane need epsilon > 0")
            if self.model is ModelKind.SLOW_FLOW_QUARTER_RES and self.epsilon is None:
                raise InvalidParameter("the slow-quarter flow needs epsilon")
            if self.alpha is not None:
                raise InvalidParameter("alpha is not used in the delta-delta1 plane")
        else:
            if not self.model.is_full:
                raise InvalidParameter("the epsilon-omega plane needs a full model")
            if (self.delta_cap is None) == (self.alpha is None):
                raise InvalidParameter("give exactly one of delta_cap and alpha")
            if self.y.lo < 0:
                raise InvalidParameter("epsilon range must be >= 0")
            if self.x.lo <= 0:
                raise InvalidParameter("omega range must be > 0")

    @property
    def shape(self):
        return (int(self.y.n), int(self.x.n))

    def cell_params(self, ix: int, iy: int):
        """Model parameters for lattice cell ``(ix, iy)``."""
        x = float(self.x.values()[ix])
        y = float(self.y.values()[iy])
        if self.plane is Plane.DELTA_DELTA1:
            if self.model.is_slow:
                return SlowFlowParams.from_delta1(x, self.omega_drive, self.mu, y)
            if self.model is ModelKind.SLOW_FLOW_QUARTER_RES:
                return QuarterParams(x, self.epsilon)
            mod = ModulationSpec(self.omega_drive, self.epsilon, self.mu, EpsilonScaled(y))
            base = self.omega_drive / (2.0 if self.resonance == "half" else 4.0)
            return OscillatorConfig(base + self.epsilon * x, mod)
        detuning = FixedRatio(self.alpha) if self.alpha is not None else EpsilonScaled(self.delta_cap)
        return OscillatorConfig(x, ModulationSpec(self.omega_drive, y, self.mu, detuning))

    def to_dict(self) -> dict:
        return {
            "plane": self.plane.value,
            "model": self.model.value,
            "x": {"min": self.x.lo, "max": self.x.hi, "n": int(self.x.n)},
            "y": {"min": self.y.lo, "max": self.y.hi, "n": int(self.y.n)},
            "omega_drive": self.omega_drive,
            "mu": self.mu,
            "epsilon": self.epsilon,
            "delta_cap": self.delta_cap,
            "alpha": self.alpha,
            "resonance": self.resonance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        return cls(
            plane=Plane(d["plane"]),
            model=ModelKind(d["model"]),
            x=Axis(d["x"]["min"], d["x"]["max"], d["x"]["n"]),
            y=Axis(d["y"]["min"], d["y"]["max"], d["y"]["n"]),
            omega_drive=d.get("omega_drive", 2.0 * math.pi),
            mu=d.get("mu", 0.0),
            epsilon=d.get("epsilon"),
            delta_cap=d.get("delta_cap"),
            alpha=d.get("alpha"),
            resonance=d.get("resonance", "half"),
        )

    def same_lattice(self, other: "GridSpec") -> bool:
        return self.plane is other.plane and self.x == other.x and self.y == other.y


@dataclass(frozen=True)
class GridResult:
    """Verdicts on a lattice, ``verdicts[iy][ix]`` (row-major by y then x)."""

    spec: GridSpec
    policy: ClassifierPolicy
    verdicts: tuple
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        ny, nx = self.spec.shape
        if len(self.verdicts) != ny or any(len(row) != nx for row in self.verdicts):
            raise InvalidParameter("verdict lattice does not match the grid resolution")

    def kinds(self) -> np.ndarray:
        """Array of verdict strings with shape ``(ny, nx)``."""
        return np.array([[v.kind.value for v in row] for row in self.verdicts])

    def cells(self):
        """Yield ``(ix, iy, x, y, verdict)`` in row-major order."""
        xs = self.spec.x.values()
        ys = self.spec.y.values()
        for iy, row in enumerate(self.verdicts):
            for ix, v in enumerate(row):
                yield ix, iy, float(xs[ix]), float(ys[iy]), v


def evaluate_cell(spec: GridSpec, policy: ClassifierPolicy, ix: int, iy: int) -> StabilityVerdict:
    """Verdict for one lattice cell; failures become annotated verdicts."""
    try:
        params = spec.cell_params(ix, iy)
        if isinstance(params, SlowFlowParams) and params.delta_cap == 0:
            raise DegenerateSlowTime("Delta = 0, slow time degenerates")
        return run_point(spec.model, params, policy)[1]
    except DegenerateSlowTime:
        return StabilityVerdict(Verdict.AMBIGUOUS, float("nan"), note="degenerate slow time (Delta = 0)")
    except QPTonguesError as exc:
        return StabilityVerdict(Verdict.AMBIGUOUS, float("nan"), note=f"error: {exc}")


def _package_version() -> str:
    from . import __version__

    return __version__


def sweep(spec: GridSpec, policy: Optional[ClassifierPolicy] = None, workers: int = 1) -> GridResult:
    """Classify every cell of ``spec``.

    Cells are spread over a thread pool (the integration kernels release the
    GIL); output is identical for any ``workers``.
    """
    policy = policy or ClassifierPolicy.desk()
    if workers < 1:
        raise InvalidParameter("workers must be >= 1")
    ny, nx = spec.shape
    slots = [[None] * nx for _ in range(ny)]
    started = time.time()

    def work(index):
        iy, ix = divmod(index, nx)
        slots[iy][ix] = evaluate_cell(spec, policy, ix, iy)

    if workers == 1:
        for k in range(nx * ny):
            work(k)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, range(nx * ny)))
    finished = time.time()
    metadata = {
        "code_version": _package_version(),
        "started": started,
        "finished": finished,
        "workers": workers,
        "pid": os.getpid(),
    }
    return GridResult(spec, policy, tuple(tuple(r) for r in slots), metadata)


# -- comparison and boundaries ---------------------------------------------


class DisagreementCell(NamedTuple):
    ix: int
    iy: int
    x: float
    y: float
    a: str
    b: str


@dataclass(frozen=True)
class ZoneComparison:
    agreement: float
    compared: int
    disagreement_cells: list


def compare_zones(a: GridResult, b: GridResult) -> ZoneComparison:
    """Fraction of cells, among those non-ambiguous in both, with equal verdicts.

    Returns NaN agreement when no cell is comparable.

    Raises
    ------
    SpecMismatch
        If the grids do not share plane, axes and resolution.
    """
    if not a.spec.same_lattice(b.spec):
        raise SpecMismatch("grids differ in plane, axes or resolution")
    compared = 0
    agree = 0
    bad = []
    for (ix, iy, x, y, va), (_, _, _, _, vb) in zip(a.cells(), b.cells()):
        if Verdict.AMBIGUOUS in (va.kind, vb.kind):
            continue
        compared += 1
        if va.kind is vb.kind:
            agree += 1
        else:
            bad.append(DisagreementCell(ix, iy, x, y, va.kind.value, vb.kind.value))
    agreement = agree / compared if compared else float("nan")
    return ZoneComparison(agreement, compared, bad)


def extract_boundary(grid: GridResult) -> list:
    """Midpoints ``(x, y)`` between adjacent cells with opposite non-ambiguous verdicts."""
    kinds = grid.kinds()
    xs = grid.spec.x.values()
    ys = grid.spec.y.values()
    ny, nx = kinds.shape
    pair = {"stable", "divergent"}
    points = []
    for iy in range(ny):
        for ix in range(nx):
            k = kinds[iy, ix]
            if ix + 1 < nx and {k, kinds[iy, ix + 1]} == pair:
                points.append((0.5 * (xs[ix] + xs[ix + 1]), float(ys[iy])))
            if iy + 1 < ny and {k, kinds[iy + 1, ix]} == pair:
                points.append((float(xs[ix]), 0.5 * (ys[iy] + ys[iy + 1])))
    return [(float(x), float(y)) for x, y in points]


def with_policy(policy: ClassifierPolicy, **changes) -> ClassifierPolicy:
    """Copy of ``policy`` with some fields replaced (validated)."""
    return replace(policy, **changes)
