import math
from dataclasses import replace

import numpy as np
import pytest

from qp_tongues import (
    Axis,
    ClassifierPolicy,
    EmptyTrajectory,
    GridSpec,
    IntegrationPlan,
    InvalidParameter,
    ModelKind,
    Plane,
    SlowFlowParams,
    SpecMismatch,
    StabilityVerdict,
    Verdict,
    classify,
    compare_zones,
    extract_boundary,
    rk4_integrate,
    sweep,
)
from qp_tongues.integrate import Trajectory
from qp_tongues.stability import GridResult, run_point

TWO_PI = 2.0 * math.pi


def constant_trajectory(value=1e-3, steps=1000):
    plan = IntegrationPlan(0.0, 10.0, 10.0 / steps, envelope_only=True)
    return rk4_integrate(lambda t, y: np.zeros(2), [value, value], plan)


def growing_trajectory(rate, t_end=100.0):
    plan = IntegrationPlan(0.0, t_end, 0.01, envelope_only=True)
    return rk4_integrate(lambda t, y: rate * y, [1e-3], plan)


def test_constant_trajectory_is_stable_without_rate():
    v = classify(constant_trajectory(), ClassifierPolicy.reference())
    assert v.kind is Verdict.STABLE
    assert v.growth_rate is None
    assert v.max_abs == pytest.approx(1e-3)


def test_clear_growth_is_divergent_with_rate():
    v = classify(growing_trajectory(0.1), ClassifierPolicy.reference())
    assert v.kind is Verdict.DIVERGENT
    assert v.max_abs >= 10.0
    assert v.growth_rate == pytest.approx(0.1, rel=1e-3)


def test_slow_growth_into_band_is_ambiguous():
    # ends between the thresholds while still growing
    traj = growing_trajectory(math.log(5e3) / 1000.0, t_end=1000.0)
    v = classify(traj, ClassifierPolicy.reference())
    assert v.kind is Verdict.AMBIGUOUS
    assert v.growth_rate == pytest.approx(math.log(5e3) / 1000.0, rel=1e-3)
    assert v.note == "divergent-leaning"


def test_bounded_beat_in_band_is_stable():
    plan = IntegrationPlan(0.0, 2000.0, 0.05, envelope_only=True)
    traj = rk4_integrate(lambda t, y: np.array([y[1], -0.01 * y[0]]), [5.0, 0.0], plan)
    v = classify(traj, ClassifierPolicy.reference())
    assert v.kind is Verdict.STABLE and v.note == "bounded beat"


def test_bail_out_and_blow_up_are_divergent():
    policy = ClassifierPolicy.reference()
    plan = IntegrationPlan(0.0, 100.0, 0.01, envelope_only=True)
    bailed = rk4_integrate(lambda t, y: y, [1.0], plan, bail_out=1e6)
    assert classify(bailed, policy).kind is Verdict.DIVERGENT
    assert classify(bailed, policy).max_abs >= 10.0


def test_empty_trajectory():
    empty = Trajectory(np.empty(0), np.empty((0, 2)), 0.0, np.zeros(2), np.full(20, np.nan), 0.0, 0, 0)
    with pytest.raises(EmptyTrajectory):
        classify(empty, ClassifierPolicy.reference())


def test_policy_invariants_and_presets():
    with pytest.raises(InvalidParameter):
        ClassifierPolicy(divergence_threshold=1.0, stable_threshold=1.0)
    with pytest.raises(InvalidParameter):
        ClassifierPolicy(initial_value=2.0)
    with pytest.raises(InvalidParameter):
        ClassifierPolicy(step=0.0)
    desk = ClassifierPolicy.desk()
    assert (desk.slow_horizon, desk.step) == (2000.0, 0.01)
    ref = ClassifierPolicy.reference()
    assert ref.horizon_for(ModelKind.SLOW_FLOW_MEAN_HALF) == 7000.0
    assert ref.horizon_for(ModelKind.VARIANCE_FULL) == 5000.0
    assert ClassifierPolicy.from_dict(ref.to_dict()) == ref


def test_mathieu_tongue_on_coarse_grid(desk):
    # delta1/Omega in {-0.2, 0.05, 0.3}; exactly 0 would start on the non-growing subspace
    spec = GridSpec(Plane.DELTA_DELTA1, ModelKind.SLOW_FLOW_VARIANCE_HALF,
                    Axis(-0.2 * TWO_PI, 0.3 * TWO_PI, 3), Axis(0.5, 1.5, 3), mu=0.0)
    kinds = sweep(spec, desk).kinds()
    assert (kinds[:, 1] == "divergent").all()
    assert (kinds[:, [0, 2]] == "stable").all()


def test_unforced_row_is_stable(desk):
    spec = GridSpec(Plane.EPSILON_OMEGA, ModelKind.MEAN_FULL, Axis(0.3 * TWO_PI, 0.9 * TWO_PI, 5),
                    Axis(0.0, 0.3, 2), mu=0.5, alpha=0.5)
    result = sweep(spec, replace(desk, full_horizon=200.0))
    assert (result.kinds()[0] == "stable").all()


def test_delta_zero_row_is_marked_not_integrated(desk):
    spec = GridSpec(Plane.DELTA_DELTA1, ModelKind.SLOW_FLOW_MEAN_HALF,
                    Axis(-1.0, 1.0, 3), Axis(0.0, 1.0, 2), mu=0.5)
    result = sweep(spec, replace(desk, slow_horizon=50.0))
    for v in result.verdicts[0]:
        assert v.kind is Verdict.AMBIGUOUS and "Delta = 0" in v.note
    assert all(v.note is None or "Delta" not in v.note for v in result.verdicts[1])


def test_cell_errors_become_annotations(desk):
    # omega = Omega/2 + eps*x is negative for the left column
    spec = GridSpec(Plane.DELTA_DELTA1, ModelKind.MEAN_FULL, Axis(-100.0, 0.0, 2), Axis(1.0, 2.0, 2),
                    mu=0.5, epsilon=0.1)
    result = sweep(spec, replace(desk, full_horizon=20.0))
    left = result.verdicts[0][0]
    assert left.kind is Verdict.AMBIGUOUS and left.note.startswith("error")
    assert result.verdicts[0][1].kind is not Verdict.AMBIGUOUS


def test_step_refinement_oracle(desk):
    spec = GridSpec(Plane.DELTA_DELTA1, ModelKind.MEAN_FULL, Axis(-1.5, 1.5, 21), Axis(0.05, 3.0, 21),
                    mu=0.5, epsilon=0.1)
    policy = replace(desk, full_horizon=500.0)
    coarse = sweep(spec, policy, workers=4)
    fine = sweep(spec, replace(policy, step=policy.step / 10), workers=4)
    assert (coarse.kinds() == fine.kinds()).all()


def test_parallel_sweep_is_deterministic(desk):
    spec = GridSpec(Plane.DELTA_DELTA1, ModelKind.SLOW_FLOW_VARIANCE_HALF, Axis(-1.5, 1.5, 9),
                    Axis(0.05, 3.0, 7), mu=1.0)
    policy = replace(desk, slow_horizon=300.0)
    one = sweep(spec, policy, workers=1)
    many = sweep(spec, policy, workers=4)
    assert one.verdicts == many.verdicts


@pytest.fixture(scope="module")
def sample_grid_spec():
    return GridSpec(Plane.DELTA_DELTA1, ModelKind.SLOW_FLOW_MEAN_HALF, Axis(-1.5, 1.5, 5),
                    Axis(0.3, 2.5, 5), mu=0.5)


def test_raising_divergence_threshold_never_creates_divergence(sample_grid_spec):
    base = replace(ClassifierPolicy.desk(), slow_horizon=500.0)
    low = sweep(sample_grid_spec, base).kinds()
    high = sweep(sample_grid_spec, replace(base, divergence_threshold=100.0)).kinds()
    assert not ((low == "stable") & (high == "divergent")).any()
    assert (low == "divergent").any()


def test_scaling_initial_state_keeps_divergence(sample_grid_spec):
    base = replace(ClassifierPolicy.desk(), slow_horizon=500.0)
    small = sweep(sample_grid_spec, base).kinds()
    large = sweep(sample_grid_spec, replace(base, initial_value=0.01)).kinds()
    assert (large[small == "divergent"] == "divergent").all()


def test_symmetric_start_at_tongue_centre_does_not_grow(desk):
    # mu = 0, delta1 = 0: a is conserved and b = c decays, so equal components never excite growth
    _, v = run_point("slow-variance", SlowFlowParams(0.0, 0.0, 1.0), desk)
    assert v.kind is Verdict.STABLE
    _, v = run_point("slow-variance", SlowFlowParams(1e-9, 0.0, 1.0), desk)
    assert v.kind is Verdict.DIVERGENT


def test_initial_state_reaches_integrator():
    params = SlowFlowParams(0.0, 0.0, 1.0)
    traj, _ = run_point("slow-mean", params, replace(ClassifierPolicy.desk(), slow_horizon=1.0),
                        record_stride=1)
    np.testing.assert_array_equal(traj.states[0], [1e-3, 1e-3])


def _grid(kinds, spec=None):
    spec = spec or GridSpec(Plane.DELTA_DELTA1, ModelKind.SLOW_FLOW_MEAN_HALF,
                            Axis(0.0, 1.0, len(kinds[0])), Axis(1.0, 2.0, len(kinds)))
    rows = tuple(tuple(StabilityVerdict(Verdict(k), 1.0) for k in row) for row in kinds)
    return GridResult(spec, ClassifierPolicy.desk(), rows)


def test_compare_with_itself():
    g = _grid([["stable", "divergent"], ["ambiguous", "divergent"]])
    cmp = compare_zones(g, g)
    assert cmp.agreement == 1.0 and cmp.compared == 3 and cmp.disagreement_cells == []


def test_compare_skips_ambiguous_and_lists_disagreements():
    a = _grid([["stable", "divergent"], ["ambiguous", "divergent"]])
    b = _grid([["divergent", "divergent"], ["stable", "ambiguous"]])
    cmp = compare_zones(a, b)
    assert cmp.compared == 2 and cmp.agreement == 0.5
    (cell,) = cmp.disagreement_cells
    assert (cell.ix, cell.iy, cell.a, cell.b) == (0, 0, "stable", "divergent")


def test_compare_requires_same_lattice():
    a = _grid([["stable", "divergent"], ["stable", "divergent"]])
    other = GridSpec(Plane.DELTA_DELTA1, ModelKind.SLOW_FLOW_MEAN_HALF, Axis(0.0, 2.0, 2), Axis(1.0, 2.0, 2))
    with pytest.raises(SpecMismatch):
        compare_zones(a, _grid([["stable", "stable"], ["stable", "stable"]], other))


def test_extract_boundary():
    assert extract_boundary(_grid([["stable"] * 3] * 3)) == []
    g = _grid([["stable", "divergent", "ambiguous"], ["stable", "stable", "divergent"]])
    pts = extract_boundary(g)
    assert sorted(pts) == sorted([(0.25, 1.0), (0.5, 1.5), (0.75, 2.0)])


def test_grid_spec_validation():
    with pytest.raises(InvalidParameter):
        Axis(1.0, 0.0, 3)
    with pytest.raises(InvalidParameter):
        Axis(0.0, 1.0, 1)
    with pytest.raises(InvalidParameter):
        GridSpec(Plane.DELTA_DELTA1, ModelKind.MEAN_FULL, Axis(0, 1, 2), Axis(0, 1, 2))
    with pytest.raises(InvalidParameter):
        GridSpec(Plane.EPSILON_OMEGA, ModelKind.SLOW_FLOW_MEAN_HALF, Axis(1, 2, 2), Axis(0, 1, 2), alpha=0.5)
    with pytest.raises(InvalidParameter):
        GridSpec(Plane.EPSILON_OMEGA, ModelKind.MEAN_FULL, Axis(1, 2, 2), Axis(0, 1, 2))
    spec = GridSpec("epsilon-omega", "variance", Axis(1, 2, 2), Axis(0, 0.3, 4), alpha=0.5)
    assert GridSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(InvalidParameter):
        _grid([["stable", "stable"]], spec)
