import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import WORKED_BOUNDARY
from lawtraverse.lawcore import LawFamily, PowerLaw, inverse_slope
from lawtraverse.synthlab import PRESETS, preset_family, random_family
from lawtraverse.traverse import (
    EmptyDomainError,
    ErrorPartition,
    Schedule,
    Segment,
    Transition,
    baseline_schedule,
    candidate_set,
    greedy_schedule,
    is_monotone,
    partition,
)
from lawtraverse.trajectory import default_partition


@pytest.mark.parametrize("error, expected", [(0.3, {"A"}), (0.5, {"A", "B"}), (0.95, set()), (0.88, {"A"})])
def test_candidate_set(worked_family, error, expected):
    assert set(candidate_set(worked_family, error)) == expected


def test_worked_partition(worked_family):
    part = partition(worked_family, (0.85, 0.40))
    assert [s.shape for s in part.segments] == ["B", "A"]
    assert part.e_start == 0.85 and part.e_end == 0.40
    (boundary,) = part.boundaries
    assert boundary == pytest.approx(0.550, abs=1e-3)
    assert abs(boundary - WORKED_BOUNDARY) <= 1e-6 * 0.85


def test_refined_boundary_equalises_slopes(worked_family):
    (e,) = partition(worked_family, (0.85, 0.40), refine_tol=1e-12).boundaries
    qa = inverse_slope(worked_family["A"], e)
    qb = inverse_slope(worked_family["B"], e)
    assert abs(qa - qb) < 1e-9 * abs(qa)


def test_domain_edges_trimmed_and_snapped(worked_family):
    # above 0.9 no law starts; between 0.9 and 0.85 only A can run
    part = partition(worked_family, (0.95, 0.30))
    assert part.e_start == 0.9
    assert [s.shape for s in part.segments] == ["A", "B", "A"]
    assert part.boundaries[0] == pytest.approx(0.85, abs=1e-15)


def test_single_law_family():
    fam = LawFamily.from_laws([PowerLaw(0.8, 1, 0.1, 1, "A")])
    part = partition(fam, (0.9, 0.2))
    assert len(part.segments) == 1
    assert (part.e_start, part.e_end) == (0.9, 0.2)


def test_identical_laws_tie_goes_to_order():
    x = PowerLaw(0.8, 1, 0.1, 1, "x")
    y = PowerLaw(0.8, 1, 0.1, 1, "y")
    assert partition(LawFamily.from_laws([y, x]), (0.9, 0.2)).segments[0].shape == "y"
    assert partition(LawFamily.from_laws([x, y]), (0.9, 0.2)).segments[0].shape == "x"
    unordered = LawFamily((y, x))
    assert partition(unordered, (0.9, 0.2)).segments[0].shape == "x"


def test_empty_domain(worked_family):
    with pytest.raises(EmptyDomainError):
        partition(worked_family, (0.99, 0.95))
    with pytest.raises(EmptyDomainError):
        partition(worked_family, (0.09, 0.01))


def test_interior_gap_raises():
    fam = LawFamily.from_laws([PowerLaw(0.1, 1, 0.5, 1, "hi"), PowerLaw(0.1, 1, 0.1, 1, "lo")])
    # "hi" covers (0.5, 0.6], "lo" covers (0.1, 0.2]
    with pytest.raises(EmptyDomainError):
        partition(fam, (0.6, 0.15))


def test_partition_preconditions(worked_family):
    with pytest.raises(ValueError):
        partition(worked_family, (0.4, 0.85))
    with pytest.raises(ValueError):
        partition(worked_family, (0.85, 0.4), grid_points=8)


def test_log_grid_matches_uniform(worked_family):
    a = partition(worked_family, (0.85, 0.40)).boundaries
    b = partition(worked_family, (0.85, 0.40), log_grid=True).boundaries
    assert a == pytest.approx(b, abs=2e-6)


def test_greedy_schedule(worked_family):
    sched = greedy_schedule(partition(worked_family, (0.85, 0.40)))
    assert sched.kind == "greedy"
    assert sched.initial == "B"
    (t,) = sched.transitions
    assert t.shape == "A" and t.trigger_type == "error"
    assert t.value == pytest.approx(0.550, abs=1e-3)
    assert is_monotone(sched, worked_family)


def test_one_segment_schedule():
    part = ErrorPartition((Segment(0.9, 0.2, "A"),))
    sched = greedy_schedule(part)
    assert sched.initial == "A" and sched.transitions == ()


def test_is_monotone(worked_family):
    bad = Schedule("explicit", "A", (Transition("B", "error", 0.6), Transition("A", "error", 0.5)))
    assert not is_monotone(bad, worked_family)
    with pytest.raises(ValueError):
        is_monotone(bad, LawFamily(tuple(worked_family.laws)))


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_are_monotone(name):
    fam = preset_family(name)
    sched = greedy_schedule(default_partition(fam))
    assert len(sched.transitions) >= 1
    assert is_monotone(sched, fam)


def test_schedule_trigger_validation():
    with pytest.raises(ValueError):
        Schedule("greedy", "A", (Transition("B", "error", 0.5), Transition("C", "error", 0.6)))
    with pytest.raises(ValueError):
        Schedule("linear", "A", (Transition("B", "compute", 5), Transition("C", "compute", 5)))
    with pytest.raises(ValueError):
        Transition("B", "steps", 3)
    with pytest.raises(ValueError):
        Schedule("random", "A", ())


def test_partition_validation():
    with pytest.raises(ValueError):
        ErrorPartition((Segment(0.9, 0.5, "A"), Segment(0.4, 0.2, "B")))
    with pytest.raises(ValueError):
        ErrorPartition(())


@pytest.mark.parametrize(
    "kind, shapes, budget, expected",
    [
        ("linear", ["P1", "P2"], 10, [5]),
        ("linear", ["P1", "P2", "P3", "P4"], 8, [2, 4, 6]),
        ("logarithmic", ["P1", "P2", "P3"], 1000, [10, 100]),
    ],
)
def test_baselines(kind, shapes, budget, expected):
    sched = baseline_schedule(kind, shapes, budget)
    assert sched.kind == kind
    assert sched.shapes == shapes
    assert [t.value for t in sched.transitions] == pytest.approx(expected, rel=1e-12)
    assert all(t.trigger_type == "compute" for t in sched.transitions)


def test_baseline_preconditions():
    with pytest.raises(ValueError):
        baseline_schedule("linear", ["P1"], 10)
    with pytest.raises(ValueError):
        baseline_schedule("linear", ["P1", "P2"], 0)
    with pytest.raises(ValueError):
        baseline_schedule("logarithmic", ["P1", "P2"], 10, min_fraction=1.0)
    with pytest.raises(ValueError):
        baseline_schedule("cosine", ["P1", "P2"], 10)


def _families():
    return st.builds(
        lambda seed, n: random_family(np.random.default_rng(seed), n),
        st.integers(0, 10_000),
        st.integers(2, 5),
    )


@settings(max_examples=25, deadline=None)
@given(fam=_families())
def test_partition_optimality_and_tiling(fam):
    e_start = min(l.a * l.d ** -l.b + l.c for l in fam)
    e_end = min(l.c for l in fam) + 1e-3
    part = partition(fam, (e_start, e_end), grid_points=128)
    for prev, seg in zip(part.segments, part.segments[1:]):
        assert prev.e_low == seg.e_high
    for seg in part.segments:
        for e in np.linspace(seg.e_high, seg.e_low, 9)[1:-1]:
            q_win = inverse_slope(fam[seg.shape], e)
            for other in candidate_set(fam, e):
                assert q_win >= inverse_slope(fam[other], e) - 1e-9 * abs(q_win)


@settings(max_examples=15, deadline=None)
@given(fam=_families(), perm_seed=st.integers(0, 100))
def test_permutation_invariance(fam, perm_seed):
    laws = list(fam.laws)
    np.random.default_rng(perm_seed).shuffle(laws)
    shuffled = LawFamily(tuple(laws), shape_order=fam.shape_order)
    e_start = min(l.a * l.d ** -l.b + l.c for l in fam)
    rng = (e_start, min(l.c for l in fam) + 1e-3)
    assert partition(fam, rng, grid_points=128) == partition(shuffled, rng, grid_points=128)
