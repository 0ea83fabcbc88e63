import numpy as np
import pytest

from chainbound.errors import InputError
from chainbound.membership import BOUNDS, Verdict, minimal_level_search, solve_level, test_level0
from chainbound.moments import canonical_transform, compute_moments
from chainbound.reconstruct import SheetSample, compare_to_truth, reconstruct_sheets
from chainbound.synth import graph_boundary, graph_boundary_multi, sum_boundaries


def verdict_for(spec, level=None):
    table = compute_moments(spec, 10, 24)
    return solve_level(table, level) if level else minimal_level_search(table, 4)


def sample(values):
    return SheetSample(0j, np.atleast_2d(np.asarray(values, dtype=complex)), 0.0, 0.0)


def test_compare_examples():
    assert compare_to_truth([sample([2j, -2j])], [[2j, -2j]]) == 0
    assert compare_to_truth([sample([2j, -2j])], [[-2j, 2j]]) == 0
    assert compare_to_truth([sample([2j, -2j])], [[2.001j, -2j]]) == pytest.approx(1e-3)
    with pytest.raises(InputError):
        compare_to_truth([sample([2j, -2j])], [[2j]])
    with pytest.raises(InputError):
        compare_to_truth([sample([1])], [])


def test_compare_large_multisets_use_assignment(rng):
    vals = rng.standard_normal(9) + 1j * rng.standard_normal(9)
    assert compare_to_truth([sample(vals)], [rng.permutation(vals)]) == 0


def test_graph_example(f_graph):
    spec, truth = f_graph
    out = reconstruct_sheets(spec, verdict_for(spec), [0.2])
    assert out[0].values.shape == (1, 1)
    assert out[0].values[0, 0] == pytest.approx(0.048, abs=1e-12)
    assert not out[0].flagged


def test_sqrt_example(sqrt_curve):
    spec, truth = sqrt_curve
    v = verdict_for(spec, level=2)
    out = reconstruct_sheets(spec, v, [0.0])
    np.testing.assert_allclose(sorted(out[0].values[0], key=np.imag), [-2j, 2j], atol=1e-6)


def test_level0_verdict_is_an_error():
    spec, _ = graph_boundary([1, 1], center=2)
    v = test_level0(compute_moments(spec, 4, 10))
    assert v.status == BOUNDS
    with pytest.raises(InputError):
        reconstruct_sheets(spec, v, [0.1])


def test_non_bounds_verdict_is_an_error(f_graph):
    with pytest.raises(InputError):
        reconstruct_sheets(f_graph[0], Verdict(1, "rejects", 1.0), [0.1])


def test_point_near_curve_is_an_error(f_graph):
    spec = f_graph[0]
    with pytest.raises(InputError):
        reconstruct_sheets(spec, verdict_for(spec), [0.9999])


def test_power_sum_consistency(cubic_curve, rng):
    spec, truth = cubic_curve
    v = verdict_for(spec)
    pts = 0.3 * np.sqrt(rng.uniform(size=8)) * np.exp(2j * np.pi * rng.uniform(size=8))
    out = reconstruct_sheets(spec, v, pts)
    for s in out:
        for d in (1, 2):
            ref = canonical_transform(spec, d, s.z) + np.polyval(v.free.head(d)[::-1], s.z)
            assert abs(np.sum(s.values[0] ** d) - ref) <= 1e-5 * (1 + abs(ref))
    assert compare_to_truth(out, [truth.evaluate(p) for p in pts]) < 1e-5


def test_sorted_by_argument(cubic_curve):
    spec, _ = cubic_curve
    out = reconstruct_sheets(spec, verdict_for(spec), [0.1, -0.2j])
    for s in out:
        assert np.all(np.diff(np.angle(s.values[0])) >= 0)


def test_sum_is_union_of_parts(f_graph, cubic_curve):
    spec, _ = sum_boundaries(f_graph[0], cubic_curve[0], f_graph[1], cubic_curve[1])
    pts = [0.1, 0.05 - 0.2j]
    whole = reconstruct_sheets(spec, verdict_for(spec), pts)
    a = reconstruct_sheets(f_graph[0], verdict_for(f_graph[0]), pts)
    b = reconstruct_sheets(cubic_curve[0], verdict_for(cubic_curve[0]), pts)
    union = [np.concatenate([x.values[0], y.values[0]]) for x, y in zip(a, b)]
    assert compare_to_truth(whole, union) < 1e-8


def test_q2_per_coordinate():
    spec, truth = graph_boundary_multi([[1, 0, 1], [0, 2, 0, 1]])
    v = verdict_for(spec)
    pts = [0.1 + 0.1j, -0.25]
    out = reconstruct_sheets(spec, v, pts)
    assert out[0].values.shape == (2, 1)
    assert compare_to_truth(out, [truth.evaluate(p) for p in pts]) < 1e-8


def test_json_shape(f_graph):
    spec = f_graph[0]
    doc = reconstruct_sheets(spec, verdict_for(spec), [0.2])[0].to_json()
    assert set(doc) >= {"z", "values", "residual"}
    assert doc["z"] == [0.2, 0.0] and len(doc["values"]) == 1
