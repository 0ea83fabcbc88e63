import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chainbound.curve import (CurveSpec, Loop, TrigSeries, dump_curve, evaluate, load_curve,
                              make_loop, reverse, rotate_chart, union, with_multiplicity)
from chainbound.errors import InputError

UNIT = {"q": 1, "loops": [{"multiplicity": 1, "z": {"fourier": {"1": [1, 0]}},
                           "w": [{"fourier": {"2": [1, 0], "3": [1, 0]}}]}]}


def test_load_unit_graph_document():
    spec = load_curve(UNIT)
    assert len(spec.loops) == 1 and spec.q == 1
    z, dz, w = evaluate(spec.loops[0], 0.3)
    assert w[0] == pytest.approx(z ** 2 + z ** 3)


def test_load_accepts_string_and_path(tmp_path):
    assert load_curve(json.dumps(UNIT)).q == 1
    path = tmp_path / "c.json"
    path.write_text(json.dumps(UNIT))
    assert load_curve(str(path)).q == 1
    assert load_curve(path).q == 1


def test_rejects_curve_through_base_point():
    doc = {"q": 1, "loops": [{"multiplicity": 1, "z": {"fourier": {"0": [1, 0], "1": [1, 0]}},
                              "w": [{"fourier": {"0": [0, 0]}}]}]}
    with pytest.raises(InputError, match=r"loop 0 .*theta=3\.14"):
        load_curve(doc)


@pytest.mark.parametrize("doc", [
    {"q": 1},
    {"q": 1, "loops": []},
    {"q": 1, "loops": [{"multiplicity": 1, "z": {"fourier": {"x": [1, 0]}}, "w": [{"fourier": {"0": [0, 0]}}]}]},
    {"q": 2, "loops": [{"multiplicity": 1, "z": {"fourier": {"1": [1, 0]}}, "w": [{"fourier": {"0": [0, 0]}}]}]},
    {"q": 1, "loops": [{"multiplicity": 1, "z": {"samples": [[1, 0]] * 15}, "w": [{"fourier": {"0": [0, 0]}}]}]},
    {"q": 1, "loops": [{"multiplicity": 1, "z": {"samples": [[1, 0]] * 17}, "w": [{"fourier": {"0": [0, 0]}}]}]},
])
def test_schema_and_sampling_violations(doc):
    with pytest.raises(InputError):
        load_curve(doc)


def test_malformed_json():
    with pytest.raises(InputError):
        load_curve("{not json")


def test_two_loop_algebraic_document(sqrt_curve):
    spec, _ = sqrt_curve
    again = load_curve(dump_curve(spec))
    assert len(again.loops) == 2


def test_evaluate_examples():
    z, dz, _ = evaluate(make_loop({1: 1}, [{0: 0}]), 0.0)
    assert z == pytest.approx(1) and dz == pytest.approx(1j)
    z, dz, _ = evaluate(make_loop({0: 2, 1: 1}, [{0: 0}]), np.pi)
    assert z == pytest.approx(1) and dz == pytest.approx(-1j)


def test_sampled_interpolation_off_grid():
    theta = 2 * np.pi * np.arange(64) / 64
    series = TrigSeries.from_samples(np.cos(theta))
    probe = np.linspace(0.01, 6.2, 37)
    np.testing.assert_allclose(series(probe), np.cos(probe), atol=1e-10)
    np.testing.assert_allclose(series.derivative()(probe), -np.sin(probe), atol=1e-10)


@given(st.dictionaries(st.integers(-7, 7), st.complex_numbers(max_magnitude=3), min_size=1))
@settings(max_examples=40, deadline=None)
def test_trig_and_sampled_forms_agree(coeffs):
    exact = TrigSeries.from_fourier(coeffs)
    sampled = TrigSeries.from_samples(exact.on_grid(32))
    probe = np.linspace(0, 2 * np.pi, 23, endpoint=False) + 0.01
    np.testing.assert_allclose(sampled(probe), exact(probe), atol=1e-10)


def test_rotation_and_identity():
    spec = load_curve(UNIT)
    same = rotate_chart(spec, 0.0)
    np.testing.assert_allclose(same.loops[0].z.coeffs, spec.loops[0].z.coeffs)
    flipped = rotate_chart(spec, np.pi)
    np.testing.assert_allclose(flipped.loops[0].z(0.7), -spec.loops[0].z(0.7))
    assert flipped.loops[0].w[0](0.7) == spec.loops[0].w[0](0.7)


def test_reverse_and_sampled_reverse_agree():
    loop = make_loop({0: 0.1, 1: 1}, [{2: 1}])
    sampled = make_loop(loop.z.on_grid(64), [loop.w[0].on_grid(64)])
    a, b = loop.reversed(), sampled.reversed()
    probe = np.linspace(0, 6, 11)
    np.testing.assert_allclose(a.z(probe), b.z(probe), atol=1e-12)
    np.testing.assert_allclose(a.z(probe), loop.z(-probe), atol=1e-12)


def test_round_trip_document():
    spec = load_curve(UNIT)
    assert dump_curve(spec) == json.loads(json.dumps(dump_curve(load_curve(dump_curve(spec)))))


def test_union_and_multiplicity():
    spec = load_curve(UNIT)
    both = union(spec, with_multiplicity(spec, 2))
    assert [l.multiplicity for l in both.loops] == [1, 2]
    assert union(spec, CurveSpec.empty(1)).loops == spec.loops
    with pytest.raises(InputError):
        union(spec, CurveSpec.empty(2))
    assert reverse(reverse(spec)).loops[0].z(0.4) == pytest.approx(spec.loops[0].z(0.4))


def test_loop_q_mismatch():
    with pytest.raises(InputError):
        CurveSpec((Loop(TrigSeries.constant(1), ()),), 1)
