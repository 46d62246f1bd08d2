import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import chordal_closed

from slelab.charts import Chart, transition
from slelab.drivers import DETERMINISTIC
from slelab.fieldalg import (CHORDAL_DELTA, CHORDAL_SIGMA, DIPOLAR_DELTA, DIPOLAR_SIGMA, RADIAL_DELTA,
                             RADIAL_SIGMA, ElementaryTransform, WittField, apply_elementary, ell)
from slelab.flows import chordal_exact, flow_point
from slelab.zipper import (LoewnerChain, Partition, SwallowedPoint, Variant,
                           adaptive_chain, adaptive_partition, as_template, build_chain, chart_distance,
                           reverse_chain, split_field, step_map, trace_joints)

QUARTIC = DETERMINISTIC["quartic"]
upper = st.builds(complex, st.floats(-2, 2), st.floats(0.3, 2.5))
semicomplete = st.fixed_dictionaries({-2: st.sampled_from([2.0, -2.0, 1.3]), -1: st.floats(-2, 2),
                                      0: st.floats(-2, 2), 1: st.floats(-2, 2)}).map(WittField)


def _points(n, seed=0):
    rng = np.random.default_rng(seed)
    return [complex(x, y) for x, y in zip(rng.uniform(-2, 2, n), rng.uniform(0.3, 2, n))]


def test_partition_validation():
    with pytest.raises(ValueError):
        Partition([0.0])
    with pytest.raises(ValueError):
        Partition([0.0, 0.5, 0.5])
    assert Partition.uniform(1.0, 4).n == 4


@settings(max_examples=60)
@given(semicomplete)
def test_split_field_reconstructs(v):
    tpl, rest = split_field(v)
    assert rest.support <= {-1, 0, 1}
    z = 0.3 + 0.7j
    assert abs(tpl.field()(z) + rest(z) - v(z)) <= 1e-8 * (1 + abs(v(z)))


def test_templates_recognised():
    for d, kind in ((CHORDAL_DELTA, 0), (DIPOLAR_DELTA, 1), (RADIAL_DELTA, 2)):
        assert as_template(d).kind == kind
    assert as_template(CHORDAL_DELTA + ell(1, 0.3)) is None


def test_step_chordal_reduction():
    z = 0.3 + 0.5j
    for variant in Variant:
        st_ = step_map(CHORDAL_DELTA, CHORDAL_SIGMA, 0.2, 0.0, variant)
        assert st_(z) == pytest.approx(chordal_exact(0.2, z), rel=1e-9)


def test_step_zero_time_is_identity():
    st_ = step_map(DIPOLAR_DELTA, DIPOLAR_SIGMA, 0.0, 0.0)
    assert st_(0.4 + 0.2j) == pytest.approx(0.4 + 0.2j, abs=1e-15)


@pytest.mark.parametrize("delta,sigma", [(CHORDAL_DELTA, CHORDAL_SIGMA), (DIPOLAR_DELTA, DIPOLAR_SIGMA),
                                         (RADIAL_DELTA, RADIAL_SIGMA)])
def test_variants_agree_to_second_order(delta, sigma):
    z = 0.4 + 0.9j
    errs = []
    for dt in (0.02, 0.01):
        du = 3 * dt  # smooth driver u = 3t, LINEAR is exact for it
        exact = step_map(delta, sigma, dt, du, Variant.LINEAR)(z)
        errs.append([abs(step_map(delta, sigma, dt, du, v)(z) - exact) for v in (Variant.CLASSIFIED, Variant.PIECEWISE)])
    for a, b in zip(*errs):
        assert a / b > 3.5  # O(dt^2) per step


@settings(max_examples=30, deadline=None)
@given(semicomplete, st.floats(0.01, 0.3), st.floats(-0.5, 0.5), upper,
       st.sampled_from([Variant.CLASSIFIED, Variant.PIECEWISE]))
def test_step_inverse(delta, dt, du, z, variant):
    s = step_map(delta, ell(-1, -1) + ell(1, 0.2), dt, du, variant)
    try:
        w = s(z)
    except Exception:
        return
    if abs(w) > 1e6 or w.imag < 1e-6:
        return
    assert abs(s.inverse(w) - z) <= 1e-7 * (1 + abs(z))


@settings(max_examples=30)
@given(st.floats(0.01, 0.3), st.floats(-0.5, 0.5), upper)
def test_step_derivative_matches_fd(dt, du, z):
    if abs(z.real) < 0.3:
        z += 0.5  # keep clear of the slit
    s = step_map(RADIAL_DELTA, RADIAL_SIGMA * 1.3, dt, du)
    h = 1e-6
    fd = (s(z + h) - s(z - h)) / (2 * h)
    assert abs(s.derivative(z) - fd) <= 1e-5 * (1 + abs(fd))


def test_chain_examples():
    empty = LoewnerChain(CHORDAL_DELTA, CHORDAL_SIGMA)
    assert empty.evaluate(0.3 + 1j) == 0.3 + 1j
    ch = build_chain(CHORDAL_DELTA, CHORDAL_SIGMA, lambda t: 0.0, Partition.uniform(1.0, 5))
    assert ch.evaluate(1 + 0j) == pytest.approx(math.sqrt(5))


def test_inverse_after_forward():
    ch = build_chain(CHORDAL_DELTA, CHORDAL_SIGMA, QUARTIC, Partition.uniform(1.8, 200))
    for z in _points(10):
        assert abs(ch.evaluate_inverse(ch.evaluate(z)) - z) < 1e-8


def test_swallowed_point():
    ch = build_chain(CHORDAL_DELTA, CHORDAL_SIGMA, lambda t: 0.0, Partition.uniform(1.0, 10))
    with pytest.raises(SwallowedPoint):
        ch.evaluate(1j)  # on the slit


def test_chordal_joints_on_axis():
    ch = build_chain(CHORDAL_DELTA, CHORDAL_SIGMA, lambda t: 0.0, Partition.uniform(1.0, 16))
    tr = trace_joints(ch)
    for (_, kind, t, w) in tr.points:
        assert kind == "a"
        assert w == pytest.approx(2j * math.sqrt(t), abs=1e-12)


def test_single_step_tip():
    ch = build_chain(DIPOLAR_DELTA, DIPOLAR_SIGMA, lambda t: 0.0, Partition([0.0, 0.1]))
    tip = trace_joints(ch).points[-1][3]
    # the tip flows back to the source under the same step
    assert abs(ch.evaluate(tip + 1e-9j)) < 1e-3


def test_b_points_merge_with_a_points():
    gaps = []
    for du in (1e-2, 1e-4, 1e-6):
        ch = build_chain(RADIAL_DELTA, RADIAL_SIGMA, lambda t, du=du: du * t / 0.1, Partition([0.0, 0.1, 0.2]),
                         variant=Variant.PIECEWISE)
        tr = trace_joints(ch, include_b=True)
        a, b = tr.a_points(), tr.b_points()
        gaps.append(abs(a[2] - b[1]))
    assert gaps[0] > gaps[1] > gaps[2] and gaps[2] < 1e-5


def test_trace_in_other_charts():
    ch = build_chain(CHORDAL_DELTA, CHORDAL_SIGMA, QUARTIC, Partition.uniform(1.0, 20), chart=Chart.DISK)
    tr = trace_joints(ch)
    h = build_chain(CHORDAL_DELTA, CHORDAL_SIGMA, QUARTIC, Partition.uniform(1.0, 20))
    for p, q in zip(tr.points, trace_joints(h).points):
        assert p[3] == pytest.approx(transition(Chart.HALFPLANE, Chart.DISK, q[3]), abs=1e-12)


def test_adaptive_spacing_quartic():
    part, tr = adaptive_partition(CHORDAL_DELTA, CHORDAL_SIGMA, QUARTIC, 0.01, 0.02, t_end=1.8)
    a = tr.a_points()
    gaps = np.abs(np.diff(a))[:-1]
    assert np.all((gaps >= 0.01) & (gaps <= 0.02))
    assert part.times[-1] == pytest.approx(1.8)


def test_adaptive_constant_driver_bisection_bound():
    chain, _ = adaptive_chain(CHORDAL_DELTA, CHORDAL_SIGMA, lambda t: 0.0, 0.05, 0.1, t_end=1.0)
    a = trace_joints(chain).a_points()
    gaps = np.abs(np.diff(a))[:-1]
    assert np.all((gaps >= 0.05) & (gaps <= 0.1))


def test_adaptive_rejects_bad_bounds():
    with pytest.raises(ValueError):
        adaptive_partition(CHORDAL_DELTA, CHORDAL_SIGMA, QUARTIC, 0.01, 0.01)


def test_adaptive_disk_distance():
    chain, _ = adaptive_chain(RADIAL_DELTA, RADIAL_SIGMA, QUARTIC, 0.01, 0.02, chart=Chart.DISK, t_end=0.5)
    a = [p[3] for p in trace_joints(chain).points]
    gaps = np.abs(np.diff(a))[:-1]
    assert np.all((gaps >= 0.01) & (gaps <= 0.02))
    assert chart_distance(Chart.DISK, 1j, 1j) == 0


def test_reverse_chain_inverts():
    ch = build_chain(CHORDAL_DELTA, CHORDAL_SIGMA, QUARTIC, Partition.uniform(1.8, 300))
    rc = reverse_chain(ch)
    for z in _points(10, 3):
        assert abs(rc.evaluate(ch.evaluate(z)) - z) < 1e-6
    assert reverse_chain(ch, 0.0).n == 0
    with pytest.raises(ValueError):
        reverse_chain(ch, 0.123456)


def test_reverse_chordal_closed_form():
    ch = build_chain(CHORDAL_DELTA, CHORDAL_SIGMA, lambda t: 0.0, Partition.uniform(1.0, 8))
    rc = reverse_chain(ch)
    for z in _points(5, 4):
        w = rc.evaluate(z + 3j)
        assert w == pytest.approx(chordal_closed(-1.0, z + 3j), rel=1e-10)


def test_reverse_variants_invert_too():
    for v in (Variant.PIECEWISE, Variant.CLASSIFIED):
        ch = build_chain(DIPOLAR_DELTA, DIPOLAR_SIGMA, QUARTIC, Partition.uniform(1.0, 50), variant=v)
        rc = reverse_chain(ch)
        z = 0.2 + 0.7j
        assert abs(rc.evaluate(ch.evaluate(z)) - z) < 1e-8


def test_semigroup_split():
    t_mid, t_end, n = 0.8, 1.6, 160
    full = build_chain(CHORDAL_DELTA, CHORDAL_SIGMA, QUARTIC, Partition.uniform(t_end, n))
    first = build_chain(CHORDAL_DELTA, CHORDAL_SIGMA, QUARTIC, Partition.uniform(t_mid, n // 2))
    second = build_chain(CHORDAL_DELTA, CHORDAL_SIGMA, lambda s: QUARTIC(t_mid + s) - QUARTIC(t_mid),
                         Partition.uniform(t_end - t_mid, n // 2))
    for z in _points(6, 5):
        assert abs(second.evaluate(first.evaluate(z)) - full.evaluate(z)) < 1e-6


def test_s_transform_is_conjugation():
    c = 0.4
    d2, s2, _ = apply_elementary(ElementaryTransform("S", c), DIPOLAR_DELTA, DIPOLAR_SIGMA)
    part = Partition.uniform(0.6, 60)
    g = build_chain(DIPOLAR_DELTA, DIPOLAR_SIGMA, QUARTIC, part)
    gt = build_chain(d2, s2, QUARTIC, part)
    lam = math.exp(-c)  # S_c pushes fields forward by z -> e^{-c} z
    for z in _points(5, 6):
        assert abs(gt.evaluate(z) - lam * g.evaluate(z / lam)) < 1e-6


def test_linear_variant_matches_ode_chain():
    part = Partition.uniform(0.5, 20)
    lin = build_chain(RADIAL_DELTA, RADIAL_SIGMA, lambda t: 2 * t, part, variant=Variant.LINEAR)
    z = 0.3 + 1.2j
    direct = flow_point(RADIAL_DELTA + RADIAL_SIGMA * 2, 0.5, z)
    assert lin.evaluate(z) == pytest.approx(direct, rel=1e-8)
