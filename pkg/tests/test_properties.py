"""Property-based checks of the core invariants."""
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from awilab.experiments import slope_fit, strict_minima
from awilab.filter import TraceProblem, filter_diagnostics, g_kernel, solve_filter
from awilab.forward import Gather, leading_term_trace
from awilab.medium import ConstantMedium, LinearGradientMedium, travel_time
from awilab.objectives import j_awi, j_mswi, j_tilde
from awilab.signal import (TimeAxis, Trace, WaveletKind, convolve, make_mother_wavelet,
                           pulse_width, rms_frequency, scale_wavelet, shift)

DT = 0.01
SETTINGS = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])

W1 = {k: make_mother_wavelet(k, DT) for k in WaveletKind}
AXIS = TimeAxis.spanning(DT, 40.0)

kinds = st.sampled_from(list(WaveletKind))
lams = st.floats(0.25, 1.0)
finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
signals = arrays(np.float64, st.integers(4, 40), elements=st.floats(-10, 10)).filter(
    lambda a: np.abs(a).max() > 1e-3)
sigmas = st.floats(1e-4, 1e2)


@SETTINGS
@given(kinds, lams)
def test_scaled_wavelets_have_unit_norm(kind, lam):
    assert scale_wavelet(W1[kind], lam).trace.norm() == pytest.approx(1.0, abs=1e-6)


@SETTINGS
@given(kinds, lams)
def test_heisenberg(kind, lam):
    x = scale_wavelet(W1[kind], lam).trace
    assert pulse_width(x) * rms_frequency(x) >= 0.5 - 1e-6


@SETTINGS
@given(signals, signals)
def test_convolution_commutes(a, b):
    x, y = Trace(a, DT), Trace(b, DT, 0.3)
    np.testing.assert_allclose(convolve(x, y).samples, convolve(y, x).samples, atol=1e-9)


@SETTINGS
@given(st.floats(-0.5, 0.5), st.floats(0.3, 1.0))
def test_interior_shift_preserves_norm(tau, lam):
    w = scale_wavelet(W1[WaveletKind.RICKER], lam)
    x = leading_term_trace(1.0, 20.0, w, AXIS)
    assert shift(x, tau).norm() == pytest.approx(x.norm(), rel=1e-8)


@SETTINGS
@given(signals, signals, sigmas)
def test_normal_equation(a, b, sigma):
    n = max(a.size, b.size)
    p = Trace(np.pad(a, (0, n - a.size)), DT)
    d = Trace(np.pad(b, (0, n - b.size)), DT)
    pb = TraceProblem(p, d)
    u = pb.solve(sigma)
    res = pb.ST(pb.S(u)) + sigma * u - pb.rhs()
    rhs = math.sqrt(pb.dot(pb.rhs(), pb.rhs()))
    assert math.sqrt(pb.dot(res, res)) <= 1e-8 * rhs + 1e-12


@SETTINGS
@given(signals, signals, sigmas, st.floats(-1e3, 1e3).filter(lambda g: abs(g) > 1e-3))
def test_filter_scale_equivariance(a, b, sigma, gamma):
    n = max(a.size, b.size)
    p = Trace(np.pad(a, (0, n - a.size)), DT)
    d = Trace(np.pad(b, (0, n - b.size)), DT)
    u = solve_filter(p, d, sigma).trace.samples
    ug = solve_filter(p, d * gamma, sigma).trace.samples
    np.testing.assert_allclose(ug, gamma * u, rtol=1e-9, atol=1e-9 * abs(gamma) * np.abs(u).max())


@SETTINGS
@given(signals, signals, sigmas)
def test_j_tilde_projection_bound(a, b, sigma):
    n = max(a.size, b.size)
    axis = TimeAxis(DT, 0.0, n)
    p = Gather({0: Trace(np.pad(a, (0, n - a.size)), DT)}, axis)
    d = Gather({0: Trace(np.pad(b, (0, n - b.size)), DT)}, axis)
    assert 0 <= j_tilde(p, d, sigma) <= d[0].norm() ** 2 * (1 + 1e-12)


@SETTINGS
@given(st.integers(-150, 150), st.floats(0.3, 3.0), st.floats(0.3, 3.0), st.floats(1e-3, 1.0))
def test_leading_term_identity(k, a, a_star, r):
    lam = 0.5
    w = scale_wavelet(W1[WaveletKind.RICKER], lam)
    p = leading_term_trace(a, 20.0, w, AXIS)
    d = leading_term_trace(a_star, 20.0 + k * DT, w, AXIS)
    sigma = r * lam
    u = solve_filter(p, d, sigma)
    g = g_kernel(w, sigma / a ** 2, n_fft=u.n_fft)
    want = pulse_width(g) ** 2 + (k * DT) ** 2
    assert filter_diagnostics(u, p, d).ratio ** 2 == pytest.approx(want, rel=1e-6)


@SETTINGS
@given(st.floats(0.1, 10.0), st.floats(1e-2, 1.0))
def test_awi_invariant_mswi_quadratic(gamma, r):
    w = scale_wavelet(W1[WaveletKind.RICKER], 0.5)
    p = Gather({0: leading_term_trace(1.0, 20.0, w, AXIS)}, AXIS)
    d = Gather({0: leading_term_trace(1.0, 20.3, w, AXIS)}, AXIS)
    assert j_awi(p, d.scaled(gamma), r).total == pytest.approx(j_awi(p, d, r).total, rel=1e-10)
    assert j_mswi(p, d.scaled(gamma), r).total == pytest.approx(gamma ** 2 * j_mswi(p, d, r).total, rel=1e-10)


@SETTINGS
@given(st.floats(1e-6, 1e3), st.sampled_from([0.25, 0.5, 1.0]))
def test_g_kernel_even(mu, lam):
    g = g_kernel(scale_wavelet(W1[WaveletKind.RICKER], lam), mu).samples
    np.testing.assert_allclose(g, g[::-1], atol=1e-10 * np.abs(g).max())


points = st.tuples(st.floats(-5e3, 5e3), st.floats(0, 5e3))


@SETTINGS
@given(points, points, st.floats(1000, 5000), st.floats(-0.9, 0.9))
def test_travel_time_reciprocity_and_triangle(xs, xr, c0, g):
    assume(math.dist(xs, xr) > 1.0)
    assume(min(c0 + g * xs[1], c0 + g * xr[1]) > 100.0)
    m = LinearGradientMedium(c0, g)
    t = travel_time(m, xs, xr)
    assert t == pytest.approx(travel_time(m, xr, xs), rel=1e-12)
    c_max = c0 + max(g * xs[1], g * xr[1], 0.0) + abs(g) * 1e4
    assert t >= math.dist(xs, xr) / c_max - 1e-12


@SETTINGS
@given(points, points, st.floats(1000, 5000), st.floats(0.5, 2.0))
def test_travel_time_scaling(xs, xr, c, s):
    assume(math.dist(xs, xr) > 1.0)
    m = ConstantMedium(c)
    assert travel_time(m.scaled(s), xs, xr) == pytest.approx(travel_time(m, xs, xr) / s, rel=1e-12)


@SETTINGS
@given(st.floats(-3, 3), st.floats(0.1, 10), st.integers(4, 12))
def test_slope_fit_recovers_power_law(q, c, n):
    x = np.logspace(-2, 0, n)
    s, b, r2 = slope_fit(x, c * x ** q)
    assert s == pytest.approx(q, abs=1e-9)
    assert b == pytest.approx(math.log(c), abs=1e-8)


@SETTINGS
@given(st.lists(st.integers(0, 5), min_size=3, max_size=30))
def test_strict_minima_are_basins(values):
    v = np.array(values)
    for i in strict_minima(v, rtol=0.0):
        lo = i
        while lo > 0 and v[lo - 1] == v[i]:
            lo -= 1
        hi = i
        while hi < v.size - 1 and v[hi + 1] == v[i]:
            hi += 1
        assert lo > 0 and hi < v.size - 1
        assert v[lo - 1] > v[i] and v[hi + 1] > v[i]
