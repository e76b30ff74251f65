import math

import numpy as np
import pytest
from scipy.integrate import quad

from awilab.signal import (TimeAxis, Trace, UndefinedRatioError, WaveletKind, apply_T,
                           apply_T_eps, convolve, envelope, heisenberg_products,
                           hilbert_power, make_mother_wavelet, next_pow2, pulse_width,
                           rms_frequency, scale_wavelet, shift, source_waveform,
                           spectrum, unit_delta, correlation_peak)

DT = 1e-3


def ricker(t):
    return (1 - t * t) * math.exp(-t * t / 2)


def gauss_deriv(t):
    return -t * math.exp(-t * t / 2)


def quad_moments(f, lo=-30, hi=30):
    n2 = quad(lambda t: f(t) ** 2, lo, hi, limit=200)[0]
    t2 = quad(lambda t: (t * f(t)) ** 2, lo, hi, limit=200)[0]
    return n2, t2


# ---------------------------------------------------------------- containers

def test_trace_validation():
    with pytest.raises(ValueError):
        Trace([1.0, np.nan], DT)
    with pytest.raises(ValueError):
        Trace([1.0], 0.0)
    with pytest.raises(ValueError):
        Trace([], DT)
    tr = Trace([1.0, 2.0], DT)
    with pytest.raises(ValueError):
        tr.samples[0] = 3.0


def test_trace_norm_is_dt_weighted():
    tr = Trace([3.0, 4.0], 0.25)
    assert tr.norm() == pytest.approx(math.sqrt(0.25 * 25))


def test_trace_csv_roundtrip(tmp_path):
    tr = Trace(np.sin(np.arange(50) * 0.3), 0.004, 1.25)
    tr.to_csv(tmp_path / "x.csv")
    assert (tmp_path / "x.csv").read_text().splitlines()[0] == "t,value"
    back = Trace.from_csv(tmp_path / "x.csv")
    np.testing.assert_array_equal(back.samples, tr.samples)
    assert back.dt == pytest.approx(tr.dt, rel=1e-9)
    assert back.t0 == pytest.approx(tr.t0, abs=1e-12)


def test_axis_arithmetic_requires_same_axis():
    a = Trace([1.0, 2.0], DT)
    with pytest.raises(ValueError):
        a + Trace([1.0, 2.0], DT, 0.5)


def test_next_pow2():
    assert [next_pow2(n) for n in (1, 2, 3, 1024, 1025)] == [1, 2, 4, 1024, 2048]


# ------------------------------------------------------------------ wavelets

@pytest.mark.parametrize("kind", list(WaveletKind))
def test_mother_wavelet_unit_norm_zero_mean(kind):
    w = make_mother_wavelet(kind, DT, half_support=4.0)
    x = w.trace
    assert x.norm() == pytest.approx(1.0, abs=1e-12)
    assert abs(DT * x.samples.sum()) <= 1e-10 * x.norm_l1()
    # symmetric support
    assert x.t0 == pytest.approx(-(x.n - 1) / 2 * DT)


def test_gaussian_derivative_is_odd(gdw1):
    s = gdw1.trace.samples
    np.testing.assert_allclose(s, -s[::-1], atol=1e-12)


def test_ricker_rms_frequency_matches_quadrature(ricker1):
    # analytic Ricker spectrum is proportional to w^2 exp(-w^2/2)
    num = quad(lambda w: w ** 2 * (w ** 2 * math.exp(-w * w / 2)) ** 2, 0, 40)[0]
    den = quad(lambda w: (w ** 2 * math.exp(-w * w / 2)) ** 2, 0, 40)[0]
    k_oracle = math.sqrt(num / den)
    assert rms_frequency(ricker1.trace) == pytest.approx(k_oracle, rel=5e-3)


@pytest.mark.parametrize("kind,f", [(WaveletKind.RICKER, ricker),
                                    (WaveletKind.GAUSSIAN_DERIVATIVE, gauss_deriv)])
def test_mother_pulse_width_matches_quadrature(kind, f):
    n2, t2 = quad_moments(f)
    w = make_mother_wavelet(kind, DT)
    assert pulse_width(w.trace) == pytest.approx(math.sqrt(t2 / n2), rel=1e-5)


def test_make_mother_wavelet_rejects_bad_args():
    with pytest.raises(ValueError):
        make_mother_wavelet("ricker", 0.0)
    with pytest.raises(ValueError):
        make_mother_wavelet("ricker", DT, half_support=-1)
    with pytest.raises(ValueError):
        make_mother_wavelet("ricker", DT, half_support=2.0)


def test_scale_wavelet_identity(ricker1):
    w = scale_wavelet(ricker1, 1.0)
    np.testing.assert_array_equal(w.trace.samples, ricker1.trace.samples)


@pytest.mark.parametrize("lam", [0.0, -0.5, 1.5])
def test_scale_wavelet_range(ricker1, lam):
    with pytest.raises(ValueError):
        scale_wavelet(ricker1, lam)


@pytest.mark.parametrize("kind", list(WaveletKind))
@pytest.mark.parametrize("lam", [1.0, 0.5, 0.25, 1 / 8, 1 / 16, 1 / 32, 1 / 64])
def test_lp_scaling_law(kind, lam):
    w1 = make_mother_wavelet(kind, DT)
    w = scale_wavelet(w1, lam)
    assert w.trace.norm() == pytest.approx(w1.trace.norm(), rel=1e-3)
    assert w.trace.norm_l1() == pytest.approx(lam ** 0.5 * w1.trace.norm_l1(), rel=1e-3)


def test_l2_norm_and_l1_norm_tight(ricker1):
    w = scale_wavelet(ricker1, 0.25)
    assert w.trace.norm() == pytest.approx(1.0, rel=1e-6)
    assert w.trace.norm_l1() == pytest.approx(0.5 * ricker1.trace.norm_l1(), rel=1e-4)


@pytest.mark.parametrize("lam", [0.5, 0.25])
def test_pulse_width_and_rms_frequency_scaling(ricker1, lam):
    w = scale_wavelet(ricker1, lam)
    assert pulse_width(w.trace) == pytest.approx(lam * pulse_width(ricker1.trace), rel=1e-4)
    assert rms_frequency(w.trace) == pytest.approx(rms_frequency(ricker1.trace) / lam, rel=1e-4)


def test_T_l1_scaling(ricker1):
    w = scale_wavelet(ricker1, 0.25)
    assert apply_T(w.trace).norm_l1() == pytest.approx(
        0.25 ** 1.5 * apply_T(ricker1.trace).norm_l1(), rel=1e-4)


def test_source_waveform_is_cumulative_integral(ricker1):
    f = source_waveform(ricker1)
    # integral of (1 - t^2) e^{-t^2/2} is t e^{-t^2/2}, times the norm constant
    t = f.times
    np.testing.assert_allclose(f.samples, ricker1.norm_const * t * np.exp(-t * t / 2), atol=2e-3)


# ------------------------------------------------------------- width/frequency

def test_pulse_width_of_delta_at_zero():
    assert pulse_width(unit_delta(DT)) == 0.0


def test_pulse_width_gaussian():
    t = np.arange(-20000, 20001) * DT
    g = Trace(np.exp(-t * t / 2), DT, t[0])
    n2, t2 = quad_moments(lambda s: math.exp(-s * s / 2))
    assert pulse_width(g) == pytest.approx(math.sqrt(t2 / n2), abs=1e-4)
    assert pulse_width(g) == pytest.approx(1 / math.sqrt(2), abs=1e-4)


def test_gaussian_attains_heisenberg_bound():
    t = np.arange(-20000, 20001) * DT
    g = Trace(np.exp(-t * t / 2), DT, t[0])
    lk, cyclic = heisenberg_products(g)
    assert lk == pytest.approx(0.5, rel=1e-3)
    assert cyclic == pytest.approx(1 / (4 * math.pi), rel=1e-3)


def test_windowed_cosine_rms_frequency():
    w0, s = 10.0, 20.0
    t = np.arange(-150000, 150001) * DT
    x = Trace(np.cos(w0 * t) * np.exp(-t * t / (2 * s * s)), DT, t[0])

    def f(u):
        return math.cos(w0 * u) * math.exp(-u * u / (2 * s * s))

    def df(u):
        return (-w0 * math.sin(w0 * u) - u / s ** 2 * math.cos(w0 * u)) * math.exp(-u * u / (2 * s * s))

    pts = np.linspace(-150, 150, 301)
    num = sum(quad(lambda u: df(u) ** 2, a, b)[0] for a, b in zip(pts[:-1], pts[1:]))
    den = sum(quad(lambda u: f(u) ** 2, a, b)[0] for a, b in zip(pts[:-1], pts[1:]))
    k = rms_frequency(x)
    assert k == pytest.approx(math.sqrt(num / den), rel=1e-4)
    assert k == pytest.approx(w0, rel=1e-2)


def test_zero_trace_ratios_raise():
    z = Trace(np.zeros(10), DT)
    with pytest.raises(UndefinedRatioError):
        pulse_width(z)
    with pytest.raises(UndefinedRatioError):
        rms_frequency(z)


# ------------------------------------------------------------------ spectra

def test_spectrum_parseval_and_hermitian(rng):
    x = Trace(rng.standard_normal(300), 0.01)
    sp = spectrum(x)
    assert x.norm() ** 2 == pytest.approx(sp.domega / (2 * np.pi) * np.sum(np.abs(sp.coefficients) ** 2), rel=1e-10)
    c = sp.coefficients
    np.testing.assert_allclose(c[1:], np.conj(c[1:][::-1]), rtol=1e-10, atol=1e-12 * np.abs(c).max())


# -------------------------------------------------------------- convolution

def direct_convolution(a, b, dt):
    out = np.zeros(len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return out * dt


def test_convolve_matches_direct_sum(rng):
    a = Trace(rng.standard_normal(200), 0.01, -0.3)
    b = Trace(rng.standard_normal(56), 0.01, 0.7)
    c = convolve(a, b)
    ref = direct_convolution(a.samples, b.samples, 0.01)
    assert np.max(np.abs(c.samples - ref)) <= 1e-10 * np.max(np.abs(ref))
    assert c.t0 == pytest.approx(0.4)


def test_convolve_identity_and_commutativity(rng, ricker1):
    x = ricker1.trace
    y = convolve(x, unit_delta(DT))
    np.testing.assert_allclose(y.samples, x.samples, atol=1e-12)
    a = Trace(rng.standard_normal(40), DT)
    b = Trace(rng.standard_normal(70), DT, 0.2)
    np.testing.assert_allclose(convolve(a, b).samples, convolve(b, a).samples, atol=1e-10)


def test_box_convolution_is_triangle():
    n, dt = 50, 0.02
    box = Trace(np.ones(n), dt)
    tri = convolve(box, box)
    ref = direct_convolution(box.samples, box.samples, dt)
    np.testing.assert_allclose(tri.samples, ref, atol=1e-12)
    assert tri.samples.max() == pytest.approx(n * dt)


def test_convolve_dt_mismatch():
    with pytest.raises(ValueError):
        convolve(Trace([1.0], 0.1), Trace([1.0], 0.2))


# ------------------------------------------------------------------ Hilbert

def test_hilbert_identity_square_and_isometry():
    w = scale_wavelet(make_mother_wavelet("ricker", DT), 0.125).trace
    assert hilbert_power(w, 0) is w
    h1 = hilbert_power(w, 1)
    h2 = hilbert_power(w, 2)
    np.testing.assert_allclose(h2.samples, -w.samples, atol=1e-8)
    np.testing.assert_allclose(hilbert_power(h1, 1).samples, h2.samples, atol=1e-8)
    assert h1.norm() == pytest.approx(w.norm(), rel=1e-8)


def test_hilbert_of_cosine_is_sine():
    n, dt = 1024, 1.0 / 1024
    t = np.arange(n) * dt
    x = Trace(np.cos(2 * np.pi * 8 * t), dt)
    np.testing.assert_allclose(hilbert_power(x, 1).samples, np.sin(2 * np.pi * 8 * t), atol=1e-10)
    np.testing.assert_allclose(envelope(x).samples, 1.0, atol=1e-10)


def test_hilbert_negative_power():
    with pytest.raises(ValueError):
        hilbert_power(Trace([1.0, 2.0], DT), -1)


# --------------------------------------------------------------- T operators

def test_apply_T():
    assert np.all(apply_T(unit_delta(DT)).samples == 0)
    x = Trace(np.ones(5), 0.5, -1.0)
    np.testing.assert_allclose(apply_T(apply_T(x)).samples, x.times ** 2)


def test_apply_T_eps():
    x = Trace(np.ones(5), 0.5, -1.0)
    np.testing.assert_array_equal(apply_T_eps(x, 0.0).samples, apply_T(x).samples)
    y = apply_T_eps(Trace([1.0], 1.0, 1.0), 1.0)
    assert y.samples[0] == pytest.approx(1 / math.sqrt(2))
    z = apply_T_eps(Trace(np.ones(1001), 0.1, -50.0), 0.3)
    assert np.all(np.abs(z.samples) <= 1 / 0.3 + 1e-12)
    with pytest.raises(ValueError):
        apply_T_eps(x, -1.0)


# ------------------------------------------------------------------- delays

def test_shift_matches_analytic_delay():
    axis = TimeAxis.spanning(DT, 10.0)
    t = axis.times
    x = Trace(np.exp(-((t - 4.0) / 0.3) ** 2), DT)
    y = shift(x, 1.2345)
    np.testing.assert_allclose(y.samples, np.exp(-((t - 5.2345) / 0.3) ** 2), atol=1e-9)
    assert correlation_peak(y, x) == pytest.approx(1.2345, abs=DT / 10)
