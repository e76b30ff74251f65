"""
Time series containers, wavelet families and spectral operators.

All continuum quantities are approximated with dt-weighted sums:
``||x||^2 = dt * sum(x**2)`` and the forward transform is
``x_hat(w) = dt * sum(x_n exp(-i w t_n))``, so that filters and
regularization weights keep their physical units after resampling.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class UndefinedRatioError(ValueError):
    """A ratio (pulse width, RMS frequency, AWI term) of a zero trace."""


class WaveletKind(str, enum.Enum):
    GAUSSIAN_DERIVATIVE = "gaussian_derivative"
    RICKER = "ricker"


def next_pow2(n: int) -> int:
    return 1 << max(int(n) - 1, 0).bit_length()


@dataclass(frozen=True)
class TimeAxis:
    """Uniform sampling ``t_k = t0 + k*dt`` for ``k = 0..n-1``."""

    dt: float
    t0: float
    n: int

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive, got %r" % self.dt)
        if self.n < 1:
            raise ValueError("axis needs at least one sample")

    @classmethod
    def spanning(cls, dt: float, t_max: float, t0: float = 0.0) -> "TimeAxis":
        return cls(dt, t0, int(round((t_max - t0) / dt)) + 1)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    @property
    def t_end(self) -> float:
        return self.t0 + (self.n - 1) * self.dt


@dataclass(frozen=True, eq=False)
class Trace:
    samples: np.ndarray
    dt: float
    t0: float = 0.0

    def __post_init__(self):
        x = np.array(self.samples, dtype=float)
        if x.ndim != 1 or x.size == 0:
            raise ValueError("trace samples must be a non-empty 1D sequence")
        if not np.all(np.isfinite(x)):
            raise ValueError("trace samples must be finite")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError("dt must be positive, got %r" % self.dt)
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "t0", float(self.t0))

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def axis(self) -> TimeAxis:
        return TimeAxis(self.dt, self.t0, self.n)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    def norm(self) -> float:
        return float(np.sqrt(self.dt * np.dot(self.samples, self.samples)))

    def norm_l1(self) -> float:
        return float(self.dt * np.abs(self.samples).sum())

    def replace(self, samples) -> "Trace":
        return Trace(samples, self.dt, self.t0)

    def __mul__(self, scale: float) -> "Trace":
        return self.replace(self.samples * scale)

    __rmul__ = __mul__

    def __add__(self, other: "Trace") -> "Trace":
        _check_same_axis(self, other)
        return self.replace(self.samples + other.samples)

    def __sub__(self, other: "Trace") -> "Trace":
        _check_same_axis(self, other)
        return self.replace(self.samples - other.samples)

    def to_csv(self, path) -> None:
        """Write ``t,value`` rows (times carry 12 significant digits)."""
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "value"])
            for t, v in zip(self.times, self.samples):
                wr.writerow(["%.12g" % t, repr(float(v))])

    @classmethod
    def from_csv(cls, path) -> "Trace":
        data = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
        t, x = data[:, 0], data[:, 1]
        dt = (t[-1] - t[0]) / (len(t) - 1) if len(t) > 1 else 1.0
        return cls(x, dt, t[0])


def _check_same_axis(a: Trace, b: Trace) -> None:
    if a.n != b.n or not np.isclose(a.dt, b.dt, rtol=1e-12) or \
            not np.isclose(a.t0, b.t0, rtol=0, atol=1e-9 * a.dt):
        raise ValueError("traces do not share a time axis")


@dataclass(frozen=True, eq=False)
class Wavelet:
    trace: Trace
    lambda_scale: float
    kind: WaveletKind
    half_support: float = field(default=8.0)
    norm_const: float = field(default=1.0, repr=False)

    @property
    def dt(self) -> float:
        return self.trace.dt


@dataclass(frozen=True, eq=False)
class Spectrum:
    """dt-weighted DFT coefficients; forward sign ``exp(-i w t)``.

    ``coefficients[k]`` approximates the continuum transform at
    ``omega[k]`` for a signal whose first sample sits at time 0; the
    trace origin is carried separately in ``t0``.
    """

    coefficients: np.ndarray
    domega: float
    t0: float = 0.0
    convention: str = "forward exp(-i omega t), dt-weighted"

    @property
    def omega(self) -> np.ndarray:
        n = self.coefficients.size
        return np.fft.fftfreq(n, d=1.0) * n * self.domega


def spectrum(x: Trace, n_fft: int | None = None) -> Spectrum:
    n_fft = x.n if n_fft is None else int(n_fft)
    if n_fft < x.n:
        raise ValueError("n_fft shorter than the trace")
    return Spectrum(x.dt * np.fft.fft(x.samples, n_fft),
                    2 * np.pi / (n_fft * x.dt), x.t0)


def _profile(kind: WaveletKind, s: np.ndarray) -> np.ndarray:
    g = np.exp(-0.5 * s * s)
    if kind is WaveletKind.GAUSSIAN_DERIVATIVE:
        return -s * g
    return (1.0 - s * s) * g


def _sample_wavelet(kind, half_support, lam, dt, norm_const) -> np.ndarray:
    m = int(np.floor(half_support * lam / dt + 1e-9))
    t = dt * np.arange(-m, m + 1)
    s = t / lam
    w = _profile(kind, s)
    if kind is WaveletKind.RICKER:
        # truncation leaves a small DC offset; remove it with an even bump
        bump = np.exp(-0.5 * s * s)
        w = w - (w.sum() / bump.sum()) * bump
    return norm_const * lam ** -0.5 * w


def make_mother_wavelet(kind, dt: float, half_support: float = 8.0) -> Wavelet:
    """
    Unit-norm, zero-mean mother wavelet ``w_1`` on a symmetric grid.

    ``gaussian_derivative`` is ``d/dt exp(-t^2/2)``; ``ricker`` is minus its
    second derivative, ``(1 - t^2) exp(-t^2/2)``. Times are in seconds, so
    the underlying Gaussian has unit standard deviation.

    :param half_support: the wavelet is sampled on ``|t| <= half_support``;
        at least 4 (Gaussian standard deviations) is required.
    """
    kind = WaveletKind(kind)
    if not (dt > 0 and half_support > 0):
        raise ValueError("dt and half_support must be positive")
    if half_support < 4.0:
        raise ValueError("half_support must cover at least 4 Gaussian widths")
    if half_support / dt < 8:
        raise ValueError("dt too coarse for the requested support")
    raw = _sample_wavelet(kind, half_support, 1.0, dt, 1.0)
    k = 1.0 / np.sqrt(dt * np.dot(raw, raw))
    w = _sample_wavelet(kind, half_support, 1.0, dt, k)
    m = (w.size - 1) // 2
    return Wavelet(Trace(w, dt, -m * dt), 1.0, kind, half_support, k)


def scale_wavelet(w1: Wavelet, lam: float) -> Wavelet:
    """``w_lam(t) = lam^(-1/2) w_1(t/lam)``, sampled on the same dt."""
    if not (0 < lam <= 1):
        raise ValueError("lambda must lie in (0, 1], got %r" % lam)
    if w1.lambda_scale != 1.0:
        raise ValueError("scale_wavelet expects a mother wavelet")
    dt = w1.dt
    w = _sample_wavelet(w1.kind, w1.half_support, lam, dt, w1.norm_const)
    if w.size < 5:
        raise ValueError("lambda=%g leaves too few samples at dt=%g" % (lam, dt))
    m = (w.size - 1) // 2
    return Wavelet(Trace(w, dt, -m * dt), float(lam), w1.kind,
                   w1.half_support, w1.norm_const)


def source_waveform(w: Wavelet) -> Trace:
    """Cumulative integral of the wavelet (the source pulse with rho = 1)."""
    x = w.trace
    return x.replace(np.cumsum(x.samples) * x.dt)


def pulse_width(x: Trace) -> float:
    """RMS width ``||T x|| / ||x||`` about t = 0."""
    nx = x.norm()
    if nx == 0:
        raise UndefinedRatioError("pulse width of a zero trace")
    return apply_T(x).norm() / nx


def rms_frequency(x: Trace) -> float:
    """
    RMS angular frequency.

    The spectral second moment carries the Parseval factor 1/(2 pi), which
    makes this equal to ``||x'|| / ||x||``; with this normalization the
    Heisenberg bound reads ``pulse_width * rms_frequency >= 1/2`` (or
    ``>= 1/(4 pi)`` after dividing by ``2 pi``).
    """
    nx = x.norm()
    if nx == 0:
        raise UndefinedRatioError("RMS frequency of a zero trace")
    spec = spectrum(x)
    num = np.sum((spec.omega * np.abs(spec.coefficients)) ** 2) * spec.domega / (2 * np.pi)
    return float(np.sqrt(num) / nx)


def heisenberg_products(x: Trace) -> tuple[float, float]:
    """Return ``(l*k, l*k/(2 pi))``: angular and cyclic normalizations."""
    lk = pulse_width(x) * rms_frequency(x)
    return lk, lk / (2 * np.pi)


def convolve(a: Trace, b: Trace) -> Trace:
    """Linear convolution approximating ``int a(s) b(t-s) ds``."""
    if not np.isclose(a.dt, b.dt, rtol=1e-12):
        raise ValueError("convolve needs equal dt (%g vs %g)" % (a.dt, b.dt))
    n = a.n + b.n - 1
    nfft = next_pow2(n)
    c = np.fft.irfft(np.fft.rfft(a.samples, nfft) * np.fft.rfft(b.samples, nfft), nfft)
    return Trace(c[:n] * a.dt, a.dt, a.t0 + b.t0)


def unit_delta(dt: float, t: float = 0.0) -> Trace:
    """Single sample of height 1/dt: the identity for :func:`convolve`."""
    return Trace([1.0 / dt], dt, t)


def hilbert_multiplier(omega: np.ndarray, p: int) -> np.ndarray:
    """``(-i sgn w)^p``; the w = 0 (and Nyquist) bins are zeroed for p > 0."""
    if p < 0:
        raise ValueError("Hilbert power must be non-negative")
    if p == 0:
        return np.ones_like(omega, dtype=complex)
    m = (-1j * np.sign(omega)) ** p
    n = omega.size
    if n % 2 == 0:
        m[n // 2] = 0.0
    return m


def hilbert_power(x: Trace, p: int) -> Trace:
    """Apply the Hilbert transform p times (circularly on the trace window)."""
    if p == 0:
        return x
    omega = np.fft.fftfreq(x.n, d=x.dt) * 2 * np.pi
    y = np.fft.ifft(np.fft.fft(x.samples) * hilbert_multiplier(omega, p))
    return x.replace(y.real)


def envelope(x: Trace) -> Trace:
    """Modulus of the analytic signal ``x + i H x``."""
    return x.replace(np.hypot(x.samples, hilbert_power(x, 1).samples))


def apply_T(x: Trace) -> Trace:
    return x.replace(x.samples * x.times)


def T_eps_multiplier(t: np.ndarray, eps: float) -> np.ndarray:
    if eps < 0:
        raise ValueError("eps must be non-negative")
    return t / np.sqrt(1.0 + (eps * t) ** 2)


def apply_T_eps(x: Trace, eps: float) -> Trace:
    """Multiply by ``t / sqrt(1 + eps^2 t^2)``; equals :func:`apply_T` at eps = 0."""
    if eps == 0:
        return apply_T(x)
    return x.replace(x.samples * T_eps_multiplier(x.times, eps))


def shift(x: Trace, tau: float, pad: int | None = None) -> Trace:
    """
    Band-limited delay ``x(t - tau)`` on the same axis (phase ramp).

    The trace is zero padded to ``pad`` samples (default: next power of two
    of twice its length) before the phase ramp, so content leaving the
    window is dropped rather than wrapped.
    """
    nfft = next_pow2(2 * x.n) if pad is None else int(pad)
    spec = np.fft.rfft(x.samples, nfft)
    omega = 2 * np.pi * np.fft.rfftfreq(nfft, d=x.dt)
    y = np.fft.irfft(spec * np.exp(-1j * omega * tau), nfft)[:x.n]
    return x.replace(y)


def correlation_peak(x: Trace, y: Trace) -> float:
    """
    Lag (seconds) maximizing the cross-correlation ``int x(t) y(t - lag) dt``,
    refined by a parabola through the peak sample and its neighbours.
    """
    if not np.isclose(x.dt, y.dt, rtol=1e-12):
        raise ValueError("dt mismatch")
    n = x.n + y.n - 1
    nfft = next_pow2(n)
    cc = np.fft.irfft(np.fft.rfft(x.samples, nfft) *
                      np.conj(np.fft.rfft(y.samples, nfft)), nfft)
    cc = np.concatenate([cc[nfft - (y.n - 1):], cc[:x.n]])
    k = int(np.argmax(cc))
    frac = 0.0
    if 0 < k < cc.size - 1:
        ym, y0, yp = cc[k - 1], cc[k], cc[k + 1]
        den = ym - 2 * y0 + yp
        if den != 0:
            frac = 0.5 * (ym - yp) / den
    lag_samples = k - (y.n - 1) + frac
    return lag_samples * x.dt + (x.t0 - y.t0)
