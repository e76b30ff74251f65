"""
Tikhonov-regularized ("pre-whitened") matching filters.

For a predicted trace p and observed trace d the filter ``u_sigma``
minimizes ``||p * u - d||^2 + sigma ||u||^2``.  The problem is solved on a
zero-padded periodic grid of length ``n_fft >= 2 (len(p) + len(d))`` where
convolution with p is diagonal:

    u_hat = conj(p_hat) d_hat / (|p_hat|^2 + sigma)

Transforms carry a dt weight (forward) and 1/dt (inverse), so sigma keeps
units of pressure^2 * time^2 and filters have units of 1/time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .signal import (Trace, UndefinedRatioError, Wavelet, apply_T, convolve,
                     next_pow2)


class DegenerateOperatorError(ValueError):
    """Convolution with an identically zero predicted trace."""


class TraceProblem:
    """
    One trace's regularized deconvolution, discretized on a periodic grid.

    Vectors ``u`` live on the circular lag grid ``lags`` (length ``n_fft``);
    inner products are dt-weighted.
    """

    def __init__(self, predicted: Trace, observed: Trace, n_fft: int | None = None):
        if not math.isclose(predicted.dt, observed.dt, rel_tol=1e-12):
            raise ValueError("predicted and observed dt differ")
        if abs(predicted.t0 - observed.t0) > 1e-9 * predicted.dt:
            raise ValueError("predicted and observed traces must share their start time")
        if not np.any(predicted.samples):
            raise DegenerateOperatorError("predicted trace is identically zero")
        self.dt = predicted.dt
        # twice the no-wrap minimum: at long wavelengths the filter's own
        # tails need lag room beyond the trace length
        self.n_fft = n_fft or 2 * next_pow2(predicted.n + observed.n)
        if self.n_fft < predicted.n + observed.n:
            raise ValueError("n_fft too short for a non-circular solve")
        self.p_hat = self.fwd(predicted.samples)
        self.d = np.zeros(self.n_fft)
        self.d[:observed.n] = observed.samples
        self.d_hat = self.fwd(self.d)
        self.power = np.abs(self.p_hat) ** 2
        k = np.arange(self.n_fft)
        self.lags = self.dt * np.where(k < self.n_fft // 2, k, k - self.n_fft)

    def fwd(self, x):
        return self.dt * np.fft.rfft(x, self.n_fft)

    def inv(self, xh):
        return np.fft.irfft(xh, self.n_fft) / self.dt

    def dot(self, x, y) -> float:
        return float(self.dt * np.dot(x, y))

    def S(self, u):
        return self.inv(self.p_hat * self.fwd(u))

    def ST(self, r):
        return self.inv(np.conj(self.p_hat) * self.fwd(r))

    def rhs(self):
        return self.inv(np.conj(self.p_hat) * self.d_hat)

    def solve(self, sigma: float) -> np.ndarray:
        if not sigma > 0:
            raise ValueError("sigma must be positive, got %r" % sigma)
        return self.inv(np.conj(self.p_hat) * self.d_hat / (self.power + sigma))

    def quadratic(self, u, sigma: float) -> float:
        """``||S u - d||^2 + sigma ||u||^2``."""
        r = self.S(u) - self.d
        return self.dot(r, r) + sigma * self.dot(u, u)

    def precondition(self, r, sigma: float):
        return self.inv(self.fwd(r) / (self.power + sigma))

    def data_norm(self) -> float:
        return math.sqrt(self.dot(self.d, self.d))

    def window(self, u, max_lag: float | None = None) -> tuple[Trace, float]:
        """Cut the circular vector to a symmetric lag window; also return the
        fraction of ``||u||^2`` left outside it."""
        half = self.n_fft // 2 - 1
        if max_lag is not None:
            half = min(half, int(round(max_lag / self.dt)))
        idx = np.arange(-half, half + 1) % self.n_fft
        inside = u[idx]
        total = np.dot(u, u)
        outside = 0.0 if total == 0 else max(1.0 - np.dot(inside, inside) / total, 0.0)
        return Trace(inside, self.dt, -half * self.dt), outside

    def embed(self, u: Trace) -> np.ndarray:
        """Inverse of :meth:`window`: place a lag-axis trace on the circular grid."""
        k0 = int(round(u.t0 / self.dt))
        out = np.zeros(self.n_fft)
        out[(k0 + np.arange(u.n)) % self.n_fft] = u.samples
        return out


@dataclass(frozen=True, eq=False)
class MatchingFilter:
    trace: Trace
    sigma: float
    outside_energy: float = 0.0
    n_fft: int = 0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        half = (self.trace.n - 1) / 2
        if self.trace.n % 2 != 1 or abs(self.trace.t0 + half * self.trace.dt) > 1e-9 * self.trace.dt:
            raise ValueError("matching filter lag axis must be symmetric about 0")

    @property
    def max_lag(self) -> float:
        return -self.trace.t0

    def to_csv(self, path, diagnostics: "FilterDiagnostics | None" = None) -> None:
        with open(path, "w") as fh:
            fh.write("lag,value\n")
            for t, v in zip(self.trace.times, self.trace.samples):
                fh.write("%.12g,%r\n" % (t, float(v)))
            if diagnostics is not None:
                fh.write("# norm_u=%r, norm_Tu=%r, ratio=%r, residual_ratio=%r\n"
                         % (diagnostics.norm_u, diagnostics.norm_Tu,
                            diagnostics.ratio, diagnostics.residual_ratio))


def solve_filter(predicted: Trace, observed: Trace, sigma: float,
                 max_lag: float | None = None, n_fft: int | None = None) -> MatchingFilter:
    """
    Regularized matching filter ``u`` with ``predicted * u ~ observed``.

    :param sigma: Tikhonov weight (pressure^2 * time^2), must be positive
    :param max_lag: half-width of the returned lag window; defaults to the
        whole non-wrapped half of the FFT grid
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive, got %r" % sigma)
    prob = TraceProblem(predicted, observed, n_fft)
    tr, outside = prob.window(prob.solve(sigma), max_lag)
    return MatchingFilter(tr, float(sigma), outside, prob.n_fft)


def g_kernel(w: Wavelet | Trace, mu: float, n_fft: int | None = None,
             max_lag: float | None = None) -> Trace:
    """
    Regularized approximate delta ``g`` with ``g_hat = |w_hat|^2 / (|w_hat|^2 + mu)``.

    Real and even; returned on a symmetric lag axis.
    """
    if not mu > 0:
        raise ValueError("mu must be positive, got %r" % mu)
    x = w.trace if isinstance(w, Wavelet) else w
    n_fft = n_fft or next_pow2(8 * x.n)
    power = np.abs(x.dt * np.fft.rfft(x.samples, n_fft)) ** 2
    g = np.fft.irfft(power / (power + mu), n_fft) / x.dt
    half = n_fft // 2 - 1
    if max_lag is not None:
        half = min(half, int(round(max_lag / x.dt)))
    return Trace(g[np.arange(-half, half + 1) % n_fft], x.dt, -half * x.dt)


def spectral_peak_power(w: Wavelet | Trace, n_fft: int | None = None) -> float:
    """``max_w |w_hat(w)|^2`` (dt-weighted transform)."""
    x = w.trace if isinstance(w, Wavelet) else w
    n_fft = n_fft or next_pow2(8 * x.n)
    return float(np.max(np.abs(x.dt * np.fft.rfft(x.samples, n_fft)) ** 2))


def default_r(w1: Wavelet, a: float = 1.0, eps: float = 1e-2) -> float:
    """Water level ``r = eps * max |a w1_hat|^2``; then ``sigma = r * lambda``."""
    return eps * a * a * spectral_peak_power(w1)


@dataclass(frozen=True)
class FilterDiagnostics:
    norm_u: float
    norm_Tu: float
    ratio: float
    residual_norm: float
    data_norm: float
    residual_ratio: float


def filter_diagnostics(u: MatchingFilter, predicted: Trace, observed: Trace) -> FilterDiagnostics:
    """Norms of ``u`` and ``T u`` and the filtered residual ``predicted * u - observed``."""
    if not math.isclose(predicted.dt, u.trace.dt, rel_tol=1e-12):
        raise ValueError("filter and traces must share dt")
    norm_u = u.trace.norm()
    norm_Tu = apply_T(u.trace).norm()
    ratio = norm_Tu / norm_u if norm_u > 0 else float("nan")
    data_norm = observed.norm()
    if data_norm == 0:
        raise UndefinedRatioError("observed trace is zero: residual ratio undefined")
    conv = convolve(predicted, u.trace)
    k0 = int(round((observed.t0 - conv.t0) / conv.dt))
    res = conv.samples.copy()
    lo, hi = max(k0, 0), min(k0 + observed.n, res.size)
    res[lo:hi] -= observed.samples[lo - k0:hi - k0]
    extra = observed.samples[:max(-k0, 0)].tolist() + observed.samples[hi - k0:].tolist()
    residual_norm = math.sqrt(conv.dt * (np.dot(res, res) + np.dot(extra, extra)))
    return FilterDiagnostics(norm_u, norm_Tu, ratio, residual_norm, data_norm,
                             residual_norm / data_norm)


def edge_fraction(u: MatchingFilter, decade: float = 0.1) -> float:
    """Share of ``||T u||^2`` carried by the outermost ``decade`` of lag samples."""
    t = u.trace.times
    tu2 = (t * u.trace.samples) ** 2
    total = tu2.sum()
    if total == 0:
        return 0.0
    edge = np.abs(t) >= (1 - decade) * u.max_lag
    return float(tu2[edge].sum() / total)
