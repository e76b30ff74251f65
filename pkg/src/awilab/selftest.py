"""Fast invariant checks run by ``awilab selftest`` (a few seconds in total)."""
from __future__ import annotations

import math

import numpy as np

from .experiments import desk_model, desk_penalty, slope_fit
from .filter import TraceProblem, filter_diagnostics, g_kernel, solve_filter
from .forward import leading_term_trace
from .medium import ConstantMedium, GridMedium, LinearGradientMedium, travel_time
from .signal import (TimeAxis, Trace, WaveletKind, make_mother_wavelet, pulse_width,
                     rms_frequency, scale_wavelet)


def _wavelet_norms():
    w1 = make_mother_wavelet(WaveletKind.RICKER, 1e-3)
    errs = [abs(scale_wavelet(w1, lam).trace.norm() - 1) for lam in (1, 0.25, 1 / 16)]
    return max(errs) < 1e-6, "max |norm - 1| = %.1e" % max(errs)


def _heisenberg():
    w1 = make_mother_wavelet(WaveletKind.GAUSSIAN_DERIVATIVE, 1e-3)
    lk = pulse_width(w1.trace) * rms_frequency(w1.trace)
    return lk >= 0.5 - 1e-6, "l*k = %.6f" % lk


def _identity():
    dt = 1e-3
    axis = TimeAxis.spanning(dt, 8.0)
    w = scale_wavelet(make_mother_wavelet(WaveletKind.RICKER, dt), 0.125)
    p = leading_term_trace(1.0, 4.0, w, axis)
    d = leading_term_trace(1.0, 4.1, w, axis)
    sigma = 1e-3
    u = solve_filter(p, d, sigma)
    g = g_kernel(w, sigma, n_fft=u.n_fft)
    want = pulse_width(g) ** 2 + 0.01
    err = abs(filter_diagnostics(u, p, d).ratio ** 2 - want) / want
    return err < 1e-6, "relative error %.1e" % err


def _normal_equation():
    rng = np.random.default_rng(0)
    dt = 1e-2
    axis = TimeAxis.spanning(dt, 2.0)
    p = Trace(rng.standard_normal(axis.n), dt)
    d = Trace(rng.standard_normal(axis.n), dt)
    pb = TraceProblem(p, d)
    u = pb.solve(0.1)
    res = pb.ST(pb.S(u)) + 0.1 * u - pb.rhs()
    rel = math.sqrt(pb.dot(res, res) / pb.dot(pb.rhs(), pb.rhs()))
    return rel < 1e-8, "relative residual %.1e" % rel


def _eikonal():
    grid = GridMedium.sample(LinearGradientMedium(1500.0, 0.5), 201, 201, 20.0, (0.0, 0.0))
    exact = LinearGradientMedium(1500.0, 0.5)
    xs = (2000.0, 1000.0)
    errs = [abs(travel_time(grid, xs, xr) / travel_time(exact, xs, xr) - 1)
            for xr in ((100.0, 3900.0), (3900.0, 3900.0), (3500.0, 200.0))]
    const = abs(travel_time(ConstantMedium(2000.0), (0, 0), (3000.0, 4000.0)) - 2.5)
    return max(errs) < 1e-2 and const < 1e-12, "max relative error %.2e" % max(errs)


def _desk_model():
    S, T, d = desk_model(0)
    u0, j0 = desk_penalty(S, T, d, 0.0)
    _, ja = desk_penalty(S, T, d, 1e-3)
    target = 0.5 * np.sum((T @ u0) ** 2)
    err = abs((ja - j0) / 1e-6 - target) / target
    return err < 1e-2, "relative error %.1e" % err


def _slope():
    x = np.array([1, 2, 4, 8, 16.0])
    s, _, r2 = slope_fit(x, x ** -0.5)
    return abs(s + 0.5) < 1e-12 and r2 > 1 - 1e-12, "slope %.3f" % s


CHECKS = {
    "wavelet_unit_norm": _wavelet_norms,
    "heisenberg_bound": _heisenberg,
    "leading_term_identity": _identity,
    "normal_equation": _normal_equation,
    "eikonal_accuracy": _eikonal,
    "penalty_desk_model": _desk_model,
    "slope_fit": _slope,
}


def run_checks():
    out = []
    for name, fn in CHECKS.items():
        try:
            ok, detail = fn()
        except Exception as exc:  # report, don't abort the remaining checks
            ok, detail = False, "%s: %s" % (type(exc).__name__, exc)
        out.append((name, bool(ok), detail))
    return out
