"""
Objective functionals over gathers.

Constants follow each functional's usual definition:

* ``j_fwi``   = 1/2 sum ||pred - obs||^2
* ``j_awi``   = sum ||T u||^2 / ||u||^2
* ``j_mswi``  = sum ||T u||^2
* ``j_tilde`` = sum ||S u - d||^2 + sigma ||u||^2
* ``j_penalty_mswi`` carries a leading 1/2, ``j_penalty_awi`` does not.

Per-trace terms are reduced in sorted pair-id order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .filter import (TraceProblem, default_r, filter_diagnostics, g_kernel,
                     solve_filter)
from .forward import Gather
from .medium import DEFAULT_AMPLITUDE_BOUND, Geometry, amplitude, travel_time
from .signal import T_eps_multiplier, UndefinedRatioError, Wavelet

CONVENTIONS = {
    "fwi": "J = 1/2 sum_pairs ||pred - obs||^2",
    "awi": "J = sum_pairs ||T u||^2 / ||u||^2  [s^2]",
    "mswi": "J = sum_pairs ||T u||^2  [code units]",
}


class ConvergenceError(ArithmeticError):
    """Iterative solve stopped before reaching its tolerance."""


@dataclass
class ObjectiveReport:
    name: str
    total: float
    per_trace: dict
    sigma: float | None = None
    lam: float | None = None
    r: float | None = None
    note: str = ""

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("# %s: %s\n" % (self.name, self.note or CONVENTIONS.get(self.name, "")))
            fh.write("# sigma=%r, lambda=%r, r=%r\n" % (self.sigma, self.lam, self.r))
            fh.write("pair_id,value,ratio,residual_ratio\n")
            for pid, (v, ratio, rr) in self.per_trace.items():
                fh.write("%s,%r,%r,%r\n" % (pid, v, ratio, rr))
            fh.write("# total=%r\n" % self.total)


def _check_pairs(pred: Gather, obs: Gather) -> None:
    if set(pred.ids) != set(obs.ids):
        raise ValueError("pair sets differ: %s" % sorted(set(pred.ids) ^ set(obs.ids), key=str))
    if pred.axis != obs.axis:
        raise ValueError("predicted and observed gathers use different time axes")


def _report(name, per_trace, sigma=None, lam=None, r=None) -> ObjectiveReport:
    per_trace = dict(sorted(per_trace.items()))
    total = math.fsum(v for v, _, _ in per_trace.values())
    return ObjectiveReport(name, total, per_trace, sigma, lam, r, CONVENTIONS[name])


def j_fwi(pred: Gather, obs: Gather) -> ObjectiveReport:
    _check_pairs(pred, obs)
    nan = float("nan")
    return _report("fwi", {p: (0.5 * (pred[p] - obs[p]).norm() ** 2, nan, nan) for p in pred.ids})


def _filter_terms(pred, obs, sigma, max_lag):
    _check_pairs(pred, obs)
    out = {}
    for pid in pred.ids:
        if not np.any(obs[pid].samples):
            raise UndefinedRatioError("observed trace for pair %r is zero" % (pid,))
        u = solve_filter(pred[pid], obs[pid], sigma, max_lag)
        out[pid] = filter_diagnostics(u, pred[pid], obs[pid])
    return out


def j_awi(pred: Gather, obs: Gather, sigma: float, lam=None, r=None,
          max_lag: float | None = None) -> ObjectiveReport:
    terms = _filter_terms(pred, obs, sigma, max_lag)
    return _report("awi", {p: (d.ratio ** 2, d.ratio, d.residual_ratio) for p, d in terms.items()},
                   sigma, lam, r)


def j_mswi(pred: Gather, obs: Gather, sigma: float, lam=None, r=None,
           max_lag: float | None = None) -> ObjectiveReport:
    terms = _filter_terms(pred, obs, sigma, max_lag)
    return _report("mswi", {p: (d.norm_Tu ** 2, d.ratio, d.residual_ratio) for p, d in terms.items()},
                   sigma, lam, r)


def _problems(pred, obs):
    _check_pairs(pred, obs)
    return {pid: TraceProblem(pred[pid], obs[pid]) for pid in pred.ids}


def j_tilde(pred: Gather, obs: Gather, sigma: float) -> float:
    """Minimum of ``||S u - d||^2 + sigma ||u||^2`` summed over pairs."""
    return math.fsum(pb.quadratic(pb.solve(sigma), sigma) for pb in _problems(pred, obs).values())


def pcg(apply_A, b, x0=None, precond=None, dot=np.dot, tol: float = 1e-10,
        max_iter: int = 1000):
    """
    Preconditioned conjugate gradients for a symmetric positive definite operator.

    Stops when ``||b - A x|| <= tol * ||b||``; returns ``(x, iterations, relres)``.
    :raises ConvergenceError: if ``max_iter`` is reached first
    """
    precond = precond or (lambda r: r)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    bnorm = math.sqrt(dot(b, b))
    if bnorm == 0:
        return np.zeros_like(b), 0, 0.0
    r = b - apply_A(x)
    z = precond(r)
    p = z.copy()
    rz = dot(r, z)
    for it in range(max_iter + 1):
        relres = math.sqrt(dot(r, r)) / bnorm
        if relres <= tol:
            return x, it, relres
        if it == max_iter:
            break
        Ap = apply_A(p)
        step = rz / dot(p, Ap)
        x = x + step * p
        r = r - step * Ap
        z = precond(r)
        rz_new = dot(r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise ConvergenceError("CG stopped after %d iterations with relative residual %.3e"
                           % (max_iter, relres))


def penalty_solve(pb: TraceProblem, sigma: float, alpha: float, eps: float,
                  weight: float = 1.0, tol: float = 1e-10, max_iter: int = 2000):
    """
    Minimize ``||S u - d||^2 + sigma ||u||^2 + alpha^2 weight ||T_eps u||^2``.

    Returns ``(u, value)`` with ``u`` on the problem's circular lag grid.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if alpha < 0 or eps < 0:
        raise ValueError("alpha and eps must be non-negative")
    u0 = pb.solve(sigma)
    if alpha == 0:
        return u0, pb.quadratic(u0, sigma)
    m2 = alpha * alpha * weight * T_eps_multiplier(pb.lags, eps) ** 2

    def A(u):
        return pb.ST(pb.S(u)) + sigma * u + m2 * u

    base = np.fft.irfft(pb.power, pb.n_fft)[0] + sigma   # diag of S^T S + sigma
    if m2.max() <= 100 * base:
        precond = lambda r: pb.precondition(r, sigma)
    else:
        diag = base + m2
        precond = lambda r: r / diag
    u, _, _ = pcg(A, pb.rhs(), u0, precond, pb.dot, tol, max_iter)
    mu = np.sqrt(m2) * u
    return u, pb.quadratic(u, sigma) + pb.dot(mu, mu)


def _default_eps(pb: TraceProblem) -> float:
    return 1.0 / (pb.dt * (pb.n_fft // 2 - 1))


def j_penalty_mswi(pred: Gather, obs: Gather, sigma: float, alpha: float,
                   eps: float | None = None, tol: float = 1e-10, max_iter: int = 2000) -> float:
    """``1/2 min_u (||S u - d||^2 + sigma ||u||^2 + alpha^2 ||T_eps u||^2)`` summed over pairs."""
    total = []
    for pb in _problems(pred, obs).values():
        e = _default_eps(pb) if eps is None else eps
        total.append(0.5 * penalty_solve(pb, sigma, alpha, e, 1.0, tol, max_iter)[1])
    return math.fsum(total)


def j_penalty_awi(pred: Gather, obs: Gather, sigma: float, alpha: float,
                  eps: float | None = None, tol: float = 1e-10, max_iter: int = 2000) -> float:
    """As :func:`j_penalty_mswi` without the 1/2, with the T_eps term of each
    trace divided by ``||u_sigma||^2`` of that trace."""
    total = []
    for pid, pb in _problems(pred, obs).items():
        u0 = pb.solve(sigma)
        n2 = pb.dot(u0, u0)
        if n2 == 0:
            raise UndefinedRatioError("pair %r: zero filter, AWI weight undefined" % (pid,))
        e = _default_eps(pb) if eps is None else eps
        total.append(penalty_solve(pb, sigma, alpha, e, 1.0 / n2, tol, max_iter)[1])
    return math.fsum(total)


def travel_time_misfit(medium, medium_star, geometry: Geometry) -> float:
    """``sum (tau[medium] - tau[medium_star])^2``."""
    return math.fsum((travel_time(medium, xs, xr) - travel_time(medium_star, xs, xr)) ** 2
                     for _, (xs, xr) in geometry.items())


def mswi_weight(w1: Wavelet, r: float, a: float, a_star: float) -> float:
    """``W = (a*/a)^2 ||g_{1, r/a^2}||^2``."""
    return (a_star / a) ** 2 * g_kernel(w1, r / (a * a)).norm() ** 2


def weighted_tt_misfit(medium, medium_star, geometry: Geometry, w1: Wavelet, r: float,
                       amplitude_model: str = "unit",
                       amplitude_bound: float = DEFAULT_AMPLITUDE_BOUND) -> float:
    """``sum W * dtau^2``, the small-wavelength limit of ``lambda * J_MSWI``."""
    terms = []
    for _, (xs, xr) in geometry.items():
        a = amplitude(medium, xs, xr, amplitude_model, amplitude_bound)
        a_star = amplitude(medium_star, xs, xr, amplitude_model, amplitude_bound)
        dtau = travel_time(medium, xs, xr) - travel_time(medium_star, xs, xr)
        terms.append(mswi_weight(w1, r, a, a_star) * dtau ** 2)
    return math.fsum(terms)


__all__ = [
    "ConvergenceError", "ObjectiveReport", "default_r", "j_awi", "j_fwi", "j_mswi",
    "j_penalty_awi", "j_penalty_mswi", "j_tilde", "mswi_weight", "pcg", "penalty_solve",
    "travel_time_misfit", "weighted_tt_misfit",
]
