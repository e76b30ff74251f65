"""
Verification harnesses: wavelength sweeps, regularization coupling,
remainder robustness, penalty limits, 1-D model scans and descent, and the
two-arrival counterexample.  Every harness returns a :class:`SweepTable`
(or :class:`ScanResult` / :class:`DescentResult`) that writes plain CSV.
"""
from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .filter import (TraceProblem, default_r, filter_diagnostics, g_kernel,
                     solve_filter)
from .forward import ArrivalSet, Gather, RemainderSpec, model_gather, multi_arrival_trace
from .medium import (ConstantMedium, Geometry, LinearGradientMedium, amplitude,
                     travel_time)
from .objectives import (j_awi, j_fwi, j_mswi, pcg, penalty_solve,
                         travel_time_misfit, weighted_tt_misfit)
from .signal import (TimeAxis, Trace, WaveletKind, envelope, make_mother_wavelet,
                     pulse_width, scale_wavelet, T_eps_multiplier)

DEFAULT_LAMBDAS = tuple(2.0 ** -k for k in range(7))


# ---------------------------------------------------------------- tables

@dataclass
class SweepTable:
    variable: str
    rows: list = field(default_factory=list)
    fitted: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    def add(self, x: float, **values) -> None:
        self.rows.append((float(x), dict(values)))

    def column(self, name: str) -> np.ndarray:
        return np.array([vals[name] for _, vals in self.rows], dtype=float)

    @property
    def x(self) -> np.ndarray:
        return np.array([x for x, _ in self.rows])

    def fit(self, name: str, mask=None) -> tuple[float, float, float]:
        xs, ys = self.x, self.column(name)
        if mask is not None:
            xs, ys = xs[mask], ys[mask]
        self.fitted[name] = slope_fit(xs, ys)
        return self.fitted[name]

    def to_csv(self, path) -> None:
        cols = list(self.rows[0][1]) if self.rows else []
        with open(path, "w") as fh:
            fh.write(",".join([self.variable] + cols) + "\n")
            for x, vals in self.rows:
                fh.write(",".join([repr(x)] + [repr(float(vals[c])) for c in cols]) + "\n")
            for name, (s, b, r2) in self.fitted.items():
                fh.write("# slope(%s)=%r, intercept=%r, r2=%r\n" % (name, s, b, r2))
            for k, v in self.notes.items():
                fh.write("# %s=%r\n" % (k, v))


def slope_fit(xs, ys) -> tuple[float, float, float]:
    """Least-squares line through ``(log x, log y)``: ``(slope, intercept, r^2)``."""
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    if xs.size < 4:
        raise ValueError("slope fit needs at least 4 points, got %d" % xs.size)
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("slope fit needs positive values")
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    sst = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / sst if sst > 0 else 1.0
    return float(slope), float(intercept), float(r2)


def _pmap(fn, items, threads: int = 1):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(threads) as pool:
        return list(pool.map(fn, items))


# -------------------------------------------------------------- scenario

@dataclass
class Scenario:
    """Everything a harness needs: predicted/true media, geometry, wavelet, axis."""

    medium: object
    medium_star: object
    geometry: Geometry
    kind: WaveletKind = WaveletKind.RICKER
    dt: float = 1e-3
    t_max: float = 24.0
    half_support: float = 8.0
    lambdas: tuple = DEFAULT_LAMBDAS
    r: float | None = None
    eps_r: float = 1e-2
    remainder: RemainderSpec | None = None
    remainder_star: RemainderSpec | None = None
    amplitude_model: str = "unit"
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        self.kind = WaveletKind(self.kind)
        if any(not 0 < lam <= 1 for lam in self.lambdas):
            raise ValueError("lambda values must lie in (0, 1]")
        if self.r is not None and not self.r > 0:
            raise ValueError("r must be positive")
        self._w1 = None

    @property
    def axis(self) -> TimeAxis:
        return TimeAxis.spanning(self.dt, self.t_max)

    @property
    def mother(self):
        if self._w1 is None:
            self._w1 = make_mother_wavelet(self.kind, self.dt, self.half_support)
        return self._w1

    @property
    def r_value(self) -> float:
        """Configured ``r``, else ``eps_r`` times peak predicted spectral power."""
        if self.r is not None:
            return self.r
        a = max(amplitude(self.medium, s, x, self.amplitude_model) for _, (s, x) in self.geometry.items())
        return default_r(self.mother, a, self.eps_r)

    def wavelet(self, lam: float):
        return scale_wavelet(self.mother, lam)

    def gathers(self, lam: float, medium=None, remainder: bool = True) -> tuple[Gather, Gather]:
        """Predicted (``medium`` or the scenario's) and observed gathers at ``lam``."""
        w = self.wavelet(lam)
        rem = self.remainder if remainder else None
        rem_star = self.remainder_star if remainder else None
        pred = model_gather(medium or self.medium, self.geometry, w, self.axis, rem, self.amplitude_model)
        obs = model_gather(self.medium_star, self.geometry, w, self.axis, rem_star, self.amplitude_model)
        return pred, obs

    def delays(self, medium=None) -> dict:
        return {pid: travel_time(self.medium_star, s, x) - travel_time(medium or self.medium, s, x)
                for pid, (s, x) in self.geometry.items()}

    def replace(self, **kw) -> "Scenario":
        return dataclasses.replace(self, **kw)


def constant_media_scenario(**kw) -> Scenario:
    """Four pairs in c = 2000 m/s against true c* = 2100 m/s."""
    geo = Geometry(tuple(((0.0, 0.0), (x, 500.0)) for x in (20000.0, 22000.0, 24000.0, 26000.0)))
    base = dict(medium=ConstantMedium(2000.0), medium_star=ConstantMedium(2100.0), geometry=geo)
    base.update(kw)
    return Scenario(**base)


def remainder_scenario(**kw) -> Scenario:
    kw.setdefault("t_max", 32.0)
    kw.setdefault("remainder", RemainderSpec(b0=0.2, decay_delta=4.0, scale_B=0.05))
    kw.setdefault("remainder_star", RemainderSpec(b0=0.3, decay_delta=4.0, scale_B=0.08))
    return constant_media_scenario(**kw)


# ---------------------------------------------------------- wavelength sweeps

def lambda_sweep(sc: Scenario, lambdas=None, r: float | None = None) -> SweepTable:
    """
    ``J_AWI``, ``lambda J_MSWI``, filter norms and widths for each wavelength
    with ``sigma = r lambda``.  On remainder-free data also checks the exact
    identity ``ratio^2 = l(g)^2 + dtau^2`` per trace.
    """
    lambdas = tuple(lambdas or sc.lambdas)
    r = sc.r_value if r is None else r
    tt = travel_time_misfit(sc.medium, sc.medium_star, sc.geometry)
    wtt = weighted_tt_misfit(sc.medium, sc.medium_star, sc.geometry, sc.mother, r, sc.amplitude_model)
    dtau = sc.delays()
    amps = {pid: amplitude(sc.medium, s, x, sc.amplitude_model) for pid, (s, x) in sc.geometry.items()}
    leading_only = (sc.remainder is None or sc.remainder.is_zero) and \
                   (sc.remainder_star is None or sc.remainder_star.is_zero)

    def point(lam):
        sigma = r * lam
        pred, obs = sc.gathers(lam)
        awi, mswi = j_awi(pred, obs, sigma, lam, r), j_mswi(pred, obs, sigma, lam, r)
        norms, widths, ident = [], [], []
        for pid in pred.ids:
            u_self = solve_filter(pred[pid], pred[pid], sigma)
            widths.append(pulse_width(u_self.trace))
            u = solve_filter(pred[pid], obs[pid], sigma)
            norms.append(u.trace.norm())
            if leading_only:
                g = g_kernel(sc.wavelet(lam), sigma / amps[pid] ** 2, n_fft=u.n_fft)
                expected = pulse_width(g) ** 2 + dtau[pid] ** 2
                ident.append(abs(awi.per_trace[pid][0] - expected) / expected)
        ratios = np.array([v[1] for v in awi.per_trace.values()])
        return dict(
            j_awi=awi.total, tt_misfit=tt, awi_err=abs(awi.total - tt),
            awi_rel_err=abs(awi.total - tt) / tt,
            lam_j_mswi=lam * mswi.total, weighted_tt=wtt,
            mswi_rel_err=abs(lam * mswi.total - wtt) / wtt,
            ratio_err=float(np.max(np.abs(ratios - np.abs([dtau[p] for p in awi.per_trace])))),
            norm_u=float(np.mean(norms)), l_filter=float(np.mean(widths)),
            residual_ratio=max(v[2] for v in awi.per_trace.values()),
            identity_err=max(ident) if ident else float("nan"))

    table = SweepTable("lambda")
    for lam, vals in zip(lambdas, _pmap(point, lambdas, sc.threads)):
        table.add(lam, **vals)
    if len(table.rows) >= 4:
        for q in ("awi_err", "norm_u", "l_filter", "ratio_err"):
            table.fit(q)
    table.notes["r"] = r
    return table


def sigma_coupling_sweep(sc: Scenario, lam: float, sigmas=None) -> SweepTable:
    """Largest per-trace residual ratio against ``sigma / lambda``; notes the
    ``sigma/lambda`` at which it crosses 1/2 (log-interpolated)."""
    r = sc.r_value
    if sigmas is None:
        sigmas = r * lam * np.logspace(-4, 4, 33)
    pred, obs = sc.gathers(lam)
    table = SweepTable("sigma_over_lambda")
    for s in sorted(sigmas):
        rr = [filter_diagnostics(solve_filter(pred[p], obs[p], s), pred[p], obs[p]).residual_ratio
              for p in pred.ids]
        table.add(s / lam, residual_ratio=max(rr), sigma=s)
    x, y = table.x, table.column("residual_ratio")
    table.notes["monotone"] = bool(np.all(np.diff(y) >= -1e-12))
    idx = np.nonzero((y[:-1] <= 0.5) & (y[1:] > 0.5))[0]
    if idx.size:
        i = idx[0]
        f = (0.5 - y[i]) / (y[i + 1] - y[i])
        table.notes["crossing_sigma_over_lambda"] = float(np.exp(np.log(x[i]) + f * np.log(x[i + 1] / x[i])))
    table.notes["default_r"] = r
    return table


def remainder_effect(sc: Scenario, lambdas=None, r: float | None = None) -> SweepTable:
    """Filter change caused by the Green's-function remainder, relative to data size."""
    lambdas = tuple(lambdas or sc.lambdas)
    r = sc.r_value if r is None else r
    tt = travel_time_misfit(sc.medium, sc.medium_star, sc.geometry)

    def point(lam):
        sigma = r * lam
        pred, obs = sc.gathers(lam)
        pred0, obs0 = sc.gathers(lam, remainder=False)
        du, dtu = [], []
        for pid in pred.ids:
            u = solve_filter(pred[pid], obs[pid], sigma).trace
            u0 = solve_filter(pred0[pid], obs0[pid], sigma).trace
            d_norm = obs[pid].norm()
            diff = u - u0
            du.append(diff.norm() / d_norm)
            dtu.append(Trace(diff.samples * diff.times, diff.dt, diff.t0).norm() / d_norm)
        awi = j_awi(pred, obs, sigma, lam, r).total
        return dict(du_rel=float(np.mean(du)), dTu_rel=float(np.mean(dtu)),
                    j_awi=awi, awi_err=abs(awi - tt), awi_rel_err=abs(awi - tt) / tt)

    table = SweepTable("lambda")
    for lam, vals in zip(lambdas, _pmap(point, lambdas, sc.threads)):
        table.add(lam, **vals)
    if len(table.rows) >= 4 and np.all(table.column("du_rel") > 0):
        for q in ("du_rel", "dTu_rel", "awi_err"):
            table.fit(q)
    return table


# ---------------------------------------------------------------- penalties

def desk_model(seed: int = 0, n: int = 8):
    """Random coercive ``S`` (singular values in [0.5, 2]), diagonal ``T`` and data ``d``."""
    rng = np.random.default_rng(seed)
    q1, _ = np.linalg.qr(rng.standard_normal((n, n)))
    q2, _ = np.linalg.qr(rng.standard_normal((n, n)))
    S = q1 @ np.diag(rng.uniform(0.5, 2.0, n)) @ q2.T
    T = np.diag(rng.standard_normal(n))
    d = rng.standard_normal(n)
    return S, T, d


def desk_penalty(S, T, d, alpha: float):
    """``(u_alpha, J_alpha)`` for ``J_alpha = 1/2 (||S u - d||^2 + alpha^2 ||T u||^2)`` via CG."""
    A = S.T @ S + alpha ** 2 * (T.T @ T)
    u, _, _ = pcg(lambda x: A @ x, S.T @ d, tol=1e-13, max_iter=10 * len(d))
    return u, 0.5 * (np.sum((S @ u - d) ** 2) + alpha ** 2 * np.sum((T @ u) ** 2))


def desk_model_check(seed: int = 0, alphas=(1e-1, 1e-2, 1e-3), n: int = 8) -> SweepTable:
    """``(J_alpha - J_0)/alpha^2`` against ``1/2 ||T u_0||^2`` on the finite model."""
    S, T, d = desk_model(seed, n)
    u0, j0 = desk_penalty(S, T, d, 0.0)
    target = 0.5 * np.sum((T @ u0) ** 2)
    table = SweepTable("alpha")
    for a in sorted(alphas, reverse=True):
        _, ja = desk_penalty(S, T, d, a)
        lim = (ja - j0) / a ** 2
        table.add(a, limit=lim, target=target, rel_err=abs(lim - target) / target)
    return table


def penalty_limit_check(sc: Scenario, lam: float, alphas=(1e-1, 3e-2, 1e-2, 3e-3, 1e-3),
                        eps: float | None = None, sigma: float | None = None) -> SweepTable:
    """
    ``(J_alpha - J_0) / alpha^2`` for both penalty objectives against their
    predicted limits.  ``alphas`` are multiples of the natural scale
    ``sqrt(J_0 / sum ||T_eps u||^2)``.  The MSWI-penalty objective carries a
    1/2, so its limit is ``1/2 sum ||T_eps u||^2``; the column ``mswi_ratio``
    reports ``2 (J_alpha - J_0)/alpha^2`` over ``sum ||T_eps u||^2``.
    """
    sigma = sc.r_value * lam if sigma is None else sigma
    pred, obs = sc.gathers(lam)
    probs = [TraceProblem(pred[p], obs[p]) for p in pred.ids]
    eps = 1.0 / (probs[0].dt * (probs[0].n_fft // 2 - 1)) if eps is None else eps
    u0 = [pb.solve(sigma) for pb in probs]
    j0 = [pb.quadratic(u, sigma) for pb, u in zip(probs, u0)]
    teu2 = [pb.dot(T_eps_multiplier(pb.lags, eps) * u, T_eps_multiplier(pb.lags, eps) * u)
            for pb, u in zip(probs, u0)]
    n2 = [pb.dot(u, u) for pb, u in zip(probs, u0)]
    awi_eps = math.fsum(t / n for t, n in zip(teu2, n2))
    scale = math.sqrt(math.fsum(j0) / math.fsum(teu2))
    table = SweepTable("alpha")
    for a_rel in sorted(alphas, reverse=True):
        a = a_rel * scale
        jm = [penalty_solve(pb, sigma, a, eps)[1] for pb in probs]
        ja = [penalty_solve(pb, sigma, a, eps, 1.0 / n)[1] for pb, n in zip(probs, n2)]
        mswi_lim = (0.5 * math.fsum(jm) - 0.5 * math.fsum(j0)) / a ** 2
        awi_lim = (math.fsum(ja) - math.fsum(j0)) / a ** 2
        table.add(a, alpha_rel=a_rel,
                  mswi_limit=mswi_lim, mswi_target=0.5 * math.fsum(teu2),
                  mswi_ratio=2 * mswi_lim / math.fsum(teu2),
                  awi_limit=awi_lim, awi_target=awi_eps, awi_ratio=awi_lim / awi_eps)
    table.notes.update(eps=eps, sigma=sigma, lam=lam)
    return table


def eps_sweep(sc: Scenario, lam: float, epsilons=None) -> SweepTable:
    """``||(T_eps - T) u_sigma||`` summed over traces as ``eps`` decreases."""
    sigma = sc.r_value * lam
    pred, obs = sc.gathers(lam)
    probs = [TraceProblem(pred[p], obs[p]) for p in pred.ids]
    us = [pb.solve(sigma) for pb in probs]
    t_lag = probs[0].dt * (probs[0].n_fft // 2 - 1)
    if epsilons is None:
        epsilons = [10.0 ** k / t_lag for k in range(2, -4, -1)]
    table = SweepTable("eps")
    for e in sorted(epsilons, reverse=True):
        val = 0.0
        for pb, u in zip(probs, us):
            du = (T_eps_multiplier(pb.lags, e) - pb.lags) * u
            val += pb.dot(du, du)
        table.add(e, gap=math.sqrt(val))
    return table


# ------------------------------------------------------ scans and descent

def family_medium(sc: Scenario, parameter: str, s: float):
    """Member of the one-parameter family through the true medium (``s = 1``)."""
    m = sc.medium_star
    if parameter == "velocity":
        return m.scaled(s)
    if parameter == "gradient":
        if not isinstance(m, LinearGradientMedium):
            raise ValueError("gradient scans need a linear-gradient true medium")
        return dataclasses.replace(m, g=m.g * s)
    raise ValueError("unknown scan parameter %r" % parameter)


def _objectives_at(sc, parameter, s, lam, sigma):
    pred, obs = sc.gathers(lam, family_medium(sc, parameter, s))
    awi, mswi = j_awi(pred, obs, sigma), j_mswi(pred, obs, sigma)
    return {"fwi": j_fwi(pred, obs).total, "awi": awi.total, "mswi": mswi.total}


def strict_minima(values, rtol: float = 1e-9) -> list:
    """
    Indices of strict local minima.  Runs of equal values are merged into one
    basin, reported at the run's centre; grid ends are never minima.  Values
    within ``rtol * max|values|`` count as equal, so round-off ripple on a
    flat stretch does not register as minima.
    """
    v = np.asarray(values, float)
    tol = rtol * float(np.max(np.abs(v))) if v.size else 0.0
    runs, i = [], 0
    while i < v.size:
        j = i
        while j + 1 < v.size and abs(v[j + 1] - v[i]) <= tol:
            j += 1
        runs.append((i, j))
        i = j + 1
    out = []
    for k in range(1, len(runs) - 1):
        lo, hi = runs[k]
        if v[lo] < v[runs[k - 1][0]] - tol and v[lo] < v[runs[k + 1][0]] - tol:
            out.append((lo + hi) // 2)
    return out


@dataclass
class ScanResult:
    parameter: str
    grid: np.ndarray
    values: dict
    minima: dict

    def to_csv(self, path) -> None:
        kinds = list(self.values)
        with open(path, "w") as fh:
            fh.write(",".join([self.parameter] + kinds) + "\n")
            for i, s in enumerate(self.grid):
                fh.write(",".join([repr(float(s))] + [repr(float(self.values[k][i])) for k in kinds]) + "\n")
            for k in kinds:
                fh.write("# minima(%s)=%s\n" % (k, " ".join(repr(float(self.grid[i])) for i in self.minima[k])))


def objective_scan(sc: Scenario, parameter: str = "velocity", grid=None,
                   lam: float | None = None) -> ScanResult:
    """FWI, AWI and MSWI along the family ``s * true``; ``s`` spans +-10% by default."""
    lam = min(sc.lambdas) if lam is None else lam
    grid = np.linspace(0.9, 1.1, 201) if grid is None else np.asarray(grid, float)
    sigma = sc.r_value * lam
    rows = _pmap(lambda s: _objectives_at(sc, parameter, s, lam, sigma), grid, sc.threads)
    values = {k: np.array([row[k] for row in rows]) for k in ("fwi", "awi", "mswi")}
    return ScanResult(parameter, grid, values, {k: strict_minima(v) for k, v in values.items()})


@dataclass
class DescentResult:
    kind: str
    iterates: list
    values: list
    gradients: list
    converged: bool
    message: str

    @property
    def final(self) -> float:
        return self.iterates[-1]

    @property
    def steps(self) -> int:
        return len(self.iterates) - 1

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("iteration,parameter,value,gradient\n")
            for i, (s, v, g) in enumerate(zip(self.iterates, self.values, self.gradients)):
                fh.write("%d,%r,%r,%r\n" % (i, s, v, g))
            fh.write("# kind=%s, converged=%s, %s\n" % (self.kind, self.converged, self.message))


def local_descent(kind: str, sc: Scenario, start: float, parameter: str = "velocity",
                  lam: float | None = None, step: float = 1e-2, fd_step: float = 1e-6,
                  gtol: float = 1e-6, xtol: float = 1e-7, max_iter: int = 100,
                  c1: float = 1e-4) -> DescentResult:
    """
    Gradient descent on the scalar family parameter with Armijo backtracking.

    The objective is normalized by its value at ``start`` and the gradient
    uses central differences with step ``fd_step``.  A step that fails to
    decrease the objective after 40 halvings ends the run (stagnation).
    """
    if kind not in ("fwi", "awi", "mswi"):
        raise ValueError("unknown objective %r" % kind)
    lam = min(sc.lambdas) if lam is None else lam
    sigma = sc.r_value * lam

    def J(s):
        return _objectives_at(sc, parameter, s, lam, sigma)[kind]

    j_ref = J(start)
    if not math.isfinite(j_ref):
        return DescentResult(kind, [start], [j_ref], [float("nan")], False, "non-finite objective")
    j_ref = j_ref if j_ref > 0 else 1.0

    def f(s):
        return J(s) / j_ref

    s, fs = start, f(start)
    its, vals, grads = [s], [fs], []
    t = step
    for _ in range(max_iter):
        g = (f(s + fd_step) - f(s - fd_step)) / (2 * fd_step)
        grads.append(g)
        if not math.isfinite(g):
            return DescentResult(kind, its, vals, grads, False, "non-finite gradient")
        if abs(g) <= gtol:
            return DescentResult(kind, its, vals, grads, True, "gradient below tolerance")
        for _ in range(40):
            trial = s - t * g
            ft = f(trial)
            if math.isfinite(ft) and ft <= fs - c1 * t * g * g:
                break
            t *= 0.5
        else:
            return DescentResult(kind, its, vals, grads, False, "line search failed")
        moved = abs(trial - s)
        s, fs = trial, ft
        its.append(s)
        vals.append(fs)
        t = min(2 * t, step)
        if moved <= xtol:
            grads.append(float("nan"))
            return DescentResult(kind, its, vals, grads, True, "step below tolerance")
    grads.append(float("nan"))
    return DescentResult(kind, its, vals, grads, False, "iteration limit")


# --------------------------------------------------------- multiple arrivals

@dataclass
class ArrivalScenario:
    """Two arrivals with the second (caustic) one mistimed in the prediction."""

    predicted: ArrivalSet = ArrivalSet(((1.0, 10.0, 0), (0.5, 10.5, 1)))
    observed: ArrivalSet = ArrivalSet(((1.0, 10.0, 0), (0.5, 10.7, 1)))
    kind: WaveletKind = WaveletKind.RICKER
    dt: float = 1e-3
    t_max: float = 24.0
    half_support: float = 8.0
    eps_r: float = 1e-2

    def __post_init__(self):
        if len(self.predicted) != 2 or len(self.observed) != 2:
            raise ValueError("the demo uses exactly two arrivals")
        self.kind = WaveletKind(self.kind)

    @property
    def mother(self):
        return make_mother_wavelet(self.kind, self.dt, self.half_support)

    @property
    def axis(self):
        return TimeAxis.spanning(self.dt, self.t_max)

    @property
    def mismatch(self) -> float:
        return abs(self.observed[1][1] - self.predicted[1][1])

    def default_lambdas(self) -> tuple:
        """Sweep wavelengths whose pulse width is at most half the mismatch."""
        w1 = self.mother
        l1 = pulse_width(w1.trace)
        return tuple(lam for lam in DEFAULT_LAMBDAS
                     if l1 * lam <= 0.5 * self.mismatch and l1 * lam >= 16 * self.dt)


def _envelope_peak(env: Trace, center: float, halfwidth: float) -> float:
    t = env.times
    sel = np.nonzero(np.abs(t - center) <= halfwidth)[0]
    i = sel[np.argmax(env.samples[sel])]
    if 0 < i < env.n - 1:
        y0, y1, y2 = env.samples[i - 1:i + 2]
        den = y0 - 2 * y1 + y2
        if den < 0:
            return float(t[i] + 0.5 * env.dt * (y0 - y2) / den)
    return float(t[i])


def multi_arrival_demo(sc: ArrivalScenario, lambdas=None, r: float | None = None) -> SweepTable:
    """
    AWI value of the two-arrival trace pair against wavelength, with the
    filter's secondary lobes located from its envelope.
    """
    lambdas = tuple(lambdas or sc.default_lambdas())
    w1 = sc.mother
    r = default_r(w1, max(a for a, _, _ in sc.predicted), sc.eps_r) if r is None else r
    (_, t0, _), (_, t1, _) = sc.predicted.arrivals
    (_, t0s, _), (_, t1s, _) = sc.observed.arrivals
    lobe_a, lobe_b = t1s - t0, t1 - t0s
    table = SweepTable("lambda")
    for lam in lambdas:
        w = scale_wavelet(w1, lam)
        p = multi_arrival_trace(sc.predicted, w, sc.axis)
        d = multi_arrival_trace(sc.observed, w, sc.axis)
        u = solve_filter(p, d, r * lam)
        diag = filter_diagnostics(u, p, d)
        env = envelope(u.trace)
        half = 0.25 * sc.mismatch
        pa, pb = _envelope_peak(env, lobe_a, half), _envelope_peak(env, lobe_b, half)
        table.add(lam, j_awi=diag.ratio ** 2, lobe_a=pa, lobe_a_err=abs(pa - lobe_a),
                  lobe_b=pb, lobe_b_err=abs(pb - lobe_b), residual_ratio=diag.residual_ratio)
    floors = table.column("j_awi")
    table.notes.update(lobe_a_expected=lobe_a, lobe_b_expected=lobe_b,
                       floor_min_over_max=float(floors.min() / floors.max()), r=r)
    return table


def cancellation_scan(sc: ArrivalScenario, lam: float, mismatches, r: float | None = None) -> SweepTable:
    """AWI value as the second observed arrival approaches the predicted one."""
    w1 = sc.mother
    r = default_r(w1, max(a for a, _, _ in sc.predicted), sc.eps_r) if r is None else r
    w = scale_wavelet(w1, lam)
    p = multi_arrival_trace(sc.predicted, w, sc.axis)
    (a0, t0, p0), (a1, t1, p1) = sc.predicted.arrivals
    table = SweepTable("mismatch")
    for m in sorted(mismatches):
        d = multi_arrival_trace(ArrivalSet(((a0, t0, p0), (a1, t1 + m, p1))), w, sc.axis)
        diag = filter_diagnostics(solve_filter(p, d, r * lam), p, d)
        table.add(m, j_awi=diag.ratio ** 2)
    table.notes["pulse_width"] = pulse_width(w.trace)
    return table
