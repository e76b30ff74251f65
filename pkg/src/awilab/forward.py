"""
Synthetic transmission gathers.

Each trace is the leading geometric-optics term ``a * w(t - tau)``,
optionally plus a smooth tail (the remainder of the Green's function
convolved with the source pulse), or an explicit sum of arrivals with
Hilbert-transform phase shifts.  All delays are applied as spectral phase
ramps so that sub-sample travel-time changes are represented exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .medium import Geometry, amplitude, travel_time, DEFAULT_AMPLITUDE_BOUND
from .signal import TimeAxis, Trace, Wavelet, convolve, next_pow2, source_waveform


class WindowError(ValueError):
    """Synthesized support does not fit the trace window."""


def _synthesize(pulse: Trace, tau: float, axis: TimeAxis, scale: float = 1.0,
                hilbert: int = 0) -> np.ndarray:
    """``scale * H^hilbert pulse(t - tau)`` sampled on ``axis``."""
    if not math.isclose(pulse.dt, axis.dt, rel_tol=1e-12):
        raise ValueError("pulse dt %g differs from axis dt %g" % (pulse.dt, axis.dt))
    lo = tau + pulse.t0
    hi = lo + (pulse.n - 1) * pulse.dt
    slack = 1e-9 * axis.dt
    if lo < axis.t0 - slack or hi > axis.t_end + slack:
        raise WindowError("support [%.6g, %.6g] s exceeds window [%.6g, %.6g] s"
                          % (lo, hi, axis.t0, axis.t_end))
    nfft = next_pow2(axis.n + pulse.n)
    # buffer index k holds time k*dt (circular), pulse samples at t0 + j*dt
    j0 = int(round(pulse.t0 / pulse.dt))
    buf = np.zeros(nfft)
    idx = (j0 + np.arange(pulse.n)) % nfft
    buf[idx] = pulse.samples
    omega = 2 * np.pi * np.fft.rfftfreq(nfft, d=axis.dt)
    # residual from rounding t0 onto the grid is folded into the delay
    delay = tau - axis.t0 + (pulse.t0 - j0 * pulse.dt)
    spec = np.fft.rfft(buf) * np.exp(-1j * omega * delay)
    if hilbert:
        # one-sided (-i sgn w)^p; DC and Nyquist bins carry no phase, zero them
        mult = np.full(omega.size, (-1j) ** hilbert)
        mult[0] = mult[-1] = 0.0
        spec *= mult
    return scale * np.fft.irfft(spec, nfft)[:axis.n]


def leading_term_trace(a: float, tau: float, w: Wavelet, axis: TimeAxis) -> Trace:
    """``a * w_lam(t - tau)`` via a band-limited (phase ramp) delay."""
    return Trace(_synthesize(w.trace, tau, axis, a), axis.dt, axis.t0)


def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x ** 3 * (10 - 15 * x + 6 * x ** 2), 30 * x ** 2 * (1 - x) ** 2


@dataclass(frozen=True)
class RemainderSpec:
    """
    Remainder kernel ``b(t) = scale_B * exp(-decay_delta * t) * s(t/onset)``
    with ``s`` a C2 smoothstep, plus the jump ``b0`` at t = 0.
    """

    b0: float = 0.0
    decay_delta: float = 4.0
    scale_B: float = 0.0
    onset: float = 0.1
    tail_tol: float = 1e-10

    def __post_init__(self):
        if not self.decay_delta > 0:
            raise ValueError("decay_delta must be positive")
        if not self.onset > 0:
            raise ValueError("onset window must be positive")

    @property
    def is_zero(self) -> bool:
        return self.b0 == 0 and self.scale_B == 0

    def b(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        s, _ = _smoothstep(t / self.onset)
        return self.scale_B * np.exp(-self.decay_delta * t) * s * (t >= 0)

    def db(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        s, ds = _smoothstep(t / self.onset)
        e = self.scale_B * np.exp(-self.decay_delta * t)
        return e * (ds / self.onset - self.decay_delta * s) * (t >= 0)

    def duration(self) -> float:
        return self.onset + math.log(1.0 / self.tail_tol) / self.decay_delta

    def kernel(self, dt: float) -> Trace:
        """``b0 * delta + b'(t) H(t)`` sampled on ``[0, duration]``."""
        n = int(math.ceil(self.duration() / dt)) + 1
        k = self.db(dt * np.arange(n))
        k[0] += self.b0 / dt
        return Trace(k, dt, 0.0)


def remainder_trace(spec: RemainderSpec, tau: float, w: Wavelet, axis: TimeAxis) -> Trace:
    """Remainder contribution ``(b0 delta + b' H) * f_lam`` delayed by ``tau``."""
    if spec.is_zero:
        return Trace(np.zeros(axis.n), axis.dt, axis.t0)
    pulse = convolve(spec.kernel(axis.dt), source_waveform(w))
    return Trace(_synthesize(pulse, tau, axis), axis.dt, axis.t0)


@dataclass(frozen=True)
class ArrivalSet:
    """Arrivals ``(a_i, tau_i, p_i)``; the earliest has no caustic (p = 0)."""

    arrivals: tuple

    def __post_init__(self):
        arr = tuple(sorted(((float(a), float(t), int(p)) for a, t, p in self.arrivals),
                           key=lambda x: x[1]))
        if not arr:
            raise ValueError("empty arrival set")
        if any(a <= 0 for a, _, _ in arr):
            raise ValueError("arrival amplitudes must be positive")
        if any(p < 0 for _, _, p in arr):
            raise ValueError("caustic indices must be non-negative")
        taus = [t for _, t, _ in arr]
        if any(t1 <= t0 for t0, t1 in zip(taus, taus[1:])):
            raise ValueError("arrival times must be distinct")
        if arr[0][2] != 0:
            raise ValueError("the earliest arrival must have caustic index 0")
        object.__setattr__(self, "arrivals", arr)

    def __len__(self):
        return len(self.arrivals)

    def __getitem__(self, i):
        return self.arrivals[i]


def multi_arrival_trace(arrivals: ArrivalSet, w: Wavelet, axis: TimeAxis) -> Trace:
    """``sum_i a_i H^{p_i} w(t - tau_i)``."""
    x = np.zeros(axis.n)
    for a, tau, p in arrivals.arrivals:
        x += _synthesize(w.trace, tau, axis, a, p)
    return Trace(x, axis.dt, axis.t0)


@dataclass(frozen=True, eq=False)
class Gather:
    """Traces keyed by pair id, all on one time axis."""

    traces: dict
    axis: TimeAxis
    meta: dict = None

    def __post_init__(self):
        for pid, tr in self.traces.items():
            if tr.n != self.axis.n or not math.isclose(tr.dt, self.axis.dt, rel_tol=1e-12) \
                    or abs(tr.t0 - self.axis.t0) > 1e-9 * self.axis.dt:
                raise ValueError("trace %r is off the gather axis" % (pid,))
        object.__setattr__(self, "traces", dict(sorted(self.traces.items())))
        object.__setattr__(self, "meta", dict(self.meta or {}))

    @property
    def ids(self):
        return list(self.traces)

    def __getitem__(self, pid) -> Trace:
        return self.traces[pid]

    def __len__(self):
        return len(self.traces)

    def scaled(self, gamma) -> "Gather":
        """Scale every trace by ``gamma`` (a number or a per-pair mapping)."""
        g = gamma if isinstance(gamma, dict) else {p: gamma for p in self.traces}
        return Gather({p: tr * g[p] for p, tr in self.traces.items()}, self.axis, self.meta)

    def to_csv(self, path) -> None:
        """Write ``pair_id,t,value`` rows plus a ``.meta`` sidecar."""
        path = Path(path)
        t = self.axis.times
        with open(path, "w") as fh:
            fh.write("pair_id,t,value\n")
            for pid, tr in self.traces.items():
                for ti, v in zip(t, tr.samples):
                    fh.write("%s,%.12g,%r\n" % (pid, ti, float(v)))
        meta = {"dt": repr(self.axis.dt), "t0": repr(self.axis.t0), "n": self.axis.n}
        meta.update({k: v for k, v in self.meta.items() if k not in meta})
        with open(path.with_suffix(".meta"), "w") as fh:
            for k, v in meta.items():
                fh.write("%s=%s\n" % (k, v))

    @classmethod
    def from_csv(cls, path) -> "Gather":
        path = Path(path)
        meta = {}
        for line in path.with_suffix(".meta").read_text().splitlines():
            if "=" in line:
                k, v = line.split("=", 1)
                meta[k.strip()] = v.strip()
        axis = TimeAxis(float(meta.pop("dt")), float(meta.pop("t0")), int(meta.pop("n")))
        rows = np.genfromtxt(path, delimiter=",", skip_header=1, dtype=None,
                             encoding=None, names=("pair_id", "t", "value"))
        traces = {}
        for pid in dict.fromkeys(rows["pair_id"]):
            key = pid.item() if hasattr(pid, "item") else pid
            traces[key] = Trace(rows["value"][rows["pair_id"] == pid], axis.dt, axis.t0)
        return cls(traces, axis, meta)


def model_gather(medium, geometry: Geometry, w: Wavelet, axis: TimeAxis,
                 remainder: RemainderSpec | None = None,
                 amplitude_model: str = "unit",
                 amplitude_bound: float = DEFAULT_AMPLITUDE_BOUND) -> Gather:
    """Leading-term (plus optional remainder) trace for every pair."""
    traces = {}
    for pid, (xs, xr) in geometry.items():
        tau = travel_time(medium, xs, xr)
        a = amplitude(medium, xs, xr, amplitude_model, amplitude_bound)
        try:
            tr = leading_term_trace(a, tau, w, axis)
            if remainder is not None and not remainder.is_zero:
                tr = tr + remainder_trace(remainder, tau, w, axis)
        except WindowError as exc:
            raise WindowError("pair %r: %s" % (pid, exc)) from None
        traces[pid] = tr
    meta = {"wavelet": w.kind.value, "lambda": repr(w.lambda_scale)}
    return Gather(traces, axis, meta)
