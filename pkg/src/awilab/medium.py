"""
Velocity models, acquisition geometry and first-arrival travel times.

Positions are 2D points ``(x, z)`` in meters; velocities in m/s.  Analytic
media (constant, linear gradient) use closed-form travel times; gridded
media are handled by a factored first-order fast-sweeping eikonal solver.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np


class DomainError(ValueError):
    """A point lies outside the gridded medium."""


class InvalidModelError(ValueError):
    pass


DEFAULT_AMPLITUDE_BOUND = 30.0


def _pos(p) -> tuple[float, float]:
    x, z = p
    return float(x), float(z)


def distance(a, b) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


@dataclass(frozen=True)
class ConstantMedium:
    c: float
    rho: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.c) and self.c > 0):
            raise InvalidModelError("velocity must be positive and finite")

    def velocity(self, p) -> float:
        return self.c

    def scaled(self, alpha: float) -> "ConstantMedium":
        return ConstantMedium(self.c * alpha, self.rho)


@dataclass(frozen=True)
class LinearGradientMedium:
    """``c(x) = c0 + g * x[axis]``; axis 1 is depth (z)."""

    c0: float
    g: float
    axis: int = 1
    rho: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.c0) and self.c0 > 0 and math.isfinite(self.g)):
            raise InvalidModelError("need c0 > 0 and finite gradient")
        if self.axis not in (0, 1):
            raise InvalidModelError("axis must be 0 (x) or 1 (z)")

    def velocity(self, p) -> float:
        c = self.c0 + self.g * p[self.axis]
        if c <= 0:
            raise InvalidModelError("non-positive velocity at %r" % (p,))
        return c

    def scaled(self, alpha: float) -> "LinearGradientMedium":
        return LinearGradientMedium(self.c0 * alpha, self.g * alpha, self.axis, self.rho)


@dataclass(frozen=True, eq=False)
class GridMedium:
    """
    Velocity on a regular grid, ``velocity[iz, ix]`` at
    ``(origin[0] + ix*spacing, origin[1] + iz*spacing)``.
    """

    velocity_grid: np.ndarray
    spacing: float
    origin: tuple[float, float] = (0.0, 0.0)
    c_bounds: tuple[float, float] = (1.0, 1.0e5)
    rho: float = 1.0
    _fields: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        v = np.array(self.velocity_grid, dtype=float)
        if v.ndim != 2 or min(v.shape) < 2:
            raise InvalidModelError("velocity grid must be 2D with >= 2 nodes per axis")
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise InvalidModelError("grid velocities must be positive and finite")
        lo, hi = self.c_bounds
        if v.min() < lo or v.max() > hi:
            raise InvalidModelError("grid velocities outside bounds [%g, %g]" % (lo, hi))
        if not self.spacing > 0:
            raise InvalidModelError("grid spacing must be positive")
        v.setflags(write=False)
        object.__setattr__(self, "velocity_grid", v)
        object.__setattr__(self, "origin", _pos(self.origin))

    @property
    def shape(self) -> tuple[int, int]:
        return self.velocity_grid.shape

    @property
    def extent(self) -> tuple[float, float, float, float]:
        nz, nx = self.shape
        ox, oz = self.origin
        return ox, ox + (nx - 1) * self.spacing, oz, oz + (nz - 1) * self.spacing

    def contains(self, p) -> bool:
        x0, x1, z0, z1 = self.extent
        tol = 1e-9 * self.spacing
        return x0 - tol <= p[0] <= x1 + tol and z0 - tol <= p[1] <= z1 + tol

    def velocity(self, p) -> float:
        return float(_bilinear(self.velocity_grid, self.spacing, self.origin, p))

    def scaled(self, alpha: float) -> "GridMedium":
        lo, hi = self.c_bounds
        return GridMedium(self.velocity_grid * alpha, self.spacing, self.origin,
                          (lo * alpha, hi * alpha), self.rho)

    @classmethod
    def sample(cls, medium, nx: int, nz: int, spacing: float,
               origin=(0.0, 0.0)) -> "GridMedium":
        """Sample an analytic medium onto a grid."""
        ox, oz = origin
        v = np.empty((nz, nx))
        for iz in range(nz):
            for ix in range(nx):
                v[iz, ix] = medium.velocity((ox + ix * spacing, oz + iz * spacing))
        return cls(v, spacing, origin, (v.min(), v.max()), medium.rho)

    def to_csv(self, path) -> None:
        nz, nx = self.shape
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["nx", "nz", "dx", "origin_x", "origin_z"])
            wr.writerow([nx, nz, repr(self.spacing), repr(self.origin[0]), repr(self.origin[1])])
            for row in self.velocity_grid:
                wr.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path) -> "GridMedium":
        with open(path) as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
        if rows and not _is_number(rows[0][0]):
            rows = rows[1:]
        nx, nz = int(rows[0][0]), int(rows[0][1])
        dx, ox, oz = (float(s) for s in rows[0][2:5])
        v = np.array([[float(s) for s in r] for r in rows[1:]])
        if v.shape != (nz, nx):
            raise InvalidModelError("grid file holds %s values, header says %s"
                                    % (v.shape, (nz, nx)))
        return cls(v, dx, (ox, oz), (v.min(), v.max()))


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def _bilinear(a: np.ndarray, h: float, origin, p) -> float:
    nz, nx = a.shape
    fx = (p[0] - origin[0]) / h
    fz = (p[1] - origin[1]) / h
    if not (-1e-9 <= fx <= nx - 1 + 1e-9 and -1e-9 <= fz <= nz - 1 + 1e-9):
        raise DomainError("point %r outside grid" % (tuple(p),))
    ix = min(max(int(math.floor(fx)), 0), nx - 2)
    iz = min(max(int(math.floor(fz)), 0), nz - 2)
    tx, tz = fx - ix, fz - iz
    return ((1 - tx) * (1 - tz) * a[iz, ix] + tx * (1 - tz) * a[iz, ix + 1]
            + (1 - tx) * tz * a[iz + 1, ix] + tx * tz * a[iz + 1, ix + 1])


@dataclass(frozen=True)
class Geometry:
    """Finite list of (source, receiver) pairs; no pair may be co-located."""

    pairs: tuple
    ids: tuple = ()

    def __post_init__(self):
        pairs = tuple((_pos(s), _pos(r)) for s, r in self.pairs)
        if not pairs:
            raise ValueError("geometry needs at least one pair")
        for s, r in pairs:
            if distance(s, r) <= 0:
                raise ValueError("co-located source and receiver at %r" % (s,))
        ids = tuple(self.ids) if self.ids else tuple(range(len(pairs)))
        if len(ids) != len(pairs) or len(set(ids)) != len(ids):
            raise ValueError("pair ids must be unique, one per pair")
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "ids", ids)

    def __len__(self):
        return len(self.pairs)

    def items(self):
        return zip(self.ids, self.pairs)

    def translated(self, dx: float, dz: float = 0.0) -> "Geometry":
        return Geometry(tuple(((s[0] + dx, s[1] + dz), (r[0] + dx, r[1] + dz))
                              for s, r in self.pairs), self.ids)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["src_x", "src_z", "rcv_x", "rcv_z"])
            for s, r in self.pairs:
                wr.writerow([repr(s[0]), repr(s[1]), repr(r[0]), repr(r[1])])

    @classmethod
    def from_csv(cls, path) -> "Geometry":
        data = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
        return cls(tuple(((a, b), (c, d)) for a, b, c, d in data))


@dataclass(frozen=True, eq=False)
class TravelTimeField:
    times: np.ndarray
    source: tuple[float, float]
    spacing: float
    origin: tuple[float, float]
    sweeps: int = 0

    def at(self, p) -> float:
        return float(_bilinear(self.times, self.spacing, self.origin, p))


@numba.njit(cache=True)
def _update(alpha, tau0, px, pz, slow, h, iz, ix, big):
    nz, nx = alpha.shape
    t0 = tau0[iz, ix]
    s = slow[iz, ix]
    # upwind neighbour per axis: the one with the smaller travel time
    ax = big
    sx = 0.0
    if ix > 0 and alpha[iz, ix - 1] < big:
        ax = alpha[iz, ix - 1]
        sx = 1.0
    if ix < nx - 1 and alpha[iz, ix + 1] < big:
        if sx == 0.0 or tau0[iz, ix + 1] * alpha[iz, ix + 1] < tau0[iz, ix - 1] * ax:
            ax = alpha[iz, ix + 1]
            sx = -1.0
    az = big
    sz = 0.0
    if iz > 0 and alpha[iz - 1, ix] < big:
        az = alpha[iz - 1, ix]
        sz = 1.0
    if iz < nz - 1 and alpha[iz + 1, ix] < big:
        if sz == 0.0 or tau0[iz + 1, ix] * alpha[iz + 1, ix] < tau0[iz - 1, ix] * az:
            az = alpha[iz + 1, ix]
            sz = -1.0
    best = big
    # tau_x = alpha*px + t0*dalpha/dx = A*alpha - B along each axis
    Ax = px[iz, ix] + t0 * sx / h
    Bx = t0 * sx * ax / h
    Az = pz[iz, ix] + t0 * sz / h
    Bz = t0 * sz * az / h
    if sx != 0.0 and Ax != 0.0:
        a1 = (Bx + sx * s) / Ax
        if a1 > 0.0 and a1 < best:
            best = a1
    if sz != 0.0 and Az != 0.0:
        a1 = (Bz + sz * s) / Az
        if a1 > 0.0 and a1 < best:
            best = a1
    if sx != 0.0 and sz != 0.0:
        qa = Ax * Ax + Az * Az
        qb = -2.0 * (Ax * Bx + Az * Bz)
        qc = Bx * Bx + Bz * Bz - s * s
        disc = qb * qb - 4.0 * qa * qc
        if disc >= 0.0 and qa > 0.0:
            a2 = (-qb + math.sqrt(disc)) / (2.0 * qa)
            if sx * (Ax * a2 - Bx) >= 0.0 and sz * (Az * a2 - Bz) >= 0.0:
                if a2 > 0.0 and a2 < best:
                    best = a2
    return best


@numba.njit(cache=True)
def _sweep_all(alpha, tau0, px, pz, slow, fixed, h, tol, max_iter):
    nz, nx = alpha.shape
    big = 1e300
    it = 0
    change = big
    while it < max_iter:
        change = 0.0
        for sw in range(4):
            if sw == 0:
                z_a, z_b, z_s, x_a, x_b, x_s = 0, nz, 1, 0, nx, 1
            elif sw == 1:
                z_a, z_b, z_s, x_a, x_b, x_s = 0, nz, 1, nx - 1, -1, -1
            elif sw == 2:
                z_a, z_b, z_s, x_a, x_b, x_s = nz - 1, -1, -1, nx - 1, -1, -1
            else:
                z_a, z_b, z_s, x_a, x_b, x_s = nz - 1, -1, -1, 0, nx, 1
            for iz in range(z_a, z_b, z_s):
                for ix in range(x_a, x_b, x_s):
                    if fixed[iz, ix]:
                        continue
                    new = _update(alpha, tau0, px, pz, slow, h, iz, ix, big)
                    old = alpha[iz, ix]
                    if new < old:
                        if old < big:
                            d = tau0[iz, ix] * (old - new)
                            if d > change:
                                change = d
                        else:
                            change = big
                        alpha[iz, ix] = new
        it += 1
        if change <= tol:
            break
    return it, change


def eikonal_solve(medium: GridMedium, xs, tol: float = 1e-9,
                  max_iter: int = 200) -> TravelTimeField:
    """
    Fast-sweeping solution of ``|grad tau| = 1/c`` with ``tau(xs) = 0``.

    The travel time is factored as ``tau = tau0 * alpha`` with ``tau0`` the
    straight-ray time at the source velocity; ``alpha`` is found with a
    first-order Godunov upwind scheme, which removes the source-singularity
    error of the unfactored scheme.  The 5x5 node block around the source
    is initialized analytically (``alpha = 1``) and held fixed.  Iteration
    stops once four sweeps change no travel time by more than ``tol``.
    """
    if not isinstance(medium, GridMedium):
        raise TypeError("eikonal_solve needs a GridMedium")
    xs = _pos(xs)
    if not medium.contains(xs):
        raise DomainError("source %r outside grid" % (xs,))
    v = medium.velocity_grid
    h = medium.spacing
    ox, oz = medium.origin
    nz, nx = v.shape
    cs = medium.velocity(xs)
    X, Z = np.meshgrid(ox + h * np.arange(nx), oz + h * np.arange(nz))
    dx, dz = X - xs[0], Z - xs[1]
    r = np.hypot(dx, dz)
    tau0 = r / cs
    with np.errstate(invalid="ignore", divide="ignore"):
        px = np.where(r > 0, dx / (cs * r), 0.0)
        pz = np.where(r > 0, dz / (cs * r), 0.0)
    alpha = np.full((nz, nx), 1e300)
    fixed = np.zeros((nz, nx), dtype=np.bool_)
    jx = int(round((xs[0] - ox) / h))
    jz = int(round((xs[1] - oz) / h))
    fixed[max(jz - 2, 0):jz + 3, max(jx - 2, 0):jx + 3] = True
    alpha[fixed] = 1.0
    it, change = _sweep_all(alpha, tau0, px, pz, 1.0 / v, fixed, h, tol, max_iter)
    if change > tol:
        raise ArithmeticError("fast sweeping did not converge (last change %g s)" % change)
    u = tau0 * alpha
    u.setflags(write=False)
    return TravelTimeField(u, xs, h, medium.origin, int(it))


def _linear_gradient_time(m: LinearGradientMedium, xs, xr) -> float:
    cs, cr = m.velocity(xs), m.velocity(xr)
    d2 = (xs[0] - xr[0]) ** 2 + (xs[1] - xr[1]) ** 2
    if m.g == 0:
        return math.sqrt(d2) / cs
    g = abs(m.g)
    # acosh(1 + 2 s^2) = 2 asinh(s); the asinh form survives g -> 0
    return 2.0 * math.asinh(g * math.sqrt(d2) / (2.0 * math.sqrt(cs * cr))) / g


def _field(medium: GridMedium, xs) -> TravelTimeField:
    key = _pos(xs)
    fld = medium._fields.get(key)
    if fld is None:
        fld = eikonal_solve(medium, key)
        medium._fields[key] = fld
    return fld


def travel_time(medium, xs, xr) -> float:
    """
    First-arrival travel time (s) from ``xs`` to ``xr``.

    Grid media average the interpolated times of the two one-way eikonal
    solutions (source at either end), which makes the result reciprocal.
    """
    xs, xr = _pos(xs), _pos(xr)
    if distance(xs, xr) == 0:
        raise ValueError("source and receiver coincide")
    if isinstance(medium, ConstantMedium):
        return distance(xs, xr) / medium.c
    if isinstance(medium, LinearGradientMedium):
        return _linear_gradient_time(medium, xs, xr)
    if isinstance(medium, GridMedium):
        for p in (xs, xr):
            if not medium.contains(p):
                raise DomainError("point %r outside grid" % (p,))
        return 0.5 * (_field(medium, xs).at(xr) + _field(medium, xr).at(xs))
    raise TypeError("unsupported medium %r" % type(medium).__name__)


def amplitude(medium, xs, xr, model: str = "spherical",
              bound: float = DEFAULT_AMPLITUDE_BOUND) -> float:
    """
    Prescribed geometric amplitude: ``1/(4 pi r)`` (``spherical``) or 1
    (``unit``), clamped so that ``|log a| < bound``.
    """
    r = distance(_pos(xs), _pos(xr))
    if r == 0:
        raise ValueError("source and receiver coincide")
    if model == "unit":
        a = 1.0
    elif model == "spherical":
        a = 1.0 / (4.0 * math.pi * r)
    else:
        raise ValueError("unknown amplitude model %r" % model)
    lo, hi = math.exp(-bound), math.exp(bound)
    return min(max(a, lo * (1 + 1e-12)), hi * (1 - 1e-12))


def pair_times(medium, geometry: Geometry) -> dict:
    return {pid: travel_time(medium, s, r) for pid, (s, r) in geometry.items()}


def as_medium(spec: dict):
    """Build a medium from a config mapping (``kind`` = constant/linear_gradient/grid)."""
    kind = spec.get("kind", "constant")
    rho = float(spec.get("rho", 1.0))
    if kind == "constant":
        return ConstantMedium(float(spec["c"]), rho)
    if kind == "linear_gradient":
        axis = {"x": 0, "z": 1}.get(spec.get("axis", "z"), spec.get("axis"))
        return LinearGradientMedium(float(spec["c0"]), float(spec["g"]), int(axis), rho)
    if kind == "grid":
        return GridMedium.from_csv(spec["file"])
    raise InvalidModelError("unknown medium kind %r" % kind)


def medium_summary(m) -> dict:
    if isinstance(m, ConstantMedium):
        return {"kind": "constant", "c": m.c, "rho": m.rho}
    if isinstance(m, LinearGradientMedium):
        return {"kind": "linear_gradient", "c0": m.c0, "g": m.g,
                "axis": "xz"[m.axis], "rho": m.rho}
    nz, nx = m.shape
    return {"kind": "grid", "nx": nx, "nz": nz, "spacing": m.spacing}

