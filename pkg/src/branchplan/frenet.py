"""Reference paths and exact Frenet <-> Cartesian conversion.

A reference path is built from a waypoint polyline: arc length is the
piecewise-linear cumulative length, positions come from cubic splines over
arc length, and heading / curvature / curvature rate are tabulated from
centered finite differences of the smoothed curve on a dense grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline


class DegenerateGeometryError(ValueError):
    """Raised when 1 - kappa_r * d <= 0 (point at/beyond the center of curvature)."""


class ProjectionError(ValueError):
    """Raised when a point cannot be projected onto the path (outside corridor)."""


def wrap_angle(theta):
    """Wrap angle(s) to (-pi, pi]."""
    w = (np.asarray(theta) + np.pi) % (2.0 * np.pi) - np.pi
    w = np.where(w == -np.pi, np.pi, w)
    if np.ndim(theta) == 0:
        return float(w)
    return w


@dataclass
class FrenetState:
    """Path-relative state; d_prime and d_dprime are derivatives w.r.t. arc length s."""

    s: float
    s_dot: float
    s_ddot: float
    d: float
    d_prime: float
    d_dprime: float


@dataclass
class CartesianState:
    x: float
    y: float
    theta: float
    kappa: float
    v: float
    a: float


@dataclass
class FrenetProjection:
    s: float
    d: float
    ambiguous: bool = False


class ReferencePath:
    """Immutable arc-length parameterized reference curve.

    Safe to share across parallel trajectory evaluations; all lookups are
    vectorized and side-effect free.
    """

    def __init__(self, waypoints, table_step: float = 0.05):
        pts = np.asarray(waypoints, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise ValueError("reference path needs at least 2 (x, y) waypoints")
        seg = np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1]))
        if np.any(seg <= 1e-12):
            raise ValueError("duplicate consecutive waypoints in reference path")
        self.waypoints = pts
        self.cumulative_arclength = np.concatenate([[0.0], np.cumsum(seg)])
        self.length = float(self.cumulative_arclength[-1])

        self._sx = CubicSpline(self.cumulative_arclength, pts[:, 0])
        self._sy = CubicSpline(self.cumulative_arclength, pts[:, 1])

        n = max(int(np.ceil(self.length / table_step)), 8)
        s_grid = np.linspace(0.0, self.length, n + 1)
        x = self._sx(s_grid)
        y = self._sy(s_grid)
        h = s_grid[1] - s_grid[0]

        dx = np.gradient(x, h, edge_order=2)
        dy = np.gradient(y, h, edge_order=2)
        ddx = np.gradient(dx, h, edge_order=2)
        ddy = np.gradient(dy, h, edge_order=2)

        heading = np.unwrap(np.arctan2(dy, dx))
        speed_sq = dx * dx + dy * dy
        kappa = (dx * ddy - dy * ddx) / np.power(speed_sq, 1.5)
        # suppress FD end artifacts on curvature rate
        kappa_rate = np.gradient(kappa, h, edge_order=1)

        self._s_grid = s_grid
        self._x_grid = x
        self._y_grid = y
        self._heading_grid = heading
        self._kappa_grid = kappa
        self._kappa_rate_grid = kappa_rate

        # coarser table for projection coarse search
        stride = max(int(round(0.5 / h)), 1)
        self._proj_idx = np.unique(np.concatenate([np.arange(0, n + 1, stride), [n]]))

    # -- lookups ----------------------------------------------------------

    def position(self, s):
        s = np.clip(s, 0.0, self.length)
        return self._sx(s), self._sy(s)

    def heading(self, s):
        s = np.clip(s, 0.0, self.length)
        return np.interp(s, self._s_grid, self._heading_grid)

    def curvature(self, s):
        s = np.clip(s, 0.0, self.length)
        return np.interp(s, self._s_grid, self._kappa_grid)

    def curvature_rate(self, s):
        s = np.clip(s, 0.0, self.length)
        return np.interp(s, self._s_grid, self._kappa_rate_grid)

    def sample(self, s):
        """Vectorized lookup of (x, y, theta_r, kappa_r, kappa_r_rate) at s."""
        s = np.clip(s, 0.0, self.length)
        return (
            self._sx(s),
            self._sy(s),
            np.interp(s, self._s_grid, self._heading_grid),
            np.interp(s, self._s_grid, self._kappa_grid),
            np.interp(s, self._s_grid, self._kappa_rate_grid),
        )

    # -- projection --------------------------------------------------------

    def _refine_projection(self, px: float, py: float, s0: float) -> float:
        dsx = self._sx.derivative()
        dsy = self._sy.derivative()
        ddsx = dsx.derivative()
        ddsy = dsy.derivative()
        s = s0
        for _ in range(30):
            ex = px - self._sx(s)
            ey = py - self._sy(s)
            tx, ty = dsx(s), dsy(s)
            g = ex * tx + ey * ty
            gp = -(tx * tx + ty * ty) + ex * ddsx(s) + ey * ddsy(s)
            if gp == 0.0:
                break
            step = g / gp
            s_new = float(np.clip(s - step, 0.0, self.length))
            if abs(s_new - s) < 1e-12:
                s = s_new
                break
            s = s_new
        return s

    def project(self, point, corridor: float = 50.0) -> FrenetProjection:
        """Project a Cartesian point to (s, d); d > 0 left of the driving direction."""
        px, py = float(point[0]), float(point[1])
        idx = self._proj_idx
        dist = np.sqrt((self._x_grid[idx] - px) ** 2 + (self._y_grid[idx] - py) ** 2)

        # refine every coarse local minimum; equal refined distances mean ambiguity
        interior = np.flatnonzero((dist[1:-1] <= dist[:-2]) & (dist[1:-1] <= dist[2:])) + 1
        cand = [0, len(idx) - 1] + list(interior)
        coarse_step = self._s_grid[idx[1]] - self._s_grid[idx[0]] if len(idx) > 1 else self.length
        cutoff = dist.min() + coarse_step
        refined = sorted(
            {
                round(self._refine_projection(px, py, float(self._s_grid[idx[k]])), 9)
                for k in cand
                if dist[k] <= cutoff
            }
        )
        dists = []
        for s in refined:
            x, y = self.position(s)
            dists.append(float(np.hypot(px - x, py - y)))
        best = min(dists)
        keep = [s for s, dd in zip(refined, dists) if dd <= best + 1e-6]
        ambiguous = len(keep) > 1 and (max(keep) - min(keep)) > 2.0 * coarse_step
        s_star = min(keep)

        x, y = self.position(s_star)
        theta = self.heading(s_star)
        ex, ey = px - x, py - y
        d = -np.sin(theta) * ex + np.cos(theta) * ey
        if abs(d) > corridor or np.hypot(ex, ey) > corridor + 1e-9:
            raise ProjectionError(
                f"point ({px:.2f}, {py:.2f}) outside lateral corridor ({corridor} m) of path"
            )
        return FrenetProjection(s=float(s_star), d=float(d), ambiguous=ambiguous)

    def project_many(self, points, corridor: float = 50.0):
        """Project an (n, 2) array of points; returns (s, d) arrays."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out_s = np.empty(len(pts))
        out_d = np.empty(len(pts))
        for i, p in enumerate(pts):
            pr = self.project(p, corridor=corridor)
            out_s[i] = pr.s
            out_d[i] = pr.d
        return out_s, out_d


def build_reference_path(waypoints, table_step: float = 0.05) -> ReferencePath:
    return ReferencePath(waypoints, table_step=table_step)


def project_to_frenet(point, path: ReferencePath, corridor: float = 50.0) -> FrenetProjection:
    return path.project(point, corridor=corridor)


def trajectory_curvature(d, d_prime, d_dprime, kappa_r, kappa_r_rate):
    """Curvature of the offset trajectory from lateral state and path curvature.

    Accepts scalars or arrays. Heading offset is atan(d'/(1 - kappa_r*d)). The
    cross term enters as +(kappa_r'*d + kappa_r*d')*tan(theta): the published
    rearrangement flips that sign, but only the positive sign is consistent
    with the defining relation for d'' and with finite-difference curvature of
    the resulting Cartesian trace.
    """
    one_minus = 1.0 - np.asarray(kappa_r) * np.asarray(d)
    if np.any(one_minus <= 0.0):
        raise DegenerateGeometryError("1 - kappa_r * d <= 0: point beyond center of curvature")
    delta = np.arctan2(d_prime, one_minus)
    cosd = np.cos(delta)
    tand = np.tan(delta)
    krd_prime = np.asarray(kappa_r_rate) * d + np.asarray(kappa_r) * np.asarray(d_prime)
    kappa_p = (
        (d_dprime + krd_prime * tand) * cosd ** 3 / one_minus ** 2
        + np.asarray(kappa_r) * cosd / one_minus
    )
    if np.ndim(kappa_p) == 0:
        return float(kappa_p)
    return kappa_p


def frenet_to_cartesian(fs: FrenetState, path: ReferencePath) -> CartesianState:
    """Convert a Frenet state (arc-length derivatives) to a Cartesian state."""
    x, y, theta_r, kappa_r, kappa_r_rate = path.sample(fs.s)
    one_minus = 1.0 - kappa_r * fs.d
    if one_minus <= 0.0:
        raise DegenerateGeometryError("1 - kappa_r * d <= 0: point beyond center of curvature")

    px = x - fs.d * np.sin(theta_r)
    py = y + fs.d * np.cos(theta_r)
    delta = np.arctan2(fs.d_prime, one_minus)
    theta = wrap_angle(theta_r + delta)
    kappa_p = trajectory_curvature(fs.d, fs.d_prime, fs.d_dprime, kappa_r, kappa_r_rate)

    cosd = np.cos(delta)
    v = fs.s_dot * np.sqrt(one_minus ** 2 + fs.d_prime ** 2)
    krd_prime = kappa_r_rate * fs.d + kappa_r * fs.d_prime
    delta_prime = kappa_p * one_minus / cosd - kappa_r
    a = (
        fs.s_ddot * one_minus / cosd
        + fs.s_dot ** 2 / cosd * (fs.d_prime * delta_prime - krd_prime)
    )
    return CartesianState(
        x=float(px), y=float(py), theta=float(theta), kappa=float(kappa_p),
        v=float(v), a=float(a),
    )


def frenet_to_cartesian_arrays(s, s_dot, s_ddot, d, d_prime, d_dprime, path: ReferencePath):
    """Vectorized conversion for candidate batches.

    Returns (x, y, theta, kappa, v, a, valid); entries with 1 - kappa_r*d <= 0
    are filled with zeros for the curvature-dependent quantities and flagged
    invalid instead of raising.
    """
    x_r, y_r, theta_r, kappa_r, kappa_r_rate = path.sample(s)
    one_minus = 1.0 - kappa_r * d
    valid = one_minus > 1e-9
    om = np.where(valid, one_minus, 1.0)

    px = x_r - d * np.sin(theta_r)
    py = y_r + d * np.cos(theta_r)
    delta = np.arctan2(d_prime, om)
    theta = wrap_angle(theta_r + delta)
    cosd = np.cos(delta)
    tand = np.tan(delta)
    krd_prime = kappa_r_rate * d + kappa_r * d_prime
    kappa_p = (d_dprime + krd_prime * tand) * cosd ** 3 / om ** 2 + kappa_r * cosd / om
    v = s_dot * np.sqrt(om ** 2 + d_prime ** 2)
    delta_prime = kappa_p * om / cosd - kappa_r
    a = s_ddot * om / cosd + s_dot ** 2 / cosd * (d_prime * delta_prime - krd_prime)
    return px, py, theta, kappa_p, v, a, valid
