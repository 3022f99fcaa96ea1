"""Reference wake physics: Gaussian analytical wake and the curled-wake
forward-marching solver.

Both models produce hub-height ``WakeField`` tiles on a standard extent of
x in [-1, 14] and y in [-3, 3] rotor diameters around the turbine.  The
Gaussian tile is the "exact" standard the surrogates are scored against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NearWakeError, SolverInstabilityError
from .turbine import FlowConditions, TurbineSpec, axial_induction, interp_ct

TILE_X_DIAMETERS = (-1.0, 14.0)
TILE_Y_DIAMETERS = (-3.0, 3.0)

# Jimenez-style deflection decay rate.
DEFAULT_KD = 0.05


@dataclass(frozen=True)
class GaussianParams:
    """Wake growth rate k* and initial expansion epsilon of the Gaussian model."""

    k_star: float
    epsilon: float

    def __post_init__(self):
        if self.k_star <= 0 or self.epsilon <= 0:
            raise ConfigError("k_star and epsilon must be positive")

    @staticmethod
    def for_conditions(ti: float, ct: float) -> "GaussianParams":
        """TI-dependent growth rate and thrust-dependent initial expansion.

        epsilon is floored at sqrt(ct/8) so the deficit stays real over the
        whole tile (the analytical model is otherwise undefined in the near
        wake at low TI).
        """
        k_star = 0.38 * ti + 0.004
        s = math.sqrt(max(1.0 - ct, 1e-12))
        beta = 0.5 * (1.0 + s) / s
        epsilon = 0.2 * math.sqrt(beta)
        if not math.isfinite(epsilon):
            epsilon = 0.25
        return GaussianParams(k_star, max(epsilon, math.sqrt(ct / 8.0)))


@dataclass
class WakeField:
    """Rectangular hub-height grid of streamwise wind speed.

    ``values`` is (nx, ny) row-major with x varying along axis 0; coordinates
    are turbine-local (rotor at x = 0, hub axis at y = 0).
    """

    values: np.ndarray
    x_range: tuple      # (x_min, x_max) [m]
    y_range: tuple      # (y_min, y_max) [m]
    conditions: FlowConditions

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        nx, ny = self.values.shape
        if nx < 2 or ny < 2:
            raise ConfigError("grid counts must be at least 2")
        if not (self.x_range[0] < self.x_range[1] and self.y_range[0] < self.y_range[1]):
            raise ConfigError("field extents must be strictly ordered")

    @property
    def nx(self) -> int:
        return self.values.shape[0]

    @property
    def ny(self) -> int:
        return self.values.shape[1]

    def x_coords(self) -> np.ndarray:
        return np.linspace(self.x_range[0], self.x_range[1], self.nx)

    def y_coords(self) -> np.ndarray:
        return np.linspace(self.y_range[0], self.y_range[1], self.ny)


def tile_extent(spec: TurbineSpec):
    """Standard tile extent around one turbine, metres."""
    d0 = spec.rotor_diameter
    return (TILE_X_DIAMETERS[0] * d0, TILE_X_DIAMETERS[1] * d0,
            TILE_Y_DIAMETERS[0] * d0, TILE_Y_DIAMETERS[1] * d0)


def expansion_K(x, d0: float, params: GaussianParams):
    """Squared wake-expansion K = (k* x/d0 + eps)^2."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise NearWakeError(float(np.min(x)), "expansion_K requires x >= 0")
    out = (params.k_star * x / d0 + params.epsilon) ** 2
    return float(out) if out.ndim == 0 else out


def effective_ct(spec: TurbineSpec, u_rotor: float, yaw: float) -> float:
    """Thrust coefficient at the rotor-effective speed, reduced by cos^2(yaw)."""
    return interp_ct(spec, u_rotor) * math.cos(math.radians(yaw)) ** 2


def deflection_offset(x, yaw: float, ct: float, d0: float, k_d: float = DEFAULT_KD):
    """Lateral wake-centerline offset y_c(x) [m] from a Jimenez-style skew model.

    theta(x) = theta0 / (1 + k_d x/d0)^2 integrated analytically from 0 to x.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise NearWakeError(float(np.min(x)), "deflection requires x >= 0")
    g = math.radians(yaw)
    theta0 = 0.5 * ct * math.sin(g) * math.cos(g) ** 2
    # int_0^x theta0 / (1 + k_d s/d0)^2 ds = theta0 d0/k_d (1 - 1/(1 + k_d x/d0))
    out = theta0 * (d0 / k_d) * (1.0 - 1.0 / (1.0 + k_d * x / d0))
    return float(out) if out.ndim == 0 else out


def gaussian_deficit(x, y, z, cond: FlowConditions, spec: TurbineSpec,
                     params: GaussianParams | None = None, ct: float | None = None):
    """Normalized deficit du/u0 of the Gaussian wake at (x, y, z); 0 for x < 0.

    Accepts scalars or broadcastable arrays.  ``ct`` defaults to the table
    thrust at u0 scaled by cos^2(yaw); ``params`` to the TI/thrust defaults.
    """
    if ct is None:
        ct = effective_ct(spec, cond.u0, cond.yaw)
    if params is None:
        params = GaussianParams.for_conditions(cond.ti, ct)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    d0 = spec.rotor_diameter
    xp = np.maximum(x, 0.0)
    K = (params.k_star * xp / d0 + params.epsilon) ** 2
    radical = 1.0 - ct / (8.0 * K)
    # when the epsilon floor is active the radical is exactly 0 at x = 0 in
    # real arithmetic; tolerate the rounding of that cancellation
    bad = (x >= 0) & (radical < -1e-12)
    if np.any(bad):
        raise NearWakeError(float(np.min(np.asarray(x)[bad])))
    yc = deflection_offset(xp, cond.yaw, ct, d0)
    amp = 1.0 - np.sqrt(np.maximum(radical, 0.0))
    shape = np.exp(-0.5 / K * (((z - spec.hub_height) / d0) ** 2
                               + ((y - yc) / d0) ** 2))
    out = np.where(x < 0, 0.0, amp * shape)
    return float(out) if out.ndim == 0 else out


def gaussian_wake_tile(cond: FlowConditions, spec: TurbineSpec,
                       params: GaussianParams | None = None,
                       nx: int = 64, ny: int = 64) -> WakeField:
    """Hub-height Gaussian wake tile on the standard extent."""
    if nx < 2 or ny < 2:
        raise ConfigError("grid counts must be at least 2")
    x0, x1, y0, y1 = tile_extent(spec)
    x = np.linspace(x0, x1, nx)[:, None]
    y = np.linspace(y0, y1, ny)[None, :]
    deficit = gaussian_deficit(x, y, spec.hub_height, cond, spec, params)
    return WakeField(cond.u0 * (1.0 - deficit), (x0, x1), (y0, y1), cond)


# ---------------------------------------------------------------------------
# Curled-wake solver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CurlSolverConfig:
    """Transverse grid, effective viscosity and vortex discretization."""

    ny_solver: int = 128
    nz_solver: int = 64
    c_visc: float = 0.12           # nu_eff = c_visc * ti * u0 * d0 (see scripts/calibrate_curl.py)
    n_vortices: int = 32
    core_radius: float = 0.15      # fraction of d0
    march_safety: float = 0.3      # fraction of the combined stability limit
    edge_sharpness: int = 4        # super-Gaussian exponent of the rotor disc edge

    def __post_init__(self):
        if self.ny_solver < 16 or self.nz_solver < 16:
            raise ConfigError("solver grid counts must be at least 16")
        if self.c_visc < 0:
            raise ConfigError("c_visc must be non-negative")
        if not 0.0 < self.march_safety <= 1.0:
            raise ConfigError("march_safety must lie in (0, 1]")


def _solver_grid(spec: TurbineSpec, cfg: CurlSolverConfig):
    d0, zh = spec.rotor_diameter, spec.hub_height
    y = np.linspace(-4.0 * d0, 4.0 * d0, cfg.ny_solver)
    z = np.linspace(max(zh - 1.5 * d0, 1.0), zh + 1.5 * d0, cfg.nz_solver)
    return y, z


def curl_transverse_field(cond: FlowConditions, spec: TurbineSpec,
                          cfg: CurlSolverConfig):
    """(V, W) induced on the y-z solver grid by the yaw-shed vortex sheet.

    The sheet is discretized as counter-rotating Lamb-Oseen elements along
    the vertical rotor span with an elliptic circulation distribution; total
    strength Gamma = (pi/8) d0 u0 Ct sin(yaw) cos^2(yaw).
    """
    y, z = _solver_grid(spec, cfg)
    V = np.zeros((y.size, z.size))
    W = np.zeros_like(V)
    g = math.radians(cond.yaw)
    ct = interp_ct(spec, cond.u0)
    gamma_total = (math.pi / 8.0) * spec.rotor_diameter * cond.u0 * ct \
        * math.sin(g) * math.cos(g) ** 2
    if gamma_total == 0.0:
        return V, W
    d0, zh = spec.rotor_diameter, spec.hub_height
    R = d0 / 2.0
    rc = cfg.core_radius * d0
    # Element positions along the vertical span; strengths follow
    # d/dz of the elliptic distribution Gamma(z) = Gamma sqrt(1 - (z/R)^2).
    zeta = (np.arange(cfg.n_vortices) + 0.5) / cfg.n_vortices * 2.0 - 1.0
    dz = 2.0 * R / cfg.n_vortices
    strengths = gamma_total * (zeta / np.sqrt(1.0 - zeta ** 2 + 1e-12)) / R * dz
    zpos = zh + zeta * R
    yy = y[:, None]
    zz = z[None, :]
    for gk, zk in zip(strengths, zpos):
        dy = yy - 0.0
        dzk = zz - zk
        r2 = dy ** 2 + dzk ** 2
        factor = gk / (2.0 * math.pi) * (1.0 - np.exp(-r2 / rc ** 2)) / (r2 + 1e-12)
        V += -factor * dzk
        W += factor * dy
    return V, W


def _initial_deficit(cond, spec, cfg, y, z):
    """Rotor-plane perturbation u' = -2 a u0 inside the (yaw-projected) disc,
    smoothed by a super-Gaussian edge."""
    ct_eff = effective_ct(spec, cond.u0, cond.yaw)
    a = axial_induction(min(ct_eff, 0.999))
    R = spec.rotor_diameter / 2.0
    ry = R * abs(math.cos(math.radians(cond.yaw)))
    r2 = (y[:, None] / max(ry, 1e-6)) ** 2 + ((z[None, :] - spec.hub_height) / R) ** 2
    return -2.0 * a * cond.u0 * np.exp(-(r2 ** cfg.edge_sharpness))


def curl_march(cond: FlowConditions, spec: TurbineSpec, cfg: CurlSolverConfig,
               x_stations: np.ndarray):
    """March the linearized streamwise perturbation equation and return the
    hub-height profile u'(x, y) at each requested station (x >= 0).

    Solves U du'/dx = -V du'/dy - W du'/dz + nu (d2/dy2 + d2/dz2) u' with
    first-order upwind advection, central diffusion and u' = 0 boundaries.
    """
    y, z = _solver_grid(spec, cfg)
    hy = y[1] - y[0]
    hz = z[1] - z[0]
    U = cond.u0
    nu = cfg.c_visc * cond.ti * cond.u0 * spec.rotor_diameter
    V, W = curl_transverse_field(cond, spec, cfg)
    up = _initial_deficit(cond, spec, cfg, y, z)

    # Combined explicit stability limit (advection + diffusion).
    rate = np.max(np.abs(V)) / hy + np.max(np.abs(W)) / hz \
        + 2.0 * nu * (1.0 / hy ** 2 + 1.0 / hz ** 2)
    dx_max = cfg.march_safety * U / rate if rate > 0 else 0.5 * spec.rotor_diameter
    dx_max = min(dx_max, 0.5 * spec.rotor_diameter)

    iz_h = np.searchsorted(z, spec.hub_height)
    iz0 = min(max(iz_h - 1, 0), z.size - 2)
    wz = (spec.hub_height - z[iz0]) / hz

    vp = np.maximum(V, 0.0)
    vm = np.minimum(V, 0.0)
    wp = np.maximum(W, 0.0)
    wm = np.minimum(W, 0.0)

    def hub_row(field):
        return (1.0 - wz) * field[:, iz0] + wz * field[:, iz0 + 1]

    profiles = np.zeros((len(x_stations), y.size))
    x = 0.0
    for i, xs in enumerate(x_stations):
        while x < xs - 1e-9:
            dx = min(dx_max, xs - x)
            dyb = np.zeros_like(up)
            dyf = np.zeros_like(up)
            dyb[1:, :] = (up[1:, :] - up[:-1, :]) / hy
            dyf[:-1, :] = (up[1:, :] - up[:-1, :]) / hy
            dzb = np.zeros_like(up)
            dzf = np.zeros_like(up)
            dzb[:, 1:] = (up[:, 1:] - up[:, :-1]) / hz
            dzf[:, :-1] = (up[:, 1:] - up[:, :-1]) / hz
            adv = vp * dyb + vm * dyf + wp * dzb + wm * dzf
            lap = np.zeros_like(up)
            lap[1:-1, :] += (up[2:, :] - 2.0 * up[1:-1, :] + up[:-2, :]) / hy ** 2
            lap[:, 1:-1] += (up[:, 2:] - 2.0 * up[:, 1:-1] + up[:, :-2]) / hz ** 2
            up = up + dx / U * (-adv + nu * lap)
            up[0, :] = up[-1, :] = 0.0
            up[:, 0] = up[:, -1] = 0.0
            x += dx
            if not np.all(np.isfinite(up)) or np.max(np.abs(up)) > U:
                raise SolverInstabilityError(x)
        profiles[i] = hub_row(up)
    return y, profiles


def curl_wake_tile(cond: FlowConditions, spec: TurbineSpec,
                   cfg: CurlSolverConfig | None = None,
                   nx: int = 64, ny: int = 64) -> WakeField:
    """Hub-height curled-wake tile on the standard extent."""
    cfg = cfg or CurlSolverConfig()
    if nx < 2 or ny < 2:
        raise ConfigError("grid counts must be at least 2")
    x0, x1, y0, y1 = tile_extent(spec)
    xc = np.linspace(x0, x1, nx)
    yc = np.linspace(y0, y1, ny)
    downstream = xc >= 0.0
    ys, profiles = curl_march(cond, spec, cfg, xc[downstream])
    values = np.full((nx, ny), cond.u0)
    for row, prof in zip(np.nonzero(downstream)[0], profiles):
        values[row, :] = cond.u0 + np.interp(yc, ys, prof)
    np.clip(values, 0.0, cond.u0, out=values)
    return WakeField(values, (x0, x1), (y0, y1), cond)
