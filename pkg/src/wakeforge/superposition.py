"""Sum-of-squares wake superposition and farm flow assembly.

Per-turbine tiles (reference physics or surrogate) are pasted onto a farm
canvas; deficits combine by root-sum-of-squares against the inlet speed,
with the uniform-hub-velocity approximation supplying each turbine's inflow
and a pluggable provider supplying its local TI.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, LayoutError, SamplingError
from .turbine import FarmLayout, FlowConditions
from .wakes import WakeField

N_LINE_SAMPLES = 21
LINE_UPSTREAM_DISTANCE = 50.0   # m

UPSTREAM_MARGIN_D = 2.0
LATERAL_MARGIN_D = 2.0
DOWNSTREAM_MARGIN_D = 10.0


@dataclass
class UpstreamInfo:
    """Geometry of one upstream wake source as seen from a waked turbine."""

    index: int
    dx: float          # streamwise separation [m], > 0
    dy: float          # lateral separation (receiver minus source) [m]
    ct: float          # effective thrust of the source at its inflow
    yaw: float         # source yaw [deg]
    hub_speed: float   # inflow speed the source tile was generated with


@dataclass
class TurbineContext:
    """Everything a local-TI provider may consult for one turbine."""

    index: int
    layout: FarmLayout
    u_inf: float
    ti_inf: float
    hub_inflow: float
    line_speeds: np.ndarray
    upstream: list


@dataclass
class FarmFlowField:
    """Combined farm flow on a hub-height canvas plus per-turbine diagnostics."""

    values: np.ndarray
    x_range: tuple
    y_range: tuple
    u_inf: float
    ti_inf: float
    layout: FarmLayout
    hub_speeds: np.ndarray = field(default=None)
    local_tis: np.ndarray = field(default=None)
    tile_inflows: list = field(default=None)

    def x_coords(self):
        return np.linspace(self.x_range[0], self.x_range[1], self.values.shape[0])

    def y_coords(self):
        return np.linspace(self.y_range[0], self.y_range[1], self.values.shape[1])


def sos_combine(per_wake_speeds, u_inf: float) -> float:
    """Combine wake speeds by the sum-of-squares rule.

    ``per_wake_speeds`` is a sequence of (u_ij, u_hub_j) pairs; the result is
    (1 - sqrt(sum_j (1 - u_ij/u_hub_j)^2)) u_inf, clamped below at zero.
    """
    pairs = list(per_wake_speeds)
    if not pairs:
        raise DomainError("per_wake_speeds must be non-empty")
    total = 0.0
    for u_ij, u_hub in pairs:
        if u_hub <= 0:
            raise DomainError("hub speed must be positive")
        total += (1.0 - u_ij / u_hub) ** 2
    return max((1.0 - math.sqrt(total)) * u_inf, 0.0)


def _bilinear(values, x_range, y_range, xq, yq):
    """Sample a regular (nx, ny) grid at query points; raises outside the grid."""
    nx, ny = values.shape
    dx = (x_range[1] - x_range[0]) / (nx - 1)
    dy = (y_range[1] - y_range[0]) / (ny - 1)
    fx = (np.asarray(xq, dtype=float) - x_range[0]) / dx
    fy = (np.asarray(yq, dtype=float) - y_range[0]) / dy
    if np.any(fx < -1e-9) or np.any(fx > nx - 1 + 1e-9) \
            or np.any(fy < -1e-9) or np.any(fy > ny - 1 + 1e-9):
        raise SamplingError("query point outside grid")
    fx = np.clip(fx, 0.0, nx - 1)
    fy = np.clip(fy, 0.0, ny - 1)
    i0 = np.minimum(fx.astype(int), nx - 2)
    j0 = np.minimum(fy.astype(int), ny - 2)
    tx = fx - i0
    ty = fy - j0
    return ((1 - tx) * (1 - ty) * values[i0, j0]
            + tx * (1 - ty) * values[i0 + 1, j0]
            + (1 - tx) * ty * values[i0, j0 + 1]
            + tx * ty * values[i0 + 1, j0 + 1])


def _line_points(layout: FarmLayout, i: int, n_line: int):
    """Sample points of the upstream rotor line of turbine i."""
    d0 = layout.spec.rotor_diameter
    g = math.radians(layout.yaws[i])
    s = np.linspace(-d0 / 2.0, d0 / 2.0, n_line)
    hx, hy = layout.positions[i]
    # Line parallel to the yawed rotor plane, 50 m upstream of the hub.
    return (hx - LINE_UPSTREAM_DISTANCE - s * math.sin(g),
            hy + s * math.cos(g))


def rotor_line_sample(field: FarmFlowField, i: int,
                      n_line: int = N_LINE_SAMPLES) -> np.ndarray:
    """Wind speeds along the rotor-parallel line 50 m upstream of turbine i."""
    xq, yq = _line_points(field.layout, i, n_line)
    return _bilinear(field.values, field.x_range, field.y_range, xq, yq)


def hub_speed(field: FarmFlowField, i: int) -> float:
    """Uniform-hub approximation: mean of the upstream rotor-line samples."""
    return float(np.mean(rotor_line_sample(field, i)))


def ambient_ti_provider(ctx: TurbineContext) -> float:
    """Local-TI provider that ignores wakes entirely."""
    return ctx.ti_inf


def oracle_ti_provider(ctx: TurbineContext) -> float:
    """Reference local TI: ambient plus the strongest upstream added-TI
    contribution, overlap-weighted by the Gaussian wake width."""
    from .turbine import local_ti_added
    from .wakes import GaussianParams, deflection_offset

    spec = ctx.layout.spec
    d0 = spec.rotor_diameter
    best = 0.0
    for up in ctx.upstream:
        if up.dx <= 0 or not 0.0 < up.ct < 1.0:
            continue
        ti_add = local_ti_added(ctx.ti_inf, up.ct, up.dx, d0,
                                spec.ti_constants)
        params = GaussianParams.for_conditions(ctx.ti_inf, up.ct)
        sigma = math.sqrt((params.k_star * up.dx / d0 + params.epsilon) ** 2) * d0
        yc = deflection_offset(up.dx, up.yaw, up.ct, d0)
        weight = math.exp(-0.5 * ((up.dy - yc) / sigma) ** 2)
        best = max(best, ti_add * weight)
    return math.sqrt(ctx.ti_inf ** 2 + best ** 2)


def assemble_farm_flow(layout: FarmLayout, inflow, tile_provider,
                       ti_provider=oracle_ti_provider,
                       tile_shape=(64, 64)) -> FarmFlowField:
    """Assemble the farm-wide flow field for wind along +x.

    Turbines are processed in ascending x (ties by ascending y); each gets a
    hub inflow from the SOS of already-pasted upstream tiles, a local TI from
    ``ti_provider``, and a tile from ``tile_provider`` generated with
    (hub inflow, local TI, its yaw).
    """
    from .turbine import interp_ct
    from .wakes import tile_extent

    u_inf, ti_inf = inflow
    spec = layout.spec
    d0 = spec.rotor_diameter

    tx0, tx1, ty0, ty1 = tile_extent(spec)
    dx_t = (tx1 - tx0) / (tile_shape[0] - 1)
    dy_t = (ty1 - ty0) / (tile_shape[1] - 1)

    px = layout.positions[:, 0]
    py = layout.positions[:, 1]
    x0 = px.min() - UPSTREAM_MARGIN_D * d0
    x1 = px.max() + DOWNSTREAM_MARGIN_D * d0
    y0 = py.min() - LATERAL_MARGIN_D * d0 - ty1
    y1 = py.max() + LATERAL_MARGIN_D * d0 + ty1
    nx = int(math.ceil((x1 - x0) / dx_t)) + 1
    ny = int(math.ceil((y1 - y0) / dy_t)) + 1
    gx = np.linspace(x0, x1, nx)
    gy = np.linspace(y0, y1, ny)

    sq_sum = np.zeros((nx, ny))
    n = layout.n_turbines
    hub_speeds = np.zeros(n)
    local_tis = np.zeros(n)
    tile_inflows: list = [None] * n
    processed: list = []

    def partial_field():
        vals = np.clip((1.0 - np.sqrt(sq_sum)) * u_inf, 0.0, None)
        return FarmFlowField(vals, (x0, x1), (y0, y1), u_inf, ti_inf, layout)

    order = sorted(range(n), key=lambda i: (px[i], py[i]))
    for i in order:
        snapshot = partial_field()
        line = rotor_line_sample(snapshot, i)
        u_hub = float(np.mean(line))
        if u_hub <= 0:
            u_hub = 1e-6
        upstream = [
            UpstreamInfo(j, px[i] - px[j], py[i] - py[j], ct_j, layout.yaws[j], hs_j)
            for j, ct_j, hs_j in processed if px[j] < px[i]
        ]
        ctx = TurbineContext(i, layout, u_inf, ti_inf, u_hub, line, upstream)
        ti_local = float(ti_provider(ctx))
        cond = FlowConditions(u_hub, ti_local, float(layout.yaws[i]))
        tile: WakeField = tile_provider(cond)
        _paste_tile(sq_sum, gx, gy, tile, px[i], py[i], u_hub)
        hub_speeds[i] = u_hub
        local_tis[i] = ti_local
        tile_inflows[i] = cond
        ct_eff = interp_ct(spec, u_hub) * math.cos(math.radians(layout.yaws[i])) ** 2
        processed.append((i, ct_eff, u_hub))

    values = np.clip((1.0 - np.sqrt(sq_sum)) * u_inf, 0.0, None)
    return FarmFlowField(values, (x0, x1), (y0, y1), u_inf, ti_inf, layout,
                         hub_speeds, local_tis, tile_inflows)


def _paste_tile(sq_sum, gx, gy, tile: WakeField, x_t, y_t, u_hub):
    """Accumulate the tile's squared normalized deficit onto the canvas."""
    lx0 = tile.x_range[0] + x_t
    lx1 = tile.x_range[1] + x_t
    ly0 = tile.y_range[0] + y_t
    ly1 = tile.y_range[1] + y_t
    isel = np.nonzero((gx >= lx0) & (gx <= lx1))[0]
    jsel = np.nonzero((gy >= ly0) & (gy <= ly1))[0]
    if isel.size == 0 or jsel.size == 0:
        raise LayoutError("turbine tile lies outside the farm grid")
    xq = gx[isel][:, None] - x_t + np.zeros((1, jsel.size))
    yq = gy[jsel][None, :] - y_t + np.zeros((isel.size, 1))
    u_tile = _bilinear(tile.values, tile.x_range, tile.y_range, xq, yq)
    deficit = np.clip(1.0 - u_tile / u_hub, 0.0, None)
    sq_sum[np.ix_(isel, jsel)] += deficit ** 2
