"""Turbine specification, performance tables and reference power / local-TI labels.

The shipped default turbine is an NREL 5-MW-like machine (rotor 126 m, hub
90 m, rated 5 MW) with a documented Ct/Cp table embedded as a data file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from .errors import ConfigError, DomainError, LayoutError

BETZ_LIMIT = 0.593

# Crespo-Hernandez-style added-turbulence constants (c1, c2, c3, c4).
DEFAULT_TI_CONSTANTS = (0.73, 0.83, 0.03, -0.32)


@dataclass(frozen=True)
class TurbineSpec:
    """Rotor geometry, operating limits and performance tables."""

    rotor_diameter: float            # d0 [m]
    hub_height: float                # z_h [m]
    rated_power: float               # [W]
    cut_in_speed: float              # [m/s]
    cut_out_speed: float             # [m/s]
    ct_table: tuple                  # ((speed, Ct), ...) strictly increasing speed
    cp_table: tuple                  # ((speed, Cp), ...) strictly increasing speed
    yaw_power_exponent: float = 1.88
    rho: float = 1.225               # [kg/m^3]
    ti_constants: tuple = DEFAULT_TI_CONSTANTS

    def __post_init__(self):
        if self.rotor_diameter <= 0:
            raise ConfigError("rotor_diameter must be positive")
        if self.hub_height <= self.rotor_diameter / 2:
            raise ConfigError("hub_height must exceed rotor radius (rotor clears ground)")
        if not self.cut_in_speed < self.cut_out_speed:
            raise ConfigError("cut_in_speed must be below cut_out_speed")
        for name, table in (("ct", self.ct_table), ("cp", self.cp_table)):
            if len(table) == 0:
                raise ConfigError(f"{name} table is empty")
            speeds = [row[0] for row in table]
            if any(b <= a for a, b in zip(speeds, speeds[1:])):
                raise ConfigError(f"{name} table speeds must be strictly increasing")
        if any(not 0.0 < ct < 1.0 for _, ct in self.ct_table):
            raise ConfigError("all Ct values must lie in (0, 1)")
        if any(not 0.0 < cp <= BETZ_LIMIT for _, cp in self.cp_table):
            raise ConfigError(f"all Cp values must lie in (0, {BETZ_LIMIT}]")

    @property
    def rotor_area(self) -> float:
        return math.pi * self.rotor_diameter ** 2 / 4.0


@dataclass(frozen=True)
class FlowConditions:
    """Free-stream speed, ambient TI and turbine yaw: the 3-entry surrogate input."""

    u0: float    # [m/s]
    ti: float    # [-]
    yaw: float   # [deg], positive counter-clockwise seen from above

    def as_array(self) -> np.ndarray:
        return np.array([self.u0, self.ti, self.yaw], dtype=float)


# Dataset-generation ranges: u0 [m/s], ti [-], yaw [deg].
DATASET_RANGES = ((3.0, 15.0), (0.01, 0.2), (-35.0, 35.0))


@dataclass
class FarmLayout:
    """Turbine planform positions, per-turbine yaw and the shared turbine spec."""

    positions: np.ndarray            # (n, 2) [m]
    yaws: np.ndarray                 # (n,) [deg]
    spec: TurbineSpec
    min_spacing: float = 0.0         # [m]

    def __post_init__(self):
        self.positions = np.atleast_2d(np.asarray(self.positions, dtype=float))
        self.yaws = np.asarray(self.yaws, dtype=float).ravel()
        if self.positions.shape[0] < 1 or self.positions.shape[1] != 2:
            raise LayoutError("positions must be a non-empty (n, 2) array")
        if self.yaws.shape[0] != self.positions.shape[0]:
            raise LayoutError("positions and yaws must have equal length")

    @property
    def n_turbines(self) -> int:
        return self.positions.shape[0]

    def spacing_violations(self) -> float:
        """Largest pairwise spacing shortfall [m] (0 when feasible)."""
        if self.n_turbines < 2 or self.min_spacing <= 0:
            return 0.0
        d = self.positions[:, None, :] - self.positions[None, :, :]
        dist = np.hypot(d[..., 0], d[..., 1])
        np.fill_diagonal(dist, np.inf)
        return float(max(0.0, self.min_spacing - dist.min()))

    def check_spacing(self):
        short = self.spacing_violations()
        if short > 0:
            raise LayoutError(f"pairwise spacing violates min_spacing by {short:.2f} m")

    def with_yaws(self, yaws) -> "FarmLayout":
        return FarmLayout(self.positions.copy(), np.asarray(yaws, dtype=float),
                          self.spec, self.min_spacing)

    def with_positions(self, positions) -> "FarmLayout":
        return FarmLayout(np.asarray(positions, dtype=float), self.yaws.copy(),
                          self.spec, self.min_spacing)


def _interp_table(table, u):
    speeds = np.array([row[0] for row in table])
    vals = np.array([row[1] for row in table])
    return np.interp(u, speeds, vals)  # np.interp clamps outside the range


def interp_ct(spec: TurbineSpec, u) -> float:
    """Thrust coefficient at local speed u, clamped outside the table."""
    if len(spec.ct_table) == 0:
        raise ConfigError("ct table is empty")
    if np.any(np.asarray(u) < 0):
        raise DomainError("speed must be non-negative")
    out = _interp_table(spec.ct_table, u)
    return float(out) if np.isscalar(u) else out


def interp_cp(spec: TurbineSpec, u) -> float:
    """Power coefficient at local speed u, clamped outside the table."""
    if len(spec.cp_table) == 0:
        raise ConfigError("cp table is empty")
    if np.any(np.asarray(u) < 0):
        raise DomainError("speed must be non-negative")
    out = _interp_table(spec.cp_table, u)
    return float(out) if np.isscalar(u) else out


def turbine_power(spec: TurbineSpec, u_eff: float, yaw: float = 0.0) -> float:
    """Shaft power [W] at effective rotor speed u_eff and yaw misalignment.

    P = 1/2 rho A Cp(u) u^3 cos(yaw)^pP, clamped to [0, rated]; zero outside
    the [cut-in, cut-out) operating band.
    """
    if u_eff < 0:
        raise DomainError("u_eff must be non-negative")
    if u_eff < spec.cut_in_speed or u_eff >= spec.cut_out_speed:
        return 0.0
    cp = interp_cp(spec, u_eff)
    cos_loss = math.cos(math.radians(yaw)) ** spec.yaw_power_exponent
    p = 0.5 * spec.rho * spec.rotor_area * cp * u_eff ** 3 * cos_loss
    return float(min(max(p, 0.0), spec.rated_power))


def axial_induction(ct: float) -> float:
    """Momentum-theory induction a = (1 - sqrt(1 - ct)) / 2."""
    if not 0.0 <= ct < 1.0:
        raise DomainError(f"ct = {ct} outside [0, 1)")
    return 0.5 * (1.0 - math.sqrt(1.0 - ct))


def local_ti_added(ti_ambient: float, ct: float, downstream_distance: float,
                   d0: float, constants=DEFAULT_TI_CONSTANTS) -> float:
    """Wake-added turbulence intensity at a downstream distance."""
    if downstream_distance <= 0:
        raise DomainError("downstream_distance must be positive")
    if not 0.0 < ct < 1.0:
        raise DomainError("ct must lie in (0, 1)")
    if ti_ambient <= 0:
        raise DomainError("ti_ambient must be positive")
    c1, c2, c3, c4 = constants
    a = axial_induction(ct)
    return c1 * a ** c2 * ti_ambient ** c3 * (downstream_distance / d0) ** c4


def local_ti_oracle(ti_ambient: float, ct: float, downstream_distance: float,
                    d0: float, constants=DEFAULT_TI_CONSTANTS) -> float:
    """Reference local TI behind a single turbine: root-sum-square of ambient
    and the empirical added component."""
    ti_add = local_ti_added(ti_ambient, ct, downstream_distance, d0, constants)
    return math.sqrt(ti_ambient ** 2 + ti_add ** 2)


# ---------------------------------------------------------------------------
# Turbine specification file (flat key = value text with inline ct/cp tables)
# ---------------------------------------------------------------------------

_SCALAR_KEYS = {
    "rotor_diameter": "rotor_diameter",
    "hub_height": "hub_height",
    "rated_power": "rated_power",
    "cut_in": "cut_in_speed",
    "cut_out": "cut_out_speed",
    "rho": "rho",
    "yaw_power_exponent": "yaw_power_exponent",
}


def parse_turbine_spec(text: str) -> TurbineSpec:
    """Parse the turbine specification text format.

    Scalar lines are ``key = value``; the two tables are introduced by a
    ``ct:`` / ``cp:`` line followed by ``speed value`` rows.
    """
    scalars = {}
    tables = {"ct": [], "cp": []}
    current = None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line in ("ct:", "cp:"):
            current = line[:-1]
            continue
        if "=" in line:
            current = None
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _SCALAR_KEYS:
                raise ConfigError(f"unknown turbine spec key: {key!r}")
            scalars[_SCALAR_KEYS[key]] = float(value)
            continue
        if current is None:
            raise ConfigError(f"unexpected line in turbine spec: {raw!r}")
        parts = line.split()
        if len(parts) != 2:
            raise ConfigError(f"table rows need two columns: {raw!r}")
        tables[current].append((float(parts[0]), float(parts[1])))
    missing = set(_SCALAR_KEYS.values()) - set(scalars) - {"rho", "yaw_power_exponent"}
    if missing:
        raise ConfigError(f"turbine spec missing keys: {sorted(missing)}")
    return TurbineSpec(ct_table=tuple(tables["ct"]), cp_table=tuple(tables["cp"]),
                       **scalars)


def load_turbine_spec(path) -> TurbineSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_turbine_spec(fh.read())


def default_turbine_spec() -> TurbineSpec:
    """The shipped NREL 5-MW-like turbine."""
    text = resources.files("wakeforge.data").joinpath("nrel5mw.txt").read_text()
    return parse_turbine_spec(text)


# ---------------------------------------------------------------------------
# Layout file (one "x y yaw" row per turbine; optional min_spacing header)
# ---------------------------------------------------------------------------

def parse_layout(text: str, spec: TurbineSpec) -> FarmLayout:
    positions, yaws = [], []
    min_spacing = 0.0
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, value = (part.strip() for part in line.split("=", 1))
            if key != "min_spacing":
                raise ConfigError(f"unknown layout key: {key!r}")
            min_spacing = float(value)
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise ConfigError(f"layout rows are 'x y [yaw]': {raw!r}")
        positions.append((float(parts[0]), float(parts[1])))
        yaws.append(float(parts[2]) if len(parts) == 3 else 0.0)
    if not positions:
        raise ConfigError("layout file contains no turbines")
    return FarmLayout(np.array(positions), np.array(yaws), spec, min_spacing)


def load_layout(path, spec: TurbineSpec) -> FarmLayout:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_layout(fh.read(), spec)


def case_layout(name: str, spec: TurbineSpec | None = None) -> FarmLayout:
    """Shipped benchmark layouts: 'a' (6 turbines) or 'b' (15 turbines)."""
    spec = spec or default_turbine_spec()
    fname = {"a": "case_a.txt", "b": "case_b.txt"}.get(name.lower())
    if fname is None:
        raise ConfigError(f"unknown case layout {name!r}")
    text = resources.files("wakeforge.data").joinpath(fname).read_text()
    return parse_layout(text, spec)
