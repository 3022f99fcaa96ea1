"""Calibrate the curled-wake effective-viscosity coefficient.

Sweeps the c_visc coefficient and reports, for unyawed mid-range inflow
conditions, the mean absolute centerline-speed mismatch between the curl
solver and the analytic Gaussian model over the far wake (4-12 rotor
diameters downstream).  The shipped default should keep the mismatch within
15% of the free-stream speed for every tested condition.

Run from the repository root:  python3 scripts/calibrate_curl.py
"""

import numpy as np

from wakeforge.turbine import FlowConditions, default_turbine_spec
from wakeforge.wakes import (CurlSolverConfig, curl_wake_tile,
                             gaussian_wake_tile)

CONDITIONS = [
    FlowConditions(8.0, 0.06, 0.0),
    FlowConditions(8.0, 0.10, 0.0),
    FlowConditions(11.0, 0.08, 0.0),
    FlowConditions(6.0, 0.12, 0.0),
]
CANDIDATES = [0.02, 0.04, 0.06, 0.08, 0.12, 0.16]
TARGET_PCT = 15.0


def centerline(tile, spec):
    """Centerline speeds over x/d0 in [4, 12]."""
    nx, ny = tile.values.shape
    x = np.linspace(tile.x_range[0], tile.x_range[1], nx) / spec.rotor_diameter
    sel = (x >= 4.0) & (x <= 12.0)
    return tile.values[sel, ny // 2]


def main():
    spec = default_turbine_spec()
    print("c_visc  " + "  ".join(f"u{c.u0:.0f}/ti{c.ti:.2f}" for c in CONDITIONS)
          + "   worst")
    results = []
    for c_visc in CANDIDATES:
        cfg = CurlSolverConfig(c_visc=c_visc)
        errors = []
        for cond in CONDITIONS:
            ref = centerline(gaussian_wake_tile(cond, spec), spec)
            got = centerline(curl_wake_tile(cond, spec, cfg), spec)
            errors.append(float(np.mean(np.abs(got - ref)) / cond.u0 * 100.0))
        worst = max(errors)
        results.append((c_visc, worst))
        print(f"{c_visc:6.2f}  " + "  ".join(f"{e:10.2f}" for e in errors)
              + f"  {worst:6.2f}%")
    # Smallest coefficient meeting the target keeps the most curl character;
    # fall back to the overall best if none qualifies.
    ok = [r for r in results if r[1] <= TARGET_PCT]
    pick = min(ok) if ok else min(results, key=lambda r: r[1])
    print(f"\nrecommended c_visc = {pick[0]} "
          f"(worst far-wake centerline mismatch {pick[1]:.2f}% of u0)")


if __name__ == "__main__":
    main()
