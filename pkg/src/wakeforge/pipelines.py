"""Evaluator pipelines: the reference (analytic/PDE) and surrogate
(network) farm-evaluation stacks behind one interface.

An evaluator bundles a tile provider, a local-TI provider and a power rule;
``farm_power`` runs the SOS assembly with them and sums per-turbine power.
Surrogate evaluators always have a matching reference evaluator used to
re-score optimization gains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .network import NetworkModel, ddn_forward, power_net_forward, ti_net_forward
from .superposition import (FarmFlowField, ambient_ti_provider,
                            assemble_farm_flow, oracle_ti_provider,
                            rotor_line_sample)
from .turbine import FarmLayout, FlowConditions, TurbineSpec, turbine_power
from .wakes import (CurlSolverConfig, WakeField, curl_wake_tile,
                    gaussian_wake_tile, tile_extent)

EVALUATOR_TAGS = ("reference-gaussian", "reference-curl", "surrogate-gaussian",
                  "surrogate-curl", "surrogate-curl-TL")

YAW_BOUNDS = (-35.0, 35.0)


@dataclass
class Evaluator:
    tag: str
    spec: TurbineSpec
    tile_provider: object
    ti_provider: object
    power_mode: str                  # "table" | "net"
    power_net: NetworkModel | None = None
    tile_shape: tuple = (64, 64)
    curl_cfg: CurlSolverConfig | None = None

    def __post_init__(self):
        if self.tag not in EVALUATOR_TAGS:
            raise ConfigError(f"unknown evaluator tag {self.tag!r}")
        if self.power_mode == "net" and self.power_net is None:
            raise ConfigError("net power mode requires a power network")

    @property
    def base_model(self) -> str:
        return "curl" if "curl" in self.tag else "gaussian"

    @property
    def is_reference(self) -> bool:
        return self.tag.startswith("reference")


def reference_evaluator(spec: TurbineSpec, model: str = "gaussian",
                        curl_cfg: CurlSolverConfig | None = None,
                        tile_shape=(64, 64)) -> Evaluator:
    """The internally implemented physics pipeline playing the role of 'Exact'."""
    if model == "gaussian":
        def tiles(cond):
            return gaussian_wake_tile(cond, spec, nx=tile_shape[0], ny=tile_shape[1])
        return Evaluator("reference-gaussian", spec, tiles, oracle_ti_provider,
                         "table", tile_shape=tile_shape)
    if model == "curl":
        cfg = curl_cfg or CurlSolverConfig()

        def tiles(cond):
            return curl_wake_tile(cond, spec, cfg, nx=tile_shape[0], ny=tile_shape[1])
        return Evaluator("reference-curl", spec, tiles, oracle_ti_provider,
                         "table", tile_shape=tile_shape, curl_cfg=cfg)
    raise ConfigError(f"unknown reference model {model!r}")


def decoder_tile(model: NetworkModel, cond: FlowConditions,
                 spec: TurbineSpec) -> WakeField:
    """Wrap a decoder evaluation as a WakeField on the standard tile extent."""
    values = ddn_forward(model, cond)
    x0, x1, y0, y1 = tile_extent(spec)
    return WakeField(values, (x0, x1), (y0, y1), cond)


def surrogate_evaluator(spec: TurbineSpec, decoder: NetworkModel,
                        power_net: NetworkModel, ti_net: NetworkModel | None,
                        tag: str = "surrogate-gaussian",
                        use_ti_net: bool = True,
                        curl_cfg: CurlSolverConfig | None = None) -> Evaluator:
    """Network pipeline: decoder tiles, TI-net local TI, power-net turbine power.

    With ``use_ti_net`` disabled every tile is generated at ambient TI (the
    uncorrected cascade mode)."""
    if not tag.startswith("surrogate"):
        raise ConfigError("surrogate evaluator tags must start with 'surrogate'")

    def tiles(cond):
        return decoder_tile(decoder, cond, spec)

    if use_ti_net:
        if ti_net is None:
            raise ConfigError("use_ti_net requires a TI network")

        def ti_provider(ctx):
            return ti_net_forward(ti_net, ctx.line_speeds, ctx.ti_inf,
                                  ctx.layout.yaws[ctx.index])
    else:
        ti_provider = ambient_ti_provider

    return Evaluator(tag, spec, tiles, ti_provider, "net", power_net,
                     tuple(decoder.output_shape), curl_cfg)


def matching_reference(evaluator: Evaluator) -> Evaluator:
    """The reference evaluator that re-scores this evaluator's decisions."""
    if evaluator.is_reference:
        return evaluator
    return reference_evaluator(evaluator.spec, evaluator.base_model,
                               evaluator.curl_cfg, evaluator.tile_shape)


def evaluate_farm(layout: FarmLayout, inflow, evaluator: Evaluator) -> FarmFlowField:
    return assemble_farm_flow(layout, inflow, evaluator.tile_provider,
                              evaluator.ti_provider, evaluator.tile_shape)


def turbine_powers(field: FarmFlowField, evaluator: Evaluator) -> np.ndarray:
    """Per-turbine power [W] from an assembled farm field."""
    layout = field.layout
    powers = np.zeros(layout.n_turbines)
    for i in range(layout.n_turbines):
        if evaluator.power_mode == "table":
            powers[i] = turbine_power(evaluator.spec, field.hub_speeds[i],
                                      layout.yaws[i])
        else:
            line = rotor_line_sample(field, i)
            powers[i] = power_net_forward(evaluator.power_net, line,
                                          field.local_tis[i], layout.yaws[i])
    return powers


def farm_power(layout: FarmLayout, yaws, inflow, evaluator: Evaluator) -> float:
    """Total farm power [W] with the given yaw settings (clipped to bounds)."""
    yaws = np.clip(np.asarray(yaws, dtype=float), *YAW_BOUNDS)
    lay = layout.with_yaws(yaws)
    field = evaluate_farm(lay, inflow, evaluator)
    return float(turbine_powers(field, evaluator).sum())
