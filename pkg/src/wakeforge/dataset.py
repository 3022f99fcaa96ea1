"""Wake dataset generation, binary persistence and train/validation splits."""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ModelFormatError
from .turbine import DATASET_RANGES, FlowConditions, TurbineSpec, default_turbine_spec
from .wakes import CurlSolverConfig, curl_wake_tile, gaussian_wake_tile

_MAGIC = b"WKND"
_VERSION = 1
_KIND_TAGS = {"gaussian": 1, "curl": 2}
_KIND_NAMES = {v: k for k, v in _KIND_TAGS.items()}

DEFAULT_VALIDATION_COUNT = 200


@dataclass
class WakeDataset:
    """A stored collection of (FlowConditions -> wake tile) samples."""

    kind: str                       # "gaussian" | "curl"
    grid_shape: tuple               # (nx, ny)
    conditions: np.ndarray          # (n, 3) float32: u0, ti, yaw
    tiles: np.ndarray               # (n, nx, ny) float32
    seed: int
    ranges: tuple = DATASET_RANGES
    validation_count: int = DEFAULT_VALIDATION_COUNT

    def __post_init__(self):
        if self.kind not in _KIND_TAGS:
            raise ConfigError(f"unknown dataset kind {self.kind!r}")
        self.conditions = np.asarray(self.conditions, dtype=np.float32)
        self.tiles = np.asarray(self.tiles, dtype=np.float32)
        if self.tiles.shape[0] != self.conditions.shape[0]:
            raise ConfigError("conditions/tiles length mismatch")
        if self.tiles.shape[1:] != tuple(self.grid_shape):
            raise ConfigError("tile shape does not match grid_shape")
        if self.validation_count >= self.n and self.n > 0:
            raise ConfigError("validation split leaves no training samples")

    @property
    def n(self) -> int:
        return self.conditions.shape[0]

    def split(self):
        """(x_train, y_train, x_val, y_val) with flattened float64 tiles."""
        k = self.n - self.validation_count
        x = self.conditions.astype(float)
        y = self.tiles.reshape(self.n, -1).astype(float)
        return x[:k], y[:k], x[k:], y[k:]

    def normalized_split(self):
        """Split with tiles divided by each sample's free-stream speed (the
        decoder's training target convention)."""
        x_tr, y_tr, x_va, y_va = self.split()
        return (x_tr, y_tr / x_tr[:, 0][:, None],
                x_va, y_va / x_va[:, 0][:, None])


def sample_conditions(n: int, ranges=DATASET_RANGES, seed: int = 0) -> np.ndarray:
    """Latin-hypercube sample of (u0, ti, yaw) points, one stratum per sample
    and dimension."""
    if n < 1:
        raise ConfigError("n must be at least 1")
    for lo, hi in ranges:
        if not lo < hi:
            raise ConfigError("range bounds must be strictly ordered")
    rng = np.random.default_rng(seed)
    cols = []
    for lo, hi in ranges:
        strata = (rng.permutation(n) + rng.random(n)) / n
        cols.append(lo + strata * (hi - lo))
    return np.column_stack(cols)


def generate_dataset(kind: str, n: int, grid_shape=(64, 64), seed: int = 0,
                     spec: TurbineSpec | None = None,
                     curl_cfg: CurlSolverConfig | None = None,
                     ranges=DATASET_RANGES,
                     validation_count: int = DEFAULT_VALIDATION_COUNT,
                     extra_validation: bool = False) -> WakeDataset:
    """Generate n wake tiles from LHS-sampled conditions.

    With ``extra_validation`` the validation samples are drawn fresh (seed+1)
    and appended instead of held out from the n generated wakes."""
    if kind not in _KIND_TAGS:
        raise ConfigError(f"unknown dataset kind {kind!r}")
    spec = spec or default_turbine_spec()
    conds = sample_conditions(n, ranges, seed)
    if extra_validation:
        extra = sample_conditions(validation_count, ranges, seed + 1)
        conds = np.vstack([conds, extra])
    nx, ny = grid_shape

    def tile_for(row):
        cond = FlowConditions(*row)
        if kind == "gaussian":
            return gaussian_wake_tile(cond, spec, nx=nx, ny=ny).values
        return curl_wake_tile(cond, spec, curl_cfg, nx=nx, ny=ny).values

    tiles = np.stack([tile_for(row) for row in conds]).astype(np.float32)
    return WakeDataset(kind, (nx, ny), conds.astype(np.float32), tiles, seed,
                       tuple(tuple(r) for r in ranges), validation_count)


def save_dataset(dataset: WakeDataset, path):
    """Write the binary dataset plus a human-readable sidecar manifest."""
    buf = io.BytesIO()
    buf.write(_MAGIC)
    nx, ny = dataset.grid_shape
    buf.write(struct.pack("<IIIII", _VERSION, _KIND_TAGS[dataset.kind],
                          dataset.n, nx, ny))
    buf.write(struct.pack("<Q", dataset.seed))
    flat_ranges = [v for pair in dataset.ranges for v in pair]
    buf.write(np.asarray(flat_ranges, dtype="<f4").tobytes())
    for cond, tile in zip(dataset.conditions, dataset.tiles):
        buf.write(np.asarray(cond, dtype="<f4").tobytes())
        buf.write(np.asarray(tile, dtype="<f4").tobytes())
    buf.write(struct.pack("<I", dataset.validation_count))
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())
    _write_manifest(dataset, str(path) + ".manifest.txt")


def _write_manifest(dataset: WakeDataset, path):
    lines = [
        f"kind = {dataset.kind}",
        f"n = {dataset.n}",
        f"nx = {dataset.grid_shape[0]}",
        f"ny = {dataset.grid_shape[1]}",
        f"seed = {dataset.seed}",
        f"validation_count = {dataset.validation_count}",
    ]
    for name, (lo, hi) in zip(("u0_mps", "ti", "yaw_deg"), dataset.ranges):
        lines.append(f"range_{name} = [{lo}, {hi}]")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_dataset(path) -> WakeDataset:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ModelFormatError(f"bad magic {magic!r}")
        header = fh.read(20)
        if len(header) != 20:
            raise ModelFormatError("dataset file truncated")
        version, kind_tag, n, nx, ny = struct.unpack("<IIIII", header)
        if version != _VERSION:
            raise ModelFormatError(f"unsupported version {version}")
        if kind_tag not in _KIND_NAMES:
            raise ModelFormatError(f"unknown dataset kind tag {kind_tag}")
        seed_raw = fh.read(8)
        if len(seed_raw) != 8:
            raise ModelFormatError("dataset file truncated")
        (seed,) = struct.unpack("<Q", seed_raw)
        raw = fh.read(24)
        if len(raw) != 24:
            raise ModelFormatError("dataset file truncated")
        bounds = np.frombuffer(raw, dtype="<f4")
        ranges = tuple((float(bounds[2 * i]), float(bounds[2 * i + 1]))
                       for i in range(3))
        conds = np.empty((n, 3), dtype=np.float32)
        tiles = np.empty((n, nx, ny), dtype=np.float32)
        rec_len = 4 * (3 + nx * ny)
        for i in range(n):
            raw = fh.read(rec_len)
            if len(raw) != rec_len:
                raise ModelFormatError("dataset file truncated")
            rec = np.frombuffer(raw, dtype="<f4")
            conds[i] = rec[:3]
            tiles[i] = rec[3:].reshape(nx, ny)
        tail = fh.read(4)
        if len(tail) != 4:
            raise ModelFormatError("dataset file truncated")
        (validation_count,) = struct.unpack("<I", tail)
        if fh.read(1):
            raise ModelFormatError("trailing bytes after dataset footer")
    return WakeDataset(_KIND_NAMES[kind_tag], (nx, ny), conds, tiles, seed,
                       ranges, validation_count)
