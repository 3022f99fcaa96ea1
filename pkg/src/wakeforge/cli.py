"""Command-line entry point for dataset generation, training, transfer
learning, evaluation, optimization and report emission.

Exit codes: 0 success, 1 usage/config error, 2 numeric failure.  The
WAKEFORGE_SEED environment variable overrides any --seed flag.  Every flag
can also be supplied through a flat ``key = value`` config file via
--config; explicit command-line flags win over file values.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import plots
from .dataset import (DEFAULT_VALIDATION_COUNT, generate_dataset, load_dataset,
                      save_dataset)
from .errors import (ConfigError, DivergenceError, NearWakeError,
                     SolverInstabilityError, WakeforgeError)
from .network import (TrainConfig, accuracy, build_decoder, fine_tune,
                      load_model, save_model, set_input_norm, train)
from .optimize import OptConfig, heatmap, optimize_layout, optimize_yaw
from .pipelines import (EVALUATOR_TAGS, Evaluator, evaluate_farm,
                        reference_evaluator, surrogate_evaluator,
                        turbine_powers)
from .superposition import oracle_ti_provider
from .turbine import (FarmLayout, default_turbine_spec, load_layout,
                      load_turbine_spec)

_NUMERIC_ERRORS = (SolverInstabilityError, DivergenceError, NearWakeError)


@dataclass
class RunConfig:
    """Resolved invocation: command name, seed and the flag namespace."""

    command: str
    seed: int
    args: argparse.Namespace
    jobs: int = 1

    def __post_init__(self):
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")


# ---------------------------------------------------------------------------
# Config file / seed resolution
# ---------------------------------------------------------------------------

def read_config_file(path) -> dict:
    """Flat ``key = value`` text; keys use the flag spelling without dashes."""
    out = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for ln, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{ln}: expected 'key = value'")
                key, value = (s.strip() for s in line.split("=", 1))
                out[key.replace("-", "_")] = value
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    return out


def _apply_config(parser: argparse.ArgumentParser, args: argparse.Namespace):
    """Overlay config-file values under explicit CLI flags."""
    cfg_path = getattr(args, "config", None)
    if not cfg_path:
        return args
    # subcommand defaults live on the subparser, not the root parser
    parser = getattr(args, "_parser", parser)
    values = read_config_file(cfg_path)
    for key, raw in values.items():
        if not hasattr(args, key):
            raise ConfigError(f"unknown config key {key!r}")
        default = parser.get_default(key)
        if getattr(args, key) == default:  # flag not given on the CLI
            if isinstance(default, bool):
                setattr(args, key, raw.lower() in ("1", "true", "yes"))
            elif default is None:
                setattr(args, key, raw)
            else:
                setattr(args, key, type(default)(raw))
    return args


def resolve_seed(args) -> int:
    env = os.environ.get("WAKEFORGE_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"WAKEFORGE_SEED must be an integer: {env!r}") \
                from exc
    return int(getattr(args, "seed", 0))


def _parse_grid(text: str):
    try:
        nx, ny = (int(p) for p in text.lower().split("x"))
    except ValueError as exc:
        raise ConfigError(f"grid must look like 64x64, got {text!r}") from exc
    if nx < 2 or ny < 2:
        raise ConfigError("grid must be at least 2x2")
    return nx, ny


def _parse_pair(text: str, name: str):
    try:
        lo, hi = (float(p) for p in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"{name} must look like 'lo,hi', got {text!r}") from exc
    if not lo < hi:
        raise ConfigError(f"{name} bounds must be ordered")
    return lo, hi


def _spec_from_args(args):
    path = getattr(args, "turbine", None)
    return load_turbine_spec(path) if path else default_turbine_spec()


def _build_evaluator(args, spec) -> Evaluator:
    tag = args.evaluator
    if tag not in EVALUATOR_TAGS:
        raise ConfigError(f"evaluator must be one of {', '.join(EVALUATOR_TAGS)}")
    if tag.startswith("reference"):
        return reference_evaluator(spec, "curl" if "curl" in tag else "gaussian")
    for flag in ("decoder", "power_net"):
        if getattr(args, flag, None) is None:
            raise ConfigError(f"surrogate evaluators need --{flag.replace('_', '-')}")
    decoder = load_model(args.decoder)
    power_net = load_model(args.power_net)
    ti_net = load_model(args.ti_net) if getattr(args, "ti_net", None) else None
    return surrogate_evaluator(spec, decoder, power_net, ti_net, tag,
                               use_ti_net=ti_net is not None)


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_history(history, path):
    _write_csv(path,
               ["epoch", "lr [-]", "train_loss [-]", "val_loss [-]",
                "val_accuracy [%]"],
               [[r.epoch, r.lr, r.train_loss, r.val_loss, r.val_accuracy]
                for r in history.records])


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_gen(args) -> int:
    seed = resolve_seed(args)
    grid = _parse_grid(args.grid)
    spec = _spec_from_args(args)
    validation = args.validation_count
    if not args.extra_validation and validation >= args.n:
        raise ConfigError("validation count must be below n when held out")
    dataset = generate_dataset(args.model, args.n, grid, seed, spec,
                               validation_count=validation,
                               extra_validation=args.extra_validation)
    save_dataset(dataset, args.out)
    print(f"wrote {dataset.n} {dataset.kind} wakes to {args.out}")
    return 0


def _train_decoder_on(dataset, cfg: TrainConfig):
    x_tr, y_tr, x_va, y_va = dataset.normalized_split()
    nx, ny = dataset.grid_shape
    model = build_decoder(nx, ny, seed=cfg.seed)
    set_input_norm(model, x_tr)
    history = train(model, x_tr, y_tr, x_va, y_va, cfg)
    return model, history


def _scheduler_from_args(args):
    if getattr(args, "no_scheduler", False):
        return None
    return (0.8, 15, "val_loss")


def cmd_train(args) -> int:
    seed = resolve_seed(args)
    dataset = load_dataset(args.dataset)
    cfg = TrainConfig(epochs=args.epochs, lr=args.lr,
                      batch_fraction=args.batch_fraction, seed=seed,
                      scheduler=_scheduler_from_args(args))
    model, history = _train_decoder_on(dataset, cfg)
    save_model(model, args.out)
    _write_history(history, args.out + ".history.csv")
    plots.history_figure(args.out + ".history.png", history)
    x_va, y_va = dataset.split()[2:]
    acc = accuracy(model, x_va, y_va)
    print(f"trained decoder on {args.dataset}: validation accuracy {acc:.3f}%")
    return 0


def cmd_transfer(args) -> int:
    seed = resolve_seed(args)
    pretrained = load_model(args.pretrained)
    dataset = load_dataset(args.dataset)
    frozen = tuple(int(p) for p in args.freeze.split(",") if p != "")
    mask = tuple(i in frozen for i in range(len(pretrained.layers)))
    cfg = TrainConfig(epochs=args.epochs, lr=args.lr,
                      batch_fraction=args.batch_fraction, seed=seed,
                      scheduler=_scheduler_from_args(args))
    x_tr, y_tr, x_va, y_va = dataset.normalized_split()
    model, history = fine_tune(pretrained, x_tr, y_tr, x_va, y_va, cfg, mask)
    save_model(model, args.out)
    _write_history(history, args.out + ".history.csv")
    plots.history_figure(args.out + ".history.png", history)
    x_va, y_va = dataset.split()[2:]
    acc = accuracy(model, x_va, y_va)
    print(f"fine-tuned {args.pretrained} on {args.dataset}: "
          f"validation accuracy {acc:.3f}%")
    return 0


def cmd_sweep_tl(args) -> int:
    seed = resolve_seed(args)
    pretrained = load_model(args.pretrained)
    full = load_dataset(args.dataset)
    sizes = tuple(int(p) for p in args.sizes.split(","))
    if any(s < 2 for s in sizes):
        raise ConfigError("sweep sizes must be at least 2")
    val = full.validation_count
    if max(sizes) + val > full.n:
        raise ConfigError("dataset too small for the requested sweep sizes")
    x_all, y_all, x_va, y_va = full.normalized_split()
    rows = []
    for size in sizes:
        x_tr, y_tr = x_all[:size], y_all[:size]
        cfg_kw = dict(epochs=args.epochs, lr=args.lr,
                      batch_fraction=args.batch_fraction,
                      scheduler=(0.8, 15, "val_loss"), seed=seed)
        scratch = build_decoder(*full.grid_shape, seed=seed)
        set_input_norm(scratch, x_tr)
        h_scr = train(scratch, x_tr, y_tr, x_va, y_va, TrainConfig(**cfg_kw))
        _, h_tl = fine_tune(pretrained, x_tr, y_tr, x_va, y_va,
                            TrainConfig(**cfg_kw))
        rows.append([size, h_scr.records[-1].val_accuracy,
                     h_tl.records[-1].val_accuracy])
        print(f"size {size}: scratch {rows[-1][1]:.3f}% "
              f"transfer {rows[-1][2]:.3f}%")
    _write_csv(args.out, ["dataset_size", "scratch_accuracy [%]",
                          "transfer_accuracy [%]"], rows)
    return 0


def cmd_eval(args) -> int:
    spec = _spec_from_args(args)
    decoder = load_model(args.decoder)
    layout = load_layout(args.layout, spec) if args.layout else \
        FarmLayout(np.zeros((1, 2)), [args.yaw], spec)
    inflow = (args.u0, args.ti)
    base = "curl" if args.model == "curl" else "gaussian"
    reference = reference_evaluator(spec, base)

    def decoder_tiles(cond):
        from .pipelines import decoder_tile
        return decoder_tile(decoder, cond, spec)

    surrogate = Evaluator("surrogate-" + base, spec, decoder_tiles,
                          oracle_ti_provider, "table")
    ref_field = evaluate_farm(layout, inflow, reference)
    sur_field = evaluate_farm(layout, inflow, surrogate)
    err = np.abs(sur_field.values - ref_field.values) / args.u0 * 100.0

    os.makedirs(args.out_dir, exist_ok=True)
    join = lambda name: os.path.join(args.out_dir, name)
    plots.field_figure(join("field_reference.png"), ref_field.values,
                       ref_field.x_range, ref_field.y_range,
                       f"{reference.tag}", u_max=args.u0)
    plots.field_figure(join("field_surrogate.png"), sur_field.values,
                       sur_field.x_range, sur_field.y_range,
                       f"{surrogate.tag}", u_max=args.u0)
    plots.error_map_figure(join("error_map.png"), err, ref_field.x_range,
                           ref_field.y_range, "pixelwise relative error")

    d0 = spec.rotor_diameter
    if args.stations:
        stations = [float(p) for p in args.stations.split(",")]
    else:
        stations = [layout.positions[:, 0].max() + k * d0 for k in (2, 4, 7)]
    gx = ref_field.x_coords()
    gy = ref_field.y_coords()
    ref_profiles, sur_profiles, rows = [], [], []
    for x_s in stations:
        i = int(np.clip(np.searchsorted(gx, x_s), 0, gx.size - 1))
        ref_profiles.append(ref_field.values[i])
        sur_profiles.append(sur_field.values[i])
        for j, y in enumerate(gy):
            rows.append([gx[i], y, ref_field.values[i, j],
                         sur_field.values[i, j], err[i, j]])
    plots.transects_figure(join("transects.png"), gy, stations,
                           ref_profiles, sur_profiles)
    _write_csv(join("transects.csv"),
               ["x [m]", "y [m]", "u_reference [m/s]", "u_surrogate [m/s]",
                "error [%]"], rows)
    _write_csv(join("summary.csv"),
               ["mean_error [%]", "max_error [%]", "accuracy [%]"],
               [[float(err.mean()), float(err.max()), 100.0 - float(err.mean())]])
    print(f"mean field error {err.mean():.3f}% "
          f"(accuracy {100 - err.mean():.3f}%), reports in {args.out_dir}")
    return 0


def cmd_timing(args) -> int:
    spec = _spec_from_args(args)
    evaluators = [reference_evaluator(spec, args.model)]
    labels = [evaluators[0].tag]
    if args.decoder:
        decoder = load_model(args.decoder)

        def decoder_tiles(cond):
            from .pipelines import decoder_tile
            return decoder_tile(decoder, cond, spec)

        evaluators.append(Evaluator("surrogate-" + args.model, spec,
                                    decoder_tiles, oracle_ti_provider, "table"))
        labels.append(evaluators[-1].tag)
    counts = [int(p) for p in args.counts.split(",")]
    if any(c < 1 for c in counts):
        raise ConfigError("turbine counts must be positive")
    d0 = spec.rotor_diameter
    series = [[] for _ in evaluators]
    rows = []
    for n in counts:
        pos = np.column_stack([np.arange(n) * args.spacing * d0, np.zeros(n)])
        layout = FarmLayout(pos, np.zeros(n), spec)
        row = [n]
        for k, ev in enumerate(evaluators):
            best = np.inf
            for _ in range(args.repeat):
                t0 = time.perf_counter()
                field = evaluate_farm(layout, (args.u0, args.ti), ev)
                turbine_powers(field, ev)
                best = min(best, time.perf_counter() - t0)
            series[k].append(best)
            row.append(best)
        rows.append(row)
        print("n", n, *(f"{t:.4f}s" for t in (row[1:])))
    os.makedirs(args.out_dir, exist_ok=True)
    _write_csv(os.path.join(args.out_dir, "timing.csv"),
               ["turbines"] + [f"{lab} [s]" for lab in labels], rows)
    plots.timing_figure(os.path.join(args.out_dir, "timing.png"),
                        counts, series, labels)
    return 0


_OPT_HEADER = ["task", "evaluator", "u0 [m/s]", "ti [-]",
               "initial_power [W]", "optimized_power [W]", "gain [%]",
               "surrogate_power [W]", "iterations", "evaluations",
               "wall_time [s]", "variables"]


def _opt_row(task, tag, u0, ti, res):
    return [task, tag, u0, ti, res.initial_power, res.optimized_power,
            res.gain_percent, res.surrogate_power, res.iterations,
            res.evaluations, res.wall_time,
            " ".join(f"{v:.3f}" for v in np.ravel(res.variables))]


def cmd_optimize(args) -> int:
    spec = _spec_from_args(args)
    layout = load_layout(args.layout, spec)
    evaluator = _build_evaluator(args, spec)
    inflow = (args.u0, args.ti)
    cfg = OptConfig(seed=resolve_seed(args))
    if args.task == "yaw":
        res = optimize_yaw(layout, inflow, evaluator, cfg)
    else:
        d0 = spec.rotor_diameter
        box = ((layout.positions[:, 0].min() - args.margin * d0,
                layout.positions[:, 0].max() + args.margin * d0),
               (layout.positions[:, 1].min() - args.margin * d0,
                layout.positions[:, 1].max() + args.margin * d0))
        res = optimize_layout(layout, box, inflow, evaluator, cfg)
    _write_csv(args.out, _OPT_HEADER,
               [_opt_row(args.task, evaluator.tag, args.u0, args.ti, res)])
    print(f"{args.task} optimization ({evaluator.tag}): "
          f"gain {res.gain_percent:.2f}% in {res.wall_time:.1f}s")
    return 0


def cmd_heatmap(args) -> int:
    spec = _spec_from_args(args)
    layout = load_layout(args.layout, spec)
    evaluator = _build_evaluator(args, spec)
    n_ti, n_u = (int(p) for p in args.cells.lower().split("x"))
    ti_lo, ti_hi = _parse_pair(args.ti_range, "--ti-range")
    u_lo, u_hi = _parse_pair(args.u_range, "--u-range")
    result = heatmap(layout, np.linspace(ti_lo, ti_hi, n_ti),
                     np.linspace(u_lo, u_hi, n_u), args.task, evaluator,
                     OptConfig(seed=resolve_seed(args)))
    os.makedirs(args.out_dir, exist_ok=True)
    rows = [[ti, u0, result.gains[i, j], result.times[i, j]]
            for i, ti in enumerate(result.ti_values)
            for j, u0 in enumerate(result.u_values)]
    _write_csv(os.path.join(args.out_dir, "heatmap.csv"),
               ["ti [-]", "u0 [m/s]", "gain [%]", "wall_time [s]"], rows)
    plots.heatmap_figure(os.path.join(args.out_dir, "heatmap.png"), result,
                         f"{args.task} gain, {evaluator.tag}")
    for ti, u0, msg in result.failures:
        print(f"cell ti={ti} u0={u0} failed: {msg}", file=sys.stderr)
    print(f"heatmap ({evaluator.tag}): mean gain "
          f"{np.nanmean(result.gains):.2f}%, mean cell time "
          f"{result.mean_time:.1f}s, reports in {args.out_dir}")
    return 0


# ---------------------------------------------------------------------------
# Parser wiring
# ---------------------------------------------------------------------------

def _add_common(p):
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--turbine", help="turbine spec file (default: built-in)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1,
                   help="parallelism bound (runs are sequential on one core)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wakeforge",
        description="Wake-model surrogate training and farm optimization")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a wake dataset")
    _add_common(p)
    p.add_argument("--model", choices=("gaussian", "curl"), default="gaussian")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--grid", default="64x64")
    p.add_argument("--validation-count", type=int,
                   default=DEFAULT_VALIDATION_COUNT)
    p.add_argument("--extra-validation", action="store_true",
                   help="sample validation wakes fresh instead of holding out")
    p.add_argument("--out", required=True)
    p.set_defaults(_parser=p, fn=cmd_gen)

    p = sub.add_parser("train", help="train a decoder on a dataset")
    _add_common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--epochs", type=int, default=800)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--batch-fraction", type=float, default=0.25)
    p.add_argument("--no-scheduler", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(_parser=p, fn=cmd_train)

    p = sub.add_parser("transfer", help="fine-tune a pretrained decoder")
    _add_common(p)
    p.add_argument("--pretrained", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--freeze", default="0,1",
                   help="comma list of layer indices to freeze")
    p.add_argument("--epochs", type=int, default=250)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--batch-fraction", type=float, default=0.25)
    p.add_argument("--no-scheduler", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(_parser=p, fn=cmd_transfer)

    p = sub.add_parser("sweep-tl", help="transfer vs scratch dataset-size sweep")
    _add_common(p)
    p.add_argument("--pretrained", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--sizes", default="20,40,60,80,100")
    p.add_argument("--epochs", type=int, default=250)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--batch-fraction", type=float, default=0.25)
    p.add_argument("--out", required=True)
    p.set_defaults(_parser=p, fn=cmd_sweep_tl)

    p = sub.add_parser("eval", help="field comparison reports")
    _add_common(p)
    p.add_argument("--decoder", required=True)
    p.add_argument("--model", choices=("gaussian", "curl"), default="gaussian")
    p.add_argument("--layout", help="layout file; omit for a single turbine")
    p.add_argument("--u0", type=float, default=8.0)
    p.add_argument("--ti", type=float, default=0.06)
    p.add_argument("--yaw", type=float, default=0.0,
                   help="single-turbine yaw when no layout is given")
    p.add_argument("--stations", help="comma list of transect x [m]")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(_parser=p, fn=cmd_eval)

    p = sub.add_parser("timing", help="farm evaluation wall time vs size")
    _add_common(p)
    p.add_argument("--model", choices=("gaussian", "curl"), default="gaussian")
    p.add_argument("--decoder", help="add a surrogate timing series")
    p.add_argument("--counts", default="1,2,4,8,16,24")
    p.add_argument("--spacing", type=float, default=5.0,
                   help="in-line spacing in rotor diameters")
    p.add_argument("--u0", type=float, default=8.0)
    p.add_argument("--ti", type=float, default=0.06)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(_parser=p, fn=cmd_timing)

    p = sub.add_parser("optimize", help="yaw or layout optimization")
    _add_common(p)
    p.add_argument("--task", choices=("yaw", "layout"), required=True)
    p.add_argument("--layout", required=True)
    p.add_argument("--evaluator", default="reference-gaussian")
    p.add_argument("--decoder")
    p.add_argument("--power-net")
    p.add_argument("--ti-net")
    p.add_argument("--u0", type=float, default=8.0)
    p.add_argument("--ti", type=float, default=0.06)
    p.add_argument("--margin", type=float, default=2.0,
                   help="layout bounds margin in rotor diameters")
    p.add_argument("--out", required=True)
    p.set_defaults(_parser=p, fn=cmd_optimize)

    p = sub.add_parser("heatmap", help="optimization gains over (TI, u0)")
    _add_common(p)
    p.add_argument("--task", choices=("yaw", "layout"), default="yaw")
    p.add_argument("--layout", required=True)
    p.add_argument("--evaluator", default="reference-gaussian")
    p.add_argument("--decoder")
    p.add_argument("--power-net")
    p.add_argument("--ti-net")
    p.add_argument("--ti-range", default="0.05,0.15")
    p.add_argument("--u-range", default="7,12")
    p.add_argument("--cells", default="3x3")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(_parser=p, fn=cmd_heatmap)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args = _apply_config(parser, args)
        RunConfig(args.command, resolve_seed(args), args, args.jobs)
        return args.fn(args)
    except _NUMERIC_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (WakeforgeError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
