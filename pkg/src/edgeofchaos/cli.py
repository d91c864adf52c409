"""Command-line surface: every experiment as a subcommand.

Outputs are CSV (header row, comma-separated, ``.`` decimal) and JSON
(fixed key order, schema string), chosen to be diff-friendly: a seeded
subcommand writes byte-identical result files on every run.  Each
invocation that writes files also drops a run manifest next to them
recording the fully resolved configuration, seed, output names, tool
version, and start/end timestamps.  The manifest is the only artifact
carrying wall-clock information, so result files stay reproducible.

Exit codes: 0 success, 1 usage or configuration error, 2 numeric
non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .criticality import exponent_table
from .data import Dataset, bundled_mnist_paths, desk_split, load_mnist
from .meanfield import (
    HyperParams,
    chi1,
    critical_line,
    depth_scales,
    get_activation,
    q_fixed_point,
)
from .propagator import (
    PHASE_PRESETS,
    NetworkArchitecture,
    propagate_experiment,
    resize_experiment,
)
from .trainer import (
    TRAINING_PHASES,
    TrainConfig,
    _halved,
    train,
)

SCHEMA = "edgeofchaos/1"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _out_dir(args) -> Path:
    """--out-dir flag, else EDGEOFCHAOS_OUT, else the working directory."""
    if getattr(args, "out_dir", None):
        d = Path(args.out_dir)
    else:
        d = Path(os.environ.get("EDGEOFCHAOS_OUT", "."))
    d.mkdir(parents=True, exist_ok=True)
    return d


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


def _atomic_write(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _write_json(path: Path, doc: dict):
    _atomic_write(path, json.dumps(doc, indent=2) + "\n")


def _write_manifest(
    directory: Path, stem: str, subcommand: str, config: dict,
    seed, outputs: list, started: str,
):
    doc = {
        "schema": SCHEMA,
        "subcommand": subcommand,
        "config": config,
        "seed": seed,
        "outputs": outputs,
        "version": __version__,
        "started_at": started,
        "finished_at": _now(),
    }
    _write_json(directory / f"{stem}_manifest.json", doc)


def _write_csv(path: Path, header: list, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _fmt(x) -> str:
    """Full-precision, locale-free float text (shortest round-trip)."""
    return repr(float(x))


def _matrix_rows(matrix: np.ndarray):
    n = matrix.shape[0]
    for i in range(n):
        yield [i] + [_fmt(v) for v in matrix[i]]


def _json_float(x):
    return float(x) if np.isfinite(x) else None


# ---------------------------------------------------------------------------
# subcommands


def cmd_fixed_point(args) -> int:
    act = get_activation(args.activation)
    hp = HyperParams(sigma_w=args.sigma_w, sigma_b=args.sigma_b)
    res = q_fixed_point(hp, act, q0=args.q0, tol=args.tol)
    doc = {
        "schema": SCHEMA,
        "sigma_w": hp.sigma_w,
        "sigma_b": hp.sigma_b,
        "activation": act.name,
        "q_star": _json_float(res.value),
        "iterations": res.iterations,
        "residual": _json_float(res.residual),
        "converged": res.converged,
        "stable": res.stable,
        "degenerate": res.degenerate,
    }
    print(json.dumps(doc, indent=2))
    return EXIT_OK if res.converged else EXIT_NUMERIC


def cmd_phase_diagram(args) -> int:
    act = get_activation(args.activation)
    if args.steps < 2:
        raise ValueError("--steps must be at least 2")
    sigma_bs = np.linspace(args.sigma_b_min, args.sigma_b_max, args.steps)
    started = _now()
    line = critical_line(sigma_bs, act)
    rows = []
    for sb, swc in line.points:
        residual = chi1(HyperParams(sigma_w=swc, sigma_b=sb), act) - 1.0
        rows.append([_fmt(sb), _fmt(swc), _fmt(residual)])
    directory = _out_dir(args)
    out = directory / args.out
    _write_csv(out, ["sigma_b", "sigma_w_critical", "chi1_residual"], rows)
    config = {
        "sigma_b_min": args.sigma_b_min,
        "sigma_b_max": args.sigma_b_max,
        "steps": args.steps,
        "activation": act.name,
        "out": args.out,
    }
    _write_manifest(
        directory, out.stem, "phase-diagram", config, None, [out.name], started
    )
    return EXIT_OK


def cmd_depth_scales(args) -> int:
    act = get_activation(args.activation)
    hp = HyperParams(sigma_w=args.sigma_w, sigma_b=args.sigma_b)
    scales = depth_scales(hp, act)
    doc = {
        "schema": SCHEMA,
        "sigma_w": hp.sigma_w,
        "sigma_b": hp.sigma_b,
        "activation": act.name,
        "chi1": _json_float(scales.chi1),
        "zeta_q": _json_float(scales.zeta_q),
        "zeta_c": _json_float(scales.zeta_c),
    }
    print(json.dumps(doc, indent=2))
    return EXIT_OK


def cmd_exponents(args) -> int:
    act = get_activation(args.activation)
    sigma_bs = [float(tok) for tok in args.sigma_b_list.split(",") if tok.strip()]
    if not sigma_bs:
        raise ValueError("--sigma-b-list must name at least one value")
    started = _now()
    entries = exponent_table(
        sigma_bs, act, c0_offset=args.c0_offset,
        num_layers=args.num_layers, l_min=args.l_min,
    )
    rows = []
    for e in entries:
        if e.error is not None:
            rows.append([_fmt(e.sigma_b), "", "", "", "", "", "", e.error])
            continue
        rows.append([
            _fmt(e.sigma_b), _fmt(e.sigma_w_critical), _fmt(e.fit.alpha),
            _fmt(e.fit.amplitude), _fmt(e.fit.offset), _fmt(e.fit.rss),
            str(e.fit.converged).lower(), "",
        ])
    directory = _out_dir(args)
    out = directory / args.out
    _write_csv(
        out,
        ["sigma_b", "sigma_w_critical", "alpha", "amplitude", "offset",
         "rss", "converged", "error"],
        rows,
    )
    config = {
        "sigma_b_list": sigma_bs,
        "activation": act.name,
        "c0_offset": args.c0_offset,
        "num_layers": args.num_layers,
        "l_min": args.l_min,
        "out": args.out,
    }
    _write_manifest(
        directory, out.stem, "exponents", config, None, [out.name], started
    )
    if any(e.error is not None for e in entries):
        return EXIT_NUMERIC
    return EXIT_OK


def _load_cli_data(args) -> Dataset:
    if args.data:
        d = Path(args.data)
        images = sorted(d.glob("*idx3*")) or sorted(d.glob("*images*"))
        labels = sorted(d.glob("*idx1*")) or sorted(d.glob("*labels*"))
        if not images or not labels:
            raise ValueError(f"no IDX image/label pair found under {d}")
        ds = load_mnist(images[0], labels[0])
    else:
        ds = load_mnist(*bundled_mnist_paths())
    return ds


def cmd_propagate(args) -> int:
    ds = _load_cli_data(args)
    if not 1 <= args.examples <= len(ds):
        raise ValueError(
            f"--examples must lie in 1..{len(ds)}, got {args.examples}"
        )
    data = Dataset(ds.inputs[: args.examples], ds.labels[: args.examples], ds.name)
    arch = NetworkArchitecture(
        layer_widths=(data.inputs.shape[1],) + (args.width,) * args.layers,
        activation=get_activation(args.activation),
    )
    directory = _out_dir(args)
    started = _now()
    config = {
        "data": args.data or str(bundled_mnist_paths()[0].parent),
        "examples": args.examples,
        "phases": args.phases,
        "layers": args.layers,
        "width": args.width,
        "activation": args.activation,
        "seed": args.seed,
        "num_seeds": args.num_seeds,
        "resize_fraction": args.resize_fraction,
    }
    outputs = []

    if args.resize_fraction is not None:
        phase = args.phases.split(",")[0].strip()
        if phase not in PHASE_PRESETS:
            raise ValueError(f"unknown phase {phase!r}")
        result = resize_experiment(
            data.inputs, args.resize_fraction, arch, PHASE_PRESETS[phase], args.seed
        )
        means = {}
        for key in ("input_full", "input_subsample", "output_full", "output_subsample"):
            cm = result[key]
            name = f"propagate_resize_{key}_correlations.csv"
            _write_csv(
                directory / name,
                ["index"] + [str(j) for j in range(cm.entries.shape[0])],
                _matrix_rows(cm.entries),
            )
            outputs.append(name)
            means[key] = cm.mean_correlation
        doc = {
            "schema": SCHEMA,
            "phase": phase,
            "fraction": args.resize_fraction,
            "mean_correlations": means,
            "abs_output_difference": abs(
                means["output_full"] - means["output_subsample"]
            ),
        }
        name = "propagate_resize_means.json"
        _write_json(directory / name, doc)
        outputs.append(name)
        _write_manifest(
            directory, "propagate_resize", "propagate", config, args.seed,
            outputs, started,
        )
        return EXIT_OK

    phase_names = [tok.strip() for tok in args.phases.split(",") if tok.strip()]
    unknown = [p for p in phase_names if p not in PHASE_PRESETS]
    if unknown:
        raise ValueError(
            f"unknown phases {unknown}; choose from {sorted(PHASE_PRESETS)}"
        )
    phases = {name: PHASE_PRESETS[name] for name in phase_names}
    results = propagate_experiment(
        data.inputs, arch, phases, seed=args.seed, num_seeds=args.num_seeds
    )
    first = results[phase_names[0]]
    name = "propagate_input_correlations.csv"
    _write_csv(
        directory / name,
        ["index"] + [str(j) for j in range(first["input"].entries.shape[0])],
        _matrix_rows(first["input"].entries),
    )
    outputs.append(name)
    means = {"input": first["input"].mean_correlation}
    for phase in phase_names:
        cm = results[phase]["output"]
        name = f"propagate_{phase}_output_correlations.csv"
        _write_csv(
            directory / name,
            ["index"] + [str(j) for j in range(cm.entries.shape[0])],
            _matrix_rows(cm.entries),
        )
        outputs.append(name)
        means[phase] = results[phase]["mean_correlation"]
    doc = {"schema": SCHEMA, "mean_correlations": means}
    name = "propagate_means.json"
    _write_json(directory / name, doc)
    outputs.append(name)
    _write_manifest(
        directory, "propagate", "propagate", config, args.seed, outputs, started
    )
    return EXIT_OK


def cmd_train(args) -> int:
    ds = _load_cli_data(args)
    if args.phase not in TRAINING_PHASES:
        raise ValueError(
            f"unknown phase {args.phase!r}; choose from {sorted(TRAINING_PHASES)}"
        )
    train_ds, val_ds = desk_split(ds, train=args.train_size, val=args.val_size)
    widths = (train_ds.inputs.shape[1],) + (args.width,) * args.depth + (10,)
    base = TrainConfig(
        arch=NetworkArchitecture(
            layer_widths=widths, activation=get_activation(args.activation)
        ),
        hp=TRAINING_PHASES[args.phase],
        loss=args.loss,
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        epochs=args.epochs,
        train_size=args.train_size,
        seed=args.seed,
    )
    config_run = base if args.variant == "baseline" else _halved(base, args.variant)
    directory = _out_dir(args)
    started = _now()
    curve = train(config_run, train_ds, val_ds)
    stem = f"train_{args.phase}_{args.variant}"
    outputs = []
    name = f"{stem}_accuracy.csv"
    _write_csv(
        directory / name,
        ["epoch", "validation_accuracy"],
        ([i + 1, _fmt(a)] for i, a in enumerate(curve.accuracies)),
    )
    outputs.append(name)
    doc = {
        "schema": SCHEMA,
        "phase": args.phase,
        "variant": args.variant,
        "final_accuracy": curve.final,
        "epochs": config_run.epochs,
        "train_size": config_run.train_size,
        "batch_size": config_run.batch_size,
        "hidden_widths": list(config_run.arch.layer_widths[1:-1]),
        "loss": config_run.loss,
        "learning_rate": config_run.learning_rate,
        "seed": config_run.seed,
    }
    name = f"{stem}_summary.json"
    _write_json(directory / name, doc)
    outputs.append(name)
    config = {
        "variant": args.variant,
        "phase": args.phase,
        "data": args.data or str(bundled_mnist_paths()[0].parent),
        "epochs": args.epochs,
        "batch_size": args.batch_size,
        "learning_rate": args.learning_rate,
        "train_size": args.train_size,
        "val_size": args.val_size,
        "width": args.width,
        "depth": args.depth,
        "loss": args.loss,
        "activation": args.activation,
        "seed": args.seed,
    }
    _write_manifest(
        directory, stem, "train", config, args.seed, outputs, started
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser wiring


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="edgeofchaos",
        description="Mean-field signal propagation experiments for deep tanh networks.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("fixed-point", help="solve the length-map fixed point q*")
    p.add_argument("--sigma-w", type=float, required=True)
    p.add_argument("--sigma-b", type=float, required=True)
    p.add_argument("--activation", default="tanh")
    p.add_argument("--q0", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_fixed_point)

    p = sub.add_parser("phase-diagram", help="critical line sigma_w_c(sigma_b)")
    p.add_argument("--sigma-b-min", type=float, default=0.0)
    p.add_argument("--sigma-b-max", type=float, default=0.3)
    p.add_argument("--steps", type=int, default=31)
    p.add_argument("--activation", default="tanh")
    p.add_argument("--out", default="phase_diagram.csv")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_phase_diagram)

    p = sub.add_parser("depth-scales", help="zeta_q, zeta_c and chi1 at a point")
    p.add_argument("--sigma-w", type=float, required=True)
    p.add_argument("--sigma-b", type=float, required=True)
    p.add_argument("--activation", default="tanh")
    p.set_defaults(func=cmd_depth_scales)

    p = sub.add_parser("exponents", help="critical power-law exponents on the line")
    p.add_argument("--sigma-b-list", default="2,3,4,5,6")
    p.add_argument("--activation", default="tanh")
    p.add_argument("--c0-offset", type=float, default=0.1)
    p.add_argument("--num-layers", type=int, default=40)
    p.add_argument("--l-min", type=int, default=1)
    p.add_argument("--out", default="exponents.csv")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_exponents)

    p = sub.add_parser("propagate", help="correlations through a random network")
    p.add_argument("--data", default=None, help="directory with an IDX pair")
    p.add_argument("--examples", type=int, default=100)
    p.add_argument("--phases", default="ordered,critical,disordered")
    p.add_argument("--layers", type=int, default=10)
    p.add_argument("--width", type=int, default=50)
    p.add_argument("--activation", default="tanh")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--num-seeds", type=int, default=1)
    p.add_argument(
        "--resize-fraction", type=float, default=None,
        help="also propagate a subsample of this fraction through the same network",
    )
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("train", help="train the minimal MLP in one phase")
    p.add_argument(
        "--variant", default="baseline",
        choices=["baseline", "half-data", "half-width", "half-batch"],
    )
    p.add_argument("--phase", default="critical")
    p.add_argument("--data", default=None, help="directory with an IDX pair")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--train-size", type=int, default=10_000)
    p.add_argument("--val-size", type=int, default=2_000)
    p.add_argument("--width", type=int, default=50)
    p.add_argument("--depth", type=int, default=6)
    p.add_argument("--loss", default="cross-entropy")
    p.add_argument("--activation", default="tanh")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_train)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, NotADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, FloatingPointError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
