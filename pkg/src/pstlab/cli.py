"""Command-line entry point: ``pstlab <verb> [flags]``.

Exit codes: 0 success, 2 usage or validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, Sequence

import jsonschema

from . import __version__, config, io, scenarios
from .errors import InvalidArgumentError, NumericalError

log = logging.getLogger("pstlab")

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 2, 3

OUTPUT_SCHEMAS = {
    "design.json": "design",
    "propagation.json": "propagation",
    "transfer_table.json": "transfer_table",
    "qpt.json": "qpt",
    "bell.json": "bell",
    "decohere.json": "decohere",
    "run.json": "run_record",
}


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="scenario config JSON")
    p.add_argument("--out", help="output directory (default: $PSTLAB_OUT or ./pstlab_out)")
    p.add_argument("--seed", type=int)
    p.add_argument("--shots", type=int, help="counts per tomography setting; 0 = exact probabilities")
    p.add_argument("--model", choices=["nn", "full"])
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _device() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--design", dest="design_file", help="design JSON written by `pstlab design`")
    p.add_argument("--spectrum", choices=["pst", "uniform"])
    p.add_argument("--birefringence", nargs=2, type=float, metavar=("A_PER_MM", "B_PER_UM"),
                   help="decay constants seen by V polarization")
    p.add_argument("--loss", action="store_true", default=None)
    p.add_argument("--length-mm", type=float)
    p.add_argument("--device-phase-deg", type=float)
    p.add_argument("--device-coherence", type=float)
    p.add_argument("--inputs", nargs="+", type=int)
    return p


def _source() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--residual-phase-deg", type=float)
    p.add_argument("--hwp-deg", type=float)
    p.add_argument("--coherence-length-um", type=float)
    p.add_argument("--delays-um", nargs="+", type=float)
    p.add_argument("--compensate", action="store_true", default=None)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pstlab", description="Perfect state transfer waveguide-array toolkit")
    parser.add_argument("--version", action="version", version=f"pstlab {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)
    common, device, source = _common(), _device(), _source()

    d = sub.add_parser("design", parents=[common], help="design a PST array from fabrication parameters")
    d.add_argument("--sites", type=int)
    d.add_argument("--dmin-um", type=float)
    d.add_argument("--a-per-mm", type=float)
    d.add_argument("--b-per-um", type=float)

    p = sub.add_parser("propagate", parents=[common, device], help="propagation profile CSV")
    p.add_argument("--scenario", choices=["fig2a", "fig2b"])
    p.add_argument("--input", type=int)
    p.add_argument("--z-max-mm", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--ppm", action="store_true", default=None, help="also write a PGM heatmap")

    sub.add_parser("transfer-table", parents=[common, device], help="output distributions per polarization")
    sub.add_parser("qpt", parents=[common, device], help="single-photon process tomography per transfer")
    sub.add_parser("bell", parents=[common, device, source], help="entangled-state transfer")
    sub.add_parser("decohere", parents=[common, device, source], help="delay sweep of decohered transfers")

    s = sub.add_parser("scenario", parents=[common], help="run a pinned scenario or the config's scenario")
    s.add_argument("name", nargs="?", choices=sorted(config.SCENARIOS))
    return parser


def _set(tree: dict[str, Any], path: str, value: Any) -> None:
    if value is None:
        return
    *head, last = path.split(".")
    node = tree
    for k in head:
        node = node.setdefault(k, {})
    node[last] = value


def cli_overrides(args: argparse.Namespace) -> dict[str, Any]:
    o: dict[str, Any] = {}
    g = lambda name: getattr(args, name, None)  # noqa: E731
    _set(o, "measurement.seed", g("seed"))
    _set(o, "measurement.shots", g("shots"))
    _set(o, "model.coupling", g("model"))
    _set(o, "design.n_sites", g("sites"))
    _set(o, "design.d_min_um", g("dmin_um"))
    _set(o, "design.decay_a_per_mm", g("a_per_mm"))
    _set(o, "design.decay_b_per_um", g("b_per_um"))
    _set(o, "design_file", g("design_file"))
    _set(o, "model.spectrum", g("spectrum"))
    if g("birefringence") is not None:
        a, b = g("birefringence")
        _set(o, "model.birefringence", {"a_per_mm": a, "b_per_um": b})
    _set(o, "model.loss", g("loss"))
    _set(o, "model.length_mm", g("length_mm"))
    _set(o, "model.device_phase_deg", g("device_phase_deg"))
    _set(o, "model.device_coherence", g("device_coherence"))
    _set(o, "source.inputs", g("inputs"))
    _set(o, "source.residual_phase_deg", g("residual_phase_deg"))
    _set(o, "source.hwp_deg", g("hwp_deg"))
    _set(o, "source.coherence_length_um", g("coherence_length_um"))
    _set(o, "source.delays_um", g("delays_um"))
    _set(o, "source.compensate", g("compensate"))
    _set(o, "propagation.input_site", g("input"))
    _set(o, "propagation.z_max_mm", g("z_max_mm"))
    _set(o, "propagation.n_steps", g("steps"))
    _set(o, "propagation.ppm", g("ppm"))
    return o


def resolve(args: argparse.Namespace) -> tuple[str, dict[str, Any]]:
    """Merge defaults < config file < scenario pins < CLI flags; returns (command, config)."""
    cfg = config.load_config(args.config)
    if args.verb == "scenario":
        alias = args.name or cfg["scenario"]
    elif args.verb == "propagate" and args.scenario:
        alias = args.scenario
    else:
        alias = args.verb
    command, pins = config.SCENARIOS[alias]
    cfg = config.deep_merge(cfg, pins)
    cfg["scenario"] = alias
    cfg = config.deep_merge(cfg, cli_overrides(args))
    config.validate(cfg, "config")
    return command, cfg


def write_outputs(out_dir: Path, command: str, cfg: dict[str, Any], result: scenarios.RunResult, wall: float) -> list[str]:
    names = list(result.files)
    record = {
        "tool": "pstlab",
        "version": __version__,
        "command": command,
        "config": cfg,
        "files": names,
        "metrics": result.metrics,
        "wall_clock_s": wall,
    }
    texts = dict(result.files)
    texts["run.json"] = io.dumps(record)
    for name, text in texts.items():
        if name in OUTPUT_SCHEMAS:
            config.validate(json.loads(text), OUTPUT_SCHEMAS[name])
    for name, text in texts.items():
        io.atomic_write(out_dir / name, text)
    return names


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        command, cfg = resolve(args)
        out_dir = config.resolve_out(args.out, cfg)
        t0 = time.perf_counter()
        result = scenarios.COMMANDS[command](cfg)
        wall = time.perf_counter() - t0
        write_outputs(out_dir, command, cfg, result, wall)
    except NumericalError as exc:
        print(f"pstlab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (InvalidArgumentError, jsonschema.ValidationError, OSError, json.JSONDecodeError) as exc:
        msg = exc.message if isinstance(exc, jsonschema.ValidationError) else str(exc)
        print(f"pstlab: error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    for line in result.summary:
        print(line)
    print(f"wrote {len(result.files) + 1} files to {out_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
