"""Command-line entry point: ``negspec <subcommand> [options]``.

Exit codes: 0 success, 1 configuration error, 2 runtime or numerical error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .config import PRESETS, RunConfig, load_config, preset
from .entanglement import detect_lobes
from .ensemble import run_ensemble, sweep
from .errors import ConfigError, NegspecError
from .qstate import Partition
from .storage import persist, persist_sweep
from .theory import classify_phase, predict_avg_log_negativity, semicircle_edge_sign

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

# template used by each subcommand when neither --config nor --preset is given
_DEFAULT_PRESET = {
    "spectrum": "fig2d",
    "sweep-env": "fig3a",
    "sweep-split": "fig3b",
    "pt-stats": "fig4",
    "phase": "fig2d",
}
_DEFAULT_VALUES = {
    "sweep-env": list(range(9, 0, -1)),
    "sweep-split": list(range(0, 7)),
    "pt-stats": list(range(1, 11)),
}


class _Parser(argparse.ArgumentParser):
    """Usage errors count as configuration errors (exit code 1)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_run_options(p: argparse.ArgumentParser, sweep_values: bool = False) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", help="JSON config document (see README for the keys)")
    src.add_argument("--preset", choices=sorted(PRESETS), help="named figure configuration")
    p.add_argument("--out", help="output directory; nothing is written when omitted")
    p.add_argument("--seed", type=int, help="master seed (default 12345)")
    p.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
    p.add_argument("--instances", type=int, help="circuit instances per point")
    p.add_argument("--layers", type=int, help="circuit depth (default: per config)")
    p.add_argument("--noise", type=float, help="depolarizing probability per layer")
    p.add_argument("--tomography", action="store_true", help="reconstruct rho_A by simulated Pauli tomography")
    p.add_argument("--shots", type=int, help="shots per tomography setting (0 = exact)")
    if sweep_values:
        p.add_argument("--values", type=int, nargs="+", help="sweep values")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="negspec", description="Negativity spectra of pseudo-random mixed states.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("spectrum", help="one ensemble: negativity spectrum, E, semicircle comparison")
    _add_run_options(p)
    p = sub.add_parser("sweep-env", help="mean E while the environment N_B shrinks")
    _add_run_options(p, sweep_values=True)
    p = sub.add_parser("sweep-split", help="mean E against the subsystem split N_A1")
    _add_run_options(p, sweep_values=True)
    p = sub.add_parser("pt-stats", help="Porter-Thomas KL divergence against circuit depth")
    _add_run_options(p, sweep_values=True)
    p = sub.add_parser("phase", help="phase label and large-N prediction, no simulation")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config")
    src.add_argument("--preset", choices=sorted(PRESETS))
    src.add_argument("--sizes", type=int, nargs=3, metavar=("N_A1", "N_A2", "N_B"))
    return parser


def resolve_config(args) -> RunConfig:
    if getattr(args, "sizes", None):
        try:
            return RunConfig(partition=Partition.from_sizes(*args.sizes))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = preset(args.preset or _DEFAULT_PRESET[args.command])
    if args.command == "phase":
        return cfg
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.instances is not None:
        changes["instances"] = args.instances
    if args.layers is not None:
        changes["layers"] = args.layers
    if args.noise is not None:
        changes["noise"] = replace(cfg.noise, depolarizing_per_layer=args.noise)
    if args.tomography or args.shots is not None:
        tomo = replace(cfg.tomography, enabled=True)
        if args.shots is not None:
            tomo = replace(tomo, shots_per_setting=args.shots)
        changes["tomography"] = tomo
    try:
        return cfg.with_changes(**changes)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _describe(cfg: RunConfig) -> str:
    n_a1, n_a2, n_b = cfg.partition.sizes()
    return f"N_A1={n_a1} N_A2={n_a2} N_B={n_b} d={cfg.depth} instances={cfg.instances} seed={cfg.seed}"


def cmd_phase(cfg: RunConfig) -> None:
    p = cfg.partition
    print(f"partition      {p.sizes()}")
    print(f"phase          {classify_phase(p).value}")
    print(f"edge sign      {semicircle_edge_sign(p).value}")
    print(f"predicted <E>  {predict_avg_log_negativity(p):.4f} (base 2)")


def cmd_spectrum(cfg: RunConfig, args) -> None:
    result = run_ensemble(cfg, workers=args.workers)
    a = result.aggregates
    print(_describe(cfg))
    print(f"phase {a['phase']}  predicted <E> {a['predicted_log_negativity']:.4f}")
    print(f"<E> = {a['mean_log_negativity']:.4f} +- {a['stderr_log_negativity']:.4f}   <N> = {a['mean_negativity']:.4f}")
    print(f"pooled spectrum [{a['pooled_min']:.5f}, {a['pooled_max']:.5f}]  "
          f"fraction below -1e-3: {a['fraction_below_minus_1e-3']:.4f}")
    if "semicircle_ks_distance" in a:
        print(f"semicircle KS distance {a['semicircle_ks_distance']:.4f}")
    try:
        lobes = detect_lobes(result.spectra(), cfg.spectrum.exclusion_epsilon)
        print(f"lobes {lobes.n_lobes}")
    except NegspecError as exc:
        print(f"lobes: {exc}")
    if a["instances_failed"]:
        print(f"{a['instances_failed']} instance(s) failed; see summary.json")
    if args.out:
        persist(result, args.out)
        print(f"written to {args.out}")


def cmd_sweep(cfg: RunConfig, args) -> None:
    axis = {"sweep-env": "environment_size", "sweep-split": "split_ratio", "pt-stats": "depth"}[args.command]
    values = args.values or _DEFAULT_VALUES[args.command]
    result = sweep(cfg, axis, values, workers=args.workers)
    print(f"{axis} sweep, template {_describe(cfg)}")
    print(f"{'value':>6} {'d':>3} {'<E>':>9} {'stderr':>8} {'KL':>9} {'phase':>9} {'pred':>7}")
    for row in result.table():
        if row["error"]:
            print(f"{row['value']:>6}  error: {row['error']}")
            continue
        print(
            f"{row['value']:>6} {row['layers']:>3} {row['mean_log_negativity']:>9.4f} "
            f"{row['stderr_log_negativity']:>8.4f} {row['kl_divergence']:>9.5f} {row['phase']:>9} "
            f"{row['predicted_log_negativity']:>7.3f}"
        )
    if args.out:
        persist_sweep(result, args.out)
        print(f"written to {args.out}")
    if all(r is None for r in result.results):
        raise ConfigError("every sweep point failed")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command == "phase":
            cmd_phase(cfg)
        elif args.command == "spectrum":
            cmd_spectrum(cfg, args)
        else:
            cmd_sweep(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NegspecError, ArithmeticError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
