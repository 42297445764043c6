"""Command-line interface.

Subcommands: construct (print an information set), thresholds (write a
pruning-threshold table), calibrate (print the tolerable error
probability for a point), simulate (sweep SNRs, write CSV), ler (write
per-level list-error analysis).
"""

from __future__ import annotations

import argparse
import sys

from . import codes, ga, sim
from .channel import ChannelParams
from .polar_tree import build_sub_polar_tree

_PROFILES = {"5g": "fiveg", "rm": "reed_muller", "ga": "ga"}
_KINDS = {"plain": "plain", "crc": "crc_polar", "pac": "pac"}


class CliError(Exception):
    pass


def _parse_bits(text: str) -> tuple[int, ...]:
    if not text or set(text) - {"0", "1"}:
        raise CliError(f"expected a bit string, got {text!r}")
    return tuple(int(c) for c in text)


def _parse_ebn0(text: str) -> tuple[float, ...]:
    """Single value or inclusive start:step:stop range."""
    if ":" not in text:
        return (float(text),)
    parts = text.split(":")
    if len(parts) != 3:
        raise CliError(f"--ebn0 expects VALUE or START:STEP:STOP, got {text!r}")
    start, step, stop = (float(p) for p in parts)
    if step <= 0 or stop < start:
        raise CliError("--ebn0 range requires step > 0 and stop >= start")
    count = int(round((stop - start) / step)) + 1
    return tuple(start + i * step for i in range(count))


def _add_code_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--N", type=int, required=True, help="block length (power of two)")
    p.add_argument("--K", type=int, required=True, help="code dimension")
    p.add_argument("--profile", choices=sorted(_PROFILES), default="5g")
    p.add_argument("--kind", choices=sorted(_KINDS), default="plain")
    p.add_argument("--crc-poly", help="CRC coefficients, degree-descending bits")
    p.add_argument("--impulse", help="PAC impulse response bits")
    p.add_argument(
        "--design-snr",
        type=float,
        help="GA construction SNR (dB); defaults to the first simulated point",
    )


def _resolve_spec(args, fallback_snr=None) -> codes.CodeSpec:
    profile = _PROFILES[args.profile]
    design = getattr(args, "design_snr", None)
    if profile == "ga" and design is None:
        design = fallback_snr
        if design is None:
            raise CliError("ga profile needs --design-snr (or an --ebn0 point)")
    return codes.build_code_spec(
        n_block=args.N,
        k_dim=args.K,
        profile_kind=profile,
        kind=_KINDS[args.kind],
        crc_poly=_parse_bits(args.crc_poly) if args.crc_poly else None,
        pac_impulse=_parse_bits(args.impulse) if args.impulse else None,
        design_snr_db=design,
    )


def _add_sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--decoder", choices=sim.DECODER_NAMES, default="pscl")
    p.add_argument("--L", type=int, default=1, help="list size")
    p.add_argument("--tau", type=int, default=1, help="dimension threshold")
    p.add_argument("--lambda", dest="lam", type=float, help="tolerance tuning factor")
    p.add_argument("--eps-tol", type=float, help="tolerable error probability override")
    p.add_argument("--max-frames", type=int, default=100_000)
    p.add_argument("--target-errors", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--noise-scale", type=float, default=1.0)
    p.add_argument("--thresholds-file", help="previously saved threshold table")
    p.add_argument("--prune-only", action="store_true")
    p.add_argument("--select-only", action="store_true")


def _resolve_decoder(args) -> str:
    decoder = args.decoder
    if args.prune_only and args.select_only:
        raise CliError("--prune-only and --select-only are mutually exclusive")
    if args.prune_only or args.select_only:
        if not decoder.startswith("lc"):
            raise CliError("--prune-only/--select-only apply to the lc_pscl decoder")
        decoder = "lc_prune_only" if args.prune_only else "lc_select_only"
    return decoder


def _sim_config(args, spec, ebn0_list) -> sim.SimConfig:
    decoder = _resolve_decoder(args)
    if decoder.startswith("lc") and args.lam is None and args.eps_tol is None:
        raise CliError(f"decoder {decoder} needs --lambda or --eps-tol")
    return sim.SimConfig(
        spec=spec,
        decoder=decoder,
        list_size=args.L,
        tau=args.tau,
        ebn0_list=tuple(ebn0_list),
        lam=args.lam,
        eps_tol_override=args.eps_tol,
        max_frames=args.max_frames,
        target_frame_errors=args.target_errors,
        master_seed=args.seed,
        worker_count=args.workers,
        noise_scale=args.noise_scale,
    )


def _cmd_construct(args) -> int:
    fallback = _parse_ebn0(args.ebn0)[0] if args.ebn0 else None
    spec = _resolve_spec(args, fallback_snr=fallback)
    print(" ".join(str(i) for i in spec.info_set))
    return 0


def _cmd_thresholds(args) -> int:
    points = _parse_ebn0(args.ebn0)
    if len(points) != 1:
        raise CliError("thresholds expects a single --ebn0 point")
    if args.eps_tol is None:
        raise CliError("thresholds requires --eps-tol")
    spec = _resolve_spec(args, fallback_snr=points[0])
    tree = build_sub_polar_tree(spec, args.tau)
    params = ChannelParams(ebn0_db=points[0], rate=spec.k_dim / spec.n_block)
    table = ga.pruning_thresholds(tree, params, args.eps_tol)
    ga.save_threshold_table(table, args.out)
    print(f"wrote {table.m_count} leaf thresholds to {args.out}")
    return 0


def _cmd_calibrate(args) -> int:
    points = _parse_ebn0(args.ebn0)
    if len(points) != 1:
        raise CliError("calibrate expects a single --ebn0 point")
    spec = _resolve_spec(args, fallback_snr=points[0])
    cfg = _sim_config(args, spec, points)
    if cfg.lam is None and cfg.eps_tol_override is None:
        raise CliError("calibrate requires --lambda or --eps-tol")
    print(repr(sim.calibrate_eps_tol(cfg, points[0])))
    return 0


def _cmd_simulate(args) -> int:
    points = _parse_ebn0(args.ebn0)
    spec = _resolve_spec(args, fallback_snr=points[0] if points else None)
    cfg = _sim_config(args, spec, points)
    if cfg.is_lc and args.thresholds_file:
        if len(points) != 1:
            raise CliError("--thresholds-file applies to a single-point run")
        tree = build_sub_polar_tree(spec, args.tau)
        table = ga.load_threshold_table(args.thresholds_file, tree)
        rec = sim.run_point(cfg, points[0], table)
        records = [rec]
        sim.write_records_csv(records, args.out)
    else:
        records = sim.run_sweep(cfg, out_csv=args.out, per_step_out=args.per_step_out)
    for rec in records:
        print(
            f"{rec.decoder} ebn0={rec.ebn0_db} fer={rec.fer:.3e} "
            f"frames={rec.frames} avg_flops={rec.avg_flops:.1f} "
            f"avg_sorted={rec.avg_sorted_paths:.2f}"
        )
    return 0


def _cmd_ler(args) -> int:
    points = _parse_ebn0(args.ebn0)
    if len(points) != 1:
        raise CliError("ler expects a single --ebn0 point")
    spec = _resolve_spec(args, fallback_snr=points[0])
    args.prune_only = args.select_only = False
    cfg = _sim_config(args, spec, points)
    rows = sim.ler_analysis(cfg, points[0])
    import csv as _csv

    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["level", "actual_ler", "predicted_ler"])
        for level, actual, predicted in rows:
            writer.writerow([level, repr(actual), repr(predicted)])
    print(f"wrote {len(rows)} levels to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polarlab",
        description="Polar-code laboratory: constructions, list decoders, "
        "Monte Carlo FER/complexity simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="print the information set")
    _add_code_flags(p)
    p.add_argument("--ebn0", help="design point for the ga profile")
    p.set_defaults(fn=_cmd_construct)

    p = sub.add_parser("thresholds", help="write a pruning-threshold table")
    _add_code_flags(p)
    p.add_argument("--tau", type=int, default=1)
    p.add_argument("--eps-tol", type=float)
    p.add_argument("--ebn0", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_thresholds)

    p = sub.add_parser("calibrate", help="print lambda * FER(PSCL) for a point")
    _add_code_flags(p)
    _add_sim_flags(p)
    p.add_argument("--ebn0", required=True)
    p.set_defaults(fn=_cmd_calibrate)

    p = sub.add_parser("simulate", help="run an SNR sweep and write CSV")
    _add_code_flags(p)
    _add_sim_flags(p)
    p.add_argument("--ebn0", required=True, help="value or start:step:stop")
    p.add_argument("--out", required=True)
    p.add_argument("--per-step-out", help="per-level sorted-paths CSV")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("ler", help="genie list-error analysis under PSCL")
    _add_code_flags(p)
    _add_sim_flags(p)
    p.add_argument("--ebn0", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_ler)

    return parser


def parse_and_dispatch(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (
        CliError,
        codes.ConstructionError,
        sim.SimulationError,
        ValueError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    return parse_and_dispatch(argv)


if __name__ == "__main__":
    sys.exit(main())
