"""Command line entry points: simulate, analyze, replay, serve.

Exit codes: 0 success, 1 config error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .acquisition import CampaignError, Phase
from .analysis import analyze_curve
from .config import ConfigError, load_config, config_from_dict, PRESETS
from .core import CellGeometry, DomainError, ReferenceAtmosphere
from .run import build_campaign, run_headless
from .storage import (
    ParseError,
    read_iv_csv,
    write_conductivity_csv,
    write_slopes_csv,
)


def _parse_ranges(specs):
    out = []
    for spec in specs or []:
        try:
            lo, hi = spec.split(":")
            out.append((float(lo), float(hi)))
        except ValueError:
            raise ConfigError("--range", f"expected LO:HI, got {spec!r}")
    return out or None


def _load_with_overrides(args) -> "CampaignConfig":
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if getattr(args, "mode", None) is not None:
        cfg = dataclasses.replace(
            cfg, scan=dataclasses.replace(cfg.scan, mode=args.mode))
    if getattr(args, "out", None) is not None:
        cfg = dataclasses.replace(cfg, output_dir=args.out)
    return cfg


def cmd_simulate(args) -> int:
    cfg = _load_with_overrides(args)
    campaign, writer = build_campaign(cfg, time_ratio=args.time_ratio)
    try:
        points = campaign.run()
    except KeyboardInterrupt:
        print("interrupted; partial outputs kept in "
              f"{cfg.output_dir}", file=sys.stderr)
        return 2
    finally:
        writer.close()
    phase = campaign.snapshot().phase
    gaps = sum(1 for p in points if p.flags != "ok")
    print(f"{phase.value}: {len(points)} points ({gaps} gaps) "
          f"-> {cfg.output_dir}")
    return 0 if phase == Phase.DONE else 2


def cmd_analyze(args) -> int:
    points = read_iv_csv(args.iv)
    geom = CellGeometry(
        contact_radius_m=args.contact_radius_m,
        electrolyte_thickness_m=max(2e-3, 10 * args.contact_radius_m))
    ref = ReferenceAtmosphere(a_o2_reversible=args.a2,
                              temperature_k=args.temperature_k)
    pts, fits = analyze_curve(points, geom, ref, ranges=_parse_ranges(args.range))
    if not pts:
        print("no usable conductivity points (need >= 2 valid I-V rows "
              "per branch)", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_conductivity_csv(out / "conductivity.csv", pts)
    write_slopes_csv(out / "slopes.csv", fits)
    print(f"{len(pts)} conductivity points, {len(fits)} slope fits -> {out}")
    return 0


def cmd_replay(args) -> int:
    run_dir = Path(args.run)
    cfg_path = run_dir / "config.json"
    if not cfg_path.exists():
        print(f"{cfg_path} not found", file=sys.stderr)
        return 1
    cfg = config_from_dict(json.loads(cfg_path.read_text(encoding="utf-8")))
    points = read_iv_csv(run_dir / "iv.csv")
    pts, fits = analyze_curve(points, cfg.geometry, cfg.reference)
    out = Path(args.out) if args.out else run_dir
    out.mkdir(parents=True, exist_ok=True)
    write_conductivity_csv(out / "conductivity.csv", pts)
    write_slopes_csv(out / "slopes.csv", fits)
    print(f"recomputed {len(pts)} conductivity points, "
          f"{len(fits)} slope fits -> {out}")
    return 0


def cmd_serve(args) -> int:
    from .server import serve  # deferred: only the serve path needs it

    cfg = _load_with_overrides(args)
    host, _, port = args.listen.rpartition(":")
    try:
        port = int(port)
    except ValueError:
        print(f"--listen expects host:port, got {args.listen!r}",
              file=sys.stderr)
        return 1
    serve(cfg, host or "127.0.0.1", port, out_dir=cfg.output_dir,
          time_ratio=args.time_ratio, ui_dir=args.ui)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hwbench",
        description="virtual Hebb-Wagner measurement workbench")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a headless campaign")
    sim.add_argument("--config", required=True,
                     help=f"config JSON path or preset ({', '.join(sorted(PRESETS))})")
    sim.add_argument("--out", help="output directory (overrides config)")
    sim.add_argument("--seed", type=int, help="RNG seed (overrides config)")
    sim.add_argument("--mode", choices=("dud", "udu"))
    sim.add_argument("--time-ratio", type=float, default=0.0,
                     help="real seconds per virtual second (0 = instant)")
    sim.set_defaults(func=cmd_simulate)

    ana = sub.add_parser("analyze", help="recompute conductivity from iv.csv")
    ana.add_argument("--iv", required=True, help="path to iv.csv")
    ana.add_argument("--out", required=True, help="output directory")
    ana.add_argument("--contact-radius-m", type=float, default=100e-6)
    ana.add_argument("--temperature-k", type=float, default=973.15)
    ana.add_argument("--a2", type=float, default=0.21,
                     help="oxygen activity at the reversible electrode")
    ana.add_argument("--range", action="append", metavar="LO:HI",
                     help="activity range for slope fits (repeatable)")
    ana.set_defaults(func=cmd_analyze)

    rep = sub.add_parser("replay",
                         help="recompute analysis from a stored run directory")
    rep.add_argument("--run", required=True, help="run directory")
    rep.add_argument("--out", help="write outputs elsewhere")
    rep.set_defaults(func=cmd_replay)

    srv = sub.add_parser("serve", help="HTTP service with live steering")
    srv.add_argument("--config", required=True)
    srv.add_argument("--listen", default="127.0.0.1:8765")
    srv.add_argument("--out", help="output directory (overrides config)")
    srv.add_argument("--seed", type=int)
    srv.add_argument("--mode", choices=("dud", "udu"))
    srv.add_argument("--time-ratio", type=float, default=0.05,
                     help="real seconds per virtual second")
    srv.add_argument("--ui", help="directory of built dashboard assets")
    srv.set_defaults(func=cmd_serve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(str(e), file=sys.stderr)
        return 1
    except (ParseError, DomainError, CampaignError, OSError) as e:
        print(str(e), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
