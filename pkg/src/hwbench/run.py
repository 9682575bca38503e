"""Glue between a CampaignConfig and a runnable Campaign."""

from __future__ import annotations

from typing import Callable, Optional

from .acquisition import Campaign, IVPoint
from .analysis import analyze_curve
from .cellsim import VirtualRig
from .config import CampaignConfig, config_to_dict
from .storage import OutputWriter, read_iv_csv


def build_rig(cfg: CampaignConfig) -> VirtualRig:
    return VirtualRig(cell=cfg.cell, heater=cfg.heater,
                      electrometer=cfg.electrometer, geometry=cfg.geometry,
                      reference=cfg.reference, seed=cfg.seed)


def build_campaign(cfg: CampaignConfig, out_dir=None,
                   observer: Optional[Callable[[str, dict], None]] = None,
                   time_ratio: float = 0.0) -> tuple[Campaign, OutputWriter]:
    """Campaign wired to an OutputWriter that persists the run and, at the
    analyzing phase, the conductivity and slope files."""
    writer = OutputWriter(out_dir if out_dir is not None else cfg.output_dir)
    writer.write_config(config_to_dict(cfg))

    def analyzer(points: list[IVPoint]):
        # analyze what is durable on disk, not the in-memory floats, so an
        # offline `analyze` of iv.csv reproduces these files byte for byte
        recorded = read_iv_csv(writer.out_dir / "iv.csv")
        pts, fits = analyze_curve(recorded, cfg.geometry, cfg.reference)
        writer.write_analysis(pts, fits)

    campaign = Campaign(build_rig(cfg), cfg.scan, cfg.steady_state,
                        cfg.temperature_loop, sink=writer, observer=observer,
                        apply_latency_s=cfg.apply_latency_s,
                        time_ratio=time_ratio, analyzer=analyzer)
    return campaign, writer


def run_headless(cfg: CampaignConfig, out_dir=None) -> list[IVPoint]:
    """Run a whole campaign on the instant virtual clock."""
    campaign, writer = build_campaign(cfg, out_dir=out_dir)
    try:
        return campaign.run()
    finally:
        writer.close()
