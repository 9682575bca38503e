"""On-disk layout of a campaign run and the CSV formats it uses.

A run directory holds config.json, events.log, iv.csv, one trace CSV per
applied voltage, and after analysis conductivity.csv and slopes.csv.
Floats are serialized in scientific notation with 9 significant digits,
which makes determinism checks byte-exact; reading a file back and
rewriting it reproduces it byte for byte.
"""

from __future__ import annotations

import json
import math
import os
from pathlib import Path
from typing import Optional, Sequence

from .cellsim import CurrentSample
from .acquisition import IVPoint
from .analysis import ConductivityPoint, SlopeFit

TRACE_HEADER = "t_s,raw_a,filtered_a,cell_temp_c,heater_on"
IV_HEADER = "index,e_app_v,i_ss_a,branch,t_settled_s,flags"
CONDUCTIVITY_HEADER = "branch,e_mid_v,log10_a_o2,sigma_s_per_m,repaired"
SLOPES_HEADER = "branch,a_lo,a_hi,slope,intercept,n_points,rms_residual"


class ParseError(ValueError):
    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


def fmt(x: float) -> str:
    return f"{x:.8e}"


def trace_filename(index: int, e_app_v: float) -> str:
    """trace_003_m150mV.csv style: zero-padded index, p/m sign, integer mV."""
    mv = round(e_app_v * 1000)
    sign = "m" if mv < 0 else "p"
    return f"trace_{index:03d}_{sign}{abs(mv)}mV.csv"


class OutputWriter:
    """Campaign sink that persists everything incrementally.

    iv.csv and events.log are flushed after every row, so at any instant
    the files on disk are a prefix of the final ones.
    """

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self._iv = open(self.out_dir / "iv.csv", "w", encoding="utf-8")
        self._iv.write(IV_HEADER + "\n")
        self._iv.flush()
        self._events = open(self.out_dir / "events.log", "w", encoding="utf-8")
        self._trace = None

    def write_config(self, config_dict: dict):
        with open(self.out_dir / "config.json", "w", encoding="utf-8") as f:
            json.dump(config_dict, f, indent=2, sort_keys=True)
            f.write("\n")

    # -- sink protocol -------------------------------------------------------

    def open_trace(self, index: int, e_app_v: float):
        self.close_trace()
        self._trace = open(self.out_dir / trace_filename(index, e_app_v),
                           "w", encoding="utf-8")
        self._trace.write(TRACE_HEADER + "\n")

    def trace_sample(self, s: CurrentSample):
        self._trace.write(f"{fmt(s.t_s)},{fmt(s.raw_a)},{fmt(s.filtered_a)},"
                          f"{fmt(s.cell_temp_c)},{int(s.heater_on)}\n")

    def close_trace(self):
        if self._trace is not None:
            self._trace.close()
            self._trace = None

    def iv_point(self, p: IVPoint):
        self._iv.write(f"{p.index},{fmt(p.e_app_v)},{fmt(p.i_ss_a)},"
                       f"{p.branch},{fmt(p.t_settled_s)},{p.flags}\n")
        self._iv.flush()

    def event(self, t_s: float, kind: str, **fields):
        parts = " ".join(f"{k}={_fmt_field(v)}" for k, v in fields.items())
        self._events.write(f"{t_s:.1f} {kind}" + (f" {parts}" if parts else "")
                           + "\n")
        self._events.flush()

    # -- analysis outputs ----------------------------------------------------

    def write_analysis(self, points: Sequence[ConductivityPoint],
                       fits: Sequence[tuple[str, SlopeFit]]):
        write_conductivity_csv(self.out_dir / "conductivity.csv", points)
        write_slopes_csv(self.out_dir / "slopes.csv", fits)

    def close(self):
        self.close_trace()
        self._iv.close()
        self._events.close()


def _fmt_field(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return fmt(v)
    return str(v)


# -- writers ------------------------------------------------------------------

def write_iv_csv(path, points: Sequence[IVPoint]):
    with open(path, "w", encoding="utf-8") as f:
        f.write(IV_HEADER + "\n")
        for p in points:
            f.write(f"{p.index},{fmt(p.e_app_v)},{fmt(p.i_ss_a)},"
                    f"{p.branch},{fmt(p.t_settled_s)},{p.flags}\n")


def write_conductivity_csv(path, points: Sequence[ConductivityPoint]):
    with open(path, "w", encoding="utf-8") as f:
        f.write(CONDUCTIVITY_HEADER + "\n")
        for p in points:
            f.write(f"{p.branch},{fmt(p.e_mid_v)},{fmt(math.log10(p.a_o2))},"
                    f"{fmt(p.sigma_e)},{int(p.repaired)}\n")


def write_slopes_csv(path, fits: Sequence[tuple[str, SlopeFit]]):
    with open(path, "w", encoding="utf-8") as f:
        f.write(SLOPES_HEADER + "\n")
        for branch, fit in fits:
            f.write(f"{branch},{fmt(fit.a_lo)},{fmt(fit.a_hi)},"
                    f"{fmt(fit.slope)},{fmt(fit.intercept)},"
                    f"{fit.n_points},{fmt(fit.rms_residual)}\n")


# -- readers ------------------------------------------------------------------

def _read_rows(path, header: str):
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines:
        raise ParseError(path, 1, "empty file")
    if lines[0] != header:
        raise ParseError(path, 1, f"expected header {header!r}, got {lines[0]!r}")
    n_fields = header.count(",") + 1
    rows = []
    for i, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != n_fields:
            raise ParseError(path, i, f"expected {n_fields} fields, "
                                      f"got {len(parts)}")
        rows.append((i, parts))
    return rows


def read_iv_csv(path) -> list[IVPoint]:
    out = []
    for line_no, parts in _read_rows(path, IV_HEADER):
        try:
            out.append(IVPoint(index=int(parts[0]), e_app_v=float(parts[1]),
                               i_ss_a=float(parts[2]), branch=parts[3],
                               t_settled_s=float(parts[4]), flags=parts[5]))
        except ValueError as e:
            raise ParseError(path, line_no, str(e)) from None
    return out


def read_trace_csv(path) -> list[CurrentSample]:
    out = []
    for line_no, parts in _read_rows(path, TRACE_HEADER):
        try:
            out.append(CurrentSample(t_s=float(parts[0]), raw_a=float(parts[1]),
                                     filtered_a=float(parts[2]),
                                     cell_temp_c=float(parts[3]),
                                     heater_on=bool(int(parts[4]))))
        except ValueError as e:
            raise ParseError(path, line_no, str(e)) from None
    return out


def read_conductivity_csv(path) -> list[ConductivityPoint]:
    out = []
    for line_no, parts in _read_rows(path, CONDUCTIVITY_HEADER):
        try:
            out.append(ConductivityPoint(
                branch=parts[0], e_mid_v=float(parts[1]),
                a_o2=10.0 ** float(parts[2]), sigma_e=float(parts[3]),
                repaired=bool(int(parts[4]))))
        except ValueError as e:
            raise ParseError(path, line_no, str(e)) from None
    return out


def read_slopes_csv(path) -> list[tuple[str, SlopeFit]]:
    out = []
    for line_no, parts in _read_rows(path, SLOPES_HEADER):
        try:
            out.append((parts[0], SlopeFit(
                a_lo=float(parts[1]), a_hi=float(parts[2]),
                slope=float(parts[3]), intercept=float(parts[4]),
                n_points=int(parts[5]), rms_residual=float(parts[6]))))
        except ValueError as e:
            raise ParseError(path, line_no, str(e)) from None
    return out
