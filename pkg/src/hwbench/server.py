"""HTTP service for monitoring and steering a live campaign.

Endpoints (JSON bodies):
  POST  /api/campaign        start a campaign (optional config in the body)
  POST  /api/campaign/abort  request abort
  GET   /api/campaign        CampaignState snapshot
  GET   /api/params          live steady-state parameters
  PATCH /api/params          queue a parameter patch (applied at Np boundary)
  GET   /api/iv              rows of iv.csv recorded so far
  GET   /api/conductivity    analysis of the curve so far
  GET   /api/trace/current   samples of the active trace
  GET   /api/stream          server-sent events: samples, transitions, points

All writes funnel through the campaign's queued-command contract; the
service itself never touches campaign state directly. Slow stream
subscribers are dropped rather than allowed to stall acquisition.
"""

from __future__ import annotations

import dataclasses
import json
import math
import queue
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .acquisition import CampaignError, InvalidParams, Phase, check_filter_condition
from .analysis import analyze_curve
from .config import CampaignConfig, ConfigError, config_from_dict
from .run import build_campaign

_TERMINAL_EVENTS = {"done", "aborted"}


class _Subscriber:
    def __init__(self, maxsize=512):
        self.queue: queue.Queue = queue.Queue(maxsize=maxsize)
        self.dropped = False


class EventHub:
    """Fan-out of campaign events to any number of stream subscribers."""

    def __init__(self):
        self._lock = threading.Lock()
        self._subs: list[_Subscriber] = []

    def subscribe(self) -> _Subscriber:
        sub = _Subscriber()
        with self._lock:
            self._subs.append(sub)
        return sub

    def unsubscribe(self, sub: _Subscriber):
        with self._lock:
            if sub in self._subs:
                self._subs.remove(sub)

    def publish(self, name: str, payload: dict):
        with self._lock:
            subs = list(self._subs)
        for sub in subs:
            try:
                sub.queue.put_nowait((name, payload))
            except queue.Full:
                sub.dropped = True
                self.unsubscribe(sub)


class CampaignManager:
    """Owns at most one running campaign and its worker thread."""

    def __init__(self, base_config: CampaignConfig, out_dir,
                 time_ratio: float):
        self.base_config = base_config
        self.out_dir = out_dir
        self.time_ratio = time_ratio
        self.hub = EventHub()
        self._lock = threading.Lock()
        self.campaign = None
        self._thread = None

    def running(self) -> bool:
        return self._thread is not None and self._thread.is_alive()

    def start(self, cfg: CampaignConfig | None = None):
        with self._lock:
            if self.running():
                raise RuntimeError("a campaign is already running")
            cfg = cfg or self.base_config
            campaign, writer = build_campaign(
                cfg, out_dir=self.out_dir, observer=self.hub.publish,
                time_ratio=self.time_ratio)
            self.campaign = campaign

            def work():
                try:
                    campaign.run()
                except CampaignError:
                    pass  # already logged and phased as aborted
                finally:
                    writer.close()

            self._thread = threading.Thread(target=work, daemon=True,
                                            name="campaign")
            self._thread.start()

    def abort(self):
        with self._lock:
            if self.campaign is None:
                raise RuntimeError("no campaign to abort")
            self.campaign.request_abort()


def _json_bytes(obj) -> bytes:
    return (json.dumps(obj) + "\n").encode("utf-8")


def _point_dict(p) -> dict:
    return {"index": p.index, "e_app_v": p.e_app_v,
            "i_ss_a": None if math.isnan(p.i_ss_a) else p.i_ss_a,
            "branch": p.branch, "t_settled_s": p.t_settled_s,
            "flags": p.flags}


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    manager: CampaignManager = None
    ui_dir: Path | None = None

    def log_message(self, fmt, *args):
        pass

    # -- plumbing -------------------------------------------------------------

    def _send_json(self, obj, status=200):
        body = _json_bytes(obj)
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _read_body(self):
        length = int(self.headers.get("Content-Length") or 0)
        if length == 0:
            return None
        raw = self.rfile.read(length)
        try:
            return json.loads(raw)
        except json.JSONDecodeError:
            return ValueError("request body is not valid JSON")

    def _campaign_or_404(self):
        c = self.manager.campaign
        if c is None:
            self._send_json({"error": "no campaign started"}, 404)
            return None
        return c

    # -- GET --------------------------------------------------------------------

    def do_GET(self):
        if self.path == "/api/campaign":
            self._get_campaign()
        elif self.path == "/api/params":
            self._get_params()
        elif self.path == "/api/iv":
            self._get_iv()
        elif self.path == "/api/conductivity":
            self._get_conductivity()
        elif self.path == "/api/trace/current":
            self._get_trace()
        elif self.path == "/api/stream":
            self._stream()
        else:
            self._static()

    def _get_campaign(self):
        c = self.manager.campaign
        cfg = self.manager.base_config
        ok, margin = check_filter_condition(cfg.heater.t_on_s,
                                            cfg.electrometer)
        if c is None:
            self._send_json({"phase": Phase.IDLE.value, "points_done": 0,
                             "running": False,
                             "filter_condition": {"ok": ok,
                                                  "margin_s": margin}})
            return
        s = c.snapshot()
        self._send_json({
            "phase": s.phase.value,
            "live_params": dataclasses.asdict(s.live_params),
            "current_voltage": s.current_voltage,
            "points_done": s.points_done,
            "sp_oven_c": s.sp_oven_c,
            "t_oven_c": s.t_oven_c,
            "t_cell_c": s.t_cell_c,
            "now_s": s.now_s,
            "running": self.manager.running(),
            "filter_condition": {"ok": ok, "margin_s": margin},
        })

    def _get_params(self):
        c = self._campaign_or_404()
        if c is None:
            return
        self._send_json(dataclasses.asdict(c.live_params))

    def _get_iv(self):
        c = self._campaign_or_404()
        if c is None:
            return
        self._send_json([_point_dict(p) for p in c.iv_rows()])

    def _get_conductivity(self):
        c = self._campaign_or_404()
        if c is None:
            return
        cfg = self.manager.base_config
        pts, fits = analyze_curve(c.iv_rows(), cfg.geometry, cfg.reference)
        self._send_json({
            "points": [{"branch": p.branch, "e_mid_v": p.e_mid_v,
                        "log10_a_o2": math.log10(p.a_o2),
                        "sigma_s_per_m": p.sigma_e,
                        "repaired": p.repaired} for p in pts],
            "slopes": [{"branch": b, "a_lo": f.a_lo, "a_hi": f.a_hi,
                        "slope": f.slope, "intercept": f.intercept,
                        "n_points": f.n_points,
                        "rms_residual": f.rms_residual} for b, f in fits],
        })

    def _get_trace(self):
        c = self._campaign_or_404()
        if c is None:
            return
        samples = list(c.rig.trace)
        self._send_json([{"t_s": s.t_s, "raw_a": s.raw_a,
                          "filtered_a": s.filtered_a,
                          "cell_temp_c": s.cell_temp_c,
                          "heater_on": int(s.heater_on)} for s in samples])

    def _stream(self):
        sub = self.manager.hub.subscribe()
        try:
            self.send_response(200)
            self.send_header("Content-Type", "text/event-stream")
            self.send_header("Cache-Control", "no-cache")
            self.send_header("Connection", "close")
            self.end_headers()
            self.wfile.write(b"retry: 2000\n\n")
            self.wfile.flush()
            while not sub.dropped:
                try:
                    name, payload = sub.queue.get(timeout=0.5)
                except queue.Empty:
                    self.wfile.write(b": keepalive\n\n")
                    self.wfile.flush()
                    continue
                chunk = (f"event: {name}\n"
                         f"data: {json.dumps(payload)}\n\n").encode("utf-8")
                self.wfile.write(chunk)
                self.wfile.flush()
                if name in _TERMINAL_EVENTS:
                    break
        except (BrokenPipeError, ConnectionResetError):
            pass
        finally:
            self.manager.hub.unsubscribe(sub)

    def _static(self):
        if self.ui_dir is None:
            if self.path in ("/", "/index.html"):
                body = (b"hwbench service. API under /api/; "
                        b"no dashboard assets configured (serve --ui DIR).\n")
                self.send_response(200)
                self.send_header("Content-Type", "text/plain")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)
                return
            self._send_json({"error": "not found"}, 404)
            return
        rel = self.path.lstrip("/") or "index.html"
        target = (self.ui_dir / rel).resolve()
        if not str(target).startswith(str(self.ui_dir.resolve())) \
                or not target.is_file():
            self._send_json({"error": "not found"}, 404)
            return
        ctype = {
            ".html": "text/html", ".js": "text/javascript",
            ".css": "text/css", ".svg": "image/svg+xml",
            ".json": "application/json", ".map": "application/json",
        }.get(target.suffix, "application/octet-stream")
        body = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    # -- POST / PATCH -----------------------------------------------------------

    def do_POST(self):
        if self.path == "/api/campaign":
            body = self._read_body()
            if isinstance(body, ValueError):
                self._send_json({"error": str(body)}, 400)
                return
            try:
                cfg = config_from_dict(body) if body else None
            except ConfigError as e:
                self._send_json({"error": str(e),
                                 "field": e.field_path}, 422)
                return
            try:
                self.manager.start(cfg)
            except RuntimeError as e:
                self._send_json({"error": str(e)}, 409)
                return
            self._send_json({"started": True}, 202)
        elif self.path == "/api/campaign/abort":
            try:
                self.manager.abort()
            except RuntimeError as e:
                self._send_json({"error": str(e)}, 409)
                return
            self._send_json({"aborting": True})
        else:
            self._send_json({"error": "not found"}, 404)

    def do_PATCH(self):
        if self.path != "/api/params":
            self._send_json({"error": "not found"}, 404)
            return
        c = self.manager.campaign
        if c is None:
            self._send_json({"error": "no campaign started"}, 409)
            return
        body = self._read_body()
        if body is None or isinstance(body, ValueError) \
                or not isinstance(body, dict):
            self._send_json({"error": "expected a JSON object"}, 400)
            return
        allowed = {"np_s", "nw_s", "threshold_a", "nm_s", "timeout_s"}
        unknown = set(body) - allowed
        if unknown:
            self._send_json(
                {"errors": {k: "unknown parameter" for k in sorted(unknown)}},
                422)
            return
        try:
            pending = c.submit_params(body)
        except InvalidParams as e:
            msg = str(e)
            field = msg.split()[0] if msg else "params"
            self._send_json({"errors": {field: msg}}, 422)
            return
        self._send_json({
            "accepted": True,
            "pending": dataclasses.asdict(pending),
            "applied": dataclasses.asdict(c.live_params),
        })


def make_server(cfg: CampaignConfig, host: str, port: int, out_dir=None,
                time_ratio: float = 0.05,
                ui_dir=None) -> tuple[ThreadingHTTPServer, CampaignManager]:
    manager = CampaignManager(cfg, out_dir or cfg.output_dir, time_ratio)
    handler = type("Handler", (_Handler,), {
        "manager": manager,
        "ui_dir": Path(ui_dir) if ui_dir else None,
    })
    httpd = ThreadingHTTPServer((host, port), handler)
    httpd.daemon_threads = True
    return httpd, manager


def serve(cfg: CampaignConfig, host: str, port: int, out_dir=None,
          time_ratio: float = 0.05, ui_dir=None):
    httpd, _ = make_server(cfg, host, port, out_dir=out_dir,
                           time_ratio=time_ratio, ui_dir=ui_dir)
    print(f"hwbench service on http://{host}:{port}/ "
          f"(time ratio {time_ratio} s real per virtual s)")
    try:
        httpd.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        httpd.server_close()
