"""Steer a running campaign over HTTP: watch the stream, loosen the
steady-state threshold mid-run, then abort.

Starts the service in-process on a spare port with a slowed virtual
clock, consumes the event stream like a dashboard would, and issues the
same requests the browser UI sends.
"""

import json
import threading
import time

import httpx

from hwbench import load_config
from hwbench.server import make_server

cfg = load_config("bench-quick")
httpd, manager = make_server(cfg, "127.0.0.1", 0, out_dir="demo-live-run",
                             time_ratio=0.01)
threading.Thread(target=httpd.serve_forever, daemon=True).start()
base = f"http://127.0.0.1:{httpd.server_address[1]}"
print(f"service on {base}")

client = httpx.Client(base_url=base, timeout=10.0)
client.post("/api/campaign")

seen = []


def consume():
    with client.stream("GET", "/api/stream") as r:
        name = None
        for line in r.iter_lines():
            if line.startswith("event: "):
                name = line.split(": ", 1)[1]
            elif line.startswith("data: ") and name:
                seen.append((name, json.loads(line.split(": ", 1)[1])))
                if name in ("done", "aborted"):
                    return


t = threading.Thread(target=consume, daemon=True)
t.start()

while not any(n == "iv_point" for n, _ in seen):
    time.sleep(0.05)
print("first point recorded; loosening the threshold 1 nA -> 5 nA")
r = client.patch("/api/params", json={"threshold_a": 5e-9})
print(f"  PATCH ack: pending threshold "
      f"{r.json()['pending']['threshold_a']:.0e} A")

while len([1 for n, _ in seen if n == "iv_point"]) < 3:
    time.sleep(0.05)
print(f"params now live: {client.get('/api/params').json()['threshold_a']:.0e} A")

print("aborting after three points")
client.post("/api/campaign/abort")
t.join(timeout=20)

counts = {}
for n, _ in seen:
    counts[n] = counts.get(n, 0) + 1
print(f"stream events: {counts}")
print(f"final phase: {client.get('/api/campaign').json()['phase']}")
print(f"points on record: {len(client.get('/api/iv').json())}")

client.close()
httpd.shutdown()
