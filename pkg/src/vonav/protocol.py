"""Environment wire protocol for external policy trainers.

Newline-delimited JSON over stdio or a TCP socket, one session per
connection. Requests:

    {"cmd": "reset", "seed": 123, "format": "b64"}    # format optional
    {"cmd": "step", "action": [v_norm, omega_norm]}
    {"cmd": "close"}

Replies (one line each). Observation components follow the declared order
["lidar", "ped_vx", "ped_vy", "goal"] with flattened row-major shapes
[6400, 6400, 6400, 2]; "b64" (default) encodes each as base64 little-endian
float32, "json" as plain number arrays.

    {"type": "obs", "format": ..., "order": [...], "shapes": [...],
     "obs": {...}, "info": {...}}
    {"type": "step", "obs": {...}, "reward": {"r_g": ..., "r_c": ...,
     "r_w": ..., "r_d": ..., "total": ...}, "done": ..., "info": {...}}
    {"type": "bye"}
    {"type": "error", "message": "..."}    # session continues

Malformed requests, out-of-order steps, and engine contract errors produce
an error reply without ending the session. Identical (scenario, seed,
action) scripts produce byte-identical reply transcripts.
"""
from __future__ import annotations

import base64
import json
import socketserver
import sys

import numpy as np

from .engine import Engine
from .errors import EngineError
from .scenarios import ScenarioConfig

OBS_ORDER = ("lidar", "ped_vx", "ped_vy", "goal")


def _encode_component(arr: np.ndarray, fmt: str):
    flat = np.asarray(arr, dtype=np.float32).reshape(-1)
    if fmt == "b64":
        return base64.b64encode(flat.astype("<f4").tobytes()).decode("ascii")
    return [float(v) for v in flat]


def encode_observation(obs, fmt: str) -> dict:
    parts = dict(obs.components())
    return {name: _encode_component(parts[name], fmt) for name in OBS_ORDER}


def observation_shapes(obs) -> list[int]:
    parts = dict(obs.components())
    return [int(np.asarray(parts[name]).size) for name in OBS_ORDER]


def _sanitize(value):
    if isinstance(value, dict):
        return {k: _sanitize(v) for k, v in value.items()}
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    return value


def serve_session(scenario: ScenarioConfig, lines, write) -> None:
    """Run one protocol session: read request lines, call `write` per reply."""
    engine = Engine(scenario)
    fmt = "b64"

    def reply(payload: dict):
        write(json.dumps(payload, separators=(",", ":")) + "\n")

    for line in lines:
        line = line.strip()
        if not line:
            continue
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as e:
            reply({"type": "error", "message": f"bad json: {e.msg}"})
            continue
        if not isinstance(msg, dict) or "cmd" not in msg:
            reply({"type": "error", "message": "message must be {\"cmd\": ...}"})
            continue
        cmd = msg["cmd"]
        try:
            if cmd == "reset":
                fmt = msg.get("format", "b64")
                if fmt not in ("b64", "json"):
                    raise ValueError(f"unknown format {fmt!r}")
                obs, info = engine.reset(seed=msg.get("seed"))
                reply(
                    {
                        "type": "obs",
                        "format": fmt,
                        "order": list(OBS_ORDER),
                        "shapes": observation_shapes(obs),
                        "obs": encode_observation(obs, fmt),
                        "info": _sanitize(info),
                    }
                )
            elif cmd == "step":
                action = msg.get("action")
                if not isinstance(action, (list, tuple)) or len(action) != 2:
                    raise ValueError("step needs \"action\": [v, omega]")
                obs, reward, done, info = engine.step(action)
                reply(
                    {
                        "type": "step",
                        "obs": encode_observation(obs, fmt),
                        "reward": _sanitize(reward.to_dict()),
                        "done": bool(done),
                        "info": _sanitize(info),
                    }
                )
            elif cmd == "close":
                reply({"type": "bye"})
                return
            else:
                reply({"type": "error", "message": f"unknown cmd {cmd!r}"})
        except (ValueError, TypeError, EngineError) as e:
            reply({"type": "error", "message": str(e)})


def serve_stdio(scenario: ScenarioConfig) -> None:
    serve_session(scenario, sys.stdin, lambda s: (sys.stdout.write(s), sys.stdout.flush()))


def serve_tcp(scenario: ScenarioConfig, host: str, port: int) -> None:
    """Listen forever, one sequential session per connection."""

    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            lines = (raw.decode("utf-8") for raw in self.rfile)

            def write(s: str):
                self.wfile.write(s.encode("utf-8"))
                self.wfile.flush()

            serve_session(scenario, lines, write)

    with socketserver.TCPServer((host, port), Handler) as server:
        server.allow_reuse_address = True
        server.serve_forever()
