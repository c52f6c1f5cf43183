"""Telemetry bridge: snapshots out, operator commands in.

One JSON document per WebSocket message on ``/v1/stream``. Snapshots are
decimated from the tick rate (default 20 Hz) and only the latest one is
kept per client, so a slow consumer can never stall the tick loop.
Commands are staged on a thread-safe queue, submitted to the engine at the
next tick boundary, and answered with exactly one accepted/rejected reply.
"""

from __future__ import annotations

import asyncio
import json
import math
import threading
from concurrent.futures import Future

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .engine import Attach, Detach, Morph, Pause, Resume, SetSpeed
from .errors import MalformedMessage, ParseError, PortInUse
from .metrics import sample_metrics
from .pose import Pose, wrap_angle

SCHEMA_VERSION = 1
SNAPSHOT_HZ = 20.0
REPLY_TIMEOUT = 5.0


class RunCancelled(Exception):
    """Raised inside the run loop when the hub has been shut down."""


class BridgeHub:
    """Shared state between the simulation thread and the server loop."""

    def __init__(self, snapshot_hz: float = SNAPSHOT_HZ):
        self.snapshot_hz = snapshot_hz
        self._lock = threading.Lock()
        self._latest: tuple[int, dict] | None = None
        self._seq = 0
        self._inbox: list[tuple[dict, Future]] = []
        self._pending: list[tuple[dict, object, Future]] = []
        self._engine = None
        self._scenario_descriptor: dict = {}
        self._formations: dict = {}
        self._decimate = 1
        self._tick_count = 0
        self.closed = threading.Event()

    # --- simulation-thread side ---

    def attach_run(self, engine, scenario):
        with self._lock:
            self._engine = engine
            self._decimate = max(int(round(1.0 / (self.snapshot_hz * engine.dt))), 1)
            self._formations = {scenario.formation.name: scenario.formation}
            for ev in scenario.events:
                if isinstance(ev.command, Morph):
                    self._formations[ev.command.target.name] = ev.command.target
            self._scenario_descriptor = {
                "name": scenario.name,
                "description": scenario.description,
                "agent_count": len(scenario.formation.slots),
                "model": scenario.model.mode,
                "v_max": scenario.trajectory.v_max,
                "dt": engine.dt,
                "snapshot_hz": self.snapshot_hz,
                "formation": scenario.formation.name,
                "formations": sorted(self._formations.keys()),
                "d_min": scenario.formation.d_min,
                "d_max": scenario.formation.d_max,
            }

    def on_tick(self, engine):
        """Called from the run loop after every tick (simulation thread)."""
        self._drain_inbox(engine)
        self._resolve_pending()
        self._tick_count += 1
        if self._tick_count % self._decimate == 0:
            msg = build_snapshot(engine)
            with self._lock:
                self._seq += 1
                self._latest = (self._seq, msg)

    def _drain_inbox(self, engine):
        with self._lock:
            staged, self._inbox = self._inbox, []
        for payload, fut in staged:
            try:
                cmd = parse_command(payload, self._formations)
            except (MalformedMessage, ParseError) as e:
                if not fut.cancelled():
                    fut.set_result({"status": "rejected",
                                    "reason": f"{type(e).__name__}: {e}"})
                continue
            receipt = engine.submit(cmd)
            self._pending.append((payload, receipt, fut))

    def _resolve_pending(self):
        still = []
        for payload, receipt, fut in self._pending:
            if receipt.status is None:
                still.append((payload, receipt, fut))
                continue
            if not fut.cancelled():
                fut.set_result({"status": receipt.status,
                                "reason": receipt.reason})
        self._pending = still

    def finish(self):
        with self._lock:
            staged, self._inbox = self._inbox, []
            pending, self._pending = self._pending, []
        for _, fut in staged:
            if not fut.cancelled():
                fut.set_result({"status": "rejected", "reason": "run ended"})
        for _, _, fut in pending:
            if not fut.cancelled():
                fut.set_result({"status": "rejected", "reason": "run ended"})
        self.closed.set()

    # --- server side ---

    def latest(self) -> tuple[int, dict] | None:
        with self._lock:
            return self._latest

    def scenario_descriptor(self) -> dict:
        with self._lock:
            return dict(self._scenario_descriptor)

    def submit_payload(self, payload: dict) -> Future:
        fut: Future = Future()
        with self._lock:
            if self.closed.is_set():
                fut.set_result({"status": "rejected", "reason": "run ended"})
            else:
                self._inbox.append((payload, fut))
        return fut


def build_snapshot(engine) -> dict:
    state = engine.snapshot()
    sample = sample_metrics(state) if state.phase == "motion" else None
    agents = []
    for a in state.agents:
        agents.append({
            "id": a.agent_id,
            "slot": a.slot_id,
            "pos": [round(float(v), 6) for v in a.position],
            "yaw": round(float(a.yaw), 6),
            "vel": [round(float(v), 6) for v in a.velocity],
            "ref_pos": [round(float(v), 6) for v in a.reference.translation],
            "detached": a.detached,
        })
    vc = state.vc
    msg = {
        "schema_version": SCHEMA_VERSION,
        "t": round(float(state.t), 6),
        "phase": state.phase,
        "vc": {
            "pos": [round(float(v), 6) for v in vc.pose.translation],
            "yaw": round(float(wrap_angle(vc.yaw)), 6),
            "vel": [round(float(v), 6) for v in vc.twist.linear],
        },
        "agents": agents,
        "formation": {
            "name": state.formation.name,
            "slot_count": len(state.formation.slots),
            "transitioning": state.transition is not None,
            "transition_progress": round(float(state.transition_progress), 4),
        },
    }
    if sample is not None:
        sep_vals = list(sample.separation.values())
        msg["metrics"] = {
            "cohesion": {str(k): round(v, 4) for k, v in sample.cohesion.items()},
            "reference_error": {str(k): round(v, 4)
                                for k, v in sample.reference_error.items()},
            "alignment": {str(k): round(v, 4) for k, v in sample.alignment.items()},
            "min_separation": round(min(sep_vals), 4) if sep_vals else None,
        }
    return msg


def parse_command(payload: dict, formations: dict):
    if not isinstance(payload, dict):
        raise MalformedMessage("command message must be a JSON object")
    kind = payload.get("type")
    try:
        if kind == "detach":
            return Detach(int(payload["agent_id"]))
        if kind == "attach":
            off = payload["offset"]
            xyz = [float(v) for v in off["xyz"]]
            yaw = math.radians(float(off.get("yaw_deg", 0.0)))
            return Attach(int(payload["agent_id"]),
                          Pose.from_xyz_yaw(*xyz, yaw))
        if kind == "morph":
            duration = float(payload.get("duration", 1.5))
            if "formation_name" in payload:
                name = payload["formation_name"]
                if name not in formations:
                    raise MalformedMessage(
                        f"unknown formation {name!r}; known: "
                        f"{sorted(formations.keys())}")
                return Morph(formations[name], duration=duration)
            if "formation" in payload:
                from .scenario import build_formation
                return Morph(build_formation(payload["formation"]),
                             duration=duration)
            raise MalformedMessage("morph needs formation_name or formation")
        if kind == "pause":
            return Pause()
        if kind == "resume":
            return Resume()
        if kind == "set_speed":
            return SetSpeed(float(payload["v_max"]))
    except (KeyError, TypeError, ValueError) as e:
        raise MalformedMessage(f"bad {kind} payload: {e}") from e
    raise MalformedMessage(f"unknown command type {kind!r}")


def build_app(hub: BridgeHub) -> FastAPI:
    app = FastAPI()

    @app.get("/v1/health")
    def health():
        latest = hub.latest()
        return {"status": "ok",
                "t": latest[1]["t"] if latest else None}

    @app.get("/v1/scenario")
    def scenario():
        return hub.scenario_descriptor()

    @app.websocket("/v1/stream")
    async def stream(ws: WebSocket):
        await ws.accept()
        stop = asyncio.Event()

        async def sender():
            last_seq = 0
            period = 1.0 / hub.snapshot_hz
            while not stop.is_set():
                latest = hub.latest()
                if latest is not None and latest[0] != last_seq:
                    last_seq = latest[0]
                    await ws.send_text(json.dumps(latest[1]))
                await asyncio.sleep(period / 2.0)

        async def receiver():
            while True:
                try:
                    raw = await ws.receive_text()
                except WebSocketDisconnect:
                    return
                try:
                    payload = json.loads(raw)
                except json.JSONDecodeError as e:
                    await ws.send_text(json.dumps({
                        "request_id": None, "status": "rejected",
                        "reason": f"MalformedMessage: {e}"}))
                    continue
                request_id = (payload.get("request_id")
                              if isinstance(payload, dict) else None)
                fut = hub.submit_payload(payload)
                try:
                    result = await asyncio.wait_for(
                        asyncio.wrap_future(fut), timeout=REPLY_TIMEOUT)
                except asyncio.TimeoutError:
                    fut.cancel()
                    result = {"status": "rejected", "reason": "timeout"}
                reply = {"request_id": request_id}
                reply.update(result)
                await ws.send_text(json.dumps(reply))

        recv_task = asyncio.ensure_future(receiver())
        send_task = asyncio.ensure_future(sender())
        try:
            await recv_task
        finally:
            stop.set()
            send_task.cancel()
            try:
                await send_task
            except (asyncio.CancelledError, Exception):
                pass

    return app


class BridgeServer:
    """uvicorn in a daemon thread; raises PortInUse when binding fails."""

    def __init__(self, app, host: str = "127.0.0.1", port: int = 8750):
        import uvicorn

        self.config = uvicorn.Config(app, host=host, port=port,
                                     log_level="warning")
        self.server = uvicorn.Server(self.config)
        self.thread = threading.Thread(target=self.server.run, daemon=True)
        self.host = host
        self.port = port

    def start(self, wait: float = 5.0):
        self.thread.start()
        import time as _time
        deadline = _time.monotonic() + wait
        while _time.monotonic() < deadline:
            if self.server.started:
                return self
            if not self.thread.is_alive():
                raise PortInUse(f"server failed to start on port {self.port}")
            _time.sleep(0.01)
        raise PortInUse(f"could not bind 127.0.0.1:{self.port}")

    def stop(self):
        self.server.should_exit = True
        self.thread.join(timeout=5.0)


def serve(engine_or_runner, port: int, snapshot_hz: float = SNAPSHOT_HZ):
    """Stand up the endpoint for an already-running simulation hub."""
    if isinstance(engine_or_runner, BridgeHub):
        hub = engine_or_runner
    else:
        raise ParseError("serve() expects a BridgeHub wired to the run loop")
    app = build_app(hub)
    return BridgeServer(app, port=port).start()


def serve_run(scenario_ref: str, out_dir, port: int, overrides=None,
              realtime: bool = True, strict: bool = False):
    """Run a scenario while serving telemetry on the given port (CLI path)."""
    from .runner import run_scenario
    from .scenario import resolve_scenario

    scenario = resolve_scenario(scenario_ref, overrides)
    hub = BridgeHub()
    app = build_app(hub)
    server = BridgeServer(app, port=port).start()
    try:
        hooked = _HookAdapter(hub, scenario)
        result = run_scenario(scenario, out_dir, strict=strict,
                              realtime=realtime, snapshot_hook=hooked)
        return result
    finally:
        hub.finish()
        server.stop()


class _HookAdapter:
    """Wires attach_run lazily: the engine exists only once the run starts."""

    def __init__(self, hub: BridgeHub, scenario):
        self.hub = hub
        self.scenario = scenario
        self._attached = False

    def __call__(self, engine):
        if self.hub.closed.is_set():
            raise RunCancelled()
        if not self._attached:
            self.hub.attach_run(engine, self.scenario)
            self._attached = True
        self.hub.on_tick(engine)
