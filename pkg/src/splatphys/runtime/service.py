"""Interactive streaming service over WebSocket.

One simulation loop owns the physics state. Clients receive INIT on connect
and FRAME messages at most once per simulation step; each client has a
one-slot frame buffer (latest wins) so a slow consumer drops frames instead
of stalling the loop. Exactly one session may interact at a time: the first
GRAB/SPAWN claims ownership, RELEASE (or disconnect) frees it. Malformed
messages close the offending session with a coded ERROR; the simulation is
unaffected.
"""

import asyncio
import contextlib
import time

import numpy as np

from splatphys.runtime import protocol
from splatphys.runtime.scenario import ScenarioRunner, ScenarioScript


class _Session:
    def __init__(self, ws):
        self.ws = ws
        self.frame_slot = asyncio.Queue(maxsize=1)
        self.sender_task = None

    def offer_frame(self, payload):
        if self.frame_slot.full():
            try:
                self.frame_slot.get_nowait()  # drop the stale frame
            except asyncio.QueueEmpty:
                pass
        self.frame_slot.put_nowait(payload)

    async def sender(self):
        while True:
            payload = await self.frame_slot.get()
            await self.ws.send(payload)


class StreamingService:
    def __init__(self, bundle, realtime=True, max_frames=None, scenario=None,
                 pick_radius=0.15):
        self.bundle = bundle
        self.realtime = realtime
        self.max_frames = max_frames
        self.pick_radius = pick_radius
        if isinstance(scenario, (str, bytes)):
            scenario = ScenarioScript.load(scenario)
        self.runner = ScenarioRunner(scenario, bundle) if scenario else None
        self.sessions = set()
        self.owner = None
        self.grab_spring = None
        self.inbox = asyncio.Queue()
        self.frames_sent = 0
        self.frame_log = [] if max_frames is not None else None

    # ---- session handling ----

    async def handler(self, ws):
        session = _Session(ws)
        self.sessions.add(session)
        session.sender_task = asyncio.create_task(session.sender())
        try:
            await ws.send(protocol.encode_init(self.bundle))
            async for raw in ws:
                try:
                    kind, payload = protocol.decode_client_message(
                        raw if isinstance(raw, (bytes, bytearray)) else raw.encode()
                    )
                except protocol.ProtocolError as exc:
                    await ws.send(protocol.encode_error(protocol.ERR_MALFORMED, str(exc)))
                    break
                await self.inbox.put((session, kind, payload))
        finally:
            session.sender_task.cancel()
            self.sessions.discard(session)
            if self.owner is session:
                await self.inbox.put((session, "release", {}))
            with contextlib.suppress(Exception):
                await ws.close()

    # ---- interaction ----

    def _apply_interaction(self, session, kind, payload):
        engine = self.bundle.engine
        if kind in ("grab", "spawn") and self.owner not in (None, session):
            return protocol.encode_error(protocol.ERR_NOT_OWNER, "another session interacts")
        if kind == "grab":
            picked = engine.pick_particle(
                payload["origin"], payload["direction"], max_dist=self.pick_radius
            )
            if picked is None:
                return None  # miss tolerated
            self.owner = session
            if self.grab_spring is not None:
                engine.remove_spring(self.grab_spring)
            target = engine.particles.x[picked].copy()
            self.grab_spring = engine.add_spring(
                picked, target, stiffness=engine.config.grab_damping
            )
        elif kind == "drag":
            if self.owner is session and self.grab_spring is not None:
                self.grab_spring.target = np.asarray(payload["target"], dtype=np.float64)
            elif self.owner is not session:
                return protocol.encode_error(protocol.ERR_NOT_OWNER, "grab first")
        elif kind == "release":
            if self.owner is session:
                if self.grab_spring is not None:
                    engine.remove_spring(self.grab_spring)
                    self.grab_spring = None
                self.owner = None
        elif kind == "spawn":
            self.owner = self.owner or session
            engine.spawn_projectile(
                origin=payload["origin"],
                velocity=payload["velocity"],
                radius=payload["radius"],
                mass=payload["mass"],
            )
        return None

    async def _drain_inbox(self):
        while True:
            try:
                session, kind, payload = self.inbox.get_nowait()
            except asyncio.QueueEmpty:
                return
            reply = self._apply_interaction(session, kind, payload)
            if reply is not None and session.ws is not None:
                with contextlib.suppress(Exception):
                    await session.ws.send(reply)

    # ---- simulation loop ----

    async def sim_loop(self):
        engine = self.bundle.engine
        dt = engine.config.dt
        frame = 0
        next_deadline = time.perf_counter()
        while self.max_frames is None or frame < self.max_frames:
            if self.runner:
                self.runner.apply(frame * dt)
            await self._drain_inbox()
            engine.step()
            deltas = self.bundle.frame_deltas()
            payload = protocol.encode_frame(frame, frame * dt, deltas)
            if self.frame_log is not None:
                self.frame_log.append(deltas)
            for session in list(self.sessions):
                session.offer_frame(payload)
            self.frames_sent += 1
            frame += 1
            if self.realtime:
                next_deadline += dt
                delay = next_deadline - time.perf_counter()
                if delay > 0:
                    await asyncio.sleep(delay)
                else:
                    next_deadline = time.perf_counter()
            else:
                await asyncio.sleep(0)  # yield to the event loop


async def serve_bundle(bundle, host="127.0.0.1", port=8765, realtime=True,
                       max_frames=None, scenario=None, on_ready=None):
    """Run the service; resolves when max_frames is reached (forever when
    max_frames is None). `on_ready(port)` fires once the socket is bound."""
    from websockets.asyncio.server import serve

    service = StreamingService(bundle, realtime=realtime, max_frames=max_frames,
                               scenario=scenario)
    async with serve(service.handler, host, port, max_size=None) as server:
        bound = server.sockets[0].getsockname()[1]
        if on_ready:
            on_ready(bound)
        await service.sim_loop()
        # give the one-slot senders a beat to flush the final frame
        await asyncio.sleep(0.05)
    return service


def serve(bundle, port, host="127.0.0.1", **kwargs):
    """Blocking entry point for the CLI."""
    return asyncio.run(serve_bundle(bundle, host=host, port=port, **kwargs))
