"""Stateful playback service: scrub a reversible simulation over WebSocket.

Seeks are implemented purely by stepping the integrator (forward or
backward); apart from the per-step digest log, memory per session is
O(1) in step count. Every step ever visited is logged, and revisiting a
step re-checks its digest server-side: a mismatch would mean the
reversibility guarantee is broken, so it is treated as a fatal session
defect.

Wire protocol (JSON, one object per message):
    -> {"op": "create", "scene": {...}}
    <- {"ok": true, "id": "...", "step": 0, "digest": "..."}
    -> {"op": "seek", "id": "...", "step": -250}
    <- {"ok": true, "step": -250, "digest": "...", "q": [...], "p": [...],
        "H": 0.4999}
    -> {"op": "frame", "id": "..."}
    <- full render payload (positions as binary64, digest, energy, scene info)
    errors: {"ok": false, "code": "unknown_session" | "bad_scene" |
             "digest_mismatch" | "seek_cap" | "sim_abort" | "bad_request",
             "msg": "..."}

Fixed-point values never cross the wire as JSON numbers; only binary64
renderings (for display) and hex digests do.
"""

import asyncio
import uuid

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .dynamics import (SimulationAbort, State, _hash_bits, energy,
                       initial_state, run_raw, state_hash)
from .fixedpoint import FixedRangeError, to_real
from .forces import SceneError, scene_from_dict

DEFAULT_SEEK_CAP = 10**6


class SessionDefect(RuntimeError):
    """A revisited step failed to reproduce its logged digest."""


class Session:
    def __init__(self, scene):
        self.id = uuid.uuid4().hex
        self.scene = scene
        self.state = initial_state(scene)
        self.hash_log = {0: state_hash(self.state)}
        self.lock = asyncio.Lock()

    def seek(self, target_step, cap=DEFAULT_SEEK_CAP):
        """Step to target_step, logging and re-checking every visited
        step's digest along the way."""
        delta = target_step - self.state.step
        if delta == 0:
            return self.state
        if abs(delta) > cap:
            raise ValueError(f"seek of {abs(delta)} steps exceeds cap {cap}")
        final, q_log, p_log = run_raw(self.scene, delta, state=self.state,
                                      log=True)
        direction = 1 if delta > 0 else -1
        for k in range(1, abs(delta) + 1):
            step = self.state.step + direction * k
            digest = _hash_bits(q_log[k], p_log[k], step)
            seen = self.hash_log.get(step)
            if seen is None:
                self.hash_log[step] = digest
            elif seen != digest:
                raise SessionDefect(
                    f"digest mismatch at revisited step {step}: "
                    "reversibility broken")
        self.state = final
        return self.state

    def summary(self):
        s = self.state
        H = energy(s, self.scene.field)
        return {
            "step": s.step,
            "digest": state_hash(s).hex(),
            "q": [float(v) for v in to_real(s.q)],
            "p": [float(v) for v in to_real(s.p)],
            "H": H.total,
        }

    def frame(self):
        payload = self.summary()
        payload.update({
            "name": self.scene.name,
            "n": self.scene.n,
            "d": self.scene.d,
            "field_type": self.scene.field.type_name,
        })
        return payload


app = FastAPI(title="revint playback service")
app.state.sessions = {}
app.state.seek_cap = DEFAULT_SEEK_CAP


def _error(code, msg):
    return {"ok": False, "code": code, "msg": msg}


async def _handle(sessions, msg, seek_cap):
    if not isinstance(msg, dict) or "op" not in msg:
        return _error("bad_request", "message must be an object with an 'op'")
    op = msg["op"]

    if op == "create":
        try:
            scene = scene_from_dict(msg.get("scene") or {})
        except SceneError as exc:
            return _error("bad_scene", str(exc))
        session = Session(scene)
        sessions[session.id] = session
        return {"ok": True, "id": session.id, "step": 0,
                "digest": state_hash(session.state).hex()}

    session = sessions.get(msg.get("id"))
    if session is None:
        return _error("unknown_session", f"no session {msg.get('id')!r}")

    if op == "seek":
        try:
            target = int(msg["step"])
        except (KeyError, TypeError, ValueError):
            return _error("bad_request", "seek needs an integer 'step'")
        async with session.lock:
            try:
                session.seek(target, cap=seek_cap)
            except ValueError as exc:
                return _error("seek_cap", str(exc))
            except (SimulationAbort, FixedRangeError) as exc:
                return _error("sim_abort", str(exc))
            except SessionDefect as exc:
                del sessions[session.id]
                return _error("digest_mismatch", str(exc))
            reply = {"ok": True}
            reply.update(session.summary())
            return reply

    if op == "frame":
        async with session.lock:
            reply = {"ok": True}
            reply.update(session.frame())
            return reply

    return _error("bad_request", f"unknown op {op!r}")


@app.websocket("/ws")
async def websocket_endpoint(ws: WebSocket):
    await ws.accept()
    sessions = ws.app.state.sessions
    seek_cap = ws.app.state.seek_cap
    try:
        while True:
            try:
                msg = await ws.receive_json()
            except ValueError:
                await ws.send_json(_error("bad_request", "invalid JSON"))
                continue
            await ws.send_json(await _handle(sessions, msg, seek_cap))
    except WebSocketDisconnect:
        pass
