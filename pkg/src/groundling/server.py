"""Session service exposing a live agent and scene to an instructor client.

HTTP carries session lifecycle, snapshots, and save/load; a websocket channel
carries the chat, clicks, and the agent's move stream.  Every session
serializes its mutations behind one lock, so snapshots only ever observe
quiescent states between interaction cycles.  docs/protocol.md documents the
message schema; outgoing messages carry a per-session monotone ``seq``.
"""

from __future__ import annotations

import itertools
import threading
from typing import Optional

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect

from .agent import Agent
from .world import (
    ActionUnavailable,
    SceneSpec,
    generate_scene,
    scene_from_json,
    scene_to_json,
)

PROTOCOL_VERSION = 1


class Session:
    def __init__(self, session_id: str, agent: Agent):
        self.id = session_id
        self.agent = agent
        self.lock = threading.Lock()
        self._seq = itertools.count(1)

    def next_seq(self) -> int:
        return next(self._seq)

    def message(self, kind: str, payload: dict) -> dict:
        return {"v": PROTOCOL_VERSION, "type": kind, "seq": self.next_seq(), "payload": payload}


def _scene_snapshot(agent: Agent) -> dict:
    scene = agent.scene
    return {
        "objects": [
            {
                "id": o.id,
                "pose": list(o.pose),
                "bbox": list(o.bbox),
                "color": list(o.color),
                # physical outline for the camera-feed replacement view
                "shape": scene.truth.get(o.id, {}).get("shape", "square"),
                "held": scene.arm.holding == o.id,
            }
            for _, o in sorted(scene.objects.items())
        ],
        "locations": {n: list(loc.region) for n, loc in sorted(scene.locations.items())},
        "arm": scene.arm.holding,
        "tick": scene.tick,
        "workspace": list(scene.workspace),
        "pointed_at": scene.pointed_object(),
    }


def _stack_snapshot(agent: Agent) -> dict:
    return {
        "open": agent.stack.ids(),
        "segments": {
            s.id: {
                "purpose": s.purpose.value,
                "status": s.status.value,
                "originator": s.originator.value,
                "parent": s.parent,
            }
            for s in agent.stack.segments.values()
        },
    }


def _semantic_snapshot(agent: Agent) -> dict:
    from .memory import ActionConceptNetwork, PrepMap, WordMap

    return {
        "word_maps": [e.to_json() for e in agent.smem.entries(WordMap)],
        "prep_maps": [e.to_json() for e in agent.smem.entries(PrepMap)],
        "networks": [
            dict(e.to_json(), nodes=e.nodes()) for e in agent.smem.entries(ActionConceptNetwork)
        ],
        "rules": [r.to_json() for r in agent.rules],
        "classifier_examples": {
            prop.value: len(clf.examples) for prop, clf in agent.classifiers.items()
        },
    }


SNAPSHOTS = {
    "scene": _scene_snapshot,
    "stack": _stack_snapshot,
    "semantic": _semantic_snapshot,
    "episodic": lambda agent: agent.epmem.to_json(),
    "transcript": lambda agent: [e.to_json() for e in agent.transcript],
}


def create_app(ui_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="groundling session service")
    sessions: dict[str, Session] = {}
    counter = itertools.count(1)
    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    def get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return session

    @app.post("/session")
    def create_session(body: Optional[dict] = None):
        body = body or {}
        seed = body.get("seed", 0)
        if "save" in body:
            doc = body["save"]
            scene = scene_from_json(doc["scene"])
            agent = Agent.load_state(doc["agent"], scene)
        else:
            if "scene" in body:
                spec = SceneSpec.from_json(body["scene"])
            else:
                spec = SceneSpec(objects=[{} for _ in range(12)], seed=seed)
            agent = Agent(generate_scene(spec), seed=seed)
        session_id = f"s{next(counter)}"
        sessions[session_id] = Session(session_id, agent)
        return {"session_id": session_id, "v": PROTOCOL_VERSION}

    @app.get("/session/{session_id}/snapshot/{kind}")
    def snapshot(session_id: str, kind: str):
        session = get_session(session_id)
        if kind not in SNAPSHOTS:
            raise HTTPException(status_code=404, detail=f"unknown snapshot kind {kind!r}")
        with session.lock:
            return {"v": PROTOCOL_VERSION, "kind": kind, "data": SNAPSHOTS[kind](session.agent)}

    @app.post("/session/{session_id}/save")
    def save(session_id: str, body: Optional[dict] = None):
        session = get_session(session_id)
        include_episodes = bool((body or {}).get("include_episodes"))
        with session.lock:
            return {
                "v": PROTOCOL_VERSION,
                "agent": session.agent.save_state(include_episodes=include_episodes),
                "scene": scene_to_json(session.agent.scene),
            }

    @app.post("/session/{session_id}/load")
    def load(session_id: str, body: dict):
        session = get_session(session_id)
        with session.lock:
            scene = scene_from_json(body["scene"])
            session.agent = Agent.load_state(body["agent"], scene)
        return {"ok": True}

    @app.websocket("/session/{session_id}/channel")
    async def channel(websocket: WebSocket, session_id: str):
        session = sessions.get(session_id)
        await websocket.accept()
        if session is None:
            await websocket.send_json(
                {"v": PROTOCOL_VERSION, "type": "error", "seq": 0,
                 "payload": {"reason": "unknown session"}}
            )
            await websocket.close()
            return
        try:
            while True:
                incoming = await websocket.receive_json()
                kind = incoming.get("type")
                payload = incoming.get("payload", {})
                out: list[dict] = []
                with session.lock:
                    agent = session.agent
                    events_before = len(agent.transcript)
                    if kind == "utterance":
                        moves = agent.submit_utterance(
                            payload.get("text", ""), click=payload.get("click")
                        )
                        for move in moves:
                            if move.kind == "utterance":
                                out.append(
                                    session.message(
                                        "agent_utterance",
                                        {"text": move.text, "template": move.template,
                                         "segment": agent.stack.ids()[-1] if agent.stack.ids() else None},
                                    )
                                )
                            elif move.kind == "external":
                                from .agent import _action_to_json

                                out.append(
                                    session.message("agent_action", _action_to_json(move.action))
                                )
                        for event in agent.transcript[events_before:]:
                            if event.kind == "learning":
                                out.append(session.message("learning_event", event.to_json()))
                        out.append(session.message("scene_update", _scene_snapshot(agent)))
                    elif kind == "click":
                        try:
                            agent.select_object(payload.get("object_id"))
                            out.append(session.message("scene_update", _scene_snapshot(agent)))
                        except ActionUnavailable as exc:
                            out.append(session.message("error", {"reason": str(exc)}))
                    else:
                        out.append(
                            session.message("error", {"reason": f"unknown type {kind!r}"})
                        )
                for message in out:
                    await websocket.send_json(message)
        except WebSocketDisconnect:
            return

    return app


app = create_app()
