"""Socket REPL service: JSON-lines over TCP, one request per line.

Many clients, many sessions; requests within a session are serialized,
sessions run concurrently.  A timed-out execute leaves the session at
its pre-request state: statements are evaluated off to the side and only
committed when they finish within the deadline.
"""

from __future__ import annotations

import json
import socketserver
import threading
import time
import uuid
from dataclasses import dataclass, field

from .engine import Engine, EngineError, Session
from .interp import Advanced, Completed, StepError
from .syntax.script import ParseError, parse_statements

PROTO_VERSION = 1

OPS = ("ping", "new_session", "set_goal", "execute", "state", "rollback", "close", "reset_db")


@dataclass(slots=True)
class _SessionSlot:
    session: Session
    lock: threading.Lock = field(default_factory=threading.Lock)
    last_active: float = field(default_factory=time.monotonic)


class ReplServer:
    def __init__(
        self,
        bind: tuple[str, int],
        engine: Engine | None = None,
        admin_token: str | None = None,
        statement_timeout: float = 10.0,
        idle_timeout: float = 1800.0,
    ) -> None:
        self.engine = engine or Engine()
        self.admin_token = admin_token
        self.statement_timeout = statement_timeout
        self.idle_timeout = idle_timeout
        self.sessions: dict[str, _SessionSlot] = {}
        self._sessions_lock = threading.Lock()
        server = self

        class Handler(socketserver.StreamRequestHandler):
            def handle(self) -> None:
                while True:
                    line = self.rfile.readline()
                    if not line:
                        return
                    text = line.decode("utf-8", errors="replace").strip()
                    if not text:
                        continue
                    reply = server.handle_line(text)
                    self.wfile.write((json.dumps(reply) + "\n").encode("utf-8"))
                    self.wfile.flush()

        class ThreadingServer(socketserver.ThreadingTCPServer):
            allow_reuse_address = True
            daemon_threads = True

        self._tcp = ThreadingServer(bind, Handler)
        self.address = self._tcp.server_address
        self._sweeper = threading.Thread(target=self._sweep_idle, daemon=True)
        self._stop = threading.Event()

    # -- lifecycle ---------------------------------------------------------

    def serve_forever(self) -> None:
        self._sweeper.start()
        self._tcp.serve_forever(poll_interval=0.2)

    def start_background(self) -> threading.Thread:
        t = threading.Thread(target=self.serve_forever, daemon=True)
        t.start()
        return t

    def shutdown(self) -> None:
        self._stop.set()
        self._tcp.shutdown()
        self._tcp.server_close()

    def _sweep_idle(self) -> None:
        while not self._stop.wait(30.0):
            cutoff = time.monotonic() - self.idle_timeout
            with self._sessions_lock:
                dead = [sid for sid, slot in self.sessions.items() if slot.last_active < cutoff]
                for sid in dead:
                    del self.sessions[sid]

    # -- request handling ----------------------------------------------------

    def handle_line(self, line: str) -> dict:
        try:
            req = json.loads(line)
        except json.JSONDecodeError as e:
            return self._error(None, "parse", f"malformed request line: {e}")
        if not isinstance(req, dict):
            return self._error(None, "parse", "request must be a JSON object")
        rid = req.get("id")
        if req.get("proto") != PROTO_VERSION:
            return self._error(rid, "proto", f"unsupported protocol {req.get('proto')!r}")
        op = req.get("op")
        if op not in OPS:
            return self._error(rid, "unknown_op", f"unknown op {op!r}")
        payload = req.get("payload") or {}
        if not isinstance(payload, dict):
            return self._error(rid, "bad_payload", "payload must be an object")
        try:
            return self._dispatch(rid, op, req.get("session"), payload)
        except EngineError as e:
            return self._error(rid, "engine", str(e))
        except Exception as e:  # crash containment: never kill the connection
            return self._error(rid, "engine", f"internal error: {e}")

    def _dispatch(self, rid, op: str, sid, payload: dict) -> dict:
        if op == "ping":
            return self._ok(rid, {"pong": True, "proto": PROTO_VERSION})
        if op == "new_session":
            theory = payload.get("theory")
            if not isinstance(theory, str):
                return self._error(rid, "bad_payload", "new_session needs a theory name")
            try:
                session = self.engine.new_session(theory)
            except Exception as e:
                return self._error(rid, "engine", f"cannot open theory {theory}: {e}")
            sid = uuid.uuid4().hex[:16]
            with self._sessions_lock:
                self.sessions[sid] = _SessionSlot(session)
            return self._ok(rid, {"session": sid, "theory": theory})
        if op == "reset_db":
            if self.admin_token is None or payload.get("token") != self.admin_token:
                return self._error(rid, "unauthorized", "admin token required")
            self.engine.reset_dbs()
            return self._ok(rid, {"reset": True, "db_version": self.engine.db_version()})

        slot = self._slot(sid)
        if slot is None:
            return self._error(rid, "unknown_session", f"unknown session {sid!r}")
        with slot.lock:
            slot.last_active = time.monotonic()
            if op == "close":
                with self._sessions_lock:
                    self.sessions.pop(sid, None)
                return self._ok(rid, {"closed": True})
            if op == "set_goal":
                goal = payload.get("goal")
                if not isinstance(goal, str):
                    return self._error(rid, "bad_payload", "set_goal needs a goal string")
                err = slot.session.set_goal(goal)
                if err is not None:
                    return self._ok(rid, self._outcome_payload(err, slot.session))
                return self._ok(
                    rid,
                    {"outcome": "advanced", "state": slot.session.serialized()},
                )
            if op == "state":
                return self._ok(rid, {"state": slot.session.serialized()})
            if op == "rollback":
                n = payload.get("n")
                if not isinstance(n, int) or n < 0:
                    return self._error(rid, "bad_payload", "rollback needs n >= 0")
                try:
                    slot.session.rollback(n)
                except EngineError as e:
                    return self._error(rid, "bad_payload", str(e))
                return self._ok(rid, {"state": slot.session.serialized()})
            if op == "execute":
                text = payload.get("text")
                if not isinstance(text, str):
                    return self._error(rid, "bad_payload", "execute needs statement text")
                return self._execute(rid, slot, text)
        return self._error(rid, "unknown_op", f"unhandled op {op}")

    def _slot(self, sid) -> _SessionSlot | None:
        if not isinstance(sid, str):
            return None
        with self._sessions_lock:
            return self.sessions.get(sid)

    def _execute(self, rid, slot: _SessionSlot, text: str) -> dict:
        session = slot.session
        try:
            stmts = parse_statements(text)
        except ParseError as e:
            return self._ok(
                rid,
                {
                    "outcome": "step_error",
                    "error_class": "syntax",
                    "detail": str(e),
                    "steps": 0,
                    "state": session.serialized() if session.states else "",
                },
            )
        if not stmts:
            return self._error(rid, "bad_payload", "no statements in text")

        box: dict = {}
        done = threading.Event()
        base_states = list(session.states)

        def work() -> None:
            # statements evaluate purely against the snapshot; the session
            # is only updated after a within-deadline finish
            outcomes = []
            st_list = list(base_states)
            try:
                if not st_list:
                    raise EngineError("no goal set")
                for stmt in stmts:
                    outcome = session.interp.step(st_list[-1], stmt)
                    outcomes.append(outcome)
                    match outcome:
                        case Advanced(state) | Completed(_, state):
                            st_list.append(state)
                        case _:
                            break
                box["outcomes"] = outcomes
                box["states"] = st_list
            except Exception as e:  # surfaced as an engine error
                box["error"] = str(e)
            finally:
                done.set()

        worker = threading.Thread(target=work, daemon=True)
        worker.start()
        if not done.wait(self.statement_timeout):
            return self._error(rid, "timeout", "statement timed out; state unchanged")
        if "error" in box:
            return self._error(rid, "engine", box["error"])
        session.states = box["states"]
        if len(session.states) > session.stack_limit:
            del session.states[1 : len(session.states) - session.stack_limit + 1]
        last = box["outcomes"][-1]
        result = self._outcome_payload(last, session)
        result["steps"] = len(box["outcomes"])
        return self._ok(rid, result)

    def _outcome_payload(self, outcome, session: Session) -> dict:
        match outcome:
            case Completed(_, _):
                return {
                    "outcome": "completed",
                    "state": session.serialized() if session.states else "",
                }
            case Advanced(_):
                return {"outcome": "advanced", "state": session.serialized()}
            case StepError(kind, detail):
                return {
                    "outcome": "step_error",
                    "error_class": kind,
                    "detail": detail,
                    "state": session.serialized() if session.states else "",
                }
        return {"outcome": "unknown"}

    @staticmethod
    def _ok(rid, result: dict) -> dict:
        return {"proto": PROTO_VERSION, "id": rid, "status": "ok", "result": result}

    @staticmethod
    def _error(rid, code: str, message: str) -> dict:
        return {
            "proto": PROTO_VERSION,
            "id": rid,
            "status": "error",
            "error": {"code": code, "message": message},
        }
