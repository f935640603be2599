"""Thin synchronous client for the MiniLang REPL wire protocol.

Transport only: the client serializes requests, correlates replies, and
parses serialized proof states into plain data. It never interprets
proof statements. One session object must not be shared across threads;
open several sessions for concurrency.
"""

from __future__ import annotations

import json
import socket
from dataclasses import dataclass, field
from importlib import resources

PROTO_VERSION = 1


class ClientError(Exception):
    """Base class for everything this client raises."""


class TransportError(ClientError):
    """The connection failed or was closed mid-reply."""


class ProtocolError(ClientError):
    """The server speaks a different protocol version or shape."""


class ClosedSessionError(ClientError):
    """Operation on a session after close()."""


@dataclass(frozen=True)
class ServerError(ClientError):
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


@dataclass(frozen=True)
class Outcome:
    """Result record of set_goal/execute."""

    kind: str  # "advanced" | "completed" | "step_error"
    error_class: str | None
    detail: str
    state_text: str
    steps: int

    @property
    def completed(self) -> bool:
        return self.kind == "completed"


@dataclass(frozen=True)
class StateLeaf:
    variables: tuple[tuple[str, str], ...]
    hypotheses: tuple[tuple[str, str], ...]
    goal: str


@dataclass(frozen=True)
class StateNode:
    variables: tuple[tuple[str, str], ...]
    hypotheses: tuple[tuple[str, str], ...]
    children: tuple["StateTree", ...]


StateTree = StateLeaf | StateNode


@dataclass(frozen=True)
class ProofStateView:
    version: int
    theory: str
    completed_goal: str | None
    tree: StateTree | None

    def open_leaves(self) -> list[StateLeaf]:
        out: list[StateLeaf] = []

        def walk(t: StateTree) -> None:
            if isinstance(t, StateLeaf):
                out.append(t)
            else:
                for c in t.children:
                    walk(c)

        if self.tree is not None:
            walk(self.tree)
        return out


def protocol_schema() -> dict:
    """The vendored machine-readable protocol schema (proto 1)."""
    text = resources.files("minilang_client").joinpath("protocol_schema.json").read_text()
    return json.loads(text)


class MiniLangClient:
    """One TCP connection; may host several sequential sessions."""

    def __init__(self, address: tuple[str, int], timeout: float = 60.0) -> None:
        try:
            self._sock = socket.create_connection(address, timeout=timeout)
        except OSError as e:
            raise TransportError(f"cannot connect to {address}: {e}") from e
        self._buf = b""
        self._next_id = 0
        self._closed = False

    # -- request plumbing ------------------------------------------------

    def request(self, op: str, session: str | None = None, payload: dict | None = None) -> dict:
        if self._closed:
            raise ClosedSessionError("connection already closed")
        self._next_id += 1
        req: dict = {"proto": PROTO_VERSION, "id": self._next_id, "op": op}
        if session is not None:
            req["session"] = session
        if payload is not None:
            req["payload"] = payload
        line = json.dumps(req) + "\n"
        try:
            self._sock.sendall(line.encode("utf-8"))
            while b"\n" not in self._buf:
                chunk = self._sock.recv(65536)
                if not chunk:
                    raise TransportError("server closed the connection")
                self._buf += chunk
        except OSError as e:
            raise TransportError(str(e)) from e
        raw, self._buf = self._buf.split(b"\n", 1)
        reply = json.loads(raw)
        if reply.get("proto") != PROTO_VERSION:
            raise ProtocolError(f"server answered proto {reply.get('proto')!r}")
        if reply.get("id") != self._next_id:
            raise ProtocolError("correlation id mismatch")
        if reply.get("status") == "error":
            err = reply.get("error", {})
            raise ServerError(err.get("code", "unknown"), err.get("message", ""))
        if reply.get("status") != "ok":
            raise ProtocolError(f"malformed reply: {reply!r}")
        return reply.get("result", {})

    def ping(self) -> bool:
        return bool(self.request("ping").get("pong"))

    def reset_db(self, token: str) -> bool:
        return bool(self.request("reset_db", payload={"token": token}).get("reset"))

    def open_session(self, theory: str) -> "ClientSession":
        result = self.request("new_session", payload={"theory": theory})
        return ClientSession(self, result["session"], theory)

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            try:
                self._sock.close()
            except OSError:
                pass


def connect(address: tuple[str, int], theory: str | None = None, timeout: float = 60.0):
    """Open a connection; with a theory, return a ready session."""
    client = MiniLangClient(address, timeout)
    if theory is None:
        return client
    return client.open_session(theory)


class ClientSession:
    """One proof session; calls are synchronous request/response pairs."""

    def __init__(self, client: MiniLangClient, session_id: str, theory: str) -> None:
        self.client = client
        self.session_id = session_id
        self.theory = theory
        self._open = True

    def _check_open(self) -> None:
        if not self._open:
            raise ClosedSessionError(f"session {self.session_id} is closed")

    def _outcome(self, result: dict) -> Outcome:
        return Outcome(
            kind=result.get("outcome", "advanced"),
            error_class=result.get("error_class"),
            detail=result.get("detail", ""),
            state_text=result.get("state", ""),
            steps=int(result.get("steps", 0)),
        )

    def set_goal(self, goal_text: str) -> Outcome:
        self._check_open()
        result = self.client.request(
            "set_goal", session=self.session_id, payload={"goal": goal_text}
        )
        return self._outcome(result)

    def execute(self, statement_text: str) -> Outcome:
        """Send one or more complete statements for execution."""
        self._check_open()
        result = self.client.request(
            "execute", session=self.session_id, payload={"text": statement_text}
        )
        return self._outcome(result)

    def state_text(self) -> str:
        self._check_open()
        return self.client.request("state", session=self.session_id)["state"]

    def get_state(self) -> ProofStateView:
        return parse_state(self.state_text())

    def rollback(self, n: int) -> str:
        self._check_open()
        result = self.client.request(
            "rollback", session=self.session_id, payload={"n": n}
        )
        return result["state"]

    def close(self) -> None:
        if self._open:
            self._open = False
            self.client.request("close", session=self.session_id)


# -- proof-state text parsing (format v1) --------------------------------------


def _parse_context(block: str) -> tuple[tuple, tuple]:
    vars_part, _, hyps_part = block.partition("|")
    variables = []
    for piece in vars_part.split(","):
        piece = piece.strip()
        if piece:
            name, _, sort = piece.partition(":")
            variables.append((name.strip(), sort.strip()))
    hypotheses = []
    for piece in _split_hyps(hyps_part):
        name, _, prop = piece.partition(":")
        hypotheses.append((name.strip(), prop.strip().strip('"')))
    return tuple(variables), tuple(hypotheses)


def _split_hyps(text: str) -> list[str]:
    out, cur, in_str = [], [], False
    for ch in text:
        if ch == '"':
            in_str = not in_str
        if ch == "," and not in_str:
            piece = "".join(cur).strip()
            if piece:
                out.append(piece)
            cur = []
        else:
            cur.append(ch)
    piece = "".join(cur).strip()
    if piece:
        out.append(piece)
    return out


def parse_state(text: str) -> ProofStateView:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ProtocolError("empty state text")
    header = lines[0].split()
    if not header or not header[0] == "proofstate":
        raise ProtocolError(f"bad state header: {lines[0]!r}")
    version = int(header[1].lstrip("v"))
    theory = ""
    for part in header[2:]:
        if part.startswith("theory="):
            theory = part.split("=", 1)[1]
    if len(lines) > 1 and lines[1].startswith("completed"):
        goal = lines[1].split(" ", 1)[1].strip().strip('"')
        return ProofStateView(version, theory, goal, None)

    entries = []
    for ln in lines[1:]:
        indent = (len(ln) - len(ln.lstrip())) // 2
        entries.append((indent, ln.strip()))

    def build(i: int, depth: int):
        indent, line = entries[i]
        assert indent == depth, (indent, depth, line)
        if line.startswith("leaf "):
            body = line[len("leaf "):]
            ctx_part, _, goal_part = body.partition("|-")
            variables, hypotheses = _parse_context(ctx_part.strip().strip("[]"))
            return StateLeaf(variables, hypotheses, goal_part.strip().strip('"')), i + 1
        assert line.startswith("node ")
        variables, hypotheses = _parse_context(line[len("node "):].strip().strip("[]"))
        children = []
        j = i + 1
        while j < len(entries) and entries[j][0] == depth + 1:
            child, j = build(j, depth + 1)
            children.append(child)
        return StateNode(variables, hypotheses, tuple(children)), j

    tree, _ = build(0, 0)
    return ProofStateView(version, theory, None, tree)
