"""REPL service: protocol, sessions, rollback, timeout safety, isolation."""

import json
import socket

import pytest

from minilang.replsrv import ReplServer


@pytest.fixture()
def server(engine):
    srv = ReplServer(("127.0.0.1", 0), engine=engine, admin_token="tok",
                     statement_timeout=3.0)
    srv.start_background()
    yield srv
    srv.shutdown()


class Client:
    def __init__(self, addr):
        self.sock = socket.create_connection(addr)
        self.buf = b""
        self.n = 0

    def rpc(self, op, session=None, payload=None, proto=1):
        self.n += 1
        req = {"proto": proto, "id": self.n, "op": op}
        if session:
            req["session"] = session
        if payload is not None:
            req["payload"] = payload
        self.sock.sendall((json.dumps(req) + "\n").encode())
        while b"\n" not in self.buf:
            chunk = self.sock.recv(65536)
            if not chunk:
                raise ConnectionError("server closed")
            self.buf += chunk
        line, self.buf = self.buf.split(b"\n", 1)
        reply = json.loads(line)
        assert reply.get("id") == self.n
        return reply

    def close(self):
        self.sock.close()


@pytest.fixture()
def client(server):
    c = Client(server.address)
    yield c
    c.close()


def open_session(c, theory="prop_demo", goal="q"):
    r = c.rpc("new_session", payload={"theory": theory})
    sid = r["result"]["session"]
    r = c.rpc("set_goal", session=sid, payload={"goal": goal})
    assert r["status"] == "ok"
    return sid


def test_ping(client):
    r = client.rpc("ping")
    assert r["result"]["pong"] is True


def chunk_script_lines(text):
    """Group source lines into complete statement chunks."""
    from minilang.syntax.script import ParseError, parse_statements

    lines = [
        ln for ln in text.splitlines()
        if ln.strip() and not ln.strip().startswith("--")
    ]
    header, rest = lines[0], lines[1:]
    chunks = []
    buf = ""
    for ln in rest:
        buf = (buf + "\n" + ln) if buf else ln
        try:
            parse_statements(buf)
        except ParseError:
            continue
        chunks.append(buf)
        buf = ""
    assert not buf, f"incomplete trailing chunk: {buf!r}"
    return header, chunks


def test_full_golden_script_over_the_wire(client):
    text = open("src/minilang/corpus/golden/sqrt2.mini").read()
    header, chunks = chunk_script_lines(text)
    assert header.startswith("theorem")
    goal = header.split(":", 1)[1].strip().strip('"')
    r = client.rpc("new_session", payload={"theory": "sqrt2_axioms"})
    sid = r["result"]["session"]
    r = client.rpc("set_goal", session=sid, payload={"goal": goal})
    assert r["status"] == "ok"
    outcome = None
    for chunk in chunks:
        r = client.rpc("execute", session=sid, payload={"text": chunk})
        assert r["status"] == "ok", r
        outcome = r["result"]["outcome"]
        assert outcome != "step_error", r
    assert outcome == "completed"
    # execute after completion reports the inapplicable step
    r = client.rpc("execute", session=sid, payload={"text": "END"})
    assert r["result"]["outcome"] == "step_error"
    assert r["result"]["error_class"] == "op-inapplicable"


def test_rollback_restores_bitexact_state(client):
    sid = open_session(client)
    states = []
    for text in ['HAVE a: "p" END WITH p_holds', 'HAVE b: "True"', "END"]:
        r = client.rpc("execute", session=sid, payload={"text": text})
        states.append(r["result"]["state"])
    r = client.rpc("state", session=sid)
    assert r["result"]["state"] == states[-1]
    # each line above ran 1+ statements; roll back the last 3 statements
    r = client.rpc("rollback", session=sid, payload={"n": 3})
    # after HAVE a + its END: back to the single original goal with a in context
    assert 'a: "p"' in r["result"]["state"]
    r0 = client.rpc("rollback", session=sid, payload={"n": 0})
    assert r0["result"]["state"] == r["result"]["state"]  # no-op


def test_rollback_past_goal_is_error(client):
    sid = open_session(client)
    r = client.rpc("rollback", session=sid, payload={"n": 99})
    assert r["status"] == "error" and r["error"]["code"] == "bad_payload"


def test_timeout_leaves_state_unchanged(engine):
    # a dedicated server with a statement budget far below the hammer's
    srv = ReplServer(("127.0.0.1", 0), engine=engine, statement_timeout=0.3)
    srv.start_background()
    try:
        c = Client(srv.address)
        sid = open_session(c, theory="arith", goal="even(20 * 20)")
        c.rpc("execute", session=sid, payload={"text": 'CONFIG simp_steps = "100000"'})
        before = c.rpc("state", session=sid)["result"]["state"]
        # a ~2s rewrite against a 0.3s statement budget
        r = c.rpc("execute", session=sid, payload={"text": "SIMPLIFY"})
        assert r["status"] == "error" and r["error"]["code"] == "timeout"
        after = c.rpc("state", session=sid)["result"]["state"]
        assert after == before
        c.close()
    finally:
        srv.shutdown()


def test_malformed_line_keeps_connection(client):
    client.sock.sendall(b"this is not json\n")
    buf = b""
    while b"\n" not in buf:
        buf += client.sock.recv(65536)
    line, client.buf = buf.split(b"\n", 1)
    r = json.loads(line)
    assert r["status"] == "error" and r["error"]["code"] == "parse"
    assert client.rpc("ping")["status"] == "ok"


def test_unknown_session(client):
    r = client.rpc("state", session="nope")
    assert r["error"]["code"] == "unknown_session"


def test_admin_reset(client):
    r = client.rpc("reset_db", payload={"token": "tok"})
    assert r["status"] == "ok"
    r = client.rpc("reset_db", payload={"token": "wrong"})
    assert r["error"]["code"] == "unauthorized"


def test_crash_containment_between_sessions(client):
    sid1 = open_session(client, goal="q")
    sid2 = open_session(client, goal="r")
    state2 = client.rpc("state", session=sid2)["result"]["state"]
    r = client.rpc("execute", session=sid1, payload={"text": "CHOOSE \"p\""})
    assert r["result"]["outcome"] == "step_error"
    assert client.rpc("state", session=sid2)["result"]["state"] == state2


def test_wire_protocol_matches_schema(client):
    import jsonschema

    schema = json.load(open("src/minilang/protocol_schema.json"))
    reply = client.rpc("ping")
    jsonschema.validate(reply, schema)
    sid = open_session(client)
    reply = client.rpc("execute", session=sid, payload={"text": "END WITH p_holds pq"})
    jsonschema.validate(reply, schema)
