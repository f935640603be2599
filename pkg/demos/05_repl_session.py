"""Driving the socket REPL directly over TCP (JSON lines).

Run as: python demos/05_repl_session.py
"""

import json
import socket

from minilang.replsrv import ReplServer

server = ReplServer(("127.0.0.1", 0))
server.start_background()
sock = socket.create_connection(server.address)
buf = b""
counter = 0


def rpc(op, session=None, payload=None):
    global buf, counter
    counter += 1
    req = {"proto": 1, "id": counter, "op": op}
    if session:
        req["session"] = session
    if payload:
        req["payload"] = payload
    print(">>>", json.dumps(req))
    sock.sendall((json.dumps(req) + "\n").encode())
    while b"\n" not in buf:
        buf += sock.recv(65536)
    line, buf = buf.split(b"\n", 1)
    reply = json.loads(line)
    print("<<<", json.dumps(reply)[:120], "...\n")
    return reply


rpc("ping")
sid = rpc("new_session", payload={"theory": "prop_demo"})["result"]["session"]
rpc("set_goal", session=sid, payload={"goal": "r"})
rpc("execute", session=sid, payload={"text": 'HAVE a: "q" END WITH pq p_holds'})
print(rpc("state", session=sid)["result"]["state"])
rpc("rollback", session=sid, payload={"n": 2})
reply = rpc("execute", session=sid, payload={"text": "END WITH qr pq p_holds"})
print("final outcome:", reply["result"]["outcome"])
rpc("close", session=sid)
sock.close()
server.shutdown()
