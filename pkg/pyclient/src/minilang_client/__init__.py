"""Thin client for the MiniLang REPL wire protocol (proto 1)."""

from .client import (
    ClientError,
    ClientSession,
    ClosedSessionError,
    MiniLangClient,
    Outcome,
    ProofStateView,
    ProtocolError,
    ServerError,
    StateLeaf,
    StateNode,
    TransportError,
    connect,
    parse_state,
    protocol_schema,
)

PROTO_VERSION = 1

__all__ = [
    "PROTO_VERSION", "ClientError", "ClientSession", "ClosedSessionError",
    "MiniLangClient", "Outcome", "ProofStateView", "ProtocolError",
    "ServerError", "StateLeaf", "StateNode", "TransportError", "connect",
    "parse_state", "protocol_schema",
]
