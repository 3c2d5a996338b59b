"""Application-layer encrypted tunnel over HTTP."""

from ._apptunnel import (
    Client,
    Response,
    Server,
    TunnelError,
    error_name,
    exit_code,
    keygen,
    open,
    seal,
    sha256,
    srp_verifier,
    x25519,
    x25519_public,
)

__all__ = [
    "Client",
    "Response",
    "Server",
    "TunnelError",
    "error_name",
    "exit_code",
    "keygen",
    "open",
    "seal",
    "sha256",
    "srp_verifier",
    "x25519",
    "x25519_public",
]
