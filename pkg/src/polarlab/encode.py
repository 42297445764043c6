"""Polar transform and the message-to-codeword pipeline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codes import CodeSpec, ConstructionError, attach_crc, pac_convolve


@dataclass(frozen=True)
class EncodedFrame:
    payload: np.ndarray
    v_seq: np.ndarray
    codeword: np.ndarray
    u_pre: np.ndarray | None = None  # PAC only


def polar_transform(v) -> np.ndarray:
    """Multiply by the n-fold Kronecker power of [[1,0],[1,1]] over GF(2).

    Operates on the last axis, accepts batched input, and is its own
    inverse. Implemented as an in-place butterfly, O(N log N).
    """
    out = np.array(v, dtype=np.int8)
    n = out.shape[-1]
    if n == 0 or n & (n - 1):
        raise ConstructionError(f"length must be a power of two, got {n}")
    h = 1
    while h < n:
        for start in range(0, n, 2 * h):
            out[..., start : start + h] ^= out[..., start + h : start + 2 * h]
        h *= 2
    return out


def encode(payload, spec: CodeSpec) -> EncodedFrame:
    """Map data bits to a codeword for any of the three code kinds."""
    payload = np.asarray(payload, dtype=np.int8)
    if payload.size != spec.payload_len:
        raise ConstructionError(
            f"payload length {payload.size} != expected {spec.payload_len}"
        )
    active = spec.active_idx0()
    if spec.kind == "crc_polar":
        occupied = attach_crc(payload, spec.crc_poly)
    else:
        occupied = payload

    if spec.kind == "pac":
        u = np.zeros(spec.n_block, dtype=np.int8)
        u[active] = occupied
        v, _ = pac_convolve(u, spec.pac_impulse)
        return EncodedFrame(payload, v, polar_transform(v), u_pre=u)

    v = np.zeros(spec.n_block, dtype=np.int8)
    if active.size:
        v[active] = occupied
    return EncodedFrame(payload, v, polar_transform(v))
