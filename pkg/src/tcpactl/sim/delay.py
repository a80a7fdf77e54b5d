"""Per-PE control signal delay elements.

Both models delay a (cycles, width) 0/1 stream by exactly ``latency`` cycles
with an all-zero initial output. The timestamp FIFO stores only the cycle of
every signal transition, one queue per signal.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class DelayModel(Enum):
    SHIFT_REGISTER = "shift"
    TIMESTAMP_FIFO = "fifo"


class FifoOverflow(RuntimeError):
    pass


@dataclass(frozen=True)
class DelayElement:
    model: DelayModel
    latency: int
    width: int = 1
    depth: int = 4096  # FIFO entries per signal


def _shift_register(latency: int, x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    regs = np.zeros((latency, x.shape[1]), dtype=x.dtype)
    ptr = 0
    for t in range(len(x)):
        out[t] = regs[ptr]
        regs[ptr] = x[t]
        ptr += 1
        if ptr == latency:
            ptr = 0
    return out


def _timestamp_fifo(latency: int, depth: int, x: np.ndarray) -> np.ndarray:
    T, W = x.shape
    out = np.zeros_like(x)
    stamps = np.zeros((W, depth), dtype=np.int64)
    head = np.zeros(W, dtype=np.int64)
    count = np.zeros(W, dtype=np.int64)
    last_in = np.zeros(W, dtype=x.dtype)
    state = np.zeros(W, dtype=x.dtype)
    lanes = np.arange(W)
    for t in range(T):
        due = (count > 0) & (stamps[lanes, head] == t - latency)
        if due.any():
            state ^= due.astype(x.dtype)
            head = np.where(due, (head + 1) % depth, head)
            count -= due
        out[t] = state
        trans = x[t] != last_in
        if trans.any():
            if (count[trans] >= depth).any():
                lane = int(np.flatnonzero(trans & (count >= depth))[0])
                raise FifoOverflow(
                    f"timestamp FIFO of signal {lane} overflowed at cycle {t} (depth {depth})"
                )
            tail = (head + count) % depth
            stamps[lanes[trans], tail[trans]] = t
            count += trans
            last_in = x[t].copy()
    return out


def run_delay(e: DelayElement, stream) -> np.ndarray:
    if e.latency < 0:
        raise ValueError("latency must be >= 0")
    x = np.asarray(stream, dtype=np.uint8)
    flat = x.ndim == 1
    if flat:
        x = x[:, None]
    if e.latency == 0:
        out = x.copy()
    elif e.model is DelayModel.SHIFT_REGISTER:
        out = _shift_register(e.latency, x)
    else:
        out = _timestamp_fifo(e.latency, e.depth, x)
    return out[:, 0] if flat else out
