"""Oracle checks over a compiled program."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pipeline import Compiled
from .reduce import check_soundness
from .sim import (
    DelayElement,
    DelayModel,
    FifoOverflow,
    SimError,
    default_horizon,
    reference_interpret,
    run_array,
    run_delay,
    run_gc,
)


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str = ""
    counterexample: dict | None = None

    def line(self) -> str:
        s = f"{'PASS' if self.ok else 'FAIL'} {self.name}"
        if self.detail:
            s += f": {self.detail}"
        return s


def check_reduction(c: Compiled) -> CheckResult:
    bad = check_soundness(c.conditions, c.unified, c.binding)
    if bad is None:
        return CheckResult("reduction soundness", True, f"{len(c.conditions)} conditions")
    cid, pos = bad
    cond = c.conditions[cid]
    cex = {"tile": list(cond.tile), "fu": cond.fu, "position": pos,
           "iteration": list(c.resolution.box.point(pos)), "condition": cid}
    return CheckResult("reduction soundness", False,
                       f"condition {cid} wrong at tile {cond.tile} fu {cond.fu} position {pos}", cex)


def check_gc(c: Compiled) -> CheckResult:
    """Per-position signal value vs one-domain membership; accumulators vs a.j."""
    cfg = c.config
    box = cfg.box
    ii = cfg.ii
    tr = run_gc(cfg, box.size * ii)
    coords = box.coords
    # every cycle of position p's window shows p's iteration and signal value
    windows = tr.signals.reshape(box.size, ii, tr.signals.shape[1])
    if (windows != windows[:, :1, :]).any():
        return CheckResult("GC exactness", False, "signal changed inside an iteration window")
    if not (tr.iteration[:: ii] == coords).all():
        return CheckResult("GC exactness", False, "scanner order differs from odometer order")
    sig = windows[:, 0, :]
    for s, u in enumerate(c.unified):
        want = np.array([(u.one_mask >> p) & 1 for p in range(box.size)], dtype=np.uint8)
        # independent replay of the configured evaluators without accumulators
        direct = np.zeros(box.size, dtype=np.uint8)
        for conj in (cfg.conjunctions[k] for k in cfg.disjunctions[s]):
            hit = np.ones(box.size, dtype=bool)
            for e in conj:
                hit &= np.array([cfg.evaluators[e].holds(j) for j in coords])
            direct |= hit.astype(np.uint8)
        for got, label in ((sig[:, s], "simulated"), (direct, "configured")):
            diff = np.flatnonzero(got != want)
            if len(diff):
                p = int(diff[0])
                return CheckResult("GC exactness", False,
                                   f"{label} signal {s} wrong at position {p} {tuple(coords[p])}",
                                   {"signal": s, "position": p, "iteration": coords[p].tolist()})
    for col, k in enumerate(tr.affine):
        w = np.array(cfg.evaluators[k].weights, dtype=np.int64)
        want = coords @ w
        got = tr.acc[:: ii, col]
        diff = np.flatnonzero(got != want)
        if len(diff):
            p = int(diff[0])
            return CheckResult("GC exactness", False, f"accumulator of evaluator {k} wrong at position {p}",
                               {"evaluator": k, "position": p})
    return CheckResult("GC exactness", True, f"{len(c.unified)} signals x {box.size} positions")


def check_delay(c: Compiled, fifo_depth: int = 4096, horizon: int | None = None) -> CheckResult:
    p = c.program
    T = horizon or default_horizon(p, c.config)
    tr = run_gc(c.config, T)
    stream = np.column_stack([tr.run, tr.signals])
    for tile in p.tiles():
        L = p.pe_delay(tile)
        a = run_delay(DelayElement(DelayModel.SHIFT_REGISTER, L, stream.shape[1]), stream)
        try:
            b = run_delay(DelayElement(DelayModel.TIMESTAMP_FIFO, L, stream.shape[1], fifo_depth), stream)
        except FifoOverflow as e:
            return CheckResult("delay equivalence", False, f"tile {tile}: {e}")
        want = np.zeros_like(stream)
        want[L:] = stream[: len(stream) - L]
        for got, label in ((a, "shift register"), (b, "timestamp FIFO")):
            if not (got == want).all():
                t = int(np.flatnonzero((got != want).any(axis=1))[0])
                return CheckResult("delay equivalence", False, f"{label} of tile {tile} wrong at cycle {t}",
                                   {"tile": list(tile), "cycle": t})
    return CheckResult("delay equivalence", True, f"{len(p.tiles())} PEs")


def check_trace(c: Compiled, delay_model: DelayModel | str = DelayModel.SHIFT_REGISTER,
                fifo_depth: int = 4096, horizon: int | None = None) -> CheckResult:
    try:
        got = run_array(c.program, c.config, c.memories, delay_model, fifo_depth, horizon)
    except (SimError, FifoOverflow) as e:
        return CheckResult("end-to-end trace", False, str(e))
    want = reference_interpret(c.program)
    if got == want:
        return CheckResult("end-to-end trace", True, f"{len(want)} events")
    tile, fu, cycle, mine, ref = got.first_difference(want)
    p = c.program
    pos = (cycle - p.pe_delay(tile)) // p.ii
    return CheckResult(
        "end-to-end trace", False,
        f"tile {tile} fu {fu} cycle {cycle} (position {pos}): simulated {mine}, reference {ref}",
        {"tile": list(tile), "fu": fu, "position": pos, "cycle": cycle},
    )


def verify_all(c: Compiled, delay_model: DelayModel | str = DelayModel.SHIFT_REGISTER,
               fifo_depth: int = 4096, horizon: int | None = None) -> list[CheckResult]:
    return [
        check_reduction(c),
        check_gc(c),
        check_delay(c, fifo_depth, horizon),
        check_trace(c, delay_model, fifo_depth, horizon),
    ]
