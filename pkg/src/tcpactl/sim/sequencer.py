"""Control instruction assembly and the per-FU instruction sequencer."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..alloc import ControlGraph
from ..gcmap import GcConfig
from ..model import LoopProgram, compute_stats
from ..reduce import SignalBinding
from .delay import DelayElement, DelayModel, run_delay
from .gc import SimError, run_gc
from .trace import ExecTrace


@dataclass(frozen=True)
class ControlInstruction:
    bt0: int  # next PC when signal cs is 1
    bt1: int  # next PC when signal cs is 0
    cs: int
    wait: int


@dataclass(frozen=True)
class Instruction:
    op: str | None  # None: explicit no-op
    ctrl: ControlInstruction

    def to_json(self) -> list:
        c = self.ctrl
        return [self.op, c.bt0, c.bt1, c.cs, c.wait]

    @classmethod
    def from_json(cls, v) -> Instruction:
        return cls(v[0], ControlInstruction(*v[1:]))


Program = tuple[Instruction, ...]


@dataclass
class Memories:
    programs: list[Program]
    assignment: dict[tuple[tuple[int, int], int], int]  # ((row, col), fu) -> program
    iterations: int  # scan positions every PE executes before halting
    ii: int
    slots: int  # uncompressed slot count of the distinct programs

    @property
    def n_instrs(self) -> int:
        return sum(len(p) for p in self.programs)

    @property
    def n_waits(self) -> int:
        return sum(i.ctrl.wait for p in self.programs for i in p)

    @property
    def n_mem(self) -> int:
        return max((len(p) for p in self.programs), default=0)

    def stats(self) -> dict:
        return {"progs": len(self.programs), "instrs": self.n_instrs, "waits": self.n_waits,
                "mem": self.n_mem, "slots": self.slots}

    def to_json(self) -> dict:
        return {
            "iterations": self.iterations,
            "ii": self.ii,
            "slots": self.slots,
            "programs": [[i.to_json() for i in p] for p in self.programs],
            "assignment": [[r, c, fu, k] for ((r, c), fu), k in sorted(self.assignment.items())],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=None, separators=(",", ":"))

    @classmethod
    def from_json(cls, d: dict) -> Memories:
        programs = [tuple(Instruction.from_json(v) for v in p) for p in d["programs"]]
        assignment = {((r, c), fu): k for r, c, fu, k in d["assignment"]}
        return cls(programs, assignment, d["iterations"], d["ii"], d.get("slots", 0))


def lower_block(slots: tuple) -> list[tuple[str | None, int]]:
    """(op, wait) pairs; NOP runs fold into the preceding instruction's wait."""
    out = []
    k, n = 0, len(slots)
    while k < n and slots[k] is None:
        k += 1
    if k:
        out.append((None, k - 1))
    while k < n:
        op = slots[k]
        k += 1
        w = 0
        while k < n and slots[k] is None:
            w += 1
            k += 1
        out.append((op, w))
    return out


def assemble_graph(g: ControlGraph, blocks, binding: SignalBinding) -> Program:
    lowered = [lower_block(blocks[b].slots) for b in g.node_block]
    addr = []
    a = 0
    for instrs in lowered:
        addr.append(a)
        a += len(instrs)
    prog = []
    for node, instrs in enumerate(lowered):
        succ = g.successors(node)
        for k, (op, wait) in enumerate(instrs):
            here = addr[node] + k
            if k < len(instrs) - 1:
                ctrl = ControlInstruction(here + 1, here + 1, 0, wait)
            elif not succ:
                ctrl = ControlInstruction(addr[node], addr[node], 0, wait)
            elif len(succ) == 1:
                t = addr[succ[0].dst]
                ctrl = ControlInstruction(t, t, 0, wait)
            else:
                s, negative = binding[g.conditions[node].cid]
                first, second = addr[succ[0].dst], addr[succ[1].dst]
                # signal 1 selects the one-domain (second) successor unless inverted
                if negative:
                    ctrl = ControlInstruction(first, second, s, wait)
                else:
                    ctrl = ControlInstruction(second, first, s, wait)
            prog.append(Instruction(op, ctrl))
    return tuple(prog)


def assemble(graphs: list[ControlGraph], block_tables, binding: SignalBinding, ii: int, iterations: int) -> Memories:
    """Lower every (tile, FU) control graph; identical programs are stored once.

    ``block_tables`` maps (tile, fu) to the BlockTable the graph was built from.
    """
    programs: list[Program] = []
    index: dict[Program, int] = {}
    assignment = {}
    slots = 0
    for g in sorted(graphs, key=lambda g: (g.tile, g.fu)):
        prog = assemble_graph(g, block_tables[(g.tile, g.fu)].blocks, binding)
        if prog not in index:
            index[prog] = len(programs)
            programs.append(prog)
            slots += g.n_nodes * ii
        assignment[(g.tile, g.fu)] = index[prog]
    return Memories(programs, assignment, iterations, ii, slots)


def default_horizon(p: LoopProgram, cfg: GcConfig) -> int:
    return cfg.box.size * cfg.ii + p.max_delay + compute_stats(p).l_local


def run_array(
    p: LoopProgram,
    cfg: GcConfig,
    mem: Memories,
    delay_model: DelayModel | str = DelayModel.SHIFT_REGISTER,
    fifo_depth: int = 4096,
    horizon: int | None = None,
) -> ExecTrace:
    model = DelayModel(delay_model) if isinstance(delay_model, str) else delay_model
    T = horizon or default_horizon(p, cfg)
    gc = run_gc(cfg, T)
    stream = np.column_stack([gc.run, gc.signals]) if gc.signals.size else gc.run[:, None]
    trace = ExecTrace()
    span = mem.iterations * mem.ii
    for tile in p.tiles():
        delay = p.pe_delay(tile)
        delayed = run_delay(DelayElement(model, delay, stream.shape[1], fifo_depth), stream)
        started = np.flatnonzero(delayed[:, 0])
        if not len(started):
            raise SimError(f"PE {tile} never started within {T} cycles")
        start = int(started[0])
        sig = delayed[:, 1:]
        for (t_tile, fu), k in mem.assignment.items():
            if t_tile != tile:
                continue
            prog = mem.programs[k]
            t, pc = start, 0
            while t < start + span:
                if not 0 <= pc < len(prog):
                    raise SimError(f"PE {tile} FU {fu}: PC {pc} out of range at cycle {t}")
                ins = prog[pc]
                if ins.op is not None:
                    trace.add(tile, fu, t, ins.op)
                commit = t + ins.ctrl.wait
                if commit >= T:
                    raise SimError(f"horizon {T} too short for PE {tile}")
                c = ins.ctrl
                if c.bt0 == c.bt1:
                    pc = c.bt0
                else:
                    pc = c.bt0 if sig[commit, c.cs] else c.bt1
                t = commit + 1
    return trace
