"""Direct interpreter of a scheduled loop program, ignoring all control machinery."""
from __future__ import annotations

from itertools import product

from ..model import LoopProgram
from .trace import ExecTrace


def reference_interpret(p: LoopProgram) -> ExecTrace:
    ext = p.intra.extents
    # scan position of every original iteration, j_0 fastest
    points = []
    for rev in product(*(range(n) for n in reversed(ext))):
        points.append(tuple(reversed(rev)))
    trace = ExecTrace()
    for tile in p.tiles():
        delay = p.pe_delay(tile)
        for e in p.equations:
            dom = p.domain_for(e, tile)
            shift, slot = divmod(e.tau, p.ii)
            for pos, j in enumerate(points):
                if dom.contains(j):
                    trace.add(tile, e.fu, delay + (pos + shift) * p.ii + slot, e.opcode)
    return trace
