"""End-to-end compile flow: program -> blocks -> conditions -> GC config + memories."""
from __future__ import annotations

import time
from dataclasses import dataclass

from .alloc import BlockTable, ControlCondition, ControlGraph, Resolution, build_graph, extract_blocks, harvest_conditions, resolve_overlaps
from .gcmap import GcConfig, allocate
from .model import LoopProgram, compute_stats, validate
from .reduce import ReductionReport, SignalBinding, prime_filter, unify_greedy
from .sim.sequencer import Memories, assemble

REPORT_COLUMNS = (
    "II", "L_local", "max_delay", "PBs", "C", "C_prime", "C_unified", "Progs", "Instrs",
    "Waits", "Mem", "Lows", "Ups", "Afs", "Conjs", "Disjs",
)


@dataclass
class Compiled:
    program: LoopProgram
    resolution: Resolution
    graphs: list[ControlGraph]
    tables: dict[tuple, BlockTable]  # (tile, fu) -> blocks
    conditions: list[ControlCondition]
    primes: list[ControlCondition]
    unified: list[ControlCondition]
    binding: SignalBinding
    reduction: ReductionReport
    config: GcConfig
    memories: Memories
    seconds: float

    def report(self, name: str = "") -> dict:
        p = self.program
        pbs = {(t.fu, b.slots) for t in self.tables.values() for b in t.blocks}
        row = {
            "name": name,
            "II": p.ii,
            "L_local": compute_stats(p).l_local,
            "max_delay": p.max_delay,
            "PBs": len(pbs),
            "C": self.reduction.n_conditions,
            "C_prime": self.reduction.n_prime,
            "C_unified": self.reduction.n_unified,
            "Progs": len(self.memories.programs),
            "Instrs": self.memories.n_instrs,
            "Waits": self.memories.n_waits,
            "Mem": self.memories.n_mem,
        }
        counts = self.config.counts()
        row.update(Lows=counts["lows"], Ups=counts["ups"], Afs=counts["afs"],
                   Conjs=counts["conjs"], Disjs=counts["disjs"])
        r = self.reduction
        row.update(factor_prime=round(r.factor_prime, 3), factor_unified=round(r.factor_unified, 3),
                   factor_total=round(r.factor_total, 3), slots=self.memories.slots,
                   tries=r.tries, best_try=r.best_try)
        # evaluator and conjunction counts without sharing, for comparison
        row.update({f"{k}_unshared": v for k, v in sorted(self.config.unshared.items())})
        return row


def compile_program(
    p: LoopProgram,
    tries: int = 100,
    seed: int = 0,
    capacities: dict[str, int] | None = None,
    binding_override=None,
) -> Compiled:
    """Run the whole flow. ``binding_override(binding) -> binding`` injects faults."""
    t0 = time.perf_counter()
    validate(p)
    res = resolve_overlaps(p)
    graphs, tables = [], {}
    for tile in p.tiles():
        for fu, table in extract_blocks(res, tile, p.ii).items():
            tables[(tile, fu)] = table
            graphs.append(build_graph(table, tile, res.box, res.vocab))
    conds = harvest_conditions(graphs)
    primes, pbind = prime_filter(conds)
    unified, binding, red = unify_greedy(primes, tries, seed, pbind)
    if binding_override is not None:
        binding = binding_override(binding)
    cfg = allocate(unified, res.box, p.ii, capacities, res.vocab)
    mem = assemble(graphs, tables, binding, p.ii, res.box.size)
    return Compiled(p, res, graphs, tables, conds, primes, unified, binding, red, cfg, mem,
                    time.perf_counter() - t0)


def format_table(rows: list[dict]) -> str:
    cols = ("name",) + REPORT_COLUMNS + ("factor_total",)
    cells = [[str(c) for c in cols]] + [[str(r.get(c, "")) for c in cols] for r in rows]
    widths = [max(len(line[k]) for line in cells) for k in range(len(cols))]
    out = []
    for line in cells:
        out.append("  ".join(v.rjust(w) if k else v.ljust(w) for k, (v, w) in enumerate(zip(line, widths))).rstrip())
    return "\n".join(out) + "\n"
