"""Overlap resolution, program blocks, control graphs and control conditions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations

from .model import Equation, LoopProgram, SlotConflictError, Tile
from .poly import (
    DomainUnion,
    ScanBox,
    Vocabulary,
    box_polyhedron,
    mask,
    scan_shift,
    synthesize,
)


@dataclass
class ShiftedEquation:
    eq: Equation
    shift: int
    tau: int  # start time within [0, II)
    domain: DomainUnion  # shifted default domain
    tile_domains: dict[Tile, DomainUnion] = field(default_factory=dict)
    tile_masks: dict[Tile, int] = field(default_factory=dict)

    def domain_for(self, tile: Tile) -> DomainUnion:
        return self.tile_domains.get(tile, self.domain)

    def mask_for(self, tile: Tile) -> int:
        return self.tile_masks[tile]


@dataclass
class Resolution:
    shifted: list[ShiftedEquation]
    epilog: int
    box: ScanBox
    vocab: Vocabulary

    def __iter__(self):
        # allows ``shifted, epilog = resolve_overlaps(p)``
        return iter((self.shifted, self.epilog))


def _clip(d: DomainUnion, box: ScanBox) -> DomainUnion:
    return d.intersect(DomainUnion(box.dim, (box_polyhedron(box),)))


def resolve_overlaps(p: LoopProgram) -> Resolution:
    """Shift every equation by floor(tau/II) scan positions and retime it into [0, II)."""
    epilog = p.epilog
    box = p.intra.with_epilog(epilog)
    vocab = Vocabulary(box)
    cache: dict[tuple[DomainUnion, int], DomainUnion] = {}

    def shifted(d: DomainUnion, m: int) -> DomainUnion:
        key = (d, m)
        if key not in cache:
            cache[key] = scan_shift(_clip(d, box), m, box)
            vocab.add_rows(cache[key].rows())
        return cache[key]

    out = []
    for e in p.equations:
        m = e.tau // p.ii
        se = ShiftedEquation(e, m, e.tau % p.ii, shifted(e.domain, m))
        for tile in p.tiles():
            dom = p.domain_for(e, tile)
            sd = shifted(dom, m)
            # predecessor images feed the vocabulary for branch guards
            shifted(dom, m - 1)
            if dom is not e.domain:
                se.tile_domains[tile] = sd
            se.tile_masks[tile] = mask(sd, box)
        out.append(se)
    _check_shifted_slots(out, p)
    return Resolution(out, epilog, box, vocab)


def _check_shifted_slots(shifted: list[ShiftedEquation], p: LoopProgram):
    groups: dict[tuple[int, int], list[ShiftedEquation]] = {}
    for se in shifted:
        groups.setdefault((se.eq.fu, se.tau), []).append(se)
    for (fu, slot), ses in groups.items():
        for a, b in combinations(ses, 2):
            for tile in p.tiles():
                if a.mask_for(tile) & b.mask_for(tile):
                    raise SlotConflictError(
                        f"FU {fu} slot {slot}: {a.eq.id!r} and {b.eq.id!r} overlap after shifting (tile {tile})"
                    )


# ---------------------------------------------------------------------------
# program blocks


@dataclass(frozen=True)
class ProgramBlock:
    id: int
    fu: int
    slots: tuple  # opcode tag or None (NOP) per slot

    @property
    def n_instructions(self) -> int:
        return sum(s is not None for s in self.slots)


@dataclass
class BlockTable:
    fu: int
    blocks: list[ProgramBlock]
    pos_block: list[int]  # block id for every extended scan position


def extract_blocks(res: Resolution, tile: Tile, ii: int) -> dict[int, BlockTable]:
    """Per FU: the slot vector at each extended position, identical vectors shared."""
    size = res.box.size
    by_fu: dict[int, list[ShiftedEquation]] = {}
    for se in res.shifted:
        by_fu.setdefault(se.eq.fu, []).append(se)
    out = {}
    for fu, ses in sorted(by_fu.items()):
        vectors = [[None] * ii for _ in range(size)]
        for se in ses:
            m = se.mask_for(tile)
            while m:
                low = m & -m
                pos = low.bit_length() - 1
                if vectors[pos][se.tau] is not None:
                    raise SlotConflictError(f"FU {fu} slot {se.tau} claimed twice at position {pos}")
                vectors[pos][se.tau] = se.eq.opcode
                m ^= low
        ids: dict[tuple, int] = {}
        blocks = []
        pos_block = []
        for v in vectors:
            v = tuple(v)
            if v not in ids:
                ids[v] = len(blocks)
                blocks.append(ProgramBlock(len(blocks), fu, v))
            pos_block.append(ids[v])
        out[fu] = BlockTable(fu, blocks, pos_block)
    return out


# ---------------------------------------------------------------------------
# control conditions and graphs


@dataclass(eq=False)
class ControlCondition:
    """Binary condition (zero domain, one domain) held as position bitsets."""

    zero_mask: int
    one_mask: int
    box: ScanBox
    tile: Tile | None = None
    fu: int | None = None
    node: int | None = None
    cid: int = -1
    negative: bool = False  # polarity bookkeeping
    vocab: Vocabulary | None = field(default=None, repr=False)

    @classmethod
    def from_domains(cls, zero: DomainUnion, one: DomainUnion, box: ScanBox, **kw) -> ControlCondition:
        return cls(mask(zero, box), mask(one, box), box, **kw)

    @cached_property
    def zero(self) -> DomainUnion:
        return synthesize(self.zero_mask, self.box, self.vocab)

    @cached_property
    def one(self) -> DomainUnion:
        return synthesize(self.one_mask, self.box, self.vocab)

    def inverse(self) -> ControlCondition:
        return ControlCondition(self.one_mask, self.zero_mask, self.box, self.tile, self.fu,
                                self.node, self.cid, not self.negative, self.vocab)

    @property
    def provenance(self):
        return (self.tile, self.fu, self.node)


@dataclass
class Edge:
    src: int
    dst: int
    guard_mask: int


@dataclass
class ControlGraph:
    fu: int
    tile: Tile
    node_block: list[int]  # node id -> ProgramBlock id
    edges: list[Edge]
    pos_node: list[int]  # node executed at every extended position
    conditions: dict[int, ControlCondition]
    box: ScanBox
    vocab: Vocabulary | None = None
    entry: int = 0

    def successors(self, node: int) -> list[Edge]:
        """Outgoing edges, first edge = the zero-domain branch."""
        return [e for e in self.edges if e.src == node]

    def guard(self, edge: Edge) -> DomainUnion:
        return synthesize(edge.guard_mask, self.box, self.vocab)

    @property
    def n_nodes(self) -> int:
        return len(self.node_block)


def _successor_table(labels: list[int]) -> dict[int, dict[int, int]]:
    succ: dict[int, dict[int, int]] = {}
    for p in range(len(labels) - 1):
        succ.setdefault(labels[p], {}).setdefault(labels[p + 1], p)
    return succ


def split_outdegree(labels: list[int]) -> list[int]:
    """Clone nodes until every node has at most two successors.

    A node with k > 2 successors (ordered by first guarded position) keeps the
    positions leading into the first ceil(k/2) of them; the rest go to a clone.
    Each pass strictly refines the position partition, so this terminates.
    """
    labels = list(labels)
    while True:
        succ = _successor_table(labels)
        bad = sorted(u for u, s in succ.items() if len(s) > 2)
        if not bad:
            return labels
        nxt = max(labels) + 1
        new = list(labels)
        for u in bad:
            order = sorted(succ[u], key=succ[u].get)
            first = set(order[: math.ceil(len(order) / 2)])
            for p in range(len(labels) - 1):
                if labels[p] == u and labels[p + 1] not in first:
                    new[p] = nxt
            nxt += 1
        labels = new


def build_graph(table: BlockTable, tile: Tile, box: ScanBox, vocab: Vocabulary | None = None) -> ControlGraph:
    labels = split_outdegree(table.pos_block)
    # renumber nodes by first appearance: the entry node becomes 0
    ren: dict[int, int] = {}
    node_block: list[int] = []
    for p, lab in enumerate(labels):
        if lab not in ren:
            ren[lab] = len(ren)
            node_block.append(table.pos_block[p])
    pos_node = [ren[lab] for lab in labels]
    guards: dict[tuple[int, int], int] = {}
    first: dict[tuple[int, int], int] = {}
    for p in range(len(pos_node) - 1):
        key = (pos_node[p], pos_node[p + 1])
        guards[key] = guards.get(key, 0) | (1 << p)
        first.setdefault(key, p)
    edges = [Edge(u, v, guards[(u, v)]) for (u, v) in sorted(guards, key=lambda k: (k[0], first[k]))]
    conditions = {}
    for u in range(len(node_block)):
        out = [e for e in edges if e.src == u]
        assert len(out) <= 2
        if len(out) == 2:
            conditions[u] = ControlCondition(
                out[0].guard_mask, out[1].guard_mask, box, tile=tile, fu=table.fu, node=u, vocab=vocab
            )
    return ControlGraph(table.fu, tile, node_block, edges, pos_node, conditions, box, vocab)


def build_graphs(p: LoopProgram, res: Resolution) -> list[ControlGraph]:
    graphs = []
    for tile in p.tiles():
        for fu, table in extract_blocks(res, tile, p.ii).items():
            graphs.append(build_graph(table, tile, res.box, res.vocab))
    return graphs


def harvest_conditions(graphs: list[ControlGraph]) -> list[ControlCondition]:
    """All branch conditions of all tiles and FUs, numbered in (tile, fu, node) order."""
    out = []
    for g in sorted(graphs, key=lambda g: (g.tile, g.fu)):
        for node in sorted(g.conditions):
            c = g.conditions[node]
            c.cid = len(out)
            out.append(c)
    return out
