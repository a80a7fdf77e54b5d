from __future__ import annotations

from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import D, extended_points
from tcpactl.alloc import (
    BlockTable,
    build_graph,
    build_graphs,
    extract_blocks,
    harvest_conditions,
    resolve_overlaps,
    split_outdegree,
)
from tcpactl.bench import KernelSpec, generate
from tcpactl.model import Equation, LoopProgram
from tcpactl.poly import ScanBox, mask


def prog(eqs, ii=1, grid=(1, 1), ext=(4, 4)):
    return LoopProgram(len(ext), ScanBox(ext), grid, tuple(eqs), ii)


def test_shift_and_retime():
    res = resolve_overlaps(prog([Equation("a", 0, "x", D("j0 >= 0"), 5)], ii=2))
    (se,) = res.shifted
    assert (se.shift, se.tau, res.epilog) == (2, 1, 2)


def test_no_shift_when_tau_below_ii():
    eqs = [Equation("a", 0, "x", D("j0 >= 2"), 0), Equation("b", 1, "y", D("j1 == 0"), 1)]
    shifted, epilog = resolve_overlaps(prog(eqs, ii=2))
    assert epilog == 0
    box = ScanBox((4, 4))
    for se, e in zip(shifted, eqs):
        assert se.shift == 0
        assert mask(se.domain, box) == mask(e.domain, box)


def test_gemm_epilog_nine():
    res = resolve_overlaps(generate(KernelSpec("gemm", 8)))
    assert res.epilog == 9
    assert res.box.size == 2 * 2 * 8 + 9


def test_whole_box_single_block():
    p = prog([Equation("a", 0, "x", D("j0 >= 0"))])
    (table,) = extract_blocks(resolve_overlaps(p), (0, 0), 1).values()
    assert len(table.blocks) == 1


def test_partial_domain_two_blocks():
    p = prog([Equation("a", 0, "x", D("j0 >= 2"))])
    (table,) = extract_blocks(resolve_overlaps(p), (0, 0), 1).values()
    assert {b.slots for b in table.blocks} == {("x",), (None,)}
    pts = extended_points(ScanBox((4, 4)))
    for pos, b in enumerate(table.pos_block):
        want = ("x",) if pts[pos][0] >= 2 else (None,)
        assert table.blocks[b].slots == want


def test_two_equations_blocks_by_enumeration():
    eqs = [Equation("a", 0, "x", D("j1 == 0"), 0), Equation("b", 0, "y", D("j1 >= 1"), 1)]
    p = prog(eqs, ii=2)
    (table,) = extract_blocks(resolve_overlaps(p), (0, 0), 2).values()
    seen = set()
    for pos, j in enumerate(extended_points(ScanBox((4, 4)))):
        want = ("x" if j[1] == 0 else None, "y" if j[1] >= 1 else None)
        assert table.blocks[table.pos_block[pos]].slots == want
        seen.add(want)
    assert len(table.blocks) == len(seen)


def test_single_block_graph():
    box = ScanBox((3, 3))
    g = build_graph(BlockTable(0, [None], [0] * box.size), (0, 0), box)
    assert g.n_nodes == 1
    assert [(e.src, e.dst) for e in g.edges] == [(0, 0)]
    assert not g.conditions


def test_alternating_blocks_graph():
    box = ScanBox((4, 4))
    pts = extended_points(box)
    labels = [0 if j[0] <= 1 else 1 for j in pts]
    g = build_graph(BlockTable(0, [None, None], labels), (0, 0), box)
    assert g.n_nodes == 2
    for u in range(2):
        assert len(g.successors(u)) == 2
    # per-position successor table
    for u, cond in g.conditions.items():
        first, second = (e.dst for e in g.successors(u))
        for p in range(box.size - 1):
            if g.pos_node[p] != u:
                continue
            nxt = g.pos_node[p + 1]
            assert cond.one.contains(pts[p]) == (nxt == second)
            assert cond.zero.contains(pts[p]) == (nxt == first)


def replay(g, box):
    """Walk the graph evaluating each node's condition domain at every position."""
    pts = extended_points(box)
    node = g.entry
    seq = [node]
    for p in range(box.size - 1):
        succ = g.successors(node)
        if len(succ) == 1:
            node = succ[0].dst
        else:
            cond = g.conditions[node]
            node = succ[1].dst if cond.one.contains(pts[p]) else succ[0].dst
        seq.append(node)
    return seq


def test_three_successors_are_split():
    box = ScanBox((12,))
    labels = [0, 1, 0, 2, 0, 3, 0, 1, 0, 2, 0, 3]
    g = build_graph(BlockTable(0, [None] * 4, labels), (0, 0), box)
    assert all(len(g.successors(u)) <= 2 for u in range(g.n_nodes))
    assert [g.node_block[n] for n in replay(g, box)] == labels


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 4), min_size=1, max_size=40))
def test_split_outdegree_replays(labels):
    out = split_outdegree(labels)
    succ = {}
    for a, b in zip(out, out[1:]):
        succ.setdefault(a, set()).add(b)
    assert all(len(s) <= 2 for s in succ.values())
    # every clone maps back to one original label
    back = {}
    for new, old in zip(out, labels):
        assert back.setdefault(new, old) == old


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_graph_replay_and_condition_partition(data):
    ext = tuple(data.draw(st.lists(st.integers(1, 4), min_size=1, max_size=3)))
    box = ScanBox(ext, data.draw(st.integers(0, 3)))
    k = data.draw(st.integers(1, 5))
    labels = data.draw(st.lists(st.integers(0, k - 1), min_size=box.size, max_size=box.size))
    g = build_graph(BlockTable(0, [None] * k, labels), (0, 0), box)
    assert [g.node_block[n] for n in replay(g, box)] == labels
    for u, c in g.conditions.items():
        assert c.zero_mask & c.one_mask == 0
        active = sum(1 << p for p in range(box.size - 1) if g.pos_node[p] == u)
        assert c.zero_mask | c.one_mask == active


def test_no_conditions_for_single_block_programs():
    p = prog([Equation("a", 0, "x", D("j0 >= 0")), Equation("b", 1, "y", D("j1 >= 0"))], grid=(2, 2))
    assert harvest_conditions(build_graphs(p, resolve_overlaps(p))) == []


def test_identical_tiles_multiply_condition_count():
    eqs = [Equation("a", 0, "x", D("j0 >= 2")), Equation("b", 1, "y", D("j0 - j1 >= 0"))]
    one = prog(eqs)
    many = prog(eqs, grid=(4, 4))
    n1 = len(harvest_conditions(build_graphs(one, resolve_overlaps(one))))
    n16 = len(harvest_conditions(build_graphs(many, resolve_overlaps(many))))
    assert n1 > 0 and n16 == 16 * n1


def test_shifted_slots_pairwise_disjoint():
    p = generate(KernelSpec("atax", 8))
    res = resolve_overlaps(p)
    for tile in p.tiles():
        by_slot = {}
        for se in res.shifted:
            by_slot.setdefault((se.eq.fu, se.tau), []).append(se.mask_for(tile))
        for masks in by_slot.values():
            acc = 0
            for m in masks:
                assert acc & m == 0
                acc |= m


def test_condition_provenance_numbering():
    eqs = [Equation("a", 0, "x", D("j0 >= 2")), Equation("b", 1, "y", D("j1 == 1"))]
    p = prog(eqs, grid=(1, 2))
    conds = harvest_conditions(build_graphs(p, resolve_overlaps(p)))
    assert [c.cid for c in conds] == list(range(len(conds)))
    keys = [c.provenance for c in conds]
    assert keys == sorted(keys)
