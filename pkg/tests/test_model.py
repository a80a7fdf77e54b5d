from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import D
from tcpactl.bench import KernelSpec, generate
from tcpactl.model import (
    Equation,
    LoopProgram,
    ModelError,
    SlotConflictError,
    compute_stats,
    dump_program,
    helper_schedule,
    parse_program,
    program_to_dict,
)
from tcpactl.poly import DomainUnion, Polyhedron, ScanBox


def doc(**over):
    d = {
        "dims": 2,
        "intra_extents": [4, 4],
        "pe_grid": [1, 1],
        "ii": 1,
        "lambda_inter": [0, 0],
        "equations": [
            {"id": "s", "fu": 0, "opcode": "add", "tau": 0, "latency": 3,
             "domain": [{"rows": [{"a": [1, 0], "b": 0}]}]},
        ],
    }
    d.update(over)
    return json.dumps(d)


def prog(eqs, ii=1, grid=(1, 1), ext=(4, 4), lam=(0, 0)):
    return LoopProgram(len(ext), ScanBox(ext), grid, tuple(eqs), ii, lam)


def test_minimal_program_local_latency():
    p = parse_program(doc())
    assert p.ii == 1 and len(p.equations) == 1
    assert compute_stats(p).l_local == 3


def test_gemm_file_parses_with_unit_ii():
    text = dump_program(generate(KernelSpec("gemm", 8)))
    p = parse_program(text)
    assert p.ii == 1


def test_slot_conflict_after_shifting():
    eqs = [Equation("a", 0, "x", D("j0 >= 0"), 0), Equation("b", 0, "y", D("j0 >= 1"), 2)]
    with pytest.raises(SlotConflictError):
        parse_program(json.dumps(program_to_dict(prog(eqs, ii=2))))


def test_disjoint_after_shifting_is_fine():
    # b's domain shifted by one position lands exactly on a's gaps
    eqs = [Equation("a", 0, "x", D("j0 == 0"), 0), Equation("b", 0, "y", D("j0 == 0"), 2)]
    parse_program(json.dumps(program_to_dict(prog(eqs, ii=2))))


@pytest.mark.parametrize("bad, msg", [
    (doc(ii=0), "II"),
    (doc(extra=1), "unknown"),
    ('{"dims": 2,', "line"),
    (doc(intra_extents=[4]), "intra_extents"),
    (doc(lambda_inter=[-1, 0]), "lambda_inter"),
    (doc(tile_overrides={"3,3": {"s": []}}), "outside"),
    (doc(tile_overrides={"0,0": {"zz": []}}), "unknown equation"),
])
def test_parse_errors(bad, msg):
    with pytest.raises(ModelError, match=msg):
        parse_program(bad)


def test_unknown_equation_field_rejected():
    d = json.loads(doc())
    d["equations"][0]["color"] = "red"
    with pytest.raises(ModelError, match="unknown"):
        parse_program(json.dumps(d))


def test_stats_single_equation():
    p = prog([Equation("a", 0, "x", D("j0 >= 0"), 0, 1)])
    st_ = compute_stats(p)
    assert (st_.l_local, st_.overlap_depth) == (1, 1)


def test_gemm_overlap_depth_ten():
    st_ = compute_stats(generate(KernelSpec("gemm", 8)))
    assert st_.l_local == 10 and st_.overlap_depth == 10


def test_lu_no_pipelining():
    p = generate(KernelSpec("lu", 8))
    st_ = compute_stats(p)
    assert st_.l_local == 29 and p.ii == 29 and st_.overlap_depth == 1


def test_helper_one_equation():
    p = helper_schedule(prog([Equation("a", 0, "x", D("j0 >= 0"), 5)]))
    assert p.equations[0].tau == 0


def test_helper_two_on_same_fu():
    eqs = [Equation("a", 0, "x", D("j0 >= 0")), Equation("b", 0, "y", D("j0 >= 0"))]
    p = helper_schedule(prog(eqs, ii=2))
    assert [e.tau for e in p.equations] == [0, 1]


def test_helper_infeasible():
    eqs = [Equation(k, 0, k, D("j0 >= 0")) for k in "abc"]
    with pytest.raises(ModelError, match="infeasible"):
        helper_schedule(prog(eqs, ii=2))


@st.composite
def programs(draw):
    n = draw(st.integers(1, 3))
    ext = tuple(draw(st.integers(1, 4)) for _ in range(n))
    ii = draw(st.integers(1, 3))
    eqs = []
    for k in range(draw(st.integers(0, 4))):
        rows = tuple(
            (tuple(draw(st.integers(-1, 1)) for _ in range(n)), draw(st.integers(-2, 2)))
            for _ in range(draw(st.integers(0, 2)))
        )
        eqs.append(Equation(f"e{k}", draw(st.integers(0, 3)), f"op{k}",
                            DomainUnion(n, (Polyhedron(n, rows),)), 0, draw(st.integers(1, 4))))
    grid = (draw(st.integers(1, 3)), draw(st.integers(1, 3)))
    return LoopProgram(n, ScanBox(ext), grid, tuple(eqs), ii, (draw(st.integers(0, 5)), 1))


@settings(max_examples=60, deadline=None)
@given(programs())
def test_round_trip_and_helper(p):
    try:
        q = helper_schedule(p)
    except ModelError:
        return
    assert parse_program(dump_program(q)) == q
    stats = compute_stats(q)
    if q.equations:
        assert stats.l_local == max(e.tau + e.latency for e in q.equations) - min(e.tau for e in q.equations)
