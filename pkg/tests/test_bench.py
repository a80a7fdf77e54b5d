from __future__ import annotations

import pytest

from tcpactl.bench import KERNELS, KernelSpec, generate
from tcpactl.gcmap import EvalKind
from tcpactl.model import ModelError, dump_program, parse_program, validate
from tcpactl.pipeline import compile_program
from tcpactl.poly import LiteralKind, classify_literals
from tcpactl.verify import verify_all

AFFINE_KINDS = {LiteralKind.AFFINE_INEQ, LiteralKind.AFFINE_EQ}


def affine_in_program(p) -> bool:
    doms = [e.domain for e in p.equations]
    doms += [d for over in p.tile_overrides.values() for d in over.values()]
    return any(lit.kind in AFFINE_KINDS for d in doms for part in d.parts for lit in classify_literals(part))


@pytest.fixture(scope="module", params=KERNELS)
def compiled(request):
    return request.param, compile_program(generate(KernelSpec(request.param, 8)))


def test_kernel_validates_and_round_trips(compiled):
    _, c = compiled
    p = c.program
    assert validate(p) == p
    assert parse_program(dump_program(p)) == p


def test_kernel_passes_every_check(compiled):
    _, c = compiled
    results = verify_all(c)
    assert all(r.ok for r in results), [r.line() for r in results if not r.ok]


def test_kernel_affine_literals(compiled):
    name, c = compiled
    triangular = name in ("trsm", "lu")
    assert affine_in_program(c.program) == triangular
    afs = sum(e.kind is EvalKind.AFFINE for e in c.config.evaluators)
    if triangular:
        assert afs > 0
    else:
        assert afs == 0


def test_gemm_needs_no_waits():
    c = compile_program(generate(KernelSpec("gemm", 8)))
    assert c.program.ii == 1 and c.memories.n_waits == 0


def test_lu_uses_affine_evaluators():
    c = compile_program(generate(KernelSpec("lu", 8)))
    assert c.config.counts()["afs"] > 0


def test_single_pe_mvt():
    c = compile_program(generate(KernelSpec("mvt", 4, grid=(1, 1))))
    assert c.program.tiles() == [(0, 0)]
    assert all(r.ok for r in verify_all(c))


@pytest.mark.parametrize("name", ["atax", "trsm"])
def test_helper_mode(name):
    p = generate(KernelSpec(name, 6, grid=(2, 2), mode="helper"))
    c = compile_program(p)
    assert all(r.ok for r in verify_all(c))


def test_explicit_ii_override():
    assert generate(KernelSpec("mvt", 8, ii=4)).ii == 4


@pytest.mark.parametrize("spec, msg", [
    (KernelSpec("fft"), "unknown kernel"),
    (KernelSpec("gemm", 3, grid=(4, 4)), "n=3"),
    (KernelSpec("gemm", mode="magic"), "mode"),
])
def test_invalid_spec(spec, msg):
    with pytest.raises(ModelError, match=msg):
        generate(spec)
