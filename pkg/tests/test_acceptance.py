"""Acceptance criteria, one printed PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v -s`` or ``python3 tests/test_acceptance.py``.
"""
from __future__ import annotations

import os
import random
import subprocess
import sys
import tempfile
import time
from itertools import permutations
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import D, extended_points, random_program  # noqa: E402
from tcpactl.alloc import ControlCondition  # noqa: E402
from tcpactl.bench import KERNELS, KernelSpec, generate  # noqa: E402
from tcpactl.pipeline import compile_program  # noqa: E402
from tcpactl.poly import ScanBox  # noqa: E402
from tcpactl.reduce import prime_filter, unify_greedy  # noqa: E402
from tcpactl.sim.delay import DelayElement, DelayModel, run_delay  # noqa: E402
from tcpactl.sim.reference import reference_interpret  # noqa: E402
from tcpactl.sim.sequencer import run_array  # noqa: E402
from tcpactl.verify import check_gc  # noqa: E402

N_FUZZ = 200
DELAY_LATENCIES = (0, 1, 151, 643, 4096)
DELAY_STREAMS = 10_000

_cache: dict = {}


def desk_benches():
    if "desk" not in _cache:
        _cache["desk"] = {k: compile_program(generate(KernelSpec(k, 8, (4, 4)))) for k in KERNELS}
    return _cache["desk"]


def fuzz_programs():
    if "fuzz" not in _cache:
        rng = random.Random(20240601)
        _cache["fuzz"] = [random_program(rng) for _ in range(N_FUZZ)]
    return _cache["fuzz"]


def fuzz_compiled():
    if "fuzzc" not in _cache:
        _cache["fuzzc"] = [compile_program(p, tries=20, seed=k) for k, p in enumerate(fuzz_programs())]
    return _cache["fuzzc"]


def report(name: str, ok: bool, detail: str) -> str:
    line = f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
    print(line)
    return line


# ---------------------------------------------------------------------------
# criteria


def end_to_end():
    t0 = time.perf_counter()
    failures = []
    for name, c in desk_benches().items():
        if run_array(c.program, c.config, c.memories) != reference_interpret(c.program):
            failures.append(name)
    for k, c in enumerate(fuzz_compiled()):
        if run_array(c.program, c.config, c.memories) != reference_interpret(c.program):
            failures.append(f"fuzz#{k}")
    secs = time.perf_counter() - t0 + sum(c.seconds for c in fuzz_compiled())
    ok = not failures and secs < 300
    return ok, (f"{len(KERNELS)} benchmarks + {N_FUZZ} fuzzed programs, "
                f"{len(failures)} mismatches {failures[:5]}, {secs:.1f}s (budget 300s)")


def soundness():
    checked = 0
    bad = []
    for label, c in list(desk_benches().items()) + [(f"fuzz#{k}", c) for k, c in enumerate(fuzz_compiled())]:
        pts = extended_points(c.resolution.box)
        for cond in c.conditions:
            s, neg = c.binding[cond.cid]
            u = c.unified[s]
            for p in range(len(pts)):
                want = None
                if cond.one_mask >> p & 1:
                    want = 1
                elif cond.zero_mask >> p & 1:
                    want = 0
                if want is None:
                    continue
                checked += 1
                if ((u.one_mask >> p & 1) ^ neg) != want or not ((u.zero_mask | u.one_mask) >> p & 1):
                    bad.append((label, cond.cid, p))
    return not bad, f"{checked} (condition, point) pairs checked exhaustively, {len(bad)} wrong {bad[:3]}"


def _cond(box, zero, one, cid):
    return ControlCondition.from_domains(D(zero), D(one), box, cid=cid)


def fidelity():
    box = ScanBox((4, 4))
    chain = [_cond(box, "j0 == 0", "j0 == 3", 0), _cond(box, "j0 <= 1", "j0 == 3", 1),
             _cond(box, "j0 <= 1", "j0 >= 2", 2)]
    primes, _ = prime_filter(chain)
    chain_ok = len(primes) == 1 and primes[0] is chain[2]
    least = None
    for order in permutations(range(3)):
        triple = [
            _cond(box, "j0 == 0", "j0 == 1", 0),
            _cond(box, "j0 == 1, j1 <= 1", "j0 == 0, j1 <= 1 | j0 == 2, j1 <= 1", 1),
            _cond(box, "j0 == 0, j1 >= 2", "j0 == 2, j1 <= 1", 2),
        ]
        triple = [triple[k] for k in order]
        for k, c in enumerate(triple):
            c.cid = k
        for seed in range(25):
            unified, _, _ = unify_greedy(triple, tries=4, seed=seed)
            least = len(unified) if least is None else min(least, len(unified))
    ok = chain_ok and least >= 2
    return ok, f"chain keeps only its top condition: {chain_ok}; three-way set never below {least} signals"


def monotone():
    every = list(desk_benches().values()) + fuzz_compiled()
    mono = all(c.reduction.n_unified <= c.reduction.n_prime <= c.reduction.n_conditions for c in every)
    t0 = time.perf_counter()
    sizes = {}
    for k in KERNELS:
        c = compile_program(generate(KernelSpec(k, 20, (4, 4))))
        sizes[k] = c.reduction.n_unified
    secs = time.perf_counter() - t0
    ok = mono and max(sizes.values()) <= 32 and secs < 60
    return ok, (f"monotone on {len(every)} inputs: {mono}; n=20 C_unified {sizes} (max 32); "
                f"compile {secs:.1f}s (budget 60s)")


def gc_exact():
    bad = [n for n, c in desk_benches().items() if not check_gc(c).ok]
    bad += [f"fuzz#{k}" for k, c in enumerate(fuzz_compiled()) if not check_gc(c).ok]
    sigs = sum(len(c.unified) for c in desk_benches().values())
    return not bad, f"{sigs} benchmark signals plus fuzzed programs, failures {bad[:5]}"


def delay_equivalence():
    rng = np.random.default_rng(7)
    lanes = DELAY_STREAMS // len(DELAY_LATENCIES)
    mismatches = 0
    for lat in DELAY_LATENCIES:
        x = rng.integers(0, 2, size=(lat + 600, lanes), dtype=np.uint8)
        a = run_delay(DelayElement(DelayModel.SHIFT_REGISTER, lat, lanes), x)
        b = run_delay(DelayElement(DelayModel.TIMESTAMP_FIFO, lat, lanes, depth=4096), x)
        want = np.zeros_like(x)
        want[lat:] = x[: len(x) - lat]
        mismatches += int((a != b).any(axis=0).sum()) + int((a != want).any(axis=0).sum())
    return mismatches == 0, (f"{lanes * len(DELAY_LATENCIES)} random streams at latencies "
                             f"{list(DELAY_LATENCIES)}, {mismatches} differing")


def wait_compression():
    benches = desk_benches()
    gemm_waits = benches["gemm"].memories.n_waits
    conserved = {}
    for name, c in list(benches.items()) + [(f"fuzz#{k}", c) for k, c in enumerate(fuzz_compiled())]:
        if c.program.ii > 1:
            m = c.memories
            # uncompressed size recounted from the graphs: II slots per node, one graph per program
            nodes = {}
            for g in c.graphs:
                nodes.setdefault(m.assignment[(g.tile, g.fu)], g.n_nodes)
            conserved[name] = m.n_instrs + m.n_waits == sum(nodes.values()) * c.program.ii
    ok = gemm_waits == 0 and all(conserved.values())
    lu = benches["lu"].memories
    share = lu.n_waits / (lu.n_waits + lu.n_instrs)
    return ok, (f"gemm #Waits = {gemm_waits}; Instrs + Waits == slots on {sum(conserved.values())}/"
                f"{len(conserved)} II>1 programs; lu removes {share:.0%} of slots")


def determinism():
    root = Path(__file__).resolve().parents[1]
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        env = dict(os.environ)
        subprocess.run([sys.executable, "-m", "tcpactl", "gen-bench", "all", "-o", str(tmp / "in")],
                       check=True, capture_output=True, env=env, cwd=root)
        outs = []
        for run, hashseed in enumerate(("1", "2")):
            env["PYTHONHASHSEED"] = hashseed
            for k in KERNELS:
                subprocess.run([sys.executable, "-m", "tcpactl", "compile", str(tmp / "in" / f"{k}.json"),
                                "-o", str(tmp / f"out{run}" / k), "--seed", "5"],
                               check=True, capture_output=True, env=env, cwd=root)
            outs.append({str(p.relative_to(tmp / f"out{run}")): p.read_bytes()
                         for p in sorted((tmp / f"out{run}").rglob("*")) if p.is_file()})
    ok = outs[0] == outs[1] and len(outs[0]) == 4 * len(KERNELS)
    return ok, f"{len(outs[0])} output files byte-identical across two runs with different hash seeds"


CRITERIA = [
    ("end-to-end trace equality", end_to_end),
    ("reduction soundness", soundness),
    ("algorithm fidelity", fidelity),
    ("monotonic reduction", monotone),
    ("GC exactness", gc_exact),
    ("delay equivalence", delay_equivalence),
    ("wait compression", wait_compression),
    ("determinism", determinism),
]


@pytest.mark.parametrize("name, fn", CRITERIA, ids=[n for n, _ in CRITERIA])
def test_criterion(name, fn, capsys):
    ok, detail = fn()
    with capsys.disabled():
        print()
        report(name, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    results = [report(name, *fn()) for name, fn in CRITERIA]
    sys.exit(0 if all(r.startswith("PASS") for r in results) else 1)
