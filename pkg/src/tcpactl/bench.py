"""Generators for six dense linear-algebra kernels as tiled, scheduled loop programs.

Domains are written over global indices (i = j0, j = j1, k = j2 unless a
kernel says otherwise). Dimension 0 is partitioned across PE rows and
dimension 1 across PE columns; every tile gets the global domain rewritten
into its local coordinates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .model import Equation, LoopProgram, ModelError, compute_stats, helper_schedule, validate
from .poly import DomainUnion, Polyhedron, ScanBox, mask, prune

KERNELS = ("gemm", "trsm", "lu", "atax", "mvt", "gesummv")

# (id, fu, opcode, global domain, tau, latency); "all" is the whole space
_Row = tuple[str, int, str, str, int, int]


def _gemm(n: int) -> tuple[int, int, list[_Row]]:
    return 3, 1, [
        ("a_in", 0, "ld_a", "j1 == 0", 0, 1),
        ("a_fwd", 0, "mov_a", "j1 >= 1", 0, 1),
        ("b_in", 1, "ld_b", "j0 == 0", 0, 1),
        ("b_fwd", 1, "mov_b", "j0 >= 1", 0, 1),
        ("mul", 2, "mul", "all", 1, 4),
        ("c_init", 3, "mov_c", "j2 == 0", 5, 4),
        ("c_acc", 3, "add", "j2 >= 1", 5, 4),
        ("c_out", 4, "st_c", f"j2 == {n - 1}", 9, 1),
    ]


def _trsm(n: int) -> tuple[int, int, list[_Row]]:
    return 3, 2, [
        ("l_ld", 0, "ld_l", "j0 - j2 >= 0", 0, 1),
        ("x_fwd", 0, "mov_x", "j0 - j2 >= 1", 1, 1),
        ("b_ld", 1, "ld_b", "j2 == 0", 0, 1),
        ("mul", 2, "mul", "j0 - j2 >= 1", 1, 3),
        ("sub", 3, "sub", "j0 - j2 >= 1", 4, 2),
        ("div", 2, "div", "j0 - j2 == 0", 6, 4),
        ("x_st", 1, "st_x", "j0 - j2 == 0", 11, 1),
    ]


def _lu(n: int) -> tuple[int, int, list[_Row]]:
    # here j0 = k, j1 = i, j2 = j: the pivot index is tiled across PE rows
    rows = [
        ("a_ld", 0, "ld_a", "j1 - j0 >= 0, j2 - j0 >= 0", 0, 2),
        ("div", 2, "div", "j1 - j0 >= 1, j2 - j0 == 0", 4, 12),
        ("mul", 3, "mul", "j1 - j0 >= 1, j2 - j0 >= 1", 16, 4),
        ("sub", 4, "sub", "j1 - j0 >= 1, j2 - j0 >= 1", 20, 7),
        ("a_st", 0, "st_a", "j1 - j0 >= 0, j2 - j0 >= 0", 27, 2),
    ]
    # no software pipelining: one iteration at a time
    ii = max(t + lat for *_, t, lat in rows)
    return 3, ii, rows


def _atax(n: int) -> tuple[int, int, list[_Row]]:
    return 2, 2, [
        ("a_ld", 0, "ld_a", "all", 0, 1),
        ("x_in", 1, "ld_x", "j0 == 0", 0, 1),
        ("x_fwd", 1, "mov_x", "j0 >= 1", 0, 1),
        ("t_init", 2, "mul", "j1 == 0", 1, 2),
        ("t_acc", 2, "mac", "j1 >= 1", 1, 2),
        ("t_out", 3, "mov_t", f"j1 == {n - 1}", 3, 1),
        ("y_init", 2, "mul_y", "j0 == 0", 4, 2),
        ("y_acc", 2, "mac_y", "j0 >= 1", 4, 2),
        ("y_out", 4, "st_y", f"j0 == {n - 1}", 6, 1),
    ]


def _mvt(n: int) -> tuple[int, int, list[_Row]]:
    return 2, 2, [
        ("a_ld", 0, "ld_a", "all", 0, 1),
        ("at_ld", 0, "ld_at", "all", 1, 1),
        ("x1_init", 1, "mul1", "j1 == 0", 2, 2),
        ("x1_acc", 1, "mac1", "j1 >= 1", 2, 2),
        ("x2_init", 1, "mul2", "j0 == 0", 3, 2),
        ("x2_acc", 1, "mac2", "j0 >= 1", 3, 2),
        ("x1_st", 2, "st_x1", f"j1 == {n - 1}", 4, 1),
        ("x2_st", 2, "st_x2", f"j0 == {n - 1}", 5, 1),
    ]


def _gesummv(n: int) -> tuple[int, int, list[_Row]]:
    return 2, 3, [
        ("a_ld", 0, "ld_a", "all", 0, 1),
        ("b_ld", 0, "ld_b", "all", 1, 1),
        ("x_in", 1, "ld_x", "j0 == 0", 0, 1),
        ("x_fwd", 1, "mov_x", "j0 >= 1", 0, 1),
        ("t_init", 2, "mul_t", "j1 == 0", 2, 2),
        ("t_acc", 2, "mac_t", "j1 >= 1", 2, 2),
        ("y_init", 2, "mul_y", "j1 == 0", 3, 2),
        ("y_acc", 2, "mac_y", "j1 >= 1", 3, 2),
        ("fin", 3, "axpby", f"j1 == {n - 1}", 5, 2),
        ("y_st", 4, "st_y", f"j1 == {n - 1}", 7, 1),
    ]


_TABLES = {"gemm": _gemm, "trsm": _trsm, "lu": _lu, "atax": _atax, "mvt": _mvt, "gesummv": _gesummv}


@dataclass(frozen=True)
class KernelSpec:
    name: str
    n: int = 8
    grid: tuple[int, int] = (4, 4)
    ii: int | None = None  # None: the kernel's own II (builtin) or minimal II (helper)
    mode: str = "builtin"

    def check(self):
        if self.name not in _TABLES:
            raise ModelError(f"unknown kernel {self.name!r}; choose from {', '.join(KERNELS)}")
        if self.mode not in ("builtin", "helper"):
            raise ModelError(f"schedule mode must be builtin or helper, got {self.mode!r}")
        if min(self.grid) < 1 or self.n < max(self.grid):
            raise ModelError(f"n={self.n} must be >= PE grid extent {self.grid}")


def _global_domain(text: str, dims: int, n: int) -> Polyhedron:
    p = Polyhedron.parse("" if text == "all" else text, dims)
    return p.intersect(Polyhedron.parse(", ".join(f"j{d} <= {n - 1}" for d in range(dims)), dims))


def generate(spec: KernelSpec) -> LoopProgram:
    spec.check()
    dims, ii, rows = _TABLES[spec.name](spec.n)
    n = spec.n
    tile_ext = [math.ceil(n / spec.grid[0]), math.ceil(n / spec.grid[1])] + [n] * (dims - 2)
    box = ScanBox(tuple(tile_ext))
    tiles = [(r, c) for r in range(spec.grid[0]) for c in range(spec.grid[1])]

    def local(g: Polyhedron, tile) -> DomainUnion:
        off = [tile[0] * tile_ext[0], tile[1] * tile_ext[1]] + [0] * (dims - 2)
        return prune(DomainUnion(dims, (g.translate([-x for x in off]),)), box)

    eqs = []
    overrides: dict = {}
    for eid, fu, op, text, tau, lat in rows:
        g = _global_domain(text, dims, n)
        base = local(g, (0, 0))
        eqs.append(Equation(eid, fu, op, base, tau, lat))
        base_mask = mask(base, box)
        for t in tiles[1:]:
            d = local(g, t)
            if mask(d, box) != base_mask:
                overrides.setdefault(t, {})[eid] = d
    l_local = max(t + lat for *_, t, lat in rows) - min(t for *_, t, _ in rows)
    p = LoopProgram(dims, box, tuple(spec.grid), tuple(eqs), ii, (l_local, l_local), overrides)
    if spec.mode == "helper":
        demand: dict[int, int] = {}
        for e in eqs:
            demand[e.fu] = demand.get(e.fu, 0) + 1
        p = helper_schedule(replace(p, ii=spec.ii or max(demand.values())))
        lam = compute_stats(p).l_local
        p = replace(p, lambda_inter=(lam, lam))
    elif spec.ii is not None and spec.ii != ii:
        p = replace(p, ii=spec.ii)
    return validate(p)
