"""Shared brute-force oracles: plain enumeration, no bitsets."""
from __future__ import annotations

import random
from itertools import product

import pytest

from tcpactl.model import Equation, LoopProgram
from tcpactl.poly import DomainUnion, Polyhedron, ScanBox


def scan_points(extents):
    """All points of a box in scan order (j0 fastest)."""
    return [tuple(reversed(r)) for r in product(*(range(n) for n in reversed(extents)))]


def extended_points(box: ScanBox):
    """Coordinates of the extended positions 0 .. P+E-1, by odometer counting."""
    pts = []
    j = [0] * box.dim
    for _ in range(box.size):
        pts.append(tuple(j))
        d = 0
        while d < box.dim - 1 and j[d] == box.extents[d] - 1:
            j[d] = 0
            d += 1
        j[d] += 1
    return pts


def member_positions(d, box: ScanBox) -> list[int]:
    return [p for p, j in enumerate(extended_points(box)) if d.contains(j)]


def D(text: str, dim: int = 2) -> DomainUnion:
    return DomainUnion.parse(text, dim)


def P(text: str, dim: int = 2) -> Polyhedron:
    return Polyhedron.parse(text, dim)


@pytest.fixture
def box44():
    return ScanBox((4, 4))


def _random_domain(rng: random.Random, n: int) -> DomainUnion:
    parts = []
    for _ in range(rng.randint(1, 2)):
        rows = []
        for _ in range(rng.randint(0, 2)):
            rows.append((tuple(rng.randint(-1, 1) for _ in range(n)), rng.randint(-2, 3)))
        parts.append(Polyhedron(n, tuple(rows)))
    return DomainUnion(n, tuple(parts))


def random_program(rng: random.Random) -> LoopProgram:
    """A small valid program: up to 3 dims, extents <= 5, <= 6 equations, II <= 3.

    Equations on one FU get distinct slots (tau mod II), so shifting can never
    make them collide. Some tiles get their own domain for one equation.
    """
    n = rng.randint(1, 3)
    ext = tuple(rng.randint(1, 5) for _ in range(n))
    ii = rng.randint(1, 3)
    eqs = []
    used: dict[int, set[int]] = {}
    for k in range(rng.randint(0, 6)):
        fu = rng.randint(0, 2)
        free = [s for s in range(ii) if s not in used.setdefault(fu, set())]
        if not free:
            continue
        slot = rng.choice(free)
        used[fu].add(slot)
        tau = slot + ii * rng.randint(0, 3)
        eqs.append(Equation(f"e{k}", fu, f"op{k}", _random_domain(rng, n), tau, rng.randint(1, 3)))
    grid = (rng.randint(1, 2), rng.randint(1, 2))
    overrides = {}
    if eqs and grid != (1, 1) and rng.random() < 0.3:
        tile = (grid[0] - 1, grid[1] - 1)
        e = rng.choice(eqs)
        overrides[tile] = {e.id: _random_domain(rng, n)}
    lam = (rng.randint(0, 6), rng.randint(0, 6))
    return LoopProgram(n, ScanBox(ext), grid, tuple(eqs), ii, lam, overrides)
