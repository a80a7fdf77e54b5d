"""Loop program data model: iteration space, tiling, equations and schedule."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from itertools import combinations

from .poly import DomainUnion, Polyhedron, PolyError, ScanBox, box_polyhedron, mask

Tile = tuple[int, int]


class ModelError(ValueError):
    pass


class SlotConflictError(ModelError):
    pass


@dataclass(frozen=True)
class Equation:
    id: str
    fu: int
    opcode: str
    domain: DomainUnion
    tau: int = 0
    latency: int = 1


@dataclass(frozen=True, eq=True)
class LoopProgram:
    dims: int
    intra: ScanBox
    pe_grid: Tile
    equations: tuple[Equation, ...]
    ii: int
    lambda_inter: tuple[int, int] = (0, 0)
    tile_overrides: dict = field(default_factory=dict, hash=False)

    __hash__ = None  # holds a dict

    def tiles(self) -> list[Tile]:
        rows, cols = self.pe_grid
        return [(r, c) for r in range(rows) for c in range(cols)]

    def equation(self, eid: str) -> Equation:
        for e in self.equations:
            if e.id == eid:
                return e
        raise KeyError(eid)

    def domain_for(self, eq: Equation, tile: Tile) -> DomainUnion:
        return self.tile_overrides.get(tile, {}).get(eq.id, eq.domain)

    def pe_delay(self, tile: Tile) -> int:
        return tile[0] * self.lambda_inter[0] + tile[1] * self.lambda_inter[1]

    @property
    def max_delay(self) -> int:
        r, c = self.pe_grid
        return self.pe_delay((r - 1, c - 1))

    @property
    def fus(self) -> list[int]:
        return sorted({e.fu for e in self.equations})

    @property
    def epilog(self) -> int:
        return max((e.tau // self.ii for e in self.equations), default=0)

    @property
    def box(self) -> ScanBox:
        """Scan box extended by the epilog that overlap resolution needs."""
        return self.intra.with_epilog(self.epilog)


@dataclass
class ScheduleStats:
    l_local: int
    overlap_depth: int
    slot_occupancy: dict[int, list[list[str]]]


# ---------------------------------------------------------------------------
# validation


def _shifted_mask(dom: DomainUnion, shift: int, box: ScanBox) -> int:
    inside = mask(dom.intersect(DomainUnion(box.dim, (box_polyhedron(box),))), box)
    return (inside << shift) & box.full


def validate(p: LoopProgram) -> LoopProgram:
    if p.dims < 1 or p.intra.dim != p.dims:
        raise ModelError(f"intra_extents must have {p.dims} entries")
    if p.ii < 1:
        raise ModelError(f"II must be >= 1, got {p.ii}")
    if len(p.pe_grid) != 2 or min(p.pe_grid) < 1:
        raise ModelError(f"pe_grid must be two positive extents, got {p.pe_grid}")
    if len(p.lambda_inter) != 2 or min(p.lambda_inter) < 0:
        raise ModelError(f"lambda_inter must be two values >= 0, got {p.lambda_inter}")
    ids = set()
    for e in p.equations:
        if e.id in ids:
            raise ModelError(f"duplicate equation id {e.id!r}")
        ids.add(e.id)
        if e.fu < 0:
            raise ModelError(f"equation {e.id}: fu must be >= 0")
        if e.tau < 0:
            raise ModelError(f"equation {e.id}: tau must be >= 0")
        if e.latency < 1:
            raise ModelError(f"equation {e.id}: latency must be >= 1")
        if e.domain.dim != p.dims:
            raise ModelError(f"equation {e.id}: domain has dim {e.domain.dim}, expected {p.dims}")
    tiles = set(p.tiles())
    for tile, over in p.tile_overrides.items():
        if tile not in tiles:
            raise ModelError(f"tile override {tile} outside PE grid {p.pe_grid}")
        for eid, dom in over.items():
            if eid not in ids:
                raise ModelError(f"tile override {tile} names unknown equation {eid!r}")
            if dom.dim != p.dims:
                raise ModelError(f"tile override {tile}/{eid}: wrong dimension")
    check_slots(p)
    return p


def check_slots(p: LoopProgram):
    """One instruction per FU slot: overlapping shifted domains need distinct tau mod II."""
    box = p.box
    groups: dict[tuple[int, int], list[Equation]] = {}
    for e in p.equations:
        groups.setdefault((e.fu, e.tau % p.ii), []).append(e)
    for (fu, slot), eqs in groups.items():
        if len(eqs) < 2:
            continue
        for tile in p.tiles():
            ms = [_shifted_mask(p.domain_for(e, tile), e.tau // p.ii, box) for e in eqs]
            for (i, a), (k, b) in combinations(enumerate(ms), 2):
                both = a & b
                if both:
                    pos = (both & -both).bit_length() - 1
                    raise SlotConflictError(
                        f"FU {fu} slot {slot}: equations {eqs[i].id!r} and {eqs[k].id!r} "
                        f"both issue at scan position {pos} {box.point(pos)} of tile {tile}"
                    )


def compute_stats(p: LoopProgram) -> ScheduleStats:
    if p.equations:
        l_local = max(e.tau + e.latency for e in p.equations) - min(e.tau for e in p.equations)
    else:
        l_local = 0
    occ: dict[int, list[list[str]]] = {}
    for e in p.equations:
        occ.setdefault(e.fu, [[] for _ in range(p.ii)])[e.tau % p.ii].append(e.id)
    return ScheduleStats(l_local, math.ceil(l_local / p.ii), dict(sorted(occ.items())))


def helper_schedule(p: LoopProgram) -> LoopProgram:
    """Greedy modulo schedule in equation order: smallest tau with a free FU slot."""
    demand: dict[int, int] = {}
    for e in p.equations:
        demand[e.fu] = demand.get(e.fu, 0) + 1
    for fu, n in demand.items():
        if n > p.ii:
            raise ModelError(f"II={p.ii} infeasible: FU {fu} needs {n} slots")
    used: dict[int, set[int]] = {}
    eqs = []
    for e in p.equations:
        taken = used.setdefault(e.fu, set())
        tau = next(t for t in range(p.ii) if t not in taken)
        taken.add(tau)
        eqs.append(replace(e, tau=tau))
    return validate(replace(p, equations=tuple(eqs)))


# ---------------------------------------------------------------------------
# JSON format

_TOP = {"dims", "intra_extents", "pe_grid", "ii", "lambda_inter", "equations", "tile_overrides"}
_EQ = {"id", "fu", "opcode", "tau", "latency", "domain"}


def domain_to_json(d: DomainUnion) -> list:
    return [{"rows": [{"a": list(a), "b": b} for a, b in part.rows]} for part in d.parts]


def domain_from_json(obj, dim: int, where: str) -> DomainUnion:
    if not isinstance(obj, list):
        raise ModelError(f"{where}: domain must be a list of polyhedra")
    parts = []
    for k, part in enumerate(obj):
        if not isinstance(part, dict) or set(part) != {"rows"}:
            raise ModelError(f"{where}[{k}]: polyhedron must be {{\"rows\": [...]}}")
        rows = []
        for r in part["rows"]:
            if not isinstance(r, dict) or set(r) != {"a", "b"}:
                raise ModelError(f"{where}[{k}]: row must be {{\"a\": [...], \"b\": int}}")
            if len(r["a"]) != dim:
                raise ModelError(f"{where}[{k}]: row {r['a']} has {len(r['a'])} coefficients, expected {dim}")
            if not all(isinstance(x, int) for x in r["a"]) or not isinstance(r["b"], int):
                raise ModelError(f"{where}[{k}]: row entries must be integers")
            rows.append((tuple(r["a"]), r["b"]))
        parts.append(Polyhedron(dim, tuple(rows)))
    return DomainUnion(dim, tuple(parts))


def _int(obj, key, where):
    v = obj[key]
    if not isinstance(v, int) or isinstance(v, bool):
        raise ModelError(f"{where}: {key!r} must be an integer")
    return v


def program_from_dict(doc: dict) -> LoopProgram:
    if not isinstance(doc, dict):
        raise ModelError("program must be a JSON object")
    unknown = set(doc) - _TOP
    if unknown:
        raise ModelError(f"unknown fields: {sorted(unknown)}")
    missing = {"dims", "intra_extents", "pe_grid", "ii", "equations"} - set(doc)
    if missing:
        raise ModelError(f"missing fields: {sorted(missing)}")
    dims = _int(doc, "dims", "program")
    try:
        intra = ScanBox(tuple(doc["intra_extents"]))
    except (PolyError, TypeError) as exc:
        raise ModelError(f"intra_extents: {exc}") from None
    if intra.dim != dims:
        raise ModelError(f"intra_extents has {intra.dim} entries, dims is {dims}")
    eqs = []
    for k, e in enumerate(doc["equations"]):
        where = f"equations[{k}]"
        if not isinstance(e, dict):
            raise ModelError(f"{where}: must be an object")
        unknown = set(e) - _EQ
        if unknown:
            raise ModelError(f"{where}: unknown fields {sorted(unknown)}")
        if {"id", "fu", "opcode", "domain"} - set(e):
            raise ModelError(f"{where}: needs id, fu, opcode and domain")
        eqs.append(
            Equation(
                id=str(e["id"]),
                fu=_int(e, "fu", where),
                opcode=str(e["opcode"]),
                domain=domain_from_json(e["domain"], dims, f"{where}.domain"),
                tau=_int(e, "tau", where) if "tau" in e else 0,
                latency=_int(e, "latency", where) if "latency" in e else 1,
            )
        )
    overrides = {}
    for key, over in (doc.get("tile_overrides") or {}).items():
        try:
            r, c = (int(x) for x in key.split(","))
        except ValueError:
            raise ModelError(f"tile_overrides key {key!r} must be 'row,col'") from None
        overrides[(r, c)] = {
            str(eid): domain_from_json(dom, dims, f"tile_overrides[{key}][{eid}]")
            for eid, dom in over.items()
        }
    grid = doc["pe_grid"]
    lam = doc.get("lambda_inter", [0, 0])
    return LoopProgram(
        dims=dims,
        intra=intra,
        pe_grid=(int(grid[0]), int(grid[1])) if len(grid) == 2 else tuple(grid),
        equations=tuple(eqs),
        ii=_int(doc, "ii", "program"),
        lambda_inter=(int(lam[0]), int(lam[1])) if len(lam) == 2 else tuple(lam),
        tile_overrides=overrides,
    )


def parse_program(text: str) -> LoopProgram:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return validate(program_from_dict(doc))


def program_to_dict(p: LoopProgram) -> dict:
    return {
        "dims": p.dims,
        "intra_extents": list(p.intra.extents),
        "pe_grid": list(p.pe_grid),
        "ii": p.ii,
        "lambda_inter": list(p.lambda_inter),
        "equations": [
            {
                "id": e.id,
                "fu": e.fu,
                "opcode": e.opcode,
                "tau": e.tau,
                "latency": e.latency,
                "domain": domain_to_json(e.domain),
            }
            for e in p.equations
        ],
        "tile_overrides": {
            f"{r},{c}": {eid: domain_to_json(d) for eid, d in over.items()}
            for (r, c), over in sorted(p.tile_overrides.items())
        },
    }


def dump_program(p: LoopProgram) -> str:
    return json.dumps(program_to_dict(p), indent=1)
