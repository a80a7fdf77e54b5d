"""Integer polyhedra over a bounded scan box.

Every set in this package lives inside a finite tile, so all set predicates
are decided exactly by enumerating the (epilog-extended) scan positions.
Point sets are carried around as Python ints used as bitsets: bit ``p`` is
scan position ``p`` (odometer order, ``j_0`` fastest).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property, lru_cache
from itertools import product
from typing import Iterable, Sequence, Union

import numpy as np

Row = tuple[tuple[int, ...], int]


class PolyError(ValueError):
    pass


class ShiftRangeError(PolyError):
    """Shifted images fall past the end of the extended scan range."""


# ---------------------------------------------------------------------------
# scan box


@dataclass(frozen=True)
class ScanBox:
    """Rectangular intra-tile space plus ``epilog`` extra scan positions.

    The epilog is realised by raising the outermost extent; positions at or
    beyond ``size`` exist as coordinates but belong to no set.
    """

    extents: tuple[int, ...]
    epilog: int = 0

    def __post_init__(self):
        object.__setattr__(self, "extents", tuple(int(x) for x in self.extents))
        if not self.extents:
            raise PolyError("scan box needs at least one dimension")
        if any(n < 1 for n in self.extents):
            raise PolyError(f"extents must be >= 1, got {self.extents}")
        if self.epilog < 0:
            raise PolyError("epilog must be >= 0")

    @property
    def dim(self) -> int:
        return len(self.extents)

    @property
    def points(self) -> int:
        return math.prod(self.extents)

    @property
    def size(self) -> int:
        """Number of scan positions including the epilog."""
        return self.points + self.epilog

    @property
    def plane(self) -> int:
        return self.points // self.extents[-1]

    @property
    def extended_extents(self) -> tuple[int, ...]:
        outer = self.extents[-1] + -(-self.epilog // self.plane)
        return self.extents[:-1] + (outer,)

    def with_epilog(self, epilog: int) -> ScanBox:
        return ScanBox(self.extents, epilog)

    @cached_property
    def coords(self) -> np.ndarray:
        """(size, dim) array: coordinates of every scan position."""
        pos = np.arange(self.size, dtype=np.int64)
        out = np.empty((self.size, self.dim), dtype=np.int64)
        for d, n in enumerate(self.extents[:-1]):
            out[:, d] = pos % n
            pos = pos // n
        out[:, -1] = pos
        return out

    @property
    def full(self) -> int:
        return (1 << self.size) - 1

    @property
    def original(self) -> int:
        """Mask of the positions of the original (non-epilog) box."""
        return (1 << self.points) - 1

    def point(self, p: int) -> tuple[int, ...]:
        return tuple(int(x) for x in self.coords[p])

    def position(self, j: Sequence[int]) -> int:
        p, scale = 0, 1
        for d, n in enumerate(self.extents):
            p += j[d] * scale
            scale *= n
        return p

    def successor(self, j: Sequence[int]) -> tuple[int, ...]:
        """Odometer successor (j_0 fastest, outermost dimension unbounded)."""
        j = list(j)
        for d in range(self.dim - 1):
            if j[d] < self.extents[d] - 1:
                j[d] += 1
                return tuple(j)
            j[d] = 0
        j[-1] += 1
        return tuple(j)

    def step_dim(self, p: int) -> int:
        """Dimension incremented when moving from position p to p + 1."""
        j = self.coords[p]
        for d in range(self.dim - 1):
            if j[d] < self.extents[d] - 1:
                return d
        return self.dim - 1


# ---------------------------------------------------------------------------
# polyhedra


def _norm_row(a: Sequence[int], b: int) -> Row:
    a = tuple(int(x) for x in a)
    g = math.gcd(*a) if any(a) else 0
    if g > 1:
        return tuple(x // g for x in a), -((-int(b)) // g)
    return a, int(b)


@dataclass(frozen=True)
class Polyhedron:
    """Integer set {j : a.j >= b for every row}; redundant rows allowed."""

    dim: int
    rows: tuple[Row, ...] = ()

    def __post_init__(self):
        rows = tuple((tuple(int(x) for x in a), int(b)) for a, b in self.rows)
        for a, _ in rows:
            if len(a) != self.dim:
                raise PolyError(f"row {a} has {len(a)} coefficients, expected {self.dim}")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def universe(cls, dim: int) -> Polyhedron:
        return cls(dim, ())

    @classmethod
    def parse(cls, text: str, dim: int) -> Polyhedron:
        """Build from constraints such as ``"j0 - j1 >= 3, j1 == 0"``."""
        rows: list[Row] = []
        for part in filter(None, (s.strip() for s in re.split(r"[,&]|\band\b", text))):
            rows.extend(_parse_constraint(part, dim))
        return cls(dim, tuple(rows))

    def intersect(self, other: Polyhedron) -> Polyhedron:
        if other.dim != self.dim:
            raise PolyError("dimension mismatch")
        return Polyhedron(self.dim, self.rows + other.rows)

    def translate(self, t: Sequence[int]) -> Polyhedron:
        """Image under j -> j + t."""
        return Polyhedron(
            self.dim,
            tuple((a, b + sum(x * y for x, y in zip(a, t))) for a, b in self.rows),
        )

    def contains(self, j: Sequence[int]) -> bool:
        return all(sum(x * y for x, y in zip(a, j)) >= b for a, b in self.rows)

    def __str__(self):
        if not self.rows:
            return "true"
        return " & ".join(format_row(a, b) for a, b in self.rows)


_TERM = re.compile(r"([+-]?)\s*(\d*)\s*\*?\s*j(\d+)|([+-]?)\s*(\d+)")


def _parse_affine(expr: str, dim: int) -> tuple[list[int], int]:
    coeff = [0] * dim
    const = 0
    expr = expr.replace(" ", "")
    pos = 0
    while pos < len(expr):
        m = _TERM.match(expr, pos)
        if not m or m.end() == pos:
            raise PolyError(f"cannot parse affine expression {expr!r}")
        if m.group(3) is not None:
            d = int(m.group(3))
            if d >= dim:
                raise PolyError(f"j{d} out of range for dim {dim}")
            k = int(m.group(2) or 1)
            coeff[d] += -k if m.group(1) == "-" else k
        else:
            k = int(m.group(5))
            const += -k if m.group(4) == "-" else k
        pos = m.end()
    return coeff, const


def _parse_constraint(text: str, dim: int) -> list[Row]:
    m = re.fullmatch(r"(.+?)(>=|<=|==|=)(.+)", text.strip())
    if not m:
        raise PolyError(f"cannot parse constraint {text!r}")
    lc, lk = _parse_affine(m.group(1), dim)
    rc, rk = _parse_affine(m.group(3), dim)
    # lhs - rhs  (op)  0
    a = tuple(x - y for x, y in zip(lc, rc))
    k = lk - rk
    neg = tuple(-x for x in a)
    op = m.group(2)
    if op == ">=":
        return [(a, -k)]
    if op == "<=":
        return [(neg, k)]
    return [(a, -k), (neg, k)]


def format_row(a: Sequence[int], b: int) -> str:
    terms = []
    for d, x in enumerate(a):
        if x == 0:
            continue
        sign = "-" if x < 0 else "+"
        mag = "" if abs(x) == 1 else f"{abs(x)}*"
        terms.append(f"{sign} {mag}j{d}")
    lhs = " ".join(terms).lstrip("+ ") if terms else "0"
    if lhs.startswith("- "):
        lhs = "-" + lhs[2:]
    return f"{lhs} >= {b}"


@dataclass(frozen=True)
class DomainUnion:
    """Finite union of polyhedra; no parts means the empty set."""

    dim: int
    parts: tuple[Polyhedron, ...] = ()

    def __post_init__(self):
        parts = tuple(self.parts)
        for p in parts:
            if p.dim != self.dim:
                raise PolyError("all parts of a union must share dim")
        object.__setattr__(self, "parts", parts)

    @classmethod
    def empty(cls, dim: int) -> DomainUnion:
        return cls(dim, ())

    @classmethod
    def universe(cls, dim: int) -> DomainUnion:
        return cls(dim, (Polyhedron(dim),))

    @classmethod
    def of(cls, *parts: Polyhedron) -> DomainUnion:
        if not parts:
            raise PolyError("use DomainUnion.empty(dim) for the empty set")
        return cls(parts[0].dim, parts)

    @classmethod
    def parse(cls, text: str, dim: int) -> DomainUnion:
        """``"j0 == 3 | j0 == 0, j1 >= 1"``: ``|`` separates parts."""
        text = text.strip()
        if text in ("", "empty"):
            return cls.empty(dim)
        return cls(dim, tuple(Polyhedron.parse(s, dim) for s in text.split("|")))

    def union(self, other: DomainUnion) -> DomainUnion:
        if other.dim != self.dim:
            raise PolyError("dimension mismatch")
        return DomainUnion(self.dim, self.parts + other.parts)

    def intersect(self, other: DomainUnion) -> DomainUnion:
        if other.dim != self.dim:
            raise PolyError("dimension mismatch")
        return DomainUnion(self.dim, tuple(p.intersect(q) for p in self.parts for q in other.parts))

    def contains(self, j: Sequence[int]) -> bool:
        return any(p.contains(j) for p in self.parts)

    def rows(self) -> list[Row]:
        return [r for p in self.parts for r in p.rows]

    def __str__(self):
        if not self.parts:
            return "empty"
        return " | ".join(f"{{{p}}}" for p in self.parts)


Domain = Union[Polyhedron, DomainUnion]


def as_union(d: Domain) -> DomainUnion:
    return d if isinstance(d, DomainUnion) else DomainUnion(d.dim, (d,))


# ---------------------------------------------------------------------------
# enumeration


def _bits(arr: np.ndarray) -> int:
    return int.from_bytes(np.packbits(arr, bitorder="little").tobytes(), "little")


@lru_cache(maxsize=1 << 16)
def row_mask(a: tuple[int, ...], b: int, box: ScanBox) -> int:
    if not any(a):
        return box.full if b <= 0 else 0
    return _bits(box.coords @ np.asarray(a, dtype=np.int64) >= b)


def _check_dim(d: Domain, box: ScanBox):
    if d.dim != box.dim:
        raise PolyError(f"dimension mismatch: set has dim {d.dim}, box has dim {box.dim}")


def mask(d: Domain, box: ScanBox) -> int:
    """Bitset of the extended-box scan positions contained in ``d``."""
    _check_dim(d, box)
    if isinstance(d, Polyhedron):
        m = box.full
        for a, b in d.rows:
            m &= row_mask(a, b, box)
            if not m:
                break
        return m
    out = 0
    for p in d.parts:
        out |= mask(p, box)
    return out


def is_empty(p: Domain, box: ScanBox) -> bool:
    return mask(p, box) == 0


def is_subset(a: Domain, b: Domain, box: ScanBox) -> bool:
    if a.dim != b.dim:
        raise PolyError("dimension mismatch")
    return mask(a, box) & ~mask(b, box) == 0


def intersects(a: Domain, b: Domain, box: ScanBox) -> bool:
    if a.dim != b.dim:
        raise PolyError("dimension mismatch")
    return mask(a, box) & mask(b, box) != 0


def witness(d: Domain, box: ScanBox) -> tuple[int, ...] | None:
    m = mask(d, box)
    if not m:
        return None
    return box.point((m & -m).bit_length() - 1)


def positions(m: int) -> list[int]:
    out = []
    while m:
        low = m & -m
        out.append(low.bit_length() - 1)
        m ^= low
    return out


def box_polyhedron(box: ScanBox, extended: bool = False) -> Polyhedron:
    ext = box.extended_extents if extended else box.extents
    rows = []
    for d, n in enumerate(ext):
        e = tuple(1 if i == d else 0 for i in range(box.dim))
        rows.append((e, 0))
        rows.append((tuple(-x for x in e), -(n - 1)))
    return Polyhedron(box.dim, tuple(rows))


def universe(box: ScanBox) -> DomainUnion:
    """Exact polyhedral form of the positions [0, size)."""
    n = box.dim
    ext = box.extended_extents
    base = box_polyhedron(box, extended=True)
    last = box.size - 1
    lj = box.point(last)
    if all(lj[d] == ext[d] - 1 for d in range(n)):
        return DomainUnion(n, (base,))
    # lexicographic j <= lj, most significant dimension last
    parts = []
    for d in range(n - 1, -1, -1):
        rows = list(base.rows)
        for e in range(n - 1, d, -1):
            ue = tuple(1 if i == e else 0 for i in range(n))
            rows.append((ue, lj[e]))
            rows.append((tuple(-x for x in ue), -lj[e]))
        ud = tuple(-1 if i == d else 0 for i in range(n))
        bound = lj[d] - 1 if d > 0 else lj[d]
        rows.append((ud, -bound))
        if bound >= 0:
            parts.append(Polyhedron(n, tuple(rows)))
    return DomainUnion(n, tuple(parts))


def prune_part(p: Polyhedron, box: ScanBox) -> Polyhedron | None:
    """Normalise rows and drop ones that do not change the point set."""
    seen: dict[tuple[int, ...], int] = {}
    for a, b in p.rows:
        a, b = _norm_row(a, b)
        if a in seen:
            seen[a] = max(seen[a], b)
        else:
            seen[a] = b
    rows = [(a, b) for a, b in seen.items()]
    target = mask(Polyhedron(p.dim, tuple(rows)), box)
    if not target:
        return None
    # tightest rows first so looser duplicates are the ones removed
    rows.sort(key=lambda r: bin(row_mask(r[0], r[1], box)).count("1"), reverse=True)
    kept = list(rows)
    for r in rows:
        trial = [x for x in kept if x != r]
        if mask(Polyhedron(p.dim, tuple(trial)), box) == target:
            kept = trial
    kept.sort()
    return Polyhedron(p.dim, tuple(kept))


def prune(d: DomainUnion, box: ScanBox) -> DomainUnion:
    """Drop empty parts, redundant rows and parts covered by other parts."""
    parts = []
    masks = []
    for p in d.parts:
        q = prune_part(p, box)
        if q is not None:
            parts.append(q)
            masks.append(mask(q, box))
    keep = list(range(len(parts)))
    for i in reversed(range(len(parts))):
        rest = 0
        for k in keep:
            if k != i:
                rest |= masks[k]
        if masks[i] & ~rest == 0:
            keep.remove(i)
    return DomainUnion(d.dim, tuple(parts[k] for k in keep))


# ---------------------------------------------------------------------------
# scan-order shifting


def _digits(m: int, extents: Sequence[int]) -> list[int]:
    out = []
    for n in extents[:-1]:
        out.append(m % n)
        m //= n
    out.append(m)
    return out


def scan_shift(d: Domain, m: int, box: ScanBox) -> DomainUnion:
    """Image of ``d`` under ``m`` applications of the scan successor.

    Negative ``m`` maps to scan predecessors; images before position 0 are
    dropped. Images past the extended range raise :class:`ShiftRangeError`.
    """
    d = as_union(d)
    _check_dim(d, box)
    src = mask(d, box)
    if m == 0:
        return prune(d.intersect(universe(box)), box)
    if src and m > 0 and src.bit_length() - 1 + m >= box.size:
        raise ShiftRangeError(
            f"shift by {m} moves position {src.bit_length() - 1} past the "
            f"extended range {box.size}; enlarge the epilog"
        )
    n = box.dim
    source = d.intersect(universe(box))
    dig = _digits(abs(m), box.extents)
    unit = [tuple(1 if i == e else 0 for i in range(n)) for e in range(n)]
    parts = []
    # one translated copy per feasible carry (borrow) vector
    for carries in product((0, 1), repeat=n - 1):
        c = (0,) + carries
        above: list[Row] = []  # rows "j_i >= thr"
        below: list[Row] = []  # rows "j_i <= thr - 1"
        t = [0] * n
        for i in range(n - 1):
            N = box.extents[i]
            if m > 0:
                # carry out of digit i iff j_i + dig_i + c_i >= N
                thr = N - dig[i] - c[i]
                t[i] = dig[i] + c[i] - N * c[i + 1]
                (above if c[i + 1] else below).append((i, thr))
            else:
                # borrow out of digit i iff j_i - dig_i - c_i < 0
                thr = dig[i] + c[i]
                t[i] = -dig[i] - c[i] + N * c[i + 1]
                (below if c[i + 1] else above).append((i, thr))
        guard = [(unit[i], thr) for i, thr in above]
        guard += [(tuple(-x for x in unit[i]), 1 - thr) for i, thr in below]
        if m > 0:
            t[-1] = dig[-1] + c[-1]
        else:
            t[-1] = -dig[-1] - c[-1]
            guard.append((unit[-1], -t[-1]))  # image stays at position >= 0
        g = Polyhedron(n, tuple(guard))
        for part in source.parts:
            img = part.intersect(g).translate(t)
            if mask(img, box):
                parts.append(img)
    # translation is a bijection on each guard region, so images are exact
    return prune(DomainUnion(n, tuple(parts)), box)


# ---------------------------------------------------------------------------
# literals


class LiteralKind(Enum):
    CONST_EQ = "const_eq"
    CONST_LOWER = "const_lower"
    CONST_UPPER = "const_upper"
    AFFINE_EQ = "affine_eq"
    AFFINE_INEQ = "affine_ineq"

    @property
    def is_affine(self) -> bool:
        return self in (LiteralKind.AFFINE_EQ, LiteralKind.AFFINE_INEQ)


@dataclass(frozen=True)
class Literal:
    kind: LiteralKind
    dim: int = -1  # index of the compared loop index (constant kinds)
    value: int = 0  # constant (constant kinds)
    a: tuple[int, ...] = ()  # weights (affine kinds)
    b: int = 0  # right-hand side (affine kinds)
    n: int = field(default=0, compare=False)

    def rows(self) -> list[Row]:
        n = self.n
        if self.kind.is_affine:
            rows = [(self.a, self.b)]
            if self.kind is LiteralKind.AFFINE_EQ:
                rows.append((tuple(-x for x in self.a), -self.b))
            return rows
        e = tuple(1 if i == self.dim else 0 for i in range(n))
        ne = tuple(-x for x in e)
        if self.kind is LiteralKind.CONST_LOWER:
            return [(e, self.value)]
        if self.kind is LiteralKind.CONST_UPPER:
            return [(ne, -self.value)]
        return [(e, self.value), (ne, -self.value)]

    def holds(self, j: Sequence[int]) -> bool:
        if self.kind.is_affine:
            u = sum(x * y for x, y in zip(self.a, j))
            return u == self.b if self.kind is LiteralKind.AFFINE_EQ else u >= self.b
        v = j[self.dim]
        if self.kind is LiteralKind.CONST_LOWER:
            return v >= self.value
        if self.kind is LiteralKind.CONST_UPPER:
            return v <= self.value
        return v == self.value

    def __str__(self):
        k = self.kind
        if k is LiteralKind.CONST_EQ:
            return f"j{self.dim} == {self.value}"
        if k is LiteralKind.CONST_LOWER:
            return f"j{self.dim} >= {self.value}"
        if k is LiteralKind.CONST_UPPER:
            return f"j{self.dim} <= {self.value}"
        lhs = format_row(self.a, self.b).rsplit(" >= ", 1)[0]
        return f"{lhs} {'==' if k is LiteralKind.AFFINE_EQ else '>='} {self.b}"


def _canonical_affine(a: tuple[int, ...], b: int) -> tuple[tuple[int, ...], int]:
    for x in a:
        if x:
            if x < 0:
                return tuple(-y for y in a), -b
            break
    return a, b


def classify_literals(p: Polyhedron) -> list[Literal]:
    """Split a polyhedron into GC literal types; the conjunction is set-equal to p."""
    n = p.dim
    norm: list[Row] = []
    for a, b in p.rows:
        r = _norm_row(a, b)
        if not any(r[0]):
            if r[1] <= 0:
                continue  # 0 >= b, always true
        if r not in norm:
            norm.append(r)
    used = [False] * len(norm)
    out: list[Literal] = []
    for i, (a, b) in enumerate(norm):
        if used[i]:
            continue
        used[i] = True
        neg = (tuple(-x for x in a), -b)
        eq = False
        if any(a):
            for k in range(i + 1, len(norm)):
                if not used[k] and norm[k] == neg:
                    used[k] = True
                    eq = True
                    break
        nz = [d for d, x in enumerate(a) if x]
        if len(nz) == 1:
            d = nz[0]
            if eq:
                out.append(Literal(LiteralKind.CONST_EQ, dim=d, value=b if a[d] > 0 else -b, n=n))
            elif a[d] > 0:
                out.append(Literal(LiteralKind.CONST_LOWER, dim=d, value=b, n=n))
            else:
                out.append(Literal(LiteralKind.CONST_UPPER, dim=d, value=-b, n=n))
        elif eq:
            out.append(Literal(LiteralKind.AFFINE_EQ, a=a, b=b, n=n))
        else:
            out.append(Literal(LiteralKind.AFFINE_INEQ, a=a, b=b, n=n))
    return out


def literal_key(lit: Literal) -> tuple:
    """Normalised identity used to share evaluators between conjunctions."""
    if lit.kind is LiteralKind.AFFINE_EQ:
        a, b = _canonical_affine(lit.a, lit.b)
        return (lit.kind.value, a, b)
    if lit.kind is LiteralKind.AFFINE_INEQ:
        return (lit.kind.value, lit.a, lit.b)
    return (lit.kind.value, lit.dim, lit.value)


def literals_polyhedron(lits: Iterable[Literal], dim: int) -> Polyhedron:
    return Polyhedron(dim, tuple(r for lit in lits for r in lit.rows()))


# ---------------------------------------------------------------------------
# synthesis of polyhedral unions from point sets


@dataclass
class Vocabulary:
    """Half-spaces from which unions are rebuilt, plus all constant cuts.

    Constant cuts ``j_d >= c`` alone separate every pair of points, so any
    point set over the box has a representation.
    """

    box: ScanBox
    atoms: dict[Row, None] = field(default_factory=dict)

    def add_rows(self, rows: Iterable[Row]):
        for a, b in rows:
            a, b = _norm_row(a, b)
            if not any(a):
                continue
            ca, cb = _canonical_affine(a, b)
            if ca != a:
                # -a.j >= b  <=>  not (a.j >= -b + 1)
                cb = cb + 1
            self.atoms[(ca, cb)] = None

    def literal_table(self) -> list[tuple[Row, int, bool]]:
        box = self.box
        n = box.dim
        atoms = dict(self.atoms)
        for d, e in enumerate(box.extended_extents):
            u = tuple(1 if i == d else 0 for i in range(n))
            for c in range(1, e):
                atoms[(u, c)] = None
        out = []
        seen = set()
        full = box.full
        for a, b in sorted(atoms):
            m = row_mask(a, b, box)
            if m == 0 or m == full or m in seen:
                continue
            seen.add(m)
            affine = sum(1 for x in a if x) > 1
            out.append(((a, b), m, affine))
            out.append(((tuple(-x for x in a), -b + 1), full & ~m, affine))
        return out


def _popcount(x: int) -> int:
    return bin(x).count("1")


def synthesize(on: int, box: ScanBox, vocab: Vocabulary | None = None) -> DomainUnion:
    """A union of polyhedra whose point set (within the box range) is ``on``."""
    n = box.dim
    full = box.full
    on &= full
    if on == 0:
        return DomainUnion.empty(n)
    off = full & ~on
    if off == 0:
        return DomainUnion.universe(n)
    table = (vocab or Vocabulary(box)).literal_table()
    const_first = sorted(
        range(len(table)), key=lambda i: (table[i][2], _popcount(table[i][1]))
    )
    affine_first = sorted(
        range(len(table)), key=lambda i: (not table[i][2], _popcount(table[i][1]))
    )

    def expand(p: int, order: list[int]) -> list[int]:
        lits = [i for i in order if table[i][1] >> p & 1]
        suffix = [full] * (len(lits) + 1)
        for k in range(len(lits) - 1, -1, -1):
            suffix[k] = suffix[k + 1] & table[lits[k]][1]
        kept_m = full
        kept = []
        for k, i in enumerate(lits):
            if (kept_m & suffix[k + 1]) & off:
                kept.append(i)
                kept_m &= table[i][1]
        return kept

    def cube_mask(lits: list[int]) -> int:
        m = full
        for i in lits:
            m &= table[i][1]
        return m

    cubes: list[tuple[list[int], int]] = []
    uncovered = on
    while uncovered:
        p = (uncovered & -uncovered).bit_length() - 1
        best = None
        for order in (const_first, affine_first):
            lits = expand(p, order)
            cm = cube_mask(lits)
            score = (
                -_popcount(cm & uncovered),
                sum(1 for i in lits if table[i][2]),
                len(lits),
            )
            if best is None or score < best[0]:
                best = (score, lits, cm)
        cubes.append((best[1], best[2]))
        uncovered &= ~best[2]
    keep = list(range(len(cubes)))
    for i in reversed(range(len(cubes))):
        rest = 0
        for k in keep:
            if k != i:
                rest |= cubes[k][1]
        if cubes[i][1] & on & ~rest == 0:
            keep.remove(i)
    parts = []
    for k in keep:
        rows = tuple(sorted(table[i][0] for i in cubes[k][0]))
        parts.append(Polyhedron(n, rows))
    return DomainUnion(n, tuple(parts))


def simplify(d: Domain, box: ScanBox, vocab: Vocabulary | None = None) -> DomainUnion:
    """Re-synthesise ``d`` over its own rows (plus ``vocab``); same point set."""
    d = as_union(d)
    v = Vocabulary(box)
    if vocab is not None:
        v.atoms.update(vocab.atoms)
    v.add_rows(d.rows())
    return synthesize(mask(d, box), box, v)
