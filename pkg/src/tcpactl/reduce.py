"""Prime-condition filtering and greedy polarity-aware unification."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum

from .alloc import ControlCondition
from .poly import ScanBox


class Encap(Enum):
    NO = 0
    DIRECT = 1
    INVERTED = 2


class Unify(Enum):
    NO = 0
    SAME_POLARITY = 1
    REVERSED = 2


def _sub(a: int, b: int) -> bool:
    return a & ~b == 0


def encapsulates(cj: ControlCondition, ci: ControlCondition, box: ScanBox | None = None) -> Encap:
    """Does ``cj`` fully determine ``ci`` (possibly with swapped polarity)?"""
    if _sub(ci.zero_mask, cj.zero_mask) and _sub(ci.one_mask, cj.one_mask):
        return Encap.DIRECT
    if _sub(ci.zero_mask, cj.one_mask) and _sub(ci.one_mask, cj.zero_mask):
        return Encap.INVERTED
    return Encap.NO


def can_unify(ci: ControlCondition, cj: ControlCondition, box: ScanBox | None = None) -> Unify:
    if not (ci.zero_mask & cj.one_mask) and not (ci.one_mask & cj.zero_mask):
        return Unify.SAME_POLARITY
    if not (ci.zero_mask & cj.zero_mask) and not (ci.one_mask & cj.one_mask):
        return Unify.REVERSED
    return Unify.NO


@dataclass
class SignalBinding:
    """Original condition id -> (target index, negative polarity)."""

    entries: dict[int, tuple[int, bool]] = field(default_factory=dict)

    def __getitem__(self, cid: int) -> tuple[int, bool]:
        return self.entries[cid]

    def __setitem__(self, cid: int, value: tuple[int, bool]):
        self.entries[cid] = value

    def __contains__(self, cid: int) -> bool:
        return cid in self.entries

    def __len__(self):
        return len(self.entries)

    def items(self):
        return self.entries.items()

    def flipped(self, cid: int) -> SignalBinding:
        """Copy with one polarity inverted (fault injection)."""
        out = SignalBinding(dict(self.entries))
        s, neg = out[cid]
        out[cid] = (s, not neg)
        return out


def prime_filter(conds: list[ControlCondition], box: ScanBox | None = None):
    """Keep conditions that no other retained condition encapsulates.

    Returns ``(primes, binding)`` where binding maps every input ``cid`` to
    ``(index into primes, negative)``.
    """
    primes: list[ControlCondition] = []
    # cid -> (cid of representative, negative)
    rep: dict[int, tuple[int, bool]] = {}
    for ci in conds:
        covered = None
        for cj in primes:
            e = encapsulates(cj, ci)
            if e is not Encap.NO:
                covered = (cj.cid, e is Encap.INVERTED)
                break
        if covered is not None:
            rep[ci.cid] = covered
            continue
        keep = []
        for cj in primes:
            e = encapsulates(ci, cj)
            if e is Encap.NO:
                keep.append(cj)
            else:
                rep[cj.cid] = (ci.cid, e is Encap.INVERTED)
        keep.append(ci)
        rep[ci.cid] = (ci.cid, False)
        primes = keep
    index = {c.cid: k for k, c in enumerate(primes)}
    binding = SignalBinding()
    for c in conds:
        cid, neg = c.cid, False
        while True:
            r, flip = rep[cid]
            neg ^= flip
            if r == cid:
                break
            cid = r
        binding[c.cid] = (index[cid], neg)
    return primes, binding


@dataclass
class ReductionReport:
    n_conditions: int
    n_prime: int
    n_unified: int
    tries: int
    best_try: int

    @property
    def factor_prime(self) -> float:
        return self.n_conditions / self.n_prime if self.n_prime else 1.0

    @property
    def factor_unified(self) -> float:
        return self.n_prime / self.n_unified if self.n_unified else 1.0

    @property
    def factor_total(self) -> float:
        return self.n_conditions / self.n_unified if self.n_unified else 1.0

    def to_dict(self) -> dict:
        return {
            "C": self.n_conditions,
            "C_prime": self.n_prime,
            "C_unified": self.n_unified,
            "tries": self.tries,
            "best_try": self.best_try,
            "factor_prime": round(self.factor_prime, 3),
            "factor_unified": round(self.factor_unified, 3),
            "factor_total": round(self.factor_total, 3),
        }


def _unify_once(primes: list[ControlCondition], order: list[int]):
    zero: list[int] = []
    one: list[int] = []
    member: dict[int, tuple[int, bool]] = {}
    for k in order:
        ci = primes[k]
        for s in range(len(zero)):
            if not (ci.zero_mask & one[s]) and not (ci.one_mask & zero[s]):
                zero[s] |= ci.zero_mask
                one[s] |= ci.one_mask
                member[k] = (s, False)
                break
            if not (ci.zero_mask & zero[s]) and not (ci.one_mask & one[s]):
                zero[s] |= ci.one_mask
                one[s] |= ci.zero_mask
                member[k] = (s, True)
                break
        else:
            member[k] = (len(zero), False)
            zero.append(ci.zero_mask)
            one.append(ci.one_mask)
    return zero, one, member


def unify_greedy(
    primes: list[ControlCondition],
    tries: int = 100,
    seed: int = 0,
    prime_binding: SignalBinding | None = None,
):
    """Greedy unification over ``tries`` seeded random orders; smallest result wins.

    Returns ``(unified, binding, report)``; ``binding`` covers the original
    conditions of ``prime_binding`` when given, else the primes by ``cid``.
    """
    if tries < 1:
        raise ValueError("tries must be >= 1")
    best = None
    for t in range(tries):
        order = list(range(len(primes)))
        random.Random(seed + t).shuffle(order)
        zero, one, member = _unify_once(primes, order)
        if best is None or len(zero) < len(best[0]):
            best = (zero, one, member, t)
    zero, one, member, best_try = best
    box = primes[0].box if primes else None
    vocab = primes[0].vocab if primes else None
    unified = [
        ControlCondition(z, o, box, cid=s, vocab=vocab) for s, (z, o) in enumerate(zip(zero, one))
    ]
    binding = SignalBinding()
    if prime_binding is None:
        for k, c in enumerate(primes):
            binding[c.cid] = member[k]
        n_orig = len(primes)
    else:
        for cid, (k, neg) in prime_binding.items():
            s, flip = member[k]
            binding[cid] = (s, neg ^ flip)
        n_orig = len(prime_binding)
    report = ReductionReport(n_orig, len(primes), len(unified), tries, best_try)
    return unified, binding, report


def reduce_conditions(conds: list[ControlCondition], tries: int = 100, seed: int = 0):
    primes, pbind = prime_filter(conds)
    return unify_greedy(primes, tries, seed, pbind) + (primes,)


def check_soundness(conds: list[ControlCondition], unified: list[ControlCondition], binding: SignalBinding):
    """First violation as ``(cid, position)``, or None.

    For each original condition, the bound signal's one domain xor polarity
    must equal membership in the condition's one domain on its whole care set.
    """
    for c in conds:
        s, neg = binding[c.cid]
        u = unified[s]
        care = c.zero_mask | c.one_mask
        sig = u.one_mask
        if neg:
            sig = ~sig
        bad = (sig ^ c.one_mask) & care
        if bad:
            return c.cid, (bad & -bad).bit_length() - 1
        # the signal must be fully determined on the care set as well
        if neg:
            undetermined = (c.one_mask & ~u.zero_mask) | (c.zero_mask & ~u.one_mask)
        else:
            undetermined = (c.one_mask & ~u.one_mask) | (c.zero_mask & ~u.zero_mask)
        if undetermined:
            return c.cid, (undetermined & -undetermined).bit_length() - 1
    return None
