"""Mapping unified conditions onto the global controller's evaluators and masks."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

from .alloc import ControlCondition
from .poly import (
    Domain,
    Literal,
    LiteralKind,
    ScanBox,
    Vocabulary,
    as_union,
    classify_literals,
    literal_key,
    synthesize,
)

DEFAULT_CAPACITIES = {"lows": 32, "ups": 32, "afs": 65, "conjs": 83, "disjs": 18}


class CapacityError(ValueError):
    def __init__(self, resource: str, needed: int, available: int):
        self.resource = resource
        super().__init__(f"GC capacity exceeded: {resource} needs {needed}, only {available} available")


class EvalKind(Enum):
    LOWER = "lower"
    UPPER = "upper"
    AFFINE = "affine"


@dataclass(frozen=True)
class EvaluatorAlloc:
    kind: EvalKind
    mode: str  # "ineq" / "eq" for bounds, "geq" / "eq" for affine
    dim: int = -1
    const: int = 0
    strides: tuple[int, ...] = ()
    weights: tuple[int, ...] = ()  # kept for checking; hardware only stores strides

    def to_json(self) -> dict:
        d = {"kind": self.kind.value, "mode": self.mode}
        if self.kind is EvalKind.AFFINE:
            d.update(strides=list(self.strides), const=self.const, weights=list(self.weights))
        else:
            d.update(dim=self.dim, const=self.const)
        return d

    @classmethod
    def from_json(cls, d: dict) -> EvaluatorAlloc:
        kind = EvalKind(d["kind"])
        if kind is EvalKind.AFFINE:
            return cls(kind, d["mode"], const=d["const"], strides=tuple(d["strides"]),
                       weights=tuple(d.get("weights", ())))
        return cls(kind, d["mode"], dim=d["dim"], const=d["const"])

    def holds(self, j) -> bool:
        if self.kind is EvalKind.AFFINE:
            u = sum(a * x for a, x in zip(self.weights, j))
            return u == self.const if self.mode == "eq" else u >= self.const
        v = j[self.dim]
        if self.mode == "eq":
            return v == self.const
        return v >= self.const if self.kind is EvalKind.LOWER else v <= self.const


@dataclass
class GcConfig:
    extents: tuple[int, ...]
    epilog: int
    ii: int
    evaluators: list[EvaluatorAlloc]
    conjunctions: list[list[int]]  # evaluator indices ANDed
    disjunctions: list[list[int]]  # conjunction indices ORed, one per signal
    signals: list[int]  # unified condition id per disjunction
    capacities: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_CAPACITIES))
    unshared: dict[str, int] = field(default_factory=dict)

    @property
    def box(self) -> ScanBox:
        return ScanBox(self.extents, self.epilog)

    def counts(self) -> dict[str, int]:
        kinds = [e.kind for e in self.evaluators]
        return {
            "lows": kinds.count(EvalKind.LOWER),
            "ups": kinds.count(EvalKind.UPPER),
            "afs": kinds.count(EvalKind.AFFINE),
            "conjs": len(self.conjunctions),
            "disjs": len(self.disjunctions),
        }

    def to_json(self) -> dict:
        return {
            "scanner": {"extents": list(self.extents), "epilog": self.epilog, "ii": self.ii},
            "evaluators": [e.to_json() for e in self.evaluators],
            "conjunctions": self.conjunctions,
            "disjunctions": self.disjunctions,
            "signals": self.signals,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)

    @classmethod
    def from_json(cls, d: dict) -> GcConfig:
        sc = d["scanner"]
        return cls(
            tuple(sc["extents"]), sc["epilog"], sc["ii"],
            [EvaluatorAlloc.from_json(e) for e in d["evaluators"]],
            [list(c) for c in d["conjunctions"]],
            [list(x) for x in d["disjunctions"]],
            list(d["signals"]),
        )


def stride_table(a, box: ScanBox) -> list[int]:
    """a . eps_d for the n odometer steps (eps_d carries into dimension d)."""
    n = box.dim
    out = []
    for d in range(n):
        s = a[d] - sum((box.extents[i] - 1) * a[i] for i in range(d))
        out.append(s)
    return out


def decompose(one: Domain) -> list[list[Literal]]:
    """Disjunction of conjunctions: one conjunction per polyhedron part."""
    return [classify_literals(p) for p in as_union(one).parts]


def _evaluator(lit: Literal, box: ScanBox, low_ups: list[int]) -> EvaluatorAlloc:
    k = lit.kind
    if k is LiteralKind.CONST_LOWER:
        return EvaluatorAlloc(EvalKind.LOWER, "ineq", dim=lit.dim, const=lit.value)
    if k is LiteralKind.CONST_UPPER:
        return EvaluatorAlloc(EvalKind.UPPER, "ineq", dim=lit.dim, const=lit.value)
    if k is LiteralKind.CONST_EQ:
        kind = EvalKind.LOWER if low_ups[0] <= low_ups[1] else EvalKind.UPPER
        return EvaluatorAlloc(kind, "eq", dim=lit.dim, const=lit.value)
    mode = "eq" if k is LiteralKind.AFFINE_EQ else "geq"
    return EvaluatorAlloc(EvalKind.AFFINE, mode, const=lit.b,
                          strides=tuple(stride_table(lit.a, box)), weights=lit.a)


def allocate(
    unified: list[ControlCondition],
    box: ScanBox,
    ii: int,
    capacities: dict[str, int] | None = None,
    vocab: Vocabulary | None = None,
) -> GcConfig:
    caps = dict(DEFAULT_CAPACITIES)
    caps.update(capacities or {})
    evaluators: list[EvaluatorAlloc] = []
    ev_index: dict[tuple, int] = {}
    low_ups = [0, 0]
    conj_index: dict[tuple[int, ...], int] = {}
    conjunctions: list[list[int]] = []
    disjunctions: list[list[int]] = []
    unshared = {"lows": 0, "ups": 0, "afs": 0, "conjs": 0}
    for u in unified:
        dom = synthesize(u.one_mask, box, vocab or u.vocab)
        disj = []
        for conj in decompose(dom):
            unshared["conjs"] += 1
            idx = []
            for lit in conj:
                key = literal_key(lit)
                if key not in ev_index:
                    ev = _evaluator(lit, box, low_ups)
                    if ev.kind is EvalKind.LOWER:
                        low_ups[0] += 1
                    elif ev.kind is EvalKind.UPPER:
                        low_ups[1] += 1
                    ev_index[key] = len(evaluators)
                    evaluators.append(ev)
                kind = evaluators[ev_index[key]].kind
                unshared[{EvalKind.LOWER: "lows", EvalKind.UPPER: "ups", EvalKind.AFFINE: "afs"}[kind]] += 1
                idx.append(ev_index[key])
            ckey = tuple(sorted(set(idx)))
            if ckey not in conj_index:
                conj_index[ckey] = len(conjunctions)
                conjunctions.append(list(ckey))
            if conj_index[ckey] not in disj:
                disj.append(conj_index[ckey])
        disjunctions.append(sorted(disj))
    cfg = GcConfig(box.extents, box.epilog, ii, evaluators, conjunctions, disjunctions,
                   [u.cid for u in unified], caps, unshared)
    names = {"lows": "LOWER evaluators", "ups": "UPPER evaluators", "afs": "AFFINE evaluators",
             "conjs": "conjunctions", "disjs": "disjunctions"}
    for key, n in cfg.counts().items():
        if n > caps[key]:
            raise CapacityError(names[key], n, caps[key])
    return cfg
