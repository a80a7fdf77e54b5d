"""Global controller: iteration space scanner, evaluators, AND/OR planes."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..gcmap import EvalKind, GcConfig
from ..poly import ScanBox


class SimError(RuntimeError):
    pass


class Scanner:
    """Odometer over the extended scan range, one iteration every II cycles."""

    def __init__(self, box: ScanBox, ii: int):
        self.extents = box.extents
        self.n_positions = box.size
        self.ii = ii
        self.j = [0] * box.dim
        self.position = 0
        self.phase = 0  # cycle within the current iteration

    @property
    def active(self) -> bool:
        return self.position < self.n_positions

    @property
    def update(self) -> bool:
        """High in the last cycle before a new iteration is presented."""
        return self.active and self.phase == self.ii - 1 and self.position < self.n_positions - 1

    @property
    def step(self) -> int:
        for d in range(len(self.j) - 1):
            if self.j[d] < self.extents[d] - 1:
                return d
        return len(self.j) - 1

    def tick(self):
        if not self.active:
            return
        self.phase += 1
        if self.phase < self.ii:
            return
        self.phase = 0
        self.position += 1
        d = self.step
        for i in range(d):
            self.j[i] = 0
        self.j[d] += 1


@dataclass
class ControlTrace:
    signals: np.ndarray  # (cycles, n_signals) uint8
    run: np.ndarray  # (cycles,) uint8, high while the scanner is active
    iteration: np.ndarray  # (cycles, dim), -1 once the scan has finished
    update: np.ndarray
    step: np.ndarray
    acc: np.ndarray  # (cycles, n_affine) accumulator value per cycle
    affine: list[int]  # evaluator index of every accumulator column

    @property
    def cycles(self) -> int:
        return len(self.run)

    def to_csv(self) -> str:
        n = self.signals.shape[1]
        lines = ["cycle," + ",".join(f"s{k}" for k in range(n))]
        for t in range(self.cycles):
            lines.append(f"{t}," + ",".join(str(int(v)) for v in self.signals[t]))
        return "\n".join(lines) + "\n"


def run_gc(cfg: GcConfig, horizon: int | None = None) -> ControlTrace:
    box = cfg.box
    ii = cfg.ii
    need = box.size * ii
    if horizon is None:
        horizon = need
    if horizon < need:
        raise SimError(f"horizon {horizon} shorter than the scan ({box.size} positions x II {ii} = {need} cycles)")
    evs = cfg.evaluators
    n_ev = len(evs)
    low = [k for k, e in enumerate(evs) if e.kind is not EvalKind.AFFINE]
    aff = [k for k, e in enumerate(evs) if e.kind is EvalKind.AFFINE]
    low_dim = np.array([evs[k].dim for k in low], dtype=np.int64)
    low_c = np.array([evs[k].const for k in low], dtype=np.int64)
    low_eq = np.array([evs[k].mode == "eq" for k in low], dtype=bool)
    low_up = np.array([evs[k].kind is EvalKind.UPPER for k in low], dtype=bool)
    aff_c = np.array([evs[k].const for k in aff], dtype=np.int64)
    aff_eq = np.array([evs[k].mode == "eq" for k in aff], dtype=bool)
    strides = np.array([evs[k].strides for k in aff], dtype=np.int64).reshape(len(aff), box.dim)
    conj = np.zeros((len(cfg.conjunctions), n_ev), dtype=bool)
    for c, members in enumerate(cfg.conjunctions):
        conj[c, members] = True
    disj = np.zeros((len(cfg.disjunctions), len(cfg.conjunctions)), dtype=bool)
    for s, members in enumerate(cfg.disjunctions):
        disj[s, members] = True

    n_sig = len(cfg.disjunctions)
    signals = np.zeros((horizon, n_sig), dtype=np.uint8)
    run = np.zeros(horizon, dtype=np.uint8)
    iteration = np.full((horizon, box.dim), -1, dtype=np.int64)
    update = np.zeros(horizon, dtype=bool)
    step = np.full(horizon, -1, dtype=np.int64)
    acc_trace = np.zeros((horizon, len(aff)), dtype=np.int64)

    sc = Scanner(box, ii)
    acc = np.zeros(len(aff), dtype=np.int64)
    valid = np.zeros(n_ev, dtype=bool)
    for t in range(horizon):
        if not sc.active:
            break
        j = np.array(sc.j, dtype=np.int64)
        if low:
            v = j[low_dim]
            ge = np.where(low_up, v <= low_c, v >= low_c)
            valid[low] = np.where(low_eq, v == low_c, ge)
        if aff:
            valid[aff] = np.where(aff_eq, acc == aff_c, acc >= aff_c)
        conj_val = ~(conj & ~valid).any(axis=1)
        signals[t] = (disj & conj_val).any(axis=1)
        run[t] = 1
        iteration[t] = j
        acc_trace[t] = acc
        step[t] = sc.step
        if sc.update:
            update[t] = True
            if aff:
                acc += strides[:, sc.step]
        sc.tick()
    return ControlTrace(signals, run, iteration, update, step, acc_trace, aff)
