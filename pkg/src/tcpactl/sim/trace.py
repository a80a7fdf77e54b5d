from __future__ import annotations

from dataclasses import dataclass, field

Key = tuple[tuple[int, int], int]  # ((row, col), fu)


@dataclass
class ExecTrace:
    """Issued non-NOP instructions, per (PE, FU), in cycle order."""

    events: dict[Key, list[tuple[int, str]]] = field(default_factory=dict)

    def add(self, tile, fu: int, cycle: int, op: str):
        self.events.setdefault((tuple(tile), fu), []).append((cycle, op))

    def normalized(self) -> dict[Key, list[tuple[int, str]]]:
        return {k: sorted(v) for k, v in sorted(self.events.items()) if v}

    def __eq__(self, other):
        if not isinstance(other, ExecTrace):
            return NotImplemented
        return self.normalized() == other.normalized()

    def first_difference(self, other: ExecTrace):
        """(pe, fu, cycle, mine, theirs) of the earliest mismatch, or None."""
        a, b = self.normalized(), other.normalized()
        best = None
        for key in sorted(set(a) | set(b)):
            ea, eb = a.get(key, []), b.get(key, [])
            for k in range(max(len(ea), len(eb))):
                x = ea[k] if k < len(ea) else None
                y = eb[k] if k < len(eb) else None
                if x != y:
                    cyc = min(v[0] for v in (x, y) if v is not None)
                    if best is None or cyc < best[2]:
                        best = (key[0], key[1], cyc, x, y)
                    break
        return best

    def __len__(self):
        return sum(len(v) for v in self.events.values())

    def dump(self) -> str:
        lines = []
        for ((r, c), fu), evs in self.normalized().items():
            for t, op in evs:
                lines.append(f"pe={r},{c} fu={fu} cycle={t} op={op}")
        return "\n".join(lines) + ("\n" if lines else "")
