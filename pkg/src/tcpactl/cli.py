"""Command-line front end: compile, verify, report, gen-bench."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench import KERNELS, KernelSpec, generate
from .gcmap import DEFAULT_CAPACITIES, CapacityError
from .model import ModelError, dump_program, parse_program
from .pipeline import REPORT_COLUMNS, compile_program, format_table
from .poly import PolyError
from .sim import FifoOverflow, SimError
from .verify import verify_all

USER_ERRORS = (ModelError, PolyError, CapacityError, SimError, FifoOverflow, OSError, ValueError)


def _add_compile_flags(ap: argparse.ArgumentParser):
    ap.add_argument("--tries", type=int, default=100, help="random orders tried by unification")
    ap.add_argument("--seed", type=int, default=0)
    for key, val in DEFAULT_CAPACITIES.items():
        ap.add_argument(f"--capacity-{key}", type=int, default=val, metavar="N")


def _capacities(args) -> dict[str, int]:
    return {key: getattr(args, f"capacity_{key}") for key in DEFAULT_CAPACITIES}


def _load(path: str):
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ModelError(f"cannot read input: {e.strerror}") from None
    try:
        return parse_program(text)
    except (ModelError, PolyError) as e:
        raise type(e)(f"{path}: {e}") from None


def _compile(args, path: str, binding_override=None):
    p = _load(path)
    return compile_program(p, args.tries, args.seed, _capacities(args), binding_override)


def cmd_compile(args) -> int:
    c = _compile(args, args.input)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    row = c.report(Path(args.input).stem)
    (out / "gc-config.json").write_text(c.config.dumps() + "\n")
    (out / "memories.json").write_text(json.dumps(c.memories.to_json(), indent=1) + "\n")
    (out / "report.json").write_text(json.dumps(row, indent=1) + "\n")
    (out / "report.txt").write_text(format_table([row]))
    print(format_table([row]), end="")
    return 0


def cmd_verify(args) -> int:
    override = None
    if args.inject_fault is not None:
        cid = args.inject_fault

        def override(binding):
            if cid not in binding:
                raise ValueError(f"--inject-fault: no condition {cid} (program has {len(binding)})")
            return binding.flipped(cid)

    c = _compile(args, args.input, override)
    results = verify_all(c, args.delay_model, args.fifo_depth, args.horizon)
    ok = True
    for r in results:
        print(r.line())
        if not r.ok:
            ok = False
            if r.counterexample:
                print("  counterexample: " + json.dumps(r.counterexample, sort_keys=True))
    return 0 if ok else 1


def cmd_report(args) -> int:
    rows = [_compile(args, path).report(Path(path).stem) for path in args.inputs]
    text = format_table(rows)
    print(text, end="")
    if args.json:
        Path(args.json).write_text(json.dumps({"columns": list(REPORT_COLUMNS), "rows": rows}, indent=1) + "\n")
    if args.text:
        Path(args.text).write_text(text)
    return 0


def cmd_gen_bench(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    names = KERNELS if args.kernel == "all" else (args.kernel,)
    for name in names:
        p = generate(KernelSpec(name, args.n, tuple(args.grid), args.ii, args.mode))
        path = out / f"{name}.json"
        path.write_text(dump_program(p) + "\n")
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tcpactl", description="Control-signal compiler and simulator for processor arrays.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    c = sub.add_parser("compile", help="compile a loop program into GC config and FU memories")
    c.add_argument("input")
    c.add_argument("-o", "--out", default=".", help="output directory")
    _add_compile_flags(c)
    c.set_defaults(func=cmd_compile)

    v = sub.add_parser("verify", help="compile and run all oracle checks")
    v.add_argument("input")
    _add_compile_flags(v)
    v.add_argument("--delay-model", choices=["shift", "fifo"], default="shift")
    v.add_argument("--fifo-depth", type=int, default=4096)
    v.add_argument("--horizon", type=int, default=None, help="simulated cycles (default: scan + max delay + L_local)")
    v.add_argument("--inject-fault", type=int, default=None, metavar="CID",
                   help="invert the polarity of one condition's signal binding")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("report", help="tabulate control statistics over several programs")
    r.add_argument("inputs", nargs="+")
    _add_compile_flags(r)
    r.add_argument("--json", help="also write the rows as JSON")
    r.add_argument("--text", help="also write the table as text")
    r.set_defaults(func=cmd_report)

    g = sub.add_parser("gen-bench", help="write benchmark kernels as loop program files")
    g.add_argument("kernel", choices=KERNELS + ("all",))
    g.add_argument("-n", type=int, default=8, help="problem size")
    g.add_argument("--grid", type=int, nargs=2, default=[4, 4], metavar=("ROWS", "COLS"))
    g.add_argument("--ii", type=int, default=None)
    g.add_argument("--mode", choices=["builtin", "helper"], default="builtin")
    g.add_argument("-o", "--out", default=".", help="output directory")
    g.set_defaults(func=cmd_gen_bench)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except USER_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
