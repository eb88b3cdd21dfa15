"""Command-line entry point: ``itlsynth <command> ...``.

Exit status: 0 success / positive verdict, 1 negative verdict, 2 input
error, 3 resource exhaustion.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence, TextIO

from .atoms import count_atoms, enumerate_atoms
from .counters import MachineError, encode, encode_abb_sim, parse_machine
from .formula import (
    ClosureTable,
    Formula,
    FormulaSyntaxError,
    FragmentError,
    closure,
    parse_formula,
    to_text,
)
from .game import (
    CONDITION_NAMES,
    Move,
    Role,
    Run,
    StrategyError,
    empty_run,
    is_complete,
    legal_moves,
    parse_run,
    prefix_violations,
    success_violations,
    validate_run,
)
from .solver import (
    REALIZABLE,
    RESOURCE_EXCEEDED,
    Limits,
    UnsupportedFragment,
    bounded_sat,
    decide_finite_synthesis,
    extract_strategy,
    prepare_table,
    resolve_items,
)
from .structures import Interval, StructureError, check, dump_structure, parse_structure

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_RESOURCE = 0, 1, 2, 3

INPUT_ERRORS = (
    OSError,
    FormulaSyntaxError,
    FragmentError,
    StructureError,
    MachineError,
    UnsupportedFragment,
    ValueError,
)


def _read_formula(arg: str, inline: bool) -> Formula:
    text = arg if inline else Path(arg).read_text()
    return parse_formula(text)


def _spoiler_list(text: str | None) -> list[int | str]:
    if not text:
        return []
    out: list[int | str] = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if chunk:
            out.append(int(chunk) if chunk.isdigit() else chunk)
    return out


def _limits(args: argparse.Namespace) -> Limits:
    return Limits(max_points=args.max_points, max_nodes=args.max_nodes, timeout_s=args.timeout_s)


def _parse_interval(text: str) -> Interval:
    parts = text.replace(",", " ").split()
    if len(parts) != 2:
        raise ValueError(f"interval must be 'x,y', got {text!r}")
    return Interval(int(parts[0]), int(parts[1]))


# -- commands ----------------------------------------------------------------


def cmd_check(args, out: TextIO) -> int:
    M = parse_structure(Path(args.structure).read_text())
    phi = _read_formula(args.formula, args.expr)
    iv = _parse_interval(args.interval)
    if iv.y >= M.n:
        raise ValueError(f"interval {iv} outside a structure with {M.n} points")
    print("true" if check(M, iv, phi) else "false", file=out)
    return EXIT_OK


def cmd_sat(args, out: TextIO) -> int:
    phi = _read_formula(args.formula, args.expr)
    res = bounded_sat(phi, args.max_points, at_origin=not args.anywhere)
    if res.model is None:
        print("NONE-WITHIN-BOUND", file=out)
        return EXIT_NEGATIVE
    out.write(dump_structure(res.model))
    return EXIT_OK


def cmd_synth(args, out: TextIO) -> int:
    phi = _read_formula(args.formula, args.expr)
    verdict = decide_finite_synthesis(
        phi,
        _spoiler_list(args.spoiler),
        _limits(args),
        prune=not args.no_prune,
        horizon_loses=args.bounded,
        requests=args.requests,
        workers=args.workers,
    )
    out.write(verdict.serialize())
    if verdict.kind == REALIZABLE:
        return EXIT_OK
    if verdict.kind == RESOURCE_EXCEEDED:
        return EXIT_RESOURCE
    return EXIT_NEGATIVE


def cmd_encode(args, out: TextIO) -> int:
    M = parse_machine(Path(args.machine).read_text())
    if args.variant == "aabb":
        phi, spoiler = encode(M)
        print(f"# spoiler: {', '.join(sorted(spoiler))}", file=sys.stderr)
    else:
        phi = encode_abb_sim(M)
    print(to_text(phi), file=out)
    return EXIT_OK


def cmd_atoms(args, out: TextIO) -> int:
    phi = _read_formula(args.formula, args.expr)
    table = closure(phi)
    print(f"atoms: {count_atoms(table)}", file=out)
    for atom in enumerate_atoms(table, args.limit):
        tag = " (point)" if atom.is_pi else ""
        print("{" + ", ".join(table.names(atom.ids())) + "}" + tag, file=out)
    return EXIT_OK


def cmd_validate(args, out: TextIO) -> int:
    phi = _read_formula(args.formula, args.expr)
    table = closure(phi)
    spoiler = resolve_items(table, _spoiler_list(args.spoiler))
    rho = parse_run(Path(args.run).read_text(), table, spoiler, args.requests)
    problems = [str(v) for v in validate_run(rho)]
    if problems:
        print("INVALID", file=out)
        for p in problems:
            print("  " + p, file=out)
        return EXIT_NEGATIVE
    if is_complete(rho):
        reasons = success_violations(rho)
        print("COMPLETE " + ("SUCCESSFUL" if not reasons else "UNSUCCESSFUL"), file=out)
        for r in reasons:
            print("  " + r, file=out)
        return EXIT_OK if not reasons else EXIT_NEGATIVE
    probe = prefix_violations(rho, args.max_depth)
    status = "no violation seen" if probe.ok else "violations"
    print(f"PREFIX ({probe.depth} pairs, {status}; not conclusive)", file=out)
    for r in probe.violations:
        print("  " + r, file=out)
    return EXIT_OK if probe.ok else EXIT_NEGATIVE


def cmd_play(args, out: TextIO) -> int:
    phi = _read_formula(args.formula, args.expr)
    return play_session(
        phi,
        _spoiler_list(args.spoiler),
        limits=_limits(args),
        human=args.side,
        stdin=sys.stdin,
        stdout=out,
    )


# -- interactive game --------------------------------------------------------


def _parse_items(table: ClosureTable, words: Sequence[str]) -> frozenset[int]:
    text = " ".join(words)
    chunks = text.split(",") if "," in text else words
    out: set[int] = set()
    for chunk in chunks:
        chunk = chunk.strip()
        if not chunk:
            continue
        if chunk.isdigit():
            i = int(chunk)
            if not 0 <= i < len(table):
                raise ValueError(f"no item with id {i}")
            out.add(i)
        else:
            out |= table.parse_ids(chunk)
    return frozenset(out)


def _show_moves(run: Run, out: TextIO) -> None:
    moves = " ".join(f"[{iv.x},{iv.y}]" for iv in legal_moves(run))
    print(f"legal: {moves}", file=out)


def play_session(
    phi: Formula,
    spoiler: Sequence[int | str] = (),
    limits: Limits = Limits(),
    human: str = "spoiler",
    stdin: TextIO | None = None,
    stdout: TextIO | None = None,
    requests: str = "closure",
) -> int:
    """Line-oriented game loop.

    With ``human="spoiler"`` the user plays Spoiler (``x y items``) against
    the strategy extracted from a winning response tree.  With
    ``human="duplicator"`` the engine plays Spoiler, taking the legal moves in
    order and declaring nothing, and the user answers ``x y items``.  ``quit``
    ends the session.
    """
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    table = prepare_table(phi) if human == "spoiler" else closure(phi)
    sp = resolve_items(table, spoiler)
    strategy = None
    if human == "spoiler":
        verdict = decide_finite_synthesis(phi, sp, limits, requests=requests)
        if verdict.tree is None:
            print(f"{verdict.kind}: no Duplicator strategy to play against", file=stdout)
            return EXIT_RESOURCE if verdict.kind == RESOURCE_EXCEEDED else EXIT_NEGATIVE
        strategy = extract_strategy(verdict.tree)
    run = empty_run(table, sp, requests)
    print(f"items: {', '.join(f'{i}={table.name(i)}' for i in sorted(run.alphabet))}", file=stdout)
    print(f"spoiler controls: {', '.join(table.names(sp)) or '(nothing)'}", file=stdout)
    while True:
        _show_moves(run, stdout)
        if human == "duplicator":
            iv = legal_moves(run)[0]
            print(f"spoiler plays [{iv.x},{iv.y}]", file=stdout)
        print("> ", end="", file=stdout)
        stdout.flush()
        line = stdin.readline()
        if not line:
            print("\nend of input", file=stdout)
            return EXIT_NEGATIVE
        words = line.split()
        if not words:
            continue
        if words[0] == "quit":
            print("bye", file=stdout)
            return EXIT_OK
        try:
            if len(words) < 2:
                raise ValueError("expected 'x y items...'")
            iv = Interval(int(words[0]), int(words[1]))
            items = _parse_items(table, words[2:])
        except ValueError as exc:
            print(f"error: {exc}", file=stdout)
            continue
        if human == "spoiler":
            s_move = Move(iv, items, Role.SPOILER)
            candidate = run.extend(s_move)
            problems = validate_run(candidate)
            if problems:
                print(f"rejected: {problems[0]}", file=stdout)
                continue
            try:
                answer = strategy(candidate)
            except StrategyError as exc:
                print(f"rejected: {exc}", file=stdout)
                continue
            run = candidate.extend(Move(iv, answer, Role.DUPLICATOR))
            print(f"duplicator: {', '.join(table.names(answer)) or '(nothing)'}", file=stdout)
        else:
            expected = legal_moves(run)[0]
            if iv != expected:
                print(f"rejected: Spoiler played [{expected.x},{expected.y}] "
                      f"[{CONDITION_NAMES[2]}]", file=stdout)
                continue
            candidate = run.extend(
                Move(iv, frozenset(), Role.SPOILER), Move(iv, items, Role.DUPLICATOR)
            )
            problems = validate_run(candidate)
            if problems:
                print(f"rejected: {problems[0]}", file=stdout)
                continue
            run = candidate
        if is_complete(run):
            reasons = success_violations(run)
            if not reasons:
                print("SUCCESS: the run so far is complete and successful", file=stdout)
                return EXIT_OK
            if human == "spoiler":
                print(f"run complete but not successful: {reasons[0]}", file=stdout)
        if run.points() > limits.max_points:
            print("point limit reached", file=stdout)
            return EXIT_RESOURCE


# -- argument parsing ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="itlsynth", description="Interval temporal logic synthesis toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    def formula_arg(p: argparse.ArgumentParser) -> None:
        p.add_argument("formula", help="formula file (or formula text with -e)")
        p.add_argument("-e", "--expr", action="store_true", help="treat FORMULA as formula text")

    def limit_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--max-points", type=int, default=6)
        p.add_argument("--max-nodes", type=int, default=2_000_000)
        p.add_argument("--timeout-s", type=float, default=None)
        p.add_argument("--spoiler", default="", help="comma separated Spoiler items")
        p.add_argument("--requests", choices=("closure", "extended"), default="closure")

    p = sub.add_parser("check", help="model-check a formula on an interval")
    p.add_argument("structure")
    formula_arg(p)
    p.add_argument("--interval", default="0,0")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("sat", help="search for a small model")
    formula_arg(p)
    p.add_argument("--max-points", type=int, default=4)
    p.add_argument("--anywhere", action="store_true", help="formula may hold on any interval")
    p.set_defaults(func=cmd_sat)

    p = sub.add_parser("synth", help="decide finite synthesis")
    formula_arg(p)
    limit_args(p)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-prune", action="store_true")
    p.add_argument("--bounded", action="store_true", help="plays reaching the point limit are lost")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("play", help="play the game interactively")
    formula_arg(p)
    limit_args(p)
    p.add_argument("--side", choices=("spoiler", "duplicator"), default="spoiler")
    p.set_defaults(func=cmd_play)

    p = sub.add_parser("encode-cm", help="encode a counter machine")
    p.add_argument("machine")
    p.add_argument("--variant", choices=("aabb", "abbsim"), default="aabb")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("atoms", help="count and list atoms")
    formula_arg(p)
    p.add_argument("--limit", type=int, default=20)
    p.set_defaults(func=cmd_atoms)

    p = sub.add_parser("validate", help="validate a run file")
    p.add_argument("run")
    formula_arg(p)
    p.add_argument("--spoiler", default="")
    p.add_argument("--requests", choices=("closure", "extended"), default="closure")
    p.add_argument("--max-depth", type=int, default=None, help="pairs inspected by the prefix probe")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: Sequence[str] | None = None, out: TextIO | None = None) -> int:
    args = build_parser().parse_args(argv)
    out = out or sys.stdout
    try:
        return args.func(args, out)
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
