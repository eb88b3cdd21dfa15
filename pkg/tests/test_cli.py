from __future__ import annotations

import io
import random

import pytest

from itlsynth.cli import EXIT_INPUT, EXIT_NEGATIVE, EXIT_OK, EXIT_RESOURCE, main, play_session
from itlsynth.formula import ABB_SIM, closure, parse_formula, to_text
from itlsynth.game import Move, Role, dump_run, empty_run, validate_run
from itlsynth.solver import Limits
from itlsynth.structures import Interval, parse_structure

from corpus import SPOILER_LETTERS, TWO_CORR, with_injectivity

T = parse_formula


def run_cli(*argv: str) -> tuple[int, str]:
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


@pytest.fixture
def files(tmp_path):
    def write(name: str, text: str) -> str:
        path = tmp_path / name
        path.write_text(text)
        return str(path)

    return write


class TestCheck:
    def test_true_and_false(self, files):
        s = files("m.txt", "points 2\nlabel 0 1 : a\n")
        assert run_cli("check", s, "-e", "<A> a") == (EXIT_OK, "true\n")
        assert run_cli("check", s, "-e", "<A> a", "--interval", "1,1") == (EXIT_OK, "false\n")

    def test_formula_file(self, files):
        s = files("m.txt", "points 1\n")
        f = files("f.txt", "[B] false\n")
        assert run_cli("check", s, f) == (EXIT_OK, "true\n")

    def test_bad_inputs(self, files):
        s = files("m.txt", "points 2\n")
        assert run_cli("check", s, "-e", "<A> (")[0] == EXIT_INPUT
        assert run_cli("check", s, "-e", "a", "--interval", "0,5")[0] == EXIT_INPUT
        assert run_cli("check", s + ".missing", "-e", "a")[0] == EXIT_INPUT
        bad = files("bad.txt", "points two\n")
        assert run_cli("check", bad, "-e", "a")[0] == EXIT_INPUT


class TestSat:
    def test_model_printed(self):
        code, text = run_cli("sat", "-e", "<A> a", "--max-points", "3")
        assert code == EXIT_OK
        M = parse_structure(text)
        assert M.n == 1 and "a" in M.label(0, 0)

    def test_none(self):
        assert run_cli("sat", "-e", "a & !a") == (EXIT_NEGATIVE, "NONE-WITHIN-BOUND\n")

    def test_anywhere(self):
        assert run_cli("sat", "-e", "~ & ![B] false", "--max-points", "2")[0] == EXIT_NEGATIVE
        code, text = run_cli("sat", "-e", "~ & ![B] false", "--max-points", "2", "--anywhere")
        assert code == EXIT_OK and parse_structure(text).sim(0, 1)


class TestSynth:
    def test_exit_codes(self):
        assert run_cli("synth", "-e", "<A> a", "--max-points", "3")[0] == EXIT_OK
        assert run_cli("synth", "-e", "a & !a")[0] == EXIT_NEGATIVE
        assert run_cli("synth", "-e", "<Ab> a")[0] == EXIT_INPUT
        assert run_cli("synth", "-e", "<A> a", "--spoiler", "zz")[0] == EXIT_INPUT

    def test_budget(self):
        text = to_text(with_injectivity(TWO_CORR))
        args = ("synth", "-e", text, "--spoiler", ",".join(SPOILER_LETTERS), "--max-points", "4")
        code, out = run_cli(*args, "--max-nodes", "50")
        assert code == EXIT_RESOURCE and out.startswith("RESOURCE")

    def test_repeated_output_identical(self):
        args = ("synth", "-e", "[A](p -> <A> q) & <A> !([B] false)", "--spoiler", "p", "--max-points", "3")
        first = run_cli(*args)
        assert first == run_cli(*args)
        assert first == run_cli(*args, "--workers", "2")


class TestEncode:
    MACHINE = "counters 1\nstate q0: ifz 1 goto qh else dec 1 goto q0\ninit q0\nhalt qh\n"

    @pytest.mark.parametrize("variant", ["aabb", "abbsim"])
    def test_output_parses(self, files, variant):
        m = files("m.cm", self.MACHINE)
        code, text = run_cli("encode-cm", m, "--variant", variant)
        assert code == EXIT_OK
        phi = T(text)
        assert run_cli("encode-cm", m, "--variant", variant) == (code, text)
        assert phi is not None

    def test_bad_machine(self, files):
        m = files("m.cm", "counters 1\nstate q0: jump\n")
        assert run_cli("encode-cm", m)[0] == EXIT_INPUT


class TestAtoms:
    def test_listing(self):
        code, text = run_cli("atoms", "-e", "a", "--limit", "3")
        lines = text.splitlines()
        assert code == EXIT_OK
        assert lines[0].startswith("atoms: ") and int(lines[0].split()[1]) > 3
        assert len(lines) == 4 and all(line.startswith("{") for line in lines[1:])


class TestValidate:
    def write_run(self, files, run) -> str:
        return files("run.txt", dump_run(run))

    def test_complete_successful(self, files):
        table = closure(T("<A> a"), ABB_SIM)
        a = table.id_of(T("a"))
        dia = table.id_of(T("<A> a"))
        run = empty_run(table)
        for iv, labels in [(Interval(0, 0), {dia}), (Interval(0, 1), {a, table.pi_id}), (Interval(1, 1), set())]:
            run = run.extend(Move(iv, frozenset(), Role.SPOILER), Move(iv, frozenset(labels), Role.DUPLICATOR))
        path = self.write_run(files, run)
        assert run_cli("validate", path, "-e", "<A> a") == (EXIT_OK, "COMPLETE SUCCESSFUL\n")

    def test_invalid(self, files):
        path = files("run.txt", "S 1 1 :\nD 1 1 :\n")
        code, text = run_cli("validate", path, "-e", "<A> a")
        assert code == EXIT_NEGATIVE
        assert text.startswith("INVALID") and "condition 2" in text

    def test_prefix(self, files):
        path = files("run.txt", "S 0 0 :\nD 0 0 :\n")
        code, text = run_cli("validate", path, "-e", "<A> a")
        assert text.startswith("COMPLETE")
        good = files("run2.txt", "S 0 0 :\nD 0 0 : <A> a\nS 0 1 :\nD 0 1 : a, <B> !false\n")
        code, text = run_cli("validate", good, "-e", "<A> a")
        assert (code, text) == (EXIT_OK, "PREFIX (2 pairs, no violation seen; not conclusive)\n")
        bad = files("run3.txt", "S 0 0 :\nD 0 0 :\nS 0 1 :\nD 0 1 :\n")
        code, text = run_cli("validate", bad, "-e", "<A> a")
        assert code == EXIT_NEGATIVE and "the formula is false on [0,0]" in text


class TestPlay:
    def test_spoiler_session(self):
        out = io.StringIO()
        script = "0 0\n0 0\n0 1\n1 1\n"
        code = play_session(T("<A> a"), [], Limits(max_points=3), "spoiler", io.StringIO(script), out)
        text = out.getvalue()
        lines = text.splitlines()
        assert lines[2] == "legal: [0,0]"
        assert "visited twice" in text and "condition 2" in text
        assert code == EXIT_OK and "SUCCESS" in lines[-1]

    def test_duplicator_session(self):
        table = closure(T("<A> a"))
        dia, a = table.id_of(T("<A> a")), table.id_of(T("a"))
        out = io.StringIO()
        script = f"1 1\n0 0 {dia}\n0 1 {a},{table.pi_id}\n1 1\n"
        code = play_session(T("<A> a"), [], Limits(max_points=3), "duplicator", io.StringIO(script), out)
        text = out.getvalue()
        assert "rejected: Spoiler played [0,0]" in text
        assert code == EXIT_OK and text.rstrip().endswith("complete and successful")

    def test_unrealizable(self):
        out = io.StringIO()
        code = play_session(T("a & !a"), [], Limits(max_points=2), "spoiler", io.StringIO(""), out)
        assert code == EXIT_NEGATIVE and "no Duplicator strategy" in out.getvalue()

    def test_random_sessions_stay_legal(self):
        # accepted Spoiler moves always form a legal run, whatever is typed
        rng = random.Random(41)
        phi = T("[A](p -> <A> q) & <A> !([B] false)")
        table = closure(phi)
        accepted_total = 0
        for _ in range(30):
            lines = []
            for _ in range(12):
                x = rng.randrange(3)
                y = rng.randrange(x, 3)
                lines.append(f"{x} {y} {'p' if rng.random() < 0.5 else ''}")
            out = io.StringIO()
            play_session(phi, ["p"], Limits(max_points=3), "spoiler", io.StringIO("\n".join(lines) + "\n"), out)
            replies = [chunk.splitlines()[0] for chunk in out.getvalue().split("\n> ")[1:]]
            run = empty_run(table)
            for line, reply in zip(lines, replies):
                if reply.startswith("duplicator:"):
                    x, y = map(int, line.split()[:2])
                    iv = Interval(x, y)
                    run = run.extend(Move(iv, frozenset(), Role.SPOILER), Move(iv, frozenset(), Role.DUPLICATOR))
                    accepted_total += 1
                else:
                    assert reply.startswith("rejected:"), reply
            assert validate_run(run) == []
        assert accepted_total > 30
