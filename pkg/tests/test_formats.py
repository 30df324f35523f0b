"""Text-format export/import: round-trip fidelity and frozen goldens."""

import numpy as np
import pytest

from ballqp.examples import ball_example, linear_example
from ballqp.formats import export_cbf, export_sdpa, parse_cbf, parse_sdpa
from ballqp.generators import gen_linear, gen_maxnorm, rng_from_seed
from ballqp.instances import lift
from ballqp.program import ConicProgram
from ballqp.relaxations import RelaxationKind, build_relaxation
from ballqp.solve import solve, solve_standard_form


def _trivial():
    return ConicProgram(1, np.array([[1.0]]), (), name="trivial")


def _all_programs():
    """One program of every builder kind, on small instances."""
    lin = lift(gen_linear(2, rng_from_seed(21)))
    ball = lift(gen_maxnorm(2, 3, rng_from_seed(21)))
    kinds_lin = (RelaxationKind.SHOR_LINEAR, RelaxationKind.KRON_LINEAR,
                 RelaxationKind.BETA_LINEAR, RelaxationKind.BETA0_LINEAR)
    kinds_ball = (RelaxationKind.SHOR_BALLS, RelaxationKind.KRON_BALLS,
                  RelaxationKind.BETA_BALLS)
    progs = [build_relaxation(lin, k) for k in kinds_lin]
    progs += [build_relaxation(ball, k) for k in kinds_ball]
    return progs


def test_cbf_round_trip_all_kinds():
    for prog in _all_programs():
        text = export_cbf(prog)
        back = parse_cbf(text)
        assert back.var_dim == prog.var_dim
        assert back.name == prog.name
        assert [c.label for c in back.constraints] == [c.label for c in prog.constraints]
        direct = solve(prog)
        again = solve(back)
        assert again.ok
        rel = abs(again.obj_value - direct.obj_value) / (1.0 + abs(direct.obj_value))
        assert rel < 1e-6, prog.name
        # idempotence: a reparsed program prints identically
        assert export_cbf(back) == text, prog.name


def test_sdpa_round_trip_all_kinds():
    # internal minimum = -(file-primal minimum), per the header comment
    for prog in _all_programs():
        text = export_sdpa(prog)
        prob = parse_sdpa(text)
        form = prob.to_standard_form()
        status, x, _ = solve_standard_form(form)
        assert status.ok, prog.name
        file_opt = float(form.c @ x)
        direct = solve(prog).obj_value
        rel = abs(-file_opt - direct) / (1.0 + abs(direct))
        assert rel < 1e-6, prog.name


def test_cbf_golden_trivial(golden_dir):
    assert export_cbf(_trivial()) == (golden_dir / "trivial.cbf").read_text()


def test_sdpa_golden_trivial(golden_dir):
    assert export_sdpa(_trivial()) == (golden_dir / "trivial.sdpa").read_text()


def test_cbf_golden_example(golden_dir):
    prog = build_relaxation(lift(linear_example()), RelaxationKind.BETA_LINEAR)
    assert export_cbf(prog) == (golden_dir / "linear_ex_beta.cbf").read_text()


def test_sdpa_golden_example(golden_dir):
    prog = build_relaxation(lift(ball_example()), RelaxationKind.BETA_BALLS)
    assert export_sdpa(prog) == (golden_dir / "ball_ex_beta.sdpa").read_text()


def test_sdpa_soc_becomes_arrow_block():
    # an SOC row of length n+1 lifts to a PSD block of the same order
    prog = build_relaxation(lift(gen_linear(3, rng_from_seed(2))),
                            RelaxationKind.BETA_LINEAR)
    prob = parse_sdpa(export_sdpa(prog))
    assert 4 in prob.block_struct  # arrow block for SOC^4
    assert prob.block_struct[0] == prog.var_dim  # moment matrix first
    assert prob.block_struct[-1] < 0  # trailing diagonal slack block


def test_parse_cbf_rejects_garbage():
    with pytest.raises(ValueError):
        parse_cbf("VER\n3\n\nNOSECTION\n1\n")


def test_parse_sdpa_handles_comments_and_braces():
    text = export_sdpa(_trivial())
    decorated = '"extra comment line\n' + text.replace(" ", ", ", 3)
    prob = parse_sdpa(decorated)
    assert prob.m == parse_sdpa(text).m


def test_trivial_round_trip_value():
    sol = solve(parse_cbf(export_cbf(_trivial())))
    assert sol.obj_value == pytest.approx(1.0, abs=1e-8)
    form = parse_sdpa(export_sdpa(_trivial())).to_standard_form()
    status, x, _ = solve_standard_form(form)
    assert status.ok
    assert -float(form.c @ x) == pytest.approx(1.0, abs=1e-8)
