"""Symplectic analysis: form assembly, constraint iteration, bracket tables,
coarse Hamilton-Jacobi flow, and the coarse Dirac bracket."""

import math
import pathlib
import random

import pytest

import fracsymp
from fracsymp.expr import ONE, ZERO, evaluate, parse_expression, simplify, to_text
from fracsymp.frac import gamma
from fracsymp.modelfile import parse_model_file
from fracsymp.serialize import render_json
from fracsymp.symplectic import (
    GAUGE_THEORY,
    INCONSISTENT,
    REGULAR,
    DegenerateConstraintMatrix,
    Model,
    ModelError,
    SingularForm,
    assemble_form,
    brackets_to_commutators,
    coarse_dirac_bracket,
    coarse_hamilton_jacobi,
    constraints_from_zero_modes,
    extend_model,
    fj_iterate,
    fractional_equations_of_motion,
    invert_form,
    momentum_name,
    primary_constraints,
)

MODELS = pathlib.Path(fracsymp.__file__).parent / "models"


def ex(text, names):
    return parse_expression(text, variables=names)


def canonical_pair(alpha=1.0):
    names = ("q", "p")
    kin = tuple(ex(t, names) for t in ("p", "0"))
    return Model(names, kin, ex("1/2*(q^2 + p^2)", names), alpha, {}, ())


def three_var(potential_text):
    names = ("q", "p", "z")
    kin = tuple(ex(t, names) for t in ("p", "0", "0"))
    return Model(names, kin, ex(potential_text, names), 1.0, {}, ())


def two_pair():
    names = ("q1", "q2", "p1", "p2")
    kin = tuple(ex(t, names) for t in ("p1", "p2", "0", "0"))
    return Model(names, kin, ex("1/2*(q1^2 + q2^2 + p1^2 + p2^2)", names),
                 1.0, {}, ())


# -- model validation --------------------------------------------------------

def test_model_rejects_kinetic_count_mismatch():
    names = ("q", "p")
    with pytest.raises(ModelError):
        Model(names, (ex("p", names),), ex("0", names), 1.0, {}, ())


def test_model_rejects_duplicate_names():
    names = ("q", "q")
    kin = (ex("0", ("q",)), ex("0", ("q",)))
    with pytest.raises(ModelError):
        Model(names, kin, ex("0", ("q",)), 1.0, {}, ())


def test_model_rejects_bad_order():
    with pytest.raises(ValueError):
        canonical_pair(alpha=1.5)


def test_model_rejects_undeclared_names():
    names = ("q", "p")
    kin = tuple(ex(t, names) for t in ("p", "0"))
    with pytest.raises(ModelError):
        Model(names, kin, parse_expression("w^2", variables=("w",)), 1.0, {}, ())


def test_model_alpha_always_a_legal_name():
    names = ("q", "p")
    kin = (parse_expression("Gamma(1 + alpha)*p", variables=names),
           ex("0", names))
    m = Model(names, kin, ex("0", names), None, {}, ())
    assert m.alpha is None


# -- form assembly and inversion --------------------------------------------

def test_assemble_canonical_form():
    f = assemble_form(canonical_pair())
    vals = [[evaluate(x, {"q": 0.0, "p": 0.0}) for x in row] for row in f.entries]
    assert vals == [[0.0, -1.0], [1.0, 0.0]]
    assert f.rank == 2
    assert f.null_basis == ()


def test_invert_canonical_form():
    inv = invert_form(assemble_form(canonical_pair()))
    vals = [[evaluate(x, {}) for x in row] for row in inv]
    assert vals == [[0.0, 1.0], [-1.0, 0.0]]


def test_form_antisymmetry_on_corpus():
    for name in ("canonical_pair", "landau_full", "constrained_3d"):
        doc = parse_model_file(MODELS / (name + ".model"))
        f = assemble_form(doc.model)
        n = len(doc.model.variables)
        for i in range(n):
            for j in range(n):
                s = simplify(parse_expression("0"))
                lhs = simplify(f.entries[i][j])
                rhs = simplify(parse_expression(
                    "-(" + to_text(f.entries[j][i]) + ")",
                    variables=doc.model.variables + tuple(doc.model.constants)))
                assert to_text(lhs) == to_text(rhs) or (lhs == s and rhs == s)


def test_singular_form_raises_on_invert():
    f = assemble_form(three_var("1/2*(q^2 + p^2)"))
    assert f.rank == 2
    assert f.null_basis == (((0, 0, 1)),) or len(f.null_basis) == 1
    with pytest.raises(SingularForm):
        invert_form(f)


def test_zero_mode_contraction():
    m = three_var("1/2*(q^2 + p^2) + z*q")
    f = assemble_form(m)
    cs = constraints_from_zero_modes(f, m)
    assert [to_text(c) for c in cs] == ["q"]


def test_gauge_direction_yields_no_constraint():
    m = three_var("1/2*(q^2 + p^2)")
    cs = constraints_from_zero_modes(assemble_form(m), m)
    assert cs == []


def test_extend_model_adds_multiplier_kinetic():
    m = canonical_pair()
    ext = extend_model(m, (ex("q", m.variables),))
    assert ext.variables == ("q", "p", "lam_1")
    assert to_text(ext.kinetic[0]) == "lam_1 + p"
    assert to_text(ext.kinetic[1]) == "0"
    assert to_text(ext.kinetic[2]) == "0"


# -- the iteration on the bundled corpus ------------------------------------

def test_canonical_pair_is_regular_with_unit_bracket():
    doc = parse_model_file(MODELS / "canonical_pair.model")
    chain, table = fj_iterate(doc.model, doc.gauge_conditions)
    assert chain.status == REGULAR
    assert chain.levels == ()
    assert to_text(table.entry("q", "p")) == "1"
    assert to_text(table.entry("p", "q")) == "-1"
    assert to_text(table.entry("q", "q")) == "0"


def test_landau_strong_symbolic_bracket():
    doc = parse_model_file(MODELS / "landau_strong.model")
    chain, table = fj_iterate(doc.model, doc.gauge_conditions)
    assert chain.status == REGULAR
    assert table.alpha is None
    assert to_text(table.entry("r1", "r2")) == "B^(-1)*e^(-1)*Gamma(1 + alpha)^(-1)"
    got = evaluate(table.entry("r1", "r2"), {"e": 1.0, "B": 1.0, "alpha": 1e-8})
    assert abs(got - 1.0 / gamma(1.0 + 1e-8)) < 1e-12


def test_constrained_model_runs_the_chain():
    doc = parse_model_file(MODELS / "constrained_3d.model")
    chain, table = fj_iterate(doc.model, doc.gauge_conditions)
    assert chain.status == REGULAR
    assert [to_text(c) for lev in chain.levels for c in lev.constraints] == ["q", "p"]
    assert [lev.multipliers for lev in chain.levels] == [("lam_1",), ("lam_2",)]
    assert any("pruned" in n for n in chain.notes)
    assert table.variables == ("q", "p")
    assert to_text(table.entry("q", "p")) == "0"


def test_gauge_theory_detected_and_reported():
    doc = parse_model_file(MODELS / "gauge_demo.model")
    chain, table = fj_iterate(doc.model, doc.gauge_conditions)
    assert chain.status == GAUGE_THEORY
    assert table is None
    assert any("gauge" in n for n in chain.notes)


def test_gauge_condition_restores_regularity():
    doc = parse_model_file(MODELS / "gauge_demo.model")
    gc = (ex("z", doc.model.variables),)
    chain, table = fj_iterate(doc.model, gc)
    assert chain.status == REGULAR
    assert table is not None
    assert to_text(table.entry("q", "p")) == "1"


def test_inconsistent_model_terminates():
    m = three_var("1/2*(q^2 + p^2) + z")
    chain, table = fj_iterate(m)
    assert chain.status == INCONSISTENT
    assert table is None
    assert any("nonzero constant" in n for n in chain.notes)


def test_landau_full_reduces_to_strong_bracket():
    doc = parse_model_file(MODELS / "landau_full.model")
    chain, table = fj_iterate(doc.model, doc.gauge_conditions)
    assert chain.status == REGULAR
    assert table is not None


# -- equations of motion and coarse flow ------------------------------------

def test_equations_of_motion_canonical():
    eqs = dict(fractional_equations_of_motion(canonical_pair(0.5)))
    assert to_text(eqs["q"]) == "p"
    assert to_text(eqs["p"]) == "-q"


def test_coarse_hamilton_jacobi_classical():
    eqs = dict(coarse_hamilton_jacobi(canonical_pair(1.0)))
    assert to_text(eqs["q"]) == "p"
    assert to_text(eqs["p"]) == "-q"


def test_coarse_hamilton_jacobi_half_order():
    eqs = dict(coarse_hamilton_jacobi(canonical_pair(0.5)))
    got = evaluate(eqs["q"], {"q": 0.0, "p": 1.0})
    assert abs(got - 1.0 / gamma(1.5) ** 2) < 1e-12
    assert abs(got - 1.2732395447351628) < 1e-12


def test_coarse_hamilton_jacobi_with_constraint_multiplier():
    m = canonical_pair(1.0)
    cons = (ex("q", m.variables),)
    eqs = dict(coarse_hamilton_jacobi(m, cons, {"lam_1": 2.0}))
    # effective potential gains lam * q, shifting the p equation by -lam
    got = evaluate(eqs["p"], {"q": 0.5, "p": 0.0})
    assert abs(got - (-0.5 - 2.0)) < 1e-12


def test_coarse_hamilton_jacobi_needs_even_dimension():
    with pytest.raises(ModelError):
        coarse_hamilton_jacobi(three_var("q"))


# -- coarse Dirac bracket ----------------------------------------------------

def test_dirac_bracket_unconstrained_classical():
    m = canonical_pair(1.0)
    q = ex("q", m.variables)
    p = ex("p", m.variables)
    assert abs(coarse_dirac_bracket(q, p, m, point={"q": 0.3, "p": 0.9}) - 1.0) < 1e-14


def test_dirac_bracket_unconstrained_half_order():
    m = canonical_pair(0.5)
    q = ex("q", m.variables)
    p = ex("p", m.variables)
    got = coarse_dirac_bracket(q, p, m, point={"q": 0.3, "p": 0.9})
    assert abs(got - 1.0 / gamma(1.5) ** 2) < 1e-12


def test_dirac_bracket_freezes_constrained_pair():
    m = two_pair()
    names = m.variables
    pt = {"q1": 0.1, "q2": 0.2, "p1": 0.3, "p2": 0.4}
    cons = [ex("q1", names), ex("p1", names)]
    kept = coarse_dirac_bracket(ex("q2", names), ex("p2", names), m, cons, pt)
    frozen = coarse_dirac_bracket(ex("q1", names), ex("p1", names), m, cons, pt)
    assert abs(kept - 1.0) < 1e-10
    assert abs(frozen) < 1e-10


def test_dirac_bracket_degenerate_constraints():
    m = two_pair()
    names = m.variables
    pt = {"q1": 0.1, "q2": 0.2, "p1": 0.3, "p2": 0.4}
    cons = [ex("q1", names), ex("q2", names)]
    with pytest.raises(DegenerateConstraintMatrix):
        coarse_dirac_bracket(ex("q1", names), ex("p1", names), m, cons, pt)


def test_dirac_bracket_matches_chain_output():
    doc = parse_model_file(MODELS / "constrained_3d.model")
    chain, table = fj_iterate(doc.model, doc.gauge_conditions)
    cons = [c for lev in chain.levels for c in lev.constraints]
    q = ex("q", doc.model.variables)
    p = ex("p", doc.model.variables)
    pt = {"q": 0.2, "p": -0.4, "z": 0.1}
    direct = coarse_dirac_bracket(q, p, doc.model, cons, pt)
    from_table = evaluate(table.entry("q", "p"), doc.model.binding(pt))
    assert abs(direct - from_table) < 1e-9


def test_primary_constraints_on_doubled_space():
    m = canonical_pair()
    assert momentum_name("q") == "mom_q"
    assert [to_text(c) for c in primary_constraints(m)] == ["mom_q - p", "mom_p"]


# -- invariants --------------------------------------------------------------

def test_classical_limit_consistency_at_random_points():
    rng = random.Random(20260822)
    doc = parse_model_file(MODELS / "canonical_pair.model")
    m = doc.model
    q = ex("q", m.variables)
    p = ex("p", m.variables)
    chain, table = fj_iterate(m)
    for _ in range(5):
        pt = {"q": rng.uniform(0.2, 2.0), "p": rng.uniform(0.2, 2.0)}
        from_table = evaluate(table.entry("q", "p"), m.binding(pt))
        from_dirac = coarse_dirac_bracket(q, p, m, point=pt)
        assert abs(from_table - 1.0) < 1e-9
        assert abs(from_dirac - 1.0) < 1e-9


def test_kinetic_scaling_scales_bracket_inversely():
    names = ("q", "p")
    kin = tuple(ex(t, names) for t in ("3*p", "0"))
    m = Model(names, kin, ex("1/2*(q^2 + p^2)", names), 1.0, {}, ())
    chain, table = fj_iterate(m)
    got = evaluate(table.entry("q", "p"), {})
    assert abs(got - 1.0 / 3.0) < 1e-14


def test_bracket_alpha_continuity_near_one():
    doc = parse_model_file(MODELS / "landau_strong.model")
    chain, table = fj_iterate(doc.model)
    at_one = evaluate(table.entry("r1", "r2"), {"e": 1.0, "B": 1.0, "alpha": 1.0})
    near_one = evaluate(table.entry("r1", "r2"),
                        {"e": 1.0, "B": 1.0, "alpha": 1.0 - 1e-6})
    assert abs(at_one - 1.0) < 1e-14
    assert abs(near_one - at_one) < 1e-5


def test_form_times_inverse_is_identity():
    doc = parse_model_file(MODELS / "landau_full.model")
    f = assemble_form(doc.model)
    inv = invert_form(f)
    n = len(doc.model.variables)
    binding = {"e": 1.0, "B": 1.0, "m": 1.0, "alpha": 0.7}
    mat = [[evaluate(f.entries[i][j], binding) for j in range(n)] for i in range(n)]
    imat = [[evaluate(inv[i][j], binding) for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(n):
            s = sum(mat[i][k] * imat[k][j] for k in range(n))
            assert abs(s - (1.0 if i == j else 0.0)) < 1e-12


# -- serialization ----------------------------------------------------------

def test_bracket_table_json_shape():
    doc = parse_model_file(MODELS / "landau_strong.model")
    chain, table = fj_iterate(doc.model)
    d = table.to_json_dict()
    assert d["variables"] == ["r1", "r2"]
    assert d["alpha"] == "symbolic"
    assert d["brackets"][0][1] == "B^(-1)*e^(-1)*Gamma(1 + alpha)^(-1)"
    assert set(d["normalizations"]) == {"section_5_2", "section_6_3"}
    assert d["convention"] == "f_ij = d a_j / d eta_i - d a_i / d eta_j"


def test_bracket_table_json_deterministic():
    doc = parse_model_file(MODELS / "landau_strong.model")
    _, t1 = fj_iterate(doc.model)
    _, t2 = fj_iterate(doc.model)
    assert render_json(t1.to_json_dict()) == render_json(t2.to_json_dict())


def test_commutator_table():
    chain, table = fj_iterate(canonical_pair())
    ct = brackets_to_commutators(table, 1.0)
    assert ct.commutators is not None
    texts = [[to_text(x) for x in row] for row in ct.commutators]
    assert texts == [["0", "1"], ["-1", "0"]]
    d = ct.to_json_dict()
    assert d["commutators"] is not None
