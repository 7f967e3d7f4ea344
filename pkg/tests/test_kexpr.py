"""Tests for the virtual-sheaf rewriting engine.

Expected canonical forms are hand-derived and frozen; chain displays are
rebuilt independently through the tree API before comparison.
"""

import dataclasses
import json
import random
from math import comb

import pytest

from detlam import kexpr as kx
from detlam.combinat import coeff_table, pk_poly
from detlam.kexpr import (
    AXIOMS,
    Atom,
    ChainScript,
    ChainStep,
    Dual,
    Lam,
    LamProd,
    Lin,
    O,
    Push,
    ScriptError,
    Sym,
    T,
    Ten,
    UnsupportedExpression,
    chain_verify,
    corrupt_script,
    get_chain,
    lin,
    multiadditivity_expand,
    normalize,
    normalize_expr,
    o_minus,
    parse_expr,
    render_expr,
    script_from_obj,
    script_to_obj,
    shipped_chain,
    to_expr,
    tpow,
)

A, B, L, M = Atom("A"), Atom("B"), Atom("L"), Atom("M")


def mono(*factors, twist=0):
    return (tuple(sorted(factors)), twist)


def at(name, dual=0):
    return ("atom", name, 0, dual)


class TestNormalize:
    def test_unit(self):
        assert normalize(O) == ((((), 0), 1),)

    def test_twist_square_is_unit(self):
        assert normalize(Ten(T, T)) == normalize(O)
        assert normalize(Ten(T, T, T)) == normalize(T)

    def test_atom(self):
        assert normalize(A) == ((mono(at("A")), 1),)

    def test_dual_involution(self):
        assert normalize(Dual(Dual(A))) == normalize(A)
        e = Ten(A, Lin((2, B), (-1, T)))
        assert normalize(Dual(Dual(e))) == normalize(e)

    def test_dual_distributes_over_tensor(self):
        got = normalize(Dual(Ten(A, B)))
        assert got == ((mono(at("A", 1), at("B", 1)), 1),)

    def test_dual_fixes_twist(self):
        assert normalize(Dual(T)) == normalize(T)

    def test_difference_of_squares(self):
        got = normalize(Ten(o_minus(L), Lin((1, O), (1, L))))
        want = normalize(Lin((1, O), (-1, Ten(L, L))))
        assert got == want

    def test_lin_merges_and_cancels(self):
        assert normalize(Lin((1, A), (2, A), (-3, A))) == ()
        assert normalize(Lin((1, A), (1, B), (-1, A))) == normalize(B)

    def test_nested_tensor_associates(self):
        assert normalize(Ten(A, Ten(B, L))) == normalize(Ten(Ten(A, B), L))

    def test_empty_tensor_is_unit(self):
        assert normalize(Ten()) == normalize(O)
        assert tpow(A, 0) is O

    def test_sym_of_atom(self):
        assert normalize(Sym(3, A)) == ((mono(("sym", "A", 3, 0)), 1),)

    def test_sym_one_is_identity(self):
        assert normalize(Sym(1, Ten(A, B))) == normalize(Ten(A, B))

    def test_sym_zero_is_unit(self):
        assert normalize(Sym(0, Ten(A, B))) == normalize(O)

    def test_sym_of_dual_atom(self):
        assert normalize(Sym(2, Dual(A))) == ((mono(("sym", "A", 2, 1)), 1),)

    def test_sym_of_twisted_atom_tracks_parity(self):
        got = normalize(Sym(3, Ten(A, T)))
        assert got == ((((("sym", "A", 3, 0),), 1), 1),)
        got2 = normalize(Sym(2, Ten(A, T)))
        assert got2 == ((((("sym", "A", 2, 0),), 0), 1),)

    def test_sym_outside_fragment(self):
        with pytest.raises(UnsupportedExpression):
            normalize(Sym(2, Lin((1, A), (1, B))))
        with pytest.raises(UnsupportedExpression):
            normalize(Sym(2, Ten(A, B)))
        with pytest.raises(UnsupportedExpression):
            normalize(Sym(2, Sym(2, A)))
        with pytest.raises(UnsupportedExpression):
            normalize(Sym(2, Lin((2, A))))
        with pytest.raises(UnsupportedExpression):
            normalize(Sym(-1, A))

    def test_push_of_binder_powers(self):
        inner = tpow(Lin((1, O), (1, Ten(Atom("N"), T))), 2)
        got = normalize(Push("N", inner))
        want = {
            ((), 0): 1,
            ((("push", "N", 1, 0),), 0): 2,
            ((("push", "N", 2, 0),), 0): 1,
        }
        assert got == tuple(sorted(want.items()))

    def test_push_twist_bookkeeping(self):
        got = normalize(Push("N", Ten(Atom("N"), Atom("N"), T)))
        assert got == ((((("push", "N", 2, 0),), 1), 1),)

    def test_push_rejects_foreign_atoms(self):
        with pytest.raises(UnsupportedExpression):
            normalize(Push("N", Ten(Atom("N"), A)))

    def test_lambda_wrapper_rejected_inside_sheaf_context(self):
        with pytest.raises(UnsupportedExpression):
            normalize_expr(Lam(A, 1))
        with pytest.raises(UnsupportedExpression):
            normalize(Ten(A, Lam(B, 1)))

    def test_lambda_of_sum_distributes(self):
        got = normalize(Lam(Lin((2, A), (-1, B)), 3))
        assert dict(got) == {mono(at("A")): 6, mono(at("B")): -3}

    def test_lambda_product_merges_exponents(self):
        got = normalize(LamProd(Lam(A, 2), Lam(A, -2), Lam(B, 5)))
        assert dict(got) == {mono(at("B")): 5}

    def test_to_expr_round_trip(self):
        e = Ten(o_minus(L), Lin((3, A), (1, Ten(B, T))), Dual(A))
        c = normalize(e)
        assert normalize(to_expr(c)) == c


class TestPkTree:
    @pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
    def test_matches_coefficient_polynomial(self, k):
        arg = o_minus(L)
        direct = Lin(
            *((c, tpow(arg, m)) for m, c in enumerate(pk_poly(k).coeffs))
        )
        assert normalize(direct) == normalize(kx._pk_tree(k, arg))

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_telescoping_identity_on_trees(self, k):
        arg = o_minus(L)
        lhs = Ten(arg, kx._pk_tree(k, arg))
        rhs = Lin((2 ** (k + 1), O), (-1, tpow(Lin((2, O), (-1, arg)), k + 1)))
        assert normalize(lhs) == normalize(rhs)

    @pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
    def test_expansion_coefficients(self, k):
        got = dict(normalize(kx._pk_tree(k, o_minus(L))))
        for j in range(k + 1):
            want = sum(2 ** (k - i) * comb(i, j) for i in range(j, k + 1))
            assert got[mono(*([at("L")] * j))] == want
        assert got[mono()] == int(pk_poly(k)(1))
        assert sum(got.values()) == (k + 1) * 2 ** k


class TestChains:
    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_a_k_verifies(self, k):
        rep = chain_verify(get_chain("invfunc-a-k", k))
        assert rep.ok and rep.endpoint_ok and rep.failed_step is None
        assert len(rep.rows) == 11
        assert all(row["ok"] for row in rep.rows)
        assert all(row["law"] for row in rep.rows)

    def test_a_k_start_state_frozen(self):
        s = get_chain("invfunc-a-k", 1)
        got = dict(normalize(s.start))
        assert got == {mono(at("iM")): 3, mono(at("iM"), at("iL")): 1}

    def test_a_k_end_state_frozen(self):
        s = get_chain("invfunc-a-k", 1)
        got = dict(normalize(s.end))
        want = {
            mono(at("M")): 4,
            mono(at("qMm")): 1,
            mono(at("qMm"), at("J")): -2,
            mono(at("qMm"), at("J"), at("J")): 1,
            mono(at("qMp")): -1,
            mono(at("qMp"), at("J")): 2,
            mono(at("qMp"), at("J"), at("J")): -1,
        }
        assert got == want

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_l_p_verifies(self, d):
        rep = chain_verify(get_chain("invfunc-l-p", d))
        assert rep.ok and rep.endpoint_ok
        assert len(rep.rows) == 5

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_l_p_end_exponent_ties_to_coefficient_table(self, d):
        s = get_chain("invfunc-l-p", d)
        got = dict(normalize(s.end))
        assert got == {mono(at("M")): 2 ** (d + 1)}
        assert coeff_table(d).lhs_exponent == (2 ** (d + 1)) ** 2

    def test_multadd_verifies_to_unit(self):
        s = get_chain("multadd-d1")
        rep = chain_verify(s)
        assert rep.ok
        assert normalize(s.end) == ()

    def test_unknown_chain(self):
        with pytest.raises(ScriptError):
            get_chain("no-such-chain")

    def test_degenerate_parameters_rejected(self):
        with pytest.raises(ScriptError):
            get_chain("invfunc-a-k", 0)
        with pytest.raises(ScriptError):
            get_chain("invfunc-l-p", 0)

    def test_failed_match_is_reported_not_raised(self):
        good = get_chain("invfunc-a-k", 1)
        bad_step = ChainStep(
            "iso-subst",
            0,
            {"src": "zz", "dst": "ww"},
            "x",
            good.steps[0].expected,
        )
        script = ChainScript("bad", good.start, good.end, (bad_step,) + good.steps[1:])
        rep = chain_verify(script)
        assert not rep.ok and rep.failed_step == 1
        assert "zz" in rep.rows[0]["witness"]["error"]

    def test_position_out_of_range_is_reported(self):
        good = get_chain("invfunc-a-k", 1)
        bad_step = ChainStep(
            "line-twist-flip", 5, {"atom": "iL"}, "a", good.steps[0].expected
        )
        script = ChainScript("bad", good.start, good.end, (bad_step,))
        rep = chain_verify(script)
        assert not rep.ok and rep.failed_step == 1

    def test_endpoint_mismatch_detected(self):
        good = get_chain("invfunc-l-p", 1)
        script = ChainScript(
            "bad-end", good.start, Lam(Atom("M"), 3), good.steps, good.params
        )
        rep = chain_verify(script)
        assert not rep.ok and rep.failed_step is None
        assert rep.reason == "endpoint mismatch"

    def test_report_serializes(self):
        rep = chain_verify(get_chain("multadd-d1"))
        obj = rep.to_obj()
        json.dumps(obj)
        assert obj["ok"] and len(obj["steps"]) == 5


class TestCorruption:
    @pytest.mark.parametrize("name", ["invfunc-a-k", "invfunc-l-p", "multadd-d1"])
    def test_every_single_step_corruption_fails_there(self, name):
        script = get_chain(name, 1)
        for i in range(1, len(script.steps) + 1):
            rep = chain_verify(corrupt_script(script, i))
            assert not rep.ok
            assert rep.failed_step == i
            assert rep.rows[-1]["witness"]

    def test_corrupt_bounds(self):
        script = get_chain("multadd-d1")
        with pytest.raises(ScriptError):
            corrupt_script(script, 0)
        with pytest.raises(ScriptError):
            corrupt_script(script, 6)

    def test_corrupt_keeps_original_intact(self):
        script = get_chain("invfunc-l-p", 2)
        corrupt_script(script, 3)
        assert chain_verify(script).ok

    def test_swapped_steps_fail_at_first_mismatch(self):
        """Swapping the two cancellation steps f and g is caught.

        Both displays carry the same formal sum, so no mismatch exists at
        the swapped positions themselves; the first detectable mismatch is
        the next position-addressed step (h), because the state adopted the
        wrong factor grouping.
        """
        script = get_chain("invfunc-a-k", 1)
        steps = list(script.steps)
        assert steps[5].note == "f" and steps[6].note == "g"
        steps[5], steps[6] = steps[6], steps[5]
        swapped = dataclasses.replace(script, steps=tuple(steps))
        rep = chain_verify(swapped)
        assert not rep.ok
        assert rep.failed_step == 8


class TestScriptSerialization:
    @pytest.mark.parametrize("name", ["invfunc-a-k", "invfunc-l-p", "multadd-d1"])
    def test_round_trip_byte_stable(self, name):
        script = get_chain(name, 1)
        blob = json.dumps(script_to_obj(script), sort_keys=True)
        again = script_from_obj(json.loads(blob))
        assert chain_verify(again).ok
        assert json.dumps(script_to_obj(again), sort_keys=True) == blob

    @pytest.mark.parametrize("name", ["invfunc-a-k", "invfunc-l-p", "multadd-d1"])
    def test_shipped_files_match_builders(self, name):
        shipped = shipped_chain(name)
        assert chain_verify(shipped).ok
        assert script_to_obj(shipped) == script_to_obj(get_chain(name, 1))

    def test_shipped_missing(self):
        with pytest.raises(ScriptError):
            shipped_chain("no-such-chain")

    def test_file_round_trip(self, tmp_path):
        path = tmp_path / "chain.json"
        script = get_chain("invfunc-l-p", 3)
        path.write_text(json.dumps(script_to_obj(script)), encoding="utf-8")
        again = kx.script_from_file(str(path))
        assert chain_verify(again).ok
        assert again.params == {"d": 3}

    def test_malformed_script_objects(self):
        with pytest.raises(ScriptError):
            script_from_obj({"steps": []})
        good = script_to_obj(get_chain("multadd-d1"))
        bad = json.loads(json.dumps(good))
        bad["steps"][0]["axiom"] = "definitely-not-an-axiom"
        with pytest.raises(ScriptError):
            script_from_obj(bad)

    def test_step_requires_expected_display(self):
        with pytest.raises(ScriptError):
            ChainStep("cancel", 0, {}, "x", None)


class TestExpressionStrings:
    def test_render_parse_round_trip_on_chain_displays(self):
        for name in ["invfunc-a-k", "invfunc-l-p", "multadd-d1"]:
            script = get_chain(name, 1)
            for e in [script.start, script.end] + [s.expected for s in script.steps]:
                back = parse_expr(render_expr(e))
                assert normalize(back) == normalize(e)

    def test_parse_simple_forms(self):
        assert parse_expr("O") is O or isinstance(parse_expr("O"), type(O))
        assert normalize(parse_expr("(* A B)")) == normalize(Ten(A, B))
        assert normalize(parse_expr("(lin 2 A -1 B)")) == normalize(
            Lin((2, A), (-1, B))
        )
        assert normalize(parse_expr("(dual (sym 2 A))")) == normalize(
            Dual(Sym(2, A))
        )
        assert normalize(parse_expr("(push N (* N N))")) == normalize(
            Push("N", Ten(Atom("N"), Atom("N")))
        )

    @pytest.mark.parametrize(
        "text",
        [
            "(",
            "(* A",
            "(* A)) B",
            "(frob A)",
            "(lin 1)",
            "(sym A A)",
            "3",
            "(lam A)",
            "",
        ],
    )
    def test_parse_rejects(self, text):
        with pytest.raises(ScriptError):
            parse_expr(text)


def _random_tree(rng, depth):
    names = ["A", "B", "L"]
    if depth == 0:
        return rng.choice([O, T, Atom(rng.choice(names))])
    pick = rng.randrange(8)
    if pick == 0:
        return O
    if pick == 1:
        return T
    if pick == 2:
        return Atom(rng.choice(names))
    if pick == 3:
        return Dual(_random_tree(rng, depth - 1))
    if pick == 4:
        base = Atom(rng.choice(names))
        if rng.random() < 0.5:
            base = Dual(base)
        return Sym(rng.randrange(4), base)
    if pick == 5:
        n = rng.randrange(2, 4)
        return Ten(*(_random_tree(rng, depth - 1) for _ in range(n)))
    n = rng.randrange(1, 4)
    return Lin(
        *(
            (rng.randrange(-3, 4), _random_tree(rng, depth - 1))
            for _ in range(n)
        )
    )


def _scramble(rng, e):
    if isinstance(e, Ten):
        kids = [_scramble(rng, f) for f in e.factors]
        rng.shuffle(kids)
        if len(kids) >= 2 and rng.random() < 0.5:
            cut = rng.randrange(1, len(kids))
            return Ten(Ten(*kids[:cut]), *kids[cut:])
        return Ten(*kids)
    if isinstance(e, Lin):
        terms = [(n, _scramble(rng, sub)) for n, sub in e.terms]
        out = []
        for n, sub in terms:
            if abs(n) >= 2 and rng.random() < 0.4:
                out.append((n - 1, sub))
                out.append((1, sub))
            else:
                out.append((n, sub))
        rng.shuffle(out)
        return Lin(*out)
    if isinstance(e, Dual):
        if rng.random() < 0.3:
            return Dual(Dual(Dual(_scramble(rng, e.inner))))
        return Dual(_scramble(rng, e.inner))
    return e


class TestConfluenceCorpus:
    def test_seeded_corpus(self):
        rng = random.Random(20260826)
        count = 0
        while count < 1000:
            tree = _random_tree(rng, rng.randrange(1, 7))
            try:
                canon = normalize(tree)
            except UnsupportedExpression:
                continue
            count += 1
            scrambled = _scramble(rng, tree)
            assert normalize(scrambled) == canon
            assert normalize(to_expr(canon)) == canon
        assert count >= 1000


class TestAxiomRegistry:
    def test_names_frozen(self):
        assert set(AXIOMS) == {
            "line-twist-flip",
            "iso-subst",
            "ideal-descent",
            "quotient-descent",
            "pk-identity",
            "binomial",
            "cancel",
            "plus-minus-split",
            "pushforward",
            "cartier-collapse",
            "multadd-split",
        }

    def test_laws_nonempty(self):
        for ax in AXIOMS.values():
            assert ax.law and ax.description
            assert ax.name in repr(ax)

    def test_unknown_axiom_in_step(self):
        with pytest.raises(ScriptError):
            ChainStep("nope", 0, {}, "x", Lam(A, 1))


class TestMultiadditivity:
    def test_defect_is_trivial_block_d1(self):
        rep = multiadditivity_expand(["L1", "L2"], "Q")
        assert rep.ok
        got = dict(rep.defect)
        want = {}
        names = ["L1", "Q", "L2"]
        for bits in range(8):
            chosen = [names[i] for i in range(3) if bits >> i & 1]
            key = mono(*(at(n) for n in chosen))
            want[key] = (-1) ** (len(chosen) + 1)
        assert got == want

    @pytest.mark.parametrize("rest", [["L2"], ["L2", "L3"], ["L2", "L3", "L4"]])
    def test_defect_across_dimensions(self, rest):
        rep = multiadditivity_expand(["L1"] + rest, "Q")
        assert rep.ok
        assert len(rep.defect) == 2 ** (len(rest) + 2)

    def test_unit_slot_collapses(self):
        rep = multiadditivity_expand(["L1", "L2"], "O")
        assert rep.ok
        assert rep.defect == ()
        assert normalize(rep.lhs) == normalize(rep.rhs)

    def test_requires_lines(self):
        with pytest.raises(ScriptError):
            multiadditivity_expand([], "Q")

    def test_report_serializes(self):
        obj = multiadditivity_expand(["L1", "L2"], "Q").to_obj()
        json.dumps(obj)
        assert obj["defect_is_trivial_block"] is True
