import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from src.errors import TypeMismatch
from src.fincat import FinCategory
from src.graphtopos import graph_base
from src.logic import terms as t
from src.logic.forcing import ClauseEvaluator, ForcingContext, forces, forces_by_clauses
from src.logic.parser import parse_formula
from src.logic.semantics import Topos
from src.presheaf import (
    SubPresheaf,
    open_cover_topology,
    opens_category,
    sieves_on,
    trivial_topology,
    yoneda,
)

COLLAPSE = t.BaseType("collapse")
X = t.Var("x", COLLAPSE)


def at(topos, c, x):
    return ForcingContext.representable(topos, c, {"x": (COLLAPSE, x)})


def test_forcing_at_representables(interval_topos):
    """Test that y(b) forces in_x at x but not at y, and both agree with the clauses."""
    in_x = parse_formula("(apply collapse_x x)", {"x": "collapse"})
    assert forces(interval_topos, at(interval_topos, "b", "x"), in_x)
    assert not forces(interval_topos, at(interval_topos, "b", "y"), in_x)
    assert not forces_by_clauses(interval_topos, at(interval_topos, "b", "y"), in_x).holds


def test_forcing_at_a_named_stage(interval_topos, corpus_ws):
    """Test forcing through the global element alpha of collapse."""
    ctx = ForcingContext.single(corpus_ws.presheaves["point"], "x", corpus_ws.morphisms["alpha"])
    in_x = parse_formula("(apply collapse_x x)", {"x": "collapse"})
    assert forces(interval_topos, ctx, in_x)
    assert forces_by_clauses(interval_topos, ctx, in_x).holds


def test_excluded_middle_trace(interval_topos):
    """Test that the trace of a failed disjunction shows both branches failing."""
    phi = parse_formula("(or (apply collapse_x x) (not (apply collapse_x x)))", {"x": "collapse"})
    result = forces_by_clauses(interval_topos, at(interval_topos, "b", "y"), phi)
    assert not result.holds
    trace = result.trace.as_dict()
    assert trace["clause"] == "stage"
    failing = [c for c in trace["children"] if not c["holds"]]
    assert failing[0]["clause"] == "or"
    assert [c["holds"] for c in failing[0]["children"]] == [False, False]


def test_implication_note(interval_topos):
    """Test that a failed implication says along which arrow it fails."""
    phi = parse_formula("(implies true (apply collapse_x x))", {"x": "collapse"})
    result = forces_by_clauses(interval_topos, at(interval_topos, "b", "y"), phi)
    assert not result.holds
    failing = next(c for c in result.trace.children if not c.holds)
    assert "id_b" in failing.note


def test_missing_element_is_refused(interval_topos, corpus_ws):
    """Test that every free variable needs a generalized element."""
    phi = parse_formula("(apply collapse_x x)", {"x": "collapse"})
    with pytest.raises(TypeMismatch):
        forces(interval_topos, ForcingContext(corpus_ws.presheaves["point"], {}), phi)
    wrong = ForcingContext.single(corpus_ws.presheaves["point"], "x", corpus_ws.morphisms["beta"])
    with pytest.raises(TypeMismatch):
        forces(interval_topos, wrong, phi)


def test_trivial_topology_and_epi_search_agree(interval_topos):
    """Test that local clauses over the interval give the plain answers."""
    phi = parse_formula("(or (apply collapse_x x) (not (apply collapse_x x)))", {"x": "collapse"})
    J = trivial_topology(interval_topos.base)
    for x, expected in (("x", True), ("y", False)):
        ctx = at(interval_topos, "b", x)
        assert forces_by_clauses(interval_topos, ctx, phi, topology=J).holds is expected
        assert forces_by_clauses(interval_topos, ctx, phi, epi_search=True).holds is expected


def test_empty_cover_forces_false(corpus_ws):
    """Test that falsity is forced at an open covered by the empty sieve."""
    vee = corpus_ws.categories["vee"]
    topos = Topos(vee)
    evaluator = ClauseEvaluator(topos, topology=corpus_ws.topologies["vee_opens"])
    bottom = topos.typecheck(t.Bottom())
    assert evaluator.force(bottom, "empty", {}).holds
    assert not evaluator.force(bottom, "whole", {}).holds


atoms = st.sampled_from([
    t.ApplyArrow("collapse_x", X), t.Eq(X, X), t.Top(), t.Bottom(),
])


def _formulas():
    return st.recursive(
        atoms,
        lambda inner: st.one_of(
            st.builds(t.And, inner, inner),
            st.builds(t.Or, inner, inner),
            st.builds(t.Implies, inner, inner),
            st.builds(t.Not, inner),
            st.builds(lambda body: t.Exists(t.Var("z", COLLAPSE), body), inner),
            st.builds(lambda body: t.Forall(t.Var("z", COLLAPSE), body), inner),
        ),
        max_leaves=6,
    )


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(phi=_formulas(), stage=st.sampled_from([("a", "p"), ("b", "x"), ("b", "y")]))
def test_clauses_agree_with_direct_forcing(interval_topos, phi, stage):
    """Test that clause-by-clause forcing and comprehension membership always agree."""
    if "x" not in t.free_vars(phi):
        phi = t.And(phi, t.Eq(X, X))
    ctx = at(interval_topos, *stage)
    assert forces(interval_topos, ctx, phi) == forces_by_clauses(interval_topos, ctx, phi).holds


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(phi=_formulas())
def test_forcing_is_monotone(interval_topos, phi):
    """Test that what y(b) forces about an element stays forced once restricted to a."""
    for x in ("x", "y"):
        if forces(interval_topos, at(interval_topos, "b", x), t.And(phi, t.Eq(X, X))):
            assert forces(interval_topos, at(interval_topos, "a", "p"), t.And(phi, t.Eq(X, X)))


# -- many small toposes ---------------------------------------------------------

T = t.BaseType("T")
XT = t.Var("x", T)
Z = t.Var("z", T)

VEE = {"empty": [], "left": ["1"], "right": ["2"], "whole": ["1", "2"]}
SIERPINSKI = {"empty": [], "open_point": ["1"], "whole": ["1", "2"]}


def largest_proper_sieve(C, c):
    proper = [S for S in sieves_on(C, c) if C.identity(c) not in S.arrows]
    return max(proper, key=lambda S: (len(S.arrows), sorted(S.arrows)))


def sieve_topos(C, c, topology=None):
    """y(c) as the type T with a proper sieve on c as the predicate p."""
    topos = Topos(C)
    X = yoneda(C, c)
    S = largest_proper_sieve(C, c)
    topos.add_type("T", X)
    topos.add_predicate("p", SubPresheaf(X, {d: frozenset(f for f in S.arrows if C.src(f) == d)
                                             for d in C.objects}), T)
    stages = [(d, x) for d in C.objects for x in X.at(d)]
    return topos, topology, stages


def small_toposes():
    vee, sierpinski = opens_category(VEE, name="vee"), opens_category(SIERPINSKI, name="sierpinski")
    interval = FinCategory.interval()
    return {
        "interval": sieve_topos(interval, "b", trivial_topology(interval)),
        "cospan": sieve_topos(FinCategory.cospan(), "z"),
        "span": sieve_topos(FinCategory.span(), "x"),
        "pair": sieve_topos(FinCategory.parallel_pair(), "t"),
        "discrete": sieve_topos(FinCategory.discrete(["x", "y"]), "x"),
        "graph": sieve_topos(graph_base(), "E"),
        "vee": sieve_topos(vee, "whole", open_cover_topology(vee, VEE)),
        "sierpinski": sieve_topos(sierpinski, "whole", open_cover_topology(sierpinski, SIERPINSKI)),
    }


TOPOSES = small_toposes()
LOCAL = {name: entry for name, entry in TOPOSES.items() if entry[1] is not None}

leaves = st.sampled_from([t.ApplyArrow("p", XT), t.Eq(XT, XT), t.Top(), t.Bottom()])
guards = st.sampled_from([t.ApplyArrow("p", Z), t.Eq(Z, XT)])


def formulas_upto(depth):
    """Formulas in x: T nested at most ``depth`` connectives deep; z is always bound."""
    strategy = leaves
    for _ in range(depth):
        inner = strategy
        strategy = st.one_of(
            leaves,
            st.builds(t.And, inner, inner),
            st.builds(t.Or, inner, inner),
            st.builds(t.Implies, inner, inner),
            st.builds(t.Not, inner),
            st.builds(lambda guard, body: t.Exists(Z, t.And(guard, body)), guards, inner),
            st.builds(lambda guard, body: t.Forall(Z, t.Implies(guard, body)), guards, inner),
        )
    return strategy


def with_x(phi):
    return phi if "x" in t.free_vars(phi) else t.And(phi, t.Eq(XT, XT))


def test_enough_bases():
    """Test that the generated formulas run over several different bases."""
    assert len(TOPOSES) >= 5
    assert len(LOCAL) >= 2


@settings(max_examples=250, deadline=None)
@given(data=st.data(), phi=formulas_upto(4))
def test_clauses_agree_on_every_base(data, phi):
    """Test clause forcing against comprehension membership at representable stages of many bases."""
    topos, _, stages = TOPOSES[data.draw(st.sampled_from(sorted(TOPOSES)))]
    c, x = data.draw(st.sampled_from(stages))
    ctx = ForcingContext.representable(topos, c, {"x": (T, x)})
    phi = with_x(phi)
    assert forces(topos, ctx, phi) == forces_by_clauses(topos, ctx, phi).holds


@settings(max_examples=200, deadline=None)
@given(data=st.data(), phi=formulas_upto(4))
def test_forcing_has_local_character(data, phi):
    """Test that a formula forced along every arrow of a covering sieve is forced at its target."""
    topos, J, stages = LOCAL[data.draw(st.sampled_from(sorted(LOCAL)))]
    c, x = data.draw(st.sampled_from(stages))
    tt = topos.typecheck(with_x(phi))
    evaluator = ClauseEvaluator(topos, topology=J)
    env = {"x": x}
    C = topos.base
    for S in J.covering(c):
        if all(evaluator.force(tt, C.src(f), topos.restrict_env(tt.free_map, f, env)).holds
               for f in S.arrows):
            assert evaluator.force(tt, c, env).holds, S.atom


@settings(max_examples=200, deadline=None)
@given(data=st.data(), phi=formulas_upto(4))
def test_local_forcing_is_monotone(data, phi):
    """Test that what is forced at a stage stays forced along every arrow into it."""
    topos, J, stages = LOCAL[data.draw(st.sampled_from(sorted(LOCAL)))]
    c, x = data.draw(st.sampled_from(stages))
    tt = topos.typecheck(with_x(phi))
    evaluator = ClauseEvaluator(topos, topology=J)
    C = topos.base
    if evaluator.force(tt, c, {"x": x}).holds:
        for f in C.arrows_into(c):
            moved = topos.restrict_env(tt.free_map, f, {"x": x})
            assert evaluator.force(tt, C.src(f), moved).holds, f
