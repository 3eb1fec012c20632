"""Upper bounds on the leakage exponent of composite channels.

For a source X, a node set V and a later node U (no directed path from U
into V), the composite leakage exponent obeys

    tau_max(P_{V+U|X}) <= tau_max(P_{U|pa(U)}) * tau_max(P_{V|X})
                          - (tau_max(P_{U|pa(U)}) - 1) * penalty

with two interchangeable penalties:

* ``coupling_bound`` uses f = sum_v P(pa(U)-copies all equal, some
  V-copy = v) computed under an explicitly built simultaneous coupling of
  the per-source-value joints P_{V,pa(U)|X=i}; this is the tighter form.
* ``doeblin_bound`` replaces f by the Doeblin coefficient of the exact
  composite channel P_{V+pa(U)|X}, which lower-bounds every f, so its
  bound is never tighter than the coupling one.

Both require tau_max2(P_{U|pa(U)}) <= 1 and a couplable V-side: either
tau_max2(P_{V|X}) <= 1 or, when |X| = 4, the relaxed four-way condition.

``recursive_bound`` peels the topologically last target node repeatedly;
``subadditivity_baseline`` is the same product with every penalty dropped
(the plain additive-leakage bound). Dropping penalties can only increase
the value, so bounds here always satisfy
coupling <= doeblin <= baseline on any accepted query.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Sequence

from .bayesnet import (
    DEFAULT_MAX_STATES,
    BayesNet,
    composite_channel,
    descendants,
    topological_sort,
)
from .errors import LeakboundError, PreconditionError
from .measures import (
    ZERO,
    DiscreteChannel,
    doeblin,
    log_fraction,
    tau_max,
    tau_max2,
)
from .simultaneous import (
    JointPmf,
    build_simultaneous_coupling,
    coupling_feasibility,
    f_quantity,
)


@dataclass(frozen=True)
class PeelStep:
    """One application of the single-node bound inside a recursion."""

    u: str
    v_set: tuple[str, ...]
    adjoined: tuple[str, ...]
    tau_max_u: Fraction
    penalty: Fraction
    preconditions: tuple[tuple[str, str, bool], ...]


@dataclass(frozen=True)
class BoundReport:
    """Everything one query produced: bounds, exact value, gaps, checks."""

    query: str
    exact_tau_max: Fraction
    coupling_bound_value: Fraction | None
    doeblin_bound_value: Fraction | None
    subadditivity_value: Fraction | None
    precondition_log: tuple[tuple[str, str, bool], ...]
    trace: tuple[PeelStep, ...] = ()
    log_form_bound: float | None = None

    def gap(self, which: str) -> Fraction | None:
        value = getattr(self, f"{which}_value")
        if value is None:
            return None
        return value - self.exact_tau_max


def _check_order(net: BayesNet, v_set: Sequence[str], u: str) -> None:
    if u in v_set:
        raise LeakboundError(f"peeled node {u!r} may not belong to V")
    below = descendants(net, u)
    bad = sorted(set(v_set) & below)
    if bad:
        raise LeakboundError(
            f"directed path from {u!r} into {bad}; peel order invalid"
        )


def _u_side_precondition(u_cpt: DiscreteChannel, u: str):
    """tau_max2 of the node's own CPT; single-row CPTs pass trivially."""
    if u_cpt.n < 2:
        return True, (f"tau_max2(P_{{{u}|pa}}) <= 1", "trivial (one row)", True)
    value = tau_max2(u_cpt)
    return value <= 1, (f"tau_max2(P_{{{u}|pa}}) <= 1", str(value), value <= 1)


def _v_side_precondition(v_channel: DiscreteChannel, v_label: str):
    ok, label, value = coupling_feasibility(list(v_channel.rows))
    return ok, (f"{label} for P_{{{v_label}|X}}", str(value), ok)


def _sources_for_coupling(
    net: BayesNet, v_set: Sequence[str], u: str, max_states: int
) -> list[JointPmf]:
    """The joints P_{V, pa(U) | X = i}: x-part = parent values of U,
    y-part = V values, one JointPmf per source value."""
    parents = list(net.by_id[u].parents)
    w_nodes = list(dict.fromkeys(list(v_set) + parents))
    w_channel = composite_channel(net, w_nodes, max_states=max_states)
    decl = net.node_ids()
    ordered = [nid for nid in decl if nid in set(w_nodes)]
    w_pos = {nid: k for k, nid in enumerate(ordered)}
    v_ordered = [nid for nid in decl if nid in set(v_set)]

    z_alphabet = list(product(*(net.by_id[p].alphabet for p in parents)))
    v_alphabet = list(product(*(net.by_id[t].alphabet for t in v_ordered)))

    sources = []
    for row in w_channel.rows:
        mass: dict[tuple, Fraction] = {}
        for w_value in row.support():
            z = tuple(w_value[w_pos[p]] for p in parents)
            v = tuple(w_value[w_pos[t]] for t in v_ordered)
            key = (z, v)
            mass[key] = mass.get(key, ZERO) + row[w_value]
        sources.append(JointPmf(z_alphabet, v_alphabet, mass))
    return sources


def _single_step(
    net: BayesNet,
    v_set: Sequence[str],
    u: str,
    method: str,
    max_states: int,
) -> tuple[Fraction, Fraction | None, Fraction, PeelStep]:
    """(tau_max_u, tau_max_v, penalty, step record) for peeling u off V.

    Raises PreconditionError when the method's hypotheses fail; the
    ``baseline`` method skips hypotheses, uses a zero penalty, and leaves
    tau_max_v as None (the recursion never needs it).
    """
    v_set = list(v_set)
    if not v_set:
        raise LeakboundError("V must be non-empty")
    _check_order(net, v_set, u)
    u_cpt = net.cpt(u)
    tmu = tau_max(u_cpt)

    if method == "baseline":
        step = PeelStep(u, tuple(v_set), (), tmu, ZERO, ())
        return tmu, None, ZERO, step

    checks = []
    ok_u, rec_u = _u_side_precondition(u_cpt, u)
    checks.append(rec_u)
    v_channel = composite_channel(net, v_set, max_states=max_states)
    ok_v, rec_v = _v_side_precondition(v_channel, "+".join(sorted(v_set)))
    checks.append(rec_v)
    if not ok_u or not ok_v:
        failed = rec_u if not ok_u else rec_v
        raise PreconditionError(failed[0], Fraction(failed[1]))

    parents = list(net.by_id[u].parents)
    if method == "doeblin":
        w_nodes = list(dict.fromkeys(v_set + parents))
        penalty = doeblin(composite_channel(net, w_nodes, max_states=max_states))
    elif method == "coupling":
        sources = _sources_for_coupling(net, v_set, u, max_states)
        coupling = build_simultaneous_coupling(sources, max_states=max_states)
        penalty = f_quantity(coupling)
    else:
        raise LeakboundError(f"unknown method {method!r}")

    step = PeelStep(u, tuple(v_set), (), tmu, penalty, tuple(checks))
    return tmu, tau_max(v_channel), penalty, step


def coupling_bound(
    net: BayesNet,
    v_set: Sequence[str],
    u: str,
    max_states: int = DEFAULT_MAX_STATES,
) -> Fraction:
    """Single-step bound with the simultaneous-coupling penalty f."""
    tmu, tmv, penalty, _ = _single_step(net, v_set, u, "coupling", max_states)
    return tmu * tmv - (tmu - 1) * penalty


def doeblin_bound(
    net: BayesNet,
    v_set: Sequence[str],
    u: str,
    max_states: int = DEFAULT_MAX_STATES,
) -> Fraction:
    """Single-step bound with the Doeblin-coefficient penalty."""
    tmu, tmv, penalty, _ = _single_step(net, v_set, u, "doeblin", max_states)
    return tmu * tmv - (tmu - 1) * penalty


def exact_tau_max(
    net: BayesNet, targets: Sequence[str], max_states: int = DEFAULT_MAX_STATES
) -> Fraction:
    """Ground truth by exhaustive enumeration of the composite channel."""
    return tau_max(composite_channel(net, list(targets), max_states=max_states))


def _peel_plan(net: BayesNet, targets: Sequence[str]) -> list[str]:
    order = topological_sort(net)
    position = {nid: k for k, nid in enumerate(order)}
    return sorted(set(targets), key=position.get)


def recursive_bound(
    net: BayesNet,
    targets: Sequence[str],
    method: str = "doeblin",
    max_states: int = DEFAULT_MAX_STATES,
) -> tuple[Fraction, tuple[PeelStep, ...]]:
    """Peel the topologically last target node until one node remains.

    At each step V is the rest of the target set, with pa(U) \\ (V + {X})
    adjoined so the peeled node's parents stay inside the bounded set;
    adjoining bounds a superset of the original targets, which is sound
    because marginalization never increases tau_max. The final singleton
    is evaluated exactly. On a precondition failure, the raised error
    carries the partial trace in its ``trace`` attribute.
    """
    targets = list(dict.fromkeys(targets))
    if not targets:
        raise LeakboundError("empty target set")
    for t in targets:
        if t not in net.by_id:
            raise LeakboundError(f"unknown target node {t!r}")
        if t == net.source:
            raise LeakboundError("the source cannot be a bound target")
    if method not in ("doeblin", "coupling", "baseline"):
        raise LeakboundError(f"unknown method {method!r}")

    steps: list[PeelStep] = []
    current = _peel_plan(net, targets)
    factors: list[tuple[Fraction, Fraction]] = []  # (tau_max_u, penalty)
    while len(current) > 1:
        u = current[-1]
        v_set = current[:-1]
        adjoin = [
            p
            for p in net.by_id[u].parents
            if p not in set(v_set) and p != net.source
        ]
        v_set = _peel_plan(net, v_set + adjoin)
        try:
            tmu, _, penalty, step = _single_step(net, v_set, u, method, max_states)
        except PreconditionError as err:
            err.trace = tuple(steps)
            raise
        if adjoin:
            step = PeelStep(
                step.u, step.v_set, tuple(adjoin), step.tau_max_u,
                step.penalty, step.preconditions,
            )
        steps.append(step)
        factors.append((tmu, penalty))
        current = v_set

    value = exact_tau_max(net, current, max_states=max_states)
    for tmu, penalty in reversed(factors):
        value = tmu * value - (tmu - 1) * penalty
    return value, tuple(steps)


def subadditivity_baseline(
    net: BayesNet,
    targets: Sequence[str],
    max_states: int = DEFAULT_MAX_STATES,
) -> Fraction:
    """The recursion with every penalty term dropped: the plain product
    of per-step leakage exponents times the final exact factor."""
    value, _ = recursive_bound(net, targets, method="baseline", max_states=max_states)
    return value


def query_report(
    net: BayesNet,
    targets: Sequence[str],
    method: str = "recursive",
    max_states: int = DEFAULT_MAX_STATES,
) -> BoundReport:
    """Evaluate one query and collect bounds, exact value, and checks.

    ``method`` is "recursive" (full peel with both penalties), "coupling"
    or "doeblin" (single peel of the topologically last target). A
    precondition failure marks the affected bounds None but the exact
    value is always reported.
    """
    exact = exact_tau_max(net, targets, max_states=max_states)
    log: list[tuple[str, str, bool]] = []
    coupling_value = doeblin_value = baseline_value = None
    trace: tuple[PeelStep, ...] = ()

    plan = _peel_plan(net, targets)
    if len(plan) == 1:
        # Zero peels: every bound collapses to the exact value.
        return BoundReport(
            query=f"{net.source} -> {{{', '.join(plan)}}} [{method}]",
            exact_tau_max=exact,
            coupling_bound_value=exact,
            doeblin_bound_value=exact,
            subadditivity_value=exact,
            precondition_log=(),
        )

    try:
        if method == "recursive":
            doeblin_value, trace = recursive_bound(
                net, targets, "doeblin", max_states=max_states
            )
            coupling_value, _ = recursive_bound(
                net, targets, "coupling", max_states=max_states
            )
            baseline_value = subadditivity_baseline(net, targets, max_states=max_states)
            for step in trace:
                log.extend(step.preconditions)
        elif method in ("coupling", "doeblin"):
            u = plan[-1]
            v_set = plan[:-1]
            tmu, tmv, penalty, step = _single_step(net, v_set, u, method, max_states)
            value = tmu * tmv - (tmu - 1) * penalty
            if method == "coupling":
                coupling_value = value
            else:
                doeblin_value = value
            baseline_value = tmu * tmv
            trace = (step,)
            log.extend(step.preconditions)
        else:
            raise LeakboundError(f"unknown method {method!r}")
    except PreconditionError as err:
        log.append((err.condition, str(err.value), False))

    return BoundReport(
        query=f"{net.source} -> {{{', '.join(sorted(targets))}}} [{method}]",
        exact_tau_max=exact,
        coupling_bound_value=coupling_value,
        doeblin_bound_value=doeblin_value,
        subadditivity_value=baseline_value,
        precondition_log=tuple(log),
        trace=trace,
    )


# ---------------------------------------------------------------------------
# The two worked network shapes.
# ---------------------------------------------------------------------------


def _match_relay(net: BayesNet) -> tuple[str, str, str]:
    """Relay shape: X -> A, {X, A} -> B, B -> C. Returns (A, B, C)."""
    others = [n for n in net.nodes if n.node_id != net.source]
    if len(others) != 3:
        raise LeakboundError("relay shape needs exactly four nodes")
    by_parents = {n.node_id: set(n.parents) for n in others}
    x = net.source
    a = [nid for nid, ps in by_parents.items() if ps == {x}]
    b = [
        nid
        for nid, ps in by_parents.items()
        if len(ps) == 2 and x in ps and (ps - {x}) <= set(a)
    ]
    if len(a) != 1 or len(b) != 1:
        raise LeakboundError("network does not match the relay shape")
    c = [nid for nid, ps in by_parents.items() if ps == {b[0]}]
    if len(c) != 1:
        raise LeakboundError("network does not match the relay shape")
    return a[0], b[0], c[0]


def relay_report(net: BayesNet, max_states: int = DEFAULT_MAX_STATES) -> BoundReport:
    """Single-peel report for the relay network X -> A -> B -> C with the
    shortcut X -> B, querying X -> (A, C).

    Peeling C with V = {A} gives, in the log domain,

        L(X -> (A, C)) <= L(X -> A) + L(B -> C)
            + log(1 - (tau_max(P_C|B) - 1)/tau_max(P_C|B)
                    * tau(P_{A,B|X})/tau_max(P_A|X)),

    whose exponential is checked against the rational-domain bound before
    any logarithm is taken.
    """
    a, b, c = _match_relay(net)
    u_cpt = net.cpt(c)
    tmu = tau_max(u_cpt)
    a_channel = composite_channel(net, [a], max_states=max_states)
    tmv = tau_max(a_channel)
    penalty = doeblin(composite_channel(net, [a, b], max_states=max_states))

    checks = []
    ok_u, rec_u = _u_side_precondition(u_cpt, c)
    checks.append(rec_u)
    ok_v, rec_v = _v_side_precondition(a_channel, a)
    checks.append(rec_v)
    if not (ok_u and ok_v):
        failed = rec_u if not ok_u else rec_v
        raise PreconditionError(failed[0], failed[1])

    bound = tmu * tmv - (tmu - 1) * penalty
    correction = 1 - (tmu - 1) / tmu * penalty / tmv
    if tmu * tmv * correction != bound:
        raise LeakboundError("log-form and product-form bounds disagree")
    log_form = log_fraction(tmv) + log_fraction(tmu) + log_fraction(correction)

    exact = exact_tau_max(net, [a, c], max_states=max_states)
    step = PeelStep(c, (a,), (), tmu, penalty, tuple(checks))
    return BoundReport(
        query=f"{net.source} -> {{{a}, {c}}} [relay]",
        exact_tau_max=exact,
        coupling_bound_value=None,
        doeblin_bound_value=bound,
        subadditivity_value=tmu * tmv,
        precondition_log=tuple(checks),
        trace=(step,),
        log_form_bound=log_form,
    )


def _match_diamond(net: BayesNet) -> tuple[str, str, str]:
    """Diamond shape: X -> A, {X, A} -> B, {A, B} -> C. Returns (A, B, C)."""
    others = [n for n in net.nodes if n.node_id != net.source]
    if len(others) != 3:
        raise LeakboundError("diamond shape needs exactly four nodes")
    by_parents = {n.node_id: set(n.parents) for n in others}
    x = net.source
    a = [nid for nid, ps in by_parents.items() if ps == {x}]
    if len(a) != 1:
        raise LeakboundError("network does not match the diamond shape")
    b = [nid for nid, ps in by_parents.items() if ps == {x, a[0]}]
    if len(b) != 1:
        raise LeakboundError("network does not match the diamond shape")
    c = [nid for nid, ps in by_parents.items() if ps == {a[0], b[0]}]
    if len(c) != 1:
        raise LeakboundError("network does not match the diamond shape")
    return a[0], b[0], c[0]


def diamond_report(net: BayesNet, max_states: int = DEFAULT_MAX_STATES) -> BoundReport:
    """Two-peel report for the diamond X -> A, {X,A} -> B, {A,B} -> C,
    querying X -> (A, B, C).

    The first peel removes C against V = {A, B}; the second bounds
    tau_max(P_{A,B|X}) by tau_max(P_{A|X}) * tau_max(P_{B|X,A}), whose
    penalty vanishes because the parent set contains X itself.
    """
    a, b, c = _match_diamond(net)
    value, trace = recursive_bound(net, [a, b, c], "doeblin", max_states=max_states)
    if trace[1].penalty != 0:
        raise LeakboundError("second peel should have a vanishing penalty")
    exact = exact_tau_max(net, [a, b, c], max_states=max_states)
    baseline = subadditivity_baseline(net, [a, b, c], max_states=max_states)
    log: list[tuple[str, str, bool]] = []
    for step in trace:
        log.extend(step.preconditions)
    return BoundReport(
        query=f"{net.source} -> {{{a}, {b}, {c}}} [diamond]",
        exact_tau_max=exact,
        coupling_bound_value=None,
        doeblin_bound_value=value,
        subadditivity_value=baseline,
        precondition_log=tuple(log),
        trace=trace,
    )
