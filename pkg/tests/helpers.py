"""Seeded random generators shared by the test modules.

Everything is driven by an explicit ``random.Random`` instance so that
every suite run sees identical instances; expected values asserted
against them are therefore stable.
"""

from __future__ import annotations

import random
from fractions import Fraction as Q

from leakbound import DiscreteChannel, Pmf, tau_max2
from leakbound.bayesnet import BayesNet, NodeSpec

DENOMINATORS = (6, 8, 10, 12, 16, 24)


def rand_partition(rng: random.Random, k: int, den: int) -> list[Q]:
    """k nonnegative rationals with denominator den summing to exactly 1."""
    cuts = sorted(rng.randrange(0, den + 1) for _ in range(k - 1))
    parts = []
    prev = 0
    for c in cuts + [den]:
        parts.append(Q(c - prev, den))
        prev = c
    return parts


def alphabet(size: int) -> tuple[str, ...]:
    return tuple(str(i) for i in range(size))


def rand_pmf(rng: random.Random, size: int, den: int | None = None) -> Pmf:
    den = den or rng.choice(DENOMINATORS)
    return Pmf.from_values(rand_partition(rng, size, den), alphabet(size))


def rand_family(rng: random.Random, m: int, size: int) -> list[Pmf]:
    den = rng.choice(DENOMINATORS)
    return [rand_pmf(rng, size, den) for _ in range(m)]


def rand_channel(rng: random.Random, n: int, size: int) -> DiscreteChannel:
    return DiscreteChannel(rand_family(rng, n, size))


def rand_family_tau_max2_le1(rng: random.Random, m: int, size: int) -> list[Pmf]:
    """A random family with tau_max2 <= 1, exactly.

    When the alphabet has room for one dominant symbol per row, mix point
    masses on distinct symbols (weight lam >= 1 - 1/m) with arbitrary
    noise rows; the column-wise second maximum of the mixture is at most
    (1 - lam) * m <= 1. Narrow alphabets (size < m) force tau_max2 >= 1,
    so those cells use families sitting exactly on the boundary:
    duplicated symmetric-channel rows, or rows whose middle probabilities
    tie. Every branch double-checks the property before returning.
    """
    out: list[Pmf] | None = None
    if size >= m:
        den = rng.choice((8, 12, 16, 24))
        lam_min = -((-(m - 1) * den) // m)  # ceil((m-1) * den / m)
        lam = Q(rng.randrange(lam_min, den + 1), den)
        spots = rng.sample(range(size), m)
        rows = []
        for i in range(m):
            noise = rand_partition(rng, size, den)
            row = [lam * (1 if k == spots[i] else 0) + (1 - lam) * noise[k]
                   for k in range(size)]
            rows.append(row)
        out = [Pmf.from_values(r, alphabet(size)) for r in rows]
    elif (m, size) == (3, 2):
        out = [rand_pmf(rng, 2) for _ in range(3)]  # tau_max2 is always 1
    elif (m, size) == (4, 2):
        den = rng.choice((8, 12, 16))
        lo = rng.randrange(0, den + 1)
        hi = rng.randrange(lo, den + 1)
        mid = rng.randrange(lo, hi + 1)
        ps = [Q(hi, den), Q(mid, den), Q(mid, den), Q(lo, den)]
        rng.shuffle(ps)
        out = [Pmf.from_values([p, 1 - p], alphabet(2)) for p in ps]
    elif (m, size) == (4, 3):
        # Two free rows, then a row dominating their pointwise minimum,
        # duplicated; the duplicate keeps the column-wise second maximum
        # from ever exceeding that dominating row, so tau_max2 = 1.
        den = rng.choice((8, 12, 16))
        p2 = rand_partition(rng, 3, den)
        p3 = rand_partition(rng, 3, den)
        floor = [min(a, b) for a, b in zip(p2, p3)]
        slack = rand_partition(rng, 3, den)
        rest = 1 - sum(floor)
        p1 = [floor[k] + rest * slack[k] for k in range(3)]
        rows = [p1, p2, p3, list(p1)]
        rng.shuffle(rows)
        out = [Pmf.from_values(r, alphabet(3)) for r in rows]
    else:
        raise ValueError(f"no generator for m={m}, size={size}")
    assert tau_max2(DiscreteChannel(out)) <= 1
    return out


def rand_family_tau_max2_gt1(rng: random.Random, m: int, size: int) -> list[Pmf]:
    """Rejection-sample an unconstrained family until tau_max2 > 1."""
    while True:
        fam = rand_family(rng, m, size)
        if tau_max2(DiscreteChannel(fam)) > 1:
            return fam


def bsc_rows(delta: Q) -> list[list[Q]]:
    return [[1 - delta, delta], [delta, 1 - delta]]


def chain_net(d1: Q, d2: Q) -> BayesNet:
    return BayesNet(
        [
            NodeSpec.make("X", 2),
            NodeSpec.make("Y1", 2, ["X"], bsc_rows(d1)),
            NodeSpec.make("Y2", 2, ["Y1"], bsc_rows(d2)),
        ],
        "X",
    )


def threshold_rows(d: Q) -> list[list[Q]]:
    """Noisy two-input threshold: output leans 0 when both parents are 0,
    leans 1 when both are 1, and is a fair coin on mixed inputs. The tied
    middle rows keep the CPT's tau_max2 at exactly 1."""
    half = Q(1, 2)
    return [[1 - d, d], [half, half], [half, half], [d, 1 - d]]


def relay_net(d: Q) -> BayesNet:
    """X -> Y1, {X, Y1} -> Z (noisy threshold), Z -> Y2, crossover d."""
    return BayesNet(
        [
            NodeSpec.make("X", 2),
            NodeSpec.make("Y1", 2, ["X"], bsc_rows(d)),
            NodeSpec.make("Z", 2, ["X", "Y1"], threshold_rows(d)),
            NodeSpec.make("Y2", 2, ["Z"], bsc_rows(d)),
        ],
        "X",
    )


def diamond_net(d: Q) -> BayesNet:
    """X -> Y1, {X, Y1} -> Y2, {Y1, Y2} -> Y3, noisy-threshold inner nodes."""
    return BayesNet(
        [
            NodeSpec.make("X", 2),
            NodeSpec.make("Y1", 2, ["X"], bsc_rows(d)),
            NodeSpec.make("Y2", 2, ["X", "Y1"], threshold_rows(d)),
            NodeSpec.make("Y3", 2, ["Y1", "Y2"], threshold_rows(d)),
        ],
        "X",
    )


def rand_couplable_net(
    rng: random.Random,
    n_nodes: int,
    x_size: int | None = None,
) -> BayesNet:
    """A random DAG whose every CPT satisfies tau_max2 <= 1 and has at
    least two distinct rows (so its leakage exponent exceeds 1).

    Parent sets are capped so CPTs never have more than four rows, which
    is the range the couplable-family generator covers: one parent of any
    size, or two binary parents.
    """
    x_size = x_size or rng.choice((2, 3, 4))
    nodes = [NodeSpec.make("X", x_size)]
    sizes = {"X": x_size}
    for k in range(1, n_nodes):
        size = rng.choice((2, 3))
        candidates = [n.node_id for n in nodes]
        binary = [c for c in candidates if sizes[c] == 2]
        if len(binary) >= 2 and rng.random() < 0.4:
            parents = rng.sample(binary, 2)
        else:
            parents = [rng.choice(candidates)]
        n_rows = 1
        for p in parents:
            n_rows *= sizes[p]
        while True:
            fam = rand_family_tau_max2_le1(rng, n_rows, size)
            if any(fam[0] != p for p in fam[1:]):
                break
        rows = [p.values() for p in fam]
        nodes.append(NodeSpec.make(f"N{k}", size, parents, rows))
        sizes[f"N{k}"] = size
    return BayesNet(nodes, "X")


def _rand_cpt_rows(
    rng: random.Random, n_rows: int, size: int, noisy: bool
) -> list[list[Q]]:
    """Random stochastic rows; ``noisy`` mixes every row toward a shared
    row, which keeps composite tau_max2 small. Regenerates until at least
    two rows differ (so tau_max > 1 whenever n_rows > 1)."""
    while True:
        den = rng.choice((8, 12, 16))
        if noisy:
            base = rand_partition(rng, size, den)
            lam = Q(rng.randrange((2 * den) // 3, den), den)
            rows = []
            for _ in range(n_rows):
                own = rand_partition(rng, size, den)
                rows.append([lam * base[k] + (1 - lam) * own[k] for k in range(size)])
        else:
            rows = [rand_partition(rng, size, den) for _ in range(n_rows)]
        if n_rows == 1 or any(rows[0] != r for r in rows[1:]):
            return rows


def rand_net(
    rng: random.Random,
    n_nodes: int = 4,
    max_alphabet: int = 3,
    x_size: int | None = None,
    noisy: bool = True,
) -> BayesNet:
    """A random DAG rooted at source X with random CPTs.

    Node k picks one or two parents among X and earlier nodes; alphabets
    are sampled up to ``max_alphabet``. ``noisy`` CPTs mix rows toward a
    common row, which keeps composite tau_max2 values small.
    """
    x_size = x_size or rng.randrange(2, max_alphabet + 1)
    nodes = [NodeSpec.make("X", x_size)]
    sizes = {"X": x_size}
    for k in range(1, n_nodes):
        size = rng.randrange(2, max_alphabet + 1)
        n_parents = 1 if k == 1 else rng.choice((1, 1, 2))
        candidates = [n.node_id for n in nodes]
        parents = rng.sample(candidates, min(n_parents, len(candidates)))
        n_rows = 1
        for p in parents:
            n_rows *= sizes[p]
        rows = _rand_cpt_rows(rng, n_rows, size, noisy)
        nodes.append(NodeSpec.make(f"N{k}", size, parents, rows))
        sizes[f"N{k}"] = size
    return BayesNet(nodes, "X")
