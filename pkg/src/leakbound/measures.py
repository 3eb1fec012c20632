"""Exact probability vectors, discrete channels, and leakage measures.

All probabilities are ``fractions.Fraction`` values and every operation in
this module is exact; the only floating-point quantity produced anywhere is
the logarithm taken at the reporting boundary (``maximal_leakage``).

The scalar measures of a channel with rows P_1, ..., P_n over alphabet Y:

    tau_max   = sum_y max_i P_i(y)       (leakage exponent / max-Doeblin)
    tau_max2  = sum_y max2_i P_i(y)      (column-wise second largest)
    tau       = sum_y min_i P_i(y)       (Doeblin coefficient)
    tau_I     = sum_y min_{i in I} P_i(y) for an index subset I

``max2`` counts ties with multiplicity: it is the second entry of the
column sorted in descending order, so two equal maxima give max2 = max.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Hashable, Iterable, Mapping, Sequence

from .errors import LeakboundError

Symbol = Hashable

ZERO = Fraction(0)


def as_fraction(value) -> Fraction:
    """Coerce ints, strings ("3/4", "0.25") and Fractions to Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        raise TypeError(
            f"refusing float {value!r}: probabilities must be exact "
            "(use a string or Fraction)"
        )
    return Fraction(value)


def format_fraction(q: Fraction) -> str:
    """Render as num/den, always with an explicit denominator."""
    return f"{q.numerator}/{q.denominator}"


def log_fraction(q: Fraction) -> float:
    """Natural log of a positive rational, stable for large num/den."""
    if q <= 0:
        raise ValueError(f"log of non-positive rational {q}")
    return math.log(q.numerator) - math.log(q.denominator)


class Pmf:
    """A probability mass function over a finite ordered alphabet.

    Masses are exact rationals in [0, 1] summing to exactly 1. Instances
    are immutable after construction and safe to share across threads.
    """

    __slots__ = ("alphabet", "_mass")

    def __init__(self, alphabet: Iterable[Symbol], mass: Mapping[Symbol, object]):
        alphabet = tuple(alphabet)
        if len(set(alphabet)) != len(alphabet):
            raise LeakboundError("alphabet contains duplicate symbols")
        if not alphabet:
            raise LeakboundError("alphabet is empty")
        known = set(alphabet)
        clean: dict[Symbol, Fraction] = {}
        for sym, raw in mass.items():
            if sym not in known:
                raise LeakboundError(f"mass assigned to unknown symbol {sym!r}")
            q = as_fraction(raw)
            if q < 0 or q > 1:
                raise LeakboundError(f"mass {q} for {sym!r} outside [0, 1]")
            if q:
                clean[sym] = q
        total = sum(clean.values(), ZERO)
        if total != 1:
            raise LeakboundError(f"masses sum to {total}, expected exactly 1")
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "_mass", clean)

    @classmethod
    def from_values(cls, values: Sequence[object], alphabet: Iterable[Symbol] | None = None) -> "Pmf":
        """Build from a dense row of masses aligned with the alphabet."""
        if alphabet is None:
            alphabet = tuple(str(i) for i in range(len(values)))
        alphabet = tuple(alphabet)
        if len(values) != len(alphabet):
            raise LeakboundError(
                f"row has {len(values)} entries for alphabet of size {len(alphabet)}"
            )
        return cls(alphabet, dict(zip(alphabet, values)))

    def __setattr__(self, name, value):
        raise AttributeError("Pmf is immutable")

    def __getitem__(self, sym: Symbol) -> Fraction:
        return self._mass.get(sym, ZERO)

    def items(self):
        """(symbol, mass) pairs in alphabet order, including zeros."""
        return [(sym, self._mass.get(sym, ZERO)) for sym in self.alphabet]

    def support(self) -> list[Symbol]:
        return [sym for sym in self.alphabet if sym in self._mass]

    def values(self) -> list[Fraction]:
        return [self._mass.get(sym, ZERO) for sym in self.alphabet]

    def __eq__(self, other):
        if not isinstance(other, Pmf):
            return NotImplemented
        return self.alphabet == other.alphabet and self._mass == other._mass

    def __hash__(self):
        return hash((self.alphabet, frozenset(self._mass.items())))

    def __repr__(self):
        body = ", ".join(f"{s!r}: {q}" for s, q in self.items())
        return f"Pmf({{{body}}})"


class DiscreteChannel:
    """A row-stochastic conditional distribution P(y|x) for finite x, y.

    Rows are ``Pmf`` objects sharing one output alphabet; the input
    alphabet labels the rows and defaults to "0", "1", ....
    """

    __slots__ = ("input_alphabet", "rows")

    def __init__(self, rows: Sequence[Pmf], input_alphabet: Iterable[Symbol] | None = None):
        rows = tuple(rows)
        if not rows:
            raise LeakboundError("channel needs at least one row")
        out = rows[0].alphabet
        for k, row in enumerate(rows):
            if row.alphabet != out:
                raise LeakboundError(f"row {k} has a different output alphabet")
        if input_alphabet is None:
            input_alphabet = tuple(str(i) for i in range(len(rows)))
        input_alphabet = tuple(input_alphabet)
        if len(input_alphabet) != len(rows):
            raise LeakboundError("input alphabet size does not match row count")
        if len(set(input_alphabet)) != len(input_alphabet):
            raise LeakboundError("input alphabet contains duplicates")
        object.__setattr__(self, "input_alphabet", input_alphabet)
        object.__setattr__(self, "rows", rows)

    @classmethod
    def from_rows(cls, raw_rows: Sequence[Sequence[object]],
                  output_alphabet: Iterable[Symbol] | None = None,
                  input_alphabet: Iterable[Symbol] | None = None) -> "DiscreteChannel":
        if output_alphabet is None and raw_rows:
            output_alphabet = tuple(str(i) for i in range(len(raw_rows[0])))
        out = tuple(output_alphabet)
        return cls([Pmf.from_values(r, out) for r in raw_rows], input_alphabet)

    def __setattr__(self, name, value):
        raise AttributeError("DiscreteChannel is immutable")

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def output_alphabet(self):
        return self.rows[0].alphabet

    def row(self, i: int) -> Pmf:
        return self.rows[i]

    def column(self, sym: Symbol) -> list[Fraction]:
        return [row[sym] for row in self.rows]

    def __eq__(self, other):
        if not isinstance(other, DiscreteChannel):
            return NotImplemented
        return self.input_alphabet == other.input_alphabet and self.rows == other.rows

    def __repr__(self):
        return f"DiscreteChannel(n={self.n}, outputs={len(self.output_alphabet)})"


def tau_max(channel: DiscreteChannel) -> Fraction:
    """Leakage exponent: sum over outputs of the column maximum."""
    return sum((max(channel.column(y)) for y in channel.output_alphabet), ZERO)


def tau_max2(channel: DiscreteChannel) -> Fraction:
    """Sum over outputs of the column-wise second-largest entry.

    Ties count with multiplicity: the second element of the column sorted
    in descending order. Undefined (raises) for single-row channels.
    """
    if channel.n < 2:
        raise LeakboundError("tau_max2 needs at least two rows")
    total = ZERO
    for y in channel.output_alphabet:
        col = sorted(channel.column(y), reverse=True)
        total += col[1]
    return total


def doeblin(channel: DiscreteChannel) -> Fraction:
    """Doeblin coefficient: sum over outputs of the column minimum."""
    return sum((min(channel.column(y)) for y in channel.output_alphabet), ZERO)


def tau_subset(channel: DiscreteChannel, subset: Iterable[int]) -> Fraction:
    """sum_y min over the selected rows; subset indexes rows from 0."""
    idx = sorted(set(subset))
    if not idx:
        raise LeakboundError("tau_subset needs a non-empty index set")
    for i in idx:
        if not 0 <= i < channel.n:
            raise LeakboundError(f"row index {i} out of range for n={channel.n}")
    rows = [channel.rows[i] for i in idx]
    return sum(
        (min(row[y] for row in rows) for y in channel.output_alphabet), ZERO
    )


def tau_pair(channel: DiscreteChannel) -> Fraction:
    """Sum of tau_I over all two-element row subsets."""
    return sum(
        (tau_subset(channel, pair) for pair in combinations(range(channel.n), 2)),
        ZERO,
    )


def tau_trip(channel: DiscreteChannel) -> Fraction:
    """Sum of tau_I over all three-element row subsets."""
    return sum(
        (tau_subset(channel, tri) for tri in combinations(range(channel.n), 3)),
        ZERO,
    )


def maximal_leakage(channel: DiscreteChannel) -> float:
    """Natural log of tau_max; the module's only floating-point output.

    Every row counts: the channel is read as conditioned on a
    full-support input, which is the regime where the leakage does not
    depend on the input distribution at all.
    """
    return log_fraction(tau_max(channel))


def total_variation(p: Pmf, q: Pmf) -> Fraction:
    if p.alphabet != q.alphabet:
        raise LeakboundError("total variation needs a shared alphabet")
    return sum((abs(p[y] - q[y]) for y in p.alphabet), ZERO) / 2


@dataclass(frozen=True)
class MeasureSet:
    """All scalar measures of one channel; tau_max2 is None when n = 1."""

    tau: Fraction
    tau_max: Fraction
    tau_max2: Fraction | None
    leakage_log: float


def measure_set(channel: DiscreteChannel) -> MeasureSet:
    return MeasureSet(
        tau=doeblin(channel),
        tau_max=tau_max(channel),
        tau_max2=tau_max2(channel) if channel.n >= 2 else None,
        leakage_log=maximal_leakage(channel),
    )


def make_q_ary_symmetric(q: int, delta) -> DiscreteChannel:
    """q-ary symmetric channel: P(y|x) = 1-delta if y=x else delta/(q-1)."""
    delta = as_fraction(delta)
    if q < 2:
        raise LeakboundError("q-ary symmetric channel needs q >= 2")
    if delta < 0 or delta > 1:
        raise LeakboundError(f"crossover {delta} outside [0, 1]")
    alphabet = tuple(str(i) for i in range(q))
    off = delta / (q - 1)
    rows = []
    for x in alphabet:
        rows.append(Pmf(alphabet, {y: (1 - delta if y == x else off) for y in alphabet}))
    return DiscreteChannel(rows, alphabet)


def make_erasure(q: int, eps) -> DiscreteChannel:
    """Erasure channel: P(x|x) = 1-eps, P(e|x) = eps, erasure symbol "e"."""
    eps = as_fraction(eps)
    if q < 1:
        raise LeakboundError("erasure channel needs q >= 1")
    if eps < 0 or eps > 1:
        raise LeakboundError(f"erasure probability {eps} outside [0, 1]")
    inputs = tuple(str(i) for i in range(q))
    outputs = inputs + ("e",)
    rows = []
    for x in inputs:
        rows.append(Pmf(outputs, {x: 1 - eps, "e": eps}))
    return DiscreteChannel(rows, inputs)
