"""Level-wise frequent itemset mining, rule generation and the Weka-style
support-lowering scheduler.

The scheduler mirrors ``weka.associations.Apriori`` with ``-N``/``-C``:
minimum support starts one delta below the upper bound and is lowered by
``support_delta`` per cycle until the requested number of rules with at
least the minimum confidence is found or the lower bound is passed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from numbers import Rational

from .core import AssociationRule, Item, Itemset, TransactionDB

log = logging.getLogger(__name__)

Number = Fraction | float | int | str


def as_fraction(value: Number) -> Fraction:
    """Exact fraction for a user-facing threshold.

    Floats go through their shortest ``repr`` so that ``0.15`` means 3/20
    and not the binary approximation.
    """
    if isinstance(value, Rational):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"threshold must be finite, got {value}")
        return Fraction(repr(value))
    return Fraction(value)


def min_count(min_support: Number, n_transactions: int) -> int:
    """Smallest absolute count meeting ``min_support``: ``ceil(min_support * n)``."""
    return math.ceil(as_fraction(min_support) * n_transactions)


@dataclass(frozen=True)
class MiningParams:
    required_rules: int = 10
    min_confidence: Fraction = Fraction(9, 10)
    support_delta: Fraction = Fraction(1, 20)
    support_upper_bound: Fraction = Fraction(1)
    support_lower_bound: Fraction = Fraction(1, 10)
    max_cycles: int = 1000

    def __post_init__(self):
        for name in ("min_confidence", "support_delta", "support_upper_bound", "support_lower_bound"):
            object.__setattr__(self, name, as_fraction(getattr(self, name)))
        if self.required_rules < 1:
            raise ValueError("required_rules must be positive")
        if self.max_cycles < 1:
            raise ValueError("max_cycles must be positive")
        if not 0 < self.support_lower_bound <= self.support_upper_bound <= 1:
            raise ValueError("need 0 < support_lower_bound <= support_upper_bound <= 1")
        if not 0 < self.support_delta < 1:
            raise ValueError("need 0 < support_delta < 1")
        if not 0 < self.min_confidence <= 1:
            raise ValueError("need 0 < min_confidence <= 1")


@dataclass(frozen=True)
class FrequentItemset:
    itemset: Itemset
    count: int


@dataclass
class MiningReport:
    """Outcome of :func:`mine`.

    ``final_min_support`` is the support of the last cycle that ran (or
    ``None`` if the bounds left no cycle to run).  ``rules_found`` counts
    rules before truncation to ``required_rules``.
    """

    final_min_support: Fraction | None
    final_min_count: int
    cycles_performed: int
    n_transactions: int
    min_confidence: Fraction
    large_itemset_counts: list[tuple[int, int]]
    rules: list[AssociationRule]
    rules_found: int = 0
    warning: str | None = None

    @property
    def target_reached(self) -> bool:
        return self.warning is None


def _check_db(db: TransactionDB) -> None:
    if len(db) == 0:
        raise ValueError("cannot mine an empty transaction database")


def frequent_itemsets(db: TransactionDB, min_support: Number) -> list[FrequentItemset]:
    """All itemsets whose support count reaches ``ceil(min_support * |db|)``.

    Candidates of size k+1 are built by joining frequent k-itemsets that
    share their first k-1 items (canonical order) and dropping any
    candidate with an infrequent k-subset.  Mining stops at the first
    empty level.  The result is ordered by size, then canonically.
    """
    _check_db(db)
    support = as_fraction(min_support)
    if not 0 < support <= 1:
        raise ValueError(f"min_support must be in (0, 1], got {min_support}")
    threshold = min_count(support, len(db))

    level: dict[tuple[Item, ...], int] = {}
    for item in db.items:
        cover = db.cover((item,))
        if cover.bit_count() >= threshold:
            level[(item,)] = cover
    result: list[FrequentItemset] = []
    while level:
        result.extend(FrequentItemset(Itemset(k), c.bit_count()) for k, c in sorted(level.items()))
        level = _next_level(level, threshold)
    return result


def _next_level(level: dict[tuple[Item, ...], int], threshold: int) -> dict[tuple[Item, ...], int]:
    keys = sorted(level)
    nxt: dict[tuple[Item, ...], int] = {}
    for i, left in enumerate(keys):
        prefix = left[:-1]
        for right in keys[i + 1:]:
            if right[:-1] != prefix:
                break
            # one value per attribute, so such a join cannot be supported
            if left[-1].attribute == right[-1].attribute:
                continue
            cand = left + (right[-1],)
            if any(cand[:j] + cand[j + 1:] not in level for j in range(len(cand) - 2)):
                continue
            cover = level[left] & level[right]
            if cover.bit_count() >= threshold:
                nxt[cand] = cover
    return nxt


def _rule_order(rule: AssociationRule) -> tuple:
    return (
        -rule.confidence,
        -(rule.joint_count or 0),
        rule.antecedent.sort_key(),
        rule.consequent.sort_key(),
    )


def generate_rules(
    frequents: list[FrequentItemset],
    db: TransactionDB,
    min_confidence: Number,
) -> list[AssociationRule]:
    """Every rule ``L => f - L`` over the frequent itemsets ``f`` with
    confidence at least ``min_confidence``.

    Rules are ordered by confidence (descending), then by joint count
    (descending), then canonically by antecedent and consequent, and are
    numbered from 1 in that order.
    """
    _check_db(db)
    threshold = as_fraction(min_confidence)
    counts = {f.itemset: f.count for f in frequents}
    n = len(db)
    found = []
    for f in frequents:
        if len(f.itemset) < 2:
            continue
        items = sorted(f.itemset)
        for size in range(1, len(items)):
            for ante_items in combinations(items, size):
                ante = Itemset(ante_items)
                ante_count = counts.get(ante)
                if ante_count is None:
                    ante_count = db.cover(ante).bit_count()
                conf = Fraction(f.count, ante_count)
                if conf >= threshold:
                    found.append(
                        AssociationRule(
                            1,
                            ante,
                            f.itemset - ante,
                            support=Fraction(f.count, n),
                            confidence=conf,
                            joint_count=f.count,
                            antecedent_count=ante_count,
                            total_count=n,
                        )
                    )
    found.sort(key=_rule_order)
    return [_renumber(r, i) for i, r in enumerate(found, 1)]


def _renumber(rule: AssociationRule, new_id: int) -> AssociationRule:
    if rule.id == new_id:
        return rule
    return AssociationRule(
        new_id,
        rule.antecedent,
        rule.consequent,
        rule.support,
        rule.confidence,
        joint_count=rule.joint_count,
        antecedent_count=rule.antecedent_count,
        total_count=rule.total_count,
    )


def large_itemset_counts(frequents: list[FrequentItemset]) -> list[tuple[int, int]]:
    sizes: dict[int, int] = {}
    for f in frequents:
        sizes[len(f.itemset)] = sizes.get(len(f.itemset), 0) + 1
    return sorted(sizes.items())


def mine(db: TransactionDB, params: MiningParams | None = None) -> MiningReport:
    """Lower the minimum support cycle by cycle until enough rules are found.

    Cycle ``k`` mines at ``upper_bound - k * delta``.  The loop ends at the
    first cycle producing at least ``required_rules`` rules, when the next
    support would fall below the lower bound, or after ``max_cycles``.
    Running out of cycles is not an error: the report carries a warning
    and whatever rules the last cycle produced, truncated to
    ``required_rules``.
    """
    _check_db(db)
    params = params or MiningParams()
    n = len(db)
    report = MiningReport(
        final_min_support=None,
        final_min_count=0,
        cycles_performed=0,
        n_transactions=n,
        min_confidence=params.min_confidence,
        large_itemset_counts=[],
        rules=[],
    )
    rules: list[AssociationRule] = []
    for cycle in range(1, params.max_cycles + 1):
        support = params.support_upper_bound - cycle * params.support_delta
        if support < params.support_lower_bound:
            break
        frequents = frequent_itemsets(db, support)
        rules = generate_rules(frequents, db, params.min_confidence)
        report.cycles_performed = cycle
        report.final_min_support = support
        report.final_min_count = min_count(support, n)
        report.large_itemset_counts = large_itemset_counts(frequents)
        log.debug("cycle %d: min support %s, %d rules", cycle, support, len(rules))
        if len(rules) >= params.required_rules:
            break
    report.rules_found = len(rules)
    report.rules = rules[: params.required_rules]
    if not report.rules:
        report.warning = "no rule reached the minimum confidence before the support lower bound"
    elif len(rules) < params.required_rules:
        report.warning = f"only {len(rules)} of {params.required_rules} required rules found"
    return report
