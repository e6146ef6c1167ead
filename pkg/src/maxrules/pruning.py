"""Redundancy, subsumption and the maximal non-redundant rule set.

A rule ``L1 => R1`` is *redundant* if another rule ``L2 => R2`` with
confidence exactly 1 has ``L2 <= L1`` and ``R1 <= R2``: the more general
rule already guarantees everything ``r1`` predicts.

``r1`` *subsumes* ``r2`` if ``L1 <= L2``, ``R2 <= R1`` and ``r1``
dominates ``r2`` in support and confidence.  Two dominance flavours are
offered: ``INCLUSIVE`` (``>=`` on both measures) and ``STRICT`` (``>`` on
both).

A rule is kept iff it is neither redundant nor subsumed by any other rule
of the input, including rules that end up removed themselves.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

from .core import AssociationRule, Itemset


class PruneMode(str, enum.Enum):
    INCLUSIVE = "inclusive"
    STRICT = "strict"


@dataclass
class PruneReport:
    """Result of :func:`maximal_nonredundant`.

    Each ``removed_*`` entry is ``(rule id, witness id)``.  Exact
    duplicates (same antecedent and consequent) are collapsed onto the
    lowest id before pruning and listed in ``removed_duplicate``.
    """

    mode: PruneMode
    kept: list[AssociationRule]
    removed_redundant: list[tuple[int, int]] = field(default_factory=list)
    removed_subsumed: list[tuple[int, int]] = field(default_factory=list)
    removed_duplicate: list[tuple[int, int]] = field(default_factory=list)

    @property
    def n_input(self) -> int:
        return len(self.kept) + len(self.removed_redundant) + len(self.removed_subsumed) + len(self.removed_duplicate)


def _support_pair(r1: AssociationRule, r2: AssociationRule):
    if r1.support is not None and r2.support is not None:
        return r1.support, r2.support
    # rules from one Weka run share the instance total, so counts order like supports
    if r1.joint_count is not None and r2.joint_count is not None:
        return r1.joint_count, r2.joint_count
    raise ValueError(f"cannot compare support of rules {r1.id} and {r2.id}")


def subsumes(r1: AssociationRule, r2: AssociationRule, mode: PruneMode = PruneMode.INCLUSIVE) -> bool:
    """True iff ``r1`` subsumes ``r2`` under ``mode``.

    Rules with identical antecedent and consequent never subsume each
    other.
    """
    if r1.key == r2.key:
        return False
    if not (r1.antecedent <= r2.antecedent and r2.consequent <= r1.consequent):
        return False
    s1, s2 = _support_pair(r1, r2)
    if PruneMode(mode) is PruneMode.STRICT:
        return s1 > s2 and r1.confidence > r2.confidence
    return s1 >= s2 and r1.confidence >= r2.confidence


def _is_witness(r1: AssociationRule, r2: AssociationRule) -> bool:
    return (
        r2.id != r1.id
        and r2.confidence == 1
        and r2.antecedent <= r1.antecedent
        and r1.consequent <= r2.consequent
    )


def is_redundant(r1: AssociationRule, rules: Iterable[AssociationRule]) -> int | None:
    """Id of the lowest-id rule that makes ``r1`` redundant, else ``None``."""
    witnesses = [r2.id for r2 in rules if _is_witness(r1, r2)]
    return min(witnesses) if witnesses else None


def deduplicate(rules: Sequence[AssociationRule]) -> tuple[list[AssociationRule], list[tuple[int, int]]]:
    """Collapse rules with the same (antecedent, consequent) onto the lowest id.

    Returns the surviving rules in input order and ``(dropped, kept)`` id pairs.
    """
    first: dict[tuple[Itemset, Itemset], AssociationRule] = {}
    for r in sorted(rules, key=lambda r: r.id):
        first.setdefault(r.key, r)
    survivors = {id(r) for r in first.values()}
    unique = [r for r in rules if id(r) in survivors]
    dropped = sorted((r.id, first[r.key].id) for r in rules if id(r) not in survivors)
    return unique, dropped


def _subsets(itemset: Itemset):
    items = sorted(itemset)
    for k in range(len(items) + 1):
        for combo in combinations(items, k):
            yield Itemset(combo)


class _AntecedentIndex:
    """Rules grouped by antecedent, so that every rule whose antecedent is
    a subset of a given itemset can be found by enumerating its subsets."""

    def __init__(self, rules: Iterable[AssociationRule]):
        self._by_ante: dict[Itemset, list[AssociationRule]] = {}
        for r in rules:
            self._by_ante.setdefault(r.antecedent, []).append(r)

    def generalisations(self, antecedent: Itemset):
        if len(antecedent) > 16 or len(self._by_ante) < 2 ** len(antecedent):
            for ante, group in self._by_ante.items():
                if ante <= antecedent:
                    yield from group
        else:
            for sub in _subsets(antecedent):
                yield from self._by_ante.get(sub, ())


def maximal_nonredundant(
    rules: Sequence[AssociationRule],
    mode: PruneMode = PruneMode.INCLUSIVE,
    *,
    indexed: bool = True,
) -> PruneReport:
    """Keep the rules that are neither redundant nor subsumed.

    ``indexed=False`` runs the plain all-pairs check; both paths give the
    same report.  Kept rules are returned unchanged and in input order.
    A rule that is both redundant and subsumed is reported as redundant.
    """
    mode = PruneMode(mode)
    ids = [r.id for r in rules]
    if len(set(ids)) != len(ids):
        raise ValueError("rule ids must be unique")
    unique, dup = deduplicate(rules)
    report = PruneReport(mode=mode, kept=[], removed_duplicate=dup)

    if indexed:
        certain = _AntecedentIndex(r for r in unique if r.confidence == 1)
        everyone = _AntecedentIndex(unique)
        redundancy_pool = certain.generalisations
        subsumer_pool = everyone.generalisations
    else:
        redundancy_pool = subsumer_pool = lambda _ante: unique

    for r in unique:
        witness = is_redundant(r, redundancy_pool(r.antecedent))
        if witness is not None:
            report.removed_redundant.append((r.id, witness))
            continue
        subsumers = [o.id for o in subsumer_pool(r.antecedent) if o is not r and subsumes(o, r, mode)]
        if subsumers:
            report.removed_subsumed.append((r.id, min(subsumers)))
            continue
        report.kept.append(r)
    return report
