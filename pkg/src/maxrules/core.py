"""Items, itemsets, transaction databases and the support/confidence measures."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

_FORBIDDEN = re.compile(r"[\s=,]")


class SchemaError(ValueError):
    """An item or itemset does not fit the schema of a transaction database."""


class UndefinedConfidenceError(ZeroDivisionError):
    """Raised when the antecedent of a rule never occurs in the database."""


def _check_token(kind: str, token: str) -> None:
    if not isinstance(token, str) or not token:
        raise ValueError(f"{kind} must be a non-empty string, got {token!r}")
    if _FORBIDDEN.search(token):
        raise ValueError(f"{kind} {token!r} contains whitespace, '=' or ','")


@dataclass(frozen=True, order=True)
class Item:
    """A nominal ``attribute=value`` atom."""

    attribute: str
    value: str

    def __post_init__(self):
        _check_token("attribute", self.attribute)
        _check_token("value", self.value)

    @classmethod
    def parse(cls, text: str) -> "Item":
        attribute, sep, value = text.strip().partition("=")
        if not sep:
            raise ValueError(f"item {text!r} is not of the form attr=value")
        return cls(attribute, value)

    def __str__(self) -> str:
        return f"{self.attribute}={self.value}"


class Itemset(frozenset):
    """Immutable set of items with at most one item per attribute.

    Iteration always yields items in canonical order (attribute, then
    value), so anything rendered from an itemset is deterministic.
    """

    __slots__ = ()

    def __new__(cls, items: Iterable[Item] = ()):
        self = super().__new__(cls, items)
        seen = set()
        for item in frozenset.__iter__(self):
            if not isinstance(item, Item):
                raise TypeError(f"itemset members must be Item, got {item!r}")
            if item.attribute in seen:
                raise ValueError(f"attribute {item.attribute!r} occurs twice in itemset")
            seen.add(item.attribute)
        return self

    @classmethod
    def of(cls, *texts: str) -> "Itemset":
        """Build an itemset from ``"attr=value"`` strings."""
        return cls(Item.parse(t) for t in texts)

    def __iter__(self) -> Iterator[Item]:
        return iter(sorted(frozenset.__iter__(self)))

    def __or__(self, other):
        return Itemset(frozenset.__or__(self, other))

    def __and__(self, other):
        return Itemset(frozenset.__and__(self, other))

    def __sub__(self, other):
        return Itemset(frozenset.__sub__(self, other))

    union = __or__
    intersection = __and__
    difference = __sub__

    @property
    def attributes(self) -> frozenset:
        return frozenset(item.attribute for item in frozenset.__iter__(self))

    def __repr__(self) -> str:
        return "Itemset({" + ", ".join(str(i) for i in self) + "})"

    def __str__(self) -> str:
        return " ".join(str(i) for i in self)

    def sort_key(self) -> tuple:
        return tuple((i.attribute, i.value) for i in self)


class TransactionDB:
    """An immutable list of transactions plus the nominal schema they use.

    Duplicate transactions are legal and counted with multiplicity.  Each
    item's cover (the set of transaction indices holding it) is kept as a
    Python int bitmask so that support counting reduces to ``&`` and
    ``bit_count``.
    """

    __slots__ = ("_transactions", "_schema", "_covers", "_all")

    def __init__(
        self,
        transactions: Iterable[Iterable[Item]],
        schema: Mapping[str, Sequence[str]] | None = None,
    ):
        rows = tuple(t if isinstance(t, Itemset) else Itemset(t) for t in transactions)
        if schema is None:
            schema = _observed_schema(rows)
        frozen_schema = {attr: tuple(values) for attr, values in schema.items()}
        covers: dict[Item, int] = {}
        for idx, row in enumerate(rows):
            for item in frozenset.__iter__(row):
                domain = frozen_schema.get(item.attribute)
                if domain is None or item.value not in domain:
                    raise SchemaError(f"transaction {idx}: {item} is not in the schema")
                covers[item] = covers.get(item, 0) | (1 << idx)
        self._transactions = rows
        self._schema = frozen_schema
        self._covers = covers
        self._all = (1 << len(rows)) - 1

    @classmethod
    def from_rows(cls, rows: Iterable[Mapping[str, str]]) -> "TransactionDB":
        """Build a DB from dict rows; the schema records values in first-seen order."""
        return cls(Itemset(Item(k, str(v)) for k, v in row.items()) for row in rows)

    @property
    def transactions(self) -> tuple[Itemset, ...]:
        return self._transactions

    @property
    def schema(self) -> dict[str, tuple[str, ...]]:
        return dict(self._schema)

    @property
    def items(self) -> list[Item]:
        """Every item that occurs in at least one transaction, canonically sorted."""
        return sorted(self._covers)

    def __len__(self) -> int:
        return len(self._transactions)

    def __iter__(self) -> Iterator[Itemset]:
        return iter(self._transactions)

    def __repr__(self) -> str:
        return f"TransactionDB({len(self)} transactions, {len(self._schema)} attributes)"

    def cover(self, itemset: Iterable[Item]) -> int:
        """Bitmask of the transactions that contain every item of ``itemset``."""
        mask = self._all
        for item in itemset:
            if item.attribute not in self._schema:
                raise SchemaError(f"unknown attribute {item.attribute!r}")
            mask &= self._covers.get(item, 0)
            if not mask:
                break
        return mask


def _observed_schema(rows: Sequence[Itemset]) -> dict[str, list[str]]:
    schema: dict[str, list[str]] = {}
    for row in rows:
        for item in row:
            domain = schema.setdefault(item.attribute, [])
            if item.value not in domain:
                domain.append(item.value)
    return schema


def support_count(itemset: Iterable[Item], db: TransactionDB) -> int:
    """Number of transactions in ``db`` that contain ``itemset``.

    The empty itemset is contained in every transaction.
    """
    return db.cover(itemset).bit_count()


@dataclass(frozen=True)
class AssociationRule:
    """An association rule ``antecedent => consequent``.

    ``support`` and ``confidence`` are exact fractions.  ``support`` is
    ``None`` when only absolute counts are known (e.g. a rule read from a
    Weka dump whose instance total is unknown); ``joint_count`` then
    carries the information used for comparisons.  The count fields are
    provenance and do not take part in equality.
    """

    id: int
    antecedent: Itemset
    consequent: Itemset
    support: Fraction | None
    confidence: Fraction
    joint_count: int | None = field(default=None, compare=False)
    antecedent_count: int | None = field(default=None, compare=False)
    total_count: int | None = field(default=None, compare=False)

    def __post_init__(self):
        if not isinstance(self.antecedent, Itemset):
            object.__setattr__(self, "antecedent", Itemset(self.antecedent))
        if not isinstance(self.consequent, Itemset):
            object.__setattr__(self, "consequent", Itemset(self.consequent))
        if self.support is not None and not isinstance(self.support, Fraction):
            object.__setattr__(self, "support", Fraction(self.support))
        if not isinstance(self.confidence, Fraction):
            object.__setattr__(self, "confidence", Fraction(self.confidence))
        if self.id < 1:
            raise ValueError(f"rule id must be positive, got {self.id}")
        if not self.antecedent or not self.consequent:
            raise ValueError("antecedent and consequent must be non-empty")
        if self.antecedent & self.consequent:
            raise ValueError("antecedent and consequent must be disjoint")
        self.antecedent | self.consequent  # raises on a shared attribute
        if not 0 <= self.confidence <= 1:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        if self.support is not None and not 0 <= self.support <= 1:
            raise ValueError(f"support {self.support} outside [0, 1]")

    @property
    def key(self) -> tuple[Itemset, Itemset]:
        return (self.antecedent, self.consequent)

    @property
    def is_consistent(self) -> bool:
        """False when the recorded support exceeds the confidence.

        Measures computed from one database always satisfy
        ``support <= confidence``; rules loaded from files may not.
        """
        return self.support is None or self.support <= self.confidence

    def __str__(self) -> str:
        sup = "?" if self.support is None else f"{float(self.support):.2f}"
        return (
            f"{self.id}: [{', '.join(map(str, self.antecedent))}] => "
            f"[{', '.join(map(str, self.consequent))}] "
            f"Sup:{sup} Conf:{float(self.confidence):.2f}"
        )


def make_rule(rule_id: int, antecedent: Itemset, consequent: Itemset, db: TransactionDB) -> AssociationRule:
    """Build a rule whose support and confidence are counted in ``db``."""
    joint = support_count(antecedent | consequent, db)
    ante = support_count(antecedent, db)
    if ante == 0:
        raise UndefinedConfidenceError(f"antecedent {antecedent} never occurs")
    return AssociationRule(
        rule_id,
        antecedent,
        consequent,
        support=Fraction(joint, len(db)),
        confidence=Fraction(joint, ante),
        joint_count=joint,
        antecedent_count=ante,
        total_count=len(db),
    )


def rule_support(rule: AssociationRule, db: TransactionDB) -> Fraction:
    """Fraction of transactions containing both sides of ``rule``."""
    if len(db) == 0:
        raise ValueError("support is undefined on an empty database")
    return Fraction(support_count(rule.antecedent | rule.consequent, db), len(db))


def rule_confidence(rule: AssociationRule, db: TransactionDB) -> Fraction:
    """Fraction of antecedent-containing transactions that also contain the consequent."""
    ante = support_count(rule.antecedent, db)
    if ante == 0:
        raise UndefinedConfidenceError(f"antecedent {rule.antecedent} never occurs")
    return Fraction(support_count(rule.antecedent | rule.consequent, db), ante)
