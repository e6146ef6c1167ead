"""Association rule mining with post-mining to maximal non-redundant rules,
with a tennis hit-pair front end."""

from .apriori import FrequentItemset, MiningParams, MiningReport, frequent_itemsets, generate_rules, mine
from .core import (
    AssociationRule,
    Item,
    Itemset,
    SchemaError,
    TransactionDB,
    UndefinedConfidenceError,
    make_rule,
    rule_confidence,
    rule_support,
    support_count,
)
from .pruning import PruneMode, PruneReport, is_redundant, maximal_nonredundant, subsumes

__version__ = "0.1.0"

__all__ = [
    "AssociationRule",
    "FrequentItemset",
    "Item",
    "Itemset",
    "MiningParams",
    "MiningReport",
    "PruneMode",
    "PruneReport",
    "SchemaError",
    "TransactionDB",
    "UndefinedConfidenceError",
    "frequent_itemsets",
    "generate_rules",
    "is_redundant",
    "make_rule",
    "maximal_nonredundant",
    "mine",
    "rule_confidence",
    "rule_support",
    "subsumes",
    "support_count",
]
