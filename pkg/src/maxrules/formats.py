"""Text formats at the edge of the pipeline.

* ARFF (nominal attributes only) as written for and read from Weka.
* The rule listing printed by ``weka.associations.Apriori``.
* Prolog rule facts ``rule(Id, [a=v,...], [a=v,...], Sup, Conf).``
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .core import AssociationRule, Item, Itemset, TransactionDB

MISSING = "?"


class FormatError(ValueError):
    """Input text does not follow the expected format."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


# -- ARFF --------------------------------------------------------------------

@dataclass
class ArffDocument:
    relation: str
    attributes: list[tuple[str, list[str]]]
    rows: list[tuple[str, ...]] = field(default_factory=list)

    def __post_init__(self):
        domains = [set(d) for _, d in self.attributes]
        for n, row in enumerate(self.rows, 1):
            if len(row) != len(domains):
                raise FormatError(f"data row {n} has {len(row)} values, expected {len(domains)}")
            for (name, _), dom, v in zip(self.attributes, domains, row):
                if v != MISSING and v not in dom:
                    raise FormatError(f"data row {n}: value {v!r} not in domain of {name!r}")

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.attributes]

    @classmethod
    def from_table(cls, columns: Sequence[str], rows: Iterable[Sequence[str]], relation: str = "weka_input"):
        """Build a document whose domains are the observed values in first-seen order.

        ``?`` is written as the ARFF missing marker and never enters a domain.
        """
        rows = [tuple(r) for r in rows]
        domains: list[list[str]] = [[] for _ in columns]
        for row in rows:
            for dom, v in zip(domains, row):
                if v != MISSING and v not in dom:
                    dom.append(v)
        return cls(relation, list(zip(columns, domains)), rows)


_ARFF_SPECIAL = re.compile(r"[\s,{}'\"%\\]")
_ARFF_ESCAPES = {"\\": "\\\\", "'": "\\'", "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def quote_arff(token: str) -> str:
    if any(ord(ch) < 32 and ch not in "\n\r\t" for ch in token):
        raise FormatError(f"value {token!r} contains control characters and cannot be quoted")
    if token and token != MISSING and not _ARFF_SPECIAL.search(token):
        return token
    return "'" + "".join(_ARFF_ESCAPES.get(ch, ch) for ch in token) + "'"


def write_arff(doc: ArffDocument) -> str:
    if not doc.attributes:
        raise FormatError("an ARFF document needs at least one attribute")
    lines = [f"@relation {quote_arff(doc.relation)}", ""]
    for name, domain in doc.attributes:
        lines.append(f"@attribute {quote_arff(name)} {{{','.join(quote_arff(v) for v in domain)}}}")
    lines += ["", "@data"]
    for row in doc.rows:
        lines.append(",".join(MISSING if v == MISSING else quote_arff(v) for v in row))
    return "\n".join(lines) + "\n"


_UNESCAPE = {"n": "\n", "r": "\r", "t": "\t"}


def _arff_tokens(text: str, line: int) -> list[tuple[str, bool]]:
    """Split on commas, honouring quotes; yields ``(token, was_quoted)``."""
    tokens: list[tuple[str, bool]] = []
    i, n = 0, len(text)
    while True:
        while i < n and text[i] in " \t":
            i += 1
        if i < n and text[i] in "'\"":
            quote, i, buf = text[i], i + 1, []
            while i < n and text[i] != quote:
                if text[i] == "\\" and i + 1 < n:
                    i += 1
                    buf.append(_UNESCAPE.get(text[i], text[i]))
                else:
                    buf.append(text[i])
                i += 1
            if i >= n:
                raise FormatError("unterminated quoted value", line)
            tokens.append(("".join(buf), True))
            i += 1
            while i < n and text[i] in " \t":
                i += 1
        else:
            j = text.find(",", i)
            j = n if j < 0 else j
            tokens.append((text[i:j].strip(), False))
            i = j
        if i >= n:
            return tokens
        if text[i] != ",":
            raise FormatError(f"unexpected {text[i]!r}", line)
        i += 1


def _split_keyword(line: str) -> tuple[str, str]:
    head, rest = re.match(r"(\S+)\s*(.*)$", line).groups()
    return head.lower(), rest.strip()


def _leading_token(text: str, lineno: int) -> tuple[str, str]:
    """Attribute or relation name (possibly quoted) and the remainder."""
    if text[:1] in ("'", '"'):
        quote = text[0]
        i, buf = 1, []
        while i < len(text) and text[i] != quote:
            if text[i] == "\\" and i + 1 < len(text):
                i += 1
                buf.append(_UNESCAPE.get(text[i], text[i]))
            else:
                buf.append(text[i])
            i += 1
        if i >= len(text):
            raise FormatError("unterminated quoted name", lineno)
        return "".join(buf), text[i + 1:].strip()
    m = re.match(r"(\S+)\s*(.*)$", text)
    if not m:
        raise FormatError("missing name", lineno)
    name, rest = m.groups()
    if "{" in name:
        name, brace, tail = name.partition("{")
        rest = brace + tail + (" " + rest if rest else "")
    return name, rest.strip()


def read_arff(text: str) -> ArffDocument:
    """Parse the nominal subset of ARFF; other attribute types are rejected."""
    relation = None
    attributes: list[tuple[str, list[str]]] = []
    rows: list[tuple[str, ...]] = []
    in_data = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if in_data:
            if line.startswith("{"):
                raise FormatError("sparse ARFF data is not supported", lineno)
            toks = _arff_tokens(line, lineno)
            rows.append(tuple(MISSING if (t == MISSING and not q) else t for t, q in toks))
            continue
        keyword, rest = _split_keyword(line)
        if keyword == "@relation":
            relation, _ = _leading_token(rest, lineno)
        elif keyword == "@attribute":
            name, spec = _leading_token(rest, lineno)
            if not (spec.startswith("{") and spec.endswith("}")):
                raise FormatError(f"attribute {name!r}: only nominal attributes are supported, got {spec!r}", lineno)
            inner = spec[1:-1].strip()
            domain = [t for t, _ in _arff_tokens(inner, lineno)] if inner else []
            attributes.append((name, domain))
        elif keyword == "@data":
            in_data = True
        else:
            raise FormatError(f"unexpected line {line!r}", lineno)
    if relation is None:
        raise FormatError("missing @relation")
    if not in_data:
        raise FormatError("missing @data section")
    return ArffDocument(relation, attributes, rows)


def arff_to_transactions(doc: ArffDocument) -> TransactionDB:
    """One transaction per data row.

    The missing marker becomes the nominal item ``attr=?`` so that an ARFF
    written from a hit-pair table mines exactly like the table itself.
    """
    schema = {name: list(domain) for name, domain in doc.attributes}
    transactions = []
    for row in doc.rows:
        items = []
        for name, v in zip(doc.names, row):
            if v == MISSING and MISSING not in schema[name]:
                schema[name].append(MISSING)
            items.append(Item(name, v))
        transactions.append(Itemset(items))
    return TransactionDB(transactions, schema)


# -- Weka Apriori output -----------------------------------------------------

@dataclass
class ParsedWekaOutput:
    """Header fields and rules of a Weka Apriori run.

    ``printed_confidence`` keeps the rounded ``conf:(x)`` value of each
    rule (same order as ``rules``); the rules themselves carry the exact
    ratio of joint to antecedent count.
    """

    min_support: Fraction | None
    min_support_instances: int | None
    min_metric: Fraction | None
    cycles: int | None
    large_itemset_sizes: list[tuple[int, int]]
    rules: list[AssociationRule]
    printed_confidence: list[Fraction]


_RULE_START = re.compile(r"^\s*(\d+)\.\s")
_RULE = re.compile(
    r"^\s*(?P<id>\d+)\.\s+(?P<ante>.+?)\s+(?P<acount>\d+)\s+==>\s+(?P<cons>.+?)\s+(?P<joint>\d+)"
    r"\s+<?conf:\((?P<conf>[^)]*)\)>?(?P<rest>.*)$"
)
_HEADER = {
    "support": re.compile(r"Minimum support:\s*([\d.]+)\s*\((\d+) instances\)"),
    "metric": re.compile(r"Minimum metric <\w+>:\s*([\d.]+)"),
    "cycles": re.compile(r"Number of cycles performed:\s*(\d+)"),
    "large": re.compile(r"Size of set of large itemsets L\((\d+)\):\s*(\d+)"),
}


def _items(text: str, lineno: int) -> Itemset:
    try:
        return Itemset(Item.parse(tok) for tok in text.split())
    except ValueError as exc:
        raise FormatError(f"bad item list {text!r}: {exc}", lineno) from None


def parse_weka_rules(text: str, total_instances: int | None = None) -> ParsedWekaOutput:
    """Parse Weka's Apriori report.

    Rule lines may be wrapped; continuation lines are joined to the rule
    they follow.  Annotations after ``conf:(...)`` (lift, leverage,
    conviction) and trailing ``...`` are ignored.  When
    ``total_instances`` is given, rule supports become fractions of it;
    otherwise only the joint counts are known.
    """
    lines = text.splitlines()
    try:
        start = next(i for i, line in enumerate(lines) if line.strip() == "Best rules found:")
    except StopIteration:
        raise FormatError("no 'Best rules found:' section") from None

    header = "\n".join(lines[:start])
    min_support = instances = metric = cycles = None
    if m := _HEADER["support"].search(header):
        min_support, instances = Fraction(m.group(1)), int(m.group(2))
    if m := _HEADER["metric"].search(header):
        metric = Fraction(m.group(1))
    if m := _HEADER["cycles"].search(header):
        cycles = int(m.group(1))
    large = [(int(k), int(c)) for k, c in _HEADER["large"].findall(header)]

    logical: list[tuple[int, str]] = []
    for lineno, line in enumerate(lines[start + 1:], start + 2):
        stripped = line.strip()
        if not stripped or stripped == "...":
            continue
        if _RULE_START.match(line):
            logical.append((lineno, stripped))
        elif logical:
            logical[-1] = (logical[-1][0], logical[-1][1] + " " + stripped)
        else:
            raise FormatError(f"expected a numbered rule, got {stripped!r}", lineno)

    rules, printed = [], []
    for lineno, line in logical:
        m = _RULE.match(line)
        if not m:
            raise FormatError(f"malformed rule line {line!r}", lineno)
        try:
            conf_printed = Fraction(m.group("conf"))
        except ValueError:
            raise FormatError(f"bad confidence {m.group('conf')!r}", lineno) from None
        rest = m.group("rest").strip()
        if rest and not re.fullmatch(r"((<?\w+:\([^)]*\)>?|\[[^\]]*\]|\.\.\.)\s*)*", rest):
            raise FormatError(f"unexpected trailing text {rest!r}", lineno)
        ante_count, joint = int(m.group("acount")), int(m.group("joint"))
        if ante_count == 0 or joint > ante_count:
            raise FormatError(f"inconsistent counts {joint}/{ante_count}", lineno)
        support = None
        if total_instances:
            if joint > total_instances:
                raise FormatError(f"joint count {joint} exceeds {total_instances} instances", lineno)
            support = Fraction(joint, total_instances)
        try:
            rule = AssociationRule(
                int(m.group("id")),
                _items(m.group("ante"), lineno),
                _items(m.group("cons"), lineno),
                support=support,
                confidence=Fraction(joint, ante_count),
                joint_count=joint,
                antecedent_count=ante_count,
                total_count=total_instances,
            )
        except ValueError as exc:
            raise FormatError(str(exc), lineno) from None
        rules.append(rule)
        printed.append(conf_printed)
    return ParsedWekaOutput(min_support, instances, metric, cycles, large, rules, printed)


def weka_number(x: Fraction, digits: int = 2) -> str:
    """Round half up to ``digits`` decimals and drop trailing zeros, like Weka."""
    scale = 10**digits
    q = int(abs(x) * scale + Fraction(1, 2))
    whole, frac = divmod(q, scale)
    sign = "-" if x < 0 and q else ""
    if not frac:
        return f"{sign}{whole}"
    return f"{sign}{whole}." + str(frac).rjust(digits, "0").rstrip("0")


def format_weka_output(
    rules: Sequence[AssociationRule],
    *,
    min_support: Fraction,
    min_support_instances: int,
    min_confidence: Fraction,
    cycles: int,
    large_itemset_counts: Sequence[tuple[int, int]],
) -> str:
    """Render a mining run in Weka's Apriori report layout."""
    out = [
        "Apriori",
        "=======",
        "",
        f"Minimum support: {weka_number(min_support)} ({min_support_instances} instances)",
        f"Minimum metric <confidence>: {weka_number(min_confidence)}",
        f"Number of cycles performed: {cycles}",
        "",
        "Generated sets of large itemsets:",
        "",
    ]
    for k, count in large_itemset_counts:
        out += [f"Size of set of large itemsets L({k}): {count}", ""]
    out += ["Best rules found:", ""]
    width = len(str(len(rules)))
    for r in rules:
        if r.joint_count is None or r.antecedent_count is None:
            raise ValueError(f"rule {r.id} lacks absolute counts")
        out.append(
            f" {r.id:>{width}}. {r.antecedent} {r.antecedent_count} ==> "
            f"{r.consequent} {r.joint_count}    conf:({weka_number(r.confidence)})"
        )
    return "\n".join(out) + "\n"


# -- rule facts --------------------------------------------------------------

_BARE_ATOM = re.compile(r"[a-z][A-Za-z0-9_]*\Z")
_NUMBER = re.compile(r"-?(0|[1-9]\d*)(\.\d+)?\Z")


def prolog_atom(token: str) -> str:
    """``token`` as a Prolog term that reads back as the same text."""
    if _BARE_ATOM.match(token) or _NUMBER.match(token):
        return token
    return "'" + token.replace("\\", "\\\\").replace("'", "\\'") + "'"


def _terminating(x: Fraction) -> bool:
    d = x.denominator
    for p in (2, 5):
        while d % p == 0:
            d //= p
    return d == 1


def fact_number(x: Fraction, rational: bool = False) -> str:
    """Exact rendering of a measure.

    Integers print bare (so ``Conf = 1`` unifies in Prolog), terminating
    fractions as exact decimals unless ``rational``, anything else as ``p/q``.
    """
    if x.denominator == 1:
        return str(x.numerator)
    if rational or not _terminating(x):
        return f"{x.numerator}/{x.denominator}"
    digits = 0
    while (x * 10**digits).denominator != 1:
        digits += 1
    whole = x * 10**digits
    sign = "-" if whole < 0 else ""
    s = str(abs(whole.numerator)).rjust(digits + 1, "0")
    return f"{sign}{s[:-digits]}.{s[-digits:]}"


def _fact_list(items: Itemset, lowercase: bool) -> str:
    rendered = []
    for item in items:
        attr = item.attribute.lower() if lowercase else item.attribute
        rendered.append((attr, item.value))
    if lowercase and len({a for a, _ in rendered}) != len(rendered):
        raise ValueError(f"attributes of {items!r} collide after lower-casing")
    return "[" + ",".join(f"{prolog_atom(a)}={prolog_atom(v)}" for a, v in sorted(rendered)) + "]"


def export_rule_facts(
    rules: Iterable[AssociationRule],
    *,
    rational: bool = False,
    lowercase_attributes: bool = True,
) -> str:
    """One ``rule(Id, Ant, Cons, Sup, Conf).`` fact per line.

    Attribute names are lower-cased by default because Prolog reads an
    upper-case initial as a variable.  A rule with unknown support writes
    ``count(J)`` with its joint count instead.
    """
    lines = []
    for r in rules:
        if r.support is not None:
            sup = fact_number(r.support, rational)
        elif r.joint_count is not None:
            sup = f"count({r.joint_count})"
        else:
            raise ValueError(f"rule {r.id} has neither support nor joint count")
        lines.append(
            f"rule({r.id}, {_fact_list(r.antecedent, lowercase_attributes)}, "
            f"{_fact_list(r.consequent, lowercase_attributes)}, {sup}, {fact_number(r.confidence, rational)})."
        )
    return "".join(line + "\n" for line in lines)


_FACT_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<quoted>'(?:[^'\\]|\\.)*')"
    r"|(?P<number>-?\d+(?:\.\d+)?(?:/\d+)?)"
    r"|(?P<atom>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<punct>[()\[\],=.])"
    r")"
)


class _FactReader:
    def __init__(self, text: str, lineno: int):
        self.text, self.pos, self.lineno = text, 0, lineno

    def error(self, msg: str) -> FormatError:
        return FormatError(f"{msg} at column {self.pos + 1}", self.lineno)

    def next(self) -> tuple[str, str]:
        m = _FACT_TOKEN.match(self.text, self.pos)
        if not m or m.end() == self.pos:
            raise self.error("unexpected text")
        self.pos = m.end()
        kind = m.lastgroup
        return kind, m.group(kind)

    def expect(self, punct: str) -> None:
        kind, tok = self.next()
        if kind != "punct" or tok != punct:
            raise self.error(f"expected {punct!r}, got {tok!r}")

    def term(self) -> str:
        kind, tok = self.next()
        if kind == "quoted":
            return re.sub(r"\\(.)", r"\1", tok[1:-1])
        if kind in ("atom", "number") and "/" not in tok:
            return tok
        raise self.error(f"expected an atom, got {tok!r}")

    def itemset(self) -> Itemset:
        self.expect("[")
        items = []
        save = self.pos
        kind, tok = self.next()
        if (kind, tok) == ("punct", "]"):
            return Itemset()
        self.pos = save
        while True:
            attr = self.term()
            self.expect("=")
            items.append(Item(attr, self.term()))
            kind, tok = self.next()
            if (kind, tok) == ("punct", "]"):
                return Itemset(items)
            if (kind, tok) != ("punct", ","):
                raise self.error(f"expected ',' or ']', got {tok!r}")

    def measure(self) -> tuple[Fraction | None, int | None]:
        kind, tok = self.next()
        if kind == "number":
            return Fraction(tok), None
        if (kind, tok) == ("atom", "count"):
            self.expect("(")
            kind, tok = self.next()
            if kind != "number" or not tok.isdigit():
                raise self.error("count(...) needs an integer")
            self.expect(")")
            return None, int(tok)
        raise self.error(f"expected a number, got {tok!r}")

    def at_end(self) -> bool:
        return not self.text[self.pos:].strip()


def parse_rule_facts(text: str) -> list[AssociationRule]:
    """Inverse of :func:`export_rule_facts`.

    Blank lines and ``%`` comments are skipped.  Facts whose support
    exceeds the confidence are accepted; check ``rule.is_consistent``.
    """
    rules = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("%"):
            continue
        rd = _FactReader(line, lineno)
        kind, tok = rd.next()
        if (kind, tok) != ("atom", "rule"):
            raise rd.error("expected 'rule('")
        rd.expect("(")
        kind, tok = rd.next()
        if kind != "number" or not tok.isdigit():
            raise rd.error("rule id must be a positive integer")
        rule_id = int(tok)
        rd.expect(",")
        try:
            ante = rd.itemset()
            rd.expect(",")
            cons = rd.itemset()
        except ValueError as exc:
            if isinstance(exc, FormatError):
                raise
            raise rd.error(str(exc)) from None
        rd.expect(",")
        support, joint = rd.measure()
        rd.expect(",")
        confidence, _ = rd.measure()
        if confidence is None:
            raise rd.error("confidence must be a number")
        rd.expect(")")
        rd.expect(".")
        if not rd.at_end():
            raise rd.error("trailing text after fact")
        try:
            rules.append(AssociationRule(rule_id, ante, cons, support, confidence, joint_count=joint))
        except ValueError as exc:
            raise FormatError(str(exc), lineno) from None
    return rules
