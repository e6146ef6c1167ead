import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maxrules.apriori import MiningParams, frequent_itemsets, generate_rules, mine
from maxrules.core import AssociationRule, Itemset, TransactionDB, support_count
from maxrules.formats import (
    ArffDocument,
    FormatError,
    arff_to_transactions,
    export_rule_facts,
    fact_number,
    format_weka_output,
    parse_rule_facts,
    parse_weka_rules,
    prolog_atom,
    quote_arff,
    read_arff,
    weka_number,
    write_arff,
)
from maxrules.tennis import AttributeSelection, build_hit_pairs, parse_match_xml, table_to_transactions

import synth

S = Itemset.of
F = Fraction


@pytest.fixture
def listing3_text(fixtures):
    return (fixtures / "listing3.txt").read_text()


# -- ARFF --------------------------------------------------------------------

def test_arff_one_column():
    text = write_arff(ArffDocument.from_table(["a"], [("a",), ("b",)]))
    assert text == "@relation weka_input\n\n@attribute a {a,b}\n\n@data\na\nb\n"


def test_arff_default_selection_has_fourteen_attributes():
    m = parse_match_xml(synth.match_xml([4, 3], seed=1))
    sel = AttributeSelection()
    rows = build_hit_pairs(m, sel=sel)
    text = write_arff(ArffDocument.from_table(sel.include, [r.values for r in rows]))
    assert sum(line.startswith("@attribute") for line in text.splitlines()) == 14
    assert text.split("@data\n")[1].count("\n") == 5


def test_arff_empty_table():
    doc = read_arff(write_arff(ArffDocument.from_table(["a", "b"], [])))
    assert doc.rows == [] and doc.attributes == [("a", []), ("b", [])]


@pytest.mark.parametrize("token,quoted", [
    ("plain", "plain"), ("has space", "'has space'"), ("a,b", "'a,b'"),
    ("it's", "'it\\'s'"), ("?", "'?'"), ("", "''"), ("{x}", "'{x}'"),
])
def test_quote_arff(token, quoted):
    assert quote_arff(token) == quoted


def test_arff_round_trip_with_awkward_values():
    doc = ArffDocument.from_table(
        ["hand 1", "note"], [("fore hand", "it's"), ("back,hand", "?"), ("fore hand", "%x")], relation="my rel")
    again = read_arff(write_arff(doc))
    assert again == doc


def test_arff_reader_accepts_comments_and_case():
    text = "% header\n@RELATION r\n@ATTRIBUTE\ta {x, 'y z'}\n\n@DATA\n% row\nx\n'y z'\n?\n"
    doc = read_arff(text)
    assert doc.attributes == [("a", ["x", "y z"])]
    assert doc.rows == [("x",), ("y z",), ("?",)]


@pytest.mark.parametrize("text", [
    "@relation r\n@attribute a numeric\n@data\n1\n",
    "@relation r\n@attribute a {x}\n@data\ny\n",
    "@relation r\n@attribute a {x}\n@data\n{0 x}\n",
    "@relation r\n@attribute a {x}\n",
    "@attribute a {x}\n@data\n",
    "@relation r\n@attribute a {x}\n@data\nx,x\n",
])
def test_arff_reader_rejects(text):
    with pytest.raises(FormatError):
        read_arff(text)


def test_arff_error_has_line_number():
    with pytest.raises(FormatError) as info:
        read_arff("@relation r\n@attribute a {x}\n@attribute b string\n@data\n")
    assert info.value.line == 3


def test_arff_mines_like_the_table():
    m = parse_match_xml(synth.match_xml([5, 4, 6, 2, 3], seed=7))
    sel = AttributeSelection(("hand_1", "type_2", "service", "winner"))
    rows = build_hit_pairs(m, sel=sel)
    direct = table_to_transactions(rows, sel)
    via_arff = arff_to_transactions(read_arff(write_arff(ArffDocument.from_table(sel.include, [r.values for r in rows]))))
    assert direct.transactions == via_arff.transactions
    params = MiningParams(required_rules=20, min_confidence=F(1, 2))
    assert mine(direct, params).rules == mine(via_arff, params).rules


def test_arff_missing_value_becomes_item():
    db = arff_to_transactions(read_arff("@relation r\n@attribute a {x}\n@data\nx\n?\n"))
    assert support_count(S("a=?"), db) == 1


# -- Weka output -------------------------------------------------------------

def test_parse_listing3(listing3_text):
    out = parse_weka_rules(listing3_text)
    assert out.min_support == F(15, 100) and out.min_support_instances == 409
    assert out.min_metric == F(1, 2) and out.cycles == 17
    assert out.large_itemset_sizes == [(1, 40), (9, 1)]
    r1, r2 = out.rules
    assert (r1.id, r1.antecedent, r1.consequent) == (1, S("service=B", "hand_1=forehand"), S("type_2=ground"))
    assert (r1.antecedent_count, r1.joint_count, r1.confidence) == (1077, 1077, 1)
    assert r2.antecedent == S("service=B", "hand_1=forehand", "type_1=ground")
    assert r2.support is None
    assert out.printed_confidence == [1, 1]


def test_parse_listing3_with_total(listing3_text):
    out = parse_weka_rules(listing3_text, total_instances=2726)
    assert out.rules[0].support == F(1077, 2726)


def test_printed_confidence_is_consistent_with_counts(listing3_text):
    out = parse_weka_rules(listing3_text)
    for r, printed in zip(out.rules, out.printed_confidence):
        assert abs(F(r.joint_count, r.antecedent_count) - printed) <= F(5, 1000)


def test_parse_annotations_and_angle_brackets():
    text = (
        "Best rules found:\n\n"
        " 1. a=1 10 ==> b=1 9    <conf:(0.9)> lift:(1.2) lev:(0.01) [1] conv:(1.5)\n"
        " 2. a=1 b=1 9 ==> c=x 3    conf:(0.33)\n"
    )
    out = parse_weka_rules(text)
    assert [r.confidence for r in out.rules] == [F(9, 10), F(1, 3)]
    assert out.min_support is None and out.cycles is None


def test_parse_empty_rule_section():
    out = parse_weka_rules("Apriori\n\nBest rules found:\n\n")
    assert out.rules == []


def test_parse_missing_section():
    with pytest.raises(FormatError):
        parse_weka_rules("Apriori\nNo large itemsets and rules found!\n")


@pytest.mark.parametrize("bad,line", [
    ("Best rules found:\n 1. a=1 10 ==> b=1 9 conf:(0.9)\n 2. a=1 ==> b=1 conf:(1)\n", 3),
    ("Best rules found:\n 1. a=1 10 ==> b=1 12 conf:(1.2)\n", 2),
    ("Best rules found:\nnonsense\n", 2),
    ("Best rules found:\n 1. a=1 10 ==> b=1 9 conf:(0.9) trailing junk\n", 2),
])
def test_parse_errors_carry_line(bad, line):
    with pytest.raises(FormatError) as info:
        parse_weka_rules(bad)
    assert info.value.line == line


@pytest.mark.parametrize("x,text", [
    (F(1), "1"), (F(1, 2), "0.5"), (F(3, 20), "0.15"), (F(2, 3), "0.67"),
    (F(1, 200), "0.01"), (F(999, 1000), "1"), (F(0), "0"), (F(1077, 1072), "1"),
])
def test_weka_number(x, text):
    assert weka_number(x) == text


def test_weka_output_round_trip():
    rng = random.Random(3)
    rows = [{a: rng.choice("xyz") for a in "abcd"} for _ in range(40)]
    db = TransactionDB.from_rows(rows)
    report = mine(db, MiningParams(required_rules=15, min_confidence=F(1, 2)))
    text = format_weka_output(
        report.rules,
        min_support=report.final_min_support,
        min_support_instances=report.final_min_count,
        min_confidence=report.min_confidence,
        cycles=report.cycles_performed,
        large_itemset_counts=report.large_itemset_counts,
    )
    parsed = parse_weka_rules(text, total_instances=len(db))
    assert parsed.rules == report.rules
    assert parsed.cycles == report.cycles_performed
    assert parsed.min_support_instances == report.final_min_count
    assert parsed.large_itemset_sizes == report.large_itemset_counts


# -- rule facts --------------------------------------------------------------

def test_fact_example():
    r = AssociationRule(416, S("Iy_2=5"), S("hand_1=forehand"), F(18, 100), F(88, 100))
    assert export_rule_facts([r]) == "rule(416, [iy_2=5], [hand_1=forehand], 0.18, 0.88).\n"


def test_fact_listing3(listing3_text):
    rules = parse_weka_rules(listing3_text).rules
    assert export_rule_facts(rules[:1]) == (
        "rule(1, [hand_1=forehand,service='B'], [type_2=ground], count(1077), 1).\n")


def test_fact_empty():
    assert export_rule_facts([]) == ""
    assert parse_rule_facts("") == []


@pytest.mark.parametrize("tok,atom", [
    ("forehand", "forehand"), ("B", "'B'"), ("5", "5"), ("05", "'05'"), ("?", "'?'"),
    ("o'neil", "'o\\'neil'"), ("a b", "'a b'"), ("x_1", "x_1"),
])
def test_prolog_atom(tok, atom):
    assert prolog_atom(tok) == atom


@pytest.mark.parametrize("x,text,rat", [
    (F(1), "1", "1"), (F(1, 4), "0.25", "1/4"), (F(1, 3), "1/3", "1/3"), (F(0), "0", "0"),
    (F(1077, 2726), "1077/2726", "1077/2726"), (F(3, 1000), "0.003", "3/1000"),
])
def test_fact_number(x, text, rat):
    assert fact_number(x) == text
    assert fact_number(x, rational=True) == rat


rule_sets = st.builds(
    lambda seed, n, k: synth.random_rules(random.Random(seed), n, k, values=("x", "Y", "0", "it's", "?")),
    st.integers(0, 10_000), st.integers(0, 20), st.integers(2, 6),
)


@settings(max_examples=100)
@given(rule_sets, st.booleans())
def test_fact_round_trip(rules, rational):
    text = export_rule_facts(rules, rational=rational)
    assert parse_rule_facts(text) == rules
    assert parse_rule_facts(export_rule_facts(parse_rule_facts(text), rational=rational)) == rules


def test_fact_round_trip_keeps_upper_case_when_asked():
    r = AssociationRule(1, S("Iy_2=5"), S("Ix_1=3"), F(1, 5), F(1, 3))
    assert parse_rule_facts(export_rule_facts([r])) != [r]
    assert parse_rule_facts(export_rule_facts([r], lowercase_attributes=False)) == [r]


def test_fact_count_round_trip():
    r = AssociationRule(2, S("a=1"), S("b=1"), None, F(9, 10), joint_count=9)
    (again,) = parse_rule_facts(export_rule_facts([r]))
    assert again.support is None and again.joint_count == 9 and again.confidence == F(9, 10)


def test_fact_inconsistent_measures_are_accepted():
    (r,) = parse_rule_facts("rule(3, [a=1], [b=1], 0.9, 0.5).\n")
    assert not r.is_consistent


def test_fact_reader_skips_comments():
    text = "% generated\n\nrule(1, [a=1,b=x], [c='Y'], 1/3, 2/3).\n"
    (r,) = parse_rule_facts(text)
    assert r.antecedent == S("a=1", "b=x") and r.consequent == S("c=Y")
    assert (r.support, r.confidence) == (F(1, 3), F(2, 3))


@pytest.mark.parametrize("text,line", [
    ("rule(1, [a=1], [b=1], 0.5, 0.5)\n", 1),
    ("\nrule(1, [a=1], [b=1], 0.5, 1.5).\n", 2),
    ("rule(1, [a=1], [a=1], 0.5, 0.5).\n", 1),
    ("rule(1, [a=1], [], 0.5, 0.5).\n", 1),
    ("fact(1).\n", 1),
    ("rule(1, [a=1], [b=1], 0.5, 0.5). extra\n", 1),
])
def test_fact_reader_errors(text, line):
    with pytest.raises(FormatError) as info:
        parse_rule_facts(text)
    assert info.value.line == line


def test_facts_from_mining_round_trip():
    m = parse_match_xml(synth.match_xml([6, 5, 4, 7], seed=2))
    db = table_to_transactions(build_hit_pairs(m))
    rules = generate_rules(frequent_itemsets(db, F(3, 10)), db, F(1, 2))
    again = parse_rule_facts(export_rule_facts(rules, lowercase_attributes=False))
    assert [(r.id, r.key, r.support, r.confidence) for r in again] == [
        (r.id, r.key, r.support, r.confidence) for r in rules]
