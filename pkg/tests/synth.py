"""Deterministic synthetic match documents for tests."""

import random
from fractions import Fraction

from maxrules.core import AssociationRule, Item, Itemset

HANDS = ("forehand", "backhand")
TYPES = ("ground", "volley", "smash", "lob")


def match_xml(point_sizes, seed=0, planted=False):
    """A match whose points have the given hit counts.

    With ``planted``, every point served by A is won by A, so the rule
    ``service=A => winner=A`` holds with confidence 1; nothing else is
    tied to the server.
    """
    rng = random.Random(seed)
    out = [
        "<?xml version='1.0' encoding='UTF-8' ?>",
        "<match>",
        '  <player id="A" name="Alpha"/>',
        '  <player id="B" name="Beta"/>',
        '  <set id="1" score_A="0" score_B="0">',
    ]
    per_game = 4
    for g in range(0, len(point_sizes), per_game):
        out.append(f'    <game id="{g // per_game + 1}" service="A" score_A="0" score_B="0">')
        for p, k in enumerate(point_sizes[g:g + per_game], g + 1):
            service = rng.choice("AB")
            winner = "A" if planted and service == "A" else rng.choice("AB")
            out.append(
                f'      <point id="{p}" top="{rng.choice("AB")}" service="{service}" score_A="0" '
                f'score_B="0" winner="{winner}" error="{rng.choice("01")}">'
            )
            for h in range(1, k + 1):
                x = round(rng.uniform(-5, 5), 2)
                y = round(rng.uniform(-13, 13), 2)
                out.append(
                    f'        <hit id="{h}" hand="{rng.choice(HANDS)}" type="{rng.choice(TYPES)}" '
                    f'time="00:00:{h:02d}" x="{x}" y="{y}"/>'
                )
            out.append("      </point>")
        out.append("    </game>")
    out += ["  </set>", "</match>"]
    return "\n".join(out) + "\n"


def random_rules(rng, n_rules, n_attrs, values=("0", "1", "2"), grain=4):
    """Rules with arbitrary (not database-derived) measures.

    Measures are multiples of ``1/grain`` so that ties are common, and
    ``support <= confidence`` holds.
    """
    attrs = [f"a{i}" for i in range(n_attrs)]
    rules = []
    for rid in range(1, n_rules + 1):
        size = rng.randint(2, min(n_attrs, 5))
        chosen = rng.sample(attrs, size)
        split = rng.randint(1, size - 1)
        items = [Item(a, rng.choice(values)) for a in chosen]
        conf = Fraction(rng.randint(1, grain), grain)
        sup = Fraction(rng.randint(0, conf.numerator * (grain // conf.denominator)), grain)
        rules.append(AssociationRule(rid, Itemset(items[:split]), Itemset(items[split:]), sup, conf))
    return rules


def cycle17_db():
    """20 transactions where the only rules (a<=>b) need support 3/20.

    With the scheduler starting at 1.0 and stepping by 0.05, cycles 1-16
    (support 0.95 .. 0.20, i.e. at least 4 instances) find nothing and
    cycle 17 (0.15, 3 instances) finds both rules.
    """
    from maxrules.core import TransactionDB

    return TransactionDB([Itemset.of("a=1", "b=1")] * 3 + [Itemset.of("c=1")] * 17)
