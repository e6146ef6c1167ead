"""Tennis match XML, court tessellation and the temporal hit-pair table.

Match files follow this layout::

    <match>
      <player id="A" name="Sampras"/> ...
      <set id="1" score_A="5" score_B="3">
        <game id="1" service="A" score_A="0" score_B="0">
          <point id="1" top="B" service="A" score_A="0" score_B="0"
                 winner="A" error="0">
            <hit id="1" hand="forehand" type="ground"
                 time="00:00:42" x="0.17" y="-12.07"/> ...

Coordinates are in meters with the origin at the center of the court,
``x`` across and ``y`` along the court.  Every other element (``result``,
``match_facts``, ...) and every unknown attribute is kept verbatim so that
a parsed match serializes back to an equivalent document.
"""

from __future__ import annotations

import csv
import io
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .core import Item, Itemset, TransactionDB

MISSING = "?"
HANDS = ("forehand", "backhand")


class MatchXMLError(ValueError):
    """Malformed match XML; ``line``/``column`` locate syntax errors."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class MatchSchemaError(ValueError):
    """Well-formed XML that does not describe a valid match."""


@dataclass(frozen=True)
class Opaque:
    """An element kept as-is: tag, attributes, text and children."""

    tag: str
    attrib: tuple[tuple[str, str], ...] = ()
    text: str | None = None
    children: tuple["Opaque", ...] = ()

    @classmethod
    def from_element(cls, el: ET.Element) -> "Opaque":
        text = el.text.strip() if el.text and el.text.strip() else None
        return cls(el.tag, tuple(el.attrib.items()), text, tuple(cls.from_element(c) for c in el))

    def to_element(self) -> ET.Element:
        el = ET.Element(self.tag, dict(self.attrib))
        el.text = self.text
        el.extend(c.to_element() for c in self.children)
        return el


@dataclass(frozen=True)
class Player:
    id: str
    name: str | None = None
    extra: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class Hit:
    id: int
    hand: str
    type: str
    x: float
    y: float
    time: str | None = None
    extra: tuple[tuple[str, str], ...] = ()
    children: tuple[Opaque, ...] = ()


@dataclass(frozen=True)
class Point:
    id: str
    hits: tuple[Hit, ...] = ()
    top: str | None = None
    service: str | None = None
    score_A: str | None = None
    score_B: str | None = None
    winner: str | None = None
    error: str | None = None
    extra: tuple[tuple[str, str], ...] = ()
    children: tuple[Opaque, ...] = ()


@dataclass(frozen=True)
class Game:
    id: str
    points: tuple[Point, ...] = ()
    service: str | None = None
    score_A: str | None = None
    score_B: str | None = None
    extra: tuple[tuple[str, str], ...] = ()
    children: tuple[Opaque, ...] = ()


@dataclass(frozen=True)
class Set:
    id: str
    games: tuple[Game, ...] = ()
    score_A: str | None = None
    score_B: str | None = None
    extra: tuple[tuple[str, str], ...] = ()
    children: tuple[Opaque, ...] = ()


@dataclass(frozen=True)
class Match:
    players: tuple[Player, ...] = ()
    sets: tuple[Set, ...] = ()
    metadata: tuple[Opaque, ...] = ()
    extra: tuple[tuple[str, str], ...] = ()

    def points(self):
        """Yield ``(set, game, point)`` for every point in document order."""
        for s in self.sets:
            for g in s.games:
                for p in g.points:
                    yield s, g, p


# -- parsing -----------------------------------------------------------------

_POINT_ATTRS = ("top", "service", "score_A", "score_B", "winner", "error")
_GAME_ATTRS = ("service", "score_A", "score_B")
_SET_ATTRS = ("score_A", "score_B")


def _split(el: ET.Element, known: Iterable[str]):
    """Known attributes other than ``id`` as a dict, the rest as extras."""
    known = set(known)
    picked = {k: v for k, v in el.attrib.items() if k in known and k != "id"}
    extra = tuple((k, v) for k, v in el.attrib.items() if k not in known)
    return picked, extra


def _require(el: ET.Element, name: str, path: str) -> str:
    value = el.get(name)
    if value is None:
        raise MatchSchemaError(f"{path}: missing required attribute {name!r}")
    return value


def _coordinate(el: ET.Element, name: str, path: str) -> float:
    raw = _require(el, name, path)
    try:
        value = float(raw)
    except ValueError:
        raise MatchSchemaError(f"{path}: attribute {name}={raw!r} is not a number") from None
    if not math.isfinite(value):
        raise MatchSchemaError(f"{path}: attribute {name}={raw!r} is not finite")
    return value


def _parse_hit(el: ET.Element, path: str) -> Hit:
    raw_id = _require(el, "id", path)
    try:
        hit_id = int(raw_id)
    except ValueError:
        raise MatchSchemaError(f"{path}: hit id {raw_id!r} is not an integer") from None
    hand = _require(el, "hand", path)
    if hand not in HANDS:
        raise MatchSchemaError(f"{path}: hand must be one of {HANDS}, got {hand!r}")
    _, extra = _split(el, ("id", "hand", "type", "x", "y", "time"))
    return Hit(
        id=hit_id,
        hand=hand,
        type=_require(el, "type", path),
        x=_coordinate(el, "x", path),
        y=_coordinate(el, "y", path),
        time=el.get("time"),
        extra=extra,
        children=tuple(Opaque.from_element(c) for c in el),
    )


def _children(el: ET.Element, tag: str):
    wanted = [c for c in el if c.tag == tag]
    others = tuple(Opaque.from_element(c) for c in el if c.tag != tag)
    return wanted, others


def _parse_point(el: ET.Element, path: str) -> Point:
    path = f"{path}/point[@id={el.get('id')!r}]"
    picked, extra = _split(el, ("id",) + _POINT_ATTRS)
    hit_els, others = _children(el, "hit")
    hits = tuple(_parse_hit(h, f"{path}/hit[{i}]") for i, h in enumerate(hit_els, 1))
    if [h.id for h in hits] != list(range(1, len(hits) + 1)):
        raise MatchSchemaError(f"{path}: hit ids must be 1..{len(hits)} in order, got {[h.id for h in hits]}")
    return Point(id=_require(el, "id", path), hits=hits, extra=extra, children=others, **picked)


def _parse_game(el: ET.Element, path: str) -> Game:
    path = f"{path}/game[@id={el.get('id')!r}]"
    picked, extra = _split(el, ("id",) + _GAME_ATTRS)
    point_els, others = _children(el, "point")
    points = tuple(_parse_point(p, path) for p in point_els)
    return Game(id=_require(el, "id", path), points=points, extra=extra, children=others, **picked)


def _parse_set(el: ET.Element, path: str) -> Set:
    path = f"{path}/set[@id={el.get('id')!r}]"
    picked, extra = _split(el, ("id",) + _SET_ATTRS)
    game_els, others = _children(el, "game")
    games = tuple(_parse_game(g, path) for g in game_els)
    return Set(id=_require(el, "id", path), games=games, extra=extra, children=others, **picked)


def parse_match_xml(source: str | bytes) -> Match:
    """Parse a match document.

    Byte input honours the encoding named in the XML declaration
    (ISO-8859-1 and UTF-8 both work).
    """
    try:
        root = ET.fromstring(source)
    except ET.ParseError as exc:
        line, column = exc.position
        raise MatchXMLError(f"malformed XML: {exc.msg if hasattr(exc, 'msg') else exc}", line, column) from None
    if root.tag != "match":
        raise MatchSchemaError(f"root element must be <match>, got <{root.tag}>")
    players, sets, metadata = [], [], []
    for child in root:
        if child.tag == "player":
            picked, extra = _split(child, ("id", "name"))
            players.append(Player(id=_require(child, "id", "/match/player"), name=picked.get("name"), extra=extra))
        elif child.tag == "set":
            sets.append(_parse_set(child, "/match"))
        else:
            metadata.append(Opaque.from_element(child))
    return Match(tuple(players), tuple(sets), tuple(metadata), tuple(root.attrib.items()))


def read_match(path) -> Match:
    with open(path, "rb") as fh:
        return parse_match_xml(fh.read())


# -- serialization -----------------------------------------------------------

def _fmt_float(v: float) -> str:
    return repr(v)


def _element(tag: str, attrs: Sequence[tuple[str, str | None]], extra, children=()) -> ET.Element:
    el = ET.Element(tag, {k: v for k, v in attrs if v is not None})
    el.attrib.update(dict(extra))
    el.extend(c.to_element() for c in children)
    return el


def match_to_xml(match: Match, encoding: str = "UTF-8") -> str:
    """Serialize ``match``; ``parse_match_xml(match_to_xml(m)) == m``."""
    root = ET.Element("match", dict(match.extra))
    for p in match.players:
        root.append(_element("player", [("id", p.id), ("name", p.name)], p.extra))
    root.extend(m.to_element() for m in match.metadata)
    for s in match.sets:
        s_el = _element("set", [("id", s.id)] + [(a, getattr(s, a)) for a in _SET_ATTRS], s.extra, s.children)
        for g in s.games:
            g_el = _element("game", [("id", g.id)] + [(a, getattr(g, a)) for a in _GAME_ATTRS], g.extra, g.children)
            for p in g.points:
                p_el = _element(
                    "point", [("id", p.id)] + [(a, getattr(p, a)) for a in _POINT_ATTRS], p.extra, p.children
                )
                for h in p.hits:
                    p_el.append(
                        _element(
                            "hit",
                            [
                                ("id", str(h.id)),
                                ("hand", h.hand),
                                ("type", h.type),
                                ("time", h.time),
                                ("x", _fmt_float(h.x)),
                                ("y", _fmt_float(h.y)),
                            ],
                            h.extra,
                            h.children,
                        )
                    )
                g_el.append(p_el)
            s_el.append(g_el)
        root.append(s_el)
    ET.indent(root)
    body = ET.tostring(root, encoding="unicode")
    return f"<?xml version='1.0' encoding='{encoding}' ?>\n{body}\n"


# -- tessellation ------------------------------------------------------------

SINGLES_HALF_WIDTH = 4.115
SINGLES_HALF_LENGTH = 11.885


@dataclass(frozen=True)
class Tessellation:
    """An ``n_x`` by ``n_y`` grid over the court plus one outside band per side.

    Index 1 is the band beyond ``-half`` and ``n + 2`` the band beyond
    ``+half``; inner cells are numbered ``2 .. n + 1``.  Inner cells are
    half-open ``[lo, hi)`` except the last, which includes the court edge,
    so a ball on either line counts as inside.

    The defaults are singles court dimensions (8.23 m x 23.77 m) centred at
    the origin.  That is an assumption about the data; override it when the
    coordinates use another frame.
    """

    n_x: int = 4
    n_y: int = 6
    court_half_width: float = SINGLES_HALF_WIDTH
    court_half_length: float = SINGLES_HALF_LENGTH

    def __post_init__(self):
        if self.n_x < 1 or self.n_y < 1:
            raise ValueError("grid dimensions must be positive")
        if not (self.court_half_width > 0 and self.court_half_length > 0):
            raise ValueError("court half-width and half-length must be positive")

    @classmethod
    def from_court(cls, n_x: int, n_y: int, width: float, length: float) -> "Tessellation":
        return cls(n_x, n_y, width / 2, length / 2)

    def x_edges(self) -> tuple[float, ...]:
        return _edges(self.n_x, self.court_half_width)

    def y_edges(self) -> tuple[float, ...]:
        return _edges(self.n_y, self.court_half_length)


def _edges(n: int, half: float) -> tuple[float, ...]:
    """Cell boundaries ``-half = e_0 < ... < e_n = half``."""
    return tuple(-half + (2 * half) * i / n for i in range(n)) + (half,)


def _interval(v: float, n: int, half: float) -> int:
    if not math.isfinite(v):
        raise ValueError(f"coordinate {v!r} is not finite")
    if v < -half:
        return 1
    if v > half:
        return n + 2
    cell = min(int((v + half) // (2 * half / n)), n - 1)
    # snap rounding near a boundary onto the edge table
    edges = _edges(n, half)
    while cell > 0 and v < edges[cell]:
        cell -= 1
    while cell < n - 1 and v >= edges[cell + 1]:
        cell += 1
    return cell + 2


def tessellate(x: float, y: float, t: Tessellation) -> tuple[int, int]:
    """Interval indices ``(Ix, Iy)`` of a ball position."""
    return _interval(x, t.n_x, t.court_half_width), _interval(y, t.n_y, t.court_half_length)


# -- hit-pair table ----------------------------------------------------------

@dataclass(frozen=True)
class _PairContext:
    set: Set
    game: Game
    point: Point
    ordinal: int
    first: Hit
    second: Hit
    cells: tuple[tuple[int, int], tuple[int, int]]


def _opt(value: str | None) -> str:
    return MISSING if value is None else value


_COLUMNS: dict[str, Callable[[_PairContext], str]] = {
    "hit": lambda c: str(c.ordinal),
    "id_1": lambda c: str(c.first.id),
    "id_2": lambda c: str(c.second.id),
    "hand_1": lambda c: c.first.hand,
    "hand_2": lambda c: c.second.hand,
    "type_1": lambda c: c.first.type,
    "type_2": lambda c: c.second.type,
    "Ix_1": lambda c: str(c.cells[0][0]),
    "Iy_1": lambda c: str(c.cells[0][1]),
    "Ix_2": lambda c: str(c.cells[1][0]),
    "Iy_2": lambda c: str(c.cells[1][1]),
    "set": lambda c: c.set.id,
    "game": lambda c: c.game.id,
    "point": lambda c: c.point.id,
    "game_service": lambda c: _opt(c.game.service),
    "top": lambda c: _opt(c.point.top),
    "service": lambda c: _opt(c.point.service),
    "score_A": lambda c: _opt(c.point.score_A),
    "score_B": lambda c: _opt(c.point.score_B),
    "winner": lambda c: _opt(c.point.winner),
    "error": lambda c: _opt(c.point.error),
}

AVAILABLE_ATTRIBUTES = tuple(_COLUMNS)

DEFAULT_ATTRIBUTES = (
    "hit", "id_1", "id_2",
    "hand_1", "hand_2", "type_1", "type_2",
    "Ix_1", "Iy_1", "Ix_2", "Iy_2",
    "service", "winner", "error",
)


@dataclass(frozen=True)
class AttributeSelection:
    """Ordered list of hit-pair table columns to keep.

    Raw coordinates and timestamps are not selectable; positions only
    enter the table as tessellation indices.
    """

    include: tuple[str, ...] = DEFAULT_ATTRIBUTES

    def __post_init__(self):
        object.__setattr__(self, "include", tuple(self.include))
        unknown = [a for a in self.include if a not in _COLUMNS]
        if unknown:
            raise ValueError(f"unknown attributes {unknown}; choose from {', '.join(AVAILABLE_ATTRIBUTES)}")
        if len(set(self.include)) != len(self.include):
            raise ValueError("attribute selection contains duplicates")
        if not self.include:
            raise ValueError("attribute selection is empty")


@dataclass(frozen=True)
class HitPairRow:
    """One row of the temporal table: two consecutive hits of a point."""

    columns: tuple[str, ...]
    values: tuple[str, ...]

    def __getitem__(self, column: str) -> str:
        return self.values[self.columns.index(column)]

    def as_dict(self) -> dict[str, str]:
        return dict(zip(self.columns, self.values))


def build_hit_pairs(
    match: Match,
    t: Tessellation | None = None,
    sel: AttributeSelection | None = None,
) -> list[HitPairRow]:
    """One row per pair of consecutive hits ``(h_i, h_i+1)`` in document order."""
    t = t or Tessellation()
    sel = sel or AttributeSelection()
    getters = [_COLUMNS[a] for a in sel.include]
    rows = []
    for s, g, p in match.points():
        cells = [tessellate(h.x, h.y, t) for h in p.hits]
        for i in range(len(p.hits) - 1):
            ctx = _PairContext(s, g, p, i + 1, p.hits[i], p.hits[i + 1], (cells[i], cells[i + 1]))
            rows.append(HitPairRow(sel.include, tuple(get(ctx) for get in getters)))
    return rows


def table_to_transactions(rows: Sequence[HitPairRow], sel: AttributeSelection | None = None) -> TransactionDB:
    """Each row becomes one transaction of ``column=value`` items."""
    columns = (sel or AttributeSelection()).include
    schema: dict[str, list[str]] = {c: [] for c in columns}
    transactions = []
    for n, row in enumerate(rows):
        if row.columns != columns:
            raise ValueError(f"row {n} has columns {row.columns}, expected {columns}")
        for c, v in zip(columns, row.values):
            if v not in schema[c]:
                schema[c].append(v)
        transactions.append(Itemset(Item(c, v) for c, v in zip(columns, row.values)))
    return TransactionDB(transactions, schema)


def write_table_csv(rows: Sequence[HitPairRow], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(row.values)
    return buf.getvalue()
