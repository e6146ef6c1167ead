"""Batch driver for one iteration of the mining process.

An iteration runs match XML -> hit-pair table -> transactions -> Apriori
-> pruning -> report, writing every intermediate artifact so the result
can be inspected stage by stage.  ARFF input enters at the mining stage;
Weka output and rule fact files enter at pruning.  Picking new parameters
for the next iteration is left to the operator.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import shutil
import subprocess
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .apriori import MiningParams, MiningReport, as_fraction, mine
from .core import AssociationRule, TransactionDB
from .formats import (
    ArffDocument,
    arff_to_transactions,
    export_rule_facts,
    fact_number,
    format_weka_output,
    parse_rule_facts,
    parse_weka_rules,
    read_arff,
    weka_number,
    write_arff,
)
from .pruning import PruneMode, PruneReport, maximal_nonredundant
from .tennis import (
    AVAILABLE_ATTRIBUTES,
    AttributeSelection,
    Tessellation,
    build_hit_pairs,
    parse_match_xml,
    table_to_transactions,
    write_table_csv,
)

log = logging.getLogger(__name__)

OUT_ENV = "MAXRULES_OUT"
INPUT_KINDS = ("xml", "arff", "weka", "facts")
TABLE_KINDS = ("xml", "arff")

# reference sweep: (required rules, min confidence) cells, most at confidence 0.5
REFERENCE_GRID = [
    (5000, Fraction(1, 2)),
    (7500, Fraction(1, 2)),
    (10000, Fraction(1, 2)),
    (10000, Fraction(1)),
    (12500, Fraction(1, 2)),
    (12500, Fraction(1)),
    (15000, Fraction(1, 2)),
    (15000, Fraction(3, 4)),
]

COUNTS_HEADER = ("Required Rules", "Minimum Confidence", "Maximal Non-Redundant Rules")


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class RunConfig:
    input_path: Path
    input_kind: str | None = None
    tessellation: Tessellation = field(default_factory=Tessellation)
    selection: AttributeSelection = field(default_factory=AttributeSelection)
    params: MiningParams = field(default_factory=MiningParams)
    prune_mode: PruneMode = PruneMode.INCLUSIVE
    out_dir: Path | None = None
    report_format: str = "text"
    total_instances: int | None = None
    rational_facts: bool = False
    weka_jar: Path | None = None

    def __post_init__(self):
        object.__setattr__(self, "input_path", Path(self.input_path))
        if self.out_dir is not None:
            object.__setattr__(self, "out_dir", Path(self.out_dir))
        object.__setattr__(self, "prune_mode", PruneMode(self.prune_mode))
        if self.input_kind is not None and self.input_kind not in INPUT_KINDS:
            raise ValueError(f"input kind must be one of {INPUT_KINDS}")
        if self.report_format not in ("text", "csv"):
            raise ValueError("report format must be 'text' or 'csv'")

    @property
    def kind(self) -> str:
        return self.input_kind or detect_input_kind(self.input_path)


def detect_input_kind(path: Path) -> str:
    suffix = path.suffix.lower()
    if suffix == ".xml":
        return "xml"
    if suffix == ".arff":
        return "arff"
    if suffix in (".pl", ".facts"):
        return "facts"
    with open(path, "rb") as fh:
        head = fh.read(4096).decode("latin-1")
    stripped = head.lstrip()
    if stripped.startswith("<"):
        return "xml"
    if "Best rules found:" in head or stripped.startswith("Apriori"):
        return "weka"
    if stripped.lower().startswith(("@relation", "%")):
        return "arff"
    if stripped.startswith("rule("):
        return "facts"
    raise ValueError(f"cannot tell the input kind of {path}; pass --kind")


@dataclass
class IterationReport:
    input_kind: str
    parameters: dict[str, str]
    required_rules: int | None = None
    min_confidence: Fraction | None = None
    n_transactions: int | None = None
    mining: MiningReport | None = None
    prune: PruneReport | None = None
    rules_in: int = 0
    warnings: list[str] = field(default_factory=list)
    artifacts: dict[str, str] = field(default_factory=dict)
    error: str | None = None

    @property
    def maximal_count(self) -> int | None:
        return None if self.prune is None else len(self.prune.kept)

    def counts_row(self) -> tuple[str, str, str]:
        def show(v):
            if v is None:
                return "-"
            return fact_number(v) if isinstance(v, Fraction) else str(v)

        return (show(self.required_rules), show(self.min_confidence), show(self.maximal_count))


@dataclass
class _Prepared:
    kind: str
    db: TransactionDB | None = None
    rules: list[AssociationRule] | None = None
    min_metric: Fraction | None = None
    arff_text: str | None = None
    table_csv: str | None = None


@contextmanager
def _stage(name: str):
    try:
        yield
    except StageError:
        raise
    except (ValueError, OSError, RuntimeError) as exc:
        raise StageError(name, exc) from exc


def prepare(cfg: RunConfig) -> _Prepared:
    """Run every stage up to the mining input (table or rule list)."""
    kind = cfg.kind
    with _stage("read"):
        raw = cfg.input_path.read_bytes()
    if kind == "xml":
        with _stage("parse"):
            match = parse_match_xml(raw)
        with _stage("table"):
            rows = build_hit_pairs(match, cfg.tessellation, cfg.selection)
            columns = cfg.selection.include
            db = table_to_transactions(rows, cfg.selection)
            arff = write_arff(ArffDocument.from_table(columns, [r.values for r in rows]))
        return _Prepared(kind, db=db, arff_text=arff, table_csv=write_table_csv(rows, columns))
    text = raw.decode("utf-8")
    if kind == "arff":
        with _stage("parse"):
            doc = read_arff(text)
            db = arff_to_transactions(doc)
        return _Prepared(kind, db=db, arff_text=write_arff(doc))
    if kind == "weka":
        with _stage("parse"):
            parsed = parse_weka_rules(text, cfg.total_instances)
        return _Prepared(kind, rules=parsed.rules, min_metric=parsed.min_metric)
    with _stage("parse"):
        rules = parse_rule_facts(text)
    return _Prepared(kind, rules=rules)


def _parameters(cfg: RunConfig, prep: _Prepared) -> dict[str, str]:
    out = {"input": str(cfg.input_path), "kind": prep.kind, "prune_mode": cfg.prune_mode.value}
    if prep.kind in TABLE_KINDS:
        p = cfg.params
        out.update(
            required_rules=str(p.required_rules),
            min_confidence=fact_number(p.min_confidence),
            support_delta=fact_number(p.support_delta),
            support_upper_bound=fact_number(p.support_upper_bound),
            support_lower_bound=fact_number(p.support_lower_bound),
        )
    if prep.kind == "xml":
        t = cfg.tessellation
        out.update(
            grid=f"{t.n_x}x{t.n_y}",
            court=f"{t.court_half_width * 2:g}x{t.court_half_length * 2:g}",
            selection=",".join(cfg.selection.include),
        )
    return out


def run_weka(jar: Path, arff_path: Path, params: MiningParams) -> str:
    """Run Weka's Apriori on ``arff_path`` and return its stdout."""
    java = shutil.which("java")
    if java is None:
        raise RuntimeError("java not found on PATH")
    cmd = weka_command(jar, arff_path, params, java)
    log.info("running %s", " ".join(cmd))
    return subprocess.run(cmd, check=True, capture_output=True, text=True).stdout


def weka_command(jar: Path, arff_path: Path, params: MiningParams, java: str = "java") -> list[str]:
    return [
        java, "-cp", str(jar), "weka.associations.Apriori",
        "-t", str(arff_path),
        "-N", str(params.required_rules),
        "-C", str(float(params.min_confidence)),
        "-D", str(float(params.support_delta)),
        "-U", str(float(params.support_upper_bound)),
        "-M", str(float(params.support_lower_bound)),
    ]


def _write(out_dir: Path | None, name: str, text: str, report: IterationReport) -> None:
    if out_dir is None:
        return
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / name).write_text(text, encoding="utf-8")
    report.artifacts[name] = name


def _iterate(cfg: RunConfig, prep: _Prepared, out_dir: Path | None) -> IterationReport:
    report = IterationReport(input_kind=prep.kind, parameters=_parameters(cfg, prep))
    if prep.table_csv is not None:
        _write(out_dir, "table.csv", prep.table_csv, report)
    if prep.arff_text is not None:
        _write(out_dir, "weka_input.arff", prep.arff_text, report)

    if prep.kind in TABLE_KINDS:
        report.required_rules = cfg.params.required_rules
        report.min_confidence = cfg.params.min_confidence
        report.n_transactions = len(prep.db)
        if len(prep.db) == 0:
            report.warnings.append("the table is empty; mining skipped")
            _write(out_dir, "report." + ("csv" if cfg.report_format == "csv" else "txt"), render(report, cfg.report_format), report)
            return report
        if cfg.weka_jar is not None:
            if out_dir is None:
                raise StageError("mine", ValueError("external Weka needs an output directory"))
            with _stage("mine"):
                weka_text = run_weka(cfg.weka_jar, out_dir / "weka_input.arff", cfg.params)
                _write(out_dir, "weka_output.txt", weka_text, report)
                rules = parse_weka_rules(weka_text, len(prep.db)).rules
        else:
            with _stage("mine"):
                mined = mine(prep.db, cfg.params)
            report.mining = mined
            if mined.warning:
                report.warnings.append(mined.warning)
            rules = mined.rules
            if mined.final_min_support is not None:
                _write(
                    out_dir,
                    "weka_output.txt",
                    format_weka_output(
                        rules,
                        min_support=mined.final_min_support,
                        min_support_instances=mined.final_min_count,
                        min_confidence=mined.min_confidence,
                        cycles=mined.cycles_performed,
                        large_itemset_counts=mined.large_itemset_counts,
                    ),
                    report,
                )
    else:
        rules = prep.rules
        report.required_rules = len(rules)
        report.min_confidence = prep.min_metric

    report.rules_in = len(rules)
    with _stage("export"):
        _write(out_dir, "rules.pl", export_rule_facts(rules, rational=cfg.rational_facts), report)
    with _stage("prune"):
        report.prune = maximal_nonredundant(rules, cfg.prune_mode)
    with _stage("export"):
        _write(out_dir, "rules_pruned.pl", export_rule_facts(report.prune.kept, rational=cfg.rational_facts), report)
    if not report.prune.kept:
        report.warnings.append("no maximal non-redundant rules; repeat with different parameters")
    _write(out_dir, "report." + ("csv" if cfg.report_format == "csv" else "txt"), render(report, cfg.report_format), report)
    return report


def run_iteration(cfg: RunConfig) -> IterationReport:
    """One full iteration from the configured input to the pruned rules."""
    return _iterate(cfg, prepare(cfg), cfg.out_dir)


def sweep(
    cfg: RunConfig,
    grid: Sequence[tuple[int, Fraction | float]],
    jobs: int = 1,
) -> list[IterationReport]:
    """Run one iteration per ``(required_rules, min_confidence)`` cell.

    The table is built once.  A failing cell is recorded in its report and
    the sweep goes on; reports follow grid order.
    """
    if not grid:
        raise ValueError("sweep grid is empty")
    prep = prepare(cfg)
    if prep.kind not in TABLE_KINDS:
        raise ValueError("a sweep needs a table input (match XML or ARFF)")

    def cell(args):
        i, (n, c) = args
        out_dir = None if cfg.out_dir is None else cfg.out_dir / f"cell{i:02d}_N{n}_C{weka_number(as_fraction(c))}"
        try:
            params = replace(cfg.params, required_rules=n, min_confidence=as_fraction(c))
            return _iterate(replace(cfg, params=params), prep, out_dir)
        except (StageError, ValueError) as exc:
            log.error("cell %d failed: %s", i, exc)
            return IterationReport(
                input_kind=prep.kind,
                parameters={"required_rules": str(n), "min_confidence": str(c)},
                required_rules=n,
                min_confidence=as_fraction(c) if _is_number(c) else None,
                error=str(exc),
            )

    cells = list(enumerate(grid, 1))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(cell, cells))
    else:
        reports = [cell(c) for c in cells]
    if cfg.out_dir is not None:
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        (cfg.out_dir / "sweep.csv").write_text(render_sweep(reports, "csv"), encoding="utf-8")
        (cfg.out_dir / "sweep.txt").write_text(render_sweep(reports, "text"), encoding="utf-8")
    return reports


def _is_number(c) -> bool:
    try:
        as_fraction(c)
    except (ValueError, TypeError):
        return False
    return True


# -- rendering ---------------------------------------------------------------

def _table(rows: Sequence[Sequence[str]]) -> list[str]:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return [" | ".join(v.rjust(w) for v, w in zip(r, widths)) for r in rows]


def _csv(rows: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _summary_row(r: IterationReport) -> list[str]:
    m = r.mining
    p = r.prune
    return [
        *r.counts_row(),
        str(r.rules_in),
        "-" if r.n_transactions is None else str(r.n_transactions),
        "-" if m is None or m.final_min_support is None else fact_number(m.final_min_support),
        "-" if m is None else str(m.cycles_performed),
        "-" if p is None else str(len(p.removed_redundant)),
        "-" if p is None else str(len(p.removed_subsumed)),
        r.error or "",
    ]


_SUMMARY_HEADER = [
    *COUNTS_HEADER, "Rules In", "Transactions", "Final Min Support", "Cycles", "Redundant", "Subsumed", "Error",
]


def render(report: IterationReport, fmt: str = "text") -> str:
    if fmt == "csv":
        return _csv([_SUMMARY_HEADER, _summary_row(report)])
    lines = ["Iteration report", "================", "", "Parameters:"]
    lines += [f"  {k}: {v}" for k, v in report.parameters.items()]
    lines.append("")
    if report.n_transactions is not None:
        lines.append(f"Transactions: {report.n_transactions}")
    m = report.mining
    if m is not None:
        if m.final_min_support is None:
            lines.append("Mining: no cycle ran (support bounds leave no room)")
        else:
            lines.append(
                f"Mining: {m.cycles_performed} cycles, minimum support {fact_number(m.final_min_support)}"
                f" ({m.final_min_count} instances), {len(m.rules)} of {m.rules_found} rules kept"
            )
            lines.append("  large itemsets: " + ", ".join(f"L({k})={c}" for k, c in m.large_itemset_counts))
    p = report.prune
    if p is not None:
        lines.append(
            f"Pruning ({p.mode.value}): {report.rules_in} rules in, {len(p.kept)} kept, "
            f"{len(p.removed_redundant)} redundant, {len(p.removed_subsumed)} subsumed, "
            f"{len(p.removed_duplicate)} duplicates"
        )
    if report.error:
        lines.append(f"Error: {report.error}")
    if report.warnings:
        lines.append("Warnings:")
        lines += [f"  - {w}" for w in report.warnings]
    lines.append("")
    lines += _table([COUNTS_HEADER, report.counts_row()])
    if p is not None and p.kept:
        lines += ["", "Maximal non-redundant rules:"]
        for r in p.kept:
            sup = f"count:{r.joint_count}" if r.support is None else weka_number(r.support)
            lines.append(
                f"  {r.id}: [{','.join(map(str, r.antecedent))}] => [{','.join(map(str, r.consequent))}]"
                f" Sup:{sup} Conf:{weka_number(r.confidence)}"
            )
    return "\n".join(lines) + "\n"


def render_sweep(reports: Sequence[IterationReport], fmt: str = "text") -> str:
    rows = [_summary_row(r) for r in reports]
    if fmt == "csv":
        return _csv([_SUMMARY_HEADER, *rows])
    return "\n".join(_table([COUNTS_HEADER, *[r[:3] for r in rows]])) + "\n"


# -- command line ------------------------------------------------------------

def _pair(text: str, sep: str, conv):
    a, s, b = text.lower().partition(sep)
    if not s:
        raise argparse.ArgumentTypeError(f"expected A{sep}B, got {text!r}")
    try:
        return conv(a), conv(b)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _grid(text: str):
    return _pair(text, "x", int)


def _court(text: str):
    return _pair(text, "x", float)


def _cell(text: str):
    n, c = _pair(text, ":", str)
    try:
        return int(n), as_fraction(c)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _fraction(text: str) -> Fraction:
    try:
        return as_fraction(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", type=Path, help="match XML, ARFF, Weka output or rule fact file")
    p.add_argument("--kind", choices=INPUT_KINDS, help="input kind (default: detect)")
    p.add_argument("--grid", type=_grid, default=(4, 6), metavar="NxM", help="tessellation columns x rows (default 4x6)")
    p.add_argument("--court", type=_court, default=(8.23, 23.77), metavar="WxL", help="court size in meters (default 8.23x23.77)")
    p.add_argument("--select", help="comma-separated table columns; available: " + ",".join(AVAILABLE_ATTRIBUTES))
    p.add_argument("--delta", type=_fraction, default=Fraction(1, 20), help="support decrement per cycle (default 0.05)")
    p.add_argument("--upper-bound", type=_fraction, default=Fraction(1), help="support upper bound (default 1.0)")
    p.add_argument("--lower-bound", type=_fraction, default=Fraction(1, 10), help="support lower bound (default 0.1)")
    p.add_argument("--max-cycles", type=int, default=1000)
    p.add_argument("--prune-mode", choices=[m.value for m in PruneMode], default="inclusive")
    p.add_argument("--out", type=Path, help=f"output directory (default ${OUT_ENV} or ./maxrules_out)")
    p.add_argument("--format", choices=("text", "csv"), default="text", dest="report_format")
    p.add_argument("--instances", type=int, help="instance total for Weka output input")
    p.add_argument("--rational", action="store_true", help="write measures in fact files as p/q")
    p.add_argument("--weka-jar", type=Path, help="mine with an external weka.jar instead of the bundled miner")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maxrules", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one iteration")
    _common(run)
    run.add_argument("-N", "--num-rules", type=int, default=10, help="required number of rules (default 10)")
    run.add_argument("-C", "--min-confidence", type=_fraction, default=Fraction(9, 10), help="minimum confidence (default 0.9)")
    sw = sub.add_parser("sweep", help="run a grid of (-N, -C) cells on one table")
    _common(sw)
    sw.add_argument("--cell", type=_cell, action="append", metavar="N:C", help="grid cell, repeatable")
    sw.add_argument("--reference-grid", action="store_true", help="add the eight reference (N, C) cells")
    sw.add_argument("--jobs", type=int, default=1)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    n_x, n_y = args.grid
    width, length = args.court
    selection = AttributeSelection(tuple(a.strip() for a in args.select.split(","))) if args.select else AttributeSelection()
    params = MiningParams(
        required_rules=getattr(args, "num_rules", 10),
        min_confidence=getattr(args, "min_confidence", Fraction(9, 10)),
        support_delta=args.delta,
        support_upper_bound=args.upper_bound,
        support_lower_bound=args.lower_bound,
        max_cycles=args.max_cycles,
    )
    out = args.out or Path(os.environ.get(OUT_ENV, "maxrules_out"))
    return RunConfig(
        input_path=args.input,
        input_kind=args.kind,
        tessellation=Tessellation.from_court(n_x, n_y, width, length),
        selection=selection,
        params=params,
        prune_mode=PruneMode(args.prune_mode),
        out_dir=out,
        report_format=args.report_format,
        total_instances=args.instances,
        rational_facts=args.rational,
        weka_jar=args.weka_jar,
    )


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        if args.command == "run":
            report = run_iteration(cfg)
            sys.stdout.write(render(report, cfg.report_format))
        else:
            grid = list(args.cell or [])
            if args.reference_grid:
                grid += REFERENCE_GRID
            if not grid:
                parser.error("sweep needs --cell or --reference-grid")
            reports = sweep(cfg, grid, jobs=args.jobs)
            sys.stdout.write(render_sweep(reports, cfg.report_format))
    except (StageError, ValueError, OSError) as exc:
        print(f"maxrules: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
