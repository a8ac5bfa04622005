"""Manifest harness for the formalization corpus.

A manifest is a tab-separated file with one entry per line::

    file    declaration    tag    verdict[    code]

``declaration`` is ``*`` for a verdict on the whole file, ``verdict`` is
``accept`` or ``reject``, and a reject entry names the diagnostic code it
expects.  Two optional companions sit next to the manifest: ``coverage.txt``
lists the tags that must be covered, and ``symbols.tsv`` lists corpus names
that must each be declared by exactly one accepted file.
"""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .driver import Module, Options, Session, display, format_diagnostic
from .typecheck import CODES, Diagnostic

COVERAGE = "coverage.txt"
SYMBOLS = "symbols.tsv"


class ManifestError(Exception):
    """The manifest (or one of its companions) is malformed."""


@dataclass(frozen=True)
class ManifestEntry:
    file: str
    decl: str
    tag: str
    verdict: str
    code: str | None = None
    line: int = 0

    @property
    def whole_file(self) -> bool:
        return self.decl == "*"

    def expected(self) -> str:
        return self.verdict if self.code is None else f"{self.verdict} {self.code}"


@dataclass
class EntryResult:
    entry: ManifestEntry
    observed: str
    diagnostic: Diagnostic | None = None

    @property
    def passed(self) -> bool:
        return self.observed == self.entry.expected()


@dataclass
class SymbolRow:
    name: str
    symbol: str
    tag: str


@dataclass
class ManifestReport:
    results: list[EntryResult] = field(default_factory=list)
    uncovered: list[str] = field(default_factory=list)
    unlisted_files: list[str] = field(default_factory=list)
    symbol_problems: list[str] = field(default_factory=list)
    positive_files: list[str] = field(default_factory=list)
    negative_files: list[str] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def failures(self) -> list[EntryResult]:
        return [r for r in self.results if not r.passed]

    @property
    def ok(self) -> bool:
        return not (self.failures or self.uncovered or self.unlisted_files
                    or self.symbol_problems)


def _rows(text: str):
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip("\r")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        yield n, line.split("\t")


def parse_manifest(text: str) -> list[ManifestEntry]:
    entries = []
    for n, cols in _rows(text):
        if len(cols) not in (4, 5):
            raise ManifestError(f"line {n}: expected 4 or 5 tab-separated fields, got {len(cols)}")
        cols = [c.strip() for c in cols]
        file, decl, tag, verdict = cols[:4]
        code = cols[4] if len(cols) == 5 and cols[4] else None
        if not (file and decl and tag):
            raise ManifestError(f"line {n}: empty field")
        match verdict, code:
            case "accept", None:
                pass
            case "accept", _:
                raise ManifestError(f"line {n}: an accept entry takes no code")
            case "reject", None:
                raise ManifestError(f"line {n}: a reject entry needs a diagnostic code")
            case "reject", c if c not in CODES:
                raise ManifestError(f"line {n}: unknown diagnostic code {c}")
            case "reject", _:
                pass
            case _:
                raise ManifestError(f"line {n}: verdict must be accept or reject, got {verdict!r}")
        entries.append(ManifestEntry(file, decl, tag, verdict, code, n))
    if not entries:
        raise ManifestError("manifest has no entries")
    return entries


def parse_coverage(text: str) -> list[str]:
    return [line.strip() for _, (line, *_) in _rows(text)]


def parse_symbols(text: str) -> list[SymbolRow]:
    rows = []
    for n, cols in _rows(text):
        if len(cols) != 3:
            raise ManifestError(f"{SYMBOLS} line {n}: expected name, symbol and tag")
        rows.append(SymbolRow(*(c.strip() for c in cols)))
    return rows


def observe(module: Module, decl: str) -> tuple[str, Diagnostic | None]:
    """What the checker said about one declaration (or ``*``) of a module."""
    if module.fatal is not None:
        return f"reject {module.fatal.code}", module.fatal
    if decl == "*":
        if module.diagnostics:
            d = module.diagnostics[0]
            return f"reject {d.code}", d
        return "accept", None
    match module.status.get(decl):
        case None:
            return "missing", None
        case "ok":
            return "accept", None
        case "skipped":
            return "skipped", None
        case _:
            d = next(d for d in module.diagnostics if d.decl == decl)
            return f"reject {d.code}", d


def corpus_files(root: Path) -> list[Path]:
    return sorted(p.resolve() for p in root.rglob("*.ctt"))


def audit_symbols(rows: list[SymbolRow], modules: list[Module]) -> list[str]:
    problems = [f"{name} is listed {k} times in {SYMBOLS}"
                for name, k in Counter(r.name for r in rows).items() if k > 1]
    for r in rows:
        homes = [m for m in modules if m.status.get(r.name) == "ok"]
        if not homes:
            problems.append(f"{r.name} ({r.symbol}) is not declared by any accepted file")
        elif len(homes) > 1:
            where = ", ".join(display(m.path) for m in homes)
            problems.append(f"{r.name} ({r.symbol}) is declared more than once: {where}")
    return problems


def run_manifest(path: Path | str, options: Options | None = None) -> ManifestReport:
    path = Path(path)
    root = path.parent
    entries = parse_manifest(path.read_text(encoding="utf-8"))
    start = time.perf_counter()
    session = Session(options)
    report = ManifestReport()
    by_file: dict[str, list[ManifestEntry]] = {}
    for e in entries:
        by_file.setdefault(e.file, []).append(e)
    for file, group in by_file.items():
        target = root / file
        if not target.is_file():
            for e in group:
                report.results.append(EntryResult(e, "file not found"))
            continue
        module = session.load(target)
        for e in group:
            report.results.append(EntryResult(e, *observe(module, e.decl)))
        if all(e.verdict == "accept" for e in group):
            report.positive_files.append(file)
        else:
            report.negative_files.append(file)
    report.seconds = time.perf_counter() - start

    listed = {(root / f).resolve() for f in by_file}
    report.unlisted_files = [display(p) for p in corpus_files(root) if p not in listed]

    if (root / COVERAGE).is_file():
        tags = {e.tag for e in entries}
        wanted = parse_coverage((root / COVERAGE).read_text(encoding="utf-8"))
        report.uncovered = [t for t in wanted if t not in tags]

    if (root / SYMBOLS).is_file():
        rows = parse_symbols((root / SYMBOLS).read_text(encoding="utf-8"))
        accepted = [session.modules[(root / f).resolve()] for f in report.positive_files]
        report.symbol_problems = audit_symbols(rows, accepted)
    return report


def print_report(report: ManifestReport, out, err, verbose: bool = False) -> None:
    for r in report.results:
        e = r.entry
        mark = "PASS" if r.passed else "FAIL"
        line = f"{mark}  {e.file}  {e.decl}  [{e.tag}]  {e.expected()}"
        if not r.passed:
            line += f"  (observed: {r.observed})"
        print(line, file=out)
        if r.diagnostic is not None and (verbose or not r.passed):
            d = r.diagnostic
            print("    " + format_diagnostic(d, Path(d.file), verbose), file=err)
    for t in report.uncovered:
        print(f"FAIL  coverage: no entry is tagged {t}", file=out)
    for f in report.unlisted_files:
        print(f"FAIL  corpus file {f} has no manifest entry", file=out)
    for p in report.symbol_problems:
        print(f"FAIL  symbols: {p}", file=out)
    passed = len(report.results) - len(report.failures)
    print(f"{passed}/{len(report.results)} entries passed; "
          f"{len(report.positive_files)} accepted files, "
          f"{len(report.negative_files)} rejected files; "
          f"{report.seconds:.2f}s", file=out)


def run_manifest_cli(path: str, opts: Options, out, err) -> int:
    if not Path(path).is_file():
        print(f"crispcheck: cannot read {path}", file=err)
        return 2
    try:
        report = run_manifest(path, opts)
    except ManifestError as e:
        print(f"crispcheck: malformed manifest {path}: {e}", file=err)
        return 2
    print_report(report, out, err, opts.verbose)
    return 0 if report.ok else 1
