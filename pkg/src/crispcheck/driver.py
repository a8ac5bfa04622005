"""Command-line entry point: loads modules in import order and reports verdicts."""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from .core import Signature
from .surface import NO_SPAN, RawDecl, SyntaxProblem, parse_source, pretty
from .typecheck import CheckError, Diagnostic, Rechecker, Skipped, check_declaration

PRELUDE = "prelude.ctt"
SUFFIX = ".ctt"

USAGE = """usage: crispcheck check [options] FILE...
       crispcheck manifest [options] MANIFEST

options:
  --json          diagnostics as JSON lines on stderr
  --no-prelude    do not import prelude.ctt automatically
  --path DIR      extra import search directory (repeatable)
  --verbose       list every declaration with its type
  --timings       report checking time per module
  --double-check  re-check every elaborated term with the kernel checker
"""


@dataclass
class Options:
    json: bool = False
    no_prelude: bool = False
    paths: list[Path] = field(default_factory=list)
    verbose: bool = False
    timings: bool = False
    double_check: bool = False


@dataclass
class Module:
    path: Path
    name: str
    decls: list[RawDecl] = field(default_factory=list)
    imports: list["Module"] = field(default_factory=list)
    sig: Signature | None = None
    # declaration name -> "ok" | "error" | "skipped"
    status: dict[str, str] = field(default_factory=dict)
    diagnostics: list[Diagnostic] = field(default_factory=list)
    # set when the file as a whole could not be processed
    fatal: Diagnostic | None = None
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return self.fatal is None and not self.diagnostics

    @property
    def failed_names(self) -> frozenset[str]:
        own = {n for n, s in self.status.items() if s != "ok"}
        for m in self.imports:
            own |= m.failed_names
        return frozenset(own)

    def closure(self) -> list["Module"]:
        """Import closure in dependency order, ending with this module."""
        seen: dict[Path, Module] = {}

        def visit(m: Module):
            if m.path in seen:
                return
            for dep in m.imports:
                visit(dep)
            seen[m.path] = m

        visit(self)
        return list(seen.values())


def display(path: Path) -> str:
    try:
        rel = os.path.relpath(path)
    except ValueError:
        return str(path)
    return rel if not rel.startswith("..") else str(path)


def env_paths() -> list[Path]:
    raw = os.environ.get("CRISPCHECK_PATH", "")
    return [Path(p) for p in raw.split(os.pathsep) if p]


class Session:
    """Loads and checks modules; each file is checked at most once."""

    def __init__(self, options: Options | None = None):
        self.options = options or Options()
        self.modules: dict[Path, Module] = {}
        self.order: list[Module] = []

    # -- import resolution

    @staticmethod
    def corpus_root(path: Path) -> Path | None:
        """Nearest enclosing directory that holds a prelude."""
        for d in [path.parent, *path.parent.parents]:
            if (d / PRELUDE).is_file():
                return d
        return None

    def search_dirs(self, importer: Path) -> list[Path]:
        root = self.corpus_root(importer)
        dirs = [importer.parent, *([root] if root else []), *self.options.paths, *env_paths()]
        out: list[Path] = []
        for d in dirs:
            d = d.resolve()
            if d not in out:
                out.append(d)
        return out

    def find_prelude(self, path: Path) -> Path | None:
        if self.options.no_prelude or path.name == PRELUDE:
            return None
        for d in self.search_dirs(path):
            if (d / PRELUDE).is_file():
                return (d / PRELUDE).resolve()
        return None

    def resolve(self, name: str, importer: Path) -> tuple[Path | None, list[Path]]:
        tried = [d / (name + SUFFIX) for d in self.search_dirs(importer)]
        for p in tried:
            if p.is_file():
                return p.resolve(), tried
        return None, tried

    # -- loading

    def load(self, path: Path | str) -> Module:
        return self._load(Path(path).resolve(), [])

    def _load(self, path: Path, stack: list[Path]) -> Module:
        if path in self.modules:
            return self.modules[path]
        module = Module(path, path.stem)
        self.modules[path] = module
        shown = display(path)
        try:
            module.decls = parse_source(path.read_bytes())
        except SyntaxProblem as e:
            module.fatal = Diagnostic(e.code, e.message, e.span, shown)
            self.order.append(module)
            return module
        stack = stack + [path]
        deps: list[tuple[Path, RawDecl | None]] = []
        prelude = self.find_prelude(path)
        if prelude is not None:
            deps.append((prelude.resolve(), None))
        for d in module.decls:
            if d.kind != "import":
                continue
            target, tried = self.resolve(d.name, path)
            if target is None:
                where = ", ".join(display(p) for p in tried)
                module.fatal = Diagnostic("E-IMPORT", f"cannot find module {d.name}; "
                                          f"tried {where}", d.span, shown)
                self.order.append(module)
                return module
            deps.append((target, d))
        for target, d in deps:
            if target in stack:
                cycle = stack[stack.index(target):] + [target]
                module.fatal = Diagnostic(
                    "E-IMPORT", "import cycle: " + " -> ".join(display(p) for p in cycle),
                    d.span if d is not None else NO_SPAN, shown)
                self.order.append(module)
                return module
            dep = self._load(target, stack)
            if dep.fatal is not None:
                module.fatal = Diagnostic("E-IMPORT", f"imported module {display(target)} "
                                          "could not be loaded",
                                          d.span if d is not None else NO_SPAN, shown)
                self.order.append(module)
                return module
            if dep not in module.imports:
                module.imports.append(dep)
        start = time.perf_counter()
        self.check(module)
        module.seconds = time.perf_counter() - start
        self.order.append(module)
        return module

    def check(self, module: Module) -> None:
        shown = display(module.path)
        sig = Signature([m.sig for m in module.imports], module.name)
        module.sig = sig
        failed = set(module.failed_names)
        for decl in module.decls:
            if decl.kind == "import":
                continue
            try:
                const = check_declaration(sig, decl, frozenset(failed))
                if self.options.double_check:
                    Rechecker(sig).check_constant(const)
                module.status[decl.name] = "ok"
            except Skipped:
                module.status[decl.name] = "skipped"
                failed.add(decl.name)
            except CheckError as e:
                module.status[decl.name] = "error"
                failed.add(decl.name)
                module.diagnostics.append(
                    Diagnostic(e.code, e.message, e.span, shown, e.context, decl.name))
            except RecursionError:
                module.status[decl.name] = "error"
                failed.add(decl.name)
                module.diagnostics.append(Diagnostic(
                    "E-CONV", "term too deeply nested to check", decl.span, shown, "", decl.name))


# ---------------------------------------------------------------------------
# Reporting


def line_col(path: Path, offset: int) -> tuple[int, int]:
    try:
        data = path.read_bytes()[:offset]
    except OSError:
        return 0, 0
    return data.count(b"\n") + 1, offset - (data.rfind(b"\n") + 1) + 1


def format_diagnostic(d: Diagnostic, path: Path, verbose: bool) -> str:
    line, col = line_col(path, d.span[0])
    where = f" in {d.decl}" if d.decl else ""
    text = f"{d.file}:{line}:{col}: {d.code}{where}: {d.message}"
    if d.context and (verbose or d.code == "E-CRISP-VAR"):
        text += f"\n    context: {d.context}"
    return text


def report(session: Session, modules: list[Module], out, err) -> bool:
    opts = session.options
    ok = True
    for m in modules:
        shown = display(m.path)
        problems = ([m.fatal] if m.fatal else []) + m.diagnostics
        n = sum(1 for d in m.decls if d.kind != "import")
        if m.fatal is not None:
            line = f"{shown}: FAILED ({m.fatal.code})"
        elif m.diagnostics:
            skipped = sum(1 for s in m.status.values() if s == "skipped")
            line = (f"{shown}: FAILED ({len(m.diagnostics)} error(s), "
                    f"{skipped} skipped, {n} declarations)")
        else:
            line = f"{shown}: ok ({n} declarations)"
        if opts.timings:
            line += f" [{m.seconds:.3f}s]"
        print(line, file=out)
        if opts.verbose and m.sig is not None:
            for const in m.sig:
                ty = pretty(const.type, names=[])
                params = "".join(f"({p} : Lvl) " for p in const.level_params)
                kind = "postulate" if const.postulated else "def"
                print(f"  {kind} {const.name} {params}: {ty}", file=out)
        for d in problems:
            ok = False
            if opts.json:
                print(d.to_json(), file=err)
            else:
                print(format_diagnostic(d, m.path, opts.verbose), file=err)
    return ok


def run_check(files: list[str], opts: Options, out, err) -> int:
    session = Session(opts)
    for f in files:
        if not Path(f).is_file():
            print(f"crispcheck: cannot read {f}", file=err)
            return 2
    for f in files:
        session.load(f)
    return 0 if report(session, session.order, out, err) else 1


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def parse_args(argv: list[str]):
    parser = _Parser(prog="crispcheck", add_help=False)
    parser.add_argument("verb", nargs="?")
    parser.add_argument("files", nargs="*")
    parser.add_argument("--json", action="store_true")
    parser.add_argument("--no-prelude", action="store_true")
    parser.add_argument("--path", action="append", default=[])
    parser.add_argument("--verbose", action="store_true")
    parser.add_argument("--timings", action="store_true")
    parser.add_argument("--double-check", action="store_true")
    parser.add_argument("-h", "--help", action="store_true")
    return parser.parse_intermixed_args(argv)


def main(argv: list[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parse_args(argv)
        if args.help:
            print(USAGE, file=out, end="")
            return 0
        if args.verb not in ("check", "manifest") or not args.files:
            raise _UsageError()
        if args.verb == "manifest" and len(args.files) != 1:
            raise _UsageError()
    except _UsageError:
        print(USAGE, file=err, end="")
        return 2
    opts = Options(args.json, args.no_prelude, [Path(p) for p in args.path], args.verbose,
                   args.timings, args.double_check)
    try:
        if args.verb == "check":
            return run_check(args.files, opts, out, err)
        from .formalization import run_manifest_cli
        return run_manifest_cli(args.files[0], opts, out, err)
    except OSError as e:
        print(f"crispcheck: {e}", file=err)
        return 2


if __name__ == "__main__":
    sys.exit(main())
