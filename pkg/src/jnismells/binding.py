"""Link Java native declarations to their C/C++ implementations by JNI name mangling."""

from __future__ import annotations

import os
from collections import defaultdict
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable

from .lexer import Diagnostic, count_loc
from .source_facts import (
    ClassIndex,
    JavaClassFacts,
    Language,
    NativeCallSite,
    NativeFunctionFacts,
    NativeMethodDecl,
    SourceFile,
    call_site,
    language_for,
    native_targets,
    parse_java,
    parse_native,
)

_ESCAPES = {"_": "_1", ";": "_2", "[": "_3"}
_UNESCAPES = {"1": "_", "2": ";", "3": "["}
_HEX = set("0123456789abcdef")


def _escape(text: str) -> str:
    out = []
    for ch in text:
        if ch.isascii() and ch.isalnum():
            out.append(ch)
        elif ch == "/":
            out.append("_")
        elif ch in _ESCAPES:
            out.append(_ESCAPES[ch])
        else:
            units = ch.encode("utf-16-be")
            for k in range(0, len(units), 2):
                out.append("_0%04x" % int.from_bytes(units[k:k + 2], "big"))
    return "".join(out)


def mangle_jni_name(fqcn: str, method: str) -> str:
    """Short JNI symbol for ``fqcn.method``, e.g. ``Java_my_pkg_Api_do_1work``."""
    return "Java_" + _escape(fqcn.replace(".", "/")) + "_" + _escape(method)


def _demangle(symbol: str) -> tuple[list[str], str | None] | None:
    if not symbol.startswith("Java_"):
        return None
    s = symbol[5:]
    segments: list[str] = []
    buf: list[str] = []
    units = bytearray()

    def flush_units() -> bool:
        if units:
            try:
                buf.append(units.decode("utf-16-be"))
            except UnicodeDecodeError:
                return False
            units.clear()
        return True

    i, n = 0, len(s)
    signature = None
    while i < n:
        c = s[i]
        if c == "_":
            d = s[i + 1] if i + 1 < n else ""
            if d in _UNESCAPES:
                if not flush_units():
                    return None
                buf.append(_UNESCAPES[d])
                i += 2
                continue
            if d == "0":
                hexdigits = s[i + 2:i + 6]
                if len(hexdigits) != 4 or not set(hexdigits) <= _HEX:
                    return None
                units += int(hexdigits, 16).to_bytes(2, "big")
                i += 6
                continue
            if not flush_units():
                return None
            segments.append("".join(buf))
            buf = []
            # "__1" / "__0xxxx" is a separator before an escaped leading character;
            # any other "__" starts the overload signature
            if d == "_" and s[i + 2:i + 3] not in ("0", "1"):
                signature = s[i + 2:]
                break
            i += 1
            continue
        if not (c.isascii() and c.isalnum()):
            return None
        if not flush_units():
            return None
        buf.append(c)
        i += 1
    else:
        if not flush_units():
            return None
        segments.append("".join(buf))
    if len(segments) < 2 or any(not seg for seg in segments):
        return None
    return segments, signature


def demangle_jni_name(symbol: str) -> tuple[str, str] | None:
    """Inverse of :func:`mangle_jni_name`; an overload suffix after ``__`` is ignored."""
    parsed = _demangle(symbol)
    if parsed is None:
        return None
    segments, _ = parsed
    return ".".join(segments[:-1]), segments[-1]


def jni_overload_suffix(symbol: str) -> str | None:
    """The argument-signature part of an overloaded JNI symbol (text after ``__``), if any."""
    parsed = _demangle(symbol)
    return parsed[1] if parsed else None


class MatchKind(str, Enum):
    EXACT = "Exact"
    OVERLOAD_SUFFIXED = "OverloadSuffixed"
    UNMATCHED = "Unmatched"


@dataclass(frozen=True)
class Binding:
    decl: NativeMethodDecl
    impl: NativeFunctionFacts | None
    match_kind: MatchKind
    # every linked implementation; several for an overload-suffixed match
    impls: tuple[NativeFunctionFacts, ...] = ()


def _path_order(f: NativeFunctionFacts) -> tuple[str, int]:
    return f.file.path, f.line


def resolve_bindings(java_classes: Iterable[JavaClassFacts],
                     native_functions: Iterable[NativeFunctionFacts],
                     diagnostics: list[Diagnostic] | None = None) -> list[Binding]:
    by_symbol: dict[str, list[NativeFunctionFacts]] = defaultdict(list)
    for f in sorted(native_functions, key=_path_order):
        by_symbol[f.symbol_name].append(f)
    jni_symbols = sorted(s for s in by_symbol if s.startswith("Java_"))

    bindings = []
    for cls in java_classes:
        for decl in cls.native_decls:
            symbol = mangle_jni_name(decl.owner, decl.name)
            exact = by_symbol.get(symbol, [])
            if exact:
                if len(exact) > 1 and diagnostics is not None:
                    others = ", ".join(f.file.path for f in exact[1:])
                    diagnostics.append(Diagnostic(exact[0].file.path, exact[0].line,
                                                  f"duplicate symbol {symbol} also in {others}"))
                bindings.append(Binding(decl, exact[0], MatchKind.EXACT, (exact[0],)))
                continue
            prefix = symbol + "__"
            suffixed = [f for s in jni_symbols if s.startswith(prefix) for f in by_symbol[s][:1]]
            if suffixed:
                bindings.append(Binding(decl, suffixed[0], MatchKind.OVERLOAD_SUFFIXED, tuple(suffixed)))
            else:
                bindings.append(Binding(decl, None, MatchKind.UNMATCHED))
    return bindings


@dataclass
class CodebaseModel:
    files: list[SourceFile] = field(default_factory=list)
    java_classes: list[JavaClassFacts] = field(default_factory=list)
    native_functions: list[NativeFunctionFacts] = field(default_factory=list)
    bindings: list[Binding] = field(default_factory=list)
    call_index: dict[NativeMethodDecl, list[NativeCallSite]] = field(default_factory=dict)
    diagnostics: list[Diagnostic] = field(default_factory=list)
    release_id: str = ""

    def orphans(self) -> list[NativeFunctionFacts]:
        """``Java_``-prefixed functions that no declaration is bound to."""
        bound = {id(f) for b in self.bindings for f in b.impls}
        return [f for f in self.native_functions
                if f.symbol_name.startswith("Java_") and id(f) not in bound]

    def registered_classes(self) -> set[str]:
        """Classes named by ``FindClass`` literals in functions that call ``RegisterNatives``."""
        return {c for f in self.native_functions for c in f.registered_classes}


def build_model(sources: Iterable[tuple[SourceFile, str]], release_id: str = "",
                diagnostics: list[Diagnostic] | None = None) -> CodebaseModel:
    """Parse every source, resolve native calls across files and bind declarations."""
    diags: list[Diagnostic] = [] if diagnostics is None else diagnostics
    model = CodebaseModel(release_id=release_id, diagnostics=diags)
    for file, text in sorted(sources, key=lambda p: p[0].path):
        model.files.append(file)
        if file.language is Language.JAVA:
            model.java_classes.extend(parse_java(file, text, diags))
        elif file.language in (Language.C, Language.CPP):
            model.native_functions.extend(parse_native(file, text, diags))

    index = ClassIndex(model.java_classes)
    resolved = []
    for cls in model.java_classes:
        sites = []
        for call, decl in native_targets(cls, index):
            site = call_site(call, decl)
            sites.append(site)
            model.call_index.setdefault(decl, []).append(site)
        resolved.append(_with_sites(cls, sites))
    model.java_classes = resolved
    for cls in model.java_classes:
        for decl in cls.native_decls:
            model.call_index.setdefault(decl, [])
    model.bindings = resolve_bindings(model.java_classes, model.native_functions, diags)
    for f in model.orphans():
        diags.append(Diagnostic(f.file.path, f.line, f"orphan implementation {f.symbol_name}"))
    return model


def _with_sites(cls: JavaClassFacts, sites: list[NativeCallSite]) -> JavaClassFacts:
    return replace(cls, native_call_sites=tuple(sites))


_SKIP_DIRS = {".git", ".hg", ".svn", "node_modules", "__pycache__"}


def read_sources(root: str, release_id: str = "") -> list[tuple[SourceFile, str]]:
    """Java and C/C++ files under ``root`` with paths relative to it, in sorted order."""
    out = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames[:] = sorted(d for d in dirnames if d not in _SKIP_DIRS)
        for name in sorted(filenames):
            lang = language_for(name)
            if lang is Language.OTHER:
                continue
            full = os.path.join(dirpath, name)
            with open(full, encoding="utf-8", errors="replace") as fh:
                text = fh.read()
            rel = os.path.relpath(full, root).replace(os.sep, "/")
            out.append((SourceFile(rel, lang, count_loc(text), release_id), text))
    out.sort(key=lambda p: p[0].path)
    return out


def load_codebase(root: str, release_id: str = "",
                  diagnostics: list[Diagnostic] | None = None) -> CodebaseModel:
    return build_model(read_sources(root, release_id), release_id, diagnostics)
