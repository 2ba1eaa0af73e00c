"""Java fact extraction: classes, native declarations, calls and library loads."""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Iterable

from ..lexer import (
    CONTROL,
    Diagnostic,
    Structure,
    Token,
    build_structure,
    is_ident,
    is_op,
    loop_weight,
    match_brackets,
    split_args,
    tokenize,
)
from .types import (
    JavaClassFacts,
    LibraryLoad,
    LoadMechanism,
    MethodCall,
    NativeCallSite,
    NativeMethodDecl,
    PathKind,
    SourceFile,
)

_CLASS_KEYWORDS = {"class", "interface", "enum", "record"}
_MODIFIERS = {
    "public", "private", "protected", "static", "final", "native", "abstract",
    "synchronized", "transient", "volatile", "strictfp", "default", "sealed",
}
_NOT_CALLS = CONTROL | {
    "return", "new", "throw", "assert", "case", "super", "this", "instanceof",
    "class", "interface", "enum", "record",
}
_OS_IDENT = re.compile(
    r"(?i)^(os|osname|os_name|osarch|os_arch|ostype|os_type|platform|platformname)$"
    r"|windows|linux|macos|mac_os|osx|darwin|solaris|freebsd|aix"
)
_OS_PROPERTIES = {"os.name", "os.arch", "os.version"}
_LINK_ERRORS = {"UnsatisfiedLinkError"}


@dataclass
class _ClassSpan:
    name: str
    kw: int  # index of the class keyword
    lo: int  # first token inside the body
    hi: int  # index of the closing brace
    line: int
    parent: "_ClassSpan | None" = None
    fqcn: str = ""
    children: list["_ClassSpan"] = field(default_factory=list)


def _literal(t: Token) -> str:
    if t.kind == "str":
        return '"' + t.text + '"'
    if t.kind == "char":
        return "'" + t.text + "'"
    return t.text


def _join(tokens: Iterable[Token]) -> str:
    out: list[str] = []
    prev: Token | None = None
    for t in tokens:
        if prev is not None and prev.kind == "ident" and t.kind == "ident":
            out.append(" ")
        out.append(_literal(t))
        prev = t
    return "".join(out)


def _dotted(tokens: list[Token], i: int, stop: set[str]) -> tuple[str, int]:
    """Read ``a.b.C`` (or ``a.b.*``) starting at i; returns the name and the index after it."""
    parts = []
    while i < len(tokens) and tokens[i].text not in stop:
        if tokens[i].kind == "ident" or tokens[i].text in (".", "*"):
            parts.append(tokens[i].text)
        i += 1
    return "".join(parts), i


def _package_and_imports(tokens: list[Token]) -> tuple[str, tuple[str, ...]]:
    package, imports = "", []
    depth = 0
    i = 0
    while i < len(tokens):
        t = tokens[i]
        if t.kind == "op" and t.text == "{":
            depth += 1
        elif t.kind == "op" and t.text == "}":
            depth -= 1
        elif depth == 0 and t.kind == "ident" and t.text in ("package", "import") \
                and not is_op(tokens, i - 1, "."):
            j = i + 1
            if t.text == "import" and is_ident(tokens, j, "static"):
                j += 1
            name, i = _dotted(tokens, j, {";", "{", "}"})
            if t.text == "package":
                package = name
            else:
                imports.append(name)
            continue
        i += 1
    return package, tuple(imports)


def _class_spans(tokens: list[Token], match: dict[int, int], package: str,
                 path: str, diagnostics: list[Diagnostic] | None) -> list[_ClassSpan]:
    spans: list[_ClassSpan] = []
    n = len(tokens)
    for i, t in enumerate(tokens):
        if t.kind != "ident" or t.text not in _CLASS_KEYWORDS or not is_ident(tokens, i + 1):
            continue
        if is_op(tokens, i - 1, ".") or is_op(tokens, i - 1, "::"):
            continue
        if t.text == "record" and not (is_op(tokens, i + 2, "(") or is_op(tokens, i + 2, "<")):
            continue
        j = i + 2
        while j < n and tokens[j].text not in ("{", ";", "}", "="):
            if tokens[j].kind == "op" and tokens[j].text in ("(", "["):
                j = match.get(j, n)
            j += 1
        if j >= n or tokens[j].text != "{":
            if diagnostics is not None and t.text != "record":
                diagnostics.append(Diagnostic(path, t.line, f"{t.text} '{tokens[i + 1].text}' without a body"))
            continue
        spans.append(_ClassSpan(tokens[i + 1].text, i, j + 1, match.get(j, n), t.line))

    spans.sort(key=lambda s: s.kw)
    stack: list[_ClassSpan] = []
    for s in spans:
        while stack and not (stack[-1].lo <= s.kw < stack[-1].hi):
            stack.pop()
        if stack:
            s.parent = stack[-1]
            stack[-1].children.append(s)
            s.fqcn = f"{s.parent.fqcn}${s.name}"
        else:
            s.fqcn = f"{package}.{s.name}" if package else s.name
        stack.append(s)
    return spans


def _params(tokens: list[Token], match: dict[int, int], lo: int, hi: int) -> tuple[tuple[str, str], ...]:
    out = []
    for a, b in split_args(tokens, match, lo, hi):
        toks = []
        k = a
        while k < b:
            if is_op(tokens, k, "@"):
                k += 2
                if is_op(tokens, k, "("):
                    k = match.get(k, b) + 1
                continue
            if not is_ident(tokens, k, "final"):
                toks.append(tokens[k])
            k += 1
        if not toks:
            continue
        if toks[-1].kind == "ident" and len(toks) > 1:
            out.append((_join(toks[:-1]), toks[-1].text))
        else:
            out.append((_join(toks), ""))
    return tuple(out)


@dataclass
class _Member:
    code: list[tuple[int, int]]
    native: NativeMethodDecl | None = None


def _members(tokens: list[Token], match: dict[int, int], span: _ClassSpan) -> list[_Member]:
    """Split a class body into member declarations and collect their code ranges."""
    members: list[_Member] = []
    child_at = {c.kw: c for c in span.children}
    j, stmt, eq = span.lo, span.lo, -1
    n = span.hi
    while j < n:
        if j in child_at:
            # skip modifiers already consumed into stmt and the nested class itself
            j = child_at[j].hi + 1
            stmt, eq = j, -1
            continue
        t = tokens[j]
        if t.kind == "op":
            if t.text == "=" and eq < 0:
                eq = j
            elif t.text == ";":
                members.append(_member(tokens, match, span, stmt, j, None, eq))
                j += 1
                stmt, eq = j, -1
                continue
            elif t.text == "{":
                close = match.get(j, n)
                if eq >= 0:  # array initializer, part of a field
                    j = close + 1
                    continue
                members.append(_member(tokens, match, span, stmt, j, (j + 1, close), eq))
                j = close + 1
                stmt, eq = j, -1
                continue
            elif t.text in ("(", "["):
                j = match.get(j, n) + 1
                continue
        j += 1
    return members


def _member(tokens: list[Token], match: dict[int, int], span: _ClassSpan,
            h0: int, h1: int, body: tuple[int, int] | None, eq: int) -> _Member:
    if eq >= 0:
        return _Member(code=[(eq + 1, h1)])
    paren = -1
    k = h0
    while k < h1:
        if is_op(tokens, k, "(") and k > h0 and tokens[k - 1].kind == "ident" and not is_op(tokens, k - 2, "@"):
            paren = k
            break
        if tokens[k].kind == "op" and tokens[k].text in ("(", "["):
            k = match.get(k, h1)
        k += 1
    code = [body] if body else []
    if paren < 0:
        return _Member(code=code)
    modifiers = {t.text for t in tokens[h0:paren] if t.kind == "ident" and t.text in _MODIFIERS}
    if "native" in modifiers and body is None:
        decl = NativeMethodDecl(
            owner=span.fqcn,
            name=tokens[paren - 1].text,
            params=_params(tokens, match, paren + 1, match.get(paren, h1)),
            is_static="static" in modifiers,
            line=tokens[paren - 1].line,
        )
        return _Member(code=code, native=decl)
    return _Member(code=code)


def _qualifier(tokens: list[Token], match: dict[int, int], k: int) -> str | None:
    """Receiver text of the call whose name is at ``k``."""
    if not is_op(tokens, k - 1, "."):
        return None
    parts: list[str] = []
    j = k - 2
    while j >= 0:
        t = tokens[j]
        if t.kind == "ident":
            parts.append(t.text)
            j -= 1
        elif t.kind == "op" and t.text == ")":
            o = match.get(j)
            if o is None or o >= j:
                break
            if o > 0 and tokens[o - 1].kind == "ident" and tokens[o - 1].text not in _NOT_CALLS:
                # walk back over a dotted constructor name to a possible 'new'
                m = o - 1
                names = [tokens[m].text]
                while is_op(tokens, m - 1, ".") and is_ident(tokens, m - 2):
                    m -= 2
                    names.append(tokens[m].text)
                if is_ident(tokens, m - 1, "new"):
                    parts.append("new " + ".".join(reversed(names)) + "()")
                    break
                parts.append(tokens[o - 1].text + "()")
                j = o - 2
            else:
                parts.append("(...)")
                break
        elif t.kind == "op" and t.text == "]":
            parts.append("[]")
            o = match.get(j)
            if o is None or o >= j:
                break
            j = o - 1
            continue
        elif t.kind in ("str", "char"):
            parts.append('""')
            break
        else:
            break
        if is_op(tokens, j, "."):
            j -= 1
            continue
        break
    return ".".join(reversed(parts)) if parts else "?"


def _is_declaration(tokens: list[Token], match: dict[int, int], k: int) -> bool:
    """True for a method header such as ``public Void run() {`` inside an anonymous class."""
    if is_op(tokens, k - 1, ".") or k == 0:
        return False
    prev = tokens[k - 1]
    if not (prev.kind == "ident" and prev.text not in _NOT_CALLS or prev.text in (">", "]")):
        return False
    after = match.get(k + 1, len(tokens)) + 1
    return is_op(tokens, after, "{") or is_ident(tokens, after, "throws")


def _path_kind(arg: str | None) -> PathKind:
    if arg is None:
        return PathKind.DYNAMIC
    if arg.startswith(("/", "\\")) or re.match(r"^[A-Za-z]:[\\/]", arg):
        return PathKind.ABSOLUTE
    if "/" in arg or "\\" in arg or arg.startswith("."):
        return PathKind.RELATIVE
    return PathKind.NAME_ONLY


def _os_tainted(tokens: list[Token], code: list[tuple[int, int]]) -> set[str]:
    tainted: set[str] = set()
    changed = True
    while changed:
        changed = False
        for lo, hi in code:
            for k in range(lo, hi):
                if not (is_op(tokens, k, "=") and k > lo and tokens[k - 1].kind == "ident"):
                    continue
                name = tokens[k - 1].text
                if name in tainted:
                    continue
                e = k + 1
                while e < hi and not is_op(tokens, e, ";"):
                    e += 1
                if any(_os_token(t, tainted) for t in tokens[k + 1:e]):
                    tainted.add(name)
                    changed = True
    return tainted


def _os_token(t: Token, tainted: set[str]) -> bool:
    if t.kind == "str":
        return t.text in _OS_PROPERTIES
    return t.kind == "ident" and (t.text in tainted or bool(_OS_IDENT.search(t.text)))


def _is_load(call: MethodCall, imports: tuple[str, ...]) -> LoadMechanism | None:
    if call.name not in ("loadLibrary", "load"):
        return None
    q = call.qualifier
    if q is None:
        if f"java.lang.System.{call.name}" not in imports and "java.lang.System.*" not in imports:
            return None
    elif not (q.split(".")[-1] == "System" or q.endswith("getRuntime()")):
        return None
    return LoadMechanism.LOAD_LIBRARY if call.name == "loadLibrary" else LoadMechanism.LOAD


def parse_java(file: SourceFile, text: str,
               diagnostics: list[Diagnostic] | None = None) -> list[JavaClassFacts]:
    """Extract per-class facts from one Java compilation unit.

    Native call sites are resolved against the classes of this file only;
    :func:`resolve_native_calls` redoes that across a whole codebase.
    """
    tokens = tokenize(text)
    match = match_brackets(tokens, file.path, diagnostics)
    st = build_structure(tokens, match)
    package, imports = _package_and_imports(tokens)
    spans = _class_spans(tokens, match, package, file.path, diagnostics)

    classes: list[JavaClassFacts] = []
    for span in spans:
        members = _members(tokens, match, span)
        natives = tuple(m.native for m in members if m.native)
        code = [r for m in members for r in m.code]
        skip = [(c.kw, c.hi + 1) for c in span.children]
        calls = _calls(tokens, match, st, span.fqcn, code, skip)
        tainted = _os_tainted(tokens, code)
        loads = tuple(_load(tokens, st, c, k, imports, tainted) for c, k in calls if _is_load(c, imports))
        classes.append(JavaClassFacts(
            fqcn=span.fqcn,
            package=package,
            file=file,
            line=span.line,
            native_decls=natives,
            library_loads=loads,
            calls=tuple(c for c, _ in calls),
            imports=imports,
        ))
    return resolve_native_calls(classes)


def _calls(tokens: list[Token], match: dict[int, int], st: Structure, fqcn: str,
           code: list[tuple[int, int]], skip: list[tuple[int, int]]) -> list[tuple[MethodCall, int]]:
    out: list[tuple[MethodCall, int]] = []
    for lo, hi in sorted(code):
        k = lo
        while k < hi:
            hole = next((b for a, b in skip if a <= k < b), None)
            if hole is not None:
                k = hole
                continue
            t = tokens[k]
            if t.kind == "ident" and is_op(tokens, k + 1, "(") and t.text not in _NOT_CALLS \
                    and not is_ident(tokens, k - 1, "new") and not is_op(tokens, k - 1, "@") \
                    and not _is_declaration(tokens, match, k):
                close = match.get(k + 1, len(tokens))
                args = tuple(_join(tokens[a:b]) for a, b in split_args(tokens, match, k + 2, close))
                depth, bound = loop_weight(st.enclosing(k))
                out.append((MethodCall(fqcn, _qualifier(tokens, match, k), t.text, t.line,
                                       depth, bound, args), k))
            k += 1
    return out


def _load(tokens: list[Token], st: Structure, call: MethodCall, k: int,
          imports: tuple[str, ...], tainted: set[str]) -> LibraryLoad:
    close = st.match.get(k + 1, len(tokens))
    arg_toks = tokens[k + 2:close]
    arg = arg_toks[0].text if len(arg_toks) == 1 and arg_toks[0].kind == "str" else None
    regions = st.enclosing(k)
    privileged = any(r.kind == "call" and r.name == "doPrivileged" for r in regions)
    link_guard = any(
        r.kind in ("try", "catch") and any(c.split(".")[-1] in _LINK_ERRORS for c in r.catches)
        for r in regions)
    os_cond = any(
        r.kind in ("if", "else", "switch") and r.header[1] > r.header[0]
        and any(_os_token(t, tainted) for t in tokens[r.header[0]:r.header[1]])
        for r in regions)
    return LibraryLoad(
        mechanism=_is_load(call, imports),
        argument=arg,
        path_kind=_path_kind(arg),
        inside_privileged_block=privileged,
        inside_link_error_try_catch=link_guard,
        inside_os_conditional=os_cond,
        line=call.line,
    )


# ---------------------------------------------------------------------------
# call resolution


def _outer_chain(fqcn: str) -> list[str]:
    chain = [fqcn]
    while "$" in chain[-1]:
        chain.append(chain[-1].rsplit("$", 1)[0])
    return chain


class ClassIndex:
    """Lookup of classes by fully qualified and simple name."""

    def __init__(self, classes: Iterable[JavaClassFacts]):
        self.by_fqcn: dict[str, JavaClassFacts] = {}
        self.by_simple: dict[str, list[str]] = {}
        for c in classes:
            self.by_fqcn.setdefault(c.fqcn, c)
            self.by_simple.setdefault(c.simple_name, []).append(c.fqcn)

    def resolve_type(self, name: str, caller: JavaClassFacts) -> str | None:
        parts = name.split(".")
        candidates: list[str] = []
        # a.b.Outer.Inner -> a.b.Outer$Inner variants
        for cut in range(len(parts), 0, -1):
            candidates.append(".".join(parts[:cut]) + "".join("$" + p for p in parts[cut:]))
        nested = "".join("$" + p for p in parts)
        candidates += [outer + nested for outer in _outer_chain(caller.fqcn)]
        if caller.package:
            candidates.append(caller.package + "." + parts[0] + "".join("$" + p for p in parts[1:]))
        for imp in caller.imports:
            if imp.endswith("." + parts[0]):
                candidates.append(imp + "".join("$" + p for p in parts[1:]))
            elif imp.endswith(".*"):
                candidates.append(imp[:-1] + parts[0] + "".join("$" + p for p in parts[1:]))
        for cand in candidates:
            if cand in self.by_fqcn:
                return cand
        found = self.by_simple.get(parts[-1], [])
        if len(set(found)) == 1:
            return found[0]
        return None

    def native(self, fqcn: str, name: str, arity: int) -> NativeMethodDecl | None:
        cls = self.by_fqcn.get(fqcn)
        if cls is None:
            return None
        same = [d for d in cls.native_decls if d.name == name]
        exact = [d for d in same if len(d.params) == arity]
        return (exact or same or [None])[0]

    def target(self, call: MethodCall, caller: JavaClassFacts) -> NativeMethodDecl | None:
        q = call.qualifier
        arity = len(call.args)
        if q == "super":
            return None
        owner: str | None = None
        if q is not None and q != "this":
            if q.startswith("new ") and q.endswith("()"):
                owner = self.resolve_type(q[4:-2], caller)
            elif re.fullmatch(r"[\w$]+(\.[\w$]+)*", q) and any(p[:1].isupper() for p in q.split(".")):
                owner = self.resolve_type(q, caller)
            if owner is not None:
                return self.native(owner, call.name, arity)
        # unqualified, this, or an untyped receiver: name-based within the declaring class
        for fq in _outer_chain(caller.fqcn) if q in (None, "this") else [caller.fqcn]:
            decl = self.native(fq, call.name, arity)
            if decl is not None:
                return decl
        return None


def native_targets(cls: JavaClassFacts, index: ClassIndex) -> list[tuple[MethodCall, NativeMethodDecl]]:
    """Calls in ``cls`` that resolve to a native declaration, with that declaration."""
    out = []
    for call in cls.calls:
        decl = index.target(call, cls)
        if decl is not None:
            out.append((call, decl))
    return out


def call_site(call: MethodCall, decl: NativeMethodDecl) -> NativeCallSite:
    return NativeCallSite(call.caller_fqcn, decl.owner, decl.name, call.line,
                          call.loop_depth, call.loop_bound, call.args)


def resolve_native_calls(classes: list[JavaClassFacts],
                         index: ClassIndex | None = None) -> list[JavaClassFacts]:
    """Recompute every class's native call sites against ``index`` (default: the classes themselves)."""
    index = index or ClassIndex(classes)
    return [replace(c, native_call_sites=tuple(call_site(call, d) for call, d in native_targets(c, index)))
            for c in classes]
