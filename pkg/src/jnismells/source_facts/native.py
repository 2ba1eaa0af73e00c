"""C/C++ fact extraction: function definitions and the JNI calls inside them."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace

from ..lexer import (
    Diagnostic,
    Region,
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
from ..vocab import (
    ACQUIRE_RELEASE,
    EXCEPTION_QUERIES,
    JNI_FUNCTIONS,
)
from .types import JniApiCall, NativeFunctionFacts, SourceFile

_NOT_FUNCTIONS = {
    "if", "for", "while", "switch", "return", "sizeof", "__attribute__",
    "__declspec", "alignas", "decltype", "defined", "catch", "throw", "noexcept",
}
_NULLS = {"NULL", "nullptr", "0", "JNI_FALSE", "0L", "JNI_NULL"}
_KEYWORDS = {
    "return", "else", "goto", "case", "sizeof", "typedef", "new", "delete",
    "throw", "if", "while", "for", "switch", "do",
}
_DEFAULT_LOCAL_REF_LIMIT = 16


@dataclass
class _Function:
    name: str
    params: tuple[tuple[str, str], ...]
    lo: int  # first body token
    hi: int  # closing brace
    line: int


def _literal(t: Token) -> str:
    if t.kind == "str":
        return '"' + t.text + '"'
    if t.kind == "char":
        return "'" + t.text + "'"
    return t.text


def _join(tokens: list[Token]) -> str:
    out: list[str] = []
    prev: Token | None = None
    for t in tokens:
        if prev is not None and prev.kind in ("ident", "num") and t.kind in ("ident", "num"):
            out.append(" ")
        elif prev is not None and t.text == "*" and prev.kind == "ident":
            out.append(" ")
        out.append(_literal(t))
        prev = t
    return "".join(out)


def _params(tokens: list[Token], match: dict[int, int], lo: int, hi: int) -> tuple[tuple[str, str], ...]:
    out = []
    for a, b in split_args(tokens, match, lo, hi):
        while b > a and is_op(tokens, b - 1, "]"):
            b = match.get(b - 1, b - 1)
        toks = tokens[a:b]
        if not toks or [t.text for t in toks] == ["void"]:
            continue
        if toks[-1].kind == "ident" and len(toks) > 1 and toks[-1].text not in ("void",):
            out.append((_join(toks[:-1]), toks[-1].text))
        else:
            out.append((_join(toks), ""))
    return tuple(out)


def _classify(tokens: list[Token], match: dict[int, int], lo: int, hi: int) -> tuple[str, int]:
    """Kind of a declaration header ending just before a '{'.

    Returns ("container"|"function"|"other", index of the parameter paren).
    """
    if lo >= hi:
        return "other", -1
    first = tokens[lo]
    if first.text == "extern" and hi - lo >= 2 and tokens[lo + 1].kind == "str":
        return "container", -1
    if first.text == "namespace" or (first.text == "inline" and is_ident(tokens, lo + 1, "namespace")):
        return "container", -1
    k = lo
    while k < hi:
        t = tokens[k]
        if t.kind == "op" and t.text == "=":
            return "other", -1
        if t.kind == "op" and t.text == "(":
            prev = tokens[k - 1] if k > lo else None
            if prev is not None and prev.kind == "ident" and prev.text not in _NOT_FUNCTIONS:
                return "function", k
            k = match.get(k, hi)
        elif t.kind == "op" and t.text == "[":
            k = match.get(k, hi)
        k += 1
    if any(t.text in ("class", "struct", "union") for t in tokens[lo:hi]):
        return "container", -1
    return "other", -1


def _function_name(tokens: list[Token], paren: int) -> str:
    k = paren - 1
    name = tokens[k].text
    while is_op(tokens, k - 1, "::") and is_ident(tokens, k - 2):
        k -= 2
        name = tokens[k].text + "::" + name
    return name


def _scan_decls(tokens: list[Token], match: dict[int, int], lo: int, hi: int, out: list[_Function]) -> None:
    i, stmt = lo, lo
    while i < hi:
        t = tokens[i]
        if t.kind == "op":
            if t.text == ";":
                stmt = i + 1
            elif t.text == "{":
                end = match.get(i, hi)
                kind, paren = _classify(tokens, match, stmt, i)
                if kind == "container":
                    _scan_decls(tokens, match, i + 1, min(end, hi), out)
                elif kind == "function":
                    out.append(_Function(_function_name(tokens, paren),
                                         _params(tokens, match, paren + 1, match.get(paren, i)),
                                         i + 1, min(end, len(tokens)), tokens[paren - 1].line))
                i = end + 1
                if kind == "function" or tokens[stmt:stmt + 1] and tokens[stmt].text in ("extern", "namespace"):
                    stmt = i
                continue
            elif t.text in ("(", "["):
                i = match.get(i, hi) + 1
                continue
            elif t.text == "}":
                stmt = i + 1
        i += 1


@dataclass
class _Call:
    name: str
    start: int  # first token of the call expression (receiver)
    paren: int  # index of '('
    close: int  # index of ')'
    line: int


def _jni_calls(tokens: list[Token], match: dict[int, int], lo: int, hi: int) -> list[_Call]:
    calls = []
    for k in range(lo, hi):
        if not (is_op(tokens, k, "->") and is_ident(tokens, k + 1) and is_op(tokens, k + 2, "(")):
            continue
        name = tokens[k + 1].text
        if name not in JNI_FUNCTIONS:
            continue
        if is_op(tokens, k - 1, ")") and is_ident(tokens, k - 2) and is_op(tokens, k - 3, "*") \
                and is_op(tokens, k - 4, "("):
            start = k - 4
        elif is_ident(tokens, k - 1):
            start = k - 1
            while is_op(tokens, start - 1, "->") or is_op(tokens, start - 1, "."):
                if is_ident(tokens, start - 2):
                    start -= 2
                else:
                    break
        else:
            continue
        paren = k + 2
        calls.append(_Call(name, start, paren, match.get(paren, hi), tokens[k + 1].line))
    return calls


def _unwrap(tokens: list[Token], match: dict[int, int], a: int, b: int) -> tuple[int, int]:
    """Grow [a, b) over enclosing parentheses that wrap exactly this expression."""
    while is_op(tokens, a - 1, "(") and is_op(tokens, b, ")") and match.get(a - 1) == b \
            and not is_ident(tokens, a - 2):
        a, b = a - 1, b + 1
    return a, b


def _skip_cast(tokens: list[Token], match: dict[int, int], a: int) -> int:
    """Step left over casts such as ``(jclass)`` that directly precede index ``a``."""
    while is_op(tokens, a - 1, ")"):
        o = match.get(a - 1)
        if o is None or o >= a - 1:
            break
        inner = tokens[o + 1:a - 1]
        if inner and all(t.kind == "ident" or t.text in ("*", "::", "<", ">") for t in inner) \
                and inner[0].kind == "ident":
            a = o
        else:
            break
    return a


def _assignment(tokens: list[Token], match: dict[int, int], start: int) -> tuple[str | None, int]:
    """Identifier assigned the value of the expression starting at ``start``, and the target's index."""
    a = _skip_cast(tokens, match, start)
    if is_op(tokens, a - 1, "=") and is_ident(tokens, a - 2) \
            and not is_op(tokens, a - 3, "->") and not is_op(tokens, a - 3, "."):
        return tokens[a - 2].text, a - 2
    return None, -1


@dataclass
class _Check:
    checked: bool
    branch: Region | None = None  # the region that runs on the error path


class _Conditions:
    """Condition headers of if/while/for regions inside one function."""

    def __init__(self, st: Structure, lo: int, hi: int):
        self.st = st
        self.heads: list[Region] = [
            r for r in st.regions
            if r.kind in ("if", "loop", "switch") and r.header[1] > r.header[0] and lo <= r.header[0] < hi
        ]
        self.elses = {r.header: r for r in st.regions if r.kind == "else" and lo <= r.header[0] < hi}

    def head(self, k: int) -> Region | None:
        best = None
        for r in self.heads:
            if r.header[0] <= k < r.header[1] and (best is None or r.header[0] >= best.header[0]):
                best = r
        return best

    def branch(self, r: Region, error_when_true: bool) -> Region | None:
        if r.kind != "if":
            return None
        return r if error_when_true else self.elses.get(r.header)


def _value_check(tokens: list[Token], match: dict[int, int], conds: _Conditions, a: int, b: int) -> _Check | None:
    """Classify how the value occupying tokens [a, b) is tested, if at all."""
    a, b = _unwrap(tokens, match, a, b)
    head = conds.head(a)
    error_when_true: bool | None = None
    if b < len(tokens) and tokens[b].text in ("==", "!=") and b + 1 < len(tokens) and tokens[b + 1].text in _NULLS:
        error_when_true = tokens[b].text == "=="
    elif a >= 2 and tokens[a - 1].text in ("==", "!=") and tokens[a - 2].text in _NULLS:
        error_when_true = tokens[a - 1].text == "=="
    elif is_op(tokens, a - 1, "!"):
        error_when_true = True
    elif head is not None and _truthy_operand(tokens, head, a, b):
        error_when_true = False
    elif is_op(tokens, b, "?"):
        return _Check(True)
    if error_when_true is None:
        return None
    if head is None:
        return _Check(True)
    return _Check(True, conds.branch(head, error_when_true))


def _truthy_operand(tokens: list[Token], head: Region, a: int, b: int) -> bool:
    """True when [a, b) is a whole operand of a condition, as in ``if (x)`` or ``if (x && y)``."""
    left_ok = a == head.header[0] or tokens[a - 1].text in ("&&", "||") \
        or (tokens[a - 1].text == "(" and not is_ident(tokens, a - 2))
    right_ok = b == head.header[1] or (b < len(tokens) and tokens[b].text in ("&&", "||", ")"))
    return left_ok and right_ok


def _exits(tokens: list[Token], region: Region | None) -> bool:
    if region is None:
        return False
    return any(t.kind == "ident" and t.text in ("return", "goto") for t in tokens[region.start:region.end])


def _query_check(tokens: list[Token], match: dict[int, int], conds: _Conditions, q: _Call) -> _Check:
    """An ExceptionCheck/ExceptionOccurred call: checked, with the error branch when it is tested."""
    a, b = q.start, q.close + 1
    target, t_idx = _assignment(tokens, match, q.start)
    if target is not None:
        a = t_idx
    found = _value_check(tokens, match, conds, a, b)
    if found is None:
        head = conds.head(q.start)
        return _Check(True, conds.branch(head, True) if head is not None else None)
    return found


def _next_use(tokens: list[Token], name: str, lo: int, hi: int) -> int:
    for k in range(lo, hi):
        t = tokens[k]
        if t.kind == "ident" and t.text == name and not is_op(tokens, k - 1, "->") and not is_op(tokens, k - 1, "."):
            return k
    return hi


def _declared_locals(tokens: list[Token], f: _Function) -> set[str]:
    names = {p for _, p in f.params if p}
    for k in range(f.lo + 1, f.hi):
        t = tokens[k]
        if t.kind != "ident" or t.text in _KEYWORDS:
            continue
        nxt = tokens[k + 1].text if k + 1 < len(tokens) else ""
        if nxt not in ("=", ";", ",", "[", ")"):
            continue
        j = k - 1
        while tokens[j].text in ("*", "&") and j > f.lo:
            j -= 1
        if tokens[j].kind == "ident" and tokens[j].text not in _KEYWORDS:
            names.add(t.text)
    return names


def _escaping(tokens: list[Token], match: dict[int, int], f: _Function, local: set[str]) -> set[str]:
    """Targets of assignments to non-local names, plus every identifier on their right-hand sides."""
    out: set[str] = set()
    for k in range(f.lo, f.hi):
        if not (is_op(tokens, k, "=") and is_ident(tokens, k - 1)):
            continue
        if is_op(tokens, k - 2, "->") or is_op(tokens, k - 2, "."):
            continue
        target = tokens[k - 1].text
        if target in local:
            continue
        out.add(target)
        e = k + 1
        while e < f.hi and not (tokens[e].kind == "op" and tokens[e].text in (";", ",", ")", "]", "}")):
            if tokens[e].kind == "op" and tokens[e].text in ("(", "["):
                e = match.get(e, f.hi)
            e += 1
        out.update(t.text for t in tokens[k + 1:e] if t.kind == "ident")
    return out


def _returned(tokens: list[Token], match: dict[int, int], f: _Function) -> set[str]:
    out: set[str] = set()
    for k in range(f.lo, f.hi):
        if is_ident(tokens, k, "return"):
            e = k + 1
            while e < f.hi and not is_op(tokens, e, ";") and not is_op(tokens, e, "}"):
                if tokens[e].kind == "op" and tokens[e].text in ("(", "["):
                    e = match.get(e, f.hi)
                e += 1
            out.update(t.text for t in tokens[k + 1:e] if t.kind == "ident")
    return out


def _class_literal(value: str) -> str:
    if value.startswith("L") and value.endswith(";"):
        value = value[1:-1]
    return value.replace("/", ".")


def _function_facts(file: SourceFile, tokens: list[Token], match: dict[int, int], st: Structure,
                    f: _Function) -> NativeFunctionFacts:
    calls = _jni_calls(tokens, match, f.lo, f.hi)
    conds = _Conditions(st, f.lo, f.hi)
    arg_ranges = {c.paren: split_args(tokens, match, c.paren + 1, c.close) for c in calls}
    queries = [c for c in calls if c.name in EXCEPTION_QUERIES]

    def args_of(c: _Call) -> list[str]:
        return [_join(tokens[a:b]) for a, b in arg_ranges[c.paren]]

    facts: list[JniApiCall] = []
    for idx, c in enumerate(calls):
        target, t_idx = _assignment(tokens, match, c.start)
        if target is not None:
            found = _value_check(tokens, match, conds, t_idx, c.close + 1)
            use = _next_use(tokens, target, c.close + 1, f.hi)
        else:
            found = _value_check(tokens, match, conds, c.start, c.close + 1)
            later = [d for d in calls[idx + 1:] if d.name not in EXCEPTION_QUERIES]
            use = later[0].start if later else f.hi
        if found is None:
            q = next((q for q in queries if c.close < q.start < use), None)
            if q is not None:
                found = _query_check(tokens, match, conds, q)
            elif target is not None and use < f.hi:
                found = _value_check(tokens, match, conds, use, use + 1)
        checked = found is not None and found.checked
        exits = checked and _exits(tokens, found.branch)

        released = None
        if c.name in ACQUIRE_RELEASE:
            want = ACQUIRE_RELEASE[c.name]
            # the Java object is the first argument after env in C style, the first in C++ style
            pos = 1 if is_op(tokens, c.start, "(") else 0
            args = args_of(c)
            handle = target or (args[pos] if len(args) > pos else None)
            for d in calls:
                if d.name == want and d.start > c.start and handle is not None:
                    if any(t.kind == "ident" and t.text == handle for t in tokens[d.paren + 1:d.close]):
                        released = d.line
                        break
        depth, bound = loop_weight(st.enclosing(c.start, f.lo, f.hi + 1))
        facts.append(JniApiCall(
            api_name=c.name,
            assigned_to=target,
            line=c.line,
            loop_depth=depth,
            null_or_error_checked=checked,
            followed_by_throw_and_return=exits,
            released_by=released,
            loop_bound=bound,
            args=tuple(args_of(c)),
        ))

    body = tokens[f.lo:f.hi]
    uses = Counter(t.text for t in body if t.kind == "ident")
    local = _declared_locals(tokens, f)
    registers = any(c.name == "RegisterNatives" for c in calls)
    registered: list[str] = []
    if registers:
        for c in calls:
            if c.name == "FindClass":
                lits = [t.text for t in tokens[c.paren + 1:c.close] if t.kind == "str"]
                registered.extend(_class_literal(v) for v in lits)
    partial = NativeFunctionFacts(
        symbol_name=f.name,
        file=file,
        params=f.params,
        line=f.line,
        jni_api_calls=tuple(facts),
        body_identifier_uses=uses,
        returned_identifiers=frozenset(_returned(tokens, match, f)),
        escaping_identifiers=frozenset(_escaping(tokens, match, f, local)),
        has_delete_local_ref=any(c.name == "DeleteLocalRef" for c in calls),
        has_ensure_local_capacity=any(c.name == "EnsureLocalCapacity" for c in calls),
        registered_classes=tuple(registered),
        registers_natives=registers,
    )
    return replace(partial, local_ref_creation_count=partial.weighted_local_refs(_DEFAULT_LOCAL_REF_LIMIT))


def parse_native(file: SourceFile, text: str,
                 diagnostics: list[Diagnostic] | None = None) -> list[NativeFunctionFacts]:
    """Extract one :class:`NativeFunctionFacts` per function definition in a C/C++ file."""
    tokens = tokenize(text, c_preprocessor=True)
    match = match_brackets(tokens, file.path, diagnostics)
    st = build_structure(tokens, match)
    functions: list[_Function] = []
    _scan_decls(tokens, match, 0, len(tokens), functions)
    out = []
    for f in functions:
        out.append(_function_facts(file, tokens, match, st, f))
        if diagnostics is not None:
            for k in range(f.lo, f.hi):
                if is_op(tokens, k, "->") and is_ident(tokens, k + 1) and is_op(tokens, k + 2, "(") \
                        and is_op(tokens, k - 1, ")") and is_op(tokens, k - 3, "*") \
                        and tokens[k + 1].text not in JNI_FUNCTIONS:
                    diagnostics.append(Diagnostic(file.path, tokens[k + 1].line,
                                                  f"unknown JNI function '{tokens[k + 1].text}'"))
    return out
