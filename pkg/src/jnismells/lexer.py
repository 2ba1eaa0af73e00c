"""Tolerant lexing and control-structure regions shared by the Java and C/C++ scanners.

Nothing here builds an AST. Source text is reduced to a token list with
comments removed and string literals captured as single tokens, brackets
are paired, and control constructs (loops, conditionals, try/catch) are
turned into index ranges over the token list. The fact extractors ask
"which regions enclose token i?" and that is all the structure they need.
"""

from __future__ import annotations

import bisect
import re
from dataclasses import dataclass, field
from typing import NamedTuple


class Diagnostic(NamedTuple):
    path: str
    line: int | None
    reason: str

    def __str__(self) -> str:
        where = self.path if self.line is None else f"{self.path}:{self.line}"
        return f"WARN {where} {self.reason}"


class Token(NamedTuple):
    kind: str  # ident | num | str | char | op
    text: str
    line: int


def strip_source(text: str, c_preprocessor: bool = False) -> tuple[str, dict[int, tuple[int, str, str]]]:
    """Blank out comments and string/char literal bodies, keeping offsets and newlines.

    Returns the blanked text and a map from literal start offset to
    ``(end_offset, kind, value)``. With ``c_preprocessor`` set, directive
    lines (and their backslash continuations) are blanked as well.
    """
    out = list(text)
    literals: dict[int, tuple[int, str, str]] = {}
    n = len(text)
    i = 0

    def blank(a: int, b: int) -> None:
        for k in range(a, b):
            if out[k] != "\n":
                out[k] = " "

    while i < n:
        c = text[i]
        if c == "/" and i + 1 < n and text[i + 1] == "/":
            j = text.find("\n", i)
            j = n if j < 0 else j
            blank(i, j)
            i = j
        elif c == "/" and i + 1 < n and text[i + 1] == "*":
            j = text.find("*/", i + 2)
            j = n if j < 0 else j + 2
            blank(i, j)
            i = j
        elif c == '"' and text.startswith('"""', i) and not c_preprocessor:
            j = text.find('"""', i + 3)
            j = n if j < 0 else j + 3
            literals[i] = (j, "str", text[i + 3:max(i + 3, j - 3)])
            blank(i + 1, j)
            i = j
        elif c in "\"'":
            j = i + 1
            buf = []
            while j < n and text[j] != c and text[j] != "\n":
                if text[j] == "\\" and j + 1 < n:
                    buf.append(text[j:j + 2])
                    j += 2
                    continue
                buf.append(text[j])
                j += 1
            end = j + 1 if j < n and text[j] == c else j
            literals[i] = (end, "str" if c == '"' else "char", "".join(buf))
            blank(i + 1, end)
            i = end
        else:
            i += 1

    if c_preprocessor:
        pos = 0
        lines = "".join(out).split("\n")
        continuing = False
        for ln in lines:
            if continuing or ln.lstrip().startswith("#"):
                blank(pos, pos + len(ln))
                continuing = ln.rstrip().endswith("\\")
            pos += len(ln) + 1
    return "".join(out), literals


_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<ident>(?:[^\W\d]|\$)[\w$]*)"
    r"|(?P<num>0[xX][0-9a-fA-F]+[uUlL]*|\d+(?:\.\d*)?(?:[eE][+-]?\d+)?[fFdDuUlL]*|\.\d+(?:[eE][+-]?\d+)?[fFdD]?)"
    r"|(?P<op>->|::|\+\+|--|==|!=|<=|>=|&&|\|\||\+=|-=|\*=|/=|[-+*/%&|^!~<>=?:;,.(){}\[\]@#\\])",
    re.UNICODE,
)


def tokenize(text: str, c_preprocessor: bool = False) -> list[Token]:
    code, literals = strip_source(text, c_preprocessor)
    newlines = [m.start() for m in re.finditer("\n", code)]
    tokens: list[Token] = []
    i, n = 0, len(code)
    while i < n:
        lit = literals.get(i)
        if lit is not None and code[i] in "\"'":
            end, kind, value = lit
            tokens.append(Token(kind, value, bisect.bisect_right(newlines, i - 1) + 1))
            i = end
            continue
        m = _TOKEN_RE.match(code, i)
        if m is None:
            i += 1
            continue
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group(), bisect.bisect_right(newlines, i - 1) + 1))
        i = m.end()
    return tokens


def count_loc(text: str) -> int:
    return sum(1 for line in text.splitlines() if line.strip())


_OPEN = {"(": ")", "[": "]", "{": "}"}
_CLOSE = {v: k for k, v in _OPEN.items()}


def match_brackets(tokens: list[Token], path: str = "", diagnostics: list[Diagnostic] | None = None) -> dict[int, int]:
    """Pair (), [] and {} tokens. Unbalanced brackets are reported and closed at end of input."""
    match: dict[int, int] = {}
    stack: list[int] = []
    for i, tok in enumerate(tokens):
        if tok.kind != "op":
            continue
        if tok.text in _OPEN:
            stack.append(i)
        elif tok.text in _CLOSE:
            want = _CLOSE[tok.text]
            # recover from a stray closer by unwinding to the nearest matching opener
            k = len(stack) - 1
            while k >= 0 and tokens[stack[k]].text != want:
                k -= 1
            if k < 0:
                if diagnostics is not None:
                    diagnostics.append(Diagnostic(path, tok.line, f"unmatched '{tok.text}' skipped"))
                continue
            while len(stack) - 1 > k:
                j = stack.pop()
                if diagnostics is not None:
                    diagnostics.append(Diagnostic(path, tokens[j].line, f"unclosed '{tokens[j].text}' skipped"))
                match[j] = i
                match[i] = j
            j = stack.pop()
            match[j] = i
            match[i] = j
    end = len(tokens)
    for j in stack:
        if diagnostics is not None:
            diagnostics.append(Diagnostic(path, tokens[j].line, f"unclosed '{tokens[j].text}' at end of file"))
        match[j] = end
    return match


def is_op(tokens: list[Token], i: int, text: str) -> bool:
    return 0 <= i < len(tokens) and tokens[i].kind == "op" and tokens[i].text == text


def is_ident(tokens: list[Token], i: int, text: str | None = None) -> bool:
    return 0 <= i < len(tokens) and tokens[i].kind == "ident" and (text is None or tokens[i].text == text)


@dataclass
class Region:
    kind: str  # loop | if | else | switch | try | catch | finally | call
    start: int  # first token index inside
    end: int  # one past the last token index inside
    name: str = ""  # call name / loop keyword
    header: tuple[int, int] = (0, 0)  # token range of the parenthesized header
    catches: tuple[str, ...] = ()  # exception types, for try/catch
    bound: int | None = None  # static iteration count, for loops


@dataclass
class Structure:
    tokens: list[Token]
    match: dict[int, int]
    regions: list[Region] = field(default_factory=list)

    _inner: list[int] = field(default_factory=list, repr=False)
    _parent: list[int] = field(default_factory=list, repr=False)

    def _index(self) -> None:
        # regions nest, so paint each token with its innermost region and link parents
        n = len(self.tokens)
        self._inner = [-1] * (n + 1)
        self._parent = []
        stack: list[int] = []
        for idx, r in enumerate(self.regions):
            while stack and not (self.regions[stack[-1]].start <= r.start and r.end <= self.regions[stack[-1]].end):
                stack.pop()
            self._parent.append(stack[-1] if stack else -1)
            stack.append(idx)
            for k in range(max(r.start, 0), min(r.end, n)):
                self._inner[k] = idx

    def enclosing(self, i: int, lo: int = 0, hi: int | None = None) -> list[Region]:
        """Regions enclosing token ``i``, outermost first, limited to those starting in [lo, hi)."""
        if len(self._parent) != len(self.regions):
            self._index()
        hi = len(self.tokens) if hi is None else hi
        chain: list[Region] = []
        idx = self._inner[i] if 0 <= i < len(self._inner) else -1
        while idx >= 0:
            r = self.regions[idx]
            if r.start <= i < r.end and lo <= r.start < hi:
                chain.append(r)
            idx = self._parent[idx]
        chain.reverse()
        return chain


CONTROL = {"if", "for", "while", "do", "switch", "try", "catch", "finally", "else", "synchronized"}


def statement_end(tokens: list[Token], match: dict[int, int], i: int, limit: int) -> int:
    """Index one past the statement starting at ``i`` (never beyond ``limit``)."""
    if i >= limit:
        return limit
    tok = tokens[i]
    if tok.kind == "op" and tok.text == "{":
        return min(match.get(i, limit) + 1, limit)
    if tok.kind == "ident":
        if tok.text in ("if", "for", "while", "switch", "synchronized") and is_op(tokens, i + 1, "("):
            j = min(match.get(i + 1, limit) + 1, limit)
            j = statement_end(tokens, match, j, limit)
            if tok.text == "if" and is_ident(tokens, j, "else"):
                j = statement_end(tokens, match, j + 1, limit)
            return j
        if tok.text == "do":
            j = statement_end(tokens, match, i + 1, limit)
            if is_ident(tokens, j, "while") and is_op(tokens, j + 1, "("):
                j = min(match.get(j + 1, limit) + 1, limit)
            if is_op(tokens, j, ";"):
                j += 1
            return j
        if tok.text == "try":
            j = i + 1
            if is_op(tokens, j, "("):
                j = min(match.get(j, limit) + 1, limit)
            j = statement_end(tokens, match, j, limit)
            while is_ident(tokens, j, "catch") or is_ident(tokens, j, "finally"):
                if is_ident(tokens, j, "catch") and is_op(tokens, j + 1, "("):
                    j = min(match.get(j + 1, limit) + 1, limit)
                else:
                    j += 1
                j = statement_end(tokens, match, j, limit)
            return j
    j = i
    while j < limit:
        t = tokens[j]
        if t.kind == "op":
            if t.text == ";":
                return j + 1
            if t.text in _OPEN:
                j = match.get(j, limit) + 1
                continue
            if t.text in _CLOSE:
                return j
        j += 1
    return limit


_INT_RE = re.compile(r"^(0[xX][0-9a-fA-F]+|\d+)[uUlL]*$")


def _int_literal(toks: list[Token]) -> int | None:
    sign = 1
    if toks and toks[0].kind == "op" and toks[0].text in "+-":
        sign = -1 if toks[0].text == "-" else 1
        toks = toks[1:]
    if len(toks) != 1 or toks[0].kind != "num":
        return None
    m = _INT_RE.match(toks[0].text)
    return sign * int(m.group(1), 0) if m else None


def _split_top(tokens: list[Token], match: dict[int, int], lo: int, hi: int, sep: str) -> list[tuple[int, int]]:
    parts, start, j = [], lo, lo
    while j < hi:
        t = tokens[j]
        if t.kind == "op" and t.text in _OPEN:
            j = match.get(j, hi) + 1
            continue
        if t.kind == "op" and t.text == sep:
            parts.append((start, j))
            start = j + 1
        j += 1
    parts.append((start, hi))
    return parts


def for_loop_bound(tokens: list[Token], match: dict[int, int], lo: int, hi: int) -> int | None:
    """Iteration count of ``for (init; cond; step)`` when all three are integer-literal shaped."""
    parts = _split_top(tokens, match, lo, hi, ";")
    if len(parts) != 3:
        return None
    (a0, a1), (b0, b1), (c0, c1) = parts
    init = tokens[a0:a1]
    if "=" not in [t.text for t in init if t.kind == "op"]:
        return None
    eq = max(k for k, t in enumerate(init) if t.kind == "op" and t.text == "=")
    if eq == 0 or init[eq - 1].kind != "ident":
        return None
    var = init[eq - 1].text
    start = _int_literal(init[eq + 1:])
    if start is None:
        return None
    cond = tokens[b0:b1]
    if len(cond) < 3:
        return None
    ops = [k for k, t in enumerate(cond) if t.kind == "op" and t.text in ("<", "<=", ">", ">=")]
    if len(ops) != 1:
        return None
    k = ops[0]
    lhs, op, rhs = cond[:k], cond[k].text, cond[k + 1:]
    if len(lhs) == 1 and lhs[0].kind == "ident" and lhs[0].text == var:
        limit = _int_literal(rhs)
    elif len(rhs) == 1 and rhs[0].kind == "ident" and rhs[0].text == var:
        limit = _int_literal(lhs)
        op = {"<": ">", "<=": ">=", ">": "<", ">=": "<="}[op]
    else:
        return None
    if limit is None:
        return None
    step_toks = [t.text for t in tokens[c0:c1]]
    if step_toks in ([var, "++"], ["++", var]):
        step = 1
    elif step_toks in ([var, "--"], ["--", var]):
        step = -1
    elif len(step_toks) >= 3 and step_toks[0] == var and step_toks[1] in ("+=", "-="):
        s = _int_literal(tokens[c0 + 2:c1])
        if not s:
            return None
        step = s if step_toks[1] == "+=" else -s
    else:
        return None
    if step > 0 and op in ("<", "<="):
        span = limit - start + (1 if op == "<=" else 0)
    elif step < 0 and op in (">", ">="):
        span = start - limit + (1 if op == ">=" else 0)
    else:
        return None
    if span <= 0:
        return 0
    return -(-span // abs(step))


def _catch_types(tokens: list[Token], lo: int, hi: int) -> tuple[str, ...]:
    """Exception type names in a catch header such as ``(final A | b.B e)``."""
    pieces: list[list[str]] = [[]]
    for t in tokens[lo:hi]:
        if t.kind == "op" and t.text == "|":
            pieces.append([])
        elif t.kind == "ident" and t.text != "final":
            pieces[-1].append(t.text)
    names = [p[-1] for p in pieces[:-1] if p]
    last = pieces[-1]
    if len(last) >= 2:
        names.append(last[-2])
    elif last:
        names.append(last[-1])
    return tuple(names)


def build_structure(tokens: list[Token], match: dict[int, int]) -> Structure:
    """Collect control-flow and call-argument regions over the whole token list."""
    s = Structure(tokens, match)
    n = len(tokens)
    seen_else: set[int] = set()
    do_whiles: set[int] = set()
    for i, tok in enumerate(tokens):
        if tok.kind == "op" and tok.text == "(" and i > 0 and tokens[i - 1].kind == "ident" \
                and tokens[i - 1].text not in CONTROL:
            s.regions.append(Region("call", i + 1, match.get(i, n), name=tokens[i - 1].text))
            continue
        if tok.kind != "ident" or tok.text not in CONTROL:
            continue
        kw = tok.text
        if kw in ("for", "while", "if", "switch", "synchronized") and is_op(tokens, i + 1, "("):
            if kw == "while" and i in do_whiles:
                continue
            h0, h1 = i + 2, match.get(i + 1, n)
            body0 = min(h1 + 1, n)
            body1 = statement_end(tokens, match, body0, n)
            if kw in ("for", "while"):
                bound = for_loop_bound(tokens, match, h0, h1) if kw == "for" else None
                s.regions.append(Region("loop", body0, body1, name=kw, header=(h0, h1), bound=bound))
            elif kw == "if":
                s.regions.append(Region("if", body0, body1, name="if", header=(h0, h1)))
                if is_ident(tokens, body1, "else"):
                    e1 = statement_end(tokens, match, body1 + 1, n)
                    s.regions.append(Region("else", body1 + 1, e1, name="else", header=(h0, h1)))
                    seen_else.add(body1)
            elif kw == "switch":
                s.regions.append(Region("switch", body0, body1, name="switch", header=(h0, h1)))
            else:
                s.regions.append(Region("sync", body0, body1, name=kw, header=(h0, h1)))
        elif kw == "do":
            body1 = statement_end(tokens, match, i + 1, n)
            s.regions.append(Region("loop", i + 1, body1, name="do"))
            if is_ident(tokens, body1, "while"):
                do_whiles.add(body1)
        elif kw == "try":
            j = i + 1
            if is_op(tokens, j, "("):
                j = min(match.get(j, n) + 1, n)
            body0, body1 = j, statement_end(tokens, match, j, n)
            try_region = Region("try", body0, body1, name="try")
            s.regions.append(try_region)
            j = body1
            caught: list[str] = []
            while is_ident(tokens, j, "catch") or is_ident(tokens, j, "finally"):
                if is_ident(tokens, j, "catch") and is_op(tokens, j + 1, "("):
                    h0, h1 = j + 2, match.get(j + 1, n)
                    types = _catch_types(tokens, h0, h1)
                    caught.extend(types)
                    c1 = statement_end(tokens, match, h1 + 1, n)
                    s.regions.append(Region("catch", h1 + 1, c1, name="catch", header=(h0, h1), catches=types))
                    j = c1
                else:
                    f1 = statement_end(tokens, match, j + 1, n)
                    s.regions.append(Region("finally", j + 1, f1, name="finally"))
                    j = f1
            try_region.catches = tuple(caught)
    s.regions.sort(key=lambda r: (r.start, -r.end))
    return s


def loop_weight(regions: list[Region]) -> tuple[int, int | None]:
    """(loop depth, product of static bounds or None when any enclosing bound is unknown)."""
    loops = [r for r in regions if r.kind == "loop"]
    if not loops:
        return 0, None
    product: int | None = 1
    for r in loops:
        if r.bound is None:
            product = None
            break
        product *= r.bound
    return len(loops), product


def split_args(tokens: list[Token], match: dict[int, int], lo: int, hi: int) -> list[tuple[int, int]]:
    """Top-level comma-separated ranges in ``tokens[lo:hi]``; empty list for ``()``."""
    if lo >= hi:
        return []
    return _split_top(tokens, match, lo, hi, ",")
