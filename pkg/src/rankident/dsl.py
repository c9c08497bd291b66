"""Text format for parametric polynomial systems and witness files.

A system file is a sequence of newline-terminated statements::

    # comments run to the end of the line
    system: toy
    params: t
    vars: x1 x2
    const: c = 1/2          # zero or more
    eq: x1*x2 - 2           # one or more
    eq: t*x1*x2 + x1 - 1
    expect: 1               # optional solution count
    sol: x1 = 1, x2 = 2     # optional closed-form solutions, one per line

Expressions use ``+ - *``, unary minus, ``^`` with a non-negative integer
exponent, parentheses, identifiers and rational literals ``p`` or ``p/q``.
Multiplication is always explicit.  ``sol:`` lines additionally allow ``/``
between arbitrary factors, because closed-form solutions are rational
functions of the parameters.

Witness (and parameter) files hold ``name = value`` lines.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Mapping

from .models import ParametricSystem
from .polyarith import Polynomial, Rat, RationalFunction, Ring, rat, rat_str

__all__ = [
    "ParseError",
    "Num",
    "Name",
    "Neg",
    "BinOp",
    "Pow",
    "SystemFile",
    "parse_system",
    "render_system_file",
    "system_to_text",
    "system_from_text",
    "parse_assignments",
    "render_assignments",
]

MAX_EXPONENT = 1000
MAX_NESTING = 200


class ParseError(ValueError):
    """A syntax or declaration error with a 1-based source position."""

    def __init__(self, line: int, column: int, message: str, token: str = ""):
        self.line, self.column, self.message, self.token = line, column, message, token
        where = f"line {line}, column {column}"
        shown = f" near {token!r}" if token else ""
        super().__init__(f"{where}: {message}{shown}")


# -- expression trees --------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: Rat


@dataclass(frozen=True)
class Name:
    ident: str
    col: int = field(default=0, compare=False, repr=False)  # source column, for errors


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int


def _names_in(expr) -> Iterator[tuple[str, object]]:
    if isinstance(expr, Name):
        yield expr.ident, expr
    elif isinstance(expr, Neg):
        yield from _names_in(expr.operand)
    elif isinstance(expr, BinOp):
        yield from _names_in(expr.left)
        yield from _names_in(expr.right)
    elif isinstance(expr, Pow):
        yield from _names_in(expr.base)


def evaluate_expr(expr, env: Mapping[str, object]):
    """Evaluate a tree with ``env`` mapping names to polynomials, rational functions or numbers."""
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Name):
        return env[expr.ident]
    if isinstance(expr, Neg):
        return -evaluate_expr(expr.operand, env)
    if isinstance(expr, Pow):
        base = evaluate_expr(expr.base, env)
        if isinstance(base, RationalFunction):
            return RationalFunction(base.num ** expr.exponent, base.den ** expr.exponent)
        return base ** expr.exponent
    a, b = evaluate_expr(expr.left, env), evaluate_expr(expr.right, env)
    if expr.op == "+":
        return a + b
    if expr.op == "-":
        return a - b
    if expr.op == "*":
        return a * b
    if isinstance(a, Polynomial):
        a = RationalFunction.of(a)
    if isinstance(b, Polynomial):
        b = RationalFunction.of(b)
    return a / b


# -- rendering ---------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def render_expr(expr, parent: int = 0, right: bool = False) -> str:
    """Render so that parsing the text gives back the identical tree."""
    if isinstance(expr, Num):
        return rat_str(expr.value)
    if isinstance(expr, Name):
        return expr.ident
    if isinstance(expr, Pow):
        return f"{_atom(expr.base)}^{expr.exponent}"
    if isinstance(expr, Neg):
        inner = expr.operand
        # grammar: factor := "-"? atom ("^" INT)?
        body = render_expr(inner) if isinstance(inner, Pow) else _atom(inner)
        text = "-" + body
        return f"({text})" if parent >= 2 and right else text
    prec = _PREC[expr.op]
    left = render_expr(expr.left, prec, False)
    if expr.op == "/" and _is_plain_int(expr.left):
        left = f"({left})"  # "3 / 4" would read back as the literal 3/4
    rhs = render_expr(expr.right, prec, True)
    if isinstance(expr.right, BinOp) and _PREC[expr.right.op] <= prec:
        rhs = f"({render_expr(expr.right)})"
    text = f"{left} {expr.op} {rhs}"
    if parent > prec or (parent == prec and right):
        return f"({text})"
    return text


def _is_plain_int(expr) -> bool:
    return isinstance(expr, Num) and expr.value.denominator == 1


def _atom(expr) -> str:
    if isinstance(expr, Name) or (isinstance(expr, Num) and expr.value >= 0):
        return render_expr(expr)
    return f"({render_expr(expr)})"


# -- system files ------------------------------------------------------------

@dataclass(frozen=True)
class SystemFile:
    name: str
    params: tuple[str, ...]
    vars: tuple[str, ...]
    constants: tuple[tuple[str, Rat], ...]
    equations: tuple[object, ...]
    expected_count: int | None = None
    solutions: tuple[tuple[tuple[str, object], ...], ...] = ()

    @property
    def constant_map(self) -> dict[str, Rat]:
        return dict(self.constants)

    def ring(self) -> Ring:
        return Ring.blocks(list(self.vars), list(self.params))

    def to_system(self) -> ParametricSystem:
        """Evaluate the trees into a :class:`ParametricSystem` (constants substituted)."""
        ring = self.ring()
        env: dict = dict(zip(ring.names, ring.gens()))
        env.update(self.constant_map)
        gens = []
        for eq in self.equations:
            val = evaluate_expr(eq, env)
            gens.append(val if isinstance(val, Polynomial) else Polynomial.constant(ring, val))
        pring = Ring(self.params)
        penv: dict = dict(zip(pring.names, pring.gens()))
        penv.update(self.constant_map)
        templates = []
        for sol in self.solutions:
            tpl = {}
            for var, expr in sol:
                val = evaluate_expr(expr, penv)
                if not isinstance(val, (Polynomial, RationalFunction)):
                    val = Polynomial.constant(pring, val)
                tpl[var] = RationalFunction.of(val)
            templates.append(tpl)
        return ParametricSystem(self.name, ring, tuple(gens), self.expected_count or 0, tuple(templates))


def render_system_file(sf: SystemFile) -> str:
    lines = [f"system: {sf.name}", "params: " + " ".join(sf.params), "vars: " + " ".join(sf.vars)]
    lines += [f"const: {n} = {rat_str(v)}" for n, v in sf.constants]
    lines += [f"eq: {render_expr(e)}" for e in sf.equations]
    if sf.expected_count is not None:
        lines.append(f"expect: {sf.expected_count}")
    for sol in sf.solutions:
        lines.append("sol: " + ", ".join(f"{v} = {render_expr(e)}" for v, e in sol))
    return "\n".join(lines) + "\n"


def system_to_text(system: ParametricSystem, header: str = "") -> str:
    """DSL text for a system built in Python (e.g. by :func:`models.build_system`)."""
    lines = [f"# {ln}" for ln in header.splitlines()] if header else []
    lines += [f"# {note}" for note in system.notes]
    lines += [f"system: {system.system_id}",
              "params: " + " ".join(system.param_names),
              "vars: " + " ".join(system.var_names)]
    lines += [f"eq: {g.render()}" for g in system.generators]
    lines.append(f"expect: {system.expected_count}")
    for tpl in system.templates:
        lines.append("sol: " + ", ".join(f"{v} = {f.render()}" for v, f in tpl.items()))
    return "\n".join(lines) + "\n"


def system_from_text(text: str) -> ParametricSystem:
    return parse_system(text).to_system()


# -- lexer -------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<rational>\d+\s*/\s*\d+)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^(),=])
""", re.VERBOSE)


@dataclass(frozen=True)
class _Tok:
    kind: str   # rational | int | ident | op | end
    text: str
    col: int


def _lex(text: str, line: int, col0: int) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(line, col0 + pos, "unexpected character", text[pos])
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), col0 + pos))
        pos = m.end()
    toks.append(_Tok("end", "", col0 + len(text)))
    return toks


class _ExprParser:
    def __init__(self, toks: list[_Tok], line: int, allow_div: bool):
        self.toks, self.i, self.line, self.allow_div = toks, 0, line, allow_div
        self.depth = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def fail(self, message: str):
        t = self.tok
        raise ParseError(self.line, t.col, message, t.text)

    def take(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect_end(self):
        if self.tok.kind != "end":
            self.fail("expected an operator or end of line")

    def expr(self):
        self.depth += 1
        if self.depth > MAX_NESTING:
            self.fail("expression nested too deeply")
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.term())
        self.depth -= 1
        return node

    def term(self):
        node = self.factor()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            if op == "/" and not self.allow_div:
                self.fail("division is only allowed in sol: lines (use a p/q literal)")
            self.i += 1
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        neg = self.take("-")
        node = self.atom()
        if self.take("^"):
            if self.tok.kind != "int":
                self.fail("expected a non-negative integer exponent")
            exp = int(self.tok.text)
            if exp > MAX_EXPONENT:
                self.fail(f"exponent larger than {MAX_EXPONENT}")
            self.i += 1
            node = Pow(node, exp)
        return Neg(node) if neg else node

    def atom(self):
        t = self.tok
        if t.kind == "ident":
            self.i += 1
            return Name(t.text, t.col)
        if t.kind in ("int", "rational"):
            self.i += 1
            num, _, den = t.text.partition("/")
            if den and int(den) == 0:
                raise ParseError(self.line, t.col, "zero denominator in rational literal", t.text)
            return Num(rat(f"{int(num)}/{int(den)}" if den else int(num)))
        if self.take("("):
            node = self.expr()
            if not self.take(")"):
                self.fail("expected ')'")
            return node
        self.fail("expected an identifier, a number or '('")


def _parse_expr(text: str, line: int, col0: int, allow_div: bool = False):
    p = _ExprParser(_lex(text, line, col0), line, allow_div)
    node = p.expr()
    p.expect_end()
    return node


def _statements(source: str) -> Iterator[tuple[int, str, str, int]]:
    """Yield (line number, keyword, body, body column) for non-blank lines."""
    for lineno, raw in enumerate(source.splitlines(), start=1):
        text = raw.split("#", 1)[0]
        if not text.strip():
            continue
        m = re.match(r"\s*([A-Za-z_]+)\s*:", text)
        if m is None:
            col = len(text) - len(text.lstrip()) + 1
            raise ParseError(lineno, col, "expected a 'keyword:' statement", text.strip()[:20])
        yield lineno, m.group(1), text[m.end():], m.end() + 1


_ORDER = ("system", "params", "vars", "const", "eq", "expect", "sol")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")


def parse_system(source: str | bytes) -> SystemFile:
    """Parse DSL text into a :class:`SystemFile`; raises :class:`ParseError`."""
    if isinstance(source, bytes):
        source = source.decode("utf-8", errors="replace")
    name = None
    params: tuple = ()
    vars_: tuple = ()
    consts: list = []
    eqs: list = []
    expected = None
    sols: list = []
    declared: dict[str, str] = {}
    stage = -1
    last_line = 0

    def declare(ident: str, block: str, lineno: int, col: int):
        if not _IDENT.match(ident):
            raise ParseError(lineno, col, "invalid identifier", ident)
        if ident in declared:
            raise ParseError(lineno, col, f"duplicate declaration (already in {declared[ident]})", ident)
        declared[ident] = block

    def check_names(expr, lineno: int, col: int, allowed: set[str]):
        for ident, node in _names_in(expr):
            if ident not in declared:
                raise ParseError(lineno, node.col or col, "undeclared identifier", ident)
            if ident not in allowed:
                raise ParseError(lineno, node.col or col, f"{declared[ident]} name not allowed here", ident)

    for lineno, kw, body, col in _statements(source):
        last_line = lineno
        if kw not in _ORDER:
            raise ParseError(lineno, 1, "unknown statement", kw)
        pos = _ORDER.index(kw)
        repeatable = kw in ("const", "eq", "sol")
        if pos < stage or (pos == stage and not repeatable):
            raise ParseError(lineno, 1, f"'{kw}:' is out of order or repeated", kw)
        expected_kw = _ORDER[stage + 1] if stage + 1 < len(_ORDER) else None
        if stage < 2 and kw != expected_kw:
            raise ParseError(lineno, 1, f"expected '{expected_kw}:'", kw)
        if kw in ("expect", "sol") and not eqs:
            raise ParseError(lineno, 1, "at least one equation required", kw)
        stage = pos
        if kw == "system":
            name = body.strip()
            if not name or not re.fullmatch(r"[A-Za-z0-9_.+\-]+", name):
                raise ParseError(lineno, col, "expected a system name", name)
        elif kw in ("params", "vars"):
            block = "parameter" if kw == "params" else "variable"
            names = []
            offset = 0
            for ident in body.split():
                offset = body.index(ident, offset)
                declare(ident, block, lineno, col + offset)
                names.append(ident)
                offset += len(ident)
            if kw == "params":
                params = tuple(names)
            else:
                vars_ = tuple(names)
                if not vars_:
                    raise ParseError(lineno, col, "at least one variable required")
        elif kw == "const":
            m = re.fullmatch(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(-?)\s*(\d+(?:\s*/\s*\d+)?)\s*", body)
            if m is None:
                raise ParseError(lineno, col, "expected 'name = rational'", body.strip())
            declare(m.group(1), "constant", lineno, col + m.start(1))
            num, _, den = m.group(3).replace(" ", "").partition("/")
            if den and int(den) == 0:
                raise ParseError(lineno, col + m.start(3), "zero denominator in rational literal", m.group(3))
            value = rat(f"{num}/{den}" if den else int(num))
            consts.append((m.group(1), -value if m.group(2) else value))
        elif kw == "eq":
            expr = _parse_expr(body, lineno, col)
            check_names(expr, lineno, col, set(declared))
            eqs.append(expr)
        elif kw == "expect":
            if not re.fullmatch(r"\s*\d+\s*", body):
                raise ParseError(lineno, col, "expected a non-negative integer", body.strip())
            expected = int(body)
        elif kw == "sol":
            sols.append(_parse_solution(body, lineno, col, vars_, declared))

    if name is None:
        raise ParseError(max(last_line, 1), 1, "expected 'system:'")
    if stage < 2:
        raise ParseError(last_line, 1, f"expected '{_ORDER[stage + 1]}:'")
    if not eqs:
        raise ParseError(last_line + 1, 1, "at least one equation required")
    return SystemFile(name, params, vars_, tuple(consts), tuple(eqs), expected, tuple(sols))


def _parse_solution(body: str, lineno: int, col: int, vars_: tuple, declared: dict) -> tuple:
    toks = _lex(body, lineno, col)
    # split on top-level commas
    parts, depth, cur = [], 0, []
    for t in toks[:-1]:
        if t.kind == "op" and t.text == "(":
            depth += 1
        elif t.kind == "op" and t.text == ")":
            depth -= 1
        if t.kind == "op" and t.text == "," and depth == 0:
            parts.append(cur)
            cur = []
        else:
            cur.append(t)
    parts.append(cur)
    seen = {}
    allowed = {n for n, b in declared.items() if b in ("parameter", "constant")}
    for part in parts:
        if len(part) < 3 or part[0].kind != "ident" or part[1].text != "=":
            first = part[0] if part else toks[-1]
            raise ParseError(lineno, first.col, "expected 'variable = expression'", first.text)
        var = part[0].text
        if var not in vars_:
            raise ParseError(lineno, part[0].col, "not a declared variable", var)
        if var in seen:
            raise ParseError(lineno, part[0].col, "variable assigned twice", var)
        p = _ExprParser(part[2:] + [_Tok("end", "", part[-1].col + len(part[-1].text))], lineno, True)
        expr = p.expr()
        p.expect_end()
        for ident, node in _names_in(expr):
            if ident not in allowed:
                msg = "undeclared identifier" if ident not in declared else "solutions may only use parameters and constants"
                raise ParseError(lineno, node.col or part[2].col, msg, ident)
        seen[var] = expr
    missing = [v for v in vars_ if v not in seen]
    if missing:
        raise ParseError(lineno, col, "solution misses variables: " + " ".join(missing))
    return tuple((v, seen[v]) for v in vars_)


# -- witness / parameter files ------------------------------------------------

def parse_assignments(source: str | bytes) -> dict[str, Rat]:
    """``name = rational`` per line (``#`` comments, blank lines ignored)."""
    if isinstance(source, bytes):
        source = source.decode("utf-8", errors="replace")
    out: dict[str, Rat] = {}
    for lineno, raw in enumerate(source.splitlines(), start=1):
        text = raw.split("#", 1)[0]
        if not text.strip():
            continue
        m = re.fullmatch(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(-?)\s*(\d+)(?:\s*/\s*(\d+))?\s*", text)
        if m is None:
            col = len(text) - len(text.lstrip()) + 1
            raise ParseError(lineno, col, "expected 'name = rational'", text.strip()[:20])
        name = m.group(1)
        if name in out:
            raise ParseError(lineno, m.start(1) + 1, "duplicate assignment", name)
        den = m.group(4)
        if den is not None and int(den) == 0:
            raise ParseError(lineno, m.start(4) + 1, "zero denominator in rational literal", den)
        value = rat(f"{m.group(3)}/{den}" if den else int(m.group(3)))
        out[name] = -value if m.group(2) else value
    return out


def render_assignments(values: Mapping[str, object]) -> str:
    return "".join(f"{k} = {rat_str(rat(v))}\n" for k, v in values.items())
