"""Text format for noise-extended basic action theories (``.bat`` files).

The grammar is line-oriented with braces around action bodies::

    theory robot1d
    fluent h : real            # distance to the wall
    init h ~ uniform(2.0, 12.0)
    action fwd(x: real) {
      noisy y ~ gaussian(mean = x, stddev = 1.0)
      poss   true
      effect h := h - y
    }
    action sonar() senses z {
      poss       h >= 0
      likelihood gaussian(mean = h, stddev = 1.0)
    }

Whitespace is insignificant inside expressions.  ``#`` starts a comment.
``parse_theory`` never raises on arbitrary byte input; every rejection
carries at least one diagnostic with a span inside the input.

Diagnostic codes (stable):

====== =========================================================
DSL001 syntax error
DSL002 unknown fluent or name
DSL003 discrete table masses do not sum to 1 (or are negative)
DSL004 gaussian stddev <= 0
DSL005 action declares both effector noise and sensing
DSL006 duplicate declaration (fluent, action, init, effect target)
DSL007 init problem (missing, non-constant, or for unknown fluent)
DSL009 invalid density parameter (e.g. uniform lo >= hi)
====== =========================================================
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional, Union

from .model import (
    ActionDecl,
    ActionEvent,
    And,
    BelcalcError,
    BinOp,
    Cmp,
    Density,
    DiscreteTable,
    Expr,
    Formula,
    Gaussian,
    History,
    Lit,
    Name,
    Not,
    Num,
    Or,
    PointMass,
    SourceSpan,
    Theory,
    Uniform,
    density_names,
    expr_names,
    formula_names,
)

__all__ = [
    "Diagnostic",
    "ParseResult",
    "parse_theory",
    "format_theory",
    "parse_query",
    "parse_history",
    "format_history",
    "HistorySyntaxError",
    "ROBOT1D_SOURCE",
]

KEYWORDS = {
    "theory", "fluent", "init", "action", "senses", "noisy", "poss",
    "effect", "likelihood", "and", "or", "not", "true", "false", "real",
}


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    message: str
    span: SourceSpan

    def render(self) -> str:
        return f"{self.severity} {self.code} at {self.span.line}:{self.span.column}: {self.message}"


@dataclass
class ParseResult:
    theory: Optional[Theory]
    diagnostics: list

    @property
    def ok(self) -> bool:
        return self.theory is not None


# ---------------------------------------------------------------------------
# Tokenizer.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Token:
    kind: str   # IDENT NUMBER PUNCT EOF BAD
    text: str
    span: SourceSpan


_PUNCT = (":=", "<=", ">=", "<", ">", "=", "(", ")", "{", "}", ":", ";", ",",
          "~", "+", "-", "*")

_NUM_RE = re.compile(r"[0-9]+(\.[0-9]+)?([eE][+-]?[0-9]+)?")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def _tokenize(text: str) -> list:
    tokens = []
    i = 0
    line = 1
    line_start = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            i += 1
            line_start = i
            continue
        if c in " \t\r\f\v":
            i += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        col = i - line_start + 1
        m = _NUM_RE.match(text, i)
        if m:
            span = SourceSpan(i, m.end(), line, col)
            tokens.append(_Token("NUMBER", m.group(), span))
            i = m.end()
            continue
        m = _IDENT_RE.match(text, i)
        if m:
            span = SourceSpan(i, m.end(), line, col)
            tokens.append(_Token("IDENT", m.group(), span))
            i = m.end()
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                span = SourceSpan(i, i + len(p), line, col)
                tokens.append(_Token("PUNCT", p, span))
                i += len(p)
                break
        else:
            span = SourceSpan(i, i + 1, line, col)
            tokens.append(_Token("BAD", c, span))
            i += 1
    tokens.append(_Token("EOF", "", SourceSpan(n, n, line, max(1, n - line_start + 1))))
    return tokens


class _SyntaxError(Exception):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(message)
        self.message = message
        self.span = span


class _Parser:
    """Recursive-descent parser with token-index backtracking."""

    def __init__(self, tokens: list):
        self.tokens = tokens
        self.pos = 0

    # -- token plumbing ----------------------------------------------------
    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        t = self.tokens[self.pos]
        if t.kind != "EOF":
            self.pos += 1
        return t

    def at_punct(self, text: str) -> bool:
        t = self.peek()
        return t.kind == "PUNCT" and t.text == text

    def at_word(self, word: str) -> bool:
        t = self.peek()
        return t.kind == "IDENT" and t.text == word

    def expect_punct(self, text: str) -> _Token:
        t = self.peek()
        if t.kind == "PUNCT" and t.text == text:
            return self.next()
        raise _SyntaxError(f"expected {text!r}, found {t.text!r}", t.span)

    def expect_word(self, word: str) -> _Token:
        t = self.peek()
        if t.kind == "IDENT" and t.text == word:
            return self.next()
        raise _SyntaxError(f"expected {word!r}, found {t.text!r}", t.span)

    def expect_ident(self) -> _Token:
        t = self.peek()
        if t.kind == "IDENT" and t.text not in KEYWORDS:
            return self.next()
        raise _SyntaxError(f"expected identifier, found {t.text!r}", t.span)

    def expect_number(self) -> tuple:
        neg = False
        start = self.peek()
        if self.at_punct("-"):
            self.next()
            neg = True
        t = self.peek()
        if t.kind != "NUMBER":
            raise _SyntaxError(f"expected number, found {t.text!r}", t.span)
        self.next()
        value = float(t.text)
        span = SourceSpan(start.span.start, t.span.end, start.span.line, start.span.column)
        return (-value if neg else value, span)

    # -- expressions ---------------------------------------------------------
    def parse_expr(self) -> Expr:
        e = self.parse_term()
        while self.at_punct("+") or self.at_punct("-"):
            op = self.next().text
            rhs = self.parse_term()
            e = _fold(op, e, rhs)
        return e

    def parse_term(self) -> Expr:
        e = self.parse_factor()
        while self.at_punct("*"):
            self.next()
            rhs = self.parse_factor()
            e = _fold("*", e, rhs)
        return e

    def parse_factor(self) -> Expr:
        t = self.peek()
        if t.kind == "NUMBER":
            self.next()
            return Num(float(t.text), span=t.span)
        if self.at_punct("-"):
            self.next()
            inner = self.parse_factor()
            if isinstance(inner, Num):
                return Num(-inner.value, span=t.span)
            return BinOp("-", Num(0.0), inner, span=t.span)
        if self.at_punct("("):
            self.next()
            e = self.parse_expr()
            self.expect_punct(")")
            return e
        if t.kind == "IDENT" and t.text not in KEYWORDS:
            self.next()
            return Name(t.text, span=t.span)
        raise _SyntaxError(f"expected expression, found {t.text!r}", t.span)

    # -- formulas ------------------------------------------------------------
    def parse_formula(self) -> Formula:
        f = self.parse_conjunction()
        while self.at_word("or"):
            self.next()
            rhs = self.parse_conjunction()
            f = Or(f, rhs)
        return f

    def parse_conjunction(self) -> Formula:
        f = self.parse_unary()
        while self.at_word("and"):
            self.next()
            rhs = self.parse_unary()
            f = And(f, rhs)
        return f

    def parse_unary(self) -> Formula:
        t = self.peek()
        if self.at_word("not"):
            self.next()
            return Not(self.parse_unary())
        if self.at_word("true"):
            self.next()
            return Lit(True, span=t.span)
        if self.at_word("false"):
            self.next()
            return Lit(False, span=t.span)
        if self.at_punct("("):
            # Either a parenthesized formula or a parenthesized expression
            # opening a comparison; try the formula reading first.
            saved = self.pos
            try:
                self.next()
                f = self.parse_formula()
                self.expect_punct(")")
                return f
            except _SyntaxError:
                self.pos = saved
        return self.parse_comparison()

    def parse_comparison(self) -> Formula:
        lhs = self.parse_expr()
        t = self.peek()
        if t.kind == "PUNCT" and t.text in ("<", "<=", "=", ">=", ">"):
            self.next()
            rhs = self.parse_expr()
            return Cmp(t.text, lhs, rhs, span=t.span)
        raise _SyntaxError(f"expected comparison operator, found {t.text!r}", t.span)

    # -- densities -----------------------------------------------------------
    def parse_density(self) -> Density:
        t = self.peek()
        if t.kind != "IDENT":
            raise _SyntaxError(f"expected density, found {t.text!r}", t.span)
        kind = t.text
        if kind == "uniform":
            self.next()
            self.expect_punct("(")
            lo, lo_span = self.expect_number()
            self.expect_punct(",")
            hi, hi_span = self.expect_number()
            close = self.expect_punct(")")
            span = _join(t.span, close.span)
            if not lo < hi:
                raise _Reject("DSL009", f"uniform requires lo < hi, got ({lo!r}, {hi!r})", span)
            return Uniform(lo, hi, span=span)
        if kind == "gaussian":
            self.next()
            self.expect_punct("(")
            self.expect_word("mean")
            self.expect_punct("=")
            mean = self.parse_expr()
            self.expect_punct(",")
            self.expect_word("stddev")
            self.expect_punct("=")
            sd, sd_span = self.expect_number()
            close = self.expect_punct(")")
            span = _join(t.span, close.span)
            if not sd > 0:
                raise _Reject("DSL004", f"stddev must be > 0, got {sd!r}", sd_span)
            return Gaussian(mean, sd, span=span)
        if kind == "discrete":
            self.next()
            self.expect_punct("(")
            entries = []
            while True:
                value, _ = self.expect_number()
                self.expect_punct(":")
                mass, _ = self.expect_number()
                entries.append((value, mass))
                if self.at_punct(","):
                    self.next()
                    continue
                break
            close = self.expect_punct(")")
            span = _join(t.span, close.span)
            if any(m < 0 for _, m in entries):
                raise _Reject("DSL003", "discrete table masses must be nonnegative", span)
            total = math.fsum(m for _, m in entries)
            if abs(total - 1.0) > 1e-9:
                raise _Reject("DSL003", f"discrete table masses sum to {total!r}, not 1", span)
            return DiscreteTable(tuple(entries), span=span)
        if kind == "pointmass":
            self.next()
            self.expect_punct("(")
            value = self.parse_expr()
            close = self.expect_punct(")")
            return PointMass(value, span=_join(t.span, close.span))
        raise _SyntaxError(f"unknown density {kind!r}", t.span)


class _Reject(Exception):
    """A semantic rejection discovered during parsing, with its own code."""

    def __init__(self, code: str, message: str, span: SourceSpan):
        super().__init__(message)
        self.code = code
        self.message = message
        self.span = span


def _join(a: SourceSpan, b: SourceSpan) -> SourceSpan:
    return SourceSpan(a.start, b.end, a.line, a.column)


def _fold(op: str, left: Expr, right: Expr) -> Expr:
    """Constant-fold when both operands are literals; otherwise build a node."""
    if isinstance(left, Num) and isinstance(right, Num):
        if op == "+":
            return Num(left.value + right.value)
        if op == "-":
            return Num(left.value - right.value)
        if op == "*":
            return Num(left.value * right.value)
    span = left.span if left.span is not None else right.span
    return BinOp(op, left, right, span=span)


# ---------------------------------------------------------------------------
# Theory parsing and validation.
# ---------------------------------------------------------------------------

def parse_theory(text: Union[str, bytes]) -> ParseResult:
    """Parse and statically check a theory; never raises on bad input."""
    if isinstance(text, bytes):
        text = text.decode("utf-8", "replace")
    try:
        return _parse_theory_checked(text)
    except _Reject as r:
        return ParseResult(None, [Diagnostic("error", r.code, r.message, r.span)])
    except _SyntaxError as e:
        return ParseResult(None, [Diagnostic("error", "DSL001", e.message, e.span)])
    except RecursionError:
        whole = SourceSpan(0, len(text.encode("utf-8", "replace")), 1, 1)
        return ParseResult(None, [Diagnostic("error", "DSL001", "input too deeply nested", whole)])


def _parse_theory_checked(text: str) -> ParseResult:
    p = _Parser(_tokenize(text))
    diags: list = []

    p.expect_word("theory")
    name_tok = p.expect_ident()

    fluents: list = []
    fluent_spans: dict = {}
    init: dict = {}
    init_spans: dict = {}
    actions: list = []
    action_spans: dict = {}

    while p.peek().kind != "EOF":
        t = p.peek()
        if p.at_word("fluent"):
            p.next()
            f = p.expect_ident()
            p.expect_punct(":")
            p.expect_word("real")
            if f.text in fluent_spans:
                diags.append(Diagnostic("error", "DSL006",
                                        f"duplicate fluent {f.text!r}", f.span))
            else:
                fluents.append(f.text)
                fluent_spans[f.text] = f.span
        elif p.at_word("init"):
            p.next()
            f = p.expect_ident()
            p.expect_punct("~")
            d = p.parse_density()
            if f.text in init:
                diags.append(Diagnostic("error", "DSL006",
                                        f"duplicate init for {f.text!r}", f.span))
            else:
                init[f.text] = d
                init_spans[f.text] = f.span
        elif p.at_word("action"):
            p.next()
            a = _parse_action(p)
            if a.name in action_spans:
                diags.append(Diagnostic("error", "DSL006",
                                        f"duplicate action {a.name!r}", a.span))
            else:
                actions.append(a)
                action_spans[a.name] = a.span
        else:
            raise _SyntaxError(
                f"expected 'fluent', 'init' or 'action', found {t.text!r}", t.span)

    _validate(fluents, fluent_spans, init, init_spans, actions, diags)
    if any(d.severity == "error" for d in diags):
        return ParseResult(None, diags)

    theory = Theory(
        name=name_tok.text,
        fluents=tuple(fluents),
        init=tuple((f, init[f]) for f in fluents),
        actions=tuple(actions),
        span=name_tok.span,
    )
    return ParseResult(theory, diags)


def _parse_action(p: _Parser) -> ActionDecl:
    name = p.expect_ident()
    p.expect_punct("(")
    params: list = []
    if not p.at_punct(")"):
        while True:
            prm = p.expect_ident()
            p.expect_punct(":")
            p.expect_word("real")
            params.append(prm.text)
            if p.at_punct(","):
                p.next()
                continue
            break
    p.expect_punct(")")

    reading = None
    if p.at_word("senses"):
        p.next()
        reading = p.expect_ident().text

    p.expect_punct("{")
    latent = None
    noise: Optional[Density] = None
    noise_span = None
    poss: Optional[Formula] = None
    likelihood: Optional[Density] = None
    effects: list = []
    effect_spans: dict = {}
    dups: list = []
    while not p.at_punct("}"):
        if p.at_word("noisy"):
            kw = p.next()
            lat = p.expect_ident()
            p.expect_punct("~")
            noise = p.parse_density()
            latent = lat.text
            noise_span = kw.span
        elif p.at_word("poss"):
            p.next()
            poss = p.parse_formula()
        elif p.at_word("likelihood"):
            kw = p.next()
            likelihood = p.parse_density()
            if reading is None:
                raise _SyntaxError("likelihood requires a 'senses' clause", kw.span)
        elif p.at_word("effect"):
            p.next()
            target = p.expect_ident()
            p.expect_punct(":=")
            rhs = p.parse_expr()
            if any(t == target.text for t, _ in effects):
                dups.append(Diagnostic("error", "DSL006",
                                       f"duplicate effect for {target.text!r}", target.span))
            effects.append((target.text, rhs))
            effect_spans[target.text] = target.span
        else:
            t = p.peek()
            raise _SyntaxError(
                f"expected 'noisy', 'poss', 'effect' or 'likelihood', found {t.text!r}",
                t.span)
    p.expect_punct("}")

    if noise is not None and reading is not None:
        raise _Reject("DSL005",
                      f"action {name.text!r} declares both effector noise and sensing",
                      noise_span)
    if reading is not None and likelihood is None:
        raise _SyntaxError(f"sensing action {name.text!r} needs a likelihood", name.span)
    if dups:
        raise _Reject(dups[0].code, dups[0].message, dups[0].span)

    decl = ActionDecl(
        name=name.text,
        params=tuple(params),
        poss=poss if poss is not None else Lit(True),
        effects=tuple(effects),
        effector_latent=latent,
        effector_noise=noise,
        sensing_reading=reading,
        sensing_likelihood=likelihood,
        span=name.span,
    )
    object.__setattr__(decl, "_effect_spans", effect_spans)
    return decl


def _validate(fluents, fluent_spans, init, init_spans, actions, diags) -> None:
    fluent_set = set(fluents)

    for f, span in init_spans.items():
        if f not in fluent_set:
            diags.append(Diagnostic("error", "DSL002",
                                    f"init for unknown fluent {f!r}", span))
    for f in fluents:
        if f not in init:
            diags.append(Diagnostic("error", "DSL007",
                                    f"fluent {f!r} has no init density", fluent_spans[f]))
    for f, d in init.items():
        free = density_names(d)
        if free:
            diags.append(Diagnostic(
                "error", "DSL007",
                f"init density for {f!r} must be constant, mentions {sorted(free)}",
                d.span or init_spans[f]))

    for a in actions:
        params = set(a.params)
        latent = {a.effector_latent} if a.effector_latent else set()
        reading = {a.sensing_reading} if a.sensing_reading else set()
        span = a.span
        eff_spans = getattr(a, "_effect_spans", {})

        for target, rhs in a.effects:
            tspan = eff_spans.get(target, span)
            if target not in fluent_set:
                diags.append(Diagnostic("error", "DSL002",
                                        f"effect on undeclared fluent {target!r}", tspan))
            for n in sorted(expr_names(rhs)):
                if n not in fluent_set | params | latent:
                    diags.append(Diagnostic("error", "DSL002",
                                            f"unknown name {n!r} in effect", tspan))
        for n in sorted(formula_names(a.poss)):
            if n not in fluent_set | params:
                diags.append(Diagnostic("error", "DSL002",
                                        f"unknown name {n!r} in poss", span))
        if a.effector_noise is not None:
            for n in sorted(density_names(a.effector_noise)):
                if n not in fluent_set | params:
                    diags.append(Diagnostic("error", "DSL002",
                                            f"unknown name {n!r} in effector noise", span))
        if a.sensing_likelihood is not None:
            for n in sorted(density_names(a.sensing_likelihood)):
                if n not in fluent_set | params | reading:
                    diags.append(Diagnostic("error", "DSL002",
                                            f"unknown name {n!r} in likelihood", span))


# ---------------------------------------------------------------------------
# Canonical formatting.
# ---------------------------------------------------------------------------

def _fmt_num(x: float) -> str:
    if x == math.floor(x) and abs(x) < 1e16:
        return f"{x:.1f}"
    return repr(x)


def _fmt_expr(e: Expr, parent_prec: int = 0) -> str:
    # precedence: '+'/'-' -> 1, '*' -> 2, atoms -> 3
    if isinstance(e, Num):
        if e.value < 0:
            s = "-" + _fmt_num(-e.value)
            return f"({s})" if parent_prec >= 2 else s
        return _fmt_num(e.value)
    if isinstance(e, Name):
        return e.name
    if isinstance(e, BinOp):
        prec = 2 if e.op == "*" else 1
        left = _fmt_expr(e.left, prec - 1 if e.op != "-" else prec - 1)
        # right side binds tighter for '-' (a - (b - c) must keep parens)
        right = _fmt_expr(e.right, prec if e.op in ("-",) else prec - 1)
        if e.op == "*":
            left = _fmt_expr(e.left, 1)
            right = _fmt_expr(e.right, 2)
        s = f"{left} {e.op} {right}"
        return f"({s})" if parent_prec >= prec else s
    raise BelcalcError(f"not an expression: {e!r}")


def _fmt_formula(f: Formula, parent_prec: int = 0) -> str:
    # precedence: or -> 1, and -> 2, not -> 3, atoms -> 4
    if isinstance(f, Lit):
        return "true" if f.value else "false"
    if isinstance(f, Cmp):
        return f"{_fmt_expr(f.lhs)} {f.op} {_fmt_expr(f.rhs)}"
    if isinstance(f, Or):
        s = f"{_fmt_formula(f.left, 0)} or {_fmt_formula(f.right, 1)}"
        return f"({s})" if parent_prec >= 1 else s
    if isinstance(f, And):
        s = f"{_fmt_formula(f.left, 1)} and {_fmt_formula(f.right, 2)}"
        return f"({s})" if parent_prec >= 2 else s
    if isinstance(f, Not):
        inner = f.inner
        if isinstance(inner, (Cmp, Lit)):
            return f"not {_fmt_formula(inner, 3)}"
        return f"not ({_fmt_formula(inner, 0)})"
    raise BelcalcError(f"not a formula: {f!r}")


def _fmt_density(d: Density) -> str:
    if isinstance(d, Uniform):
        return f"uniform({_fmt_num(d.lo)}, {_fmt_num(d.hi)})"
    if isinstance(d, Gaussian):
        return f"gaussian(mean = {_fmt_expr(d.mean)}, stddev = {_fmt_num(d.stddev)})"
    if isinstance(d, DiscreteTable):
        entries = ", ".join(f"{_fmt_num(v)}: {_fmt_num(m)}" for v, m in d.entries)
        return f"discrete({entries})"
    if isinstance(d, PointMass):
        return f"pointmass({_fmt_expr(d.value)})"
    raise BelcalcError(f"not a density: {d!r}")


def format_theory(t: Theory) -> str:
    """Canonical text; ``parse_theory(format_theory(t))`` round-trips."""
    out = [f"theory {t.name}"]
    for f in t.fluents:
        out.append(f"fluent {f} : real")
    for f, d in t.init:
        out.append(f"init {f} ~ {_fmt_density(d)}")
    for a in sorted(t.actions, key=lambda a: a.name):
        params = ", ".join(f"{p}: real" for p in a.params)
        header = f"action {a.name}({params})"
        if a.sensing_reading is not None:
            header += f" senses {a.sensing_reading}"
        out.append(header + " {")
        if a.effector_noise is not None:
            out.append(f"  noisy {a.effector_latent} ~ {_fmt_density(a.effector_noise)}")
        out.append(f"  poss {_fmt_formula(a.poss)}")
        if a.sensing_likelihood is not None:
            out.append(f"  likelihood {_fmt_density(a.sensing_likelihood)}")
        for target, rhs in a.effects:
            out.append(f"  effect {target} := {_fmt_expr(rhs)}")
        out.append("}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Queries and the history mini-syntax: `fwd(2.0); sonar() = 5.0`.
# ---------------------------------------------------------------------------

class HistorySyntaxError(BelcalcError):
    """The history or query string does not parse or match the theory."""


def parse_query(text: str, theory: Optional[Theory] = None) -> Formula:
    """Parse a formula; optionally check its names against a theory."""
    p = _Parser(_tokenize(text))
    try:
        f = p.parse_formula()
        if p.peek().kind != "EOF":
            t = p.peek()
            raise _SyntaxError(f"trailing input {t.text!r}", t.span)
    except _SyntaxError as e:
        raise HistorySyntaxError(f"bad query: {e.message}") from None
    if theory is not None:
        unknown = formula_names(f) - set(theory.fluents)
        if unknown:
            raise HistorySyntaxError(f"query mentions unknown fluents {sorted(unknown)}")
    return f


def parse_history(text: str, theory: Theory) -> History:
    """Parse `name(args);...` with sensing readings written `name(args) = r`."""
    p = _Parser(_tokenize(text))
    events: list = []
    if p.peek().kind == "EOF":
        return ()
    while True:
        try:
            name = p.expect_ident()
            p.expect_punct("(")
            args: list = []
            if not p.at_punct(")"):
                while True:
                    value, _ = p.expect_number()
                    args.append(value)
                    if p.at_punct(","):
                        p.next()
                        continue
                    break
            p.expect_punct(")")
            reading = None
            if p.at_punct("="):
                p.next()
                reading, _ = p.expect_number()
        except _SyntaxError as e:
            raise HistorySyntaxError(f"bad history: {e.message}") from None
        decl = None
        for a in theory.actions:
            if a.name == name.text:
                decl = a
                break
        if decl is None:
            raise HistorySyntaxError(f"unknown action {name.text!r}")
        if len(args) != len(decl.params):
            raise HistorySyntaxError(
                f"action {name.text!r} takes {len(decl.params)} args, got {len(args)}")
        if decl.is_sensing and reading is None:
            raise HistorySyntaxError(f"sensing action {name.text!r} needs '= reading'")
        if not decl.is_sensing and reading is not None:
            raise HistorySyntaxError(f"action {name.text!r} does not produce a reading")
        events.append(ActionEvent(name.text, tuple(args), reading))
        if p.at_punct(";"):
            p.next()
            if p.peek().kind == "EOF":
                break
            continue
        if p.peek().kind == "EOF":
            break
        t = p.peek()
        raise HistorySyntaxError(f"bad history: unexpected {t.text!r}")
    return tuple(events)


def format_history(hist: History) -> str:
    parts = []
    for ev in hist:
        args = ", ".join(_fmt_num(a) for a in ev.args)
        s = f"{ev.action}({args})"
        if ev.reading is not None:
            s += f" = {_fmt_num(ev.reading)}"
        parts.append(s)
    return "; ".join(parts)


ROBOT1D_SOURCE = """\
theory robot1d
fluent h : real            # distance to the wall
init h ~ uniform(2.0, 12.0)
action fwd(x: real) {
  noisy y ~ gaussian(mean = x, stddev = 1.0)
  poss   true
  effect h := h - y
}
action sonar() senses z {
  poss       h >= 0
  likelihood gaussian(mean = h, stddev = 1.0)
}
"""
