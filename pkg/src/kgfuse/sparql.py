"""A small SPARQL evaluator: BGP joins, year() binds, COUNT/GROUP BY, ORDER BY.

Supported surface: SELECT (`*`, variables, `(count(?v) as ?alias)`), a WHERE
block of dot-separated triple patterns, `bind (year(?v) as ?x)` after the
patterns, GROUP BY, ORDER BY asc()/desc(), LIMIT, and PREFIX declarations.
Everything else raises `UnsupportedFeatureError` naming the construct.

Evaluation uses bag semantics before grouping and left-to-right pattern
joins, probing the graph through its indexes.  Ordering falls back to the
canonical serialization of the whole row, so output is byte-deterministic.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from decimal import Decimal
from functools import cmp_to_key
from typing import Iterable, Mapping, Optional, Union

from .prefixes import RDF_TYPE, XSD_BOOLEAN, XSD_DECIMAL, XSD_INTEGER
from .rdf import BLANK, IRI, LITERAL, Graph, Term, iri, literal, ntriples_term
from .rdf import _unescape as _unescape_string


class SparqlError(ValueError):
    """Base class for query parse and template errors."""


class SparqlSyntaxError(SparqlError):
    def __init__(self, message: str, line: int = 0, column: int = 0, token: str = ""):
        self.line = line
        self.column = column
        self.token = token
        where = f" at {line}:{column}" if line else ""
        tok = f" (near {token!r})" if token else ""
        super().__init__(f"{message}{where}{tok}")


class UnsupportedFeatureError(SparqlSyntaxError):
    def __init__(self, feature: str, line: int = 0, column: int = 0):
        self.feature = feature
        super().__init__(f"unsupported SPARQL feature: {feature}", line, column)


class TemplateError(SparqlError):
    pass


@dataclass(frozen=True)
class Var:
    name: str

    def __repr__(self):
        return f"?{self.name}"


@dataclass(frozen=True)
class CountAgg:
    """`(count(?var) as ?alias)` in the projection."""

    var: str
    alias: str


@dataclass(frozen=True)
class TriplePattern:
    s: Union[Term, Var]
    p: Union[Term, Var]
    o: Union[Term, Var]

    def variables(self) -> list[str]:
        return [x.name for x in (self.s, self.p, self.o) if isinstance(x, Var)]


@dataclass(frozen=True)
class YearBind:
    """`bind (year(?source) as ?target)`."""

    source: str
    target: str


@dataclass(frozen=True)
class OrderKey:
    var: str
    ascending: bool = True


@dataclass
class QueryAST:
    projection: list[Union[Var, CountAgg]]
    patterns: list[TriplePattern]
    binds: list[YearBind] = field(default_factory=list)
    group_by: list[str] = field(default_factory=list)
    order_by: list[OrderKey] = field(default_factory=list)
    limit: Optional[int] = None

    @property
    def header(self) -> list[str]:
        return [p.alias if isinstance(p, CountAgg) else p.name for p in self.projection]


@dataclass
class ResultTable:
    header: list[str]
    rows: list[tuple[Optional[Term], ...]]

    def to_csv(self) -> str:
        """RFC 4180 output; IRIs and literal lexical forms are written bare."""
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(self.header)
        for row in self.rows:
            writer.writerow(["" if t is None else _csv_cell(t) for t in row])
        return buf.getvalue()

    def to_text(self) -> str:
        """Aligned text table with unambiguous term rendering."""
        cells = [["?" + h for h in self.header]] + [
            ["" if t is None else ntriples_term(t) for t in row] for row in self.rows
        ]
        widths = [max(len(r[i]) for r in cells) for i in range(len(self.header))]
        lines = []
        for idx, row in enumerate(cells):
            lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
            if idx == 0:
                lines.append("  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"


def _csv_cell(term: Term) -> str:
    if term.kind == BLANK:
        return "_:" + term.value
    return term.value


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_UNSUPPORTED = {
    "optional", "filter", "union", "minus", "graph", "service", "values",
    "having", "distinct", "reduced", "construct", "ask", "describe",
    "insert", "delete", "offset", "exists", "not",
}

_SUPPORTED_KEYWORDS = {
    "select", "where", "prefix", "bind", "as", "count", "year", "group",
    "by", "order", "asc", "desc", "limit", "a", "true", "false",
}

_Q_TOKEN_SPEC = [
    ("WS", re.compile(r"[ \t\r\n]+")),
    ("COMMENT", re.compile(r"#[^\n]*")),
    ("IRIREF", re.compile(r"<([^<>\"{}|^`\\\x00-\x20]*)>")),
    ("VAR", re.compile(r"\?([A-Za-z_][A-Za-z0-9_]*)")),
    ("STRING", re.compile(r'"((?:[^"\\\n\r]|\\.)*)"')),
    ("DTYPE_SEP", re.compile(r"\^\^")),
    ("LANGTAG", re.compile(r"@[A-Za-z]+(?:-[A-Za-z0-9]+)*")),
    ("DECIMAL", re.compile(r"[+-]?\d+\.\d+")),
    ("INTEGER", re.compile(r"[+-]?\d+")),
    ("PNAME", re.compile(r"(?:[A-Za-z][A-Za-z0-9_\-]*)?:(?:[A-Za-z0-9_](?:[A-Za-z0-9_\-.]*[A-Za-z0-9_\-])?)?")),
    ("KEYWORD", re.compile(r"[A-Za-z][A-Za-z0-9_]*")),
    ("LBRACE", re.compile(r"\{")),
    ("RBRACE", re.compile(r"\}")),
    ("LPAREN", re.compile(r"\(")),
    ("RPAREN", re.compile(r"\)")),
    ("STAR", re.compile(r"\*")),
    ("DOT", re.compile(r"\.")),
    ("SEMI", re.compile(r";")),
    ("COMMA", re.compile(r",")),
]


@dataclass
class _Tok:
    type: str
    value: str
    line: int
    column: int

    @property
    def keyword(self) -> str:
        return self.value.lower() if self.type == "KEYWORD" else ""


def _q_tokenize(text: str) -> list[_Tok]:
    tokens: list[_Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        for name, pattern in _Q_TOKEN_SPEC:
            m = pattern.match(text, pos)
            if not m:
                continue
            value = m.group(0)
            if name not in ("WS", "COMMENT"):
                tokens.append(_Tok(name, value, line, pos - line_start + 1))
            if "\n" in value:
                line += value.count("\n")
                line_start = pos + value.rindex("\n") + 1
            pos = m.end()
            break
        else:
            # defer the error so the parser can name an unsupported keyword
            # appearing before a character we do not lex (e.g. FILTER's '>')
            tokens.append(
                _Tok("UNKNOWN", text[pos : pos + 10], line, pos - line_start + 1)
            )
            pos += 1
    tokens.append(_Tok("EOF", "", line, pos - line_start + 1))
    return tokens


class _QueryParser:
    def __init__(self, text: str, prefixes: Mapping[str, str] | None):
        self.tokens = _q_tokenize(text)
        self.pos = 0
        self.prefixes = dict(prefixes or {})

    def _peek(self) -> _Tok:
        return self.tokens[self.pos]

    def _next(self) -> _Tok:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def _fail(self, message: str, tok: _Tok):
        raise SparqlSyntaxError(message, tok.line, tok.column, tok.value)

    def _check_supported(self, tok: _Tok):
        if tok.type == "KEYWORD":
            kw = tok.keyword
            if kw in _UNSUPPORTED:
                raise UnsupportedFeatureError(kw.upper(), tok.line, tok.column)

    def _expect_keyword(self, word: str) -> _Tok:
        tok = self._next()
        self._check_supported(tok)
        if tok.keyword != word:
            self._fail(f"expected {word.upper()}", tok)
        return tok

    def parse(self) -> QueryAST:
        self._prologue()
        self._expect_keyword("select")
        projection, select_all = self._projection()
        self._expect_keyword("where")
        tok = self._next()
        if tok.type != "LBRACE":
            self._fail("expected '{'", tok)
        patterns, binds = self._group_block()
        group_by = self._group_by_clause()
        order_by = self._order_by_clause()
        limit = self._limit_clause()
        tok = self._next()
        if tok.type != "EOF":
            self._check_supported(tok)
            self._fail("unexpected trailing input", tok)
        if select_all:
            projection = self._expand_star(patterns, binds)
        return _validated(QueryAST(projection, patterns, binds, group_by, order_by, limit))

    def _prologue(self):
        while self._peek().keyword == "prefix":
            self._next()
            pname = self._next()
            if pname.type != "PNAME" or not pname.value.endswith(":"):
                self._fail("expected prefix name ending in ':'", pname)
            iriref = self._next()
            if iriref.type != "IRIREF":
                self._fail("expected namespace IRI", iriref)
            self.prefixes[pname.value[:-1]] = iriref.value[1:-1]

    def _projection(self) -> tuple[list[Union[Var, CountAgg]], bool]:
        items: list[Union[Var, CountAgg]] = []
        if self._peek().type == "STAR":
            self._next()
            return items, True
        while True:
            tok = self._peek()
            if tok.type == "VAR":
                self._next()
                items.append(Var(tok.value[1:]))
            elif tok.type == "LPAREN":
                self._next()
                items.append(self._aggregate())
            else:
                break
        if not items:
            self._fail("empty SELECT projection", self._peek())
        return items, False

    def _aggregate(self) -> CountAgg:
        tok = self._next()
        self._check_supported(tok)
        if tok.keyword != "count":
            self._fail("only count() aggregates are supported", tok)
        lp = self._next()
        if lp.type != "LPAREN":
            self._fail("expected '(' after count", lp)
        var = self._next()
        if var.type != "VAR":
            self._fail("count() takes a variable", var)
        rp = self._next()
        if rp.type != "RPAREN":
            self._fail("expected ')'", rp)
        self._expect_keyword("as")
        alias = self._next()
        if alias.type != "VAR":
            self._fail("expected alias variable", alias)
        rp = self._next()
        if rp.type != "RPAREN":
            self._fail("expected ')' closing the aggregate", rp)
        return CountAgg(var.value[1:], alias.value[1:])

    def _group_block(self) -> tuple[list[TriplePattern], list[YearBind]]:
        patterns: list[TriplePattern] = []
        binds: list[YearBind] = []
        seen: set[str] = set()
        while True:
            tok = self._peek()
            if tok.type == "RBRACE":
                self._next()
                break
            if tok.type == "EOF":
                self._fail("unterminated WHERE block", tok)
            self._check_supported(tok)
            if tok.keyword == "bind":
                self._next()
                bind = self._bind(seen)
                binds.append(bind)
                seen.add(bind.target)
            else:
                if binds:
                    raise UnsupportedFeatureError(
                        "triple pattern after BIND", tok.line, tok.column
                    )
                pattern = self._triple_pattern()
                patterns.append(pattern)
                seen.update(pattern.variables())
            if self._peek().type == "DOT":
                self._next()
        if not patterns:
            self._fail("empty basic graph pattern", self._peek())
        return patterns, binds

    def _bind(self, seen: set[str]) -> YearBind:
        lp = self._next()
        if lp.type != "LPAREN":
            self._fail("expected '(' after BIND", lp)
        fn = self._next()
        self._check_supported(fn)
        if fn.keyword != "year":
            self._fail("only year() is supported in BIND", fn)
        lp2 = self._next()
        if lp2.type != "LPAREN":
            self._fail("expected '(' after year", lp2)
        src = self._next()
        if src.type != "VAR":
            self._fail("year() takes a variable", src)
        rp = self._next()
        if rp.type != "RPAREN":
            self._fail("expected ')'", rp)
        self._expect_keyword("as")
        target = self._next()
        if target.type != "VAR":
            self._fail("expected target variable", target)
        rp2 = self._next()
        if rp2.type != "RPAREN":
            self._fail("expected ')' closing BIND", rp2)
        name = target.value[1:]
        if name in seen:
            self._fail(f"BIND target ?{name} is already bound", target)
        return YearBind(src.value[1:], name)

    def _pname_to_iri(self, tok: _Tok) -> str:
        prefix, _, local = tok.value.partition(":")
        if prefix not in self.prefixes:
            self._fail(f"undeclared prefix {prefix!r}", tok)
        return self.prefixes[prefix] + local

    def _pattern_term(self, position: str) -> Union[Term, Var]:
        tok = self._next()
        self._check_supported(tok)
        if tok.type == "VAR":
            return Var(tok.value[1:])
        if tok.type == "IRIREF":
            return iri(tok.value[1:-1])
        if tok.type == "PNAME":
            return iri(self._pname_to_iri(tok))
        if tok.keyword == "a" and position == "predicate":
            return iri(RDF_TYPE)
        if position == "object":
            if tok.type == "STRING":
                lexical = _unescape_string(tok.value[1:-1], tok.line, tok.column)
                nxt = self._peek()
                if nxt.type == "LANGTAG":
                    self._next()
                    return literal(lexical, language=nxt.value[1:])
                if nxt.type == "DTYPE_SEP":
                    self._next()
                    dt = self._next()
                    if dt.type == "IRIREF":
                        return literal(lexical, datatype=dt.value[1:-1])
                    if dt.type == "PNAME":
                        return literal(lexical, datatype=self._pname_to_iri(dt))
                    self._fail("expected datatype IRI", dt)
                return literal(lexical)
            if tok.type == "INTEGER":
                return literal(tok.value, datatype=XSD_INTEGER)
            if tok.type == "DECIMAL":
                return literal(tok.value, datatype=XSD_DECIMAL)
            if tok.keyword in ("true", "false"):
                return literal(tok.keyword, datatype=XSD_BOOLEAN)
        self._fail(f"expected {position} term", tok)

    def _triple_pattern(self) -> TriplePattern:
        s = self._pattern_term("subject")
        p = self._pattern_term("predicate")
        o = self._pattern_term("object")
        if isinstance(p, Term) and p.kind != IRI:
            raise SparqlSyntaxError("pattern predicate must be an IRI or variable")
        return TriplePattern(s, p, o)

    def _group_by_clause(self) -> list[str]:
        if self._peek().keyword != "group":
            return []
        self._next()
        self._expect_keyword("by")
        names = []
        while self._peek().type == "VAR":
            names.append(self._next().value[1:])
        if not names:
            self._fail("GROUP BY needs at least one variable", self._peek())
        return names

    def _order_by_clause(self) -> list[OrderKey]:
        if self._peek().keyword != "order":
            return []
        self._next()
        self._expect_keyword("by")
        keys: list[OrderKey] = []
        while True:
            tok = self._peek()
            if tok.keyword in ("asc", "desc"):
                self._next()
                ascending = tok.keyword == "asc"
                lp = self._next()
                if lp.type != "LPAREN":
                    self._fail("expected '('", lp)
                var = self._next()
                if var.type != "VAR":
                    self._fail("expected variable", var)
                rp = self._next()
                if rp.type != "RPAREN":
                    self._fail("expected ')'", rp)
                keys.append(OrderKey(var.value[1:], ascending))
            elif tok.type == "VAR":
                self._next()
                keys.append(OrderKey(tok.value[1:], True))
            else:
                break
        if not keys:
            self._fail("ORDER BY needs at least one key", self._peek())
        return keys

    def _limit_clause(self) -> Optional[int]:
        if self._peek().keyword != "limit":
            return None
        self._next()
        tok = self._next()
        if tok.type != "INTEGER" or int(tok.value) < 0:
            self._fail("LIMIT takes a non-negative integer", tok)
        return int(tok.value)

    @staticmethod
    def _expand_star(patterns: list[TriplePattern], binds: list[YearBind]) -> list[Var]:
        names: list[str] = []
        for pattern in patterns:
            for name in pattern.variables():
                if name not in names:
                    names.append(name)
        for bind in binds:
            if bind.target not in names:
                names.append(bind.target)
        return [Var(n) for n in names]


def _validated(ast: QueryAST) -> QueryAST:
    pattern_vars = {v for p in ast.patterns for v in p.variables()}
    bound = pattern_vars | {b.target for b in ast.binds}
    has_aggregate = any(isinstance(p, CountAgg) for p in ast.projection)
    plain = [p.name for p in ast.projection if isinstance(p, Var)]
    if ast.group_by or has_aggregate:
        grouped = set(ast.group_by)
        for name in plain:
            if name not in grouped:
                raise SparqlSyntaxError(
                    f"projected variable ?{name} must appear in GROUP BY"
                )
        for name in ast.group_by:
            if name not in bound:
                raise SparqlSyntaxError(f"GROUP BY variable ?{name} is never bound")
    visible = set(plain) | {p.alias for p in ast.projection if isinstance(p, CountAgg)}
    visible |= set(ast.group_by)
    for key in ast.order_by:
        if key.var not in visible:
            raise SparqlSyntaxError(
                f"ORDER BY variable ?{key.var} is neither projected nor grouped"
            )
    for bind in ast.binds:
        if bind.source not in pattern_vars:
            raise SparqlSyntaxError(f"year() argument ?{bind.source} is never bound")
    return ast


def parse_query(text: str, prefixes: Mapping[str, str] | None = None) -> QueryAST:
    """Parse the supported SPARQL subset into a QueryAST.

    `prefixes` supplies ambient namespace bindings for queries that omit
    their PREFIX declarations; declarations inside the text win.
    """
    return _QueryParser(text, prefixes).parse()


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

_YEAR_RE = re.compile(r"(\d{4})(?:$|[-T])")
_NUMERIC_RE = re.compile(r"^[+-]?\d+(?:\.\d+)?$")


def extract_year(term: Optional[Term]) -> Optional[int]:
    """Leading 4-digit year of a date-like literal, else None."""
    if term is None or term.kind != LITERAL:
        return None
    m = _YEAR_RE.match(term.value)
    return int(m.group(1)) if m else None


def term_sort_cmp(a: Optional[Term], b: Optional[Term]) -> int:
    """Total order: unbound < blank < IRI < literal; numeric literals by value."""
    if a is None or b is None:
        if a is b:
            return 0
        return -1 if a is None else 1
    ka = _term_sort_key(a)
    kb = _term_sort_key(b)
    return -1 if ka < kb else (1 if ka > kb else 0)


_KIND_RANK = {BLANK: 0, IRI: 1, LITERAL: 2}


def _term_sort_key(t: Term):
    if t.kind == LITERAL:
        if _NUMERIC_RE.match(t.value):
            num_rank, num = 0, Decimal(t.value)
        else:
            num_rank, num = 1, Decimal(0)
        return (_KIND_RANK[t.kind], num_rank, num, t.value, t.language or "", t.datatype or "")
    return (_KIND_RANK[t.kind], 0, Decimal(0), t.value, "", "")


def _resolve(pos: Union[Term, Var], mu: dict[str, Term]) -> Optional[Term]:
    if isinstance(pos, Var):
        return mu.get(pos.name)
    return pos


def _join_pattern(g: Graph, pattern: TriplePattern, mu: dict[str, Term]) -> list[dict[str, Term]]:
    s = _resolve(pattern.s, mu)
    p = _resolve(pattern.p, mu)
    o = _resolve(pattern.o, mu)
    out = []
    for t in g.match(s, p, o):
        ext = dict(mu)
        ok = True
        for pos, term in ((pattern.s, t.s), (pattern.p, t.p), (pattern.o, t.o)):
            if isinstance(pos, Var):
                if pos.name in ext and ext[pos.name] != term:
                    ok = False
                    break
                ext[pos.name] = term
        if ok:
            out.append(ext)
    return out


def _solutions(q: QueryAST, g: Graph) -> list[dict[str, Term]]:
    solutions: list[dict[str, Term]] = [{}]
    for pattern in q.patterns:
        nxt: list[dict[str, Term]] = []
        for mu in solutions:
            nxt.extend(_join_pattern(g, pattern, mu))
        solutions = nxt
        if not solutions:
            return []
    for bind in q.binds:
        kept = []
        for mu in solutions:
            year = extract_year(mu.get(bind.source))
            if year is None:
                continue  # ragged date: the row is dropped, not the query
            mu = dict(mu)
            mu[bind.target] = literal(str(year), datatype=XSD_INTEGER)
            kept.append(mu)
        solutions = kept
    return solutions


def evaluate(q: QueryAST, graphs: Union[Graph, Iterable[Graph]]) -> ResultTable:
    """Evaluate a query over one graph or the set union of several."""
    if isinstance(graphs, Graph):
        g = graphs
    else:
        graph_list = list(graphs)
        if not graph_list:
            g = Graph()
        elif len(graph_list) == 1:
            g = graph_list[0]
        else:
            g = Graph.union(graph_list)
    solutions = _solutions(q, g)
    has_aggregate = any(isinstance(p, CountAgg) for p in q.projection)
    records: list[tuple[tuple[Optional[Term], ...], dict[str, Term]]] = []
    if q.group_by or has_aggregate:
        groups: dict[tuple, list[dict[str, Term]]] = {}
        for mu in solutions:
            key = tuple(mu.get(v) for v in q.group_by)
            groups.setdefault(key, []).append(mu)
        for key, members in groups.items():
            env = dict(zip(q.group_by, key))
            row = []
            for p in q.projection:
                if isinstance(p, CountAgg):
                    count = sum(1 for mu in members if mu.get(p.var) is not None)
                    row.append(literal(str(count), datatype=XSD_INTEGER))
                else:
                    row.append(env.get(p.name))
            records.append((tuple(row), {k: v for k, v in env.items() if v is not None}))
    else:
        for mu in solutions:
            row = tuple(mu.get(p.name) for p in q.projection)
            records.append((row, mu))

    def compare(a, b):
        for key in q.order_by:
            va = a[1].get(key.var)
            vb = b[1].get(key.var)
            c = term_sort_cmp(va, vb)
            if c:
                return c if key.ascending else -c
        ta = tuple("" if t is None else ntriples_term(t) for t in a[0])
        tb = tuple("" if t is None else ntriples_term(t) for t in b[0])
        return -1 if ta < tb else (1 if ta > tb else 0)

    # order-by env for plain rows must expose projected columns too
    header = q.header
    enriched = []
    for row, env in records:
        env = dict(env)
        for name, cell in zip(header, row):
            if cell is not None:
                env.setdefault(name, cell)
        enriched.append((row, env))
    enriched.sort(key=cmp_to_key(compare))
    rows = [row for row, _ in enriched]
    if q.limit is not None:
        rows = rows[: q.limit]
    return ResultTable(header, rows)


# ---------------------------------------------------------------------------
# Templates
# ---------------------------------------------------------------------------

_PLACEHOLDER_RE = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")
_IRI_ILLEGAL = set(' <>"{}|^`\\')


@dataclass(frozen=True)
class QueryTemplate:
    """SPARQL text with `{name}` placeholders."""

    text: str
    placeholders: frozenset[str]

    @classmethod
    def from_text(cls, text: str) -> "QueryTemplate":
        return cls(text, frozenset(_PLACEHOLDER_RE.findall(text)))

    def __post_init__(self):
        found = frozenset(_PLACEHOLDER_RE.findall(self.text))
        if found != self.placeholders:
            raise TemplateError(
                f"declared placeholders {sorted(self.placeholders)} do not match "
                f"text placeholders {sorted(found)}"
            )


def _escape_for_literal(value: str) -> str:
    out = value.replace("\\", "\\\\").replace('"', '\\"')
    return out.replace("\n", "\\n").replace("\r", "\\r").replace("\t", "\\t")


def instantiate(template: QueryTemplate, bindings: Mapping[str, str]) -> str:
    """Fill placeholders, escaping each occurrence for its context.

    A placeholder directly wrapped in double quotes is escaped as a literal;
    one wrapped in angle brackets must stay a legal IRI; anywhere else the
    value must be free of whitespace and delimiter characters.
    """
    missing = template.placeholders - set(bindings)
    if missing:
        raise TemplateError(f"missing placeholder value(s): {', '.join(sorted(missing))}")
    unused = set(bindings) - template.placeholders
    if unused:
        raise TemplateError(f"unused binding(s): {', '.join(sorted(unused))}")
    out = []
    last = 0
    text = template.text
    for m in _PLACEHOLDER_RE.finditer(text):
        out.append(text[last : m.start()])
        value = bindings[m.group(1)]
        before = text[m.start() - 1] if m.start() > 0 else ""
        after = text[m.end()] if m.end() < len(text) else ""
        if before == '"' and after == '"':
            out.append(_escape_for_literal(value))
        elif before == "<" and after == ">":
            bad = sorted({c for c in value if c in _IRI_ILLEGAL or ord(c) < 0x21})
            if bad:
                raise TemplateError(
                    f"value for {{{m.group(1)}}} is illegal in IRI context: {bad}"
                )
            out.append(value)
        else:
            bad = sorted({c for c in value if c in '<>"{}' or c.isspace()})
            if bad:
                raise TemplateError(
                    f"value for {{{m.group(1)}}} is illegal outside quotes: {bad}"
                )
            out.append(value)
        last = m.end()
    out.append(text[last:])
    return "".join(out)
