"""RDF data model, Turtle parsing, canonical N-Triples output, pattern matching.

The graph keeps three nested-dict indexes (SPO, POS, OSP) so every
single-bound pattern is answered without a full scan.  Everything here is
deliberately syntactic: literals compare by exact lexical form, which keeps
diffs and version changesets reversible.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Optional
from urllib.parse import urljoin

from .prefixes import RDF_LANGSTRING, XSD_BOOLEAN, XSD_DECIMAL, XSD_INTEGER, XSD_STRING

IRI = "iri"
BLANK = "blank"
LITERAL = "literal"

_SCHEME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:")


class RdfError(ValueError):
    """Base class for model and parser errors."""


class TurtleSyntaxError(RdfError):
    def __init__(self, message: str, line: int, column: int, token: str = ""):
        self.line = line
        self.column = column
        self.token = token
        where = f" at {line}:{column}"
        tok = f" (near {token!r})" if token else ""
        super().__init__(f"{message}{where}{tok}")


class RelativeIriError(RdfError):
    def __init__(self, iri: str, line: int = 0, column: int = 0):
        self.iri = iri
        super().__init__(f"relative IRI {iri!r} and no base was given")


@dataclass(frozen=True)
class Term:
    """An RDF term: IRI, blank node, or literal.

    `value` holds the IRI, the blank-node label, or the literal lexical
    form depending on `kind`.  Language tags are lower-cased on
    construction so equality and hashing are case-insensitive, and
    `^^xsd:string` collapses to the plain literal form.
    """

    kind: str
    value: str
    language: Optional[str] = None
    datatype: Optional[str] = None

    def __post_init__(self):
        if self.kind == IRI:
            if not _SCHEME_RE.match(self.value):
                raise RdfError(f"IRI is not absolute: {self.value!r}")
            if self.language or self.datatype:
                raise RdfError("IRI term cannot carry language or datatype")
        elif self.kind == BLANK:
            if not self.value:
                raise RdfError("blank node label must be non-empty")
            if self.language or self.datatype:
                raise RdfError("blank term cannot carry language or datatype")
        elif self.kind == LITERAL:
            language = self.language
            datatype = self.datatype
            if language:
                object.__setattr__(self, "language", language.lower())
                if datatype == RDF_LANGSTRING:
                    object.__setattr__(self, "datatype", None)
                elif datatype is not None:
                    raise RdfError("literal cannot have both language and datatype")
            else:
                if datatype == RDF_LANGSTRING:
                    raise RdfError("rdf:langString literal requires a language tag")
                if datatype == XSD_STRING:
                    object.__setattr__(self, "datatype", None)
        else:
            raise RdfError(f"unknown term kind: {self.kind!r}")

    @property
    def is_iri(self) -> bool:
        return self.kind == IRI

    @property
    def is_blank(self) -> bool:
        return self.kind == BLANK

    @property
    def is_literal(self) -> bool:
        return self.kind == LITERAL

    def __repr__(self):
        return f"Term({ntriples_term(self)})"


def iri(value: str) -> Term:
    return Term(IRI, value)


def blank(label: str) -> Term:
    return Term(BLANK, label)


def literal(lexical: str, language: str | None = None, datatype: str | None = None) -> Term:
    return Term(LITERAL, lexical, language, datatype)


@dataclass(frozen=True)
class Triple:
    s: Term
    p: Term
    o: Term

    def __post_init__(self):
        if self.s.kind not in (IRI, BLANK):
            raise RdfError(f"triple subject must be IRI or blank, got {self.s!r}")
        if self.p.kind != IRI:
            raise RdfError(f"triple predicate must be IRI, got {self.p!r}")

    def __repr__(self):
        return f"Triple({ntriples_line(self)!r})"


_LITERAL_ESCAPES = {
    "\\": "\\\\",
    '"': '\\"',
    "\n": "\\n",
    "\r": "\\r",
    "\t": "\\t",
}


def _escape_literal(text: str) -> str:
    out = []
    for ch in text:
        if ch in _LITERAL_ESCAPES:
            out.append(_LITERAL_ESCAPES[ch])
        elif ord(ch) < 0x20:
            out.append("\\u%04X" % ord(ch))
        else:
            out.append(ch)
    return "".join(out)


def ntriples_term(term: Term) -> str:
    if term.kind == IRI:
        return f"<{term.value}>"
    if term.kind == BLANK:
        return f"_:{term.value}"
    body = f'"{_escape_literal(term.value)}"'
    if term.language:
        return f"{body}@{term.language}"
    if term.datatype:
        return f"{body}^^<{term.datatype}>"
    return body


@lru_cache(maxsize=None)
def ntriples_line(triple: Triple) -> str:
    return f"{ntriples_term(triple.s)} {ntriples_term(triple.p)} {ntriples_term(triple.o)} ."


class Graph:
    """A named set of triples with SPO/POS/OSP indexes and a prefix map.

    Mutation is not synchronized: build a graph in one place, then share it
    read-only; parsing and serialization are pure functions.
    """

    def __init__(self, name: str | None = None, triples: Iterable[Triple] = ()):
        if name is not None and not _SCHEME_RE.match(name):
            raise RdfError(f"graph name must be an absolute IRI: {name!r}")
        self.name = name
        self.prefixes: dict[str, str] = {}
        self._triples: set[Triple] = set()
        self._spo: dict[Term, dict[Term, set[Term]]] = {}
        self._pos: dict[Term, dict[Term, set[Term]]] = {}
        self._osp: dict[Term, dict[Term, set[Term]]] = {}
        self._sorted: list[Triple] | None = None
        for t in triples:
            self.add(t)

    def bind(self, prefix: str, namespace: str) -> None:
        self.prefixes[prefix] = namespace

    def add(self, triple: Triple) -> bool:
        """Insert a triple; returns False if it was already present."""
        if triple in self._triples:
            return False
        self._triples.add(triple)
        self._spo.setdefault(triple.s, {}).setdefault(triple.p, set()).add(triple.o)
        self._pos.setdefault(triple.p, {}).setdefault(triple.o, set()).add(triple.s)
        self._osp.setdefault(triple.o, {}).setdefault(triple.s, set()).add(triple.p)
        self._sorted = None
        return True

    def add_all(self, triples: Iterable[Triple]) -> int:
        return sum(1 for t in triples if self.add(t))

    def __len__(self) -> int:
        return len(self._triples)

    def __contains__(self, triple: Triple) -> bool:
        return triple in self._triples

    def __iter__(self) -> Iterator[Triple]:
        if self._sorted is None:
            self._sorted = sorted(self._triples, key=ntriples_line)
        return iter(self._sorted)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self._triples == other._triples

    __hash__ = None  # mutable

    @property
    def triples(self) -> frozenset[Triple]:
        return frozenset(self._triples)

    def match(
        self,
        s: Term | None = None,
        p: Term | None = None,
        o: Term | None = None,
    ) -> list[Triple]:
        """All triples agreeing with the bound positions, in canonical order."""
        found: Iterable[Triple]
        if s is not None and p is not None and o is not None:
            if s.kind == LITERAL or p.kind != IRI:
                return []
            t = Triple(s, p, o)
            found = [t] if t in self._triples else []
        elif s is not None and p is not None:
            found = [Triple(s, p, o2) for o2 in self._spo.get(s, {}).get(p, ())]
        elif p is not None and o is not None:
            found = [Triple(s2, p, o) for s2 in self._pos.get(p, {}).get(o, ())]
        elif s is not None and o is not None:
            found = [Triple(s, p2, o) for p2 in self._osp.get(o, {}).get(s, ())]
        elif s is not None:
            found = [
                Triple(s, p2, o2)
                for p2, objs in self._spo.get(s, {}).items()
                for o2 in objs
            ]
        elif p is not None:
            found = [
                Triple(s2, p, o2)
                for o2, subjs in self._pos.get(p, {}).items()
                for s2 in subjs
            ]
        elif o is not None:
            found = [
                Triple(s2, p2, o)
                for s2, preds in self._osp.get(o, {}).items()
                for p2 in preds
            ]
        else:
            found = self._triples
        return sorted(found, key=ntriples_line)

    def subjects(self, p: Term | None = None, o: Term | None = None) -> list[Term]:
        seen = sorted({t.s for t in self.match(None, p, o)}, key=ntriples_term)
        return seen

    def objects(self, s: Term | None = None, p: Term | None = None) -> list[Term]:
        return sorted({t.o for t in self.match(s, p, None)}, key=ntriples_term)

    def value(self, s: Term, p: Term) -> Term | None:
        hits = self.match(s, p, None)
        return hits[0].o if hits else None

    def copy(self, name: str | None = None) -> "Graph":
        g = Graph(name if name is not None else self.name, self._triples)
        g.prefixes.update(self.prefixes)
        return g

    @staticmethod
    def union(graphs: Iterable["Graph"], name: str | None = None) -> "Graph":
        out = Graph(name)
        for g in graphs:
            out.prefixes.update(g.prefixes)
            out.add_all(g.triples)
        return out


# ---------------------------------------------------------------------------
# Canonical serialization
# ---------------------------------------------------------------------------

def _blank_signature(label: str, outgoing: dict[str, list[Triple]]) -> tuple:
    sig = []
    for t in outgoing.get(label, ()):
        obj = "_:_" if t.o.kind == BLANK else ntriples_term(t.o)
        sig.append((ntriples_term(t.p), obj))
    return tuple(sorted(sig))


def _canonical_blank_map(triples: Iterable[Triple]) -> dict[str, str]:
    labels: set[str] = set()
    outgoing: dict[str, list[Triple]] = {}
    for t in triples:
        if t.s.kind == BLANK:
            labels.add(t.s.value)
            outgoing.setdefault(t.s.value, []).append(t)
        if t.o.kind == BLANK:
            labels.add(t.o.value)
    if not labels:
        return {}
    # Signature first; the original label breaks ties, which keeps the
    # relabeling a pure function of the triple set.
    order = sorted(labels, key=lambda b: (_blank_signature(b, outgoing), b))
    return {old: f"b{i}" for i, old in enumerate(order)}


def _relabel(term: Term, mapping: dict[str, str]) -> Term:
    if term.kind == BLANK and term.value in mapping:
        return Term(BLANK, mapping[term.value])
    return term


def serialize_canonical(g: Graph) -> str:
    """Canonical N-Triples: blank nodes relabeled, lines sorted by byte order."""
    mapping = _canonical_blank_map(g.triples)
    lines = []
    for t in g.triples:
        if mapping:
            t = Triple(_relabel(t.s, mapping), t.p, _relabel(t.o, mapping))
        lines.append(ntriples_line(t))
    if not lines:
        return ""
    lines.sort(key=lambda line: line.encode("utf-8"))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Turtle subset parser
# ---------------------------------------------------------------------------

_TOKEN_SPEC = [
    ("WS", re.compile(r"[ \t\r\n]+")),
    ("COMMENT", re.compile(r"#[^\n]*")),
    ("PREFIX_DIR", re.compile(r"@prefix\b")),
    ("BASE_DIR", re.compile(r"@base\b")),
    ("IRIREF", re.compile(r"<([^<>\"{}|^`\\\x00-\x20]*)>")),
    ("BLANK", re.compile(r"_:([A-Za-z0-9][A-Za-z0-9_\-.]*)")),
    ("STRING", re.compile(r'"((?:[^"\\\n\r]|\\.)*)"')),
    ("DTYPE_SEP", re.compile(r"\^\^")),
    ("LANGTAG", re.compile(r"@[A-Za-z]+(?:-[A-Za-z0-9]+)*")),
    ("DECIMAL", re.compile(r"[+-]?\d+\.\d+")),
    ("INTEGER", re.compile(r"[+-]?\d+")),
    # Prefixed name; the local part may contain dots but not end in one.
    ("PNAME", re.compile(r"(?:[A-Za-z][A-Za-z0-9_\-]*)?:(?:[A-Za-z0-9_](?:[A-Za-z0-9_\-.]*[A-Za-z0-9_\-])?)?")),
    ("KEYWORD", re.compile(r"[A-Za-z]+")),
    ("SEMI", re.compile(r";")),
    ("COMMA", re.compile(r",")),
    ("DOT", re.compile(r"\.")),
]

_STRING_ESCAPES = {
    "t": "\t",
    "b": "\b",
    "n": "\n",
    "r": "\r",
    "f": "\f",
    '"': '"',
    "'": "'",
    "\\": "\\",
}


@dataclass
class _Token:
    type: str
    value: str
    line: int
    column: int


def _unescape(raw: str, line: int, column: int) -> str:
    out = []
    i = 0
    while i < len(raw):
        ch = raw[i]
        if ch != "\\":
            out.append(ch)
            i += 1
            continue
        if i + 1 >= len(raw):
            raise TurtleSyntaxError("dangling escape in string", line, column, raw)
        esc = raw[i + 1]
        if esc in _STRING_ESCAPES:
            out.append(_STRING_ESCAPES[esc])
            i += 2
        elif esc == "u":
            out.append(chr(int(raw[i + 2 : i + 6], 16)))
            i += 6
        elif esc == "U":
            out.append(chr(int(raw[i + 2 : i + 10], 16)))
            i += 10
        else:
            raise TurtleSyntaxError(f"unsupported escape \\{esc}", line, column, raw)
    return "".join(out)


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    line = 1
    line_start = 0
    n = len(text)
    while pos < n:
        for name, pattern in _TOKEN_SPEC:
            m = pattern.match(text, pos)
            if not m:
                continue
            value = m.group(0)
            if name not in ("WS", "COMMENT"):
                tokens.append(_Token(name, value, line, pos - line_start + 1))
            newlines = value.count("\n")
            if newlines:
                line += newlines
                line_start = pos + value.rindex("\n") + 1
            pos = m.end()
            break
        else:
            raise TurtleSyntaxError(
                "unexpected character", line, pos - line_start + 1, text[pos : pos + 10]
            )
    tokens.append(_Token("EOF", "", line, pos - line_start + 1))
    return tokens


class _TurtleParser:
    def __init__(self, text: str, base: str | None):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.base = base
        self.graph = Graph()

    def _peek(self) -> _Token:
        return self.tokens[self.pos]

    def _next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def _expect(self, type_: str) -> _Token:
        tok = self._next()
        if tok.type != type_:
            raise TurtleSyntaxError(f"expected {type_}", tok.line, tok.column, tok.value)
        return tok

    def _fail(self, message: str, tok: _Token):
        raise TurtleSyntaxError(message, tok.line, tok.column, tok.value)

    def parse(self) -> Graph:
        while self._peek().type != "EOF":
            tok = self._peek()
            if tok.type == "PREFIX_DIR":
                self._prefix_directive()
            elif tok.type == "BASE_DIR":
                self._base_directive()
            else:
                self._triples_block()
        return self.graph

    def _prefix_directive(self):
        self._expect("PREFIX_DIR")
        pname = self._expect("PNAME")
        if not pname.value.endswith(":"):
            self._fail("prefix declaration must end with ':'", pname)
        iriref = self._expect("IRIREF")
        self.graph.bind(pname.value[:-1], self._resolve(iriref))
        self._expect("DOT")

    def _base_directive(self):
        self._expect("BASE_DIR")
        iriref = self._expect("IRIREF")
        self.base = self._resolve(iriref)
        self._expect("DOT")

    def _resolve(self, tok: _Token) -> str:
        value = tok.value[1:-1]
        if _SCHEME_RE.match(value):
            return value
        if self.base is None:
            raise RelativeIriError(value, tok.line, tok.column)
        return urljoin(self.base, value)

    def _pname_to_iri(self, tok: _Token) -> str:
        prefix, _, local = tok.value.partition(":")
        if prefix not in self.graph.prefixes:
            self._fail(f"undeclared prefix {prefix!r}", tok)
        return self.graph.prefixes[prefix] + local

    def _subject(self) -> Term:
        tok = self._next()
        if tok.type == "IRIREF":
            return iri(self._resolve(tok))
        if tok.type == "PNAME":
            return iri(self._pname_to_iri(tok))
        if tok.type == "BLANK":
            return blank(tok.value[2:])
        self._fail("expected subject (IRI, prefixed name, or blank node)", tok)

    def _predicate(self) -> Term:
        tok = self._next()
        if tok.type == "KEYWORD" and tok.value == "a":
            return iri("http://www.w3.org/1999/02/22-rdf-syntax-ns#type")
        if tok.type == "IRIREF":
            return iri(self._resolve(tok))
        if tok.type == "PNAME":
            return iri(self._pname_to_iri(tok))
        self._fail("expected predicate (IRI, prefixed name, or 'a')", tok)

    def _object(self) -> Term:
        tok = self._next()
        if tok.type == "IRIREF":
            return iri(self._resolve(tok))
        if tok.type == "PNAME":
            return iri(self._pname_to_iri(tok))
        if tok.type == "BLANK":
            return blank(tok.value[2:])
        if tok.type == "STRING":
            lexical = _unescape(tok.value[1:-1], tok.line, tok.column)
            nxt = self._peek()
            if nxt.type == "LANGTAG":
                self._next()
                return literal(lexical, language=nxt.value[1:])
            if nxt.type == "DTYPE_SEP":
                self._next()
                dt_tok = self._next()
                if dt_tok.type == "IRIREF":
                    return literal(lexical, datatype=self._resolve(dt_tok))
                if dt_tok.type == "PNAME":
                    return literal(lexical, datatype=self._pname_to_iri(dt_tok))
                self._fail("expected datatype IRI after ^^", dt_tok)
            return literal(lexical)
        if tok.type == "INTEGER":
            return literal(tok.value, datatype=XSD_INTEGER)
        if tok.type == "DECIMAL":
            return literal(tok.value, datatype=XSD_DECIMAL)
        if tok.type == "KEYWORD" and tok.value in ("true", "false"):
            return literal(tok.value, datatype=XSD_BOOLEAN)
        self._fail("expected object term", tok)

    def _triples_block(self):
        subject = self._subject()
        while True:
            predicate = self._predicate()
            while True:
                obj = self._object()
                self.graph.add(Triple(subject, predicate, obj))
                if self._peek().type == "COMMA":
                    self._next()
                    continue
                break
            tok = self._next()
            if tok.type == "SEMI":
                # allow trailing ';' before '.'
                if self._peek().type == "DOT":
                    self._next()
                    return
                continue
            if tok.type == "DOT":
                return
            self._fail("expected ';', ',' or '.'", tok)


def parse_turtle(text: str, base: str | None = None) -> Graph:
    """Parse the supported Turtle subset (N-Triples documents parse too).

    Supported: @prefix/@base, `a`, predicate lists `;`, object lists `,`,
    typed and language literals, numeric/boolean shorthand, labeled blank
    nodes.  Anything else fails with a positioned syntax error.
    """
    return _TurtleParser(text, base).parse()


# Fast path for one-triple-per-line documents as emitted by
# serialize_canonical; the changeset store reads these in bulk.
_NT_IRI = r"<([^<>\"{}|^`\\\x00-\x20]*)>"
_NT_BLANK = r"_:([A-Za-z0-9][A-Za-z0-9_\-.]*)"
_NT_LITERAL = (
    r'"((?:[^"\\\n\r]|\\.)*)"'
    r"(?:@([A-Za-z]+(?:-[A-Za-z0-9]+)*)|\^\^<([^<>\"{}|^`\\\x00-\x20]*)>)?"
)
_NT_LINE_RE = re.compile(
    rf"^(?:{_NT_IRI}|{_NT_BLANK})[ \t]+{_NT_IRI}[ \t]+"
    rf"(?:{_NT_IRI}|{_NT_BLANK}|{_NT_LITERAL})[ \t]*\.$"
)


def parse_ntriples(text: str) -> Graph:
    """Strict N-Triples: one statement per line, no directives."""
    g = Graph()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _NT_LINE_RE.match(line)
        if not m:
            raise TurtleSyntaxError("not an N-Triples statement", lineno, 1, line[:40])
        s_iri, s_blank, p_iri, o_iri, o_blank, o_lit, o_lang, o_dtype = m.groups()
        subject = iri(s_iri) if s_iri is not None else blank(s_blank)
        if o_iri is not None:
            obj = iri(o_iri)
        elif o_blank is not None:
            obj = blank(o_blank)
        else:
            obj = literal(_unescape(o_lit, lineno, 1), language=o_lang, datatype=o_dtype)
        g.add(Triple(subject, iri(p_iri), obj))
    return g
