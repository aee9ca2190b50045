"""In-memory RDF model, N-Triples/Turtle parsing and blank-node skolemization.

The triple graph built here is the input to the whole pipeline.  Two text
serializations are accepted: line-oriented N-Triples and a pragmatic Turtle
subset (@prefix, the `a` keyword, predicate lists with `;`, object lists with
`,`, language-tagged/typed literals, numeric and boolean shorthand, and blank
node labels).  Graphs are deduplicated on load and immutable afterwards.
"""

from __future__ import annotations

import itertools
import re
import uuid
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union

RDF_NS = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
XSD_NS = "http://www.w3.org/2001/XMLSchema#"

SKOLEM_PATH = "/.well-known/genid/"
DEFAULT_BASE = "http://rdfforge.local"


class RdfSyntaxError(Exception):
    """Raised on malformed input; carries the 1-based line (and column)."""

    def __init__(self, message: str, line: int, col: int | None = None):
        self.line = line
        self.col = col
        where = f"line {line}" if col is None else f"line {line}, column {col}"
        super().__init__(f"{message} ({where})")


@dataclass(frozen=True)
class Iri:
    """An absolute IRI."""

    value: str

    def __post_init__(self):
        if not self.value or ":" not in self.value:
            raise ValueError(f"not an absolute IRI: {self.value!r}")

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class BlankNode:
    """A blank node label as read from the input (pre-skolemization)."""

    label: str


@dataclass(frozen=True)
class Literal:
    """An RDF literal.  A language tag excludes an explicit datatype."""

    lexical: str
    datatype: Iri | None = None
    lang: str | None = None

    def __post_init__(self):
        if self.lang is not None:
            if self.datatype is not None:
                raise ValueError("language-tagged literal cannot carry a datatype")
            object.__setattr__(self, "lang", self.lang.lower())


Term = Union[Iri, BlankNode, Literal]
Resource = Union[Iri, BlankNode]


@dataclass(frozen=True)
class Triple:
    subject: Resource
    predicate: Iri
    object: Term

    def __post_init__(self):
        if isinstance(self.subject, Literal):
            raise ValueError("triple subject must be a resource")
        if not isinstance(self.predicate, Iri):
            raise ValueError("triple predicate must be an IRI")


RDF_TYPE = Iri(RDF_NS + "type")
XSD_INTEGER = Iri(XSD_NS + "integer")
XSD_DECIMAL = Iri(XSD_NS + "decimal")
XSD_DOUBLE = Iri(XSD_NS + "double")
XSD_BOOLEAN = Iri(XSD_NS + "boolean")
XSD_STRING = Iri(XSD_NS + "string")


@dataclass
class Graph:
    """A deduplicated, ordered collection of triples.

    `prefix_map` is a parse artifact (Turtle only); `duplicates_collapsed`
    counts input statements dropped because an identical triple was already
    present.  Instances are never mutated after construction.
    """

    triples: tuple[Triple, ...] = ()
    prefix_map: dict[str, str] = field(default_factory=dict)
    duplicates_collapsed: int = 0

    def __len__(self) -> int:
        return len(self.triples)

    def __iter__(self) -> Iterator[Triple]:
        return iter(self.triples)

    def triple_set(self) -> frozenset[Triple]:
        return frozenset(self.triples)

    def same_triples(self, other: "Graph") -> bool:
        return self.triple_set() == other.triple_set()


def graph_from_triples(triples: Iterable[Triple], prefix_map: dict[str, str] | None = None) -> Graph:
    """Build a Graph, collapsing duplicate triples while preserving order."""
    seen: set[Triple] = set()
    kept: list[Triple] = []
    dropped = 0
    for t in triples:
        if t in seen:
            dropped += 1
        else:
            seen.add(t)
            kept.append(t)
    return Graph(tuple(kept), dict(prefix_map or {}), dropped)


# --- low-level scanning shared by both parsers -------------------------------

_ESCAPES = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f",
            '"': '"', "'": "'", "\\": "\\"}

_IRIREF_RE = re.compile(r'<([^<>"{}|^`\\\x00-\x20]*)>')
_BNODE_RE = re.compile(r"_:([A-Za-z0-9_][A-Za-z0-9_.\-]*)")
_LANG_RE = re.compile(r"@([A-Za-z]+(?:-[A-Za-z0-9]+)*)")
_NUMBER_RE = re.compile(r"[+-]?(?:\d+\.\d+(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+|\d+)")
_PNAME_LOCAL_RE = re.compile(r"[A-Za-z0-9_\-.]*")
_PREFIX_NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9_.\-]*|")


def _unescape(raw: str, line: int, col: int) -> str:
    if "\\" not in raw:
        return raw
    out: list[str] = []
    i = 0
    while i < len(raw):
        c = raw[i]
        if c != "\\":
            out.append(c)
            i += 1
            continue
        if i + 1 >= len(raw):
            raise RdfSyntaxError("trailing backslash in string", line, col)
        e = raw[i + 1]
        if e in _ESCAPES:
            out.append(_ESCAPES[e])
            i += 2
        elif e == "u" or e == "U":
            width = 4 if e == "u" else 8
            hexpart = raw[i + 2:i + 2 + width]
            if len(hexpart) != width or not all(h in "0123456789abcdefABCDEF" for h in hexpart):
                raise RdfSyntaxError(f"bad \\{e} escape", line, col)
            out.append(chr(int(hexpart, 16)))
            i += 2 + width
        else:
            raise RdfSyntaxError(f"unknown escape \\{e}", line, col)
    return "".join(out)


def _scan_iriref(text: str, i: int, line: int) -> tuple[Iri, int]:
    m = _IRIREF_RE.match(text, i)
    if not m:
        raise RdfSyntaxError("expected <IRI>", line, i)
    value = _unescape(m.group(1), line, i)
    try:
        return Iri(value), m.end()
    except ValueError as exc:
        raise RdfSyntaxError(str(exc), line, i) from exc


def _scan_string(text: str, i: int, line: int) -> tuple[str, int]:
    quote = text[i]
    j = i + 1
    while j < len(text):
        c = text[j]
        if c == "\\":
            j += 2
            continue
        if c == quote:
            return _unescape(text[i + 1:j], line, i), j + 1
        if c == "\n":
            break
        j += 1
    raise RdfSyntaxError("unterminated string literal", line, i)


def _scan_literal(text: str, i: int, line: int) -> tuple[Literal, int]:
    lexical, j = _scan_string(text, i, line)
    if text.startswith("^^", j):
        j += 2
        if j < len(text) and text[j] == "<":
            dt, j = _scan_iriref(text, j, line)
            return _make_typed(lexical, dt), j
        raise RdfSyntaxError("expected datatype IRI after ^^", line, j)
    m = _LANG_RE.match(text, j)
    if m:
        return Literal(lexical, lang=m.group(1)), m.end()
    return Literal(lexical), j


def _make_typed(lexical: str, datatype: Iri) -> Literal:
    if datatype == Iri(RDF_NS + "langString"):
        # no tag available in this position; degrade to plain
        return Literal(lexical)
    return Literal(lexical, datatype=datatype)


# --- N-Triples ---------------------------------------------------------------

def parse_ntriples(text: str) -> Graph:
    """Parse a line-oriented N-Triples document.

    One triple per statement line; blank lines and `#` comment lines are
    skipped.  Raises RdfSyntaxError with the offending line number.
    """
    triples: list[Triple] = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        triples.append(_parse_nt_statement(raw, lineno))
    return graph_from_triples(triples)


def _skip_ws(text: str, i: int) -> int:
    while i < len(text) and text[i] in " \t\r":
        i += 1
    return i


def _parse_nt_term(text: str, i: int, line: int, position: str) -> tuple[Term, int]:
    if i >= len(text):
        raise RdfSyntaxError(f"expected {position}", line, i)
    c = text[i]
    if c == "<":
        return _scan_iriref(text, i, line)
    if c == "_":
        m = _BNODE_RE.match(text, i)
        if not m:
            raise RdfSyntaxError("malformed blank node label", line, i)
        label = m.group(1)
        end = m.end()
        while label.endswith("."):
            label = label[:-1]
            end -= 1
        return BlankNode(label), end
    if c in "\"'":
        return _scan_literal(text, i, line)
    raise RdfSyntaxError(f"unexpected character {c!r} in {position}", line, i)


def _parse_nt_statement(text: str, line: int) -> Triple:
    i = _skip_ws(text, 0)
    subj, i = _parse_nt_term(text, i, line, "subject")
    if isinstance(subj, Literal):
        raise RdfSyntaxError("subject must be a resource", line, i)
    i = _skip_ws(text, i)
    pred, i = _parse_nt_term(text, i, line, "predicate")
    if not isinstance(pred, Iri):
        raise RdfSyntaxError("predicate must be an IRI", line, i)
    i = _skip_ws(text, i)
    obj, i = _parse_nt_term(text, i, line, "object")
    i = _skip_ws(text, i)
    if i >= len(text) or text[i] != ".":
        raise RdfSyntaxError("statement must end with '.'", line, i)
    i = _skip_ws(text, i + 1)
    if i < len(text) and text[i] != "#":
        raise RdfSyntaxError("unexpected trailing content after '.'", line, i)
    return Triple(subj, pred, obj)


# --- Turtle subset -----------------------------------------------------------

class _TurtleParser:
    def __init__(self, text: str):
        self.text = text
        self.n = len(text)
        self.i = 0
        self.prefixes: dict[str, str] = {}
        self.triples: list[Triple] = []

    def error(self, message: str) -> RdfSyntaxError:
        line = self.text.count("\n", 0, self.i) + 1
        col = self.i - self.text.rfind("\n", 0, self.i)
        return RdfSyntaxError(message, line, col)

    def line(self) -> int:
        return self.text.count("\n", 0, self.i) + 1

    def skip_ws(self):
        while self.i < self.n:
            c = self.text[self.i]
            if c in " \t\r\n":
                self.i += 1
            elif c == "#":
                nl = self.text.find("\n", self.i)
                self.i = self.n if nl < 0 else nl + 1
            else:
                return

    def eof(self) -> bool:
        return self.i >= self.n

    def expect(self, token: str):
        if not self.text.startswith(token, self.i):
            raise self.error(f"expected {token!r}")
        self.i += len(token)

    def parse(self) -> Graph:
        while True:
            self.skip_ws()
            if self.eof():
                break
            if self.text.startswith("@prefix", self.i):
                self.parse_prefix()
            else:
                self.parse_triples()
        return graph_from_triples(self.triples, self.prefixes)

    def parse_prefix(self):
        self.expect("@prefix")
        self.skip_ws()
        m = _PREFIX_NAME_RE.match(self.text, self.i)
        name = m.group(0)
        self.i = m.end()
        self.expect(":")
        self.skip_ws()
        iri, self.i = _scan_iriref(self.text, self.i, self.line())
        self.skip_ws()
        self.expect(".")
        self.prefixes[name] = iri.value

    def parse_triples(self):
        subj = self.parse_term(allow_literal=False)
        while True:
            self.skip_ws()
            pred = self.parse_verb()
            while True:
                self.skip_ws()
                obj = self.parse_term(allow_literal=True)
                self.triples.append(Triple(subj, pred, obj))
                self.skip_ws()
                if self.i < self.n and self.text[self.i] == ",":
                    self.i += 1
                    continue
                break
            if self.i < self.n and self.text[self.i] == ";":
                self.i += 1
                self.skip_ws()
                if self.i < self.n and self.text[self.i] == ".":
                    self.i += 1
                    return
                continue
            if self.i < self.n and self.text[self.i] == ".":
                self.i += 1
                return
            raise self.error("expected ',', ';' or '.'")

    def parse_verb(self) -> Iri:
        if self.text.startswith("a", self.i):
            after = self.text[self.i + 1:self.i + 2]
            if after == "" or after in " \t\r\n<#":
                self.i += 1
                return RDF_TYPE
        term = self.parse_term(allow_literal=False)
        if not isinstance(term, Iri):
            raise self.error("predicate must be an IRI")
        return term

    def parse_term(self, allow_literal: bool) -> Term:
        if self.eof():
            raise self.error("unexpected end of input")
        c = self.text[self.i]
        if c == "<":
            iri, self.i = _scan_iriref(self.text, self.i, self.line())
            return iri
        if c == "_" and self.text.startswith("_:", self.i):
            m = _BNODE_RE.match(self.text, self.i)
            if not m:
                raise self.error("malformed blank node label")
            label = m.group(1)
            end = m.end()
            while label.endswith("."):
                label = label[:-1]
                end -= 1
            self.i = end
            return BlankNode(label)
        if c in "\"'":
            if not allow_literal:
                raise self.error("literal not allowed here")
            return self.parse_literal()
        if allow_literal:
            m = _NUMBER_RE.match(self.text, self.i)
            if m:
                token = m.group(0)
                self.i = m.end()
                if "e" in token or "E" in token:
                    return Literal(token, datatype=XSD_DOUBLE)
                if "." in token:
                    return Literal(token, datatype=XSD_DECIMAL)
                return Literal(token, datatype=XSD_INTEGER)
            for word in ("true", "false"):
                if self.text.startswith(word, self.i):
                    after = self.text[self.i + len(word):self.i + len(word) + 1]
                    if after == "" or after in " \t\r\n,;.":
                        self.i += len(word)
                        return Literal(word, datatype=XSD_BOOLEAN)
        return self.parse_prefixed_name()

    def parse_literal(self) -> Literal:
        lexical, self.i = _scan_string(self.text, self.i, self.line())
        if self.text.startswith("^^", self.i):
            self.i += 2
            if self.i < self.n and self.text[self.i] == "<":
                dt, self.i = _scan_iriref(self.text, self.i, self.line())
            else:
                dt = self.parse_prefixed_name()
            return _make_typed(lexical, dt)
        m = _LANG_RE.match(self.text, self.i)
        if m:
            self.i = m.end()
            return Literal(lexical, lang=m.group(1))
        return Literal(lexical)

    def parse_prefixed_name(self) -> Iri:
        m = _PREFIX_NAME_RE.match(self.text, self.i)
        prefix = m.group(0)
        j = m.end()
        if j >= self.n or self.text[j] != ":":
            raise self.error("expected an IRI, prefixed name, literal or blank node")
        j += 1
        m = _PNAME_LOCAL_RE.match(self.text, j)
        local = m.group(0)
        end = m.end()
        while local.endswith("."):
            local = local[:-1]
            end -= 1
        if prefix not in self.prefixes:
            raise self.error(f"undefined prefix {prefix!r}")
        self.i = end
        try:
            return Iri(self.prefixes[prefix] + local)
        except ValueError as exc:
            raise self.error(str(exc)) from exc


def parse_turtle(text: str) -> Graph:
    """Parse a document in the supported Turtle subset."""
    return _TurtleParser(text).parse()


def parse_file(path: str) -> Graph:
    """Parse a `.nt` or `.ttl` file (chosen by extension)."""
    lower = path.lower()
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if lower.endswith(".nt"):
        return parse_ntriples(text)
    if lower.endswith(".ttl"):
        return parse_turtle(text)
    raise ValueError(f"unsupported input extension (want .nt or .ttl): {path}")


# --- serialization -----------------------------------------------------------

def _escape_string(s: str) -> str:
    out = s.replace("\\", "\\\\").replace('"', '\\"')
    return out.replace("\n", "\\n").replace("\r", "\\r").replace("\t", "\\t")


def term_to_text(term: Term) -> str:
    if isinstance(term, Iri):
        return f"<{term.value}>"
    if isinstance(term, BlankNode):
        return f"_:{term.label}"
    base = f'"{_escape_string(term.lexical)}"'
    if term.lang is not None:
        return f"{base}@{term.lang}"
    if term.datatype is not None:
        return f"{base}^^<{term.datatype.value}>"
    return base


def serialize_ntriples(g: Graph) -> str:
    lines = [
        f"{term_to_text(t.subject)} {term_to_text(t.predicate)} {term_to_text(t.object)} ."
        for t in g.triples
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def serialize_turtle(g: Graph) -> str:
    # one statement per line with full IRIs; valid in the supported subset
    return serialize_ntriples(g)


# --- skolemization -----------------------------------------------------------

def skolemize(g: Graph, base: str = DEFAULT_BASE, deterministic: bool = False) -> Graph:
    """Replace every blank node with a fresh IRI, consistently per label.

    Deterministic mode numbers labels in order of first appearance; otherwise
    random UUIDs are used.  Non-blank terms and the triple count are unchanged.
    """
    mapping: dict[str, Iri] = {}
    counter = itertools.count(1)
    prefix = base.rstrip("/") + SKOLEM_PATH

    def fresh(label: str) -> Iri:
        if label not in mapping:
            suffix = str(next(counter)) if deterministic else uuid.uuid4().hex
            mapping[label] = Iri(prefix + suffix)
        return mapping[label]

    def swap(term: Term) -> Term:
        return fresh(term.label) if isinstance(term, BlankNode) else term

    if not any(isinstance(t.subject, BlankNode) or isinstance(t.object, BlankNode) for t in g.triples):
        return g
    triples = tuple(Triple(swap(t.subject), t.predicate, swap(t.object)) for t in g.triples)
    return Graph(triples, dict(g.prefix_map), g.duplicates_collapsed)


# --- naming ------------------------------------------------------------------

def local_name(iri: Iri) -> str:
    """The suffix after the last '#', '/' or ':'; never empty."""
    value = iri.value
    for sep in ("#", "/", ":"):
        idx = value.rfind(sep)
        if idx >= 0 and idx + 1 < len(value):
            candidate = value[idx + 1:]
            if candidate:
                return candidate
    stripped = re.sub(r"[^A-Za-z0-9]", "", value)
    return stripped or "resource"
