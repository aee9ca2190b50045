"""Instance-level analysis of a triple graph.

Scans the assertion statements to discover classes and their instances,
multi-typed instances, property usage split into object/datatype/language
string kinds, per (property, domain, range) cardinalities, storage classes
for literal values, and the summary statistics reported by the CLI.
"""

from __future__ import annotations

import enum
import logging
import re
import statistics
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

from .rdf_core import Graph, Iri, Literal, RDF_TYPE, Term, XSD_NS

log = logging.getLogger(__name__)

# range markers for profiles whose objects are not typed resources
RANGE_LITERAL = "literal"
RANGE_UNTYPED = "untyped"

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
_INTEGER_LEXICAL = re.compile(r"[+-]?\d+\Z")

_XSD_INTEGER_TYPES = {
    XSD_NS + n
    for n in (
        "integer", "int", "long", "short", "byte",
        "nonNegativeInteger", "positiveInteger",
        "nonPositiveInteger", "negativeInteger",
        "unsignedLong", "unsignedInt", "unsignedShort", "unsignedByte",
    )
}
_XSD_REAL_TYPES = {XSD_NS + n for n in ("decimal", "float", "double")}
_XSD_BLOB_TYPES = {XSD_NS + n for n in ("base64Binary", "hexBinary")}
_XSD_TEMPORAL_TYPES = {XSD_NS + n for n in ("dateTime", "date")}


class Cardinality(enum.Enum):
    ONE_TO_ONE = "one_to_one"
    ONE_TO_MANY = "one_to_many"
    MANY_TO_ONE = "many_to_one"
    MANY_TO_MANY = "many_to_many"


class StorageClass(enum.Enum):
    TEXT = "text"
    REAL = "real"
    INTEGER = "integer"
    BLOB = "blob"


class PropertyKind(enum.Enum):
    OBJECT = "object"
    DATATYPE = "datatype"
    LANG_STRING = "lang_string"


@dataclass(frozen=True)
class ClassInfo:
    class_iri: Iri
    instances: frozenset[Iri]


@dataclass
class PropertyProfile:
    """Usage of one property for one (domain class, range) pair.

    `range_iri` is set only when the range is a class; literal-valued and
    untyped-object usages carry the matching marker in `range_key` instead.
    `pair_max_out` is the maximum number of distinct resource objects any
    domain subject links to via this property, counted across all ranges of
    the same (property, domain) pair.
    """

    property_iri: Iri
    domain: Iri
    range_key: str  # "class", RANGE_LITERAL or RANGE_UNTYPED
    range_iri: Iri | None
    kind: PropertyKind
    cardinality: Cardinality
    storage_class: StorageClass | None = None
    temporal: bool = False
    dangling: bool = False
    pair_max_out: int = 0

    def sort_key(self) -> tuple:
        return (self.property_iri.value, self.domain.value, self.range_key,
                self.range_iri.value if self.range_iri else "")


@dataclass
class DatasetStats:
    stmts: int
    cls: int
    mt: int
    avg_mt: float | None
    avg_mt_std: float | None
    op: int
    dp: int
    oo: int
    mo: int
    om: int
    mm: int
    et: int
    mmt: int
    avg_col: float | None
    avg_col_std: float | None

    def to_json_dict(self) -> dict:
        return {
            "stmts": self.stmts,
            "cls": self.cls,
            "mt": self.mt,
            "avgMt": self.avg_mt,
            "avgMtStd": self.avg_mt_std,
            "op": self.op,
            "dp": self.dp,
            "oo": self.oo,
            "mo": self.mo,
            "om": self.om,
            "mm": self.mm,
            "et": self.et,
            "mmt": self.mmt,
            "avgCol": self.avg_col,
            "avgColStd": self.avg_col_std,
        }


def discover_classes(g: Graph) -> dict[Iri, ClassInfo]:
    """Group instances under every distinct object of an rdf:type statement."""
    members: dict[Iri, set[Iri]] = {}
    for t in g.triples:
        if t.predicate == RDF_TYPE and isinstance(t.object, Iri) and isinstance(t.subject, Iri):
            members.setdefault(t.object, set()).add(t.subject)
    return {c: ClassInfo(c, frozenset(insts)) for c, insts in members.items()}


def instance_types(classes: dict[Iri, ClassInfo]) -> dict[Iri, set[Iri]]:
    """Invert the class map: instance -> set of its classes."""
    types: dict[Iri, set[Iri]] = {}
    for info in classes.values():
        for inst in info.instances:
            types.setdefault(inst, set()).add(info.class_iri)
    return types


def detect_multityped(classes: dict[Iri, ClassInfo]) -> tuple[set[Iri], float | None, float | None]:
    """Instances with two or more types, plus mean/population-std of their type counts."""
    counts = [len(ts) for ts in instance_types(classes).values() if len(ts) >= 2]
    multityped = {i for i, ts in instance_types(classes).items() if len(ts) >= 2}
    if not counts:
        return set(), None, None
    return multityped, float(statistics.mean(counts)), float(statistics.pstdev(counts))


def infer_storage_class(literals: set[Literal] | list[Literal]) -> StorageClass:
    """Pick the SQL storage class covering every literal in the set."""
    kinds = {_literal_kind(lit) for lit in literals}
    if kinds == {"int"} or kinds == {"temporal"}:
        return StorageClass.INTEGER
    if kinds <= {"int", "real"} and "real" in kinds:
        return StorageClass.REAL
    if kinds == {"blob"}:
        return StorageClass.BLOB
    return StorageClass.TEXT


def _literal_kind(lit: Literal) -> str:
    if lit.lang is not None:
        return "text"
    if lit.datatype is None:
        return "int" if _INTEGER_LEXICAL.match(lit.lexical) else "text"
    dt = lit.datatype.value
    if dt in _XSD_INTEGER_TYPES:
        return "int"
    if dt in _XSD_REAL_TYPES:
        return "real"
    if dt in _XSD_BLOB_TYPES:
        return "blob"
    if dt in _XSD_TEMPORAL_TYPES:
        return "temporal"
    return "text"


def is_temporal(literals: set[Literal] | list[Literal]) -> bool:
    return all(_literal_kind(lit) == "temporal" for lit in literals) and bool(literals)


def to_epoch_millis(lit: Literal) -> int:
    """Convert an xsd:dateTime/xsd:date literal to milliseconds since the epoch (UTC)."""
    text = lit.lexical.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return (dt - _EPOCH) // timedelta(milliseconds=1)


def matching_statements(g: Graph, profile: PropertyProfile,
                        type_map: dict[Iri, set[Iri]] | None = None) -> list[tuple[Iri, Term]]:
    """(subject, object) pairs witnessing the profile: subject typed with the
    domain and the object matching the profile's range."""
    if type_map is None:
        type_map = instance_types(discover_classes(g))
    out: list[tuple[Iri, Term]] = []
    for t in g.triples:
        if t.predicate != profile.property_iri:
            continue
        if profile.domain not in type_map.get(t.subject, ()):
            continue
        o = t.object
        if profile.range_key == RANGE_LITERAL:
            if isinstance(o, Literal):
                out.append((t.subject, o))
        elif profile.range_key == RANGE_UNTYPED:
            if isinstance(o, Iri) and not type_map.get(o):
                out.append((t.subject, o))
        else:
            if isinstance(o, Iri) and profile.range_iri in type_map.get(o, ()):
                out.append((t.subject, o))
    return out


def infer_cardinality(g: Graph, profile: PropertyProfile,
                      type_map: dict[Iri, set[Iri]] | None = None) -> Cardinality:
    """Deduce the cardinality from the multiplicities of matching statements.

    rdf:type is forced to many-to-many regardless of the data.
    """
    if profile.property_iri == RDF_TYPE:
        return Cardinality.MANY_TO_MANY
    pairs = matching_statements(g, profile, type_map)
    if not pairs:
        raise ValueError(f"profile has no matching statements: {profile}")
    per_subject: dict[Iri, set[Term]] = {}
    per_object: dict[Term, set[Iri]] = {}
    for s, o in pairs:
        per_subject.setdefault(s, set()).add(o)
        per_object.setdefault(o, set()).add(s)
    many_out = max(len(v) for v in per_subject.values()) > 1
    many_in = max(len(v) for v in per_object.values()) > 1
    if many_out and many_in:
        return Cardinality.MANY_TO_MANY
    if many_out:
        return Cardinality.ONE_TO_MANY
    if many_in:
        return Cardinality.MANY_TO_ONE
    return Cardinality.ONE_TO_ONE


def classify_properties(g: Graph, classes: dict[Iri, ClassInfo]) -> tuple[list[PropertyProfile], int]:
    """Build one profile per distinct (property, domain, range) pair.

    Statements whose subject has no type cannot contribute to any entity
    table; they are excluded and returned as the orphan tally.

    Returns:
        (profiles sorted deterministically, number of orphan statements)
    """
    type_map = instance_types(classes)
    orphans = 0
    literal_sets: dict[tuple[Iri, Iri], list[Literal]] = {}
    class_ranges: dict[tuple[Iri, Iri], set[Iri]] = {}
    untyped_pairs: set[tuple[Iri, Iri]] = set()
    out_per_subject: dict[tuple[Iri, Iri], dict[Iri, set[Iri]]] = {}

    for t in g.triples:
        if t.predicate == RDF_TYPE:
            continue
        domains = type_map.get(t.subject)
        if not domains:
            orphans += 1
            continue
        for domain in domains:
            key = (t.predicate, domain)
            if isinstance(t.object, Literal):
                literal_sets.setdefault(key, []).append(t.object)
            else:
                out_per_subject.setdefault(key, {}).setdefault(t.subject, set()).add(t.object)
                rtypes = type_map.get(t.object)
                if rtypes:
                    class_ranges.setdefault(key, set()).update(rtypes)
                else:
                    untyped_pairs.add(key)

    profiles: list[PropertyProfile] = []
    for (prop, domain), lits in literal_sets.items():
        tagged = any(l.lang is not None for l in lits)
        kind = PropertyKind.LANG_STRING if tagged else PropertyKind.DATATYPE
        storage = StorageClass.TEXT if tagged else infer_storage_class(lits)
        profiles.append(PropertyProfile(
            property_iri=prop, domain=domain, range_key=RANGE_LITERAL, range_iri=None,
            kind=kind, cardinality=Cardinality.ONE_TO_ONE, storage_class=storage,
            temporal=not tagged and is_temporal(lits),
        ))
    for (prop, domain), ranges in class_ranges.items():
        pair_max = max(len(objs) for objs in out_per_subject[(prop, domain)].values())
        for r in ranges:
            profiles.append(PropertyProfile(
                property_iri=prop, domain=domain, range_key="class", range_iri=r,
                kind=PropertyKind.OBJECT, cardinality=Cardinality.ONE_TO_ONE,
                pair_max_out=pair_max,
            ))
    for (prop, domain) in untyped_pairs:
        pair_max = max(len(objs) for objs in out_per_subject[(prop, domain)].values())
        profiles.append(PropertyProfile(
            property_iri=prop, domain=domain, range_key=RANGE_UNTYPED, range_iri=None,
            kind=PropertyKind.OBJECT, cardinality=Cardinality.ONE_TO_ONE,
            dangling=True, pair_max_out=pair_max,
        ))

    for p in profiles:
        p.cardinality = infer_cardinality(g, p, type_map)
    profiles.sort(key=PropertyProfile.sort_key)
    if orphans:
        log.warning("%d statement(s) with untyped subjects excluded from the schema", orphans)
    return profiles, orphans


def compute_stats(g: Graph, classes: dict[Iri, ClassInfo],
                  profiles: list[PropertyProfile], schema) -> DatasetStats:
    """Summary statistics over the analyzed dataset and its generated schema."""
    multityped, avg_mt, avg_mt_std = detect_multityped(classes)

    object_preds = {p.property_iri for p in profiles if p.kind == PropertyKind.OBJECT}
    all_preds = {p.property_iri for p in profiles}
    op = len(object_preds)
    dp = len(all_preds - object_preds)

    by_card = {c: 0 for c in Cardinality}
    for p in profiles:
        by_card[p.cardinality] += 1

    col_counts = sorted(len(t.columns) for t in schema.tables)
    if col_counts:
        avg_col = float(statistics.mean(col_counts))
        avg_col_std = float(statistics.pstdev(col_counts))
    else:
        avg_col = avg_col_std = None

    return DatasetStats(
        stmts=len(g),
        cls=len(classes),
        mt=len(multityped),
        avg_mt=avg_mt,
        avg_mt_std=avg_mt_std,
        op=op,
        dp=dp,
        oo=by_card[Cardinality.ONE_TO_ONE],
        mo=by_card[Cardinality.MANY_TO_ONE],
        om=by_card[Cardinality.ONE_TO_MANY],
        mm=by_card[Cardinality.MANY_TO_MANY],
        et=len(schema.tables),
        mmt=sum(1 for m in schema.mm_tables if not m.virtual),
        avg_col=avg_col,
        avg_col_std=avg_col_std,
    )
