"""Relational schema synthesis and record population.

One entity table per discovered class (the type-store layout), with property
usages placed as columns or many-to-many tables according to their inferred
cardinality:

* one-to-one / many-to-one: column in the domain class's table
* one-to-many (entity ranges): column in the range table referencing the domain
* many-to-many, language strings, and multi-valued literal/dangling usages:
  a separate ``mn_`` join table

Every resource receives a global numeric id recorded in the ``_res_id``
relation; entity tables carry no URI column.  Dangling references (objects
never typed in the dataset) are stored as textual URIs.
"""

from __future__ import annotations

import base64
import enum
import logging
import re
from dataclasses import dataclass, field

from .analysis import (
    Cardinality,
    ClassInfo,
    PropertyKind,
    PropertyProfile,
    RANGE_LITERAL,
    RANGE_UNTYPED,
    StorageClass,
    instance_types,
    to_epoch_millis,
)
from .rdf_core import DEFAULT_BASE, Graph, Iri, Literal, RDF_TYPE, Term, local_name

log = logging.getLogger(__name__)

RES_ID_TABLE = "_res_id"


class ObjectKind(enum.Enum):
    ENTITY_REF = "entity_ref"
    DANGLING_URI = "dangling_uri"
    VALUE = "value"
    LANG_VALUE = "lang_value"
    TYPE_REF = "type_ref"


# --- identifier helpers -------------------------------------------------------

_CAMEL_SPLIT_1 = re.compile(r"(.)([A-Z][a-z]+)")
_CAMEL_SPLIT_2 = re.compile(r"([a-z0-9])([A-Z])")


def snake_case(name: str) -> str:
    s = _CAMEL_SPLIT_1.sub(r"\1_\2", name)
    s = _CAMEL_SPLIT_2.sub(r"\1_\2", s)
    s = re.sub(r"[^A-Za-z0-9]", "_", s).lower()
    s = re.sub(r"_+", "_", s).strip("_")
    return s or "x"


def camel(snake: str) -> str:
    parts = snake.split("_")
    return parts[0] + "".join(p[:1].upper() + p[1:] for p in parts[1:])


def pascal(snake: str) -> str:
    return "".join(p[:1].upper() + p[1:] for p in snake.split("_"))


def name_table(class_iri: Iri) -> str:
    return snake_case(local_name(class_iri))


def name_column(property_iri: Iri) -> str:
    return snake_case(local_name(property_iri))


def name_mm(subject_table: str, property_iri: Iri, object_table: str | None = None) -> str:
    base = f"mn_{subject_table}_{name_column(property_iri)}"
    return f"{base}_{object_table}" if object_table else base


def _unique(base: str, used: set[str]) -> str:
    name = base
    n = 2
    while name in used:
        name = f"{base}_{n}"
        n += 1
    used.add(name)
    return name


def _unique_attr(base: str, used: set[str]) -> str:
    name = base
    n = 2
    while name in used:
        name = f"{base}{n}"
        n += 1
    used.add(name)
    return name


# --- schema model --------------------------------------------------------------

@dataclass
class Column:
    """One column of an entity table.

    `placement` is "domain" for columns filled from the record's outgoing
    statements and "incoming" for one-to-many columns placed here from a
    referring domain.  `range_keys` lists the object matchers this column
    accepts: "class:<iri>", "literal" or "untyped".  A `mixed` column stores
    entity ids as decimal strings next to dangling URIs.
    """

    name: str
    storage: StorageClass
    property_iri: Iri | None = None
    references: str | None = None
    nullable: bool = True
    mixed: bool = False
    temporal: bool = False
    placement: str | None = None
    domain_iri: Iri | None = None
    range_keys: list[str] = field(default_factory=list)
    json_attr: str = ""


@dataclass
class EntityTable:
    name: str
    class_iri: Iri
    columns: list[Column]

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)


@dataclass
class ManyToManyTable:
    name: str
    subject_table: str
    subject_column: str
    object_column: str
    property_iri: Iri | None
    object_kind: ObjectKind
    object_table: str | None = None
    lang_column: bool = False
    value_storage: StorageClass | None = None
    temporal: bool = False
    virtual: bool = False
    domain_iri: Iri | None = None
    range_keys: list[str] = field(default_factory=list)
    json_attr: str = ""


@dataclass
class RelationalSchema:
    tables: list[EntityTable]
    mm_tables: list[ManyToManyTable]
    orphan_statements: int = 0
    base: str = DEFAULT_BASE
    deterministic: bool = False

    def table(self, name: str) -> EntityTable:
        for t in self.tables:
            if t.name == name:
                return t
        raise KeyError(name)

    def table_for_class(self, class_iri: Iri) -> EntityTable:
        for t in self.tables:
            if t.class_iri == class_iri:
                return t
        raise KeyError(class_iri.value)

    def physical_mm_tables(self) -> list[ManyToManyTable]:
        return [m for m in self.mm_tables if not m.virtual]

    def to_json_dict(self) -> dict:
        return {
            "base": self.base,
            "deterministic": self.deterministic,
            "orphan_statements": self.orphan_statements,
            "tables": [
                {
                    "name": t.name,
                    "class_iri": t.class_iri.value,
                    "columns": [
                        {
                            "name": c.name,
                            "storage": c.storage.value,
                            "property_iri": c.property_iri.value if c.property_iri else None,
                            "references": c.references,
                            "nullable": c.nullable,
                            "mixed": c.mixed,
                            "temporal": c.temporal,
                            "placement": c.placement,
                            "domain_iri": c.domain_iri.value if c.domain_iri else None,
                            "range_keys": list(c.range_keys),
                            "json_attr": c.json_attr,
                        }
                        for c in t.columns
                    ],
                }
                for t in self.tables
            ],
            "mm_tables": [
                {
                    "name": m.name,
                    "subject_table": m.subject_table,
                    "subject_column": m.subject_column,
                    "object_column": m.object_column,
                    "property_iri": m.property_iri.value if m.property_iri else None,
                    "object_kind": m.object_kind.value,
                    "object_table": m.object_table,
                    "lang_column": m.lang_column,
                    "value_storage": m.value_storage.value if m.value_storage else None,
                    "temporal": m.temporal,
                    "virtual": m.virtual,
                    "domain_iri": m.domain_iri.value if m.domain_iri else None,
                    "range_keys": list(m.range_keys),
                    "json_attr": m.json_attr,
                }
                for m in self.mm_tables
            ],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "RelationalSchema":
        tables = [
            EntityTable(
                name=t["name"],
                class_iri=Iri(t["class_iri"]),
                columns=[
                    Column(
                        name=c["name"],
                        storage=StorageClass(c["storage"]),
                        property_iri=Iri(c["property_iri"]) if c["property_iri"] else None,
                        references=c["references"],
                        nullable=c["nullable"],
                        mixed=c["mixed"],
                        temporal=c["temporal"],
                        placement=c["placement"],
                        domain_iri=Iri(c["domain_iri"]) if c["domain_iri"] else None,
                        range_keys=list(c["range_keys"]),
                        json_attr=c["json_attr"],
                    )
                    for c in t["columns"]
                ],
            )
            for t in data["tables"]
        ]
        mm_tables = [
            ManyToManyTable(
                name=m["name"],
                subject_table=m["subject_table"],
                subject_column=m["subject_column"],
                object_column=m["object_column"],
                property_iri=Iri(m["property_iri"]) if m["property_iri"] else None,
                object_kind=ObjectKind(m["object_kind"]),
                object_table=m["object_table"],
                lang_column=m["lang_column"],
                value_storage=StorageClass(m["value_storage"]) if m["value_storage"] else None,
                temporal=m["temporal"],
                virtual=m["virtual"],
                domain_iri=Iri(m["domain_iri"]) if m["domain_iri"] else None,
                range_keys=list(m["range_keys"]),
                json_attr=m["json_attr"],
            )
            for m in data["mm_tables"]
        ]
        return cls(
            tables=tables,
            mm_tables=mm_tables,
            orphan_statements=data.get("orphan_statements", 0),
            base=data.get("base", DEFAULT_BASE),
            deterministic=data.get("deterministic", False),
        )


@dataclass
class Record:
    table: str
    values: dict


@dataclass
class ResourceIdMap:
    """Bijective mapping between resource IRIs and positive integer ids."""

    by_iri: dict[Iri, int]

    def __post_init__(self):
        self.by_id = {v: k for k, v in self.by_iri.items()}
        if len(self.by_id) != len(self.by_iri):
            raise ValueError("resource id mapping is not bijective")

    def __len__(self) -> int:
        return len(self.by_iri)

    def id_of(self, iri: Iri) -> int:
        return self.by_iri[iri]

    def sorted_items(self) -> list[tuple[Iri, int]]:
        return sorted(self.by_iri.items(), key=lambda kv: kv[1])


def assign_ids(g: Graph) -> ResourceIdMap:
    """Assign ids 1..n to every resource IRI in lexicographic order."""
    resources: set[Iri] = set()
    for t in g.triples:
        if isinstance(t.subject, Iri):
            resources.add(t.subject)
        if isinstance(t.object, Iri):
            resources.add(t.object)
    ordered = sorted(resources, key=lambda r: r.value)
    return ResourceIdMap({iri: n for n, iri in enumerate(ordered, start=1)})


# --- schema construction --------------------------------------------------------

def _range_key(profile: PropertyProfile) -> str:
    if profile.range_key == "class":
        return f"class:{profile.range_iri.value}"
    return profile.range_key


def _is_column_placed(profile: PropertyProfile) -> bool:
    if profile.kind == PropertyKind.LANG_STRING:
        return False
    if profile.cardinality in (Cardinality.ONE_TO_ONE, Cardinality.MANY_TO_ONE):
        return True
    if profile.cardinality == Cardinality.ONE_TO_MANY:
        # only entity ranges have a referring table to hold the column
        return profile.kind == PropertyKind.OBJECT and not profile.dangling
    return False


def build_schema(classes: dict[Iri, ClassInfo], profiles: list[PropertyProfile],
                 base: str = DEFAULT_BASE, deterministic: bool = False,
                 orphan_statements: int = 0) -> RelationalSchema:
    """Design the relational schema for the discovered classes and profiles."""
    used_names: set[str] = {RES_ID_TABLE}
    tables: list[EntityTable] = []
    table_of_class: dict[Iri, str] = {}
    for class_iri in sorted(classes, key=lambda c: c.value):
        tname = _unique(name_table(class_iri), used_names)
        tables.append(EntityTable(
            name=tname,
            class_iri=class_iri,
            columns=[Column(name="id", storage=StorageClass.INTEGER, nullable=False,
                            json_attr="id")],
        ))
        table_of_class[class_iri] = tname

    # the type relation is served from table membership, not materialized
    mm_tables: list[ManyToManyTable] = []
    for t in tables:
        vname = _unique(f"mn_{t.name}_type", used_names)
        mm_tables.append(ManyToManyTable(
            name=vname, subject_table=t.name, subject_column=t.name,
            object_column="type", property_iri=RDF_TYPE,
            object_kind=ObjectKind.TYPE_REF, virtual=True,
            domain_iri=t.class_iri, json_attr="type",
        ))

    ordered = sorted(profiles, key=PropertyProfile.sort_key)
    domain_cols: dict[str, list[PropertyProfile]] = {}
    incoming_cols: dict[str, list[PropertyProfile]] = {}
    mm_profiles: list[PropertyProfile] = []
    for p in ordered:
        if p.domain not in table_of_class:
            continue
        if _is_column_placed(p):
            if p.cardinality == Cardinality.ONE_TO_MANY:
                target = table_of_class.get(p.range_iri)
                if target is None:
                    mm_profiles.append(p)
                else:
                    incoming_cols.setdefault(target, []).append(p)
            else:
                domain_cols.setdefault(table_of_class[p.domain], []).append(p)
        else:
            mm_profiles.append(p)

    # columns from the table's own domain, merging mixed typed/untyped usages
    for t in tables:
        col_used = {c.name for c in t.columns}
        groups: dict[Iri, list[PropertyProfile]] = {}
        order: list[Iri] = []
        for p in domain_cols.get(t.name, []):
            if p.property_iri not in groups:
                order.append(p.property_iri)
            groups.setdefault(p.property_iri, []).append(p)
        for prop in order:
            members = groups[prop]
            typed = [p for p in members if p.range_key == "class"]
            dangling = [p for p in members if p.range_key == RANGE_UNTYPED]
            rest = [p for p in members if p.range_key == RANGE_LITERAL]
            if typed and dangling:
                merged = typed + dangling
                if max(p.pair_max_out for p in merged) > 1:
                    # a subject may carry both a typed and an untyped object;
                    # a single column cannot hold both, use a join table
                    mm_profiles.extend(merged)
                else:
                    t.columns.append(Column(
                        name=_unique(name_column(prop), col_used),
                        storage=StorageClass.TEXT,
                        property_iri=prop,
                        mixed=True,
                        placement="domain",
                        domain_iri=t.class_iri,
                        range_keys=[_range_key(p) for p in merged],
                    ))
            else:
                for p in typed + dangling:
                    if p.range_key == "class":
                        ref = table_of_class[p.range_iri]
                        t.columns.append(Column(
                            name=_unique(name_column(prop), col_used),
                            storage=StorageClass.INTEGER,
                            property_iri=prop,
                            references=ref,
                            placement="domain",
                            domain_iri=t.class_iri,
                            range_keys=[_range_key(p)],
                        ))
                    else:
                        t.columns.append(Column(
                            name=_unique(name_column(prop), col_used),
                            storage=StorageClass.TEXT,
                            property_iri=prop,
                            placement="domain",
                            domain_iri=t.class_iri,
                            range_keys=[_range_key(p)],
                        ))
            for p in rest:
                t.columns.append(Column(
                    name=_unique(name_column(prop), col_used),
                    storage=p.storage_class,
                    property_iri=prop,
                    temporal=p.temporal,
                    placement="domain",
                    domain_iri=t.class_iri,
                    range_keys=[_range_key(p)],
                ))

    # one-to-many columns live in the range table and reference the domain
    for t in tables:
        col_used = {c.name for c in t.columns}
        for p in sorted(incoming_cols.get(t.name, []),
                        key=lambda p: (p.property_iri.value, p.domain.value)):
            t.columns.append(Column(
                name=_unique(name_column(p.property_iri), col_used),
                storage=StorageClass.INTEGER,
                property_iri=p.property_iri,
                references=table_of_class[p.domain],
                placement="incoming",
                domain_iri=p.domain,
                range_keys=[_range_key(p)],
            ))

    # join tables; same-property groups across several ranges get range suffixes
    mm_profiles.sort(key=PropertyProfile.sort_key)
    grouped: dict[tuple[str, Iri], list[PropertyProfile]] = {}
    for p in mm_profiles:
        grouped.setdefault((table_of_class[p.domain], p.property_iri), []).append(p)
    for (subj_table, prop), members in sorted(
            grouped.items(), key=lambda kv: (kv[0][0], kv[0][1].value)):
        typed = [p for p in members if p.range_key == "class"]
        dangling = [p for p in members if p.range_key == RANGE_UNTYPED]
        literal = [p for p in members if p.range_key == RANGE_LITERAL]
        specs: list[tuple[str | None, ObjectKind, list[PropertyProfile]]] = []
        for p in typed:
            specs.append((table_of_class[p.range_iri], ObjectKind.ENTITY_REF, [p]))
        if dangling:
            specs.append((None, ObjectKind.DANGLING_URI, dangling))
        for p in literal:
            kind = ObjectKind.LANG_VALUE if p.kind == PropertyKind.LANG_STRING else ObjectKind.VALUE
            specs.append((None, kind, [p]))
        multiple = len(specs) > 1
        for object_table, okind, profs in specs:
            suffix_table = object_table if (multiple and object_table) else None
            tname = _unique(name_mm(subj_table, prop, suffix_table), used_names)
            col_used = {"lang"} if okind == ObjectKind.LANG_VALUE else set()
            subject_col = _unique(subj_table, col_used)
            if okind == ObjectKind.ENTITY_REF:
                object_col = _unique(object_table, col_used)
            else:
                object_col = _unique(name_column(prop), col_used)
            first = profs[0]
            mm_tables.append(ManyToManyTable(
                name=tname,
                subject_table=subj_table,
                subject_column=subject_col,
                object_column=object_col,
                property_iri=prop,
                object_kind=okind,
                object_table=object_table,
                lang_column=okind == ObjectKind.LANG_VALUE,
                value_storage=first.storage_class if okind in (ObjectKind.VALUE, ObjectKind.LANG_VALUE) else None,
                temporal=first.temporal if okind == ObjectKind.VALUE else False,
                domain_iri=first.domain,
                range_keys=[_range_key(p) for p in profs],
            ))
    mm_tables.sort(key=lambda m: (m.virtual, m.name))

    schema = RelationalSchema(tables=tables, mm_tables=mm_tables,
                              orphan_statements=orphan_statements,
                              base=base, deterministic=deterministic)
    _assign_json_attrs(schema)
    return schema


def _assign_json_attrs(schema: RelationalSchema):
    for t in schema.tables:
        used = {"id", "type"}
        for c in t.columns[1:]:
            c.json_attr = _unique_attr(camel(c.name), used)
        for m in sorted(schema.mm_tables, key=lambda m: m.name):
            if m.virtual or m.subject_table != t.name:
                continue
            base = camel(name_column(m.property_iri))
            if m.object_kind == ObjectKind.ENTITY_REF:
                base += pascal(m.object_table)
            m.json_attr = _unique_attr(base, used)


# --- record population -----------------------------------------------------------

def _matches(term: Term, range_keys: list[str], type_map: dict[Iri, set[Iri]]) -> bool:
    for key in range_keys:
        if key == RANGE_LITERAL:
            if isinstance(term, Literal):
                return True
        elif key == RANGE_UNTYPED:
            if isinstance(term, Iri) and not type_map.get(term):
                return True
        elif key.startswith("class:"):
            if isinstance(term, Iri) and Iri(key[6:]) in type_map.get(term, ()):
                return True
    return False


def coerce_literal(lit: Literal, storage: StorageClass, temporal: bool):
    """Convert a literal to its column value; fall back to text, never drop."""
    try:
        if temporal:
            return to_epoch_millis(lit)
        if storage == StorageClass.INTEGER:
            return int(lit.lexical)
        if storage == StorageClass.REAL:
            return float(lit.lexical)
        if storage == StorageClass.BLOB:
            if lit.datatype is not None and lit.datatype.value.endswith("hexBinary"):
                return bytes.fromhex(lit.lexical)
            return base64.b64decode(lit.lexical, validate=True)
    except (ValueError, OverflowError) as exc:
        log.warning("literal %r does not fit storage class %s (%s); stored as text",
                    lit.lexical, storage.value, exc)
        return lit.lexical
    return lit.lexical


def _term_sort(term: Term) -> tuple:
    if isinstance(term, Iri):
        return (0, term.value, "", "")
    return (1, term.lexical, term.datatype.value if term.datatype else "", term.lang or "")


def populate(g: Graph, schema: RelationalSchema, ids: ResourceIdMap,
             classes: dict[Iri, ClassInfo]) -> list[Record]:
    """Fill entity tables (one record per instance and type) and join tables."""
    type_map = instance_types(classes)
    by_pred: dict[Iri, list[tuple[Iri, Term]]] = {}
    for t in g.triples:
        if isinstance(t.subject, Iri):
            by_pred.setdefault(t.predicate, []).append((t.subject, t.object))

    records: list[Record] = []
    for table in schema.tables:
        instances = sorted(classes[table.class_iri].instances, key=ids.id_of)
        for inst in instances:
            values: dict = {"id": ids.id_of(inst)}
            for col in table.columns[1:]:
                values[col.name] = _column_value(col, inst, by_pred, type_map, ids)
            records.append(Record(table.name, values))

    for mm in schema.physical_mm_tables():
        stmts = [
            (s, o)
            for s, o in by_pred.get(mm.property_iri, [])
            if mm.domain_iri in type_map.get(s, ()) and _matches(o, mm.range_keys, type_map)
        ]
        stmts = sorted(set(stmts), key=lambda so: (ids.id_of(so[0]), _term_sort(so[1])))
        for s, o in stmts:
            row: dict = {mm.subject_column: ids.id_of(s)}
            if mm.object_kind == ObjectKind.ENTITY_REF:
                row[mm.object_column] = ids.id_of(o)
            elif mm.object_kind == ObjectKind.DANGLING_URI:
                row[mm.object_column] = o.value
            elif mm.object_kind == ObjectKind.VALUE:
                row[mm.object_column] = coerce_literal(o, mm.value_storage, mm.temporal)
            else:  # LANG_VALUE
                row[mm.object_column] = o.lexical
                row["lang"] = o.lang
            records.append(Record(mm.name, row))
    return records


def _column_value(col: Column, inst: Iri, by_pred, type_map, ids: ResourceIdMap):
    if col.placement == "incoming":
        candidates = [
            s for s, o in by_pred.get(col.property_iri, [])
            if o == inst and col.domain_iri in type_map.get(s, ())
        ]
        values = sorted({ids.id_of(s) for s in candidates})
        if not values:
            return None
        if len(values) > 1:
            log.warning("column %s: %d referring subjects for one record, keeping first",
                        col.name, len(values))
        return values[0]

    candidates = [
        o for s, o in by_pred.get(col.property_iri, [])
        if s == inst and _matches(o, col.range_keys, type_map)
    ]
    distinct = sorted(set(candidates), key=_term_sort)
    if not distinct:
        return None
    if len(distinct) > 1:
        log.warning("column %s: %d values for one record, keeping first",
                    col.name, len(distinct))
    o = distinct[0]
    if isinstance(o, Literal):
        return coerce_literal(o, col.storage, col.temporal)
    if type_map.get(o):
        return str(ids.id_of(o)) if col.mixed else ids.id_of(o)
    return o.value
