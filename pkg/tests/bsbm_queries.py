"""Graph-pattern oracle for the twelve list/describe query translations.

Each function evaluates the corresponding basic graph pattern (plus filters)
directly against the source triples and returns the matching resource IRIs.
The REST calls must return exactly these entities (mapped to numeric ids).
"""

from __future__ import annotations

from datetime import datetime, timezone

from rdfforge.rdf_core import Graph, Iri, Literal, RDF_TYPE

B = "urn:bsbm:"


def b(name: str) -> Iri:
    return Iri(B + name)


def objects(g: Graph, s: Iri, p: Iri) -> list:
    return [t.object for t in g.triples if t.subject == s and t.predicate == p]


def subjects_of_type(g: Graph, cls: Iri) -> set[Iri]:
    return {t.subject for t in g.triples
            if t.predicate == RDF_TYPE and t.object == cls and isinstance(t.subject, Iri)}


def has(g: Graph, s: Iri, p: Iri, o) -> bool:
    return any(t.subject == s and t.predicate == p and t.object == o for t in g.triples)


def number(g: Graph, s: Iri, p: Iri) -> float | None:
    for o in objects(g, s, p):
        if isinstance(o, Literal):
            try:
                return float(o.lexical)
            except ValueError:
                return None
    return None


def epoch_millis(text: str) -> int:
    raw = text.strip()
    if raw.endswith("Z"):
        raw = raw[:-1] + "+00:00"
    dt = datetime.fromisoformat(raw)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return round(dt.timestamp() * 1000)


def valid_to_millis(g: Graph, offer: Iri) -> int | None:
    for o in objects(g, offer, b("validTo")):
        if isinstance(o, Literal):
            return epoch_millis(o.lexical)
    return None


PRODUCT = b("Product")
FEATURE_PROP = b("productFeature")
NUM1 = b("productPropertyNumeric1")
NUM2 = b("productPropertyNumeric2")
NUM3 = b("productPropertyNumeric3")


def q1(g: Graph, product_type: Iri, f1: Iri, f2: Iri, x: float) -> set[Iri]:
    """Type + both features + numeric threshold."""
    return {
        p for p in subjects_of_type(g, PRODUCT)
        if has(g, p, RDF_TYPE, product_type)
        and has(g, p, FEATURE_PROP, f1) and has(g, p, FEATURE_PROP, f2)
        and (number(g, p, NUM1) or 0) > x
    }


def q3(g: Graph, product_type: Iri, f1: Iri, f2_excluded: Iri,
       x: float, y: float) -> set[Iri]:
    """Type + one feature present, one absent, two numeric bounds."""
    return {
        p for p in subjects_of_type(g, PRODUCT)
        if has(g, p, RDF_TYPE, product_type)
        and has(g, p, FEATURE_PROP, f1)
        and not has(g, p, FEATURE_PROP, f2_excluded)
        and (number(g, p, NUM1) or 0) > x
        and (number(g, p, NUM3) or float("inf")) < y
    }


def q4(g: Graph, product_type: Iri, f1: Iri, f2: Iri, f3: Iri,
       x: float, y: float) -> set[Iri]:
    """Type + one feature and a union over two alternatives."""
    return {
        p for p in subjects_of_type(g, PRODUCT)
        if has(g, p, RDF_TYPE, product_type)
        and has(g, p, FEATURE_PROP, f1)
        and (has(g, p, FEATURE_PROP, f2) or has(g, p, FEATURE_PROP, f3))
        and (number(g, p, NUM1) or 0) > x
        and (number(g, p, NUM2) or 0) > y
    }


def q5(g: Graph, product: Iri) -> set[Iri]:
    """Products with nearby numeric properties (the client-side arithmetic)."""
    n1 = number(g, product, NUM1)
    n2 = number(g, product, NUM2)
    out = set()
    for p in subjects_of_type(g, PRODUCT):
        if p == product:
            continue
        pn1 = number(g, p, NUM1)
        pn2 = number(g, p, NUM2)
        if pn1 is None or pn2 is None:
            continue
        if abs(pn1 - n1) < 120 and abs(pn2 - n2) < 170:
            out.add(p)
    return out


def q6(g: Graph, word: str) -> set[Iri]:
    """Label matched by an (unanchored) regular expression."""
    import re
    pattern = re.compile(word)
    out = set()
    for p in subjects_of_type(g, PRODUCT):
        for o in objects(g, p, b("label")):
            if isinstance(o, Literal) and pattern.search(o.lexical):
                out.add(p)
    return out


def q7_offers(g: Graph, product: Iri, current_date_ms: int) -> set[Iri]:
    return {
        o for o in subjects_of_type(g, b("Offer"))
        if has(g, o, b("product"), product)
        and (valid_to_millis(g, o) or 0) > current_date_ms
    }


def q7_reviews(g: Graph, product: Iri) -> set[Iri]:
    return {
        r for r in subjects_of_type(g, b("Review"))
        if has(g, r, b("reviewFor"), product)
    }


def q8(g: Graph, product: Iri) -> set[Iri]:
    """Reviews for the product carrying an English text."""
    return {
        r for r in q7_reviews(g, product)
        if any(isinstance(o, Literal) and o.lang == "en"
               for o in objects(g, r, b("text")))
    }


def q9_reviewer(g: Graph, review: Iri) -> Iri:
    (person,) = [o for o in objects(g, review, b("reviewer")) if isinstance(o, Iri)]
    return person


def q10(g: Graph, product: Iri, current_date_ms: int) -> set[Iri]:
    return {
        o for o in q7_offers(g, product, current_date_ms)
        if (number(g, o, b("deliveryDays")) or float("inf")) <= 3
    }


def entity_covers_outgoing(g: Graph, subject: Iri, entity: dict, ids, types_map) -> None:
    """Assert that every outgoing edge of `subject` shows up in the entity."""
    scalars = [v for v in entity.values() if not isinstance(v, list)]
    lists = [v for v in entity.values() if isinstance(v, list)]

    def anywhere(candidates) -> bool:
        for value in candidates:
            if value in scalars:
                return True
            for items in lists:
                if value in items:
                    return True
        return False

    for t in g.triples:
        if t.subject != subject:
            continue
        o = t.object
        if t.predicate == RDF_TYPE:
            assert ids.id_of(o) in entity["type"], t
        elif isinstance(o, Literal):
            if o.lang is not None:
                assert any({"string": o.lexical, "lang": o.lang} in items
                           for items in lists), t
            else:
                candidates = [o.lexical]
                for convert in (int, float):
                    try:
                        candidates.append(convert(o.lexical))
                    except ValueError:
                        pass
                if o.datatype is not None and o.datatype.value.endswith(("dateTime", "date")):
                    candidates.append(epoch_millis(o.lexical))
                assert anywhere(candidates), t
        elif types_map.get(o):
            assert anywhere([ids.id_of(o), str(ids.id_of(o))]), t
        else:
            assert anywhere([o.value]), t
