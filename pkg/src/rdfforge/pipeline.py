"""End-to-end orchestration: parse, analyze, model, populate."""

from __future__ import annotations

from dataclasses import dataclass

from .analysis import (
    ClassInfo,
    DatasetStats,
    PropertyProfile,
    classify_properties,
    compute_stats,
    discover_classes,
)
from .rdf_core import DEFAULT_BASE, Graph, Iri, skolemize
from .relational_model import (
    Record,
    RelationalSchema,
    ResourceIdMap,
    assign_ids,
    build_schema,
    populate,
)


@dataclass
class PipelineResult:
    graph: Graph
    classes: dict[Iri, ClassInfo]
    profiles: list[PropertyProfile]
    orphan_statements: int
    schema: RelationalSchema
    ids: ResourceIdMap
    records: list[Record]

    def stats(self) -> DatasetStats:
        return compute_stats(self.graph, self.classes, self.profiles, self.schema)


def run_pipeline(g: Graph, base: str = DEFAULT_BASE,
                 deterministic: bool = False) -> PipelineResult:
    g = skolemize(g, base=base, deterministic=deterministic)
    classes = discover_classes(g)
    profiles, orphans = classify_properties(g, classes)
    schema = build_schema(classes, profiles, base=base, deterministic=deterministic,
                          orphan_statements=orphans)
    ids = assign_ids(g)
    records = populate(g, schema, ids, classes)
    return PipelineResult(
        graph=g, classes=classes, profiles=profiles, orphan_statements=orphans,
        schema=schema, ids=ids, records=records,
    )
