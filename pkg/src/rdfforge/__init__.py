"""rdfforge: RDF(S) datasets to relational databases with a CRUD REST API."""

__version__ = "0.1.0"
