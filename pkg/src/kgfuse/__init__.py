"""kgfuse: fuse, link, enrich, version and query small RDF catalogues."""

from .rdf import Graph, Term, Triple, blank, iri, literal, parse_turtle, serialize_canonical

__all__ = [
    "Graph",
    "Term",
    "Triple",
    "blank",
    "iri",
    "literal",
    "parse_turtle",
    "serialize_canonical",
]

__version__ = "0.1.0"
