"""Instance alignment by token-cosine similarity over name properties.

Candidate scoring takes the maximum cosine over all configured property
pairs (cross pairs included by default: a forename compared against a full
label is what surfaces near-matches between catalogues that structure
names differently).  Scores stay raw binary floats and are printed with
shortest round-trip formatting.
"""

from __future__ import annotations

import configparser
import csv
import io
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .prefixes import DEFAULT_PREFIXES, OWL_SAMEAS, RDF_TYPE
from .rdf import IRI, LITERAL, Graph, Triple, iri

ACCEPTED = "accepted"
REVIEW = "review"
REJECTED = "rejected"

_TOKEN_SPLIT_RE = re.compile(r"[\s\-,.]+")


class LinkConfigError(ValueError):
    pass


@dataclass(frozen=True)
class LinkConfig:
    source_class: str
    target_class: str
    compare_properties: tuple[tuple[str, str], ...]
    accept_threshold: float
    review_threshold: float
    use_blocking: bool = False

    def __post_init__(self):
        if not 0.0 <= self.review_threshold <= self.accept_threshold <= 1.0:
            raise LinkConfigError(
                "thresholds must satisfy 0 <= review <= accept <= 1, got "
                f"review={self.review_threshold} accept={self.accept_threshold}"
            )
        if not self.compare_properties:
            raise LinkConfigError("at least one property pair is required")


@dataclass(frozen=True)
class PairEvidence:
    source_property: str
    target_property: str
    source_value: str
    target_value: str
    source_tokens: frozenset[str]
    target_tokens: frozenset[str]
    score: float


@dataclass(frozen=True)
class LinkCandidate:
    source: str
    target: str
    score: float
    evidence: tuple[PairEvidence, ...]
    status: str


def tokenize_name(value: str) -> frozenset[str]:
    """Lowercased tokens split on whitespace, hyphen, comma, and period."""
    return frozenset(t for t in _TOKEN_SPLIT_RE.split(value.lower()) if t)


def cosine(a: frozenset[str] | set[str], b: frozenset[str] | set[str]) -> float:
    """|a ∩ b| / sqrt(|a|·|b|); 0.0 when either side is empty."""
    if not a or not b:
        return 0.0
    return len(a & b) / math.sqrt(len(a) * len(b))


def _typed_instances(g: Graph, class_iri: str) -> list[str]:
    return sorted(
        t.s.value
        for t in g.match(None, iri(RDF_TYPE), iri(class_iri))
        if t.s.kind == IRI
    )


def _property_values(g: Graph, instance: str, prop: str) -> list[str]:
    return sorted(
        t.o.value for t in g.match(iri(instance), iri(prop), None) if t.o.kind == LITERAL
    )


def _score_pair(
    ga: Graph, gb: Graph, source: str, target: str, cfg: LinkConfig
) -> tuple[float, tuple[PairEvidence, ...]]:
    best = 0.0
    evidence = []
    for sprop, tprop in cfg.compare_properties:
        svalues = _property_values(ga, source, sprop)
        tvalues = _property_values(gb, target, tprop)
        if not svalues or not tvalues:
            continue  # missing values contribute 0
        pair_best: Optional[PairEvidence] = None
        for sval in svalues:
            stoks = tokenize_name(sval)
            for tval in tvalues:
                ttoks = tokenize_name(tval)
                score = cosine(stoks, ttoks)
                if pair_best is None or score > pair_best.score:
                    pair_best = PairEvidence(sprop, tprop, sval, tval, stoks, ttoks, score)
        evidence.append(pair_best)
        best = max(best, pair_best.score)
    return best, tuple(evidence)


def _blocked_pairs(
    ga: Graph, gb: Graph, sources: list[str], targets: list[str], cfg: LinkConfig
) -> list[tuple[str, str]]:
    """Token-index candidate cut; exact for any positive review threshold,
    because a positive cosine needs at least one shared token."""
    index: dict[str, set[str]] = {}
    for target in targets:
        for _, tprop in cfg.compare_properties:
            for value in _property_values(gb, target, tprop):
                for token in tokenize_name(value):
                    index.setdefault(token, set()).add(target)
    pairs = []
    for source in sources:
        hits: set[str] = set()
        for sprop, _ in cfg.compare_properties:
            for value in _property_values(ga, source, sprop):
                for token in tokenize_name(value):
                    hits |= index.get(token, set())
        pairs.extend((source, target) for target in sorted(hits))
    return pairs


def find_links(ga: Graph, gb: Graph, cfg: LinkConfig) -> list[LinkCandidate]:
    """Score typed instance pairs; keep those at or above the review threshold.

    Output is sorted by descending score, then by the IRI pair.
    """
    sources = _typed_instances(ga, cfg.source_class)
    targets = _typed_instances(gb, cfg.target_class)
    if cfg.use_blocking and cfg.review_threshold > 0.0:
        pairs = _blocked_pairs(ga, gb, sources, targets, cfg)
    else:
        pairs = [(s, t) for s in sources for t in targets]
    candidates = []
    for source, target in pairs:
        score, evidence = _score_pair(ga, gb, source, target, cfg)
        if score < cfg.review_threshold:
            continue
        status = ACCEPTED if score >= cfg.accept_threshold else REVIEW
        candidates.append(LinkCandidate(source, target, score, evidence, status))
    candidates.sort(key=lambda c: (-c.score, c.source, c.target))
    return candidates


def emit_review_report(candidates: Iterable[LinkCandidate]) -> str:
    """CSV for the human pass: both IRIs, compared values, score, status."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(
        [
            "source", "target", "score", "status",
            "best_source_property", "best_target_property",
            "source_values", "target_values",
        ]
    )
    for c in candidates:
        best = max(c.evidence, key=lambda e: e.score) if c.evidence else None
        source_values = "; ".join(sorted({e.source_value for e in c.evidence}))
        target_values = "; ".join(sorted({e.target_value for e in c.evidence}))
        writer.writerow(
            [
                c.source,
                c.target,
                repr(c.score),
                c.status,
                best.source_property if best else "",
                best.target_property if best else "",
                source_values,
                target_values,
            ]
        )
    return buf.getvalue()


def sameas_triples(candidates: Iterable[LinkCandidate]) -> list[Triple]:
    """owl:sameAs statements for the accepted candidates."""
    return [
        Triple(iri(c.source), iri(OWL_SAMEAS), iri(c.target))
        for c in candidates
        if c.status == ACCEPTED
    ]


# ---------------------------------------------------------------------------
# Config file
# ---------------------------------------------------------------------------

def _expand(value: str, prefixes: Mapping[str, str]) -> str:
    value = value.strip()
    if value.startswith("http://") or value.startswith("https://") or value.startswith("urn:"):
        return value
    prefix, sep, local = value.partition(":")
    if sep and prefix in prefixes:
        return prefixes[prefix] + local
    raise LinkConfigError(f"cannot resolve property or class IRI: {value!r}")


def load_link_config(path: str | Path, prefixes: Mapping[str, str] | None = None) -> LinkConfig:
    """INI-style config: [classes], [properties] with cross/paired mode,
    [thresholds], optional [options] blocking flag."""
    prefixes = dict(DEFAULT_PREFIXES if prefixes is None else prefixes)
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise LinkConfigError(f"cannot read link config: {path}")
    try:
        source_class = _expand(parser["classes"]["source"], prefixes)
        target_class = _expand(parser["classes"]["target"], prefixes)
        source_props = [
            _expand(v, prefixes) for v in parser["properties"]["source"].split(",") if v.strip()
        ]
        target_props = [
            _expand(v, prefixes) for v in parser["properties"]["target"].split(",") if v.strip()
        ]
        mode = parser["properties"].get("mode", "cross").strip().lower()
        try:
            accept = float(parser["thresholds"]["accept"])
            review = float(parser["thresholds"]["review"])
        except ValueError as bad:
            raise LinkConfigError(f"thresholds must be numbers: {bad}") from None
    except KeyError as missing:
        raise LinkConfigError(f"link config is missing section or key: {missing}") from None
    if mode == "cross":
        pairs = tuple((s, t) for s in source_props for t in target_props)
    elif mode == "paired":
        if len(source_props) != len(target_props):
            raise LinkConfigError("paired mode needs equally long property lists")
        pairs = tuple(zip(source_props, target_props))
    else:
        raise LinkConfigError(f"unknown property mode: {mode!r}")
    blocking = parser.getboolean("options", "blocking", fallback=False)
    return LinkConfig(
        source_class=source_class,
        target_class=target_class,
        compare_properties=pairs,
        accept_threshold=accept,
        review_threshold=review,
        use_blocking=blocking,
    )
