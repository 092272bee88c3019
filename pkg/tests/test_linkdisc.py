"""Link discovery checks against an exhaustive double-loop oracle.

The oracle re-implements tokenizing and scoring inline (plain splits and
set arithmetic) and enumerates every instance pair, so candidate
generation, thresholds, blocking, and ordering are all checked against an
independent path.
"""

from __future__ import annotations

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kgfuse import fixtures
from kgfuse.linkdisc import (
    ACCEPTED,
    LinkConfig,
    LinkConfigError,
    cosine,
    emit_review_report,
    find_links,
    load_link_config,
    sameas_triples,
    tokenize_name,
)
from kgfuse.prefixes import HELMSTEDT_NS, LEIPZIG_NS, OWL_SAMEAS, RDF_TYPE, RDFS_LABEL
from kgfuse.rdf import Graph, Triple, iri, literal

PAPER_SCORE = 0.8164965809277261

PERSON_CONFIG = LinkConfig(
    source_class=LEIPZIG_NS + "Person",
    target_class=HELMSTEDT_NS + "Person",
    compare_properties=tuple(
        (s, t)
        for s in (RDFS_LABEL, LEIPZIG_NS + "surname", LEIPZIG_NS + "forename")
        for t in (RDFS_LABEL, HELMSTEDT_NS + "surname", HELMSTEDT_NS + "forename")
    ),
    accept_threshold=0.8,
    review_threshold=0.5,
)


# --- scalar pieces ---------------------------------------------------------------

def test_tokenize_empty():
    assert tokenize_name("") == frozenset()


def test_tokenize_two_and_three_token_names():
    assert tokenize_name("Heinrich Matthias") == {"heinrich", "matthias"}
    assert tokenize_name("Andreas Heinrich Matthias") == {"andreas", "heinrich", "matthias"}


def test_tokenize_separators_and_duplicates():
    assert tokenize_name("Meyer, Hans-Georg.  hans") == {"meyer", "hans", "georg"}


def test_cosine_identity_and_empty():
    assert cosine({"a", "b"}, {"a", "b"}) == 1.0
    assert cosine(frozenset(), {"x"}) == 0.0


def test_cosine_reproduces_printed_similarity():
    score = cosine({"heinrich", "matthias"}, {"andreas", "heinrich", "matthias"})
    assert repr(score) == "0.8164965809277261"
    assert score == 2 / math.sqrt(6)


@settings(max_examples=300)
@given(
    st.sets(st.text("abcdef", min_size=1, max_size=3), max_size=8),
    st.sets(st.text("abcdef", min_size=1, max_size=3), max_size=8),
)
def test_cosine_bounds_and_symmetry(a, b):
    s = cosine(a, b)
    assert 0.0 <= s <= 1.0
    assert s == cosine(b, a)
    if a:
        assert cosine(a, a) == 1.0


# --- the two-person fixture --------------------------------------------------------

def test_two_person_fixture_accepts_exactly_the_near_match():
    ga = fixtures.persons_leipzig()
    gb = fixtures.persons_helmstedt()
    candidates = find_links(ga, gb, PERSON_CONFIG)
    accepted = [c for c in candidates if c.status == ACCEPTED]
    assert len(accepted) == 1
    c = accepted[0]
    assert c.source == LEIPZIG_NS + "heinrichmatthiasheinrichs"
    assert c.target == HELMSTEDT_NS + "13084"
    assert repr(c.score) == "0.8164965809277261"
    best = max(c.evidence, key=lambda e: e.score)
    assert best.source_property == LEIPZIG_NS + "forename"
    assert best.target_property == RDFS_LABEL


def test_full_match_threshold_accepts_nothing():
    ga = fixtures.persons_leipzig()
    gb = fixtures.persons_helmstedt()
    cfg = LinkConfig(
        source_class=PERSON_CONFIG.source_class,
        target_class=PERSON_CONFIG.target_class,
        compare_properties=PERSON_CONFIG.compare_properties,
        accept_threshold=1.0,
        review_threshold=0.5,
    )
    candidates = find_links(ga, gb, cfg)
    assert [c for c in candidates if c.status == ACCEPTED] == []
    # the near match is still surfaced for review
    assert any(c.score == PAPER_SCORE for c in candidates)


def test_exact_token_match_scores_one():
    ga = Graph()
    gb = Graph()
    ga.add(Triple(iri("urn:a:1"), iri(RDF_TYPE), iri(PERSON_CONFIG.source_class)))
    ga.add(Triple(iri("urn:a:1"), iri(RDFS_LABEL), literal("Johann Arndt")))
    gb.add(Triple(iri("urn:b:1"), iri(RDF_TYPE), iri(PERSON_CONFIG.target_class)))
    gb.add(Triple(iri("urn:b:1"), iri(RDFS_LABEL), literal("Arndt, Johann")))
    cfg = LinkConfig(
        source_class=PERSON_CONFIG.source_class,
        target_class=PERSON_CONFIG.target_class,
        compare_properties=((RDFS_LABEL, RDFS_LABEL),),
        accept_threshold=1.0,
        review_threshold=0.5,
    )
    candidates = find_links(ga, gb, cfg)
    assert len(candidates) == 1 and candidates[0].status == ACCEPTED
    assert candidates[0].score == 1.0


def test_graphs_without_typed_instances_produce_empty_list():
    assert find_links(Graph(), Graph(), PERSON_CONFIG) == []


# --- synthetic corpus vs oracle -------------------------------------------------------

FORENAMES = [
    "johann", "caspar", "andreas", "heinrich", "matthias", "georg", "paul",
    "martin", "nikolaus", "valentin", "christoph", "daniel",
]
SURNAMES = [
    "arndt", "westphal", "heinrichs", "meyer", "schulze", "krause", "vogel",
    "brandt", "winkler", "lorenz",
]


def _synthetic_side(rng: random.Random, ns: str, class_iri: str, n: int) -> Graph:
    g = Graph()
    for i in range(n):
        inst = iri(f"{ns}{i:03d}")
        g.add(Triple(inst, iri(RDF_TYPE), iri(class_iri)))
        forename = " ".join(
            rng.sample(FORENAMES, rng.choice([1, 1, 2]))
        ).title()
        surname = rng.choice(SURNAMES).title()
        g.add(Triple(inst, iri(ns + "forename"), literal(forename)))
        g.add(Triple(inst, iri(ns + "surname"), literal(surname)))
        g.add(Triple(inst, iri(RDFS_LABEL), literal(f"{forename} {surname}")))
    return g


def _synthetic_config(review: float = 0.5, accept: float = 0.8, blocking: bool = False):
    a_ns = "urn:cat:a:"
    b_ns = "urn:cat:b:"
    props_a = (RDFS_LABEL, a_ns + "surname", a_ns + "forename")
    props_b = (RDFS_LABEL, b_ns + "surname", b_ns + "forename")
    return LinkConfig(
        source_class=a_ns + "Person",
        target_class=b_ns + "Person",
        compare_properties=tuple((s, t) for s in props_a for t in props_b),
        accept_threshold=accept,
        review_threshold=review,
        use_blocking=blocking,
    )


def _oracle_links(ga: Graph, gb: Graph, cfg: LinkConfig):
    def toks(value: str) -> set[str]:
        cleaned = value.lower()
        for ch in ",.-":
            cleaned = cleaned.replace(ch, " ")
        return {piece for piece in cleaned.split() if piece}

    def values(g: Graph, inst: str, prop: str) -> list[str]:
        return sorted(
            t.o.value
            for t in g.triples
            if t.s.value == inst and t.s.kind == "iri" and t.p.value == prop and t.o.kind == "literal"
        )

    def typed(g: Graph, cls: str) -> list[str]:
        return sorted(
            t.s.value
            for t in g.triples
            if t.p.value == RDF_TYPE and t.o.kind == "iri" and t.o.value == cls and t.s.kind == "iri"
        )

    rows = []
    for s in typed(ga, cfg.source_class):
        for t in typed(gb, cfg.target_class):
            best = 0.0
            for sprop, tprop in cfg.compare_properties:
                for sval in values(ga, s, sprop):
                    for tval in values(gb, t, tprop):
                        a, b = toks(sval), toks(tval)
                        if a and b:
                            best = max(best, len(a & b) / math.sqrt(len(a) * len(b)))
            if best >= cfg.review_threshold:
                status = ACCEPTED if best >= cfg.accept_threshold else "review"
                rows.append((s, t, best, status))
    rows.sort(key=lambda r: (-r[2], r[0], r[1]))
    return rows


def test_find_links_matches_exhaustive_oracle_on_synthetic_corpus():
    rng = random.Random(1683)
    ga = _synthetic_side(rng, "urn:cat:a:", "urn:cat:a:Person", 50)
    gb = _synthetic_side(rng, "urn:cat:b:", "urn:cat:b:Person", 50)
    cfg = _synthetic_config()
    got = [(c.source, c.target, c.score, c.status) for c in find_links(ga, gb, cfg)]
    expected = _oracle_links(ga, gb, cfg)
    assert got == expected
    assert expected  # corpus is dense enough to produce candidates


def test_blocking_mode_is_lossless_for_positive_review_threshold():
    rng = random.Random(77)
    ga = _synthetic_side(rng, "urn:cat:a:", "urn:cat:a:Person", 40)
    gb = _synthetic_side(rng, "urn:cat:b:", "urn:cat:b:Person", 40)
    plain = find_links(ga, gb, _synthetic_config())
    blocked = find_links(ga, gb, _synthetic_config(blocking=True))
    assert plain == blocked


def test_accept_threshold_monotonicity():
    rng = random.Random(99)
    ga = _synthetic_side(rng, "urn:cat:a:", "urn:cat:a:Person", 30)
    gb = _synthetic_side(rng, "urn:cat:b:", "urn:cat:b:Person", 30)
    previous: set[tuple[str, str]] | None = None
    for accept in (0.5, 0.7, 0.9, 1.0):
        cfg = _synthetic_config(review=0.5, accept=accept)
        candidates = find_links(ga, gb, cfg)
        accepted = {(c.source, c.target) for c in candidates if c.status == ACCEPTED}
        assert accepted == {
            (c.source, c.target) for c in candidates if c.score >= accept
        }
        if previous is not None:
            assert accepted <= previous
        previous = accepted


def test_scores_are_symmetric_under_swap():
    ga = fixtures.persons_leipzig()
    gb = fixtures.persons_helmstedt()
    forward = find_links(ga, gb, PERSON_CONFIG)
    swapped_cfg = LinkConfig(
        source_class=PERSON_CONFIG.target_class,
        target_class=PERSON_CONFIG.source_class,
        compare_properties=tuple((t, s) for s, t in PERSON_CONFIG.compare_properties),
        accept_threshold=PERSON_CONFIG.accept_threshold,
        review_threshold=PERSON_CONFIG.review_threshold,
    )
    backward = find_links(gb, ga, swapped_cfg)
    assert {(c.source, c.target, c.score) for c in forward} == {
        (c.target, c.source, c.score) for c in backward
    }


def test_emitted_scores_stay_within_review_band():
    rng = random.Random(3)
    ga = _synthetic_side(rng, "urn:cat:a:", "urn:cat:a:Person", 25)
    gb = _synthetic_side(rng, "urn:cat:b:", "urn:cat:b:Person", 25)
    for c in find_links(ga, gb, _synthetic_config(review=0.5)):
        assert 0.5 <= c.score <= 1.0


# --- report and sameAs ----------------------------------------------------------------

def test_empty_candidates_give_header_only_csv():
    report = emit_review_report([])
    assert report.splitlines() == [
        "source,target,score,status,best_source_property,best_target_property,"
        "source_values,target_values"
    ]


def test_report_contains_full_precision_score():
    candidates = find_links(fixtures.persons_leipzig(), fixtures.persons_helmstedt(), PERSON_CONFIG)
    report = emit_review_report(candidates)
    lines = report.splitlines()
    assert len(lines) == 1 + len(candidates)
    assert "0.8164965809277261" in lines[1]
    assert "accepted" in lines[1]


def test_report_row_count_matches_oracle():
    rng = random.Random(11)
    ga = _synthetic_side(rng, "urn:cat:a:", "urn:cat:a:Person", 35)
    gb = _synthetic_side(rng, "urn:cat:b:", "urn:cat:b:Person", 35)
    cfg = _synthetic_config()
    report = emit_review_report(find_links(ga, gb, cfg))
    assert len(report.splitlines()) == 1 + len(_oracle_links(ga, gb, cfg))


def test_sameas_triples_only_for_accepted():
    candidates = find_links(fixtures.persons_leipzig(), fixtures.persons_helmstedt(), PERSON_CONFIG)
    links = sameas_triples(candidates)
    assert len(links) == 1
    assert links[0].p == iri(OWL_SAMEAS)


# --- config file ------------------------------------------------------------------------

def test_bundled_link_config_parses():
    cfg = load_link_config(fixtures.fixture_path("link_person_names.cfg"))
    assert cfg.source_class == LEIPZIG_NS + "Person"
    assert cfg.accept_threshold == 0.8
    assert cfg.review_threshold == 0.5
    assert len(cfg.compare_properties) == 9
    assert (RDFS_LABEL, RDFS_LABEL) in cfg.compare_properties


def test_invalid_threshold_order_rejected():
    with pytest.raises(LinkConfigError):
        LinkConfig(
            source_class="urn:a:C",
            target_class="urn:b:C",
            compare_properties=((RDFS_LABEL, RDFS_LABEL),),
            accept_threshold=0.5,
            review_threshold=0.8,
        )


def test_paired_mode_config(tmp_path):
    cfg_file = tmp_path / "link.cfg"
    cfg_file.write_text(
        """
[classes]
source = urn:a:Person
target = urn:b:Person

[properties]
source = rdfs:label, urn:a:surname
target = rdfs:label, urn:b:surname
mode = paired

[thresholds]
accept = 0.9
review = 0.4
"""
    )
    cfg = load_link_config(cfg_file)
    assert cfg.compare_properties == (
        (RDFS_LABEL, RDFS_LABEL),
        ("urn:a:surname", "urn:b:surname"),
    )
