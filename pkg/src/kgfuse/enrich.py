"""GND standardization, endpoint lookups, and the lazy per-identifier extractor.

Identifiers arrive either as bare GND numbers or as the national library's
URL form; both normalize to the bare number.  Extraction fetches one
identifier at a time, strictly in input order, waiting the configured
politeness delay between requests, and never lets one failing item abort
the batch.  Transports are injectable: the recorded transport replays
response files from a fixture directory so no test touches the network.
"""

from __future__ import annotations

import hashlib
import json
import re
import time
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional, Protocol

from .prefixes import OWL_SAMEAS
from .rdf import LITERAL, Graph, RdfError, Term, Triple, iri
from .sparql import QueryTemplate, instantiate

DNB_GND_NAMESPACE = "https://d-nb.info/gnd"

_GND_RE = re.compile(r"^\d$|^\d[\d-]*[\dX]$")
_GND_URL_RE = re.compile(r"^https?://d-nb\.info/gnd/([^/?#]+)/?$")

SPARQL_ENDPOINT = "sparql-endpoint"
LINKED_DATA_DOCUMENT = "linked-data-document"

_ACCEPT_RDF = "text/turtle, application/n-triples;q=0.9"


class GndError(ValueError):
    pass


class EndpointConfigError(ValueError):
    pass


class TransportError(RuntimeError):
    pass


class TransportTimeout(TransportError):
    pass


class MissingRecordingError(TransportError):
    """A URL was requested that the fixture directory does not contain."""


@dataclass(frozen=True)
class GndId:
    number: str

    def __post_init__(self):
        if not _GND_RE.match(self.number) or "--" in self.number:
            raise GndError(f"not a valid GND number: {self.number!r}")

    def __str__(self):
        return self.number


def normalize_gnd(value: str) -> GndId:
    """Bare number or DNB URL form -> bare number; anything else fails."""
    candidate = value.strip()
    m = _GND_URL_RE.match(candidate)
    if m:
        candidate = m.group(1)
    try:
        return GndId(candidate)
    except GndError:
        raise GndError(f"neither a GND number nor a DNB GND URL: {value!r}") from None


def dnb_document_url(gnd: GndId) -> str:
    return f"{DNB_GND_NAMESPACE}/{gnd.number}/about/lds"


WIKIDATA_LOOKUP = QueryTemplate.from_text(
    "PREFIX wdt: <http://www.wikidata.org/prop/direct/>\n"
    'CONSTRUCT { ?person ?p ?o } WHERE { ?person wdt:P227 "{gnd}" . ?person ?p ?o }'
)

DBPEDIA_LOOKUP = QueryTemplate.from_text(
    "PREFIX owl: <http://www.w3.org/2002/07/owl#>\n"
    "CONSTRUCT { ?person ?p ?o } WHERE { "
    "?person owl:sameAs <https://d-nb.info/gnd/{gnd}> . ?person ?p ?o }"
)


@dataclass(frozen=True)
class EndpointSpec:
    name: str
    kind: str
    base_url: str
    lookup_template: Optional[QueryTemplate] = None
    document_url_template: Optional[str] = None
    politeness_delay_ms: int = 1000
    timeout_ms: int = 10000
    max_retries: int = 2
    graph_name: Optional[str] = None

    def __post_init__(self):
        if self.kind not in (SPARQL_ENDPOINT, LINKED_DATA_DOCUMENT):
            raise EndpointConfigError(f"unknown endpoint kind: {self.kind!r}")
        if self.politeness_delay_ms <= 0 or self.timeout_ms <= 0:
            raise EndpointConfigError("politeness delay and timeout must be positive")
        if self.max_retries < 0:
            raise EndpointConfigError("max_retries cannot be negative")
        if self.kind == SPARQL_ENDPOINT:
            if self.lookup_template is None:
                raise EndpointConfigError("sparql endpoints need a lookup template")
            if "gnd" not in self.lookup_template.placeholders:
                raise EndpointConfigError("lookup template must reference {gnd}")
        else:
            template = self.document_url_template
            if not template or "{gnd}" not in template:
                raise EndpointConfigError("document endpoints need a {gnd} URL template")

    @property
    def graph(self) -> str:
        return self.graph_name or f"urn:x-extract:{self.name}"


def builtin_endpoint(name: str, **overrides) -> EndpointSpec:
    """dnb / wikidata / dbpedia with their usual URLs and lookup shapes."""
    table = {
        "dnb": dict(
            kind=LINKED_DATA_DOCUMENT,
            base_url=DNB_GND_NAMESPACE,
            document_url_template=DNB_GND_NAMESPACE + "/{gnd}/about/lds",
        ),
        "wikidata": dict(
            kind=SPARQL_ENDPOINT,
            base_url="https://query.wikidata.org/sparql",
            lookup_template=WIKIDATA_LOOKUP,
        ),
        "dbpedia": dict(
            kind=SPARQL_ENDPOINT,
            base_url="https://dbpedia.org/sparql",
            lookup_template=DBPEDIA_LOOKUP,
        ),
    }
    if name not in table:
        raise EndpointConfigError(
            f"unknown endpoint {name!r}; expected one of {sorted(table)}"
        )
    params = dict(table[name])
    params.update(overrides)
    return EndpointSpec(name=name, **params)


def build_lookup_query(endpoint: EndpointSpec, gnd: GndId) -> str:
    if endpoint.kind != SPARQL_ENDPOINT:
        raise EndpointConfigError(f"endpoint {endpoint.name!r} is not a SPARQL endpoint")
    return instantiate(endpoint.lookup_template, {"gnd": gnd.number})


def request_url(endpoint: EndpointSpec, gnd: GndId) -> str:
    if endpoint.kind == SPARQL_ENDPOINT:
        query = build_lookup_query(endpoint, gnd)
        return endpoint.base_url + "?" + urllib.parse.urlencode({"query": query})
    return instantiate(
        QueryTemplate.from_text(endpoint.document_url_template), {"gnd": gnd.number}
    )


# ---------------------------------------------------------------------------
# Transports
# ---------------------------------------------------------------------------

class Transport(Protocol):
    def get(self, url: str, accept: str, timeout_s: float) -> tuple[int, str]:
        ...


class HttpTransport:
    """urllib-based GET client."""

    user_agent = "kgfuse/0.1"

    def get(self, url: str, accept: str, timeout_s: float) -> tuple[int, str]:
        request = urllib.request.Request(
            url, headers={"Accept": accept, "User-Agent": self.user_agent}
        )
        try:
            with urllib.request.urlopen(request, timeout=timeout_s) as response:
                return response.status, response.read().decode("utf-8", "replace")
        except urllib.error.HTTPError as err:
            return err.code, err.read().decode("utf-8", "replace")
        except urllib.error.URLError as err:
            if isinstance(err.reason, TimeoutError):
                raise TransportTimeout(str(err)) from err
            raise TransportError(str(err)) from err
        except TimeoutError as err:
            raise TransportTimeout(str(err)) from err


def _request_key(url: str) -> str:
    return hashlib.sha256(url.encode("utf-8")).hexdigest()[:16]


class RecordedTransport:
    """Replays responses from a directory: index.json plus one file per request.

    The index maps the request hash to status, body file, and an optional
    timeout marker.  Every served request is appended to `requests`.
    """

    INDEX = "index.json"

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.requests: list[str] = []
        self._index = self._load_index()

    def _load_index(self) -> dict:
        path = self.directory / self.INDEX
        if path.exists():
            return json.loads(path.read_text(encoding="utf-8"))
        return {}

    def _save_index(self) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self.directory / self.INDEX
        path.write_text(
            json.dumps(self._index, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    def record(
        self, url: str, body: str = "", status: int = 200, timeout: bool = False
    ) -> None:
        key = _request_key(url)
        self.directory.mkdir(parents=True, exist_ok=True)
        filename = f"{key}.resp"
        (self.directory / filename).write_text(body, encoding="utf-8")
        self._index[key] = {
            "url": url,
            "status": status,
            "file": filename,
            "timeout": timeout,
        }
        self._save_index()

    def get(self, url: str, accept: str, timeout_s: float) -> tuple[int, str]:
        self.requests.append(url)
        entry = self._index.get(_request_key(url))
        if entry is None:
            raise MissingRecordingError(f"no recorded response for {url}")
        if entry.get("timeout"):
            raise TransportTimeout(f"recorded timeout for {url}")
        body = (self.directory / entry["file"]).read_text(encoding="utf-8")
        return int(entry["status"]), body


# ---------------------------------------------------------------------------
# Lazy extraction
# ---------------------------------------------------------------------------

OK = "ok"
NOT_FOUND = "not-found"
FAILED = "failed"

ERROR_TIMEOUT = "timeout"
ERROR_HTTP = "http-status"
ERROR_PARSE = "parse-error"


@dataclass(frozen=True)
class ExtractionItem:
    gnd: str
    url: str
    outcome: str
    triple_count: int = 0
    error_class: Optional[str] = None
    attempts: int = 1
    elapsed_s: float = 0.0


@dataclass
class ExtractionReport:
    endpoint: str
    items: list[ExtractionItem] = field(default_factory=list)

    @property
    def ok_count(self) -> int:
        return sum(1 for i in self.items if i.outcome == OK)

    def to_csv(self) -> str:
        """Deterministic artifact: elapsed times stay on the report object
        so identical runs produce byte-identical files."""
        import csv
        import io

        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["gnd", "outcome", "triples", "error", "attempts"])
        for item in self.items:
            writer.writerow(
                [
                    item.gnd,
                    item.outcome,
                    item.triple_count,
                    item.error_class or "",
                    item.attempts,
                ]
            )
        return buf.getvalue()


def _fetch_once(
    endpoint: EndpointSpec,
    url: str,
    transport: Transport,
    sleep: Callable[[float], None],
) -> tuple[Optional[tuple[int, str]], Optional[str], int]:
    """GET with retries on timeout/5xx; returns (response, error_class, attempts)."""
    timeout_s = endpoint.timeout_ms / 1000.0
    backoff_s = endpoint.politeness_delay_ms / 1000.0
    attempts = 0
    while True:
        attempts += 1
        try:
            status, body = transport.get(url, _ACCEPT_RDF, timeout_s)
        except TransportTimeout:
            if attempts <= endpoint.max_retries:
                sleep(backoff_s)
                backoff_s *= 2
                continue
            return None, ERROR_TIMEOUT, attempts
        if status >= 500 and attempts <= endpoint.max_retries:
            sleep(backoff_s)
            backoff_s *= 2
            continue
        return (status, body), None, attempts


def lazy_extract(
    gnds: Iterable[GndId],
    endpoint: EndpointSpec,
    transport: Transport,
    sleep: Callable[[float], None] = time.sleep,
) -> tuple[Graph, ExtractionReport]:
    """One request per identifier, sequential, in input order.

    Per-item failures are recorded in the report and never abort the batch;
    the returned graph is the union of everything that parsed.
    """
    graph = Graph(name=endpoint.graph)
    report = ExtractionReport(endpoint=endpoint.name)
    delay_s = endpoint.politeness_delay_ms / 1000.0
    for position, gnd in enumerate(gnds):
        if position:
            sleep(delay_s)
        url = request_url(endpoint, gnd)
        started = time.perf_counter()
        response, error_class, attempts = _fetch_once(endpoint, url, transport, sleep)
        outcome = FAILED
        count = 0
        if response is not None:
            status, body = response
            if status == 404:
                outcome, error_class = NOT_FOUND, None
            elif status != 200:
                outcome, error_class = FAILED, ERROR_HTTP
            else:
                try:
                    parsed = parse_response_body(body)
                except RdfError:
                    outcome, error_class = FAILED, ERROR_PARSE
                else:
                    count = len(parsed)
                    if count == 0:
                        outcome = NOT_FOUND
                    else:
                        outcome = OK
                        graph.add_all(parsed.triples)
        report.items.append(
            ExtractionItem(
                gnd=gnd.number,
                url=url,
                outcome=outcome,
                triple_count=count,
                error_class=error_class,
                attempts=attempts,
                elapsed_s=time.perf_counter() - started,
            )
        )
    return graph, report


def parse_response_body(body: str) -> Graph:
    """Responses are Turtle or N-Triples; both go through the same parser."""
    from .rdf import parse_turtle

    return parse_turtle(body)


# ---------------------------------------------------------------------------
# sameAs emission
# ---------------------------------------------------------------------------

@dataclass
class SameAsResult:
    triples: list[Triple]
    warnings: list[str]


def emit_sameas(
    local: Graph,
    gnd_property: str,
    external_subjects: Mapping[str, str],
) -> SameAsResult:
    """`local-instance owl:sameAs external-iri` per matching GND.

    `external_subjects` maps GND numbers to external IRIs.  Local instances
    sharing one GND are all linked and reported in the warnings.
    """
    normalized: dict[str, str] = {}
    for key, value in external_subjects.items():
        number = key.number if isinstance(key, GndId) else normalize_gnd(key).number
        normalized[number] = value
    by_number: dict[str, list[Term]] = {}
    bad: list[str] = []
    for t in local.match(None, iri(gnd_property), None):
        if t.o.kind != LITERAL:
            continue
        try:
            number = normalize_gnd(t.o.value).number
        except GndError:
            bad.append(t.o.value)
            continue
        by_number.setdefault(number, []).append(t.s)
    if bad:
        raise GndError(f"unparseable GND value(s) under {gnd_property}: {sorted(set(bad))}")
    sameas = iri(OWL_SAMEAS)
    triples: list[Triple] = []
    warnings: list[str] = []
    for number in sorted(by_number):
        external = normalized.get(number)
        if external is None:
            continue
        instances = sorted(by_number[number], key=lambda term: term.value)
        if len(instances) > 1:
            warnings.append(
                f"GND {number} is shared by {len(instances)} local instances: "
                + ", ".join(t.value for t in instances)
            )
        for instance in instances:
            triples.append(Triple(instance, sameas, iri(external)))
    return SameAsResult(triples=triples, warnings=warnings)
