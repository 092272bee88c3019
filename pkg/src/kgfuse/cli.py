"""Command-line pipeline: fuse, align, link, enrich, query, version, lint.

Every subcommand reads and writes plain files, so a whole run can be
reproduced from its inputs.  Exit codes: 0 success, 1 domain error (lint
findings under --strict, empty commit diff, bad data), 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import fusion, linkdisc
from .enrich import (
    EndpointConfigError,
    GndError,
    HttpTransport,
    RecordedTransport,
    builtin_endpoint,
    lazy_extract,
    normalize_gnd,
)
from .fusion import FusionError
from .linkdisc import LinkConfigError
from .prefixes import DEFAULT_PREFIXES, load_prefix_file
from .rdf import Graph, RdfError, parse_turtle, serialize_canonical
from .sparql import SparqlError, evaluate, parse_query
from .versioning import ChangeStore, StoreError, format_log


class UsageError(Exception):
    """Configuration problems that should exit with code 2."""


_ABSOLUTE_IRI_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:")


@dataclass
class PipelineConfig:
    """Validated file inputs for a pipeline stage.

    `graphs` pairs each input path with its vocabulary namespace (empty
    string when a stage does not need one).  `validate()` reports every
    missing path and malformed namespace at once.
    """

    graphs: list[tuple[str, str]] = field(default_factory=list)
    mapping_path: str | None = None
    link_config_path: str | None = None
    store_dir: str | None = None
    prefix_file: str | None = None

    def validate(self) -> None:
        problems = []
        for path, namespace in self.graphs:
            if not Path(path).exists():
                problems.append(f"graph file does not exist: {path}")
            if namespace and not _ABSOLUTE_IRI_RE.match(namespace):
                problems.append(f"namespace is not an absolute IRI: {namespace!r}")
        for label, path in (
            ("mapping file", self.mapping_path),
            ("link config", self.link_config_path),
            ("prefix file", self.prefix_file),
        ):
            if path is not None and not Path(path).exists():
                problems.append(f"{label} does not exist: {path}")
        if problems:
            raise UsageError("; ".join(problems))


def _read_graph(path: str) -> Graph:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"graph file does not exist: {path}")
    return parse_turtle(p.read_text(encoding="utf-8"))


def _read_graphs(spec: str) -> list[tuple[str, Graph]]:
    named = [
        (Path(part).stem, _read_graph(part)) for part in spec.split(",") if part
    ]
    if not named:
        raise UsageError("--graphs needs at least one file")
    return named


def _load_prefixes(path: str | None) -> dict[str, str]:
    if path is None:
        return dict(DEFAULT_PREFIXES)
    p = Path(path)
    if not p.exists():
        raise UsageError(f"prefix file does not exist: {path}")
    return load_prefix_file(p)


def _write_text(path: str, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8", newline="")


def _maybe_commit(args, graph: Graph, fallback_name: str) -> None:
    if not getattr(args, "store", None):
        return
    store = ChangeStore(args.store)
    name = graph.name or fallback_name
    commit = store.commit(name, graph, args.author, args.message)
    print(f"committed {commit.short_id} to {args.store}")


def _add_store_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--store", help="changeset store directory to commit the result into")
    parser.add_argument("--author", default="kgfuse", help="commit author (with --store)")
    parser.add_argument("--message", default="pipeline update", help="commit message (with --store)")


# --- subcommands -----------------------------------------------------------------


def cmd_query(args) -> int:
    graphs = [g for _, g in _read_graphs(args.graphs)]
    query_path = Path(args.query)
    if not query_path.exists():
        raise UsageError(f"query file does not exist: {args.query}")
    ast = parse_query(query_path.read_text(encoding="utf-8"), prefixes=_load_prefixes(args.prefixes))
    table = evaluate(ast, graphs)
    rendered = table.to_csv() if args.format == "csv" else table.to_text()
    if args.out:
        _write_text(args.out, rendered)
        print(f"wrote {len(table.rows)} rows to {args.out}")
    else:
        sys.stdout.write(rendered)
    return 0


def cmd_link(args) -> int:
    PipelineConfig(
        graphs=[(args.left, ""), (args.right, "")],
        link_config_path=args.config,
        prefix_file=args.prefixes,
    ).validate()
    cfg = linkdisc.load_link_config(args.config, prefixes=_load_prefixes(args.prefixes))
    left = _read_graph(args.left)
    right = _read_graph(args.right)
    candidates = linkdisc.find_links(left, right, cfg)
    _write_text(args.out, linkdisc.emit_review_report(candidates))
    accepted = [c for c in candidates if c.status == linkdisc.ACCEPTED]
    print(
        f"{len(candidates)} candidate(s): {len(accepted)} accepted, "
        f"{len(candidates) - len(accepted)} for review -> {args.out}"
    )
    if args.sameas:
        links = Graph(triples=linkdisc.sameas_triples(candidates))
        _write_text(args.sameas, serialize_canonical(links))
        print(f"wrote {len(links)} owl:sameAs triple(s) to {args.sameas}")
    return 0


def cmd_fuse(args) -> int:
    config = PipelineConfig(
        graphs=[(args.left, args.left_ns), (args.right, args.right_ns)],
        mapping_path=args.mapping,
        store_dir=args.store,
    )
    if not _ABSOLUTE_IRI_RE.match(args.target_ns):
        raise UsageError(f"target namespace is not an absolute IRI: {args.target_ns!r}")
    config.validate()
    left = _read_graph(args.left)
    right = _read_graph(args.right)
    renames = {}
    if args.mapping:
        try:
            renames = fusion.load_renames(args.mapping)
        except FusionError as err:
            raise UsageError(str(err)) from None
    left_vocab = fusion.extract_vocabulary(left)
    right_vocab = fusion.extract_vocabulary(right)
    prop_stats = fusion.compute_overlap(left_vocab[0], right_vocab[0])
    class_stats = fusion.compute_overlap(left_vocab[1], right_vocab[1])
    shifted_left = fusion.shift_namespace(
        left, fusion.plan_shift(left, args.left_ns, args.target_ns, renames, stats=prop_stats)
    )
    shifted_right = fusion.shift_namespace(
        right, fusion.plan_shift(right, args.right_ns, args.target_ns, renames, stats=prop_stats)
    )
    fused = Graph.union([shifted_left, shifted_right], name=args.graph_name)
    _write_text(args.out, serialize_canonical(fused))
    print(f"fused {len(left)} + {len(right)} triples into {len(fused)} -> {args.out}")
    print(
        f"properties: joint {prop_stats.joint}, disjoint {prop_stats.disjoint_a}/"
        f"{prop_stats.disjoint_b}, union {prop_stats.union_a}/{prop_stats.union_b}"
    )
    print(
        f"classes: joint {class_stats.joint}, disjoint {class_stats.disjoint_a}/"
        f"{class_stats.disjoint_b}, union {class_stats.union_a}/{class_stats.union_b}"
    )
    _maybe_commit(args, fused, args.graph_name)
    return 0


def cmd_align(args) -> int:
    named_graphs = _read_graphs(args.graphs)
    named = {name: g for name, g in named_graphs}
    report = fusion.vocabulary_report(named)
    lines = ["graph,properties,classes"]
    for name, (n_props, n_classes) in report.per_graph.items():
        print(f"{name}: {n_props} properties, {n_classes} classes")
        lines.append(f"{name},{n_props},{n_classes}")
    print(f"deduplicated union: {report.union_properties} properties, {report.union_classes} classes")
    lines.append(f"union,{report.union_properties},{report.union_classes}")
    if len(named_graphs) == 2:
        a, b = (g for _, g in named_graphs)
        props = fusion.compute_overlap(
            fusion.extract_vocabulary(a)[0], fusion.extract_vocabulary(b)[0]
        )
        classes = fusion.compute_overlap(
            fusion.extract_vocabulary(a)[1], fusion.extract_vocabulary(b)[1]
        )
        print(
            f"property overlap: joint {props.joint}, disjoint {props.disjoint_a}/"
            f"{props.disjoint_b}, union {props.union_a}/{props.union_b}"
        )
        print(
            f"class overlap: joint {classes.joint}, disjoint {classes.disjoint_a}/"
            f"{classes.disjoint_b}, union {classes.union_a}/{classes.union_b}"
        )
        lines.append(f"property-overlap,{props.joint},{props.disjoint_a},{props.disjoint_b}")
        lines.append(f"class-overlap,{classes.joint},{classes.disjoint_a},{classes.disjoint_b}")
    if args.out:
        _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_lint(args) -> int:
    graph = _read_graph(args.graph)
    languages = tuple(lang.strip() for lang in args.languages.split(",") if lang.strip())
    issues = fusion.lint_vocabulary(graph, required_languages=languages)
    for issue in issues:
        fix = f" (suggest: {issue.suggested_fix})" if issue.suggested_fix else ""
        print(f"{issue.kind}: {issue.subject}: {issue.detail}{fix}")
    print(f"{len(issues)} issue(s) found")
    if args.out:
        _write_text(args.out, fusion.lint_report_csv(issues))
    if issues and args.strict:
        return 1
    return 0


def cmd_enrich(args) -> int:
    try:
        gnd_lines = Path(args.gnds).read_text(encoding="utf-8").splitlines()
    except FileNotFoundError:
        raise UsageError(f"GND list file does not exist: {args.gnds}") from None
    gnds = []
    for line in gnd_lines:
        line = line.strip()
        if line and not line.startswith("#"):
            gnds.append(normalize_gnd(line))
    overrides = {}
    if args.delay is not None:
        overrides["politeness_delay_ms"] = args.delay
    if args.timeout is not None:
        overrides["timeout_ms"] = args.timeout
    if args.retries is not None:
        overrides["max_retries"] = args.retries
    if args.base_url:
        overrides["base_url"] = args.base_url
    if args.template:
        template_path = Path(args.template)
        if not template_path.exists():
            raise UsageError(f"template file does not exist: {args.template}")
        from .sparql import QueryTemplate

        overrides["lookup_template"] = QueryTemplate.from_text(
            template_path.read_text(encoding="utf-8")
        )
    endpoint = builtin_endpoint(args.endpoint, **overrides)
    if args.fixtures:
        fixtures_dir = Path(args.fixtures)
        if not fixtures_dir.exists():
            raise UsageError(f"recorded fixtures directory does not exist: {args.fixtures}")
        transport = RecordedTransport(fixtures_dir)
    elif args.live:
        transport = HttpTransport()
    else:
        raise UsageError("choose a transport: --fixtures DIR for recorded runs or --live")
    graph, report = lazy_extract(gnds, endpoint, transport)
    _write_text(args.out, serialize_canonical(graph))
    print(
        f"extracted {len(graph)} triple(s) from {endpoint.name} "
        f"({report.ok_count}/{len(report.items)} ok) -> {args.out}"
    )
    if args.report:
        _write_text(args.report, report.to_csv())
    _maybe_commit(args, graph, endpoint.graph)
    return 0


def _open_store(path: str) -> ChangeStore:
    if not Path(path).exists():
        raise UsageError(f"store directory does not exist: {path}")
    return ChangeStore(path)


def cmd_log(args) -> int:
    store = _open_store(args.store)
    sys.stdout.write(format_log(store.log()))
    return 0


def cmd_diff(args) -> int:
    store = _open_store(args.store)
    changeset = store.diff(args.commit_a, args.commit_b)
    from .rdf import ntriples_line

    for t in sorted(changeset.removed, key=ntriples_line):
        print("- " + ntriples_line(t))
    for t in sorted(changeset.added, key=ntriples_line):
        print("+ " + ntriples_line(t))
    print(f"{len(changeset.added)} added, {len(changeset.removed)} removed", file=sys.stderr)
    return 0


def cmd_checkout(args) -> int:
    store = _open_store(args.store)
    graph = store.checkout(args.commit)
    _write_text(args.out, serialize_canonical(graph))
    print(f"wrote {len(graph)} triple(s) at {args.commit[:12]} to {args.out}")
    return 0


# --- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kgfuse",
        description="Fuse, link, enrich, version and query small RDF catalogues.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("query", help="evaluate a query over one or more graph files")
    p.add_argument("--graphs", required=True, help="comma-separated graph files, queried as a union")
    p.add_argument("--query", required=True, help="file with the query text")
    p.add_argument("--prefixes", help="prefix file overriding the built-in defaults")
    p.add_argument("--format", choices=("table", "csv"), default="table")
    p.add_argument("--out", help="write the result here instead of stdout")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("link", help="discover same-person candidates between two graphs")
    p.add_argument("--config", required=True, help="link configuration file")
    p.add_argument("--left", required=True, help="source graph file")
    p.add_argument("--right", required=True, help="target graph file")
    p.add_argument("--out", required=True, help="review report CSV")
    p.add_argument("--sameas", help="also write accepted links as owl:sameAs N-Triples")
    p.add_argument("--prefixes", help="prefix file for resolving config names")
    p.set_defaults(func=cmd_link)

    p = sub.add_parser("fuse", help="shift two catalogues into a shared namespace and merge them")
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)
    p.add_argument("--left-ns", required=True, help="vocabulary namespace of the left graph")
    p.add_argument("--right-ns", required=True, help="vocabulary namespace of the right graph")
    p.add_argument("--target-ns", required=True, help="shared target namespace")
    p.add_argument("--mapping", help="rename file: old-local-name<TAB>new-local-name")
    p.add_argument("--out", required=True, help="fused canonical N-Triples output")
    p.add_argument("--graph-name", default="urn:x-fused:catalogue")
    _add_store_flags(p)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("align", help="vocabulary statistics for one or more graphs")
    p.add_argument("--graphs", required=True, help="comma-separated graph files")
    p.add_argument("--out", help="statistics CSV")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("lint", help="check vocabulary labels, descriptions and naming")
    p.add_argument("--graph", required=True)
    p.add_argument("--languages", default="de,en", help="required label languages")
    p.add_argument("--out", help="issue report CSV")
    p.add_argument("--strict", action="store_true", help="exit 1 when issues are found")
    p.set_defaults(func=cmd_lint)

    p = sub.add_parser("enrich", help="extract external data per GND, one request at a time")
    p.add_argument("--endpoint", required=True, choices=("dnb", "wikidata", "dbpedia"))
    p.add_argument("--gnds", required=True, help="file with one GND number or DNB URL per line")
    p.add_argument("--out", required=True, help="extracted graph as canonical N-Triples")
    p.add_argument("--report", help="per-GND outcome CSV")
    p.add_argument("--fixtures", help="recorded transport directory (no network)")
    p.add_argument("--live", action="store_true", help="use live HTTP requests")
    p.add_argument("--delay", type=int, help="politeness delay in milliseconds")
    p.add_argument("--timeout", type=int, help="request timeout in milliseconds")
    p.add_argument("--retries", type=int, help="max retries on timeout or 5xx")
    p.add_argument("--base-url", help="override the endpoint base URL")
    p.add_argument("--template", help="file with a replacement {gnd} lookup query template")
    _add_store_flags(p)
    p.set_defaults(func=cmd_enrich)

    p = sub.add_parser("log", help="list commits, newest first")
    p.add_argument("--store", required=True)
    p.set_defaults(func=cmd_log)

    p = sub.add_parser("diff", help="changeset between two commits")
    p.add_argument("--store", required=True)
    p.add_argument("commit_a")
    p.add_argument("commit_b")
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("checkout", help="materialize the graph at a commit")
    p.add_argument("--store", required=True)
    p.add_argument("commit")
    p.add_argument("-o", "--out", required=True, help="output N-Triples file")
    p.set_defaults(func=cmd_checkout)

    return parser


_DOMAIN_ERRORS = (RdfError, SparqlError, FusionError, GndError, StoreError)
_CONFIG_ERRORS = (UsageError, LinkConfigError, EndpointConfigError)


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _CONFIG_ERRORS as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except _DOMAIN_ERRORS as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
