"""
Graph files - line-oriented text format for CDN and stripped graphs.

    cdn v1                      digraph v1
    N <fqn> <kind>              N <fqn>
    E <from> <to> <type>        E <from> <to>

UTF-8, one record per line, '#' starts a comment.
"""

import logging
from pathlib import Path
from typing import Dict, List, Tuple, Union

from src.errors import GraphFormatError
from src.graphs.model import CdnGraph, EdgeType, SimpleDigraph, SourceRef, TypeKind

logger = logging.getLogger(__name__)

CDN_HEADER = "cdn v1"
DIGRAPH_HEADER = "digraph v1"

Graph = Union[CdnGraph, SimpleDigraph]


def format_graph(graph: Graph) -> str:
    lines: List[str] = []
    if isinstance(graph, CdnGraph):
        lines.append(CDN_HEADER)
        for name, kind in graph.nodes.items():
            lines.append(f"N {name} {kind.value}")
        for source, target, edge_type in graph.edge_keys():
            lines.append(f"E {source} {target} {edge_type}")
    else:
        lines.append(DIGRAPH_HEADER)
        for name in graph.nodes:
            lines.append(f"N {name}")
        for source, target in graph.edges():
            lines.append(f"E {source} {target}")
    return "\n".join(lines) + "\n"


def write_graph(graph: Graph, path: Union[str, Path]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_graph(graph), encoding="utf-8")
    logger.debug(f"Wrote {path}")


def parse_graph(text: str) -> Graph:
    records: List[Tuple[int, List[str]]] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            records.append((number, line.split()))

    if not records:
        raise GraphFormatError("missing header", line=1)

    header_line, header = records[0]
    header_text = " ".join(header)
    if header_text == CDN_HEADER:
        return _parse_cdn(records[1:])
    if header_text == DIGRAPH_HEADER:
        return _parse_digraph(records[1:])
    raise GraphFormatError(f"unknown header '{header_text}'", line=header_line, token=header_text)


def read_graph(path: Union[str, Path]) -> Graph:
    """Read a CDN or stripped graph file; the header decides which."""
    return parse_graph(Path(path).read_text(encoding="utf-8"))


def _parse_cdn(records) -> CdnGraph:
    nodes: Dict[str, TypeKind] = {}
    edges: List[SourceRef] = []
    for number, fields in records:
        tag = fields[0]
        if tag == "N":
            _expect_arity(fields, 3, number)
            name, kind_token = fields[1], fields[2]
            try:
                kind = TypeKind(kind_token)
            except ValueError:
                raise GraphFormatError(f"unknown type kind '{kind_token}'", line=number, token=kind_token)
            if name in nodes:
                raise GraphFormatError(f"duplicate node '{name}'", line=number, token=name)
            nodes[name] = kind
        elif tag == "E":
            _expect_arity(fields, 4, number)
            source, target, type_token = fields[1:4]
            try:
                edge_type = EdgeType(type_token)
            except ValueError:
                raise GraphFormatError(f"unknown edge type '{type_token}'", line=number, token=type_token)
            _check_edge(nodes, source, target, number)
            edges.append(SourceRef(source, target, edge_type))
        else:
            raise GraphFormatError(f"unknown record tag '{tag}'", line=number, token=tag)
    return CdnGraph.build(nodes, edges)


def _parse_digraph(records) -> SimpleDigraph:
    nodes: List[str] = []
    seen = set()
    edges: List[Tuple[str, str]] = []
    for number, fields in records:
        tag = fields[0]
        if tag == "N":
            _expect_arity(fields, 2, number)
            if fields[1] in seen:
                raise GraphFormatError(f"duplicate node '{fields[1]}'", line=number, token=fields[1])
            seen.add(fields[1])
            nodes.append(fields[1])
        elif tag == "E":
            _expect_arity(fields, 3, number)
            _check_edge(seen, fields[1], fields[2], number)
            edges.append((fields[1], fields[2]))
        else:
            raise GraphFormatError(f"unknown record tag '{tag}'", line=number, token=tag)
    return SimpleDigraph.from_edges(nodes, edges)


def _expect_arity(fields: List[str], count: int, number: int):
    if len(fields) != count:
        raise GraphFormatError(
            f"expected {count} fields in '{fields[0]}' record, got {len(fields)}",
            line=number,
            token=fields[0],
        )


def _check_edge(known, source: str, target: str, number: int):
    for name in (source, target):
        if name not in known:
            raise GraphFormatError(f"edge references undeclared node '{name}'", line=number, token=name)
    if source == target:
        raise GraphFormatError(f"self-loop on '{source}'", line=number, token=source)
