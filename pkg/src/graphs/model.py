"""
Graph model - the typed Class Dependency Network and its stripped form.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Set, Tuple

logger = logging.getLogger(__name__)


class TypeKind(str, Enum):
    CLASS = "class"
    INTERFACE = "interface"
    ENUM = "enum"
    ANNOTATION = "annotation"


class EdgeType(str, Enum):
    """The ten CDN relation types."""

    EXTENDS = "E"
    IMPLEMENTS = "I"
    RETURN_TYPE = "R"
    VARIABLE = "V"
    CLASS_MEMBER = "CM"
    OBJECT_INSTANTIATION = "OI"
    ANNOTATION = "A"
    PARAMETER = "P"
    STATIC_CLASS_MEMBER = "SCM"
    STATIC_METHOD_CALL = "SMC"


@dataclass(frozen=True, order=True)
class SourceSite:
    path: str
    line: int

    def __str__(self) -> str:
        return f"{self.path}:{self.line}"


@dataclass(frozen=True, order=True)
class SourceRef:
    """One typed reference between two declared types.

    Equality and ordering ignore the source site: two references of the same
    type between the same pair are the same CDN edge.
    """

    source: str
    target: str
    edge_type: EdgeType
    site: Optional[SourceSite] = field(default=None, compare=False)

    def __post_init__(self):
        if self.source == self.target:
            raise ValueError(f"self reference on {self.source}")

    @property
    def key(self) -> Tuple[str, str, str]:
        return (self.source, self.target, self.edge_type.value)


@dataclass(frozen=True)
class CdnGraph:
    """Directed typed multigraph of declared types.

    Use ``CdnGraph.build`` to construct: it sorts, de-duplicates and drops
    edges whose endpoints are unknown.
    """

    nodes: Mapping[str, TypeKind]
    edges: Tuple[SourceRef, ...]

    @classmethod
    def build(cls, nodes: Mapping[str, TypeKind], edges: Iterable[SourceRef]) -> "CdnGraph":
        ordered_nodes = {name: TypeKind(nodes[name]) for name in sorted(nodes)}
        unique: Dict[Tuple[str, str, str], SourceRef] = {}
        dropped = 0
        for ref in sorted(edges, key=lambda r: (r.key, r.site or SourceSite("", 0))):
            if ref.source not in ordered_nodes or ref.target not in ordered_nodes:
                dropped += 1
                continue
            unique.setdefault(ref.key, ref)
        if dropped:
            logger.debug(f"Dropped {dropped} edges with endpoints outside the node set")
        return cls(nodes=ordered_nodes, edges=tuple(unique[k] for k in sorted(unique)))

    @classmethod
    def empty(cls) -> "CdnGraph":
        return cls.build({}, [])

    def __eq__(self, other) -> bool:
        if not isinstance(other, CdnGraph):
            return NotImplemented
        return dict(self.nodes) == dict(other.nodes) and self.edge_keys() == other.edge_keys()

    def __hash__(self) -> int:
        return hash((tuple(self.nodes.items()), self.edge_keys()))

    def edge_keys(self) -> Tuple[Tuple[str, str, str], ...]:
        return tuple(sorted(ref.key for ref in self.edges))

    def edge_types_between(self, source: str, target: str) -> Set[EdgeType]:
        return {ref.edge_type for ref in self.edges if ref.source == source and ref.target == target}


@dataclass(frozen=True)
class SimpleDigraph:
    """Unweighted simple directed graph over named nodes.

    ``successors[i]`` holds the sorted indices of node i's out-neighbors.
    """

    nodes: Tuple[str, ...]
    successors: Tuple[Tuple[int, ...], ...]

    @classmethod
    def from_edges(cls, nodes: Iterable[str], edges: Iterable[Tuple[str, str]]) -> "SimpleDigraph":
        ordered = tuple(sorted(set(nodes)))
        index = {name: i for i, name in enumerate(ordered)}
        out: List[Set[int]] = [set() for _ in ordered]
        for source, target in edges:
            if source == target:
                continue
            if source not in index or target not in index:
                raise ValueError(f"edge {source} -> {target} references an unknown node")
            out[index[source]].add(index[target])
        return cls(nodes=ordered, successors=tuple(tuple(sorted(s)) for s in out))

    @cached_property
    def index(self) -> Dict[str, int]:
        return {name: i for i, name in enumerate(self.nodes)}

    @cached_property
    def successor_sets(self) -> Tuple[frozenset, ...]:
        return tuple(frozenset(s) for s in self.successors)

    @cached_property
    def predecessors(self) -> Tuple[Tuple[int, ...], ...]:
        pred: List[List[int]] = [[] for _ in self.nodes]
        for i, succ in enumerate(self.successors):
            for j in succ:
                pred[j].append(i)
        return tuple(tuple(p) for p in pred)

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, name: str) -> bool:
        return name in self.index

    @property
    def edge_count(self) -> int:
        return sum(len(s) for s in self.successors)

    def edges(self) -> Iterator[Tuple[str, str]]:
        for i, succ in enumerate(self.successors):
            for j in succ:
                yield self.nodes[i], self.nodes[j]

    def edge_index_pairs(self) -> List[Tuple[int, int]]:
        return [(i, j) for i, succ in enumerate(self.successors) for j in succ]

    def has_edge(self, source: str, target: str) -> bool:
        index = self.index
        if source not in index or target not in index:
            return False
        return index[target] in self.successor_sets[index[source]]

    def out_neighbors(self, name: str) -> Set[str]:
        return {self.nodes[j] for j in self.successors[self.index[name]]}

    def in_neighbors(self, name: str) -> Set[str]:
        return {self.nodes[k] for k in self.predecessors[self.index[name]]}

    def neighbors(self, name: str) -> Set[str]:
        """In- and out-neighbors together."""
        return self.out_neighbors(name) | self.in_neighbors(name)

    def degrees(self) -> List[int]:
        """Total degree (in + out) per node index."""
        degree = [len(s) for s in self.successors]
        for succ in self.successors:
            for j in succ:
                degree[j] += 1
        return degree

    def connected_nodes(self) -> List[str]:
        """Nodes with at least one incident edge."""
        return [name for name, d in zip(self.nodes, self.degrees()) if d > 0]


def strip(graph) -> SimpleDigraph:
    """Collapse a CDN to one untyped directed edge per ordered node pair.

    Stripping an already stripped graph returns it unchanged.
    """
    if isinstance(graph, SimpleDigraph):
        return graph
    return SimpleDigraph.from_edges(graph.nodes.keys(), ((r.source, r.target) for r in graph.edges))


def graph_statistics(graph) -> Dict[str, int]:
    """Node / edge counts, plus per-type edge counts for a CDN."""
    if isinstance(graph, SimpleDigraph):
        return {
            "nodes": len(graph),
            "edges": graph.edge_count,
            "connected_nodes": len(graph.connected_nodes()),
        }
    stripped = strip(graph)
    stats = {
        "nodes": len(graph.nodes),
        "edges": len(graph.edges),
        "stripped_edges": stripped.edge_count,
        "connected_nodes": len(stripped.connected_nodes()),
    }
    counts = Counter(ref.edge_type for ref in graph.edges)
    for edge_type in EdgeType:
        stats[f"edges_{edge_type.value}"] = counts.get(edge_type, 0)
    return stats
