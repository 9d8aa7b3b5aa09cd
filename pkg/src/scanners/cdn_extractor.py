"""
CDN Extractor - second extraction pass: typed references between declared types.
"""

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, List, Optional, Set, Union

from javalang.ast import Node, walk_tree
from javalang.tree import (
    AnnotationMethod,
    ArrayCreator,
    CatchClauseParameter,
    ClassCreator,
    ClassDeclaration,
    ConstructorDeclaration,
    EnumDeclaration,
    FieldDeclaration,
    FormalParameter,
    InterfaceDeclaration,
    MethodDeclaration,
    MethodInvocation,
    ReferenceType,
    TryResource,
    VariableDeclaration,
)

from src.errors import Diagnostic
from src.graphs.model import CdnGraph, EdgeType, SourceRef, SourceSite
from src.scanners.source_scanner import SourceScanner, SourceUnit
from src.scanners.type_dictionary import (
    TYPE_DECLARATIONS,
    ResolutionContext,
    TypeDictionary,
    body_members,
    build_type_dictionary,
    qualify,
    resolve_type_name,
)

logger = logging.getLogger(__name__)

EXCLUDED_QUALIFIERS = {"this", "super"}


def reference_type_name(type_node) -> Optional[str]:
    """Dotted name of a ReferenceType; generic arguments and array dimensions are erased."""
    if not isinstance(type_node, ReferenceType):
        return None
    parts = []
    current = type_node
    while current is not None:
        parts.append(current.name)
        current = getattr(current, "sub_type", None)
    return ".".join(parts)


def _line(node, default: int = 0) -> int:
    position = getattr(node, "position", None)
    if position is None:
        return default
    return getattr(position, "line", None) or (position[0] if isinstance(position, tuple) else default)


@dataclass
class _TypeScope:
    fqn: str
    context: ResolutionContext
    unit: SourceUnit
    names: Set[str] = field(default_factory=set)  # fields visible as expression qualifiers


class CdnExtractor:
    """Walks parsed units and emits SourceRefs between dictionary types."""

    def __init__(self, dictionary: TypeDictionary, diagnostics: Optional[List[Diagnostic]] = None):
        self.dictionary = dictionary
        self.diagnostics = diagnostics if diagnostics is not None else []
        self.references: List[SourceRef] = []

    def extract(self, units: Iterable[SourceUnit]) -> CdnGraph:
        for unit in units:
            try:
                self._visit_unit(unit)
            except Exception as e:
                logger.warning(f"Failed to extract references from {unit.path}: {e}")
                self.diagnostics.append(Diagnostic("warning", "extract-error", str(e), unit.path))
        graph = CdnGraph.build(self.dictionary.entries, self.references)
        logger.info(f"CDN: {len(graph.nodes)} nodes, {len(graph.edges)} typed edges")
        return graph

    # -------------------- declarations --------------------

    def _visit_unit(self, unit: SourceUnit):
        base = ResolutionContext(package=unit.package, imports=unit.imports, file=unit.path)
        for declaration in unit.compilation_unit.types or []:
            if isinstance(declaration, TYPE_DECLARATIONS):
                self._visit_type(declaration, qualify(unit.package, declaration.name), base, unit)

    def _visit_type(self, declaration, fqn: str, outer: ResolutionContext, unit: SourceUnit):
        context = replace(outer, enclosing=(fqn,) + outer.enclosing)
        members = body_members(declaration)
        scope = _TypeScope(fqn=fqn, context=context, unit=unit, names=self._field_names(members))
        line = _line(declaration)

        if isinstance(declaration, ClassDeclaration):
            self._type_edge(scope, declaration.extends, EdgeType.EXTENDS, line)
            for t in declaration.implements or []:
                self._type_edge(scope, t, EdgeType.IMPLEMENTS, line)
        elif isinstance(declaration, InterfaceDeclaration):
            for t in declaration.extends or []:
                self._type_edge(scope, t, EdgeType.EXTENDS, line)
        elif isinstance(declaration, EnumDeclaration):
            for t in declaration.implements or []:
                self._type_edge(scope, t, EdgeType.IMPLEMENTS, line)
            constants = getattr(declaration.body, "constants", None) or []
            for constant in constants:
                self._scan_body(scope, [constant], set(), _line(constant, line))

        self._annotation_edges(scope, declaration, line)

        for member in members:
            if isinstance(member, TYPE_DECLARATIONS):
                self._visit_type(member, f"{fqn}.{member.name}", context, unit)
            elif isinstance(member, FieldDeclaration):
                self._visit_field(scope, member, isinstance(declaration, InterfaceDeclaration))
            elif isinstance(member, (MethodDeclaration, ConstructorDeclaration)):
                self._visit_callable(scope, member)
            elif isinstance(member, AnnotationMethod):
                self._type_edge(scope, member.return_type, EdgeType.RETURN_TYPE, _line(member, line))
                self._annotation_edges(scope, member, _line(member, line))
            elif isinstance(member, (list, tuple, Node)):
                # initializer blocks
                self._scan_body(scope, member, set(), line)

    def _field_names(self, members) -> Set[str]:
        names = set()
        for member in members:
            if isinstance(member, FieldDeclaration):
                names.update(d.name for d in member.declarators or [])
        return names

    def _visit_field(self, scope: _TypeScope, member: FieldDeclaration, in_interface: bool):
        line = _line(member)
        is_static = in_interface or "static" in (member.modifiers or set())
        edge_type = EdgeType.STATIC_CLASS_MEMBER if is_static else EdgeType.CLASS_MEMBER
        self._type_edge(scope, member.type, edge_type, line)
        self._annotation_edges(scope, member, line)
        initializers = [d.initializer for d in member.declarators or [] if d.initializer is not None]
        if initializers:
            self._scan_body(scope, initializers, set(), line)

    def _visit_callable(self, scope: _TypeScope, member):
        line = _line(member)
        if isinstance(member, MethodDeclaration):
            self._type_edge(scope, member.return_type, EdgeType.RETURN_TYPE, line)
        self._annotation_edges(scope, member, line)
        parameter_names = set()
        for parameter in member.parameters or []:
            parameter_names.add(parameter.name)
            self._type_edge(scope, parameter.type, EdgeType.PARAMETER, _line(parameter, line))
            self._annotation_edges(scope, parameter, _line(parameter, line))
        if member.body:
            self._scan_body(scope, member.body, parameter_names, line)

    # -------------------- bodies: V, OI, SMC --------------------

    def _scan_body(self, scope: _TypeScope, body, bound_names: Set[str], line: int):
        nodes = [node for _, node in walk_tree(body)]
        local_names = set(bound_names) | scope.names | self._local_names(nodes)

        for node in nodes:
            node_line = _line(node, line)
            if isinstance(node, VariableDeclaration):
                self._type_edge(scope, node.type, EdgeType.VARIABLE, node_line)
            elif isinstance(node, (FormalParameter, TryResource)):
                self._type_edge(scope, node.type, EdgeType.VARIABLE, node_line)
            elif isinstance(node, CatchClauseParameter):
                for name in node.types or []:
                    self._name_edge(scope, name, EdgeType.VARIABLE, node_line)
            elif isinstance(node, (ClassCreator, ArrayCreator)):
                self._type_edge(scope, node.type, EdgeType.OBJECT_INSTANTIATION, node_line)
            elif isinstance(node, MethodInvocation):
                self._static_call_edge(scope, node, local_names, node_line)

    def _local_names(self, nodes) -> Set[str]:
        names = set()
        for node in nodes:
            if isinstance(node, VariableDeclaration):
                names.update(d.name for d in node.declarators or [])
            elif isinstance(node, (FormalParameter, TryResource, CatchClauseParameter)):
                names.add(node.name)
            elif type(node).__name__ == "InferredFormalParameter":
                names.add(node.name)
        return names

    def _static_call_edge(self, scope: _TypeScope, invocation: MethodInvocation, local_names: Set[str], line: int):
        qualifier = invocation.qualifier
        if not qualifier:
            return
        head = qualifier.split(".", 1)[0]
        if head in EXCLUDED_QUALIFIERS or head in local_names:
            return
        self._name_edge(scope, qualifier, EdgeType.STATIC_METHOD_CALL, line)

    # -------------------- edge emission --------------------

    def _annotation_edges(self, scope: _TypeScope, node, line: int):
        for annotation in getattr(node, "annotations", None) or []:
            self._name_edge(scope, annotation.name, EdgeType.ANNOTATION, _line(annotation, line))

    def _type_edge(self, scope: _TypeScope, type_node, edge_type: EdgeType, line: int):
        self._name_edge(scope, reference_type_name(type_node), edge_type, line)

    def _name_edge(self, scope: _TypeScope, name: Optional[str], edge_type: EdgeType, line: int):
        target = resolve_type_name(name, scope.context, self.dictionary, self.diagnostics)
        if target is None or target == scope.fqn:
            return
        self.references.append(SourceRef(scope.fqn, target, edge_type, SourceSite(scope.unit.path, line)))


def extract_cdn(
    units: List[SourceUnit],
    dictionary: TypeDictionary,
    diagnostics: Optional[List[Diagnostic]] = None,
) -> CdnGraph:
    """Build the CDN whose nodes are exactly the dictionary entries."""
    return CdnExtractor(dictionary, diagnostics).extract(units)


@dataclass
class ExtractionResult:
    graph: CdnGraph
    dictionary: TypeDictionary
    diagnostics: List[Diagnostic]
    references: List[SourceRef]


def extract_project(root: Union[str, Path], workers: int = 1) -> ExtractionResult:
    """Scan a source tree and run both extraction passes."""
    scanner = SourceScanner(str(root), workers=workers)
    units = scanner.scan()
    diagnostics = list(scanner.diagnostics)
    dictionary = build_type_dictionary(units, diagnostics)
    extractor = CdnExtractor(dictionary, diagnostics)
    graph = extractor.extract(units)
    return ExtractionResult(graph, dictionary, diagnostics, extractor.references)


def write_diagnostics(diagnostics: Iterable[Diagnostic], path: Union[str, Path]):
    """Write diagnostics as JSON lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for diagnostic in diagnostics:
            f.write(json.dumps(diagnostic.to_dict(), sort_keys=True) + "\n")
