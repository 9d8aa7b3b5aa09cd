"""
Type Dictionary - first extraction pass over the parsed sources.

Collects every declared type (top-level and named nested, nested ones
qualified as Outer.Inner) and resolves type names against them.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Set, Tuple

from javalang.tree import (
    AnnotationDeclaration,
    ClassDeclaration,
    EnumDeclaration,
    InterfaceDeclaration,
)

from src.errors import Diagnostic
from src.graphs.model import TypeKind
from src.scanners.source_scanner import ImportDecl, SourceUnit

logger = logging.getLogger(__name__)

TYPE_DECLARATIONS = (ClassDeclaration, InterfaceDeclaration, EnumDeclaration, AnnotationDeclaration)


@dataclass
class TypeDictionary:
    entries: Dict[str, TypeKind] = field(default_factory=dict)
    packages: Dict[str, Set[str]] = field(default_factory=dict)  # package -> top-level simple names

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def add(self, fqn: str, kind: TypeKind, package: str, top_level: bool) -> bool:
        if fqn in self.entries:
            return False
        self.entries[fqn] = kind
        if top_level:
            self.packages.setdefault(package, set()).add(fqn.rsplit(".", 1)[-1])
        return True


@dataclass(frozen=True)
class ResolutionContext:
    package: str = ""
    imports: Tuple[ImportDecl, ...] = ()
    enclosing: Tuple[str, ...] = ()  # innermost enclosing type first
    file: Optional[str] = None


def type_kind(declaration) -> TypeKind:
    if isinstance(declaration, InterfaceDeclaration):
        return TypeKind.INTERFACE
    if isinstance(declaration, EnumDeclaration):
        return TypeKind.ENUM
    if isinstance(declaration, AnnotationDeclaration):
        return TypeKind.ANNOTATION
    return TypeKind.CLASS


def body_members(declaration) -> List:
    """Member declarations of a type; enum bodies keep theirs under ``declarations``."""
    body = getattr(declaration, "body", None)
    if body is None:
        return []
    if isinstance(declaration, EnumDeclaration):
        return list(getattr(body, "declarations", None) or [])
    return list(body)


def qualify(package: str, name: str) -> str:
    return f"{package}.{name}" if package else name


def iter_type_declarations(unit: SourceUnit) -> Iterator[Tuple[str, object, bool]]:
    """Yield (fqn, declaration, is_top_level) for every named type in a unit."""

    def visit(declaration, fqn: str, top_level: bool):
        yield fqn, declaration, top_level
        for member in body_members(declaration):
            if isinstance(member, TYPE_DECLARATIONS):
                yield from visit(member, f"{fqn}.{member.name}", False)

    for declaration in unit.compilation_unit.types or []:
        if isinstance(declaration, TYPE_DECLARATIONS):
            yield from visit(declaration, qualify(unit.package, declaration.name), True)


def build_type_dictionary(
    units: Iterable[SourceUnit],
    diagnostics: Optional[List[Diagnostic]] = None,
) -> TypeDictionary:
    """
    Build the dictionary of declared types.

    Args:
        units: Parsed source units
        diagnostics: Optional list receiving duplicate-declaration reports

    Returns:
        TypeDictionary with one entry per declared type
    """
    dictionary = TypeDictionary()
    for unit in units:
        for fqn, declaration, top_level in iter_type_declarations(unit):
            if not dictionary.add(fqn, type_kind(declaration), unit.package, top_level):
                logger.warning(f"Duplicate declaration of {fqn} in {unit.path}; keeping the first")
                if diagnostics is not None:
                    diagnostics.append(
                        Diagnostic("warning", "duplicate-type", f"duplicate declaration of {fqn}", unit.path)
                    )
    logger.info(f"Type dictionary: {len(dictionary)} declared types")
    return dictionary


def resolve_type_name(
    name: Optional[str],
    context: ResolutionContext,
    dictionary: TypeDictionary,
    diagnostics: Optional[List[Diagnostic]] = None,
) -> Optional[str]:
    """
    Resolve a simple or dotted type name to a declared fully-qualified name.

    Order: qualified match, enclosing types, single-type import, same package,
    wildcard imports (first match in declaration order). External types give None.
    """
    if not name:
        return None
    head, _, rest = name.partition(".")
    suffix = f".{rest}" if rest else ""

    if rest and name in dictionary:
        return name

    for enclosing in context.enclosing:
        candidate = f"{enclosing}.{name}"
        if candidate in dictionary:
            return candidate

    for imp in context.imports:
        if imp.static or imp.wildcard:
            continue
        if imp.path.rsplit(".", 1)[-1] == head:
            candidate = imp.path + suffix
            # an explicit import of an external type shadows everything below
            return candidate if candidate in dictionary else None

    candidate = qualify(context.package, name)
    if candidate in dictionary:
        return candidate

    matches = [
        f"{imp.path}.{name}"
        for imp in context.imports
        if imp.wildcard and not imp.static and f"{imp.path}.{name}" in dictionary
    ]
    if matches:
        if len(matches) > 1:
            message = f"ambiguous wildcard imports for '{name}': {', '.join(matches)}; using {matches[0]}"
            logger.debug(message)
            if diagnostics is not None:
                diagnostics.append(Diagnostic("warning", "ambiguous-import", message, context.file))
        return matches[0]
    return None
