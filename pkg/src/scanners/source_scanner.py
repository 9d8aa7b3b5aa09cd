"""
Source Scanner - Finds and parses the Java files of a project tree.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, List, Optional, Tuple

import javalang
from joblib import Parallel, delayed

from src.errors import Diagnostic

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ImportDecl:
    path: str
    wildcard: bool = False
    static: bool = False


@dataclass
class SourceUnit:
    """One parsed compilation unit."""

    path: str  # relative to the scanned root, posix separators
    compilation_unit: Any
    package: str = ""
    imports: Tuple[ImportDecl, ...] = field(default_factory=tuple)


class SourceScanner:
    """Scans a directory tree for .java files and parses them."""

    def __init__(self, path: str, workers: int = 1):
        self.path = Path(path)
        self.workers = max(1, workers)
        self.diagnostics: List[Diagnostic] = []

        if not self.path.exists():
            raise ValueError(f"Path does not exist: {path}")

    def scan(self) -> List[SourceUnit]:
        """
        Parse every Java file under the root.

        Files that fail to lex or parse are skipped and reported in
        ``self.diagnostics``; extraction is best-effort.

        Returns:
            Parsed units in sorted path order
        """
        files = self._find_files()
        logger.info(f"Found {len(files)} Java files under {self.path}")

        if self.workers > 1 and len(files) > 1:
            results = Parallel(n_jobs=self.workers, prefer="threads")(
                delayed(self._load_file)(f) for f in files
            )
        else:
            results = [self._load_file(f) for f in files]

        units = []
        for unit, diagnostic in results:
            if diagnostic is not None:
                self.diagnostics.append(diagnostic)
            if unit is not None:
                units.append(unit)
        return units

    def _find_files(self) -> List[Path]:
        if self.path.is_file():
            return [self.path]
        return sorted(self.path.rglob("*.java"))

    def _relative(self, file_path: Path) -> str:
        if self.path.is_file():
            return file_path.name
        return file_path.relative_to(self.path).as_posix()

    def _load_file(self, file_path: Path) -> Tuple[Optional[SourceUnit], Optional[Diagnostic]]:
        relative = self._relative(file_path)
        try:
            source = file_path.read_text(encoding="utf-8", errors="replace")
            return parse_source(source, relative), None
        except (javalang.parser.JavaSyntaxError, javalang.tokenizer.LexerError) as e:
            line = _error_line(e)
            logger.warning(f"Failed to parse {relative}: {e!r}")
            return None, Diagnostic("warning", "syntax-error", f"skipped unparsable file: {e!r}", relative, line)
        except Exception as e:
            logger.error(f"Error reading {relative}: {e}")
            return None, Diagnostic("warning", "read-error", f"skipped file: {e}", relative)


def parse_source(source: str, path: str = "<memory>") -> SourceUnit:
    """Parse Java source text into a SourceUnit; raises javalang errors."""
    cu = javalang.parse.parse(source)
    package = cu.package.name if cu.package else ""
    imports = tuple(
        ImportDecl(path=imp.path, wildcard=bool(imp.wildcard), static=bool(imp.static))
        for imp in cu.imports or []
    )
    return SourceUnit(path=path, compilation_unit=cu, package=package, imports=imports)


def _error_line(error: Exception) -> Optional[int]:
    at = getattr(error, "at", None)
    position = getattr(at, "position", None)
    if position is not None:
        return getattr(position, "line", None)
    position = getattr(error, "position", None)
    if isinstance(position, tuple) and position:
        return position[0]
    return None
