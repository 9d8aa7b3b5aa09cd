"""
Content-addressed artifact cache.

Artifacts live under <workspace>/<stage>/<key><suffix>. A key hashes the
stage parameters together with the content digests of the upstream files,
so changing (or regenerating differently) any input changes every key
downstream of it.
"""

import hashlib
import json
import logging
import os
import threading
from collections import Counter
from pathlib import Path
from typing import Any, Callable, Dict, Tuple, TypeVar, Union

logger = logging.getLogger(__name__)

T = TypeVar("T")


def file_digest(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def tree_digest(root: Union[str, Path], pattern: str = "*.java") -> str:
    """Digest of every matching file's relative path and content."""
    root = Path(root)
    digest = hashlib.sha256()
    for path in sorted(root.rglob(pattern)):
        digest.update(path.relative_to(root).as_posix().encode("utf-8"))
        digest.update(b"\0")
        digest.update(file_digest(path).encode("ascii"))
    return digest.hexdigest()


def make_key(*parts: Any) -> str:
    payload = json.dumps(parts, sort_keys=True, default=str, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:20]


class ArtifactCache:
    """Stage artifacts on disk with hit / miss accounting."""

    def __init__(self, root: Union[str, Path], enabled: bool = True):
        self.root = Path(root)
        self.enabled = enabled
        self.hits: Counter = Counter()
        self.misses: Counter = Counter()
        self._locks: Dict[Path, threading.Lock] = {}
        self._guard = threading.Lock()
        self._digests: Dict[Tuple[str, int, int], str] = {}

    def path(self, stage: str, key: str, suffix: str) -> Path:
        return self.root / stage / f"{key}{suffix}"

    def digest(self, path: Union[str, Path]) -> str:
        """File digest, memoized on (path, mtime, size)."""
        stat = os.stat(path)
        memo = (str(Path(path).resolve()), stat.st_mtime_ns, stat.st_size)
        if memo not in self._digests:
            self._digests[memo] = file_digest(path)
        return self._digests[memo]

    def _lock(self, path: Path) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(path, threading.Lock())

    def _count(self, counter: Counter, stage: str) -> None:
        with self._guard:
            counter[stage] += 1

    def get_or_create(
        self,
        stage: str,
        key: str,
        suffix: str,
        build: Callable[[], T],
        write: Callable[[T, Path], None],
        read: Callable[[Path], T],
    ) -> Tuple[T, Path]:
        """
        Return the cached artifact for ``key`` or build, store and return it.

        Args:
            stage: Stage directory name
            key: Content key from ``make_key``
            suffix: File suffix
            build: Computes the artifact
            write: Serializes it to a path
            read: Loads it from a path

        Returns:
            (artifact, artifact path)
        """
        path = self.path(stage, key, suffix)
        with self._lock(path):
            if self.enabled and path.exists():
                self._count(self.hits, stage)
                logger.debug(f"cache hit  {stage}/{path.name}")
                return read(path), path

            self._count(self.misses, stage)
            logger.debug(f"cache miss {stage}/{path.name}")
            artifact = build()
            path.parent.mkdir(parents=True, exist_ok=True)
            partial = path.with_name(f".{path.name}.{os.getpid()}.{threading.get_ident()}.tmp")
            write(artifact, partial)
            os.replace(partial, path)
            # hits and misses both return the deserialized artifact
            return read(path), path

    def statistics(self) -> Dict[str, Dict[str, int]]:
        with self._guard:
            stages = sorted(set(self.hits) | set(self.misses))
            return {stage: {"hits": self.hits[stage], "misses": self.misses[stage]} for stage in stages}
