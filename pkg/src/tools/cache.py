"""
On-disk coefficient cache: one text file per (form, limit).

Format:
    # form=<id> weight=<k> level=<N> limit=<L>
    1<TAB>a(1)
    ...
A file is only trusted up to the limit in its header; a request below a
cached limit is served by truncation, anything above is regenerated.
"""

import logging
import os
import re
import tempfile
from pathlib import Path
from typing import Optional

import numpy as np

from src.tools.eigenforms import CoefficientTable, FormSpec

logger = logging.getLogger(__name__)

HEADER = "# form={id} weight={weight} level={level} limit={limit}"
_HEADER_RE = re.compile(r"^# form=(\S+) weight=(\d+) level=(\d+) limit=(\d+)$")
_NAME_RE = re.compile(r"^(\w+)_(\d+)\.tsv$")


class CoefficientCache:
    def __init__(self, cache_dir: str):
        self.root = Path(cache_dir)

    def path(self, form: FormSpec, limit: int) -> Path:
        return self.root / f"{form.id}_{limit}.tsv"

    def store(self, table: CoefficientTable) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        target = self.path(table.form, table.limit)
        header = HEADER.format(id=table.form.id, weight=table.form.weight,
                               level=table.form.level, limit=table.limit)
        fd, tmp = tempfile.mkstemp(dir=self.root, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", newline="\n") as f:
                f.write(header + "\n")
                for n in range(1, table.limit + 1):
                    f.write(f"{n}\t{int(table.coeffs[n])}\n")
            os.replace(tmp, target)
        except BaseException:
            os.unlink(tmp)
            raise
        logger.info(f"Cached {table.form.id} coefficients to {target}")
        return target

    def _candidates(self, form: FormSpec, limit: int):
        exact = self.path(form, limit)
        if exact.exists():
            yield limit, exact
        if not self.root.is_dir():
            return
        larger = []
        for entry in self.root.iterdir():
            match = _NAME_RE.match(entry.name)
            if match and match.group(1) == form.id and int(match.group(2)) > limit:
                larger.append((int(match.group(2)), entry))
        yield from sorted(larger)

    def load(self, form: FormSpec, limit: int) -> Optional[CoefficientTable]:
        """Cached table truncated to limit, or None when no valid cache covers it."""
        for cached_limit, path in self._candidates(form, limit):
            values = self._read(path, form, cached_limit, limit)
            if values is not None:
                logger.info(f"Cache hit for {form.id} to {limit:,} ({path.name})")
                return CoefficientTable(form, limit, np.array(values, dtype=object))
        logger.info(f"Cache miss for {form.id} to {limit:,}")
        return None

    def _read(self, path: Path, form: FormSpec, cached_limit: int, limit: int):
        with open(path, "r") as f:
            match = _HEADER_RE.match(f.readline().rstrip("\n"))
            expected = (form.id, form.weight, form.level, cached_limit)
            if not match or (match.group(1), int(match.group(2)),
                             int(match.group(3)), int(match.group(4))) != expected:
                logger.warning(f"Ignoring {path.name}: header does not match {expected}")
                return None
            values = [0]
            for line in f:
                if len(values) > limit:
                    break
                try:
                    n_text, a_text = line.rstrip("\n").split("\t")
                    n, a = int(n_text), int(a_text)
                except ValueError:
                    logger.warning(f"Ignoring {path.name}: malformed line {line.strip()!r}")
                    return None
                if n != len(values):
                    logger.warning(f"Ignoring {path.name}: expected n={len(values)}, found {n}")
                    return None
                values.append(a)
        if len(values) != limit + 1:
            logger.warning(f"Ignoring {path.name}: only {len(values) - 1} rows for limit {limit:,}")
            return None
        return values
