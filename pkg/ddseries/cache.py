"""
Append-only cache of central L-values.

CSV, one record per line: `d0,q,psi,method,re,im,abs_error`.
Appends are serialized by a lock; lookups read the in-memory index.
"""

import csv
import threading

from pathlib import Path
from typing import (
    Iterator,
    Optional,
)

from . import logger
from .arith import Psi, QuadChar
from .errors import DomainError
from .lfunc import LRecord, Method, l_central_afe, l_value_hurwitz, total_character
from .parameters import TruncationPolicy
from .special import ValueWithError

HEADER = ("d0", "q", "psi", "method", "re", "im", "abs_error")

type Key = tuple[int, int, int, str]


class LValueCache:
    def __init__(self, path: Optional[Path] = None):
        self._path = path
        self._lock = threading.Lock()
        self._index: dict[Key, ValueWithError] = {}
        if path and path.exists() and path.stat().st_size > 0:
            self._load(path)

    @property
    def path(self) -> Optional[Path]:
        return self._path

    def _load(self, path: Path):
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if tuple(header or ()) != HEADER:
                raise DomainError(f"{path}: not an L-value cache (header {header})")
            for row in reader:
                if not row:
                    continue
                d0, q, psi, method, re, im, err = row
                key = (int(d0), int(q), int(psi), method)
                self._index[key] = ValueWithError(complex(float(re), float(im)), float(err))
        logger.debug("== Loaded %d cached L-values from %s", len(self._index), path)

    def __len__(self) -> int:
        return len(self._index)

    def __contains__(self, key: Key) -> bool:
        return key in self._index

    def __iter__(self) -> Iterator[Key]:
        return iter(dict(self._index))

    def get(self, d0: int, q: int, psi: Psi, method: Method = "afe") -> Optional[ValueWithError]:
        return self._index.get((d0, q, psi.value, method))

    def put(self, record: LRecord):
        key = (record.d0, record.q, record.psi_index.value, record.method)
        with self._lock:
            if key in self._index:
                return
            self._index[key] = record.value
            if self._path is None:
                return
            new_file = not self._path.exists() or self._path.stat().st_size == 0
            with self._path.open("a", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                if new_file:
                    writer.writerow(HEADER)
                v = record.value
                writer.writerow(
                    (
                        record.d0,
                        record.q,
                        record.psi_index.value,
                        record.method,
                        repr(v.value.real),
                        repr(v.value.imag),
                        repr(v.abs_error),
                    ),
                )

    def central_value(
        self,
        d0: int,
        chi: QuadChar,
        psi: Psi,
        policy: TruncationPolicy,
        method: Method = "afe",
    ) -> LRecord:
        """Cached L(1/2, χ_{d0}χψ)"""
        value = self.get(d0, chi.conductor, psi, method)
        if value is None:
            if method == "afe":
                value = l_central_afe(d0, chi, psi, policy)
            else:
                value = l_value_hurwitz(0.5, total_character(d0, chi, psi), policy.hurwitz_terms)
            record = LRecord(d0, chi, psi, value, method)
            self.put(record)
            return record
        return LRecord(d0, chi, psi, value, method)
