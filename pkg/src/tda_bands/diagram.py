"""T-bounded persistence diagrams and their CSV representation.

Rows are ``dim,birth,death``.  Comment lines start with ``#`` and an optional
``dim,birth,death`` header may precede the data.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .exceptions import ParseError, ValidationError

HEADER = "dim,birth,death"


class PersistencePair(NamedTuple):
    birth: float
    death: float
    dim: int = 0

    @property
    def midpoint(self) -> float:
        return (self.birth + self.death) / 2

    @property
    def height(self) -> float:
        return (self.death - self.birth) / 2

    @property
    def persistence(self) -> float:
        return self.death - self.birth


@dataclass(frozen=True, eq=False)
class Diagram:
    """Finite multiset of (birth, death) pairs in one homology dimension.

    Construction canonicalizes: zero-persistence pairs are dropped and every
    remaining pair is checked against ``0 <= birth <= death <= t_bound``.
    Duplicates are kept.  The arrays are made read-only so a diagram can be
    shared between workers.
    """

    births: np.ndarray
    deaths: np.ndarray
    t_bound: float
    dim: int = 1
    _sorted: tuple = field(init=False, repr=False)

    def __post_init__(self):
        b = np.array(self.births, dtype=float).reshape(-1)
        d = np.array(self.deaths, dtype=float).reshape(-1)
        if b.shape != d.shape:
            raise ValidationError("births and deaths must have equal length")
        t_bound = float(self.t_bound)
        if not (t_bound > 0 and math.isfinite(t_bound)):
            raise ValidationError(f"t_bound must be positive and finite, got {self.t_bound!r}")
        if int(self.dim) < 0:
            raise ValidationError("homology dimension must be non-negative")
        _check_pairs(b, d, t_bound)
        keep = d > b
        b, d = b[keep], d[keep]
        b.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "births", b)
        object.__setattr__(self, "deaths", d)
        object.__setattr__(self, "t_bound", t_bound)
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "_sorted", tuple(sorted(zip(b.tolist(), d.tolist()))))

    @classmethod
    def from_pairs(cls, pairs: Iterable, t_bound: float, dim: int = 1) -> "Diagram":
        pairs = [(float(p[0]), float(p[1])) for p in pairs]
        if not pairs:
            return cls(np.empty(0), np.empty(0), t_bound, dim)
        b, d = zip(*pairs)
        return cls(np.asarray(b), np.asarray(d), t_bound, dim)

    @property
    def pairs(self) -> list[PersistencePair]:
        return [PersistencePair(b, d, self.dim) for b, d in zip(self.births.tolist(), self.deaths.tolist())]

    @property
    def persistences(self) -> np.ndarray:
        return self.deaths - self.births

    def __len__(self):
        return self.births.shape[0]

    def __iter__(self):
        return iter(self.pairs)

    def __eq__(self, other):
        if not isinstance(other, Diagram):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.t_bound == other.t_bound
            and self._sorted == other._sorted
        )

    def __hash__(self):
        return hash((self.dim, self.t_bound, self._sorted))

    def __repr__(self):
        return f"Diagram(dim={self.dim}, t_bound={self.t_bound!r}, pairs={list(self._sorted)!r})"


def _check_pairs(b, d, t_bound):
    for i, (bi, di) in enumerate(zip(b.tolist(), d.tolist())):
        _check_pair(bi, di, t_bound, f"pair {i}")


def _check_pair(birth, death, t_bound, where):
    if math.isnan(birth) or math.isnan(death):
        raise ValidationError(f"{where}: NaN value")
    if birth < 0:
        raise ValidationError(f"{where}: birth {birth!r} is negative")
    if death < birth:
        raise ValidationError(f"{where}: death {death!r} < birth {birth!r}")
    if death > t_bound:
        raise ValidationError(f"{where}: death {death!r} exceeds t_bound {t_bound!r}")


def _data_lines(text):
    if isinstance(text, str):
        text = io.StringIO(text)
    for lineno, raw in enumerate(text, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield lineno, line


def read_pair_rows(text) -> list[tuple[int, int, float, float]]:
    """Parse ``dim,birth,death`` rows as ``(lineno, dim, birth, death)``.

    No bound checks are made here; infinite deaths come back as ``inf``.
    """
    rows = []
    first = True
    for lineno, line in _data_lines(text):
        fields = [f.strip() for f in line.split(",")]
        if first and [f.lower() for f in fields] == HEADER.split(","):
            first = False
            continue
        first = False
        if len(fields) != 3:
            raise ParseError(f"expected 3 fields (dim,birth,death), got {len(fields)}", lineno)
        try:
            dim_f = float(fields[0])
            birth = float(fields[1])
            death = float(fields[2])
        except ValueError:
            raise ParseError(f"non-numeric field in {line!r}", lineno) from None
        if not dim_f.is_integer() or dim_f < 0:
            raise ParseError(f"dimension must be a non-negative integer, got {fields[0]!r}", lineno)
        rows.append((lineno, int(dim_f), birth, death))
    return rows


def parse_diagram(text, t_bound: float, dim: int = 1, truncate_essential: bool = False) -> Diagram:
    """Read the rows of dimension ``dim`` from CSV text or a text stream.

    Infinite deaths are rejected unless ``truncate_essential`` is set, in
    which case they are replaced by ``t_bound``.
    """
    if not t_bound > 0:
        raise ValidationError(f"t_bound must be positive, got {t_bound!r}")
    births, deaths = [], []
    for lineno, row_dim, birth, death in read_pair_rows(text):
        if row_dim != dim:
            continue
        if math.isinf(death) and death > 0:
            if not truncate_essential:
                raise ValidationError(
                    f"line {lineno}: infinite death (essential class); "
                    "pass truncate_essential=True to replace it with t_bound"
                )
            death = float(t_bound)
        _check_pair(birth, death, t_bound, f"line {lineno}")
        births.append(birth)
        deaths.append(death)
    return Diagram(np.asarray(births, dtype=float), np.asarray(deaths, dtype=float), t_bound, dim)


def write_diagram(d: Diagram, comments: Iterable[str] = ()) -> str:
    """Serialize to CSV; floats use ``repr`` so parsing round-trips exactly."""
    out = [f"# {c}" for c in comments]
    out.append(HEADER)
    out.extend(f"{d.dim},{b!r},{e!r}" for b, e in zip(d.births.tolist(), d.deaths.tolist()))
    return "\n".join(out) + "\n"


def write_diagrams(diagrams: Iterable[Diagram], comments: Iterable[str] = ()) -> str:
    """Several dimensions in one CSV body, ordered as given."""
    out = [f"# {c}" for c in comments]
    out.append(HEADER)
    for d in diagrams:
        out.extend(f"{d.dim},{b!r},{e!r}" for b, e in zip(d.births.tolist(), d.deaths.tolist()))
    return "\n".join(out) + "\n"
