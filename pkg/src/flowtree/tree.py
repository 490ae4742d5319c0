"""Finite truncations of the homogeneous tree T_q.

A truncation is the full q-ary band hanging below a single root vertex.
Vertices are addressed by their successor word from the root and stored
level-major: all vertices of one level occupy a contiguous id range, and
inside a level the word is read as a base-q integer (first digit most
significant).  With this layout the predecessor of the vertex with in-level
index ``i`` is ``i // q`` one level up, and its successors are
``q*i, ..., q*i + q - 1`` one level down, so most operators reduce to
``np.repeat`` / ``reshape(...).sum`` on level slices.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

DEFAULT_MAX_VERTICES = 1 << 24


class TreeError(ValueError):
    """Base class for invalid tree queries."""


class BudgetExceeded(TreeError):
    pass


class UnknownVertex(TreeError):
    pass


class OutOfBand(TreeError):
    pass


@dataclass(frozen=True)
class VertexRef:
    """A vertex given by its level and its successor word from the root."""

    level: int
    word: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "word", tuple(int(w) for w in self.word))


@dataclass(frozen=True)
class Trapezoid:
    """Admissible trapezoid F_{h_lo}^{h_hi}(top).

    ``h_lo == 0`` encodes the singleton {top}.
    """

    top: VertexRef
    h_lo: int
    h_hi: int

    def __post_init__(self):
        if self.is_singleton:
            return
        if self.h_lo < 1 or not (2 * self.h_lo <= self.h_hi <= 12 * self.h_lo):
            raise TreeError(
                f"not admissible: need 2 <= h''/h' <= 12, got h'={self.h_lo}, h''={self.h_hi}"
            )

    @classmethod
    def singleton(cls, x: VertexRef) -> "Trapezoid":
        return cls(x, 0, 1)

    @property
    def is_singleton(self) -> bool:
        return self.h_lo == 0 and self.h_hi == 1

    @property
    def enlargement_radius(self) -> int:
        # F* = {d(x, F) < h'}; singletons are their own enlargement
        return max(self.h_lo, 1) - 1


class Truncation:
    """Full q-ary band of T_q between ``root_level`` and ``bottom_level``.

    Parameters
    ----------
    q : int
        Branching number, ``q >= 2``.
    root_level, bottom_level : int
        Levels of the root and of the deepest layer, ``bottom_level <= root_level``.
    max_vertices : int
        Memory cap on the vertex count.
    """

    def __init__(self, q: int, root_level: int, bottom_level: int,
                 max_vertices: int = DEFAULT_MAX_VERTICES):
        q, root_level, bottom_level = int(q), int(root_level), int(bottom_level)
        if q < 2:
            raise TreeError(f"q must be >= 2, got {q}")
        if bottom_level > root_level:
            raise TreeError("bottom_level must not exceed root_level")
        height = root_level - bottom_level
        total = (q ** (height + 1) - 1) // (q - 1)
        if total > max_vertices:
            raise BudgetExceeded(f"{total} vertices exceed the cap of {max_vertices}")
        self.q = q
        self.root_level = root_level
        self.bottom_level = bottom_level
        self.height = height
        self.size = total
        self.offsets = np.array([(q ** d - 1) // (q - 1) for d in range(height + 2)], dtype=np.int64)

    def __repr__(self):
        return f"Truncation(q={self.q}, root_level={self.root_level}, bottom_level={self.bottom_level})"

    def __eq__(self, other):
        return (isinstance(other, Truncation) and
                (self.q, self.root_level, self.bottom_level) ==
                (other.q, other.root_level, other.bottom_level))

    def __hash__(self):
        return hash((self.q, self.root_level, self.bottom_level))

    # -- layout -----------------------------------------------------------

    def level_slice(self, depth: int) -> slice:
        return slice(int(self.offsets[depth]), int(self.offsets[depth + 1]))

    def level_size(self, depth: int) -> int:
        return self.q ** depth

    @cached_property
    def depth(self) -> np.ndarray:
        """Depth below the root for every vertex id."""
        out = np.empty(self.size, dtype=np.int64)
        for d in range(self.height + 1):
            out[self.level_slice(d)] = d
        out.setflags(write=False)
        return out

    @cached_property
    def level(self) -> np.ndarray:
        out = self.root_level - self.depth
        out.setflags(write=False)
        return out

    @cached_property
    def position(self) -> np.ndarray:
        """In-level index of every vertex id."""
        out = np.arange(self.size, dtype=np.int64) - self.offsets[self.depth]
        out.setflags(write=False)
        return out

    @cached_property
    def parent(self) -> np.ndarray:
        """Predecessor id of every vertex, -1 at the root."""
        out = np.full(self.size, -1, dtype=np.int64)
        d = self.depth[1:]
        out[1:] = self.offsets[d - 1] + self.position[1:] // self.q
        out.setflags(write=False)
        return out

    @property
    def root(self) -> VertexRef:
        return VertexRef(self.root_level, ())

    # -- id <-> VertexRef -------------------------------------------------

    def contains(self, x: VertexRef) -> bool:
        d = len(x.word)
        return (x.level == self.root_level - d and d <= self.height
                and all(0 <= w < self.q for w in x.word))

    def index(self, x: VertexRef) -> int:
        if not self.contains(x):
            raise UnknownVertex(f"{x} is not a vertex of {self}")
        pos = 0
        for w in x.word:
            pos = pos * self.q + w
        return int(self.offsets[len(x.word)]) + pos

    def vertex(self, vid: int) -> VertexRef:
        vid = int(vid)
        if not 0 <= vid < self.size:
            raise UnknownVertex(f"id {vid} out of range")
        d = int(self.depth[vid])
        pos = int(self.position[vid])
        word = []
        for _ in range(d):
            pos, r = divmod(pos, self.q)
            word.append(r)
        return VertexRef(self.root_level - d, tuple(reversed(word)))

    def ancestor_ids(self, ids: np.ndarray, steps: int) -> np.ndarray:
        """Ids of ``p^steps`` applied to each id (caller ensures depth >= steps)."""
        ids = np.asarray(ids, dtype=np.int64)
        d = self.depth[ids]
        if np.any(d < steps):
            raise OutOfBand("ancestor above the truncation root")
        return self.offsets[d - steps] + self.position[ids] // self.q ** steps

    # -- vectorised geometry ----------------------------------------------

    def distances_from(self, vid: int) -> np.ndarray:
        """Graph distance from ``vid`` to every vertex of the truncation."""
        dy = int(self.depth[vid])
        py = int(self.position[vid])
        depth, pos = self.depth, self.position
        # depth of the lowest common ancestor: largest k <= min(dx, dy)
        # with equal depth-k ancestors
        lca = np.zeros(self.size, dtype=np.int64)
        for k in range(1, dy + 1):
            anc_y = py // self.q ** (dy - k)
            ok = depth >= k
            shift = np.where(ok, depth - k, 0)
            same = ok & (pos // self.q ** shift == anc_y)
            lca[same] = k
        return depth + dy - 2 * lca

    def ball_mask(self, seeds: np.ndarray, radius: int) -> np.ndarray:
        """Vertices within graph distance ``radius`` of the seed set."""
        mask = np.zeros(self.size, dtype=bool)
        mask[np.asarray(seeds, dtype=np.int64)] = True
        for _ in range(radius):
            grown = mask.copy()
            nonroot = np.flatnonzero(mask[1:]) + 1
            grown[self.parent[nonroot]] = True
            # successors of marked vertices above the bottom layer
            for d in range(self.height):
                sl = self.level_slice(d)
                below = self.level_slice(d + 1)
                grown[below] |= np.repeat(mask[sl], self.q)
            mask = grown
        return mask


def build_truncation(q: int, root_level: int, bottom_level: int,
                     max_vertices: int = DEFAULT_MAX_VERTICES) -> Truncation:
    return Truncation(q, root_level, bottom_level, max_vertices=max_vertices)


def predecessor(t: Truncation, x: VertexRef) -> VertexRef | None:
    if not t.contains(x):
        raise UnknownVertex(f"{x} is not a vertex of {t}")
    if not x.word:
        return None
    return VertexRef(x.level + 1, x.word[:-1])


def successors(t: Truncation, x: VertexRef) -> list[VertexRef]:
    if not t.contains(x):
        raise UnknownVertex(f"{x} is not a vertex of {t}")
    if x.level == t.bottom_level:
        return []
    return [VertexRef(x.level - 1, x.word + (j,)) for j in range(t.q)]


def distance(x: VertexRef, y: VertexRef) -> int:
    """Graph distance between two vertices addressed from the same root."""
    common = 0
    for a, b in zip(x.word, y.word):
        if a != b:
            break
        common += 1
    return len(x.word) + len(y.word) - 2 * common


def is_below(x: VertexRef, y: VertexRef) -> bool:
    """The partial order x <= y: y lies on the path from x to the mythical ancestor."""
    return len(y.word) <= len(x.word) and x.word[:len(y.word)] == y.word


def descendants_n(t: Truncation, x: VertexRef, n: int) -> list[VertexRef]:
    return [t.vertex(i) for i in descendant_ids(t, x, n)]


def descendant_ids(t: Truncation, x: VertexRef, n: int) -> np.ndarray:
    """Ids of succ^n(x): the q^n descendants of x exactly n levels down."""
    vid = t.index(x)
    d = int(t.depth[vid]) + n
    if n < 0 or d > t.height:
        raise OutOfBand(f"level {x.level - n} is outside the band of {t}")
    first = int(t.offsets[d]) + int(t.position[vid]) * t.q ** n
    return np.arange(first, first + t.q ** n, dtype=np.int64)


def trapezoid_ids(t: Truncation, F: Trapezoid) -> np.ndarray:
    if F.is_singleton:
        return np.array([t.index(F.top)], dtype=np.int64)
    return np.concatenate([descendant_ids(t, F.top, j) for j in range(F.h_lo, F.h_hi)])


def trapezoid_vertices(t: Truncation, F: Trapezoid) -> set[VertexRef]:
    return {t.vertex(i) for i in trapezoid_ids(t, F)}


def trapezoid_enlargement_mask(t: Truncation, F: Trapezoid) -> np.ndarray:
    return t.ball_mask(trapezoid_ids(t, F), F.enlargement_radius)


def trapezoid_enlargement(t: Truncation, F: Trapezoid) -> set[VertexRef]:
    return {t.vertex(i) for i in np.flatnonzero(trapezoid_enlargement_mask(t, F))}
