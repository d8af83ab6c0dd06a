"""Complete binary tree topology with heap-style vertex indexing.

Vertices are numbered 1..n with the root at 1; the children of an
internal vertex ``v`` are ``2*v`` (left) and ``2*v + 1`` (right).  All
structural queries used by the constraint families (root paths, child
pairs, descendant sets) are precomputed at construction so lookups are
O(1) afterwards.
"""

from __future__ import annotations

from .errors import InvalidVertexError, NoChildrenError


class TreeShape:
    """Shape of a complete binary tree of a given depth.

    Parameters
    ----------
    depth : int
        Depth ``h >= 1`` of the tree.  The tree then has
        ``n = 2**(h+1) - 1`` vertices, internal (branch-eligible)
        vertices ``1..2**h - 1`` and leaves ``2**h..n``.

    Attributes
    ----------
    depth : int
        The depth ``h``.
    n_vertices : int
        Total vertex count ``2**(h+1) - 1``.
    vertices : range
        All vertex ids, ``1..n``.
    branch_vertices : range
        Internal vertex ids, ``1..2**h - 1``.
    leaves : range
        Leaf vertex ids, ``2**h..n``.
    """

    def __init__(self, depth: int):
        if not isinstance(depth, int) or depth < 1:
            raise ValueError(f"depth must be a positive integer, got {depth!r}")
        self.depth = depth
        self.n_vertices = 2 ** (depth + 1) - 1
        self.vertices = range(1, self.n_vertices + 1)
        self.branch_vertices = range(1, 2**depth)
        self.leaves = range(2**depth, self.n_vertices + 1)
        self._paths = tuple(self._build_path(v) for v in self.vertices)
        self._descendants = tuple(
            self._build_descendants(v) for v in self.vertices
        )

    def _build_path(self, v: int) -> tuple[int, ...]:
        path = []
        while v >= 1:
            path.append(v)
            v //= 2
        return tuple(reversed(path))

    def _build_descendants(self, v: int) -> tuple[int, ...]:
        out = []
        frontier = [v]
        while frontier:
            u = frontier.pop()
            for child in (2 * u, 2 * u + 1):
                if child <= self.n_vertices:
                    out.append(child)
                    frontier.append(child)
        return tuple(sorted(out))

    def _check_vertex(self, v: int) -> None:
        if not isinstance(v, int) or v < 1 or v > self.n_vertices:
            raise InvalidVertexError(
                f"vertex {v!r} outside 1..{self.n_vertices}"
            )

    def is_leaf(self, v: int) -> bool:
        self._check_vertex(v)
        return v >= 2**self.depth

    def children(self, v: int) -> tuple[int, int]:
        """Return the (left, right) children of an internal vertex."""
        self._check_vertex(v)
        if self.is_leaf(v):
            raise NoChildrenError(f"vertex {v} is a leaf")
        return 2 * v, 2 * v + 1

    def left(self, v: int) -> int:
        return self.children(v)[0]

    def right(self, v: int) -> int:
        return self.children(v)[1]

    def parent(self, v: int) -> int:
        self._check_vertex(v)
        if v == 1:
            raise InvalidVertexError("the root has no parent")
        return v // 2

    def path_to(self, v: int) -> tuple[int, ...]:
        """Vertices on the unique root-to-``v`` path, root first."""
        self._check_vertex(v)
        return self._paths[v - 1]

    def descendant_set(self, v: int) -> tuple[int, ...]:
        """All proper descendants of ``v``, in increasing order."""
        self._check_vertex(v)
        return self._descendants[v - 1]

    def vertex_depth(self, v: int) -> int:
        self._check_vertex(v)
        return v.bit_length() - 1

    def __repr__(self) -> str:  # pragma: no cover
        return f"TreeShape(depth={self.depth})"
