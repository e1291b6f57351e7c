"""Chiplet placement on the 2-D package mesh.

Regions are laid out along a boustrophedon traversal (row 0 left-to-right,
row 1 right-to-left, ...), so consecutive pipeline regions always touch.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .errors import InvariantError, SizeMismatchError

Coord = tuple[int, int]


@dataclass(frozen=True)
class Mesh:
    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise InvariantError("mesh dimensions must be >= 1")

    @property
    def size(self) -> int:
        return self.rows * self.cols


@lru_cache(maxsize=None)
def _snake_order(rows: int, cols: int) -> tuple[Coord, ...]:
    order = []
    for r in range(rows):
        cs = range(cols) if r % 2 == 0 else range(cols - 1, -1, -1)
        order.extend((r, c) for c in cs)
    return tuple(order)


@lru_cache(maxsize=65536)
def zigzag_place(region_sizes: tuple[int, ...], mesh: Mesh) -> tuple[tuple[Coord, ...], ...]:
    """Assign consecutive chiplets along the boustrophedon traversal to
    consecutive regions.  The placements are disjoint, cover the mesh, and
    each region is contiguous along the traversal.
    """
    if any(s < 1 for s in region_sizes):
        raise SizeMismatchError("every region must have at least one chiplet")
    if sum(region_sizes) != mesh.size:
        raise SizeMismatchError(
            f"region sizes sum to {sum(region_sizes)}, mesh has {mesh.size} chiplets"
        )
    order = _snake_order(mesh.rows, mesh.cols)
    regions = []
    pos = 0
    for size in region_sizes:
        regions.append(order[pos:pos + size])
        pos += size
    return tuple(regions)


def boundary_width(a: tuple[Coord, ...], b: tuple[Coord, ...]) -> int:
    """Number of mesh-adjacent chiplet pairs with one end in each region.

    Used as a link-count cap on the bandwidth available between two regions.
    """
    sa, sb = set(a), set(b)
    if sa & sb:
        raise InvariantError("boundary_width requires disjoint regions")
    width = 0
    for (r, c) in sa:
        for nb in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if nb in sb:
                width += 1
    return width


@lru_cache(maxsize=65536)
def consecutive_boundaries(region_sizes: tuple[int, ...], mesh: Mesh) -> tuple[int, ...]:
    """Boundary widths between each pair of consecutive zigzag regions."""
    regions = zigzag_place(region_sizes, mesh)
    return tuple(
        boundary_width(regions[i], regions[i + 1]) for i in range(len(regions) - 1)
    )
