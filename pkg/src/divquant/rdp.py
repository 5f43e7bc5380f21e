"""Recursive dyadic partition trees: minimal encoding of labeled dyadic grids.

A tree node either carries a single label (leaf) or splits its hypercube into
``2**d`` equal children.  Child ``q`` is placed by the binary digits of ``q``
written MSB-first per axis: digit 0 picks the lower half of that axis, digit 1
the upper half (axis 1 is the most significant digit).

Wire format (all integers little-endian):

    magic      4 bytes   b"RDP1"
    dimension  uint32
    max_depth  uint32
    levels     uint32
    nodes      preorder; 0x01 introduces an internal node followed by its
               2**dimension children, 0x00 a leaf followed by a uint16 label
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .grid import GridSpec

__all__ = [
    "MalformedRdpError",
    "RdpLeaf",
    "RdpInternal",
    "RdpTree",
    "build_minimal_rdp",
    "to_labeling",
    "quantize",
    "quantize_batch",
    "serialize",
    "deserialize",
    "is_minimal",
    "leaf_count",
]

_MAGIC = b"RDP1"
_MAX_DIMENSION = 16
_MAX_DEPTH = 32


class MalformedRdpError(ValueError):
    """A serialized tree failed structural validation."""


@dataclass(frozen=True)
class RdpLeaf:
    label: int


@dataclass(frozen=True)
class RdpInternal:
    children: tuple


@dataclass(frozen=True)
class RdpTree:
    dimension: int
    max_depth: int
    levels: int
    root: object


def _child_block(block: np.ndarray, child: int, dimension: int) -> np.ndarray:
    half = block.shape[0] // 2
    slicer = []
    for axis in range(dimension):
        bit = (child >> (dimension - 1 - axis)) & 1
        slicer.append(slice(half * bit, half * (bit + 1)))
    return block[tuple(slicer)]


def build_minimal_rdp(grid: GridSpec, labels, levels: int | None = None) -> RdpTree:
    """Smallest tree whose leaves reproduce a cell labeling.

    A hypercube is split only while its cells carry more than one label, so
    no internal node ever has uniformly labeled descendants.
    """
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.size != grid.cell_count:
        raise ValueError("labels must have one entry per grid cell")
    if np.any(labels < 0):
        raise ValueError("labels must be non-negative")
    if levels is None:
        levels = int(labels.max()) + 1 if labels.size else 1
    if labels.size and int(labels.max()) >= levels:
        raise ValueError("labels must lie in [0, levels)")
    d = grid.dimension
    block = labels.reshape((grid.cells_per_axis,) * d, order="F")

    def build(sub: np.ndarray):
        first = int(sub.flat[0])
        if sub.size == 1 or np.all(sub == first):
            return RdpLeaf(first)
        return RdpInternal(tuple(
            build(_child_block(sub, q, d)) for q in range(1 << d)
        ))

    return RdpTree(dimension=d, max_depth=grid.depth, levels=int(levels),
                   root=build(block))


def to_labeling(tree: RdpTree, grid: GridSpec) -> np.ndarray:
    """Expand a tree back into the per-cell labels of ``grid``.

    Inverse of :func:`build_minimal_rdp` for a grid of matching dimension
    and depth.
    """
    if grid.dimension != tree.dimension or grid.depth != tree.max_depth:
        raise ValueError("tree and grid disagree on dimension or depth")
    d = tree.dimension
    out = np.empty((grid.cells_per_axis,) * d, dtype=np.int64)

    def fill(node, block):
        if isinstance(node, RdpLeaf):
            block[...] = node.label
            return
        if block.shape[0] < 2:
            raise MalformedRdpError("tree splits below its maximum depth")
        for q, child in enumerate(node.children):
            fill(child, _child_block(block, q, d))

    fill(tree.root, out)
    return out.ravel(order="F")


def quantize(tree: RdpTree, grid: GridSpec, point) -> int | None:
    """Label of a single point by tree descent; ``None`` outside the box."""
    z = np.atleast_1d(grid.normalize(point))
    if z.size != tree.dimension:
        raise ValueError("point dimension does not match the tree")
    if not np.all((z >= 0.0) & (z <= 1.0)):
        return None
    node = tree.root
    d = tree.dimension
    while isinstance(node, RdpInternal):
        q = 0
        for axis in range(d):
            bit = 1 if z[axis] >= 0.5 else 0
            q = (q << 1) | bit
            z[axis] = 2.0 * z[axis] - bit
        node = node.children[q]
    return node.label


def quantize_batch(tree: RdpTree, grid: GridSpec, points) -> np.ndarray:
    """Vectorized :func:`quantize`; points outside the box get label -1."""
    if grid.dimension != tree.dimension:
        raise ValueError("points dimension does not match the tree")
    z = grid.normalize(np.asarray(points, dtype=float).reshape(-1, tree.dimension))
    out = np.full(z.shape[0], -1, dtype=np.int64)
    inside = np.all((z >= 0.0) & (z <= 1.0), axis=1)

    def descend(node, idx, zs):
        if isinstance(node, RdpLeaf):
            out[idx] = node.label
            return
        d = tree.dimension
        bits = zs >= 0.5
        q = np.zeros(len(idx), dtype=np.int64)
        for axis in range(d):
            q = (q << 1) | bits[:, axis]
        zs = 2.0 * zs - bits
        for child in np.unique(q):
            mask = q == child
            descend(node.children[child], idx[mask], zs[mask])

    idx_inside = np.nonzero(inside)[0]
    if idx_inside.size:
        descend(tree.root, idx_inside, z[idx_inside])
    return out


def serialize(tree: RdpTree) -> bytes:
    """Encode a tree in the binary wire format."""
    if not 1 <= tree.dimension <= _MAX_DIMENSION:
        raise ValueError("dimension out of range for serialization")
    if not 0 <= tree.max_depth <= _MAX_DEPTH:
        raise ValueError("max_depth out of range for serialization")
    if not 1 <= tree.levels <= 0x10000:
        raise ValueError("levels must fit a 16-bit label")
    parts = [struct.pack("<4sIII", _MAGIC, tree.dimension, tree.max_depth, tree.levels)]

    def emit(node):
        if isinstance(node, RdpLeaf):
            if not 0 <= node.label < tree.levels:
                raise ValueError("leaf label outside [0, levels)")
            parts.append(struct.pack("<BH", 0, node.label))
        else:
            parts.append(b"\x01")
            for child in node.children:
                emit(child)

    emit(tree.root)
    return b"".join(parts)


def deserialize(data: bytes) -> RdpTree:
    """Decode the binary wire format, validating structure as it parses."""
    if len(data) < 16:
        raise MalformedRdpError("truncated header")
    magic, dimension, max_depth, levels = struct.unpack_from("<4sIII", data, 0)
    if magic != _MAGIC:
        raise MalformedRdpError("bad magic")
    if not 1 <= dimension <= _MAX_DIMENSION:
        raise MalformedRdpError(f"dimension {dimension} out of range")
    if max_depth > _MAX_DEPTH:
        raise MalformedRdpError(f"max_depth {max_depth} out of range")
    if levels < 1 or levels > 0x10000:
        raise MalformedRdpError(f"levels {levels} out of range")
    fanout = 1 << dimension
    offset = 16

    def parse(depth):
        nonlocal offset
        if offset >= len(data):
            raise MalformedRdpError("truncated node stream")
        tag = data[offset]
        offset += 1
        if tag == 0:
            if offset + 2 > len(data):
                raise MalformedRdpError("truncated leaf label")
            (label,) = struct.unpack_from("<H", data, offset)
            offset += 2
            if label >= levels:
                raise MalformedRdpError(f"label {label} >= levels {levels}")
            return RdpLeaf(label)
        if tag == 1:
            if depth >= max_depth:
                raise MalformedRdpError("split below the maximum depth")
            return RdpInternal(tuple(parse(depth + 1) for _ in range(fanout)))
        raise MalformedRdpError(f"unknown node tag {tag}")

    root = parse(0)
    if offset != len(data):
        raise MalformedRdpError("trailing bytes after the tree")
    return RdpTree(dimension=dimension, max_depth=max_depth, levels=levels, root=root)


def is_minimal(tree: RdpTree) -> bool:
    """Scan for internal nodes whose whole subtree carries a single label."""

    def scan(node):
        # returns (uniform label or None, subtree minimal)
        if isinstance(node, RdpLeaf):
            return node.label, True
        results = [scan(child) for child in node.children]
        minimal = all(r[1] for r in results)
        labels = {r[0] for r in results}
        if len(labels) == 1 and None not in labels:
            return labels.pop(), False
        return None, minimal

    return scan(tree.root)[1]


def leaf_count(tree: RdpTree) -> int:
    def count(node):
        if isinstance(node, RdpLeaf):
            return 1
        return sum(count(child) for child in node.children)

    return count(tree.root)
