"""Isotropic and tensor-product Haar systems on the unit cube.

The isotropic system is organized in blocks: block 0 is the constant
indicator of [0,1)^d; block k >= 1 holds, for every level-(k-1) parent cube,
the 2^d - 1 sign patterns obtained by tensoring the one-dimensional step
chi_[0,1/2) - chi_[1/2,1) into a nonempty subset of the axes.  All functions
are sup-normalized (values in {-1, 0, +1}), and every coefficient computed
here is the exact L2 orthoprojection coefficient lambda_h = <g, h> / <h, h>.

Pattern convention: a pattern is an integer in [1, 2^d); bit (d-1-j) of the
pattern selects axis j (axis 0 is the most significant bit), matching the
row-major child ordering of the local 2^d x 2^d sign transform.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .dyadic import (
    DEFAULT_CELL_BUDGET,
    DyadicCube,
    DyadicStepFunction,
    SparseAtom,
    SparseStepFunction,
    densify,
    stable_sum,
)

__all__ = [
    "HaarIndex",
    "HaarCoefficients",
    "TensorHaarCoefficients",
    "analyze",
    "block_size",
    "haar_function",
    "level_indices",
    "partial_sum_subset",
    "rank_one_project",
    "synthesize",
    "tensor_analyze",
    "tensor_block_level",
    "tensor_block_order",
    "tensor_coefficient",
    "tensor_haar_function",
    "tensor_synthesize",
    "univariate_haar_vector",
]


@dataclass(frozen=True)
class HaarIndex:
    """Either the scaling index (level 0) or a wavelet (level, parent, pattern)."""

    d: int
    level: int
    parent: DyadicCube | None
    pattern: int

    def __post_init__(self):
        if self.level == 0:
            if self.parent is not None or self.pattern != 0:
                raise ValueError("scaling index must have no parent and pattern 0")
        else:
            if self.parent is None or self.parent.d != self.d:
                raise ValueError("wavelet index needs a parent cube of matching d")
            if self.parent.level != self.level - 1:
                raise ValueError("parent cube must sit one level above the wavelet")
            if not 1 <= self.pattern < (1 << self.d):
                raise ValueError("pattern must be a nonzero element of {0,1}^d")

    @classmethod
    def scaling(cls, d: int) -> "HaarIndex":
        return cls(d, 0, None, 0)

    @classmethod
    def wavelet(cls, parent: DyadicCube, pattern: int) -> "HaarIndex":
        return cls(parent.d, parent.level + 1, parent, pattern)

    @property
    def support(self) -> DyadicCube:
        return self.parent if self.parent is not None else DyadicCube.root(self.d)

    @property
    def support_measure(self) -> float:
        return self.support.measure


def block_size(d: int, k: int) -> int:
    """Number of indices in block k: 1 for k=0, else (2^d - 1) * 2^((k-1)d)."""
    if k == 0:
        return 1
    return ((1 << d) - 1) * (1 << ((k - 1) * d))


def level_indices(d: int, k: int) -> Iterable[HaarIndex]:
    """Block-k indices, lexicographic in (parent index, pattern)."""
    if k == 0:
        yield HaarIndex.scaling(d)
        return
    n = 1 << (k - 1)
    from itertools import product

    for idx in product(range(n), repeat=d):
        parent = DyadicCube(d, k - 1, idx)
        for pat in range(1, 1 << d):
            yield HaarIndex.wavelet(parent, pat)


def _pattern_sign(pattern: int, child_bits: int) -> int:
    return 1 - 2 * ((pattern & child_bits).bit_count() & 1)


def haar_function(idx: HaarIndex) -> SparseStepFunction:
    """The Haar function as a sparse step function with unit atoms."""
    if idx.level == 0:
        atoms = [SparseAtom(DyadicCube.root(idx.d), 1, 0.0)]
        return SparseStepFunction(idx.d, atoms, atoms_disjoint=True)
    d = idx.d
    atoms = []
    for bits_int in range(1 << d):
        bits = tuple((bits_int >> (d - 1 - j)) & 1 for j in range(d))
        atoms.append(
            SparseAtom(idx.parent.child(bits), _pattern_sign(idx.pattern, bits_int), 0.0)
        )
    return SparseStepFunction(d, atoms, atoms_disjoint=True)


def _sign_matrix(d: int) -> np.ndarray:
    """2^d x 2^d symmetric matrix M[e, c] = (-1)^popcount(e & c)."""
    size = 1 << d
    e = np.arange(size)
    pop = np.bitwise_count(e[:, None] & e[None, :])
    return 1.0 - 2.0 * (pop & 1)


def _split_children(a: np.ndarray, d: int) -> np.ndarray:
    """(2n,)*d array -> (n,)*d + (2^d,) array of per-parent child values."""
    n = a.shape[0] // 2
    shape = sum(((n, 2) for _ in range(d)), ())
    coarse = tuple(range(0, 2 * d, 2))
    fine = tuple(range(1, 2 * d, 2))
    return a.reshape(shape).transpose(coarse + fine).reshape((n,) * d + (1 << d,))


def _merge_children(child: np.ndarray, d: int) -> np.ndarray:
    """Inverse of :func:`_split_children`."""
    n = child.shape[0]
    interleave = sum(((j, d + j) for j in range(d)), ())
    return (
        child.reshape((n,) * d + (2,) * d)
        .transpose(interleave)
        .reshape((2 * n,) * d)
    )


class HaarCoefficients:
    """Orthoprojection coefficients of a level-K step function.

    ``blocks[k-1]`` has shape (2^(k-1),)*d + (2^d - 1,); the trailing axis is
    the pattern minus one.  Treat instances as immutable.
    """

    __slots__ = ("d", "max_level", "scaling", "blocks")

    def __init__(self, d: int, max_level: int, scaling: float, blocks):
        self.d = d
        self.max_level = max_level
        self.scaling = float(scaling)
        blocks = list(blocks)
        if len(blocks) != max_level:
            raise ValueError("need one block array per level 1..K")
        for k, b in enumerate(blocks, start=1):
            want = ((1 << (k - 1)),) * d + ((1 << d) - 1,)
            if b.shape != want:
                raise ValueError(f"block {k} has shape {b.shape}, expected {want}")
        self.blocks = blocks

    @classmethod
    def zeros(cls, d: int, max_level: int) -> "HaarCoefficients":
        blocks = [
            np.zeros(((1 << (k - 1)),) * d + ((1 << d) - 1,))
            for k in range(1, max_level + 1)
        ]
        return cls(d, max_level, 0.0, blocks)

    def coefficient(self, idx: HaarIndex) -> float:
        if idx.d != self.d:
            raise ValueError("dimension mismatch")
        if idx.level == 0:
            return self.scaling
        if idx.level > self.max_level:
            return 0.0
        return float(self.blocks[idx.level - 1][idx.parent.index + (idx.pattern - 1,)])

    def level_magnitudes(self, k: int) -> np.ndarray:
        """|lambda| over block k, flattened (k=0 gives the scaling value)."""
        if k == 0:
            return np.array([abs(self.scaling)])
        if k > self.max_level:
            return np.zeros(0)
        return np.abs(self.blocks[k - 1]).ravel()

    def iter_entries(self, include_zero: bool = False):
        yield HaarIndex.scaling(self.d), self.scaling
        for k in range(1, self.max_level + 1):
            block = self.blocks[k - 1]
            it = np.ndindex(block.shape[: self.d])
            for pidx in it:
                parent = DyadicCube(self.d, k - 1, pidx)
                for pat in range(1, 1 << self.d):
                    v = float(block[pidx + (pat - 1,)])
                    if include_zero or v != 0.0:
                        yield HaarIndex.wavelet(parent, pat), v

    def to_json(self) -> str:
        levels = [
            {
                "k": 0,
                "entries": [{"parent": [], "pattern": 0, "value": self.scaling}],
            }
        ]
        for k in range(1, self.max_level + 1):
            entries = []
            block = self.blocks[k - 1]
            for pidx in np.ndindex(block.shape[: self.d]):
                for pat in range(1, 1 << self.d):
                    v = float(block[pidx + (pat - 1,)])
                    if v != 0.0:
                        entries.append(
                            {"parent": list(pidx), "pattern": pat, "value": v}
                        )
            levels.append({"k": k, "entries": entries})
        return json.dumps(
            {"d": self.d, "K": self.max_level, "levels": levels}, sort_keys=True
        )

    @classmethod
    def from_json(cls, text: str) -> "HaarCoefficients":
        obj = json.loads(text)
        d, kmax = int(obj["d"]), int(obj["K"])
        out = cls.zeros(d, kmax)
        scaling = 0.0
        for level in obj["levels"]:
            k = int(level["k"])
            for rec in level["entries"]:
                if k == 0:
                    scaling = float(rec["value"])
                else:
                    pidx = tuple(int(i) for i in rec["parent"])
                    out.blocks[k - 1][pidx + (int(rec["pattern"]) - 1,)] = float(
                        rec["value"]
                    )
        return cls(d, kmax, scaling, out.blocks)


def analyze(f: DyadicStepFunction) -> HaarCoefficients:
    """Exact orthoprojection Haar coefficients via the averaging cascade.

    Per level the local 2^d x 2^d sign transform resolves the block
    coefficients from child averages; the all-plus row carries the parent
    averages down to the next level.
    """
    d, m = f.d, f.level
    M = _sign_matrix(d)
    inv = M / (1 << d)
    a = np.array(f.values, dtype=float)
    blocks: list[np.ndarray] = [None] * m
    for k in range(m, 0, -1):
        coef = _split_children(a, d) @ inv
        a = np.ascontiguousarray(coef[..., 0])
        blocks[k - 1] = np.ascontiguousarray(coef[..., 1:])
    return HaarCoefficients(d, m, float(a.reshape(())), blocks)


def synthesize(
    c: HaarCoefficients, m: int, max_cells: int = DEFAULT_CELL_BUDGET
) -> DyadicStepFunction:
    """Evaluate sum(lambda_h * h) on the level-m grid (m >= K)."""
    if m < c.max_level:
        raise ValueError("synthesis level below the coefficient depth")
    d = c.d
    M = _sign_matrix(d)
    a = np.full((1,) * d, c.scaling)
    for k in range(1, c.max_level + 1):
        coef = np.concatenate([a[..., None], c.blocks[k - 1]], axis=-1)
        a = _merge_children(coef @ M, d)
    return DyadicStepFunction(d, c.max_level, a).refine(m, max_cells)


def partial_sum_subset(
    f,
    indices: Iterable[HaarIndex],
    signs: Sequence[int] | None = None,
    max_cells: int = DEFAULT_CELL_BUDGET,
) -> DyadicStepFunction:
    """sum over h in J of theta_h * lambda_h(f) * h, for a finite index set J.

    With J = all indices of level <= K and unit signs this is the level-K
    averaging projector.  ``signs`` aligns with the iteration order of
    ``indices``; J is treated as a set (duplicates collapse).
    """
    J = list(indices)
    if signs is None:
        signs = [1] * len(J)
    signs = list(signs)
    if len(signs) != len(J):
        raise ValueError("need one sign per index")
    if any(s not in (-1, 1) for s in signs):
        raise ValueError("signs must be +/-1")
    src_level = f.level if isinstance(f, DyadicStepFunction) else f.max_level
    top = max([src_level] + [idx.level for idx in J])
    fd = densify(f, top, max_cells)
    c = analyze(fd)
    out = HaarCoefficients.zeros(c.d, c.max_level)
    for idx, s in zip(J, signs):
        if idx.level == 0:
            out.scaling = s * c.scaling
        else:
            pos = idx.parent.index + (idx.pattern - 1,)
            out.blocks[idx.level - 1][pos] = s * c.blocks[idx.level - 1][pos]
    return synthesize(out, top, max_cells)


# ---------------------------------------------------------------------------
# tensor-product system
# ---------------------------------------------------------------------------


def tensor_block_level(n: Sequence[int]) -> int:
    """Block of h_{n_1} x ... x h_{n_d}: max over axes of the univariate level."""
    levels = []
    for ni in n:
        if ni < 1:
            raise ValueError("tensor indices are positive integers")
        levels.append((ni - 1).bit_length())
    return max(levels)


def univariate_haar_vector(n: int, m: int) -> np.ndarray:
    """Cell values of the n-th univariate Haar function on the level-m grid."""
    if n < 1:
        raise ValueError("index must be >= 1")
    size = 1 << m
    if n == 1:
        return np.ones(size)
    k = (n - 1).bit_length()
    if m < k:
        raise ValueError("grid too coarse for this index")
    i = n - (1 << (k - 1))  # position 1..2^(k-1)
    half = 1 << (m - k)
    start = (i - 1) * 2 * half
    v = np.zeros(size)
    v[start : start + half] = 1.0
    v[start + half : start + 2 * half] = -1.0
    return v


def tensor_haar_function(d: int, n: Sequence[int], m: int) -> DyadicStepFunction:
    """Dense tensor-product Haar function h_{n_1} x ... x h_{n_d} at level m."""
    n = tuple(n)
    if len(n) != d:
        raise ValueError("need one univariate index per axis")
    out = univariate_haar_vector(n[0], m)
    for ni in n[1:]:
        out = np.multiply.outer(out, univariate_haar_vector(ni, m))
    return DyadicStepFunction(d, m, out)


def _tensor_support_measure(n: Sequence[int]) -> float:
    meas = 1.0
    for ni in n:
        if ni > 1:
            k = (ni - 1).bit_length()
            meas *= 2.0 ** (-(k - 1))
    return meas


class TensorHaarCoefficients:
    """Full separable Haar transform: one coefficient per multi-index n.

    ``array[n_1 - 1, ..., n_d - 1]`` is the orthoprojection coefficient of
    h_{n_1} x ... x h_{n_d}; along each axis, position 0 is the constant and
    positions 2^(k-1)..2^k - 1 hold level k.
    """

    __slots__ = ("d", "level", "array")

    def __init__(self, d: int, level: int, array: np.ndarray):
        self.d = d
        self.level = level
        want = ((1 << level),) * d
        if array.shape != want:
            raise ValueError(f"expected shape {want}")
        self.array = array

    def coefficient(self, n: Sequence[int]) -> float:
        return float(self.array[tuple(ni - 1 for ni in n)])

    def to_json(self) -> str:
        entries = []
        for pos in np.ndindex(self.array.shape):
            v = float(self.array[pos])
            if v != 0.0:
                entries.append({"n": [i + 1 for i in pos], "value": v})
        return json.dumps({"d": self.d, "entries": entries}, sort_keys=True)

    @classmethod
    def from_json(cls, text: str, level: int) -> "TensorHaarCoefficients":
        obj = json.loads(text)
        d = int(obj["d"])
        arr = np.zeros(((1 << level),) * d)
        for rec in obj["entries"]:
            arr[tuple(int(i) - 1 for i in rec["n"])] = float(rec["value"])
        return cls(d, level, arr)


def _dwt_forward_axis(a: np.ndarray) -> np.ndarray:
    """In-place-layout univariate orthoprojection transform along axis 0."""
    a = a.copy()
    size = a.shape[0]
    while size > 1:
        half = size // 2
        even = a[0:size:2].copy()
        odd = a[1:size:2].copy()
        a[:half] = (even + odd) / 2
        a[half:size] = (even - odd) / 2
        size = half
    return a


def _dwt_inverse_axis(a: np.ndarray) -> np.ndarray:
    a = a.copy()
    n = a.shape[0]
    size = 2
    while size <= n:
        half = size // 2
        avg = a[:half].copy()
        diff = a[half:size].copy()
        a[0:size:2] = avg + diff
        a[1:size:2] = avg - diff
        size *= 2
    return a


def tensor_analyze(f: DyadicStepFunction) -> TensorHaarCoefficients:
    """Separable transform: univariate Haar analysis applied along each axis."""
    a = np.array(f.values, dtype=float)
    for axis in range(f.d):
        a = np.moveaxis(_dwt_forward_axis(np.moveaxis(a, axis, 0)), 0, axis)
    return TensorHaarCoefficients(f.d, f.level, a)


def tensor_synthesize(
    c: TensorHaarCoefficients, m: int | None = None, max_cells: int = DEFAULT_CELL_BUDGET
) -> DyadicStepFunction:
    a = np.array(c.array, dtype=float)
    for axis in range(c.d):
        a = np.moveaxis(_dwt_inverse_axis(np.moveaxis(a, axis, 0)), 0, axis)
    out = DyadicStepFunction(c.d, c.level, a)
    if m is not None and m != c.level:
        out = out.refine(m, max_cells)
    return out


def tensor_coefficient(f: DyadicStepFunction, n: Sequence[int]) -> float:
    """<f, theta> / <theta, theta> by direct quadrature (no full transform)."""
    top = max(f.level, tensor_block_level(n))
    fd = f.refine(top)
    theta = tensor_haar_function(f.d, n, top)
    num = stable_sum(fd.values * theta.values) * fd.cell_measure
    return num / _tensor_support_measure(n)


def rank_one_project(f: DyadicStepFunction, n: Sequence[int]) -> DyadicStepFunction:
    """L_2 orthoprojection of f onto the span of one tensor Haar function."""
    top = max(f.level, tensor_block_level(n))
    lam = tensor_coefficient(f, n)
    theta = tensor_haar_function(f.d, n, top)
    return DyadicStepFunction(f.d, top, lam * theta.values)


def tensor_block_order(block: int, d: int = 2) -> list[tuple[int, int]]:
    """Schauder ordering of tensor block ``block`` for d=2.

    Block 0 is [(1, 1)].  Block b >= 1 lists first the indices with a new
    first factor {(2^k + i, n): i = 1..2^k, n = 1..2^(k+1)} and then those
    with a new second factor {(n, 2^k + i): i = 1..2^k, n = 1..2^k}, each
    lexicographic in (i, n), where k = b - 1.
    """
    if d != 2:
        raise ValueError("explicit tensor ordering is only defined for d = 2")
    if block < 0:
        raise ValueError("block must be nonnegative")
    if block == 0:
        return [(1, 1)]
    half = 1 << (block - 1)
    out = [
        (half + i, nn)
        for i in range(1, half + 1)
        for nn in range(1, 2 * half + 1)
    ]
    out += [
        (nn, half + i)
        for i in range(1, half + 1)
        for nn in range(1, half + 1)
    ]
    return out
