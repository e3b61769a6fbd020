"""Dyadic cubes and piecewise-constant step functions on the unit cube.

Geometry is exact: a half-open dyadic cube of level k in [0,1)^d is a tuple
of integer indices, so nesting, ancestry and measure are integer operations
even at depths far beyond anything a dense grid could hold.  Two function
representations coexist:

* ``DyadicStepFunction`` -- one value per cell of the uniform level-m grid,
  stored as a d-dimensional array in row-major multi-index order.
* ``SparseStepFunction`` -- a finite sum of coefficient * indicator-of-cube
  atoms.  Coefficients are kept as sign plus log2 of magnitude, because the
  extremal families used downstream carry coefficients like 2**((k+i)*d)
  at cell depths where plain doubles overflow.

All objects are immutable values after construction and every operation is
pure.  Reductions run in a fixed order (exactly rounded ``math.fsum`` for
norm accumulations), so results are bit-stable across runs.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "DEFAULT_CELL_BUDGET",
    "CapacityError",
    "DyadicCube",
    "DyadicStepFunction",
    "SparseAtom",
    "SparseStepFunction",
    "ValueHistogram",
    "average_project",
    "densify",
    "lp_quasinorm",
    "refine",
    "stable_sum",
    "logsumexp2",
    "signed_log2_sum",
    "value_histogram",
]

#: Default ceiling on the number of cells any dense grid may hold (2**26).
DEFAULT_CELL_BUDGET = 1 << 26


class CapacityError(RuntimeError):
    """A dense grid would exceed the configured cell budget."""

    def __init__(self, required_cells: int, budget: int):
        self.required_cells = required_cells
        self.budget = budget
        e = required_cells.bit_length() - 1
        if required_cells == 1 << e:
            need = f"2**{e}"
        else:
            need = str(required_cells)
        super().__init__(
            f"grid would need {need} cells, exceeding the budget of {budget}"
        )


def _check_budget(d: int, level: int, max_cells: int) -> None:
    cells = 1 << (level * d)
    if cells > max_cells:
        raise CapacityError(cells, max_cells)


def stable_sum(values) -> float:
    """Fixed-order, exactly rounded sum (Shewchuk accumulation via fsum).

    Arrays are flattened in row-major order first; very large inputs are
    folded in 2**20-element blocks whose block sums are themselves fsummed,
    which keeps the reduction deterministic and compensated.
    """
    a = np.ascontiguousarray(values, dtype=float).ravel()
    n = a.size
    if n <= (1 << 20):
        return math.fsum(a)
    block = 1 << 20
    return math.fsum(math.fsum(a[i : i + block]) for i in range(0, n, block))


def logsumexp2(log2_terms) -> float:
    """log2 of a sum of nonnegative terms given by their log2 values."""
    a = np.asarray(log2_terms, dtype=float).ravel()
    if a.size == 0:
        return -math.inf
    m = float(np.max(a))
    if m == -math.inf or math.isinf(m):
        return m
    return m + math.log2(math.fsum(np.exp2(a - m)))


def signed_log2_sum(signs, log2mags) -> tuple[int, float]:
    """Sum of terms ``sign * 2**log2mag`` returned as (sign, log2|sum|).

    Terms are rescaled by the dominant exponent before the float add, so the
    result is accurate relative to the largest term even when the absolute
    values are far outside double range.
    """
    s = np.asarray(signs, dtype=float).ravel()
    e = np.asarray(log2mags, dtype=float).ravel()
    keep = s != 0
    s, e = s[keep], e[keep]
    if e.size == 0:
        return 0, -math.inf
    top = float(np.max(e))
    if top == -math.inf:
        return 0, -math.inf
    v = math.fsum(s * np.exp2(e - top))
    if v == 0.0:
        return 0, -math.inf
    return (1 if v > 0 else -1), top + math.log2(abs(v))


@dataclass(frozen=True)
class DyadicCube:
    """Half-open dyadic cube prod_j [i_j * 2**-k, (i_j+1) * 2**-k) in [0,1)^d.

    ``index`` components are plain Python integers, so cubes at levels in the
    thousands (as the scattered family needs) are exact.
    """

    d: int
    level: int
    index: tuple

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be a positive integer")
        if self.level < 0:
            raise ValueError("level must be nonnegative")
        idx = tuple(int(i) for i in self.index)
        object.__setattr__(self, "index", idx)
        if len(idx) != self.d:
            raise ValueError("index length must equal the dimension")
        top = 1 << self.level
        if any(i < 0 or i >= top for i in idx):
            raise ValueError("index components must lie in [0, 2**level)")

    @classmethod
    def root(cls, d: int) -> "DyadicCube":
        return cls(d, 0, (0,) * d)

    @property
    def side(self) -> float:
        return 2.0 ** (-self.level)

    @property
    def log2_measure(self) -> int:
        return -self.level * self.d

    @property
    def measure(self) -> float:
        # underflows to 0.0 for very deep cubes; use log2_measure there
        return 2.0**self.log2_measure

    def child(self, bits: Sequence[int]) -> "DyadicCube":
        if len(bits) != self.d or any(b not in (0, 1) for b in bits):
            raise ValueError("child bits must be a 0/1 vector of length d")
        idx = tuple(2 * i + b for i, b in zip(self.index, bits))
        return DyadicCube(self.d, self.level + 1, idx)

    def children(self) -> Iterable["DyadicCube"]:
        for bits in product((0, 1), repeat=self.d):
            yield self.child(bits)

    def ancestor(self, level: int) -> "DyadicCube":
        if level > self.level:
            raise ValueError("ancestor level must not exceed the cube level")
        shift = self.level - level
        return DyadicCube(self.d, level, tuple(i >> shift for i in self.index))

    def contains(self, other: "DyadicCube") -> bool:
        if other.d != self.d or other.level < self.level:
            return False
        return other.ancestor(self.level) == self

    def grid_slices(self, m: int) -> tuple:
        """Slices selecting this cube's cells inside a level-m dense grid."""
        if m < self.level:
            raise ValueError("grid level below cube level")
        w = 1 << (m - self.level)
        return tuple(slice(i * w, (i + 1) * w) for i in self.index)

    def __repr__(self):
        return f"DyadicCube(d={self.d}, level={self.level}, index={self.index})"


class DyadicStepFunction:
    """Piecewise-constant function on the uniform level-m dyadic partition."""

    __slots__ = ("d", "level", "values")

    def __init__(self, d: int, level: int, values):
        if d < 1 or level < 0:
            raise ValueError("need d >= 1 and level >= 0")
        arr = np.array(values, dtype=float, order="C")
        n = 1 << level
        if arr.size != n**d:
            raise ValueError(
                f"expected {n**d} values for d={d}, level={level}, got {arr.size}"
            )
        arr = arr.reshape((n,) * d)
        arr.setflags(write=False)
        self.d = d
        self.level = level
        self.values = arr

    @property
    def cell_count(self) -> int:
        return 1 << (self.level * self.d)

    @property
    def cell_measure(self) -> float:
        return 2.0 ** (-self.level * self.d)

    def flat(self) -> np.ndarray:
        """Values in row-major multi-index order."""
        return self.values.ravel()

    def refine(self, m: int, max_cells: int = DEFAULT_CELL_BUDGET) -> "DyadicStepFunction":
        """Re-express on the finer level-m grid by value replication."""
        if m < self.level:
            raise ValueError("refinement level below current level")
        if m == self.level:
            return self
        _check_budget(self.d, m, max_cells)
        r = 1 << (m - self.level)
        out = self.values
        for axis in range(self.d):
            out = np.repeat(out, r, axis=axis)
        return DyadicStepFunction(self.d, m, out)

    def restrict(self, cube: DyadicCube) -> np.ndarray:
        """Cell values of the restriction to ``cube`` (dense sub-block)."""
        if cube.d != self.d:
            raise ValueError("dimension mismatch")
        if cube.level > self.level:
            raise ValueError("cube finer than the grid; refine first")
        return self.values[cube.grid_slices(self.level)]

    # -- serialization ----------------------------------------------------

    def to_json_dict(self) -> dict:
        return {"d": self.d, "m": self.level, "values": self.flat().tolist()}

    @classmethod
    def from_json_dict(cls, obj: dict) -> "DyadicStepFunction":
        return cls(int(obj["d"]), int(obj["m"]), obj["values"])

    _MAGIC = b"HBD1"

    def to_binary(self) -> bytes:
        head = struct.pack("<4sII", self._MAGIC, self.d, self.level)
        return head + self.flat().astype("<f8").tobytes()

    @classmethod
    def from_binary(cls, blob: bytes) -> "DyadicStepFunction":
        magic, d, m = struct.unpack_from("<4sII", blob)
        if magic != cls._MAGIC:
            raise ValueError("not a dense step-function blob")
        vals = np.frombuffer(blob, dtype="<f8", offset=12)
        return cls(d, m, vals)

    def __repr__(self):
        return f"DyadicStepFunction(d={self.d}, level={self.level})"


@dataclass(frozen=True)
class SparseAtom:
    """coefficient * indicator(cube), coefficient stored as sign + log2|c|."""

    cube: DyadicCube
    sign: int
    log2mag: float

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError("sign must be -1, 0 or +1")

    @classmethod
    def from_value(cls, cube: DyadicCube, coefficient: float) -> "SparseAtom":
        if coefficient == 0:
            return cls(cube, 0, -math.inf)
        s = 1 if coefficient > 0 else -1
        return cls(cube, s, math.log2(abs(coefficient)))

    @property
    def value(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * 2.0**self.log2mag


class SparseStepFunction:
    """Finite sum of coefficient * indicator atoms over dyadic cubes.

    Atom cubes may sit at distinct levels and may nest.  ``atoms_disjoint``
    may be supplied by generators that know their atoms are pairwise
    non-nesting; otherwise it is established on demand.
    """

    __slots__ = ("d", "atoms", "_disjoint")

    def __init__(self, d: int, atoms: Iterable[SparseAtom], atoms_disjoint=None):
        self.d = d
        atoms = tuple(a for a in atoms if a.sign != 0)
        for a in atoms:
            if a.cube.d != d:
                raise ValueError("atom dimension mismatch")
        self.atoms = atoms
        self._disjoint = atoms_disjoint

    @classmethod
    def from_terms(cls, d: int, terms, atoms_disjoint=None) -> "SparseStepFunction":
        """Build from (cube, coefficient) pairs with plain float coefficients."""
        return cls(
            d,
            (SparseAtom.from_value(c, v) for c, v in terms),
            atoms_disjoint=atoms_disjoint,
        )

    @property
    def max_level(self) -> int:
        return max((a.cube.level for a in self.atoms), default=0)

    @property
    def nesting_free(self) -> bool:
        """True when no atom cube contains another (distinct cubes only)."""
        if self._disjoint is None:
            self._disjoint = self._compute_disjoint()
        return self._disjoint

    def _compute_disjoint(self) -> bool:
        seen: dict[DyadicCube, None] = {}
        levels: list[int] = []
        for a in sorted(self.atoms, key=lambda a: a.cube.level):
            c = a.cube
            for lev in levels:
                if lev >= c.level:
                    break
                if c.ancestor(lev) in seen:
                    return False
            if c in seen:
                return False
            seen[c] = None
            if not levels or levels[-1] != c.level:
                levels.append(c.level)
        return True

    def densify(self, m: int, max_cells: int = DEFAULT_CELL_BUDGET) -> DyadicStepFunction:
        """Evaluate the atom sum on the level-m grid (m >= every atom level)."""
        if m < self.max_level and self.atoms:
            raise ValueError("densification level below the deepest atom")
        _check_budget(self.d, m, max_cells)
        out = np.zeros(((1 << m),) * self.d)
        for a in self.atoms:
            out[a.cube.grid_slices(m)] += a.value
        return DyadicStepFunction(self.d, m, out)

    # -- serialization ----------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "d": self.d,
            "atoms": [
                {
                    "level": a.cube.level,
                    "index": list(a.cube.index),
                    "sign": a.sign,
                    "log2mag": a.log2mag,
                }
                for a in self.atoms
            ],
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "SparseStepFunction":
        d = int(obj["d"])
        atoms = [
            SparseAtom(
                DyadicCube(d, int(rec["level"]), tuple(rec["index"])),
                int(rec["sign"]),
                float(rec["log2mag"]),
            )
            for rec in obj["atoms"]
        ]
        return cls(d, atoms)

    def __repr__(self):
        return f"SparseStepFunction(d={self.d}, atoms={len(self.atoms)})"


def function_to_json(f) -> str:
    """Serialize either representation to a JSON string."""
    if isinstance(f, DyadicStepFunction):
        obj = {"kind": "dense", **f.to_json_dict()}
    elif isinstance(f, SparseStepFunction):
        obj = {"kind": "sparse", **f.to_json_dict()}
    else:
        raise TypeError("expected a step function")
    return json.dumps(obj, sort_keys=True)


def function_from_json(text: str):
    obj = json.loads(text)
    kind = obj.get("kind", "dense" if "values" in obj else "sparse")
    if kind == "dense":
        return DyadicStepFunction.from_json_dict(obj)
    if kind == "sparse":
        return SparseStepFunction.from_json_dict(obj)
    raise ValueError(f"unknown step-function kind {kind!r}")


@dataclass(frozen=True)
class ValueHistogram:
    """Exact multiset of (value, measure) pairs of a step function on a cube."""

    entries: tuple

    def __post_init__(self):
        ent = tuple((float(v), float(w)) for v, w in self.entries)
        object.__setattr__(self, "entries", ent)
        if any(w <= 0 for _, w in ent):
            raise ValueError("histogram measures must be positive")

    @classmethod
    def from_pairs(cls, pairs) -> "ValueHistogram":
        """Consolidate duplicate values (exact equality) and sort by value."""
        acc: dict[float, float] = {}
        for v, w in pairs:
            if w == 0.0:
                continue
            acc[float(v)] = acc.get(float(v), 0.0) + float(w)
        return cls(tuple(sorted(acc.items())))

    @property
    def values(self) -> np.ndarray:
        return np.array([v for v, _ in self.entries])

    @property
    def measures(self) -> np.ndarray:
        return np.array([w for _, w in self.entries])

    @property
    def total_measure(self) -> float:
        return math.fsum(w for _, w in self.entries)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def refine(f: DyadicStepFunction, m: int, max_cells: int = DEFAULT_CELL_BUDGET):
    return f.refine(m, max_cells)


def densify(f, m: int, max_cells: int = DEFAULT_CELL_BUDGET) -> DyadicStepFunction:
    """Dense level-m view of either representation."""
    if isinstance(f, DyadicStepFunction):
        return f.refine(m, max_cells)
    return f.densify(m, max_cells)


def lp_quasinorm(f, p: float) -> float:
    """L_p quasi-norm (sum of cell-measure-weighted |value|^p, p-th root).

    Sparse functions with pairwise non-nesting atoms are handled atom by
    atom in the log2 domain, so coefficients far outside double range are
    fine; nesting atom sets go through the exact value histogram instead.
    """
    if not (p > 0) or math.isinf(p):
        raise ValueError("p must be a positive finite exponent")
    if isinstance(f, DyadicStepFunction):
        s = stable_sum(np.abs(f.values) ** p) * f.cell_measure
        return s ** (1.0 / p)
    if not isinstance(f, SparseStepFunction):
        raise TypeError("expected a step function")
    if not f.atoms:
        return 0.0
    if f.nesting_free:
        log2_terms = np.array(
            [a.cube.log2_measure + p * a.log2mag for a in f.atoms]
        )
        return 2.0 ** (logsumexp2(log2_terms) / p)
    hist = value_histogram(f, DyadicCube.root(f.d))
    v, w = hist.values, hist.measures
    return float(math.fsum(w * np.abs(v) ** p)) ** (1.0 / p)


def average_project(f, k: int, max_cells: int = DEFAULT_CELL_BUDGET) -> DyadicStepFunction:
    """Replace f by its average on every level-k cube (L_2 orthoprojection
    onto the level-k step functions).  For k at or above the resolution of a
    dense input the function is returned unchanged (re-expressed at level k).
    """
    if k < 0:
        raise ValueError("level must be nonnegative")
    if isinstance(f, DyadicStepFunction):
        if k >= f.level:
            return f.refine(k, max_cells)
        n, r = 1 << k, 1 << (f.level - k)
        shape = sum(((n, r) for _ in range(f.d)), ())
        axes = tuple(range(1, 2 * f.d, 2))
        return DyadicStepFunction(f.d, k, f.values.reshape(shape).mean(axis=axes))
    if not isinstance(f, SparseStepFunction):
        raise TypeError("expected a step function")
    _check_budget(f.d, k, max_cells)
    out = np.zeros(((1 << k),) * f.d)
    for a in f.atoms:
        c = a.cube
        if c.level <= k:
            out[c.grid_slices(k)] += a.value
        else:
            cell = tuple(i >> (c.level - k) for i in c.index)
            # average of c's indicator over the level-k cell, in log2 space
            out[cell] += a.sign * 2.0 ** (a.log2mag - (c.level - k) * f.d)
    return DyadicStepFunction(f.d, k, out)


def value_histogram(f, cube: DyadicCube) -> ValueHistogram:
    """Exact (value, measure) multiset of f restricted to ``cube``."""
    if cube.d != f.d:
        raise ValueError("dimension mismatch")
    if isinstance(f, DyadicStepFunction):
        if cube.level > f.level:
            # f is constant strictly below its resolution
            cell = tuple(i >> (cube.level - f.level) for i in cube.index)
            return ValueHistogram.from_pairs([(float(f.values[cell]), cube.measure)])
        block = f.restrict(cube)
        vals, counts = np.unique(block, return_counts=True)
        w = counts * f.cell_measure
        return ValueHistogram.from_pairs(zip(vals.tolist(), w.tolist()))
    if not isinstance(f, SparseStepFunction):
        raise TypeError("expected a step function")
    return _sparse_histogram(f, cube)


def _sparse_histogram(f: SparseStepFunction, cube: DyadicCube) -> ValueHistogram:
    base = 0.0
    inner: dict[DyadicCube, float] = {}
    for a in f.atoms:
        c = a.cube
        if c.level <= cube.level:
            if c.contains(cube):
                base += a.value
        elif cube.contains(c):
            inner[c] = inner.get(c, 0.0) + a.value

    if not inner:
        return ValueHistogram.from_pairs([(base, cube.measure)])

    nodes = sorted(inner, key=lambda c: c.level)
    parent: dict[DyadicCube, DyadicCube | None] = {}
    placed_levels: list[int] = []
    placed: set[DyadicCube] = set()
    for c in nodes:
        par = None
        for lev in reversed(placed_levels):
            if lev >= c.level:
                continue
            anc = c.ancestor(lev)
            if anc in placed:
                par = anc
                break
        parent[c] = par
        placed.add(c)
        if not placed_levels or placed_levels[-1] != c.level:
            placed_levels.append(c.level)

    covered: dict[DyadicCube | None, float] = {}
    for c in nodes:
        covered[parent[c]] = covered.get(parent[c], 0.0) + c.measure

    chain_value: dict[DyadicCube | None, float] = {None: base}
    pairs = []
    for c in nodes:  # level-ascending, parents precede children
        chain_value[c] = chain_value[parent[c]] + inner[c]
        region = c.measure - covered.get(c, 0.0)
        if region > 0:
            pairs.append((chain_value[c], region))
    root_region = cube.measure - covered.get(None, 0.0)
    if root_region > 0:
        pairs.append((base, root_region))
    return ValueHistogram.from_pairs(pairs)
