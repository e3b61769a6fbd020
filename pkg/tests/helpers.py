"""Brute-force oracles shared by the test suite.

Everything here is deliberately independent of the library's computational
paths: best constants come from candidate grids, coefficients from direct
quadrature, projections and errors from densified arrays.
"""

import math
from itertools import product

import numpy as np

import haar_besov as hb


def grid_best_constant_err(values, weights, p, coarse=10_000, fine=2_000):
    """Candidate-grid search for min over xi of sum w|v - xi|^p.

    Candidates are a uniform grid joined with the data values (the objective
    has downward kinks there for p < 1), plus one refinement pass between the
    neighbours of the coarse winner.
    """
    v = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    cand = np.unique(np.concatenate([v, np.linspace(v.min(), v.max(), coarse)]))
    errs = (w[None, :] * np.abs(v[None, :] - cand[:, None]) ** p).sum(axis=1)
    j = int(np.argmin(errs))
    lo, hi = cand[max(0, j - 1)], cand[min(cand.size - 1, j + 1)]
    ref = np.linspace(lo, hi, fine)
    errs2 = (w[None, :] * np.abs(v[None, :] - ref[:, None]) ** p).sum(axis=1)
    return min(float(errs.min()), float(errs2.min()))


def approx_error_grid(f, k, p, coarse=4_000):
    """E_k via an independent per-cube grid search on the densified function."""
    fd = hb.densify(f, f.level if isinstance(f, hb.DyadicStepFunction) else f.max_level)
    if k >= fd.level:
        return 0.0
    total = []
    w = fd.cell_measure
    for idx in product(range(1 << k), repeat=fd.d):
        cube = hb.DyadicCube(fd.d, k, idx)
        block = fd.restrict(cube).ravel()
        total.append(grid_best_constant_err(block, np.full(block.size, w), p, coarse, 500))
    return math.fsum(total) ** (1.0 / p)


def a_norm_grid(f, prm, coarse=4_000):
    """Approximation norm recomputed with grid-search best constants."""
    fd = hb.densify(f, f.level if isinstance(f, hb.DyadicStepFunction) else f.max_level)
    lp = hb.lp_quasinorm(fd, prm.p)
    terms = [
        (2.0 ** (k * prm.s) * approx_error_grid(fd, k, prm.p, coarse)) ** prm.q
        for k in range(fd.level)
    ]
    return (lp**prm.q + math.fsum(terms)) ** (1.0 / prm.q)


def analyze_direct(f):
    """Haar coefficients by direct quadrature: <f, h> / <h, h> per index."""
    out = {}
    for k in range(f.level + 1):
        for idx in hb.level_indices(f.d, k):
            h = hb.haar_function(idx).densify(f.level)
            num = math.fsum((f.values * h.values).ravel()) * f.cell_measure
            out[idx] = num / idx.support.measure
    return out


def block_l1_ppow_sum(g, k, p):
    """sum over level-k cubes of ||g||_{L1(cube)}^p."""
    total = []
    for idx in product(range(1 << k), repeat=g.d):
        cube = hb.DyadicCube(g.d, k, idx)
        l1 = math.fsum(np.abs(g.restrict(cube)).ravel()) * g.cell_measure
        total.append(l1**p)
    return math.fsum(total)


def dense_from_grid(d, m, values):
    return hb.DyadicStepFunction(d, m, values)


def random_sparse(rng, d, n_atoms, max_level=4):
    """Random sparse function with possibly nesting atoms (test fixture)."""
    terms = []
    for _ in range(n_atoms):
        lev = int(rng.integers(0, max_level + 1))
        idx = tuple(int(rng.integers(0, 1 << lev)) for _ in range(d))
        coeff = float(rng.uniform(-2, 2))
        terms.append((hb.DyadicCube(d, lev, idx), coeff))
    return hb.SparseStepFunction.from_terms(d, terms)
