"""Forward-orbit machinery: classify where orbits settle (roots, attracting
cycles, escape, singular hits), render basin rasters over pixel grids, and
scan one-parameter polynomial families.

Classification runs in two phases.  Phase 1 iterates all points in lockstep
(vectorized, with the active set compressed as points settle): a point is a
root hit after two consecutive iterates within root_tol of the same root,
escaped once its norm exceeds escape_radius, and a singular hit when the
Newton step degenerates.  Phase 2 re-examines survivors for attracting
cycles: a trailing window of iterates is searched for the smallest period
recurring within cycle_tol, the cycle multiplier is estimated by central
finite differences of the period-fold map, and only multipliers below 1 are
reported as cycles; everything else stays undecided.

Iteration counts record the number of Newton steps applied when the
classification became final, except that root hits record the first step of
the confirming consecutive pair and singular hits record the steps completed
before the failing one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import (
    CODE_CYCLE,
    CODE_ESCAPED,
    CODE_SINGULAR,
    CODE_UNDECIDED,
    BasinRaster,
    Window,
)
from .newton import SingularJacobianError, build_newton_complex
from .poly import (
    MultiPoly,
    UniComplexPoly,
    batched_complex_roots,
    row_polyval,
    univariate_complex_roots,
)

__all__ = [
    "ScanConfig",
    "OrbitOutcome",
    "classify_orbit",
    "render_basins",
    "parameter_scan",
    "outcome_code",
]


@dataclass(frozen=True)
class ScanConfig:
    """Tolerances and budgets for forward classification."""

    root_tol: float = 1e-8
    escape_radius: float = 1e8
    max_iter: int = 200
    cycle_window: int = 64
    cycle_tol: float = 1e-9
    multiplier_step: float = 1e-6

    def __post_init__(self):
        for name in ("root_tol", "escape_radius", "cycle_tol", "multiplier_step"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iter < 1 or self.cycle_window < 1:
            raise ValueError("iteration budgets must be positive")
        if self.cycle_window > self.max_iter:
            raise ValueError("cycle_window cannot exceed max_iter")


@dataclass(frozen=True)
class OrbitOutcome:
    """Tagged forward-orbit classification.

    kind is one of "root", "cycle", "escaped", "singular", "undecided";
    the remaining fields are populated per kind (root_index + iterations,
    period + representative + multiplier, iterations, iterations, none).
    """

    kind: str
    root_index: int | None = None
    iterations: int | None = None
    period: int | None = None
    representative: object = None
    multiplier: float | None = None

    @property
    def is_root(self):
        return self.kind == "root"

    @property
    def is_cycle(self):
        return self.kind == "cycle"


# internal kind codes used by the batch kernels
_UNDECIDED, _ROOT, _ESCAPED, _SINGULAR, _CYCLE = 0, 1, 2, 3, 4


def outcome_code(kind_code, root_index):
    """Raster code for a batch result row: root index, or a sentinel."""
    if kind_code == _ROOT:
        return int(root_index)
    return {
        _CYCLE: CODE_CYCLE,
        _ESCAPED: CODE_ESCAPED,
        _SINGULAR: CODE_SINGULAR,
        _UNDECIDED: CODE_UNDECIDED,
    }[kind_code]


class _BatchResult:
    __slots__ = ("kind", "root_index", "iterations", "period", "rep", "multiplier")

    def __init__(self, n, planar):
        self.kind = np.full(n, _UNDECIDED, np.int8)
        self.root_index = np.full(n, -1, np.int32)
        self.iterations = np.full(n, -1, np.int32)
        self.period = np.full(n, -1, np.int32)
        self.rep = np.zeros((n, 2), float) if planar else np.zeros(n, complex)
        self.multiplier = np.full(n, np.nan)

    def outcome(self, i):
        kind = int(self.kind[i])
        if kind == _ROOT:
            return OrbitOutcome("root", root_index=int(self.root_index[i]),
                                iterations=int(self.iterations[i]))
        if kind == _CYCLE:
            rep = self.rep[i]
            rep = (float(rep[0]), float(rep[1])) if rep.ndim else complex(rep)
            return OrbitOutcome("cycle", period=int(self.period[i]),
                                representative=rep,
                                multiplier=float(self.multiplier[i]))
        if kind == _ESCAPED:
            return OrbitOutcome("escaped", iterations=int(self.iterations[i]))
        if kind == _SINGULAR:
            return OrbitOutcome("singular", iterations=int(self.iterations[i]))
        return OrbitOutcome("undecided")

    def codes(self):
        codes = np.full(self.kind.shape, CODE_UNDECIDED, np.int32)
        codes[self.kind == _ROOT] = self.root_index[self.kind == _ROOT]
        codes[self.kind == _CYCLE] = CODE_CYCLE
        codes[self.kind == _ESCAPED] = CODE_ESCAPED
        codes[self.kind == _SINGULAR] = CODE_SINGULAR
        return codes


def _complex_cycle_multiplier(N, z, q, h):
    """|d(N^q)/dz| at z by central differences; None on singular/overflow."""
    try:
        a, b = z + h, z - h
        for _ in range(q):
            a = N.step(a)
            b = N.step(b)
    except SingularJacobianError:
        return None
    m = abs(a - b) / (2.0 * h)
    return m if np.isfinite(m) else None


def _planar_cycle_multiplier(N, point, q, h):
    """Spectral radius of the finite-difference Jacobian of N^q at point."""

    def power(p):
        for _ in range(q):
            p = N.step(p)
        return p

    try:
        xp = power((point[0] + h, point[1]))
        xm = power((point[0] - h, point[1]))
        yp = power((point[0], point[1] + h))
        ym = power((point[0], point[1] - h))
    except SingularJacobianError:
        return None
    J = np.array(
        [
            [(xp[0] - xm[0]) / (2 * h), (yp[0] - ym[0]) / (2 * h)],
            [(xp[1] - xm[1]) / (2 * h), (yp[1] - ym[1]) / (2 * h)],
        ]
    )
    if not np.all(np.isfinite(J)):
        return None
    return float(np.max(np.abs(np.linalg.eigvals(J))))


def _classify_complex_batch(N, z0, roots, cfg):
    z0 = np.atleast_1d(np.asarray(z0, dtype=complex)).ravel()
    res = _BatchResult(z0.size, planar=False)
    roots_arr = np.asarray(roots, dtype=complex) if len(roots) else None

    def nearest(z):
        d = np.abs(z[:, None] - roots_arr[None, :])
        h = np.argmin(d, axis=1).astype(np.int32)
        near = d[np.arange(z.size), h] <= cfg.root_tol
        return np.where(near, h, -1).astype(np.int32)

    idx = np.arange(z0.size)
    z = z0.copy()
    prev_hit = nearest(z) if roots_arr is not None else np.full(z.size, -1, np.int32)
    for k in range(1, cfg.max_iter + 1):
        if z.size == 0:
            break
        w, sing = N.step_many(z)
        if np.any(sing):
            res.kind[idx[sing]] = _SINGULAR
            res.iterations[idx[sing]] = k - 1
        esc = ~sing & (np.abs(w) > cfg.escape_radius)
        res.kind[idx[esc]] = _ESCAPED
        res.iterations[idx[esc]] = k
        active = ~sing & ~esc
        if roots_arr is not None:
            hit = nearest(w)
            confirm = active & (hit >= 0) & (hit == prev_hit)
            res.kind[idx[confirm]] = _ROOT
            res.root_index[idx[confirm]] = hit[confirm]
            res.iterations[idx[confirm]] = k - 1
            active &= ~confirm
            prev_hit = hit[active]
        z, idx = w[active], idx[active]
    if idx.size:
        _cycle_phase_complex(N, z, idx, res, cfg)
    return res


def _cycle_phase_complex(N, z, idx, res, cfg):
    W = cfg.cycle_window
    trail = np.empty((W + 1, z.size), complex)
    trail[0] = z
    alive = np.ones(z.size, bool)
    for k in range(1, W + 1):
        w, sing = N.step_many(trail[k - 1])
        newly = alive & sing
        res.kind[idx[newly]] = _SINGULAR
        res.iterations[idx[newly]] = cfg.max_iter + k - 1
        esc = alive & ~sing & (np.abs(w) > cfg.escape_radius)
        res.kind[idx[esc]] = _ESCAPED
        res.iterations[idx[esc]] = cfg.max_iter + k
        alive &= ~sing & ~esc
        trail[k] = np.where(alive, w, trail[k - 1])
    last = trail[-1]
    found_q = np.full(z.size, -1, np.int32)
    for q in range(1, W + 1):
        cand = alive & (found_q < 0) & (
            np.abs(trail[-1 - q] - last) <= cfg.cycle_tol * (1.0 + np.abs(last))
        )
        found_q[cand] = q
    for i in np.nonzero(alive & (found_q > 0))[0]:
        q = int(found_q[i])
        m = _complex_cycle_multiplier(N, complex(last[i]), q, cfg.multiplier_step)
        if m is not None and m < 1.0:
            res.kind[idx[i]] = _CYCLE
            res.period[idx[i]] = q
            res.rep[idx[i]] = last[i]
            res.multiplier[idx[i]] = m


def _classify_planar_batch(N, x0, y0, roots, cfg):
    x0 = np.atleast_1d(np.asarray(x0, dtype=float)).ravel()
    y0 = np.atleast_1d(np.asarray(y0, dtype=float)).ravel()
    res = _BatchResult(x0.size, planar=True)
    if len(roots):
        rx = np.array([r[0] for r in roots])
        ry = np.array([r[1] for r in roots])
    else:
        rx = None

    def nearest(x, y):
        d2 = (x[:, None] - rx[None, :]) ** 2 + (y[:, None] - ry[None, :]) ** 2
        h = np.argmin(d2, axis=1).astype(np.int32)
        near = d2[np.arange(x.size), h] <= cfg.root_tol**2
        return np.where(near, h, -1).astype(np.int32)

    idx = np.arange(x0.size)
    x, y = x0.copy(), y0.copy()
    prev_hit = nearest(x, y) if rx is not None else np.full(x.size, -1, np.int32)
    for k in range(1, cfg.max_iter + 1):
        if x.size == 0:
            break
        nx, ny, sing = N.step_many(x, y)
        if np.any(sing):
            res.kind[idx[sing]] = _SINGULAR
            res.iterations[idx[sing]] = k - 1
        esc = ~sing & (nx**2 + ny**2 > cfg.escape_radius**2)
        res.kind[idx[esc]] = _ESCAPED
        res.iterations[idx[esc]] = k
        active = ~sing & ~esc
        if rx is not None:
            hit = nearest(nx, ny)
            confirm = active & (hit >= 0) & (hit == prev_hit)
            res.kind[idx[confirm]] = _ROOT
            res.root_index[idx[confirm]] = hit[confirm]
            res.iterations[idx[confirm]] = k - 1
            active &= ~confirm
            prev_hit = hit[active]
        x, y, idx = nx[active], ny[active], idx[active]
    if idx.size:
        _cycle_phase_planar(N, x, y, idx, res, cfg)
    return res


def _cycle_phase_planar(N, x, y, idx, res, cfg):
    W = cfg.cycle_window
    tx = np.empty((W + 1, x.size))
    ty = np.empty((W + 1, x.size))
    tx[0], ty[0] = x, y
    alive = np.ones(x.size, bool)
    for k in range(1, W + 1):
        nx, ny, sing = N.step_many(tx[k - 1], ty[k - 1])
        newly = alive & sing
        res.kind[idx[newly]] = _SINGULAR
        res.iterations[idx[newly]] = cfg.max_iter + k - 1
        esc = alive & ~sing & (nx**2 + ny**2 > cfg.escape_radius**2)
        res.kind[idx[esc]] = _ESCAPED
        res.iterations[idx[esc]] = cfg.max_iter + k
        alive &= ~sing & ~esc
        tx[k] = np.where(alive, nx, tx[k - 1])
        ty[k] = np.where(alive, ny, ty[k - 1])
    scale = 1.0 + np.hypot(tx[-1], ty[-1])
    found_q = np.full(x.size, -1, np.int32)
    for q in range(1, W + 1):
        gap = np.hypot(tx[-1 - q] - tx[-1], ty[-1 - q] - ty[-1])
        cand = alive & (found_q < 0) & (gap <= cfg.cycle_tol * scale)
        found_q[cand] = q
    for i in np.nonzero(alive & (found_q > 0))[0]:
        q = int(found_q[i])
        point = (float(tx[-1][i]), float(ty[-1][i]))
        m = _planar_cycle_multiplier(N, point, q, cfg.multiplier_step)
        if m is not None and m < 1.0:
            res.kind[idx[i]] = _CYCLE
            res.period[idx[i]] = q
            res.rep[idx[i]] = point
            res.multiplier[idx[i]] = m


def _classify_batch(N, points, roots, cfg):
    if N.kind == "complex":
        return _classify_complex_batch(N, points, roots, cfg)
    x, y = points
    return _classify_planar_batch(N, x, y, roots, cfg)


def classify_orbit(N, x0, roots, cfg=None):
    """Classify the forward orbit of one starting point.

    roots is the precomputed attractor list (complex numbers, or (x, y)
    pairs for planar maps); it may be empty.
    """
    cfg = cfg or ScanConfig()
    if N.kind == "complex":
        res = _classify_complex_batch(N, [complex(x0)], roots, cfg)
    else:
        res = _classify_planar_batch(N, [x0[0]], [x0[1]], roots, cfg)
    return res.outcome(0)


def _legend(roots, complex_case):
    legend = {}
    for i, r in enumerate(roots):
        if complex_case:
            legend[i] = f"root {complex(r):.12g}"
        else:
            legend[i] = f"root ({r[0]:.12g}, {r[1]:.12g})"
    legend[CODE_CYCLE] = "attracting cycle"
    legend[CODE_ESCAPED] = "escaped beyond radius"
    legend[CODE_SINGULAR] = "singular derivative hit"
    legend[CODE_UNDECIDED] = "undecided"
    return legend


def render_basins(N, roots, window, width, height, cfg=None):
    """Classify the center of every pixel and return the coded raster."""
    cfg = cfg or ScanConfig()
    window = Window.from_sequence(window)
    X, Y = window.pixel_centers(width, height)
    if N.kind == "complex":
        res = _classify_complex_batch(N, (X + 1j * Y).ravel(), roots, cfg)
    else:
        res = _classify_planar_batch(N, X.ravel(), Y.ravel(), roots, cfg)
    return BasinRaster(
        window=window,
        width=width,
        height=height,
        codes=res.codes().reshape(height, width),
        iterations=res.iterations.reshape(height, width).copy(),
        legend=_legend(roots, N.kind == "complex"),
    )


# ---------------------------------------------------------------------------
# Parameter scans


def _family_coefficients(family, a_values):
    """Coefficient rows of a one-parameter polynomial family.

    family is either a callable parameter -> UniComplexPoly, or a MultiPoly
    whose first variable is the polynomial variable and whose second is the
    parameter; rows are padded with zeros to a common length.
    """
    if isinstance(family, MultiPoly):
        deg = max((i for (i, _), _ in family.terms), default=0)
        coeffs = np.zeros((a_values.size, deg + 1), complex)
        for (i, j), c in family.terms:
            coeffs[:, i] += c * a_values**j
        return coeffs
    polys = [family(a) for a in a_values]
    deg = max(p.degree for p in polys)
    coeffs = np.zeros((a_values.size, max(deg, 0) + 1), complex)
    for row, p in enumerate(polys):
        cs = p.coefficients
        coeffs[row, : len(cs)] = cs
    return coeffs


def parameter_scan(family, seed, window, width, height, cfg=None):
    """Classify one seed's orbit under the Newton map of every family member
    over a grid of (complex) parameter values.

    Root codes index into each parameter's own lexicographically sorted root
    list; parameters whose polynomial degenerates below degree 1 are marked
    undecided.
    """
    cfg = cfg or ScanConfig()
    window = Window.from_sequence(window)
    X, Y = window.pixel_centers(width, height)
    a_values = (X + 1j * Y).ravel()
    n_pix = a_values.size
    C = _family_coefficients(family, a_values)
    deg_full = C.shape[1] - 1

    # trim per-row trailing zeros to find each member's true degree
    nz = np.abs(C) > 0
    degrees = np.where(nz.any(axis=1), deg_full - np.argmax(nz[:, ::-1], axis=1), -1)
    codes = np.full(n_pix, CODE_UNDECIDED, np.int32)
    iters = np.full(n_pix, -1, np.int32)

    main = degrees == deg_full
    degenerate = degrees < 1
    odd = ~main & ~degenerate
    for i in np.nonzero(odd)[0]:
        p = UniComplexPoly(C[i, : degrees[i] + 1])
        outcome = _scan_single(p, seed, cfg)
        codes[i], iters[i] = outcome
    if np.any(main) and deg_full >= 1:
        codes_m, iters_m = _scan_main_batch(C[main], seed, cfg)
        codes[main] = codes_m
        iters[main] = iters_m

    legend = {CODE_CYCLE: "attracting cycle", CODE_ESCAPED: "escaped beyond radius",
              CODE_SINGULAR: "singular derivative hit", CODE_UNDECIDED: "undecided"}
    for i in range(deg_full):
        legend[i] = f"converged to root #{i} of that parameter's polynomial"
    return BasinRaster(
        window=window,
        width=width,
        height=height,
        codes=codes.reshape(height, width),
        iterations=iters.reshape(height, width),
        legend=legend,
    )


def _scan_single(p, seed, cfg):
    """(code, iterations) for one explicit family member."""
    if p.degree < 1:
        return CODE_UNDECIDED, -1
    N = build_newton_complex(p)
    roots = univariate_complex_roots(p, tol=1e-10) if p.degree >= 1 else []
    res = _classify_complex_batch(N, [complex(seed)], roots, cfg)
    return outcome_code(int(res.kind[0]), int(res.root_index[0])), int(res.iterations[0])


def _scan_main_batch(C, seed, cfg):
    """Vectorized scan over rows sharing the full degree."""
    m, n = C.shape
    d = n - 1
    roots = batched_complex_roots(C)
    D = C[:, 1:] * np.arange(1, n)[None, :]
    dscale = np.max(np.abs(D), axis=1)
    codes = np.full(m, CODE_UNDECIDED, np.int32)
    iters = np.full(m, -1, np.int32)

    idx = np.arange(m)
    z = np.full(m, complex(seed))
    rC, rD, rroots, rdscale = C, D, roots, dscale

    def nearest(zv, rr):
        dd = np.abs(zv[:, None] - rr)
        h = np.argmin(dd, axis=1).astype(np.int32)
        near = dd[np.arange(zv.size), h] <= cfg.root_tol
        return np.where(near, h, -1).astype(np.int32)

    prev_hit = nearest(z, rroots)
    for k in range(1, cfg.max_iter + 1):
        if z.size == 0:
            break
        pv = row_polyval(rC, z)
        dv = row_polyval(rD, z)
        sing = np.abs(dv) <= 1e-12 * rdscale * (1.0 + np.abs(z)) ** (d - 1)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            w = z - pv / np.where(sing, 1.0, dv)
        bad = ~(np.isfinite(w.real) & np.isfinite(w.imag))
        sing = sing | bad
        codes[idx[sing]] = CODE_SINGULAR
        iters[idx[sing]] = k - 1
        esc = ~sing & (np.abs(w) > cfg.escape_radius)
        codes[idx[esc]] = CODE_ESCAPED
        iters[idx[esc]] = k
        active = ~sing & ~esc
        hit = nearest(np.where(active, w, 0.0), rroots)
        confirm = active & (hit >= 0) & (hit == prev_hit)
        codes[idx[confirm]] = hit[confirm]
        iters[idx[confirm]] = k - 1
        active &= ~confirm
        z, idx, prev_hit = w[active], idx[active], hit[active]
        rC, rD, rroots, rdscale = rC[active], rD[active], rroots[active], rdscale[active]

    # cycle phase per surviving parameter, exact per-member maps
    for j, i in enumerate(idx):
        p = UniComplexPoly(rC[j])
        N = build_newton_complex(p)
        res = _BatchResult(1, planar=False)
        _cycle_phase_complex(N, np.array([z[j]]), np.array([0]), res, cfg)
        codes[i] = outcome_code(int(res.kind[0]), -1)
        iters[i] = int(res.iterations[0])
    return codes, iters
