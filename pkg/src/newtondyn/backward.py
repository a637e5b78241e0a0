"""Backward dynamics: counterimage solving, random backward orbits,
breadth-first backward trees, and Hutchinson-style set iteration.

Counterimages of a target z under a rational map N = num/den are the
roots of the cleared polynomial num(w) - z*den(w); the complex case
therefore yields exactly deg(N) preimages counted with multiplicity for
all but finitely many targets.  The planar Newton map clears its
denominator the same way: N_f(w) = z becomes the polynomial system
Df(w)(w - z) = f(w), solved over a bounded search domain, with
solutions on the Jacobian's singular locus discarded as spurious.

Random backward orbits draw one branch per step: uniformly over the d
complex preimages with multiplicity (so a k-step branch has weight
d^-k), and uniformly over the found real preimages in the planar case,
where no fixed branch count exists.  Trees expand all branches breadth
first and rasterize the deepest fully expanded level; planar trees
additionally deduplicate each level at pixel resolution to keep growth
bounded by the raster, trading exact node identity for set accuracy.

Every returned preimage w is validated by running the map forward:
N(w) must land back on the target within a small residual and away
from the singular locus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .grid import OccupancyRaster, Window
from .newton import (
    NewtonPlaneMap,
    SingularJacobianError,
    build_newton_complex,
    build_newton_plane,
)
from .poly import (
    MultiPoly,
    PlaneMap,
    UniComplexPoly,
    batched_complex_roots,
    system_real_roots,
    univariate_complex_roots,
)

__all__ = [
    "BackwardOrbit",
    "EmptyOrbitError",
    "EmptySetError",
    "backward_tree",
    "counterimages",
    "directed_pixel_distance",
    "hausdorff_pixel_distance",
    "hutchinson_iterate",
    "random_backward_orbit",
]

# forward-residual bound certifying a counterimage, relative to target size
RESIDUAL_RTOL = 1e-8

# dead-end retries allowed without the orbit growing past its deepest
# point so far; resets on progress so long walks can shed many dead ends
MAX_DEAD_END_RETRIES = 100

DEFAULT_NODE_CAP = 2_000_000


class EmptyOrbitError(RuntimeError):
    """Backward orbit truncated before recording any point past burn-in."""


class EmptySetError(RuntimeError):
    """A set iterate lost every pixel; the excluded disks are too large."""


@dataclass(frozen=True)
class BackwardOrbit:
    """One sampled backward orbit.

    points holds the steps after burn_in, oldest first; applying the map
    forward to points[i] returns points[i-1] (and the last burn-in point
    before points[0]).  branch_law records how branches were drawn, since
    the complex and planar cases differ.
    """

    seed: object
    points: tuple
    prng_seed: int
    burn_in: int
    branch_law: str
    truncated: bool = False

    def __len__(self):
        return len(self.points)


def _as_backward_map(N):
    """Accept a bare polynomial or plane map in place of its Newton map."""
    if isinstance(N, UniComplexPoly):
        return build_newton_complex(N)
    if isinstance(N, PlaneMap):
        return build_newton_plane(N)
    if getattr(N, "kind", None) in ("complex", "planar"):
        return N
    raise TypeError(f"not a usable map: {N!r}")


def _window_or_none(domain):
    return None if domain is None else Window.from_sequence(domain)


# ---------------------------------------------------------------------------
# Counterimages


def counterimages(N, z, domain=None):
    """All solutions w of N(w) = z, via the cleared polynomial form.

    Complex maps return the full root list of num - z*den with
    multiplicity (lexicographic order), optionally restricted to a
    rectangular domain.  Planar Newton maps require a bounded domain and
    return the distinct real solutions of Df(w)(w - z) = f(w) inside it,
    excluding points where the Jacobian is singular.
    """
    N = _as_backward_map(N)
    dom = _window_or_none(domain)
    if N.kind == "complex":
        return _complex_counterimages(N, complex(z), dom)
    if dom is None:
        raise ValueError("planar counterimages need a bounded search domain")
    return _planar_counterimages(N, (float(z[0]), float(z[1])), dom)


def _complex_counterimages(N, z, dom):
    q = N.numerator - z * N.denominator
    if q.is_zero:
        raise ValueError("map is constant at this target; every point is a counterimage")
    if q.degree < 1:
        return []
    roots = np.array(univariate_complex_roots(q, tol=1e-10))
    vals, sing = N.step_many(roots)
    keep = ~sing & (np.abs(vals - z) <= RESIDUAL_RTOL * (1.0 + abs(z)))
    if dom is not None:
        keep &= (
            (roots.real >= dom.xmin) & (roots.real <= dom.xmax)
            & (roots.imag >= dom.ymin) & (roots.imag <= dom.ymax)
        )
    return [complex(w) for w in roots[keep]]


def _cleared_plane_system(f, zx, zy):
    """Polynomial system whose regular zeros are the Newton preimages of z."""
    (fx, fy), (gx, gy) = f.jacobian()
    wx = MultiPoly.variable(0)
    wy = MultiPoly.variable(1)
    return PlaneMap(
        fx * (wx - zx) + fy * (wy - zy) - f.first,
        gx * (wx - zx) + gy * (wy - zy) - f.second,
    )


def _planar_counterimages(N, z, dom):
    zx, zy = z
    g = _cleared_plane_system(N.source, zx, zy)
    raw = system_real_roots(g, dom.as_tuple(), tol=1e-10)
    # multiple roots of the cleared system polish to clusters wider than
    # the solver's own merge radius; collapse them before filtering
    diag = math.hypot(dom.xmax - dom.xmin, dom.ymax - dom.ymin)
    merged = _merge_close(raw, 1e-5 * (1.0 + diag))
    out = []
    scale = 1.0 + math.hypot(zx, zy)
    for w in merged:
        try:
            ix, iy = N.step(w)
        except SingularJacobianError:
            continue
        if math.hypot(ix - zx, iy - zy) <= RESIDUAL_RTOL * scale:
            out.append((float(w[0]), float(w[1])))
    out.sort()
    return out


def _merge_close(points, radius):
    merged = []
    for p in sorted(points):
        for k, q in enumerate(merged):
            if math.hypot(p[0] - q[0], p[1] - q[1]) <= radius:
                merged[k] = (0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1]))
                break
        else:
            merged.append(tuple(p))
    return merged


# ---------------------------------------------------------------------------
# Random backward orbits


def random_backward_orbit(N, z0, length, burn_in=100, prng_seed=0, domain=None):
    """Sample one backward orbit of the given length.

    Each step draws uniformly among the counterimages of the current
    point (with multiplicity in the complex case).  Dead ends backtrack
    one step and redraw; after MAX_DEAD_END_RETRIES the orbit truncates,
    and truncation before any post-burn-in point raises EmptyOrbitError.
    """
    N = _as_backward_map(N)
    length = int(length)
    burn_in = int(burn_in)
    if not (length > burn_in >= 0):
        raise ValueError("need length > burn_in >= 0")
    if N.kind == "complex":
        seed_pt = complex(z0)
        law = "uniform over the d complex counterimages with multiplicity"
    else:
        seed_pt = (float(z0[0]), float(z0[1]))
        law = "uniform over the found real counterimages"

    rng = np.random.default_rng(int(prng_seed))
    stack = [seed_pt]
    # untried[k] holds children of stack[k] not yet drawn from this visit,
    # None before the first expansion; drawing removes the child so a
    # backtrack redraws among the remaining ones instead of repeating it
    untried = [None]
    retries = 0
    frontier = 1
    truncated = False
    while len(stack) < length + 1:
        if untried[-1] is None:
            untried[-1] = counterimages(N, stack[-1], domain)
        if not untried[-1]:
            # every branch below this node died: back out one level
            retries += 1
            if retries > MAX_DEAD_END_RETRIES or len(stack) == 1:
                truncated = True
                break
            stack.pop()
            untried.pop()
            continue
        pick = int(rng.integers(len(untried[-1])))
        stack.append(untried[-1].pop(pick))
        untried.append(None)
        if len(stack) > frontier:
            # progress past the deepest point so far earns a fresh budget
            frontier = len(stack)
            retries = 0

    points = tuple(stack[burn_in + 1:])
    if truncated and not points:
        raise EmptyOrbitError(
            f"orbit truncated at {len(stack) - 1} steps, before burn-in {burn_in}"
        )
    return BackwardOrbit(
        seed=seed_pt,
        points=points,
        prng_seed=int(prng_seed),
        burn_in=burn_in,
        branch_law=law,
        truncated=truncated,
    )


# ---------------------------------------------------------------------------
# Batched preimage kernels


def _padded_cleared_rows(N):
    """Ascending coefficients of num and den, padded to a common width."""
    nc = np.asarray(N.numerator.coefficients, complex)
    dc = np.asarray(N.denominator.coefficients, complex)
    width = max(nc.size, dc.size)
    ncp = np.zeros(width, complex)
    ncp[: nc.size] = nc
    dcp = np.zeros(width, complex)
    dcp[: dc.size] = dc
    return ncp, dcp


def _complex_preimages_batch(N, targets, ncp=None, dcp=None):
    """Validated counterimages of every target, concatenated.

    Rows of num - z*den are grouped by effective degree so each group
    can be solved by one batched companion call; degenerate rows fall
    back to the scalar solver.
    """
    targets = np.asarray(targets, complex).ravel()
    if targets.size == 0:
        return np.empty(0, complex)
    if ncp is None or dcp is None:
        ncp, dcp = _padded_cleared_rows(N)
    rows = ncp[None, :] - targets[:, None] * dcp[None, :]
    scale = np.max(np.abs(rows), axis=1)
    signif = np.abs(rows) > 1e-12 * scale[:, None]
    width = rows.shape[1]
    degs = np.where(signif.any(axis=1), width - 1 - np.argmax(signif[:, ::-1], axis=1), -1)

    pieces = []
    parents = []
    for d in np.unique(degs):
        if d < 1:
            continue
        sel = degs == d
        if d == width - 1:
            kids = batched_complex_roots(rows[sel, : d + 1])
            pieces.append(kids.ravel())
            parents.append(np.repeat(targets[sel], d))
        else:
            for i in np.nonzero(sel)[0]:
                try:
                    r = univariate_complex_roots(UniComplexPoly(rows[i, : d + 1]), tol=1e-10)
                except ArithmeticError:
                    continue
                pieces.append(np.asarray(r, complex))
                parents.append(np.full(len(r), targets[i]))
    if not pieces:
        return np.empty(0, complex)
    kids = np.concatenate(pieces)
    par = np.concatenate(parents)
    good = np.isfinite(kids.real) & np.isfinite(kids.imag)
    vals, sing = N.step_many(np.where(good, kids, 0.0))
    good &= ~sing & (np.abs(vals - par) <= 1e-6 * (1.0 + np.abs(par)))
    return kids[good]


def _eval_grid(p, X, Y):
    return np.asarray(p.eval(X, Y), float) + np.zeros_like(X)


def _planar_preimages_batch(N, zx, zy, dom, seeds_per_axis=6, iters=40):
    """Multi-start Newton solve of the cleared system for many targets.

    Seeds form a fixed grid over the search domain plus each target
    itself; converged candidates are kept only if the forward map sends
    them back onto their target.  Branches whose basin misses every
    seed are lost, which pixel-level aggregation tolerates; the
    exhaustive path stays in counterimages().
    """
    zx = np.asarray(zx, float).ravel()
    zy = np.asarray(zy, float).ravel()
    if zx.size == 0:
        return np.empty(0), np.empty(0)
    f = N.source
    (fx, fy), (gx, gy) = N.jacobian
    fxx, fxy, fyy = fx.diff(0), fx.diff(1), fy.diff(1)
    gxx, gxy, gyy = gx.diff(0), gx.diff(1), gy.diff(1)

    s = int(seeds_per_axis)
    sx = dom.xmin + (np.arange(s) + 0.5) * (dom.xmax - dom.xmin) / s
    sy = dom.ymax - (np.arange(s) + 0.5) * (dom.ymax - dom.ymin) / s
    gxs, gys = np.meshgrid(sx, sy)
    seeds = s * s + 1
    max_step = 0.5 * math.hypot(dom.xmax - dom.xmin, dom.ymax - dom.ymin)

    chunk = max(1, 2_000_000 // seeds)
    out_x, out_y = [], []
    for lo in range(0, zx.size, chunk):
        tx = zx[lo: lo + chunk]
        ty = zy[lo: lo + chunk]
        m = tx.size
        wx = np.empty((m, seeds))
        wy = np.empty((m, seeds))
        wx[:, :-1] = gxs.ravel()[None, :]
        wy[:, :-1] = gys.ravel()[None, :]
        wx[:, -1] = tx
        wy[:, -1] = ty
        cx = tx[:, None]
        cy = ty[:, None]
        for _ in range(iters):
            ux = wx - cx
            uy = wy - cy
            r1 = _eval_grid(fx, wx, wy) * ux + _eval_grid(fy, wx, wy) * uy \
                - _eval_grid(f.first, wx, wy)
            r2 = _eval_grid(gx, wx, wy) * ux + _eval_grid(gy, wx, wy) * uy \
                - _eval_grid(f.second, wx, wy)
            # cleared system's Jacobian rows are Hessian-weighted offsets
            j11 = _eval_grid(fxx, wx, wy) * ux + _eval_grid(fxy, wx, wy) * uy
            j12 = _eval_grid(fxy, wx, wy) * ux + _eval_grid(fyy, wx, wy) * uy
            j21 = _eval_grid(gxx, wx, wy) * ux + _eval_grid(gxy, wx, wy) * uy
            j22 = _eval_grid(gxy, wx, wy) * ux + _eval_grid(gyy, wx, wy) * uy
            det = j11 * j22 - j12 * j21
            safe = np.where(np.abs(det) > 1e-300, det, 1.0)
            dx = (j22 * r1 - j12 * r2) / safe
            dy = (j11 * r2 - j21 * r1) / safe
            norm = np.hypot(dx, dy)
            damp = np.where(norm > max_step, max_step / np.where(norm == 0, 1, norm), 1.0)
            ok = np.abs(det) > 1e-300
            wx = np.where(ok, wx - damp * dx, wx)
            wy = np.where(ok, wy - damp * dy, wy)

        fwx = wx.ravel()
        fwy = wy.ravel()
        rx = np.repeat(tx, seeds)
        ry = np.repeat(ty, seeds)
        good = np.isfinite(fwx) & np.isfinite(fwy)
        margin = 1e-9 * (1.0 + max_step)
        good &= (
            (fwx >= dom.xmin - margin) & (fwx <= dom.xmax + margin)
            & (fwy >= dom.ymin - margin) & (fwy <= dom.ymax + margin)
        )
        nx, ny, sing = N.step_many(np.where(good, fwx, 0.0), np.where(good, fwy, 0.0))
        good &= ~sing & (np.hypot(nx - rx, ny - ry) <= RESIDUAL_RTOL * (1.0 + np.hypot(rx, ry)))
        out_x.append(fwx[good])
        out_y.append(fwy[good])
    return np.concatenate(out_x), np.concatenate(out_y)


# ---------------------------------------------------------------------------
# Backward trees


def backward_tree(N, z0, depth, cap=DEFAULT_NODE_CAP, domain=None,
                  window=None, width=256, height=256):
    """Breadth-first backward expansion, rasterized at the deepest level
    that was fully expanded within the node cap.

    The raster covers window (defaulting to the search domain) and its
    partial flag is set whenever the requested depth was not reached.
    Planar trees deduplicate every level at pixel resolution over the
    search domain, so their node identity is pixel-accurate only.
    """
    N = _as_backward_map(N)
    depth = int(depth)
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if cap < 1:
        raise ValueError("cap must be >= 1")
    win = _window_or_none(window)
    dom = _window_or_none(domain)
    if win is None:
        win = dom
    if win is None:
        raise ValueError("need a window (or domain) to rasterize the tree")
    if N.kind == "complex":
        return _complex_tree(N, complex(z0), depth, cap, dom, win, width, height)
    if dom is None:
        raise ValueError("planar backward tree needs a bounded search domain")
    return _planar_tree(N, (float(z0[0]), float(z0[1])), depth, cap, dom, win, width, height)


def _complex_tree(N, z0, depth, cap, dom, win, width, height):
    ncp, dcp = _padded_cleared_rows(N)
    branch = max(int(N.degree), 1)
    level = np.array([z0])
    total = 1
    completed = 0
    for k in range(1, depth + 1):
        if total + level.size * branch > cap:
            break
        kids = _complex_preimages_batch(N, level, ncp, dcp)
        if dom is not None:
            inside = (
                (kids.real >= dom.xmin) & (kids.real <= dom.xmax)
                & (kids.imag >= dom.ymin) & (kids.imag <= dom.ymax)
            )
            kids = kids[inside]
        if kids.size == 0:
            break
        level = kids
        total += kids.size
        completed = k
    return OccupancyRaster.from_points(level.real, level.imag, win, width, height,
                                       partial=completed < depth)


def _planar_tree(N, z0, depth, cap, dom, win, width, height):
    # dedup grid over the domain, matched to the output pixel size
    pw = (win.xmax - win.xmin) / width
    ph = (win.ymax - win.ymin) / height
    ddw = int(min(2048, max(1, math.ceil((dom.xmax - dom.xmin) / pw))))
    ddh = int(min(2048, max(1, math.ceil((dom.ymax - dom.ymin) / ph))))
    branch = max(1, max(N.source.first.degree, 1) * max(N.source.second.degree, 1))

    px = np.array([z0[0]])
    py = np.array([z0[1]])
    total = 1
    completed = 0
    for k in range(1, depth + 1):
        if total + px.size * branch > cap:
            break
        wx, wy = _planar_preimages_batch(N, px, py, dom)
        if wx.size == 0:
            break
        occ = OccupancyRaster.from_points(wx, wy, dom, ddw, ddh)
        px, py = occ.set_pixel_centers()
        total += px.size
        completed = k
    return OccupancyRaster.from_points(px, py, win, width, height,
                                       partial=completed < depth)


# ---------------------------------------------------------------------------
# Hutchinson iteration


def hutchinson_iterate(N, initial, excluded, steps):
    """Iterate the pixel-level backward set map, discarding points that
    land inside the excluded disks, and report the Hausdorff gap between
    consecutive iterates.

    Returns (rasters, gaps) with one raster per step and gaps[k] the
    pixel distance between step k and its predecessor.
    """
    N = _as_backward_map(N)
    if int(steps) < 1:
        raise ValueError("steps must be >= 1")
    if initial.count == 0:
        raise ValueError("initial raster is empty")
    disks = [(float(cx), float(cy), float(r)) for cx, cy, r in excluded]
    win = initial.window
    ncp = dcp = None
    if N.kind == "complex":
        ncp, dcp = _padded_cleared_rows(N)

    rasters = []
    gaps = []
    current = initial
    for _ in range(int(steps)):
        xs, ys = current.set_pixel_centers()
        if N.kind == "complex":
            kids = _complex_preimages_batch(N, xs + 1j * ys, ncp, dcp)
            px, py = kids.real, kids.imag
        else:
            px, py = _planar_preimages_batch(N, xs, ys, win)
        for cx, cy, r in disks:
            keep = (px - cx) ** 2 + (py - cy) ** 2 >= r * r
            px, py = px[keep], py[keep]
        nxt = OccupancyRaster.from_points(px, py, win, initial.width, initial.height)
        if nxt.count == 0:
            raise EmptySetError("iterate lost every pixel; excluded disks cover the image")
        gaps.append(hausdorff_pixel_distance(nxt, current))
        rasters.append(nxt)
        current = nxt
    return rasters, gaps


def _check_raster_pair(A, B):
    if A.width != B.width or A.height != B.height \
            or A.window.as_tuple() != B.window.as_tuple():
        raise ValueError("rasters must share window and dimensions")
    if A.count == 0 or B.count == 0:
        raise ValueError("pixel distances need two nonempty rasters")


def directed_pixel_distance(A, B):
    """How far the set pixels of A stray from those of B, in pixel units:
    max over A's pixels of the distance to the nearest set pixel of B.
    Not symmetric; use it to test whether A lies inside a thickened B."""
    _check_raster_pair(A, B)
    to_b = ndimage.distance_transform_edt(~B.bits)
    return float(to_b[A.bits].max())


def hausdorff_pixel_distance(A, B):
    """Symmetric Hausdorff distance between set-pixel centers, in pixel
    units: the larger of the two directed distances."""
    _check_raster_pair(A, B)
    return max(directed_pixel_distance(A, B), directed_pixel_distance(B, A))
