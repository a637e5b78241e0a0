"""Newton map construction for complex univariate polynomials and real
planar polynomial maps, plus the projective extension, ghost-line search,
and coordinate-change pullbacks.

The planar Newton step solves D_f(x) s = f(x) and returns x - s; the
complex map is the rational function (z p' - p) / p'.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .poly import MultiPoly, PlaneMap, UniComplexPoly, system_real_roots

__all__ = [
    "SingularJacobianError",
    "ComplexRationalMap",
    "NewtonComplexMap",
    "NewtonPlaneMap",
    "TriPoly",
    "ProjectivePlaneMap",
    "GhostLine",
    "build_newton_complex",
    "build_newton_plane",
    "newton_step_plane",
    "homogenize_newton",
    "indeterminacy_points",
    "jacobian_at_infinity",
    "ghost_lines",
    "ghost_line_from_pair",
    "measure_invariance_defect",
    "pullback_map",
]

SINGULAR_RTOL = 1e-12


class SingularJacobianError(ArithmeticError):
    """Newton step hit a (numerically) singular derivative; carries the point."""

    def __init__(self, point):
        super().__init__(f"singular derivative at {point!r}")
        self.point = point


class ComplexRationalMap:
    """Rational self-map of the complex plane, numerator / denominator."""

    kind = "complex"

    def __init__(self, numerator, denominator):
        if numerator.is_zero and denominator.is_zero:
            raise ValueError("numerator and denominator cannot both be zero")
        if denominator.is_zero:
            raise ValueError("denominator must be nonzero")
        self.numerator = numerator
        self.denominator = denominator
        self.degree = max(numerator.degree, denominator.degree)

    def _den_scale(self, z):
        return self.denominator.max_abs_coeff() * (1.0 + np.abs(z)) ** max(
            self.denominator.degree, 0
        )

    def step(self, z):
        """One application; raises SingularJacobianError at denominator zeros."""
        d = self.denominator.eval(z)
        if abs(d) <= SINGULAR_RTOL * self._den_scale(z):
            raise SingularJacobianError(z)
        w = self.numerator.eval(z) / d
        if not np.isfinite(w.real) or not np.isfinite(w.imag):
            raise SingularJacobianError(z)
        return w

    def step_many(self, z):
        """Vectorized step; returns (values, singular_mask)."""
        d = self.denominator.eval(z)
        singular = np.abs(d) <= SINGULAR_RTOL * self._den_scale(z)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            w = self.numerator.eval(z) / np.where(singular, 1.0, d)
        bad = ~(np.isfinite(w.real) & np.isfinite(w.imag))
        return np.where(singular | bad, 0.0, w), singular | bad

    def __call__(self, z):
        return self.step(z)


class NewtonComplexMap(ComplexRationalMap):
    """Newton map of a univariate complex polynomial."""

    def __init__(self, source, numerator, denominator):
        super().__init__(numerator, denominator)
        self.source = source


def build_newton_complex(p):
    """Newton map of p: numerator z p' - p, denominator p'."""
    if p.degree < 1:
        raise ValueError("Newton map needs a polynomial of degree >= 1")
    dp = p.diff()
    z = UniComplexPoly.variable()
    return NewtonComplexMap(p, z * dp - p, dp)


class NewtonPlaneMap:
    """Newton map of a polynomial plane map, with symbolic Jacobian."""

    kind = "planar"

    def __init__(self, source, jacobian, det):
        self.source = source
        self.jacobian = jacobian
        self.det = det

    def step(self, point):
        """One Newton step at a point; partial-pivot 2x2 elimination."""
        x, y = float(point[0]), float(point[1])
        (fx, fy), (gx, gy) = self.jacobian
        a, b = fx.eval(x, y), fy.eval(x, y)
        c, d = gx.eval(x, y), gy.eval(x, y)
        det = a * d - b * c
        norm_inf = max(abs(a) + abs(b), abs(c) + abs(d))
        if abs(det) < SINGULAR_RTOL * (1.0 + norm_inf):
            raise SingularJacobianError((x, y))
        r1 = self.source.first.eval(x, y)
        r2 = self.source.second.eval(x, y)
        if abs(c) > abs(a):
            a, b, r1, c, d, r2 = c, d, r2, a, b, r1
        m = c / a
        s2 = (r2 - m * r1) / (d - m * b)
        s1 = (r1 - b * s2) / a
        return (x - s1, y - s2)

    def step_many(self, x, y):
        """Vectorized step with the same pivoting; returns (nx, ny, singular)."""
        (fx, fy), (gx, gy) = self.jacobian
        a, b = fx.eval(x, y), fy.eval(x, y)
        c, d = gx.eval(x, y), gy.eval(x, y)
        a, b, c, d = (np.asarray(v, dtype=float) + np.zeros_like(x) for v in (a, b, c, d))
        det = a * d - b * c
        norm_inf = np.maximum(np.abs(a) + np.abs(b), np.abs(c) + np.abs(d))
        singular = np.abs(det) < SINGULAR_RTOL * (1.0 + norm_inf)
        r1 = self.source.first.eval(x, y) + np.zeros_like(x)
        r2 = self.source.second.eval(x, y) + np.zeros_like(x)
        swap = np.abs(c) > np.abs(a)
        a2 = np.where(swap, c, a)
        b2 = np.where(swap, d, b)
        t1 = np.where(swap, r2, r1)
        c2 = np.where(swap, a, c)
        d2 = np.where(swap, b, d)
        t2 = np.where(swap, r1, r2)
        safe_a = np.where(singular | (a2 == 0.0), 1.0, a2)
        m = c2 / safe_a
        denom = d2 - m * b2
        safe_denom = np.where(singular | (denom == 0.0), 1.0, denom)
        s2 = (t2 - m * t1) / safe_denom
        s1 = (t1 - b2 * s2) / safe_a
        nx = x - s1
        ny = y - s2
        bad = ~(np.isfinite(nx) & np.isfinite(ny))
        singular = singular | bad
        return (np.where(singular, x, nx), np.where(singular, y, ny), singular)

    def __call__(self, point):
        return self.step(point)


def build_newton_plane(f):
    """Newton map of a polynomial plane map."""
    jac = f.jacobian()
    (fx, fy), (gx, gy) = jac
    det = fx * gy - fy * gx
    if det.is_zero:
        raise ValueError("plane map has identically singular Jacobian")
    return NewtonPlaneMap(f, jac, det)


def newton_step_plane(N, point):
    """One planar Newton step (module-level form of NewtonPlaneMap.step)."""
    return N.step(point)


# ---------------------------------------------------------------------------
# Projective extension


class TriPoly:
    """Sparse real polynomial in three variables (x, y, z)."""

    __slots__ = ("terms",)

    def __init__(self, terms=()):
        acc = {}
        if isinstance(terms, dict):
            terms = terms.items()
        for (i, j, k), c in terms:
            c = float(c)
            key = (int(i), int(j), int(k))
            acc[key] = acc.get(key, 0.0) + c
        self.terms = tuple(sorted((e, c) for e, c in acc.items() if c != 0.0))

    @classmethod
    def homogenize(cls, p, total_degree):
        """Lift a MultiPoly in (x, y) to a homogeneous TriPoly of the given
        total degree using powers of z."""
        if total_degree < p.degree:
            raise ValueError("total degree below the polynomial degree")
        return cls([((i, j, total_degree - i - j), c) for (i, j), c in p.terms])

    @property
    def degree(self):
        if not self.terms:
            return -1
        return max(i + j + k for (i, j, k), _ in self.terms)

    @property
    def is_homogeneous(self):
        degs = {i + j + k for (i, j, k), _ in self.terms}
        return len(degs) <= 1

    @property
    def is_zero(self):
        return not self.terms

    def eval(self, x, y, z):
        out = None
        for (i, j, k), c in self.terms:
            t = c * x**i * y**j * z**k
            out = t if out is None else out + t
        if out is None:
            return 0.0 if np.isscalar(x) else np.zeros(np.asarray(x).shape)
        return out

    def shift(self, di, dj, dk):
        """Multiply by the monomial x^di y^dj z^dk (negative = divide)."""
        return TriPoly([((i + di, j + dj, k + dk), c) for (i, j, k), c in self.terms])

    def scale(self, s):
        return TriPoly([(e, c * s) for e, c in self.terms])

    def chart(self, axis):
        """Restrict to an affine chart: axis 0 sets x=1 (vars y, z), axis 1
        sets y=1 (vars x, z), axis 2 sets z=1 (vars x, y)."""
        out = []
        for (i, j, k), c in self.terms:
            if axis == 0:
                out.append(((j, k), c))
            elif axis == 1:
                out.append(((i, k), c))
            else:
                out.append(((i, j), c))
        return MultiPoly(out)

    def min_exponents(self):
        if not self.terms:
            return (0, 0, 0)
        return tuple(
            min(e[axis] for e, _ in self.terms) for axis in range(3)
        )

    def __eq__(self, other):
        return isinstance(other, TriPoly) and self.terms == other.terms

    def __hash__(self):
        return hash(self.terms)

    def __repr__(self):
        return f"TriPoly({list(self.terms)})"


@dataclass(frozen=True)
class ProjectivePlaneMap:
    """Degree-d self-map of the real projective plane, three homogeneous
    components with common monomial content removed."""

    components: tuple

    def __post_init__(self):
        degs = {c.degree for c in self.components if not c.is_zero}
        if len(degs) != 1:
            raise ValueError("components must share one total degree")
        if not all(c.is_homogeneous for c in self.components):
            raise ValueError("components must be homogeneous")

    @property
    def degree(self):
        return max(c.degree for c in self.components)

    def eval(self, x, y, z):
        return tuple(c.eval(x, y, z) for c in self.components)

    def chart_map(self, axis=1):
        """Rational map of the chart: components restricted to the chart,
        returned as (first_numerator, second_numerator, denominator).

        In the y=1 chart the map is (P0/P1, P2/P1) in variables (x, z)."""
        p0, p1, p2 = (c.chart(axis) for c in self.components)
        if axis == 0:
            return p1, p2, p0
        if axis == 1:
            return p0, p2, p1
        return p0, p1, p2


def _normalize_scalar_content(polys):
    """Divide a family of TriPolys by their common scalar content.

    With near-integer coefficients the gcd of the rounded values is used;
    otherwise the largest common magnitude 1 (no scaling).  The result is
    sign-normalized so the first stored coefficient is positive.
    """
    coeffs = [c for p in polys for _, c in p.terms]
    if not coeffs:
        return polys
    scale = 1.0
    rounded = [round(c) for c in coeffs]
    if all(abs(c - r) <= 1e-9 * max(1.0, abs(c)) and r != 0 for c, r in zip(coeffs, rounded)):
        g = 0
        for r in rounded:
            g = math.gcd(g, abs(int(r)))
        if g > 1:
            scale = float(g)
    first = None
    for p in polys:
        if p.terms:
            first = p.terms[0][1]
            break
    if first is not None and first < 0:
        scale = -scale
    return [p.scale(1.0 / scale) for p in polys]


def homogenize_newton(N):
    """Projective extension of a planar Newton map (a PlaneMap is also
    accepted and lifted first).

    Uses the adjugate form: with w = D_f x - f and u = adj(D_f) w, the affine
    map is (u1/det, u2/det); homogenizing to common degree m gives components
    [U1 : U2 : z * DET] with the common monomial content divided out.

    Returns (ProjectivePlaneMap, indeterminacy points) where the points are
    the common real zeros of the three components, normalized.
    """
    if isinstance(N, PlaneMap):
        N = build_newton_plane(N)
    f = N.source
    (fx, fy), (gx, gy) = N.jacobian
    x = MultiPoly.variable(0)
    y = MultiPoly.variable(1)
    w1 = fx * x + fy * y - f.first
    w2 = gx * x + gy * y - f.second
    u1 = gy * w1 - fy * w2
    u2 = fx * w2 - gx * w1
    det = N.det
    m = max(u1.degree, u2.degree, det.degree + 1)
    comps = [
        TriPoly.homogenize(u1, m),
        TriPoly.homogenize(u2, m),
        TriPoly.homogenize(det, m - 1).shift(0, 0, 1),
    ]
    mins = [p.min_exponents() for p in comps if not p.is_zero]
    common = tuple(min(mins_k) for mins_k in zip(*mins))
    if any(common):
        comps = [p.shift(-common[0], -common[1], -common[2]) for p in comps]
    comps = _normalize_scalar_content(comps)
    P = ProjectivePlaneMap(tuple(comps))
    return P, indeterminacy_points(P)


def indeterminacy_points(P, tol=1e-8):
    """Common real zeros of the three components, as normalized projective
    points.

    Each affine chart is searched with system_real_roots over a box that
    covers all points whose largest coordinate lies on that chart axis.
    """
    points = []
    box = (-1.25, 1.25, -1.25, 1.25)
    scale = max(
        max((abs(c) for _, c in comp.terms), default=0.0) for comp in P.components
    )
    for axis in range(3):
        charts = [c.chart(axis) for c in P.components]
        nonzero = [c for c in charts if not c.is_zero]
        if len(nonzero) < 2:
            continue
        try:
            candidates = system_real_roots(
                PlaneMap(nonzero[0], nonzero[1]), box, tol=1e-12
            )
        except ValueError:
            continue
        for u, v in candidates:
            if all(abs(c.eval(u, v)) <= tol * scale for c in charts):
                if axis == 0:
                    pt = (1.0, u, v)
                elif axis == 1:
                    pt = (u, 1.0, v)
                else:
                    pt = (u, v, 1.0)
                points.append(_normalize_projective(pt))
    return _dedupe_tuples(points, 1e-8)


def _normalize_projective(pt):
    arr = np.array(pt, dtype=float)
    arr /= np.max(np.abs(arr))
    for v in arr:
        if abs(v) > 1e-12:
            if v < 0:
                arr = -arr
            break
    return tuple(float(v) for v in arr)


def _dedupe_tuples(points, radius):
    out = []
    for pt in sorted(points):
        if all(max(abs(a - b) for a, b in zip(pt, q)) > radius for q in out):
            out.append(pt)
    return out


def jacobian_at_infinity(P, x_coord, step=1e-6, axis=1):
    """Finite-difference Jacobian of the chart map at a point (x, 0) on the
    line at infinity (z = 0 in the y = 1 chart)."""
    num1, num2, den = P.chart_map(axis)

    def phi(u, v):
        d = den.eval(u, v)
        if d == 0:
            raise ValueError(
                f"chart map undefined at ({u}, {v}): denominator vanishes "
                "(indeterminacy point?)"
            )
        return np.array([num1.eval(u, v) / d, num2.eval(u, v) / d])

    x0 = float(x_coord)
    scale = max((abs(c) for _, c in den.terms), default=0.0)
    if abs(den.eval(x0, 0.0)) <= 1e-12 * scale * (1.0 + abs(x0)) ** max(den.degree, 0):
        raise ValueError(f"({x0}, 0) is an indeterminacy point of the chart map")
    h = step
    col_x = (phi(x0 + h, 0.0) - phi(x0 - h, 0.0)) / (2 * h)
    col_z = (phi(x0, h) - phi(x0, -h)) / (2 * h)
    return np.column_stack([col_x, col_z])


# ---------------------------------------------------------------------------
# Ghost lines


@dataclass(frozen=True)
class GhostLine:
    """Real trace of the complex line through a conjugate pair of strictly
    complex solutions of f = 0: base point (Re x, Re y), unit direction
    (Im x, Im y).

    invariance_defect is the largest sampled distance by which the Newton
    map moves line points off the line; it is numerically zero exactly when
    the line is invariant (always the case when both components of f have
    degree <= 2, where the line through any two solutions is preserved)."""

    base: tuple
    direction: tuple
    source_pair: tuple
    invariance_defect: float = float("nan")

    def point_at(self, t):
        return (self.base[0] + t * self.direction[0],
                self.base[1] + t * self.direction[1])

    def distance(self, x, y):
        """Perpendicular distance from (x, y) to the line (vectorized)."""
        nx, ny = -self.direction[1], self.direction[0]
        return np.abs((x - self.base[0]) * nx + (y - self.base[1]) * ny)


def ghost_line_from_pair(solution):
    """GhostLine through a strictly complex solution (x, y) and its conjugate."""
    zx, zy = complex(solution[0]), complex(solution[1])
    im = math.hypot(zx.imag, zy.imag)
    if im <= 1e-12:
        raise ValueError("solution is real; no ghost line")
    direction = (zx.imag / im, zy.imag / im)
    if direction[0] < 0 or (abs(direction[0]) <= 1e-12 and direction[1] < 0):
        direction = (-direction[0], -direction[1])
    return GhostLine(
        base=(zx.real, zy.real),
        direction=direction,
        source_pair=((zx, zy), (zx.conjugate(), zy.conjugate())),
    )


def _complex_system_solutions(f, box, seeds_per_axis=32, dedupe_radius=1e-6):
    """All isolated solutions of f = 0 over C^2 reachable from a coarse
    complexified-box seed grid, by vectorized two-variable Newton."""
    xmin, xmax, ymin, ymax = box
    sx = 0.5 * (xmax - xmin)
    sy = 0.5 * (ymax - ymin)
    re_x = np.linspace(xmin, xmax, seeds_per_axis)
    im_x = np.linspace(-sx, sx, seeds_per_axis)
    re_y = np.linspace(ymin, ymax, seeds_per_axis)
    im_y = np.linspace(-sy, sy, seeds_per_axis)
    (fx, fy), (gx, gy) = f.jacobian()
    scale = max(f.first.max_abs_coeff(), f.second.max_abs_coeff(), 1.0)

    found_x, found_y = [], []
    grids = np.meshgrid(re_x, im_x, re_y, im_y, indexing="ij")
    X = (grids[0] + 1j * grids[1]).ravel()
    Y = (grids[2] + 1j * grids[3]).ravel()
    chunk = 1 << 17
    for start in range(0, X.size, chunk):
        x = X[start:start + chunk].copy()
        y = Y[start:start + chunk].copy()
        for it in range(60):
            f1 = f.first.eval(x, y)
            f2 = f.second.eval(x, y)
            a = fx.eval(x, y) + np.zeros_like(x)
            b = fy.eval(x, y) + np.zeros_like(x)
            c = gx.eval(x, y) + np.zeros_like(x)
            d = gy.eval(x, y) + np.zeros_like(x)
            det = a * d - b * c
            dead = np.abs(det) < 1e-14
            det = np.where(dead, 1.0, det)
            dx = (d * f1 - b * f2) / det
            dy = (a * f2 - c * f1) / det
            x = np.where(dead, x, x - dx)
            y = np.where(dead, y, y - dy)
            settled = (np.abs(dx) + np.abs(dy)) <= 1e-13 * (1.0 + np.abs(x) + np.abs(y))
            if np.any(settled & ~dead):
                take = settled & ~dead
                found_x.append(x[take])
                found_y.append(y[take])
            keep = (np.abs(x) < 1e6) & (np.abs(y) < 1e6) & ~dead & ~settled
            x, y = x[keep], y[keep]
            if x.size == 0:
                break
    if found_x:
        x = np.concatenate(found_x)
        y = np.concatenate(found_y)
        r = np.abs(f.first.eval(x, y)) + np.abs(f.second.eval(x, y))
        ok = r <= 1e-9 * scale
        found_x, found_y = [x[ok]], [y[ok]]
    if not found_x:
        return []
    x = np.concatenate(found_x)
    y = np.concatenate(found_y)
    # bucket dedupe: quantize to the dedupe radius, then exact pass
    seen = {}
    for xi, yi in zip(x, y):
        key = (round(xi.real / dedupe_radius), round(xi.imag / dedupe_radius),
               round(yi.real / dedupe_radius), round(yi.imag / dedupe_radius))
        if key not in seen:
            seen[key] = (complex(xi), complex(yi))
    solutions = []
    for cand in seen.values():
        if all(
            max(abs(cand[0] - s[0]), abs(cand[1] - s[1])) > dedupe_radius
            for s in solutions
        ):
            solutions.append(cand)
    return solutions


def ghost_lines(f, box, invariance_samples=50):
    """Ghost lines of a real plane map: real traces of complex lines through
    conjugate pairs of strictly complex solutions of f = 0.

    Candidate solutions come from a coarse complexified-box Newton search
    (32 seeds per real/imaginary axis).  Every conjugate pair yields one
    line; each line carries its measured invariance defect, the largest
    sampled distance by which the planar Newton map moves line points off
    the line (numerically zero for maps with quadratic components).
    """
    solutions = _complex_system_solutions(f, box)
    N = build_newton_plane(f)
    span = 0.5 * math.hypot(box[1] - box[0], box[3] - box[2])
    lines = []
    for sol in solutions:
        zx, zy = sol
        if math.hypot(zx.imag, zy.imag) <= 1e-8:
            continue
        if zx.imag < 0 or (abs(zx.imag) <= 1e-12 and zy.imag < 0):
            continue  # keep one representative per conjugate pair
        line = ghost_line_from_pair(sol)
        defect = measure_invariance_defect(N, line, span, invariance_samples)
        line = GhostLine(line.base, line.direction, line.source_pair, defect)
        if all(not _same_line(line, other) for other in lines):
            lines.append(line)
    lines.sort(key=lambda L: (L.base[0], L.base[1], L.direction[0], L.direction[1]))
    return lines


def measure_invariance_defect(N, line, span, samples=50):
    """Largest distance by which N moves sampled line points off the line.

    Samples where the step is singular or overflows are skipped; if no
    sample survives the defect is reported as infinite.
    """
    ts = np.linspace(-span, span, samples)
    worst = -1.0
    for t in ts:
        p = line.point_at(float(t))
        try:
            q = N.step(p)
        except SingularJacobianError:
            continue
        if not (np.isfinite(q[0]) and np.isfinite(q[1])):
            continue
        worst = max(worst, float(line.distance(q[0], q[1])))
    return worst if worst >= 0 else float("inf")


def _same_line(a, b, tol=1e-6):
    if min(abs(a.direction[0] - b.direction[0]), abs(a.direction[0] + b.direction[0])) > tol:
        return False
    if min(abs(a.direction[1] - b.direction[1]), abs(a.direction[1] + b.direction[1])) > tol:
        return False
    return a.distance(b.base[0], b.base[1]) <= tol


# ---------------------------------------------------------------------------
# Pullbacks


def pullback_map(f, psi, psi_inv, check_tol=1e-9):
    """Conjugate f by a polynomial coordinate change: psi_inv o f o psi.

    psi and psi_inv must be mutually inverse polynomial maps; both
    compositions are verified symbolically before the pullback is formed.
    """
    ident_x = MultiPoly.variable(0)
    ident_y = MultiPoly.variable(1)
    for first, second in ((psi, psi_inv), (psi_inv, psi)):
        comp = first.compose(second)
        if not (comp.first.equals(ident_x, check_tol)
                and comp.second.equals(ident_y, check_tol)):
            raise ValueError("psi and psi_inv are not mutually inverse")
    return psi_inv.compose(f.compose(psi))
