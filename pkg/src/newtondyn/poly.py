"""Polynomial layer: sparse bivariate real polynomials, plane maps, and
univariate complex polynomials, with evaluation, differentiation, parsing,
and the two root solvers everything else is built on.

Conventions: a MultiPoly is a canonical sparse sum of c * x^i * y^j terms,
the zero polynomial has degree -1, and all evaluation routines accept
scalars or numpy arrays (real or complex).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MultiPoly",
    "PlaneMap",
    "UniComplexPoly",
    "PolyParseError",
    "poly_eval",
    "poly_diff",
    "parse_poly",
    "parse_plane_map",
    "univariate_complex_roots",
    "batched_complex_roots",
    "row_polyval",
    "system_real_roots",
    "complex_poly_to_plane_map",
]


class PolyParseError(ValueError):
    """Raised for malformed polynomial text; carries the 1-based column."""

    def __init__(self, message, column):
        super().__init__(f"{message} (column {column})")
        self.column = column


class MultiPoly:
    """Real polynomial in two variables with canonical sparse storage.

    terms is a tuple of ((ex, ey), coeff) sorted by exponent pair, with
    duplicate exponent pairs combined and exact-zero coefficients dropped.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=()):
        acc = {}
        if isinstance(terms, dict):
            terms = terms.items()
        for (ex, ey), c in terms:
            ex = int(ex)
            ey = int(ey)
            if ex < 0 or ey < 0:
                raise ValueError("negative exponent in polynomial term")
            c = float(c)
            acc[(ex, ey)] = acc.get((ex, ey), 0.0) + c
        self.terms = tuple(sorted((e, c) for e, c in acc.items() if c != 0.0))

    @classmethod
    def constant(cls, c):
        return cls([(((0, 0)), c)])

    @classmethod
    def variable(cls, index):
        """x for index 0, y for index 1."""
        if index == 0:
            return cls([((1, 0), 1.0)])
        if index == 1:
            return cls([((0, 1), 1.0)])
        raise ValueError("variable index must be 0 or 1")

    @property
    def degree(self):
        """Total degree; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        return max(ex + ey for (ex, ey), _ in self.terms)

    @property
    def is_zero(self):
        return not self.terms

    def coeff(self, ex, ey):
        for (i, j), c in self.terms:
            if i == ex and j == ey:
                return c
        return 0.0

    def max_abs_coeff(self):
        return max((abs(c) for _, c in self.terms), default=0.0)

    def eval(self, x, y):
        """Evaluate at scalars or numpy arrays (real or complex)."""
        if not self.terms:
            if np.isscalar(x) and np.isscalar(y):
                return 0.0
            return np.zeros(np.broadcast(x, y).shape)
        xp = _power_table(x, max(ex for (ex, _), _ in self.terms))
        yp = _power_table(y, max(ey for (_, ey), _ in self.terms))
        out = None
        for (ex, ey), c in self.terms:
            t = c * xp[ex] * yp[ey]
            out = t if out is None else out + t
        return out

    def diff(self, var):
        """Partial derivative with respect to variable 0 (x) or 1 (y)."""
        out = []
        for (ex, ey), c in self.terms:
            if var == 0 and ex > 0:
                out.append(((ex - 1, ey), c * ex))
            elif var == 1 and ey > 0:
                out.append(((ex, ey - 1), c * ey))
        return MultiPoly(out)

    def compose(self, u, v):
        """Substitute polynomials u for x and v for y."""
        max_ex = max((ex for (ex, _), _ in self.terms), default=0)
        max_ey = max((ey for (_, ey), _ in self.terms), default=0)
        up = _poly_power_table(u, max_ex)
        vp = _poly_power_table(v, max_ey)
        out = MultiPoly()
        for (ex, ey), c in self.terms:
            out = out + (up[ex] * vp[ey]) * c
        return out

    def equals(self, other, tol=0.0):
        """Coefficient-wise comparison within an absolute tolerance."""
        keys = {e for e, _ in self.terms} | {e for e, _ in other.terms}
        return all(abs(self.coeff(*k) - other.coeff(*k)) <= tol for k in keys)

    def __add__(self, other):
        if np.isscalar(other):
            other = MultiPoly.constant(other)
        return MultiPoly(list(self.terms) + list(other.terms))

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly([(e, -c) for e, c in self.terms])

    def __sub__(self, other):
        if np.isscalar(other):
            other = MultiPoly.constant(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if np.isscalar(other):
            return MultiPoly([(e, c * other) for e, c in self.terms])
        out = {}
        for (ax, ay), ac in self.terms:
            for (bx, by), bc in other.terms:
                k = (ax + bx, ay + by)
                out[k] = out.get(k, 0.0) + ac * bc
        return MultiPoly(out)

    __rmul__ = __mul__

    def __pow__(self, n):
        if n < 0:
            raise ValueError("negative power of a polynomial")
        out = MultiPoly.constant(1.0)
        for _ in range(int(n)):
            out = out * self
        return out

    def __eq__(self, other):
        return isinstance(other, MultiPoly) and self.terms == other.terms

    def __hash__(self):
        return hash(self.terms)

    def __repr__(self):
        if not self.terms:
            return "MultiPoly(0)"
        parts = []
        for (ex, ey), c in self.terms:
            s = f"{c:g}"
            if ex:
                s += f"*x^{ex}" if ex > 1 else "*x"
            if ey:
                s += f"*y^{ey}" if ey > 1 else "*y"
            parts.append(s)
        return "MultiPoly(" + " + ".join(parts) + ")"


def _power_table(v, n):
    """[v^0, v^1, ..., v^n] computed by cumulative multiplication."""
    if np.isscalar(v):
        table = [1.0]
        for _ in range(n):
            table.append(table[-1] * v)
        return table
    one = np.ones_like(np.asarray(v))
    table = [one]
    for _ in range(n):
        table.append(table[-1] * v)
    return table


def _poly_power_table(p, n):
    table = [MultiPoly.constant(1.0)]
    for _ in range(n):
        table.append(table[-1] * p)
    return table


@dataclass(frozen=True)
class PlaneMap:
    """Polynomial map of the real plane, components (first, second)."""

    first: MultiPoly
    second: MultiPoly

    def __post_init__(self):
        if self.first.is_zero and self.second.is_zero:
            raise ValueError("plane map must have at least one nonzero component")

    def eval(self, x, y):
        return self.first.eval(x, y), self.second.eval(x, y)

    def jacobian(self):
        """Four partial derivatives ((fx, fy), (gx, gy))."""
        return (
            (self.first.diff(0), self.first.diff(1)),
            (self.second.diff(0), self.second.diff(1)),
        )

    def compose(self, other):
        """self after other, as a PlaneMap."""
        return PlaneMap(
            self.first.compose(other.first, other.second),
            self.second.compose(other.first, other.second),
        )


class UniComplexPoly:
    """Univariate polynomial with complex coefficients, ascending order.

    The zero polynomial stores an empty coefficient tuple and has degree -1;
    otherwise the leading coefficient is nonzero.
    """

    __slots__ = ("coefficients", "_real")

    def __init__(self, coefficients=()):
        coeffs = [complex(c) for c in coefficients]
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        self.coefficients = tuple(coeffs)
        self._real = all(c.imag == 0.0 for c in self.coefficients)

    @property
    def degree(self):
        return len(self.coefficients) - 1

    @property
    def is_zero(self):
        return not self.coefficients

    @property
    def has_real_coefficients(self):
        return self._real

    def eval(self, z):
        """Horner evaluation; real input with real coefficients stays real."""
        scalar = np.isscalar(z)
        use_real = self._real and not np.iscomplexobj(np.asarray(z))
        if not self.coefficients:
            return 0.0 if scalar else np.zeros(np.asarray(z).shape)
        coeffs = [c.real for c in self.coefficients] if use_real else list(self.coefficients)
        if scalar:
            out = coeffs[-1]
            for c in reversed(coeffs[:-1]):
                out = out * z + c
            return out
        z = np.asarray(z)
        out = np.full(z.shape, coeffs[-1], dtype=float if use_real else complex)
        for c in reversed(coeffs[:-1]):
            out = out * z + c
        return out

    def diff(self):
        return UniComplexPoly([k * c for k, c in enumerate(self.coefficients)][1:])

    def max_abs_coeff(self):
        return max((abs(c) for c in self.coefficients), default=0.0)

    def __add__(self, other):
        if np.isscalar(other):
            other = UniComplexPoly([other])
        n = max(len(self.coefficients), len(other.coefficients))
        a = list(self.coefficients) + [0] * (n - len(self.coefficients))
        b = list(other.coefficients) + [0] * (n - len(other.coefficients))
        return UniComplexPoly([x + y for x, y in zip(a, b)])

    __radd__ = __add__

    def __neg__(self):
        return UniComplexPoly([-c for c in self.coefficients])

    def __sub__(self, other):
        if np.isscalar(other):
            other = UniComplexPoly([other])
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if np.isscalar(other):
            return UniComplexPoly([c * other for c in self.coefficients])
        out = [0j] * (len(self.coefficients) + len(other.coefficients) - 1 or 1)
        for i, a in enumerate(self.coefficients):
            for j, b in enumerate(other.coefficients):
                out[i + j] += a * b
        return UniComplexPoly(out)

    __rmul__ = __mul__

    def __eq__(self, other):
        return (
            isinstance(other, UniComplexPoly)
            and self.coefficients == other.coefficients
        )

    def __hash__(self):
        return hash(self.coefficients)

    def __repr__(self):
        return f"UniComplexPoly({list(self.coefficients)})"

    @classmethod
    def variable(cls):
        return cls([0.0, 1.0])

    @classmethod
    def from_multipoly(cls, p, var=0):
        """Convert a MultiPoly that only uses one variable."""
        coeffs = {}
        for (ex, ey), c in p.terms:
            if (var == 0 and ey != 0) or (var == 1 and ex != 0):
                raise ValueError("polynomial is not univariate in the chosen variable")
            coeffs[ex if var == 0 else ey] = c
        n = max(coeffs, default=-1)
        return cls([coeffs.get(k, 0.0) for k in range(n + 1)])


def poly_eval(p, point):
    """Evaluate a MultiPoly at a point (x, y)."""
    return p.eval(point[0], point[1])


def poly_diff(p, var):
    """Partial derivative of a MultiPoly with respect to variable 0 or 1."""
    return p.diff(var)


# ---------------------------------------------------------------------------
# Parsing
#
# Grammar: sum of terms, each term a '*'-separated product of factors, each
# factor a decimal number or a variable with an optional '^' integer power.

_NUM_CHARS = set("0123456789.")


def _tokenize(text, variables):
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "+-*^":
            tokens.append((ch, ch, i))
            i += 1
            continue
        if ch in _NUM_CHARS:
            j = i
            while j < n and text[j] in _NUM_CHARS:
                j += 1
            # exponent suffix like 1.5e-3
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    while k < n and text[k].isdigit():
                        k += 1
                    j = k
            try:
                value = float(text[i:j])
            except ValueError:
                raise PolyParseError(f"bad number {text[i:j]!r}", i + 1) from None
            tokens.append(("num", value, i))
            i = j
            continue
        if ch.isalpha():
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            name = text[i:j]
            if name not in variables:
                raise PolyParseError(f"unknown variable {name!r}", i + 1)
            tokens.append(("var", name, i))
            i = j
            continue
        raise PolyParseError(f"unexpected character {ch!r}", i + 1)
    return tokens


def parse_poly(text, variables=("x", "y")):
    """Parse text like '3*x^2*y - 1.5*y^3 + 2' into a MultiPoly.

    variables names the allowed symbols; the first maps to exponent slot x,
    the second (if any) to y.  Univariate parses put the variable in slot x.
    """
    if len(variables) not in (1, 2):
        raise ValueError("parser supports one or two variable names")
    tokens = _tokenize(text, set(variables))
    if not tokens:
        raise PolyParseError("empty polynomial", 1)
    var_slot = {name: idx for idx, name in enumerate(variables)}

    terms = []
    pos = 0

    def error(msg, tok=None):
        col = (tok[2] + 1) if tok is not None else len(text) + 1
        raise PolyParseError(msg, col)

    while pos < len(tokens):
        sign = 1.0
        # leading or separating signs, possibly repeated
        while pos < len(tokens) and tokens[pos][0] in "+-":
            if tokens[pos][0] == "-":
                sign = -sign
            pos += 1
        if pos >= len(tokens):
            error("dangling sign")
        coeff = sign
        exps = [0, 0]
        expect_factor = True
        while True:
            if pos >= len(tokens):
                if expect_factor:
                    error("dangling '*'")
                break
            kind, value, col = tokens[pos]
            if not expect_factor:
                if kind == "*":
                    expect_factor = True
                    pos += 1
                    continue
                if kind in "+-":
                    break
                error("expected '*' or end of term", tokens[pos])
            if kind == "num":
                coeff *= value
                pos += 1
            elif kind == "var":
                power = 1
                pos += 1
                if pos < len(tokens) and tokens[pos][0] == "^":
                    pos += 1
                    if pos >= len(tokens) or tokens[pos][0] != "num":
                        error("expected integer exponent after '^'",
                              tokens[pos] if pos < len(tokens) else None)
                    exp_val = tokens[pos][1]
                    if exp_val != int(exp_val) or exp_val < 0:
                        error("exponent must be a nonnegative integer", tokens[pos])
                    power = int(exp_val)
                    pos += 1
                exps[var_slot[value]] += power
            else:
                error("expected a number or variable", tokens[pos])
            expect_factor = False
        terms.append(((exps[0], exps[1]), coeff))
    return MultiPoly(terms)


def parse_plane_map(first_text, second_text, variables=("x", "y")):
    return PlaneMap(parse_poly(first_text, variables), parse_poly(second_text, variables))


def complex_poly_to_plane_map(p):
    """Real and imaginary parts of p(x + i*y) as a PlaneMap.

    Realizes a complex univariate polynomial as a polynomial map of the
    real plane under z = x + i*y.
    """
    re_acc = MultiPoly()
    im_acc = MultiPoly()
    # (x + i y)^k expanded by recurrence: (R + i I)(x + i y)
    rk, ik = MultiPoly.constant(1.0), MultiPoly()
    x, y = MultiPoly.variable(0), MultiPoly.variable(1)
    for c in p.coefficients:
        re_acc = re_acc + rk * c.real - ik * c.imag
        im_acc = im_acc + ik * c.real + rk * c.imag
        rk, ik = rk * x - ik * y, rk * y + ik * x
    return PlaneMap(re_acc, im_acc)


# ---------------------------------------------------------------------------
# Univariate complex roots: companion-matrix eigenvalues + Newton polish.


def univariate_complex_roots(p, tol=1e-10):
    """All complex roots of p with multiplicity, sorted by (real, imag).

    Eigenvalues of the companion matrix seed a short Newton polish; each
    returned root r satisfies |p(r)| <= tol * (1 + |r|)^deg * max|coeff|.
    """
    if p.degree < 1:
        raise ValueError("root solver needs degree >= 1")
    coeffs_desc = np.array(list(reversed(p.coefficients)), dtype=complex)
    roots = np.roots(coeffs_desc)
    dp = p.diff()
    for _ in range(12):
        pv = p.eval(roots)
        dv = dp.eval(roots)
        safe = np.abs(dv) > 1e-300
        step = np.zeros_like(roots)
        step[safe] = pv[safe] / dv[safe]
        moved = roots - step
        better = np.abs(p.eval(moved)) <= np.abs(pv)
        roots = np.where(better & safe, moved, roots)
    scale = p.max_abs_coeff()
    bound = tol * (1.0 + np.abs(roots)) ** p.degree * scale
    resid = np.abs(p.eval(roots))
    if np.any(resid > bound):
        worst = float(np.max(resid / np.maximum(bound, 1e-300)))
        raise ArithmeticError(
            f"root polishing failed residual bound (worst ratio {worst:.3g})"
        )
    order = np.lexsort((roots.imag, roots.real))
    return [complex(r) for r in roots[order]]


def row_polyval(coeff_rows, z):
    """Evaluate many polynomials at matching points: row k of coeff_rows
    (ascending order) at z[k].  z may also broadcast against extra root
    columns, as in row_polyval(C, roots) with roots shaped (m, d)."""
    C = np.asarray(coeff_rows)
    if C.ndim != 2 or C.shape[1] == 0:
        raise ValueError("coefficient rows must form a nonempty 2-D array")
    z = np.asarray(z)
    cols = (slice(None),) + (None,) * (z.ndim - 1)
    out = np.broadcast_to(C[:, -1][cols], z.shape).copy()
    for k in range(C.shape[1] - 2, -1, -1):
        out = out * z + C[:, k][cols]
    return out


def batched_complex_roots(coeff_rows, polish=12):
    """Roots of many same-degree polynomials, one ascending coefficient row
    each, via batched companion eigenvalues plus Newton polish.

    Every row's leading coefficient must be nonzero (callers group rows by
    effective degree).  Rows of roots come back lexicographically sorted by
    (real, imag); no residual bound is enforced here.
    """
    C = np.asarray(coeff_rows, dtype=complex)
    m, n = C.shape
    d = n - 1
    if d < 1:
        raise ValueError("need degree >= 1 rows")
    comp = np.zeros((m, d, d), complex)
    if d > 1:
        comp[:, 1:, :-1] = np.eye(d - 1)
    comp[:, :, -1] = -C[:, :-1] / C[:, -1:]
    roots = np.linalg.eigvals(comp)
    D = C[:, 1:] * np.arange(1, n)[None, :]
    for _ in range(polish):
        pv = row_polyval(C, roots)
        dv = row_polyval(D, roots)
        step = np.where(np.abs(dv) > 1e-300, pv / np.where(dv == 0, 1, dv), 0.0)
        moved = roots - step
        better = np.abs(row_polyval(C, moved)) <= np.abs(pv)
        roots = np.where(better, moved, roots)
    ordered = np.empty_like(roots)
    for row in range(m):
        order = np.lexsort((roots[row].imag, roots[row].real))
        ordered[row] = roots[row][order]
    return ordered


# ---------------------------------------------------------------------------
# Real solutions of bivariate systems: box subdivision with interval
# exclusion, leaf centers polished by damped Newton, merged and sorted.


def _interval_pow(lo, hi, k):
    """Elementwise interval power for arrays of box bounds."""
    if k == 0:
        return np.ones_like(lo), np.ones_like(lo)
    if k % 2 == 1:
        return lo**k, hi**k
    abs_lo, abs_hi = np.abs(lo), np.abs(hi)
    big = np.maximum(abs_lo, abs_hi) ** k
    small = np.minimum(abs_lo, abs_hi) ** k
    contains_zero = (lo <= 0.0) & (hi >= 0.0)
    return np.where(contains_zero, 0.0, small), big


def _interval_eval(p, xlo, xhi, ylo, yhi):
    """Interval enclosure of p over axis-aligned boxes (vectorized)."""
    lo = np.zeros_like(xlo)
    hi = np.zeros_like(xlo)
    for (ex, ey), c in p.terms:
        xl, xh = _interval_pow(xlo, xhi, ex)
        yl, yh = _interval_pow(ylo, yhi, ey)
        cands = (xl * yl, xl * yh, xh * yl, xh * yh)
        tlo = c * np.minimum.reduce(cands) if c >= 0 else c * np.maximum.reduce(cands)
        thi = c * np.maximum.reduce(cands) if c >= 0 else c * np.minimum.reduce(cands)
        lo = lo + tlo
        hi = hi + thi
    return lo, hi


def _newton_polish_batch(fmap, jac, x, y, tol, max_step, iters=60):
    """Damped Newton on a batch of seeds; returns polished points."""
    (fx, fy), (gx, gy) = jac
    for _ in range(iters):
        f1 = fmap.first.eval(x, y)
        f2 = fmap.second.eval(x, y)
        a = fx.eval(x, y)
        b = fy.eval(x, y)
        c = gx.eval(x, y)
        d = gy.eval(x, y)
        det = a * d - b * c
        bad = np.abs(det) < 1e-300
        det = np.where(bad, 1.0, det)
        sx = (d * f1 - b * f2) / det
        sy = (a * f2 - c * f1) / det
        norm = np.hypot(sx, sy)
        lim = np.where(norm > max_step, max_step / np.maximum(norm, 1e-300), 1.0)
        sx, sy = sx * lim, sy * lim
        x = np.where(bad, x, x - sx)
        y = np.where(bad, y, y - sy)
    return x, y


def system_real_roots(f, box, tol=1e-10, max_depth=60, return_unresolved=False):
    """All regular real solutions of f = 0 in a rectangle, sorted
    lexicographically.

    box is (xmin, xmax, ymin, ymax).  Recursive bisection with an interval
    exclusion test isolates candidate boxes; leaf centers are polished by
    damped Newton to residual <= tol; points closer than 10*tol are merged.
    Leaf boxes that survive exclusion but yield no converged point are
    collected as unresolved (returned when return_unresolved is set) rather
    than treated as fatal.
    """
    xmin, xmax, ymin, ymax = (float(v) for v in box)
    if not (xmax > xmin and ymax > ymin):
        raise ValueError("box must have positive width and height")
    diag0 = math.hypot(xmax - xmin, ymax - ymin)
    leaf_side = max(diag0 / 4096.0, 1e3 * tol)
    jac = f.jacobian()

    boxes = np.array([[xmin, xmax, ymin, ymax]])
    leaves = []
    unresolved = []
    for _ in range(max_depth):
        if boxes.shape[0] == 0:
            break
        xlo, xhi, ylo, yhi = boxes.T
        keep = np.ones(boxes.shape[0], dtype=bool)
        for comp in (f.first, f.second):
            lo, hi = _interval_eval(comp, xlo, xhi, ylo, yhi)
            keep &= (lo <= 0.0) & (hi >= 0.0)
        boxes = boxes[keep]
        if boxes.shape[0] == 0:
            break
        xlo, xhi, ylo, yhi = boxes.T
        small = np.maximum(xhi - xlo, yhi - ylo) <= leaf_side
        if np.any(small):
            leaves.append(boxes[small])
            boxes = boxes[~small]
        if boxes.shape[0] == 0:
            break
        xlo, xhi, ylo, yhi = boxes.T
        xmid = 0.5 * (xlo + xhi)
        ymid = 0.5 * (ylo + yhi)
        split_x = (xhi - xlo) >= (yhi - ylo)
        left = np.where(split_x[:, None],
                        np.column_stack([xlo, xmid, ylo, yhi]),
                        np.column_stack([xlo, xhi, ylo, ymid]))
        right = np.where(split_x[:, None],
                         np.column_stack([xmid, xhi, ylo, yhi]),
                         np.column_stack([xlo, xhi, ymid, yhi]))
        boxes = np.vstack([left, right])
    if boxes.shape[0]:
        # depth exhausted before reaching leaf size
        leaves.append(boxes)

    points = []
    if leaves:
        leaves = np.vstack(leaves)
        cx = 0.5 * (leaves[:, 0] + leaves[:, 1])
        cy = 0.5 * (leaves[:, 2] + leaves[:, 3])
        px, py = _newton_polish_batch(f, jac, cx, cy, tol, max_step=4.0 * leaf_side)
        r1 = np.abs(f.first.eval(px, py))
        r2 = np.abs(f.second.eval(px, py))
        side_x = leaves[:, 1] - leaves[:, 0]
        side_y = leaves[:, 3] - leaves[:, 2]
        inside_leaf = (
            (px >= leaves[:, 0] - 2.0 * side_x)
            & (px <= leaves[:, 1] + 2.0 * side_x)
            & (py >= leaves[:, 2] - 2.0 * side_y)
            & (py <= leaves[:, 3] + 2.0 * side_y)
        )
        margin = 100.0 * tol
        inside_box = (
            (px >= xmin - margin) & (px <= xmax + margin)
            & (py >= ymin - margin) & (py <= ymax + margin)
        )
        good = (np.maximum(r1, r2) <= tol) & inside_leaf & inside_box
        points = list(zip(px[good], py[good]))
        for row in leaves[~good]:
            unresolved.append(tuple(row))

    merged = _merge_points(points, 10.0 * tol)
    merged.sort()
    result = [(float(x), float(y)) for x, y in merged]
    if return_unresolved:
        return result, unresolved
    return result


def _merge_points(points, radius):
    """Greedy clustering of nearby points; keeps one representative each."""
    merged = []
    for x, y in sorted(points):
        for k, (mx, my) in enumerate(merged):
            if math.hypot(x - mx, y - my) <= radius:
                merged[k] = (0.5 * (x + mx), 0.5 * (y + my))
                break
        else:
            merged.append((x, y))
    return merged
