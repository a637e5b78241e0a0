"""Tests for forward-orbit classification, basin rendering, and parameter
scans."""

import numpy as np
import pytest

from newtondyn.grid import (
    CODE_CYCLE,
    CODE_ESCAPED,
    CODE_SINGULAR,
    CODE_UNDECIDED,
    Window,
)
from newtondyn.newton import (
    ComplexRationalMap,
    build_newton_complex,
    build_newton_plane,
)
from newtondyn.poly import (
    UniComplexPoly,
    parse_plane_map,
    parse_poly,
    system_real_roots,
    univariate_complex_roots,
)
from newtondyn.forward import (
    OrbitOutcome,
    ScanConfig,
    classify_orbit,
    parameter_scan,
    render_basins,
)

CUBIC = UniComplexPoly([-1, 0, 0, 1])  # z^3 - 1
ISLAND = UniComplexPoly([2, -2, 0, 1])  # z^3 - 2z + 2, superattracting 2-cycle


def cubic_setup():
    N = build_newton_complex(CUBIC)
    return N, univariate_complex_roots(CUBIC, tol=1e-10)


class TestScanConfig:
    def test_defaults(self):
        cfg = ScanConfig()
        assert cfg.root_tol == 1e-8
        assert cfg.escape_radius == 1e8
        assert cfg.max_iter == 200
        assert cfg.cycle_window == 64
        assert cfg.cycle_tol == 1e-9
        assert cfg.multiplier_step == 1e-6

    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            ScanConfig(root_tol=0.0)
        with pytest.raises(ValueError):
            ScanConfig(cycle_window=300, max_iter=200)
        with pytest.raises(ValueError):
            ScanConfig(max_iter=0)


class TestClassifyOrbit:
    def test_real_seed_reaches_unit_root(self):
        N, roots = cubic_setup()
        out = classify_orbit(N, 2.0, roots)
        assert out.kind == "root"
        assert roots[out.root_index] == pytest.approx(1.0)
        assert out.iterations >= 1

    def test_seed_at_root_takes_no_steps(self):
        N, roots = cubic_setup()
        out = classify_orbit(N, 1.0, roots)
        assert out.kind == "root"
        assert out.iterations == 0

    def test_singular_seed(self):
        N, roots = cubic_setup()
        out = classify_orbit(N, 0.0, roots)
        assert out.kind == "singular"
        assert out.iterations == 0

    def test_superattracting_two_cycle(self):
        N = build_newton_complex(ISLAND)
        roots = univariate_complex_roots(ISLAND, tol=1e-10)
        out = classify_orbit(N, 0.0, roots)
        assert out.kind == "cycle"
        assert out.period == 2
        assert out.multiplier < 1e-6
        assert min(abs(out.representative), abs(out.representative - 1)) < 1e-8

    def test_escape_of_squaring_map(self):
        squaring = ComplexRationalMap(
            UniComplexPoly([0, 0, 1]), UniComplexPoly([1])
        )
        out = classify_orbit(squaring, 2.0, [])
        assert out.kind == "escaped"
        # 2^(2^k) first exceeds 1e8 at k = 5
        assert out.iterations == 5

    def test_linear_plane_map_one_step(self):
        N = build_newton_plane(parse_plane_map("x", "y"))
        out = classify_orbit(N, (3.7, -2.2), [(0.0, 0.0)])
        assert out.kind == "root"
        assert out.root_index == 0
        assert out.iterations == 1

    def test_planar_singular_hit(self):
        N = build_newton_plane(parse_plane_map("x^3 - x", "y^3 - y"))
        out = classify_orbit(N, (1.0 / np.sqrt(3.0), 0.5), [])
        assert out.kind == "singular"

    def test_decoupled_outcome_matches_univariate_pair(self):
        f = parse_plane_map("x^3 - x", "y^3 - y")
        Np = build_newton_plane(f)
        proots = system_real_roots(f, (-2, 2, -2, 2), tol=1e-10)
        assert len(proots) == 9
        u = UniComplexPoly([0, -1, 0, 1])
        Nu = build_newton_complex(u)
        uroots = univariate_complex_roots(u, tol=1e-10)
        for x0 in (-1.7, -0.8, 0.9, 1.6):
            for y0 in (-1.5, 0.2, 1.8):
                planar = classify_orbit(Np, (x0, y0), proots)
                ux = classify_orbit(Nu, x0, uroots)
                uy = classify_orbit(Nu, y0, uroots)
                if ux.kind == "root" and uy.kind == "root":
                    assert planar.kind == "root"
                    assert planar.root_index == 3 * ux.root_index + uy.root_index

    def test_root_outcomes_stable_under_budget_doubling(self):
        N, roots = cubic_setup()
        rng = np.random.default_rng(5)
        seeds = rng.uniform(-2, 2, size=(60, 2))
        short = ScanConfig(max_iter=200)
        long = ScanConfig(max_iter=400)
        for sx, sy in seeds:
            a = classify_orbit(N, complex(sx, sy), roots, short)
            b = classify_orbit(N, complex(sx, sy), roots, long)
            if a.kind == "root":
                assert b.kind == "root"
                assert b.root_index == a.root_index


class TestRenderBasins:
    def test_cubic_fractions_match_dense_oracle(self):
        # oracle values from an independent fixed-budget dense-grid run:
        # conjugate basins tie at 0.3236, the basin of the real root takes
        # 0.3528 (the square window has two of its corners in that basin)
        N, roots = cubic_setup()
        ras = render_basins(N, roots, (-2, 2, -2, 2), 300, 300)
        fr = ras.fractions()
        assert fr[0] == pytest.approx(0.3236, abs=0.005)
        assert fr[1] == pytest.approx(0.3236, abs=0.005)
        assert fr[2] == pytest.approx(0.3528, abs=0.005)
        assert fr[0] == pytest.approx(fr[1], abs=1e-3)
        undecided_cycle = ras.fraction_of(CODE_UNDECIDED) + ras.fraction_of(CODE_CYCLE)
        assert undecided_cycle < 0.001

    def test_island_map_has_cycle_pixels(self):
        N = build_newton_complex(ISLAND)
        roots = univariate_complex_roots(ISLAND, tol=1e-10)
        ras = render_basins(N, roots, (-1.5, 1.5, -1.5, 1.5), 300, 300)
        assert ras.fraction_of(CODE_CYCLE) > 0.01

    def test_single_pixel_raster(self):
        N, roots = cubic_setup()
        ras = render_basins(N, roots, (1.9, 2.1, -0.1, 0.1), 1, 1)
        assert ras.codes.shape == (1, 1)
        assert roots[ras.codes[0, 0]] == pytest.approx(1.0)
        assert set(ras.legend) >= {0, 1, 2, CODE_CYCLE, CODE_ESCAPED,
                                   CODE_SINGULAR, CODE_UNDECIDED}

    def test_no_escape_for_conjugate_pair_form(self):
        f = parse_plane_map("x^2 - y^2 - 1", "2*x*y")
        N = build_newton_plane(f)
        roots = system_real_roots(f, (-2, 2, -2, 2), tol=1e-10)
        assert sorted(roots) == [pytest.approx((-1.0, 0.0)), pytest.approx((1.0, 0.0))]
        ras = render_basins(N, roots, (-2, 2, -2, 2), 60, 60)
        assert ras.fraction_of(CODE_ESCAPED) == 0.0

    def test_fractions_sum_to_one(self):
        N, roots = cubic_setup()
        ras = render_basins(N, roots, (-2, 2, -2, 2), 40, 40)
        assert sum(ras.fractions().values()) == pytest.approx(1.0)


class TestParameterScan:
    FAMILY = parse_poly("z^3 + A*z - z - A", variables=("z", "A"))

    def test_singular_seed_at_degenerate_derivative(self):
        # the single pixel center is exactly A = 1, where the member's
        # derivative vanishes at the seed
        ras = parameter_scan(self.FAMILY, 0.0, (0.5, 1.5, -0.5, 0.5), 1, 1)
        assert ras.codes[0, 0] == CODE_SINGULAR

    def test_unit_seed_is_root_of_every_member(self):
        ras = parameter_scan(self.FAMILY, 1.0, (-2.3, 1.7, -2, 2), 16, 16)
        assert np.all(ras.codes >= 0)

    def test_scan_window_contains_cycle_parameters(self):
        ras = parameter_scan(self.FAMILY, 0.0, (-2.3, 1.7, -2, 2), 100, 100)
        assert np.count_nonzero(ras.codes == CODE_CYCLE) >= 1

    def test_constant_family(self):
        ras = parameter_scan(lambda a: CUBIC, 2.0, (-1, 1, -1, 1), 4, 4)
        assert np.all(ras.codes == ras.codes[0, 0])
        assert ras.codes[0, 0] >= 0

    def test_degenerate_member_marked_undecided(self):
        family = lambda a: UniComplexPoly([1.0, 0.0, a])  # a z^2 + 1
        ras = parameter_scan(family, 0.5, (-0.5, 0.5, -0.5, 0.5), 1, 1)
        assert ras.codes[0, 0] == CODE_UNDECIDED

    def test_callable_and_symbolic_family_agree(self):
        def family(a):
            return UniComplexPoly([-a, a - 1.0, 0.0, 1.0])

        r1 = parameter_scan(family, 0.0, (-2.3, 1.7, -2, 2), 12, 12)
        r2 = parameter_scan(self.FAMILY, 0.0, (-2.3, 1.7, -2, 2), 12, 12)
        assert np.array_equal(r1.codes, r2.codes)
        assert np.array_equal(r1.iterations, r2.iterations)

    def test_reported_cycles_reverify(self):
        ras = parameter_scan(self.FAMILY, 0.0, (-2.3, 1.7, -2, 2), 100, 100)
        X, Y = Window.from_sequence((-2.3, 1.7, -2, 2)).pixel_centers(100, 100)
        rows, cols = np.nonzero(ras.codes == CODE_CYCLE)
        assert rows.size >= 1
        for i, j in zip(rows[:5], cols[:5]):
            a = complex(X[i, j], Y[i, j])
            p = UniComplexPoly([-a, a - 1.0, 0.0, 1.0])
            N = build_newton_complex(p)
            roots = univariate_complex_roots(p, tol=1e-10)
            out = classify_orbit(N, 0.0, roots)
            assert out.kind == "cycle"
            assert out.multiplier < 1.0
