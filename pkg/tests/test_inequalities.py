import json
import math

import numpy as np
import pytest

from qgreg.inequalities import (
    SUITES,
    TestCorpus,
    check_bernstein_l2,
    check_bernstein_lp_lq,
    check_interpolation,
    check_lower_bound,
    check_paraproduct,
    check_velocity_domination,
    dissipation_integral,
    paraproduct_terms,
)
from qgreg.littlewood_paley import shell_project
from qgreg.spectral import SpectralField, get_grid, lp_norm, to_spectral


def mode(grid, k1, k2, amp=1.0):
    c = np.zeros((grid.n, grid.n), dtype=complex)
    c[k1 % grid.n, k2 % grid.n] += 0.5 * amp
    c[-k1 % grid.n, -k2 % grid.n] += 0.5 * amp
    return SpectralField(grid, c)


def cos_lp(p, amp=1.0):
    """Exact L^p norm of amp * cos(m x1) on the 2-torus (any m != 0)."""
    mean_abs_p = math.gamma((p + 1) / 2) / (math.sqrt(math.pi) * math.gamma(p / 2 + 1))
    return amp * (4 * math.pi**2 * mean_abs_p) ** (1 / p)


@pytest.fixture(scope="module")
def corpus():
    return TestCorpus(seed=3, n=64, size=30)


@pytest.fixture(scope="module")
def dyadic_modes():
    grid = get_grid(128)
    return TestCorpus.from_fields([mode(grid, 2**j, 0) for j in range(0, 6)])


class TestCorpusConstruction:
    def test_deterministic(self):
        a, b = TestCorpus(seed=5, n=32, size=12), TestCorpus(seed=5, n=32, size=12)
        assert all(np.array_equal(f.coeffs, g.coeffs) for f, g in zip(a, b))

    def test_kinds_cycle(self, corpus):
        assert set(corpus.kinds) == set(TestCorpus.KINDS)
        assert len(corpus) == 30

    def test_band_limited(self, corpus):
        kmag = corpus.grid.kmag
        for f in corpus:
            assert not np.any(f.coeffs[kmag > corpus.decomp.resolved_kmax])
            assert f.coeffs[0, 0] == 0

    def test_from_fields_checks(self):
        with pytest.raises(ValueError):
            TestCorpus.from_fields([])
        with pytest.raises(ValueError):
            TestCorpus.from_fields([SpectralField.zeros(get_grid(32)), SpectralField.zeros(get_grid(64))])


class TestBernsteinL2:
    @pytest.mark.parametrize("alpha", [0.1, 0.3, 0.5, 1.0])
    def test_corpus(self, corpus, alpha):
        rep = check_bernstein_l2(corpus, alpha)
        assert rep.trials > len(corpus)
        assert rep.violations == 0

    def test_dyadic_mode_exact(self, dyadic_modes):
        # normalised ratio is ratio / 2^(2 alpha j), exactly one on |k| = 2^j
        rep = check_bernstein_l2(dyadic_modes, 0.3)
        assert rep.trials == 6
        assert rep.min_ratio == pytest.approx(1.0, abs=1e-14)
        assert rep.max_ratio == pytest.approx(1.0, abs=1e-14)

    def test_identity_operator(self, corpus):
        rep = check_bernstein_l2(corpus, 0.0)
        assert rep.min_ratio == pytest.approx(1.0, abs=1e-14) and rep.max_ratio == pytest.approx(1.0, abs=1e-14)

    def test_shell_two_noise(self):
        grid = get_grid(64)
        rng = np.random.default_rng(0)
        c = TestCorpus.from_fields([SpectralField.zeros(grid)]).decomp.filter(2) * (
            rng.standard_normal((64, 64)) + 1j * rng.standard_normal((64, 64))
        )
        from qgreg.spectral import hermitian_part

        g = TestCorpus.from_fields([SpectralField(grid, hermitian_part(c))])
        rep = check_bernstein_l2(g, 0.3)
        # the filters overlap, so shells 1, 2 and 3 all see the field
        assert rep.trials == 3 and rep.violations == 0
        # shell 2 on its own: 2^0.6 <= ratio <= 2^1.8
        g2 = TestCorpus.from_fields([shell_project(g.decomp, g.fields[0], 2)])
        rep2 = check_bernstein_l2(g2, 0.3)
        assert rep2.violations == 0


class TestBernsteinLpLq:
    def test_collapses_to_l2(self, corpus):
        a = check_bernstein_lp_lq(corpus, 2, 2, 0.3)
        b = check_bernstein_l2(corpus, 0.3)
        assert a.trials == b.trials
        assert a.max_ratio == pytest.approx(b.max_ratio, rel=1e-12)
        assert a.min_ratio == pytest.approx(b.min_ratio, rel=1e-12)

    def test_dyadic_mode_scaling(self, dyadic_modes):
        # ||f||_inf / ||f||_2 is the same for every dyadic mode; the
        # normalised ratio therefore decays like 2^-j
        rep = check_bernstein_lp_lq(dyadic_modes, 2, np.inf, 0.0)
        per_shell = rep.extras["per_shell_max"]
        for j, v in per_shell.items():
            assert v * 2 ** int(j) == pytest.approx(1 / (math.pi * math.sqrt(2)), rel=1e-12)

    def test_zero_skipped(self):
        z = TestCorpus.from_fields([SpectralField.zeros(get_grid(32))])
        assert check_bernstein_lp_lq(z, 2, np.inf, 0.3).trials == 0

    def test_order(self, corpus):
        with pytest.raises(ValueError):
            check_bernstein_lp_lq(corpus, 4, 2, 0.3)


class TestLowerBound:
    def test_p2_exact_bounds(self, corpus):
        rep = check_lower_bound(corpus, 2, 0.3)
        assert rep.violations == 0
        assert 2**-0.6 <= rep.min_ratio and rep.max_ratio <= 2**0.6

    def test_p4_dyadic_modes(self, dyadic_modes):
        # Lambda^(2 alpha) acts as 2^(2 alpha j) on the mode, so the ratio is one
        rep = check_lower_bound(dyadic_modes, 4, 0.3)
        assert rep.violations == 0
        assert rep.min_ratio == pytest.approx(1.0, rel=1e-12)
        assert rep.extras["spread"] <= 2

    def test_identity_operator(self, corpus):
        rep = check_lower_bound(corpus, 4, 0.0)
        assert rep.min_ratio == pytest.approx(1.0, rel=1e-10) and rep.max_ratio == pytest.approx(1.0, rel=1e-10)

    def test_p4_positive(self, corpus):
        rep = check_lower_bound(corpus, 4, 0.3)
        assert rep.violations == 0 and rep.min_ratio > 0
        assert rep.extras["spread"] <= 4

    def test_integral_quadrature(self):
        grid = get_grid(64)
        g = mode(grid, 4, 0, 2.0)
        assert dissipation_integral(g, 4, 0.5) == pytest.approx(4 * cos_lp(4, 2.0) ** 4, rel=1e-12)

    def test_invalid(self, corpus):
        with pytest.raises(ValueError):
            check_lower_bound(corpus, 4, 1.5)


class TestInterpolation:
    @pytest.mark.parametrize("delta", [0.3, 0.6])
    @pytest.mark.parametrize("p", [2, 4, 10, 50])
    def test_corpus(self, corpus, delta, p):
        rep = check_interpolation(corpus, delta, p)
        assert rep.trials == len(corpus) and rep.violations == 0

    # grid quadrature of |cos(2^j x)|^p is exact only while p 2^j < n
    @pytest.mark.parametrize("j,p", [(2, 4), (3, 10), (1, 50), (4, 6)])
    def test_single_mode_closed_form(self, j, p):
        grid, delta, amp = get_grid(128), 0.6, 1.7
        c = TestCorpus.from_fields([mode(grid, 2**j, 0, amp)])
        rep = check_interpolation(c, delta, p)
        theta = 1 - 2 / p
        lhs = 2 ** (j * delta * theta) * cos_lp(p, amp)
        rhs = (amp + 2 ** (j * delta) * amp) ** theta * cos_lp(2, amp) ** (2 / p)
        assert rep.max_ratio == pytest.approx(lhs / rhs, rel=1e-10)
        assert rep.violations == 0

    def test_p2_is_shell_orthogonality(self, corpus):
        from qgreg.littlewood_paley import besov_norm

        for f in corpus:
            assert besov_norm(corpus.decomp, f, (0, 2, np.inf)) <= lp_norm(f, 2) * (1 + 1e-12)

    def test_zero(self):
        rep = check_interpolation(TestCorpus.from_fields([SpectralField.zeros(get_grid(32))]), 0.3, 4)
        assert rep.trials == 1 and rep.violations == 0 and rep.max_ratio == 0


class TestParaproduct:
    @pytest.fixture
    def grid(self):
        return get_grid(256)

    def test_two_mode_field(self, grid):
        x1, x2 = grid.coords
        c = TestCorpus.from_fields([to_spectral(np.cos(2 * x1) + np.cos(16 * x2), grid)])
        rep = check_paraproduct(c)
        assert rep.params["j"] == [2, 3, 4]
        assert rep.violations == 0 and rep.max_ratio < 1e-10

    def test_far_shell_vanishes(self, grid):
        theta = mode(grid, 64, 0) + mode(grid, 0, 50)
        t = paraproduct_terms(theta, TestCorpus.from_fields([theta]).decomp, 2)
        for part in (t.lhs, t.low_high, t.high_low, t.high_high):
            assert np.abs(part).max() < 1e-12 * t.scale

    def test_zero(self, grid):
        z = SpectralField.zeros(grid)
        t = paraproduct_terms(z, TestCorpus.from_fields([z]).decomp, 3)
        assert t.discrepancy == 0.0

    def test_complete_ranges_exact(self):
        c = TestCorpus(seed=11, n=128, size=12)
        rep = check_paraproduct(c, index_ranges="complete")
        assert rep.violations == 0 and rep.max_ratio < 1e-12

    def test_restricted_ranges_miss_low_shells(self):
        # low-high products from adjacent annuli reach shells below j - 2
        c = TestCorpus(seed=11, n=128, size=12)
        rep = check_paraproduct(c)
        assert rep.extras["support_leakage"] > 1e-10

    def test_inadmissible_shell(self):
        c = TestCorpus(seed=0, n=64, size=2)
        with pytest.raises(ValueError, match="admissible"):
            check_paraproduct(c, j=0)
        with pytest.raises(ValueError):
            paraproduct_terms(c.fields[0], c.decomp, 2, index_ranges="bogus")


class TestVelocityDomination:
    def test_unit_mode(self):
        grid = get_grid(64)
        x1, _ = grid.coords
        c = TestCorpus.from_fields([to_spectral(np.sin(x1), grid)])
        rep = check_velocity_domination(c, 0.5, np.inf)
        assert rep.max_ratio == pytest.approx(1.0, rel=1e-12)

    def test_p2_shellwise(self, corpus):
        rep = check_velocity_domination(corpus, 0.5, 2)
        assert rep.violations == 0 and rep.max_ratio <= 1 + 1e-12
        assert "holder_max_ratio" in rep.extras

    def test_zero_skipped(self):
        c = TestCorpus.from_fields([SpectralField.zeros(get_grid(32))])
        assert check_velocity_domination(c, 0.5, 2).trials == 0


class TestReports:
    def test_suites_registry(self):
        assert set(SUITES) == {
            "bernstein_l2",
            "bernstein_lp_lq",
            "lower_bound",
            "interpolation",
            "paraproduct",
            "velocity_domination",
        }

    def test_json(self, corpus):
        d = json.loads(check_bernstein_l2(corpus, 0.3).to_json())
        assert {"name", "trials", "min_ratio", "max_ratio", "violations", "seed", "n", "params"} <= set(d)
        assert d["seed"] == 3 and d["n"] == 64
