import math

import pytest

from tasil.special import (chi2_cdf, chi2_sf, normal_sf, normal_two_sided_p,
                           regularized_beta, regularized_gamma_p,
                           regularized_gamma_q, student_t_cdf, student_t_sf,
                           student_t_two_sided_p)

# Reference values computed once with mpmath at 50 decimal digits and frozen.
_CHI2_DF1_CDF = [
    (0.001, 0.02522712063003961145774),
    (0.01, 0.07965567455405796293081),
    (0.05, 0.1769367262418785238874),
    (0.1, 0.2481703659541507175114),
    (0.2, 0.3452791539814229705968),
    (0.5, 0.5204998778130465376827),
    (0.8, 0.6289066304773024262099),
    (1.0, 0.6826894921370858971705),
    (1.5, 0.7793286380801532073956),
    (2.0, 0.8427007929497148693412),
    (2.706, 0.9000286218747406839702),
    (3.0, 0.9167354833364495981451),
    (3.841, 0.9499863162360432952018),
    (5.0, 0.9746526813225317360684),
    (6.635, 0.9900005804259574762269),
    (7.879, 0.9949987872725093166881),
    (10.0, 0.9984345977419974503225),
    (15.0, 0.9998924888232704994366),
    (25.0, 0.9999994266968562416122),
    (40.0, 0.9999999997460371410529),
]

_STUDENT_T_CDF = [
    (0.1, 1, 0.531725517430553569515),
    (0.5, 1, 0.6475836176504332741754),
    (1.0, 1, 0.75),
    (2.0, 1, 0.8524163823495667258246),
    (-1.5, 1, 0.1871670418109988161863),
    (0.5, 2, 0.6666666666666666666667),
    (1.0, 2, 0.7886751345948128822546),
    (-2.5, 2, 0.06480586011075540455677),
    (0.25, 5, 0.5937329346279383234904),
    (1.476, 5, 0.9000148742535530061148),
    (2.015, 5, 0.9499969138365968243749),
    (-3.365, 5, 0.009999236252870859646645),
    (0.7, 8, 0.7481144739907276296364),
    (1.86, 8, 0.9500346945445209836748),
    (1.372, 10, 0.8999723293002852204698),
    (-2.228, 10, 0.02500588590855569126598),
    (0.5, 30, 0.6896384975574363570198),
    (2.042, 30, 0.9749856646719010591507),
    (1.984, 100, 0.9750016131019163232584),
    (-0.677, 100, 0.2499845347905107085752),
]


class TestChiSquare:
    @pytest.mark.parametrize("x,expected", _CHI2_DF1_CDF)
    def test_df1_cdf_matches_reference_to_1e10(self, x, expected):
        assert chi2_cdf(x, 1.0) == pytest.approx(expected, abs=1e-10)
        assert chi2_sf(x, 1.0) == pytest.approx(1.0 - expected, abs=1e-10)

    def test_boundaries(self):
        assert chi2_sf(0.0, 1.0) == 1.0
        assert chi2_cdf(0.0, 1.0) == 0.0
        assert chi2_sf(-3.0, 1.0) == 1.0

    def test_df1_closed_form_erf(self):
        # chi-square(1) CDF is erf(sqrt(x/2))
        for x in (0.3, 1.7, 4.2, 9.0):
            assert chi2_cdf(x, 1.0) == pytest.approx(math.erf(math.sqrt(x / 2.0)), abs=1e-13)

    def test_invalid_df(self):
        with pytest.raises(ValueError):
            chi2_sf(1.0, 0.0)


class TestIncompleteGamma:
    def test_p_plus_q_is_one(self):
        for a in (0.5, 1.0, 3.7, 12.0):
            for x in (0.01, 0.5, 1.0, a, 2 * a, 10 * a):
                p = regularized_gamma_p(a, x)
                q = regularized_gamma_q(a, x)
                assert p + q == pytest.approx(1.0, abs=1e-12)

    def test_monotone_in_x(self):
        values = [regularized_gamma_p(2.5, x) for x in [0.1 * i for i in range(1, 60)]]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            regularized_gamma_p(-1.0, 1.0)
        with pytest.raises(ValueError):
            regularized_gamma_p(1.0, -1.0)


class TestStudentT:
    @pytest.mark.parametrize("t,df,expected", _STUDENT_T_CDF)
    def test_cdf_matches_reference_to_1e10(self, t, df, expected):
        assert student_t_cdf(t, df) == pytest.approx(expected, abs=1e-10)

    def test_symmetry(self):
        for t in (0.3, 1.2, 2.6):
            for df in (1, 4, 25):
                assert student_t_sf(t, df) == pytest.approx(1.0 - student_t_sf(-t, df), abs=1e-13)

    def test_df1_matches_cauchy_closed_form(self):
        for t in (-2.0, -0.5, 0.7, 3.1):
            assert student_t_cdf(t, 1) == pytest.approx(0.5 + math.atan(t) / math.pi, abs=1e-13)

    def test_two_sided_p(self):
        assert student_t_two_sided_p(0.0, 5) == 1.0
        for t in (0.8, 2.2):
            assert student_t_two_sided_p(t, 7) == pytest.approx(2.0 * student_t_sf(t, 7), abs=1e-13)
            assert student_t_two_sided_p(-t, 7) == student_t_two_sided_p(t, 7)


class TestIncompleteBeta:
    def test_boundaries(self):
        assert regularized_beta(2.0, 3.0, 0.0) == 0.0
        assert regularized_beta(2.0, 3.0, 1.0) == 1.0

    def test_symmetry_identity(self):
        for a, b in ((0.5, 0.5), (2.0, 5.0), (7.3, 1.1)):
            for x in (0.1, 0.37, 0.5, 0.82):
                lhs = regularized_beta(a, b, x)
                rhs = 1.0 - regularized_beta(b, a, 1.0 - x)
                assert lhs == pytest.approx(rhs, abs=1e-13)

    def test_uniform_special_case(self):
        # I_x(1, 1) = x
        for x in (0.0, 0.25, 0.5, 0.99):
            assert regularized_beta(1.0, 1.0, x) == pytest.approx(x, abs=1e-14)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            regularized_beta(0.0, 1.0, 0.5)
        with pytest.raises(ValueError):
            regularized_beta(1.0, 1.0, 1.5)


class TestNormal:
    def test_midpoint(self):
        assert normal_sf(0.0) == 0.5

    def test_known_z(self):
        assert normal_sf(1.959964) == pytest.approx(0.025, abs=1e-7)
        assert normal_two_sided_p(1.959964) == pytest.approx(0.05, abs=1e-7)

    def test_symmetry(self):
        for z in (0.5, 1.3, 2.8):
            assert normal_sf(z) + normal_sf(-z) == pytest.approx(1.0, abs=1e-14)
