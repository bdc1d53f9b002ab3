import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from geoproj.errors import DimensionMismatch, InvalidDistribution, InvalidWeights, ZeroProbability
from geoproj.geometry import (
    Connection,
    affine_coordinates,
    as_basis,
    as_distribution,
    as_weights,
    canonical_divergence,
    divergence_eta_form,
    divergence_theta_form,
    e_mixture,
    fisher_e_pair,
    fisher_m_pair,
    from_e_coordinates,
    from_m_coordinates,
    hellinger_sq,
    kl_divergence,
    legendre_residual,
    log_ratio,
    m_mixture,
    pencil_fisher,
    pencil_point,
    potentials,
    to_e_coordinates,
    to_m_coordinates,
)


@st.composite
def distributions(draw, d=None, min_d=2, max_d=8):
    if d is None:
        d = draw(st.integers(min_d, max_d))
    raw = draw(arrays(np.float64, d, elements=st.floats(0.01, 1.0)))
    return raw / raw.sum()


@st.composite
def distribution_pairs(draw):
    d = draw(st.integers(2, 8))
    return draw(distributions(d=d)), draw(distributions(d=d))


class TestValidation:
    def test_accepts_valid(self):
        p = as_distribution([0.2, 0.3, 0.5])
        np.testing.assert_array_equal(p, [0.2, 0.3, 0.5])

    def test_rejects_zero_entry(self):
        with pytest.raises(ZeroProbability, match=r"p\[1\]"):
            as_distribution([1.0, 0.0])

    def test_rejects_bad_sum(self):
        with pytest.raises(InvalidDistribution, match="sum"):
            as_distribution([0.5, 0.4])

    @pytest.mark.parametrize("bad", [[1.0], [[0.5, 0.5]], [np.nan, 0.5], [np.inf, 0.5]])
    def test_rejects_malformed(self, bad):
        with pytest.raises(InvalidDistribution):
            as_distribution(bad)

    def test_basis_dimension_mismatch(self):
        with pytest.raises((DimensionMismatch, InvalidDistribution)):
            as_basis([[0.5, 0.5], [0.2, 0.3, 0.5]])

    def test_basis_needs_two_members(self):
        with pytest.raises(InvalidDistribution):
            as_basis([[0.5, 0.5]])

    def test_weights(self):
        np.testing.assert_array_equal(as_weights([0.25, 0.75], 2), [0.25, 0.75])
        with pytest.raises(InvalidWeights):
            as_weights([0.5, 0.6], 2)
        with pytest.raises((InvalidWeights, DimensionMismatch)):
            as_weights([0.5, 0.5], 3)


class TestCoordinates:
    def test_e_coordinates_examples(self):
        np.testing.assert_allclose(to_e_coordinates([0.5, 0.5]), [0.0])
        np.testing.assert_allclose(to_e_coordinates(np.full(3, 1 / 3)), [0.0, 0.0], atol=1e-15)
        np.testing.assert_allclose(to_e_coordinates([0.25, 0.75]), [math.log(1 / 3)])

    def test_m_coordinates_examples(self):
        np.testing.assert_allclose(to_m_coordinates([0.5, 0.5]), [0.5])
        np.testing.assert_allclose(to_m_coordinates([0.2, 0.3, 0.5]), [0.2, 0.3])

    @given(distributions())
    def test_round_trips(self, p):
        np.testing.assert_allclose(from_e_coordinates(to_e_coordinates(p)), p, rtol=1e-12)
        np.testing.assert_allclose(from_m_coordinates(to_m_coordinates(p)), p, rtol=1e-12, atol=1e-15)

    def test_affine_coordinates_swap(self):
        p = np.array([0.2, 0.3, 0.5])
        th_e, eta_e = affine_coordinates(p, Connection.E_AS_NABLA)
        th_m, eta_m = affine_coordinates(p, Connection.M_AS_NABLA)
        np.testing.assert_allclose(th_e, eta_m)
        np.testing.assert_allclose(eta_e, th_m)


class TestPotentials:
    def test_two_point_uniform(self):
        psi, phi = potentials([0.5, 0.5])
        assert psi == pytest.approx(math.log(2))
        assert phi == pytest.approx(-math.log(2))

    def test_uniform_d4(self):
        psi, phi = potentials(np.full(4, 0.25))
        assert psi == pytest.approx(math.log(4))
        assert phi == pytest.approx(-math.log(4))

    @given(distributions())
    def test_legendre_identity(self, p):
        for c in Connection:
            assert abs(legendre_residual(p, c)) < 1e-10


class TestDivergence:
    def test_kl_examples(self):
        assert kl_divergence([0.3, 0.7], [0.3, 0.7]) == 0.0
        assert kl_divergence([0.5, 0.5], [0.25, 0.75]) == pytest.approx(0.5 * math.log(4 / 3), rel=1e-12)
        assert kl_divergence([0.5, 0.5], [0.25, 0.75]) == pytest.approx(0.143841, abs=1e-6)

    @given(distribution_pairs())
    def test_gibbs(self, pair):
        assert kl_divergence(*pair) >= -1e-15

    @given(distribution_pairs())
    def test_forms_agree(self, pair):
        p, q = pair
        kl = kl_divergence(p, q)
        np.testing.assert_allclose(canonical_divergence(p, q, Connection.E_AS_NABLA), kl, atol=1e-12)
        np.testing.assert_allclose(canonical_divergence(p, q, Connection.M_AS_NABLA), kl_divergence(q, p), atol=1e-12)
        for c in Connection:
            ref = canonical_divergence(p, q, c)
            np.testing.assert_allclose(divergence_theta_form(p, q, c), ref, atol=1e-11)
            np.testing.assert_allclose(divergence_eta_form(p, q, c), ref, atol=1e-11)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            kl_divergence([0.5, 0.5], [0.2, 0.3, 0.5])


class TestHellingerAndRatios:
    def test_example(self):
        assert hellinger_sq((0.9, 0.1), (0.1, 0.9)) == pytest.approx(0.8, abs=1e-15)
        assert hellinger_sq((0.3, 0.7), (0.3, 0.7)) == 0.0

    @given(distribution_pairs())
    def test_bounded_by_two(self, pair):
        assert 0.0 <= hellinger_sq(*pair) <= 2.0

    def test_log_ratio(self):
        np.testing.assert_allclose(log_ratio([0.5, 0.5], [0.25, 0.75]), [math.log(2), math.log(2 / 3)])


class TestMixtures:
    def test_m_mixture_example(self):
        np.testing.assert_allclose(m_mixture([[0.9, 0.1], [0.1, 0.9]], [0.5, 0.5]), [0.5, 0.5])

    def test_e_mixture_example(self):
        expected = np.array([math.sqrt(0.125), math.sqrt(0.375)])
        expected /= expected.sum()
        got = e_mixture([[0.5, 0.5], [0.25, 0.75]], [0.5, 0.5])
        np.testing.assert_allclose(got, expected, rtol=1e-14)
        np.testing.assert_allclose(got, [0.3660, 0.6340], atol=1e-4)

    def test_vertex_weights_recover_member(self):
        B = np.array([[0.2, 0.3, 0.5], [0.6, 0.3, 0.1]])
        for mix in (m_mixture, e_mixture):
            np.testing.assert_allclose(mix(B, [1.0, 0.0]), B[0], rtol=1e-14)
            np.testing.assert_allclose(mix(B, [0.0, 1.0]), B[1], rtol=1e-14)

    def test_identical_members(self):
        p = np.array([0.1, 0.2, 0.7])
        np.testing.assert_allclose(e_mixture([p, p, p], [0.2, 0.5, 0.3]), p, rtol=1e-14)

    @given(distribution_pairs(), st.floats(0.0, 1.0))
    def test_mixtures_stay_on_simplex(self, pair, w):
        for mix in (m_mixture, e_mixture):
            out = mix(np.vstack(pair), [w, 1.0 - w])
            assert abs(out.sum() - 1.0) < 1e-12
            assert np.all(out > 0)

    def test_weight_length_checked(self):
        with pytest.raises(DimensionMismatch):
            m_mixture([[0.5, 0.5], [0.2, 0.8]], [1.0])


class TestFisher:
    def test_m_pair_example(self):
        assert fisher_m_pair((0.9, 0.1), (0.1, 0.9), 0.5) == pytest.approx(2.56, rel=1e-14)

    def test_e_pair_example(self):
        expected = 0.25 * 0.75 * math.log(3) ** 2
        assert fisher_e_pair((0.5, 0.5), (0.25, 0.75), 0.0) == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(0.22631, abs=1e-5)

    def test_identical_pair_is_zero(self):
        p = (0.2, 0.8)
        assert fisher_m_pair(p, p, 0.3) == 0.0
        assert fisher_e_pair(p, p, 0.3) == pytest.approx(0.0, abs=1e-30)

    def test_coordinate_outside_unit_interval(self):
        with pytest.raises(InvalidWeights):
            fisher_m_pair((0.9, 0.1), (0.1, 0.9), 1.5)

    @given(distribution_pairs(), st.floats(0.0, 1.0))
    def test_popoviciu_ceiling(self, pair, w):
        a = log_ratio(*pair)
        assert fisher_e_pair(*pair, w) <= (a.max() - a.min()) ** 2 / 4.0 * (1 + 1e-12) + 1e-300

    def test_pencil_dispatch(self):
        p1, p2 = (0.9, 0.1), (0.2, 0.8)
        assert pencil_fisher(p1, p2, 0.4, Connection.E_AS_NABLA) == fisher_m_pair(p1, p2, 0.4)
        assert pencil_fisher(p1, p2, 0.4, Connection.M_AS_NABLA) == fisher_e_pair(p1, p2, 0.4)
        np.testing.assert_allclose(pencil_point(p1, p2, 0.25, Connection.E_AS_NABLA), [0.375, 0.625])

    @settings(max_examples=30)
    @given(distribution_pairs(), st.floats(0.1, 0.9))
    def test_second_derivative_of_divergence(self, pair, w):
        # g(w) = d^2/dh^2 D(p(w+h) || p(w)) at h=0, checked by a symmetric difference
        p1, p2 = pair
        h = 1e-3
        for c, fisher in ((Connection.E_AS_NABLA, fisher_m_pair), (Connection.M_AS_NABLA, fisher_e_pair)):
            g = fisher(p1, p2, w)
            mid = pencil_point(p1, p2, w, c)
            fd = (kl_divergence(pencil_point(p1, p2, w + h, c), mid) + kl_divergence(pencil_point(p1, p2, w - h, c), mid)) / h**2
            assert fd == pytest.approx(g, rel=1e-3, abs=1e-9)
