import math

import numpy as np
import pytest
from scipy.special import gamma

from boltzgal.specfun import (QuadratureRule, barycentric_weights,
                              eval_assoc_laguerre_all, eval_hermite_all,
                              eval_lagrange_all, eval_real_sph_harm,
                              gauss_hermite, gauss_laguerre, gauss_legendre,
                              norm_assoc_legendre_all, sph_harm_index)


class TestGaussHermite:
    def test_one_point(self):
        r = gauss_hermite(1)
        assert r.nodes == pytest.approx([0.0])
        assert r.weights == pytest.approx([math.sqrt(math.pi)])

    def test_two_point(self):
        r = gauss_hermite(2)
        assert r.nodes == pytest.approx([-0.7071068, 0.7071068], abs=1e-7)
        assert r.weights == pytest.approx([0.8862269, 0.8862269], abs=1e-7)
        assert r.integrate(r.nodes ** 2) == pytest.approx(math.sqrt(math.pi) / 2)

    def test_moment_v8(self):
        # int e^{-v^2} v^8 dv = Gamma(4.5); 5-point rule is exact to degree 9
        r = gauss_hermite(5)
        assert r.integrate(r.nodes ** 8) == pytest.approx(gamma(4.5), rel=1e-13)

    @pytest.mark.parametrize("n", [1, 2, 5, 16, 33, 65])
    def test_total_mass_and_symmetry(self, n):
        r = gauss_hermite(n)
        assert r.weights.sum() == pytest.approx(math.sqrt(math.pi), rel=1e-13)
        assert np.all(r.weights > 0)
        assert np.all(np.diff(r.nodes) > 0)
        np.testing.assert_allclose(r.nodes, -r.nodes[::-1], atol=1e-14)
        np.testing.assert_allclose(r.weights, r.weights[::-1], rtol=1e-14)

    def test_invalid(self):
        with pytest.raises(ValueError):
            gauss_hermite(0)


class TestGaussLaguerre:
    def test_one_point_alpha0(self):
        r = gauss_laguerre(1, 0.0)
        assert r.nodes == pytest.approx([1.0])
        assert r.weights == pytest.approx([1.0])

    def test_one_point_alpha_half(self):
        r = gauss_laguerre(1, 0.5)
        assert r.nodes == pytest.approx([1.5])
        assert r.weights == pytest.approx([gamma(1.5)], rel=1e-14)

    def test_gamma_moment(self):
        # int e^{-x} x^{2.5} x^3 dx = Gamma(6.5); 3-point rule exact to deg 5
        r = gauss_laguerre(3, 2.5)
        assert r.integrate(r.nodes ** 3) == pytest.approx(gamma(6.5), rel=1e-13)

    @pytest.mark.parametrize("n,alpha", [(1, 0.0), (4, 0.5), (9, 2.5),
                                         (20, 16.5), (33, 0.69)])
    def test_total_mass(self, n, alpha):
        r = gauss_laguerre(n, alpha)
        assert r.weights.sum() == pytest.approx(gamma(alpha + 1), rel=1e-13)
        assert np.all(r.weights > 0)
        assert np.all(np.diff(r.nodes) > 0)

    def test_invalid_alpha(self):
        with pytest.raises(ValueError):
            gauss_laguerre(3, -1.0)


class TestGaussLegendre:
    def test_one_point(self):
        r = gauss_legendre(1)
        assert r.nodes == pytest.approx([0.0])
        assert r.weights == pytest.approx([2.0])

    def test_two_point(self):
        r = gauss_legendre(2)
        assert r.nodes == pytest.approx([-0.5773503, 0.5773503], abs=1e-7)
        assert r.weights == pytest.approx([1.0, 1.0])
        assert r.integrate(r.nodes ** 2) == pytest.approx(2.0 / 3.0)

    def test_legendre_normalization(self):
        # int P_3^2 dmu = 2/7
        r = gauss_legendre(8)
        p3 = 0.5 * (5 * r.nodes ** 3 - 3 * r.nodes)
        assert r.integrate(p3 * p3) == pytest.approx(2.0 / 7.0, rel=1e-13)

    def test_total_mass(self):
        assert gauss_legendre(13).weights.sum() == pytest.approx(2.0, rel=1e-14)


class TestHermitePolynomials:
    def test_h0(self):
        assert eval_hermite_all(0, 0.33)[0] == pytest.approx(math.pi ** -0.25)

    def test_h1_at_1(self):
        vals = eval_hermite_all(1, 1.0)
        assert vals[1] == pytest.approx(math.sqrt(2) * math.pi ** -0.25)

    def test_h2_at_0(self):
        vals = eval_hermite_all(2, 0.0)
        assert vals[2] == pytest.approx(-math.pi ** -0.25 / math.sqrt(2))

    @pytest.mark.parametrize("N", [1, 5, 12, 40])
    def test_gram_identity(self, N):
        r = gauss_hermite(N + 4)
        h = eval_hermite_all(N, r.nodes)
        gram = (h * r.weights[None, :]) @ h.T
        np.testing.assert_allclose(gram, np.eye(N + 1), atol=1e-12)


class TestLaguerrePolynomials:
    def test_constant(self):
        assert eval_assoc_laguerre_all(0, 0.0, 0.7)[0] == pytest.approx(1.0)

    def test_degree1_at_0(self):
        assert eval_assoc_laguerre_all(1, 0.0, 0.0)[1] == pytest.approx(1.0)

    def test_alpha_half_constant(self):
        val = eval_assoc_laguerre_all(0, 0.5, 2.2)[0]
        assert val == pytest.approx(gamma(1.5) ** -0.5)

    def test_negative_argument(self):
        with pytest.raises(ValueError):
            eval_assoc_laguerre_all(2, 0.0, -0.1)

    @pytest.mark.parametrize("K,alpha", [(4, 0.0), (8, 0.5), (12, 6.5)])
    def test_gram_identity(self, K, alpha):
        r = gauss_laguerre(K + 4, alpha)
        lag = eval_assoc_laguerre_all(K, alpha, r.nodes)
        gram = (lag * r.weights[None, :]) @ lag.T
        np.testing.assert_allclose(gram, np.eye(K + 1), atol=1e-12)


class TestSphericalHarmonics:
    def test_y00(self):
        val = eval_real_sph_harm(0, 0.3, 1.2)
        assert val[0] == pytest.approx(1.0 / math.sqrt(4 * math.pi))

    def test_y10_at_pole(self):
        val = eval_real_sph_harm(1, 0.0, 0.0)
        assert val[1] == pytest.approx(math.sqrt(3 / (4 * math.pi)))

    def test_theta_domain(self):
        with pytest.raises(ValueError):
            eval_real_sph_harm(1, -0.2, 0.0)

    @pytest.mark.parametrize("L", [0, 1, 3, 6])
    def test_orthonormal_on_sphere(self, L):
        # product rule: Gauss-Legendre in cos(theta) x trapezoid in phi
        nth = 2 * L + 4
        gl = gauss_legendre(nth)
        nphi = 4 * L + 8
        phi = 2 * math.pi * np.arange(nphi) / nphi
        th = np.arccos(gl.nodes)
        TH, PH = np.meshgrid(th, phi, indexing="ij")
        Y = eval_real_sph_harm(L, TH.ravel(), PH.ravel())
        w = np.repeat(gl.weights, nphi) * (2 * math.pi / nphi)
        gram = (Y * w[None, :]) @ Y.T
        np.testing.assert_allclose(gram, np.eye((L + 1) ** 2), atol=1e-12)

    def test_index_layout(self):
        idx = sph_harm_index(2)
        assert len(idx) == 9
        assert idx[0] == (0, 0, "cos")
        assert idx[2] == (1, 1, "cos")
        assert idx[3] == (1, 1, "sin")


class TestLagrange:
    def test_collocation_property(self):
        N = 4
        nodes = gauss_hermite(N + 1).nodes
        vals = eval_lagrange_all(N, 1.0, nodes)
        np.testing.assert_allclose(vals, np.eye(N + 1), atol=1e-13)

    def test_midpoint_linear(self):
        vals = eval_lagrange_all(1, 1.0, 0.0)
        np.testing.assert_allclose(vals.ravel(), [0.5, 0.5], atol=1e-14)

    def test_rescaled_node_hit(self):
        N = 2
        nodes = gauss_hermite(N + 1).nodes
        vals = eval_lagrange_all(N, math.sqrt(2), math.sqrt(2) * nodes[1])
        np.testing.assert_allclose(vals.ravel(), [0.0, 1.0, 0.0], atol=1e-13)

    def test_partition_of_unity(self):
        x = np.linspace(-3, 3, 17)
        vals = eval_lagrange_all(6, 1.0, x)
        np.testing.assert_allclose(vals.sum(axis=0), np.ones_like(x),
                                   atol=1e-12)

    def test_barycentric_weights_normalized(self):
        w = barycentric_weights(gauss_hermite(9).nodes)
        assert np.max(np.abs(w)) == pytest.approx(1.0)
