import math

import numpy as np
import pytest
import scipy.sparse as sp

from boltzgal.bases import BasisIndexMaps
from boltzgal.kernel import (FOUR_PI_INV, build_collision_eigenvalues,
                             build_kernel, build_radial_mult,
                             funk_hecke_lambdas, parse_kernel_params)
from boltzgal.oracle import sphere_rule
from boltzgal.specfun import eval_real_sph_harm, sph_harm_index


class TestFunkHecke:
    def test_constant_kernel(self):
        lam = funk_hecke_lambdas(lambda mu: np.full(np.shape(mu), FOUR_PI_INV), 6)
        assert lam[0] == pytest.approx(1.0, rel=1e-13)
        assert np.abs(lam[1:]).max() < 1e-13

    def test_angular_power_lambda0(self):
        # (1/2) int (1+mu)^0.4 dmu = 2^1.4 / 2.8
        lam = funk_hecke_lambdas(lambda mu: FOUR_PI_INV * (1 + mu) ** 0.4, 4,
                                 order=512)
        assert lam[0] == pytest.approx(2.0 ** 1.4 / 2.8, rel=1e-10)

    def test_lambda_decay_smooth_kernel(self):
        lam = funk_hecke_lambdas(lambda mu: FOUR_PI_INV * (1 + mu) ** 0.4, 12,
                                 order=256)
        assert abs(lam[10]) < abs(lam[2])
        assert np.all(np.isfinite(lam))


class TestDTable:
    def test_constant_kernel_values(self):
        maps = BasisIndexMaps(6)
        kern = build_kernel("maxwell", maps)
        l = maps.sph_l
        np.testing.assert_allclose(kern.d_table[l == 0], 0.0, atol=1e-13)
        np.testing.assert_allclose(kern.d_table[l >= 1], -1.0, atol=1e-12)

    def test_hardsphere_same_angular_law(self):
        maps = BasisIndexMaps(5)
        km = build_kernel("maxwell", maps)
        kh = build_kernel("hardsphere", maps)
        np.testing.assert_allclose(km.d_table, kh.d_table, atol=1e-14)

    def test_nonpositive_for_nonnegative_btheta(self):
        maps = BasisIndexMaps(8)
        kern = build_kernel("angular:beta=0.38,p=0.4", maps)
        assert np.all(kern.d_table <= 1e-13)

    @pytest.mark.parametrize("spec", ["maxwell", "angular:beta=0.38,p=0.4"])
    def test_against_double_sphere_quadrature(self, spec):
        # d for l <= 4 the slow way: int int btheta(e.e') Y(e)(Y(e')-Y(e))
        maps = BasisIndexMaps(4)
        kern = build_kernel(spec, maps)
        L = 4
        dirs, w = sphere_rule(24)
        theta = np.arccos(np.clip(dirs[:, 2], -1, 1))
        phi = np.arctan2(dirs[:, 1], dirs[:, 0])
        Y = eval_real_sph_harm(L, theta, phi)       # (modes, npts)
        mu = dirs @ dirs.T
        bt = np.asarray(kern.b_theta(np.clip(mu, -1, 1)), dtype=float)
        bt = np.broadcast_to(bt, mu.shape)
        idx = sph_harm_index(L)
        for pos, (l, j, t) in enumerate(idx):
            y = Y[pos]
            inner = bt @ (w * y)                     # int btheta(e.e') Y(e') de'
            direct = float(np.sum(w * y * inner)) - \
                float(kern.lam[0] * np.sum(w * y * y))
            assert direct == pytest.approx(kern.lam[l] - kern.lam[0],
                                           abs=2e-8), (l, j, t)

    def test_independent_of_j_and_t(self):
        maps = BasisIndexMaps(7)
        kern = build_kernel("angular:beta=0.38,p=0.4", maps)
        table = {}
        for pos, (k, l, j, t) in enumerate(maps.spherical_kljt):
            table.setdefault(int(l), set()).add(round(kern.d_table[pos], 14))
        for l, vals in table.items():
            assert len(vals) == 1


class TestRadialMult:
    def test_beta0_identity(self):
        maps = BasisIndexMaps(8)
        csr, _ = build_radial_mult(0.0, maps)
        dev = abs(csr - sp.eye(maps.dim)).max()
        assert dev < 1e-13

    def test_hardsphere_first_entry(self):
        # l=0 chain head: int e^-r r^{1.5} L0^{0.5}(r)^2 dr = 1.5
        maps = BasisIndexMaps(4)
        _, blocks = build_radial_mult(1.0, maps)
        assert blocks[0][0, 0] == pytest.approx(1.5, rel=1e-13)

    def test_symmetry(self):
        maps = BasisIndexMaps(9)
        _, blocks = build_radial_mult(0.38, maps)
        for l, blk in blocks.items():
            np.testing.assert_allclose(blk, blk.T, atol=1e-12)

    def test_beta_range(self):
        maps = BasisIndexMaps(3)
        with pytest.raises(ValueError):
            build_radial_mult(1.2, maps)
        with pytest.raises(ValueError):
            build_kernel("vhs:beta=-0.1", maps)


class TestKernelParsing:
    def test_tags(self):
        assert parse_kernel_params("maxwell")["beta"] == 0.0
        assert parse_kernel_params("hardsphere")["beta"] == 1.0
        assert parse_kernel_params("vhs:beta=0.5")["beta"] == 0.5
        p = parse_kernel_params("angular:beta=0.38,p=0.4,c=1/4pi")
        assert p["beta"] == 0.38 and p["p"] == 0.4
        assert p["c"] == pytest.approx(FOUR_PI_INV)

    def test_unknown(self):
        with pytest.raises(ValueError):
            parse_kernel_params("bogus")
        with pytest.raises(ValueError):
            parse_kernel_params("vhs")

    def test_scalars(self):
        maps = BasisIndexMaps(2)
        kern = build_kernel("hardsphere", maps)
        assert kern.radial_scale == pytest.approx(math.sqrt(2.0))
        assert kern.tbar_prefactor(2.0) == pytest.approx(2.0 ** 3.5)
        km = build_kernel("maxwell", maps)
        assert km.radial_scale == 1.0
        assert km.tbar_prefactor(3.0) == pytest.approx(27.0)
