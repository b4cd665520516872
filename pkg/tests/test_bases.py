import math

import numpy as np
import pytest

from boltzgal import bases
from boltzgal.bases import (BasisIndexMaps, build_shift_1d,
                            build_transform_set, cylinder_to_hermite,
                            cylinder_to_spherical, hermite_to_cylinder,
                            hier_dim, nodal_to_hermite, nodal_to_hermite_t,
                            shift_3d, spherical_to_cylinder)
from boltzgal.specfun import eval_hermite_all, gauss_hermite


@pytest.fixture(scope="module")
def ts4():
    return build_transform_set(4)


class TestIndexMaps:
    @pytest.mark.parametrize("N", range(2, 17))
    def test_dimension_counts(self, N):
        maps = BasisIndexMaps(N)
        d = hier_dim(N)
        assert len(maps.hermite_ijk) == d
        assert len(maps.cylinder_kijt) == d
        assert len(maps.spherical_kljt) == d

    def test_n2_count(self):
        assert hier_dim(2) == 10

    def test_angular_index_bound(self):
        maps = BasisIndexMaps(9)
        for _, ip, j, _ in maps.cylinder_kijt:
            assert bases.angular_index(ip, j) <= ip

    def test_spherical_order_bound(self):
        maps = BasisIndexMaps(9)
        for k, l, j, _ in maps.spherical_kljt:
            assert j <= l <= k
            assert (l - k) % 2 == 0


class TestTransformBuild:
    def test_requires_n2(self):
        with pytest.raises(ValueError):
            build_transform_set(1)

    def test_plh_shape_and_row0(self, ts4):
        N = 4
        assert ts4.P_LH.shape == (N + 1, 2 * N + 1)
        fine = gauss_hermite(2 * N + 1)
        np.testing.assert_allclose(ts4.P_LH[0],
                                   fine.weights * math.pi ** -0.25,
                                   rtol=1e-14)

    def test_htheta_block0_identity(self, ts4):
        np.testing.assert_allclose(ts4.htheta_blocks[0], [[1.0]], atol=1e-14)

    def test_thetaphi_k0_sign(self, ts4):
        blk = ts4.thetaphi_blocks[(0, 0)]
        assert abs(blk[0, 0]) == pytest.approx(1.0, abs=1e-13)

    @pytest.mark.parametrize("N", [2, 3, 5, 8])
    def test_block_orthogonality(self, N):
        ts = build_transform_set(N)
        d = ts.hier_dim
        for csr in (ts.csr_HT, ts.csr_TP):
            dev = np.abs((csr @ csr.T).toarray() - np.eye(d)).max()
            assert dev < 1e-11

    def test_cache_roundtrip(self, tmp_path):
        ts = build_transform_set(3, cache_dir=str(tmp_path))
        ts2 = build_transform_set(3, cache_dir=str(tmp_path))
        np.testing.assert_array_equal(ts.P_LH, ts2.P_LH)
        np.testing.assert_allclose((ts.csr_TP - ts2.csr_TP).toarray(), 0.0)
        files = list(tmp_path.glob("*.bgts"))
        assert len(files) == 1
        assert files[0].read_bytes()[:4] == b"BGTS"


class TestNodalHermite:
    def test_constant_projection(self, ts4):
        G = ts4.fine_order
        h = nodal_to_hermite(ts4, np.ones(G ** 3))
        assert h[0] == pytest.approx(math.pi ** 0.75, rel=1e-13)
        assert np.abs(h[1:]).max() < 1e-13

    def test_zero(self, ts4):
        out = nodal_to_hermite(ts4, np.zeros(ts4.fine_order ** 3))
        assert np.all(out == 0.0)

    def test_pure_mode_recovery(self, ts4):
        # samples of the basis function H_{1,2,0} give the unit coefficient
        G = ts4.fine_order
        hv = eval_hermite_all(4, gauss_hermite(G).nodes)
        samp = np.einsum("i,j,k->ijk", hv[1], hv[2],
                         np.full(G, math.pi ** -0.25))
        h = nodal_to_hermite(ts4, samp.reshape(-1))
        ijk = ts4.maps.hermite_ijk
        pos = np.flatnonzero((ijk == [1, 2, 0]).all(axis=1))[0]
        assert h[pos] == pytest.approx(1.0, rel=1e-12)
        rest = np.delete(h, pos)
        assert np.abs(rest).max() < 1e-12

    def test_dimension_mismatch(self, ts4):
        with pytest.raises(ValueError):
            nodal_to_hermite(ts4, np.ones(10))

    def test_adjoint_pairing(self, ts4):
        rng = np.random.default_rng(0)
        G = ts4.fine_order
        a = rng.standard_normal(G ** 3)
        b = rng.standard_normal(ts4.hier_dim)
        lhs = nodal_to_hermite(ts4, a) @ b
        rhs = a @ nodal_to_hermite_t(ts4, b)
        assert lhs == pytest.approx(rhs, rel=1e-12)


class TestHierarchicalTransforms:
    def test_axial_modes_pass_through(self, ts4):
        # pure v3 Hermite dependence maps onto the i'=0 cylinder modes
        maps = ts4.maps
        h = np.zeros(ts4.hier_dim)
        ijk = maps.hermite_ijk
        pos = np.flatnonzero((ijk == [0, 0, 3]).all(axis=1))[0]
        h[pos] = 1.25
        th = hermite_to_cylinder(ts4, h)
        kijt = maps.cylinder_kijt
        tgt = np.flatnonzero((kijt == [3, 0, 0, bases.COS]).all(axis=1))[0]
        assert th[tgt] == pytest.approx(1.25, rel=1e-12)
        rest = np.delete(th, tgt)
        assert np.abs(rest).max() < 1e-12

    def test_round_trip(self, ts4):
        rng = np.random.default_rng(1)
        h = rng.standard_normal(ts4.hier_dim)
        back = cylinder_to_hermite(ts4, hermite_to_cylinder(ts4, h))
        np.testing.assert_allclose(back, h, atol=1e-11)

    def test_parseval(self, ts4):
        rng = np.random.default_rng(2)
        th = rng.standard_normal(ts4.hier_dim)
        ph = cylinder_to_spherical(ts4, th)
        assert np.sum(ph ** 2) == pytest.approx(np.sum(th ** 2), rel=1e-11)

    @pytest.mark.parametrize("deg", [0, 1, 2, 3, 4])
    def test_degree_locality(self, ts4, deg):
        rng = np.random.default_rng(deg)
        h = np.where(ts4.maps.hermite_ijk.sum(axis=1) == deg,
                     rng.standard_normal(ts4.hier_dim), 0.0)
        th = hermite_to_cylinder(ts4, h)
        assert np.abs(th[ts4.maps.cylinder_kijt[:, 0] != deg]).max() < 1e-12
        ph = cylinder_to_spherical(ts4, th)
        assert np.abs(ph[ts4.maps.spherical_kljt[:, 0] != deg]).max() < 1e-12

    def test_full_chain_isometry(self, ts4):
        rng = np.random.default_rng(3)
        h = rng.standard_normal(ts4.hier_dim)
        ph = cylinder_to_spherical(ts4, hermite_to_cylinder(ts4, h))
        assert np.linalg.norm(ph) == pytest.approx(np.linalg.norm(h),
                                                   rel=1e-11)

    def test_transpose_reproduces_row(self, ts4):
        m = 7
        e = np.zeros(ts4.hier_dim)
        e[m] = 1.0
        row = spherical_to_cylinder(ts4, e)
        np.testing.assert_allclose(row, ts4.csr_TP.toarray()[m], atol=1e-14)


class TestShifts:
    def test_shape(self):
        S = build_shift_1d(4, 0.3)
        assert S.shape == (9, 5)

    def test_collocation_hit(self):
        # vbar + mu_j lands exactly on collocation node i -> unit row
        N = 3
        nodes = gauss_hermite(N + 1).nodes
        mu = gauss_hermite(2 * N + 1).nodes / math.sqrt(2)
        vbar = nodes[2] - mu[4]
        S = build_shift_1d(N, vbar)
        np.testing.assert_allclose(S[4], np.eye(N + 1)[2], atol=1e-12)

    def test_row_sums(self):
        S = build_shift_1d(5, -0.77)
        np.testing.assert_allclose(S.sum(axis=1), 1.0, atol=1e-12)

    def test_polynomial_reproduction(self):
        rng = np.random.default_rng(4)
        N = 5
        p = np.polynomial.Polynomial(rng.standard_normal(N + 1))
        nodes = gauss_hermite(N + 1).nodes
        mu = gauss_hermite(2 * N + 1).nodes / math.sqrt(2)
        vbar = 0.41
        S = build_shift_1d(N, vbar)
        np.testing.assert_allclose(S @ p(nodes), p(vbar + mu), atol=1e-12)

    def test_shift3d_constant(self):
        N = 3
        mats = tuple(build_shift_1d(N, 0.0) for _ in range(3))
        out = shift_3d(np.ones((N + 1) ** 3), mats)
        np.testing.assert_allclose(out, 1.0, atol=1e-12)

    def test_shift3d_linear(self):
        N = 3
        nodes = gauss_hermite(N + 1).nodes
        mu = gauss_hermite(2 * N + 1).nodes / math.sqrt(2)
        vbar = (0.2, -0.1, 0.05)
        mats = tuple(build_shift_1d(N, v) for v in vbar)
        c = np.einsum("i,j,k->ijk", nodes, np.ones(N + 1),
                      np.ones(N + 1)).reshape(-1)
        G = 2 * N + 1
        out = shift_3d(c, mats).reshape(G, G, G)
        expect = vbar[0] + mu
        np.testing.assert_allclose(out[:, 0, 0], expect, atol=1e-12)

    def test_shift3d_reflection_symmetry(self):
        # p(vbar - mu_j) equals the flat-reversed entry p(vbar + mu_{M-1-j})
        rng = np.random.default_rng(5)
        N = 2
        c = rng.standard_normal((N + 1) ** 3)
        vbar = (0.3, 0.1, -0.2)
        plus = shift_3d(c, tuple(build_shift_1d(N, v) for v in vbar))
        mu = gauss_hermite(2 * N + 1).nodes / math.sqrt(2)
        from boltzgal.specfun import lagrange_matrix_at
        pts = np.stack(np.meshgrid(vbar[0] - mu, vbar[1] - mu, vbar[2] - mu,
                                   indexing="ij"), axis=-1).reshape(-1, 3)
        a = lagrange_matrix_at(N + 1, pts[:, 0])
        b = lagrange_matrix_at(N + 1, pts[:, 1])
        d = lagrange_matrix_at(N + 1, pts[:, 2])
        minus = np.einsum("ip,jp,kp,ijk->p", a, b, d,
                          c.reshape(N + 1, N + 1, N + 1))
        np.testing.assert_allclose(plus[::-1], minus, atol=1e-12)
