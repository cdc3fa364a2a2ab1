import json

import numpy as np
import pytest
import sympy

from sldstab.polymat import (
    Poly,
    PolyMatrix,
    adjugate,
    canonical_rep,
    column_degrees,
    column_reduce,
    determinant,
    is_hurwitz,
    is_strictly_proper,
    poly_divmod,
    polymatrix_from_json,
    polymatrix_to_json,
    rational_decompose,
    roots,
    unimodular_inverse,
    vstack,
)

xi = sympy.symbols("xi")


def _to_sympy(M: PolyMatrix) -> sympy.Matrix:
    out = sympy.zeros(M.rows, M.cols)
    for i in range(M.rows):
        for j in range(M.cols):
            c = M.entry(i, j).coeffs
            out[i, j] = sum(sympy.Float(v) * xi**k for k, v in enumerate(c))
    return out


def _random_polymatrix(rng, n, deg):
    return PolyMatrix(rng.integers(-4, 5, size=(deg + 1, n, n)).astype(float))


class TestPoly:
    def test_eval_and_degree(self):
        p = Poly([2.0, 3.0, 1.0])  # 2 + 3 xi + xi^2
        assert p.degree == 2
        assert p(0.0) == pytest.approx(2.0)
        assert p(-1.0) == pytest.approx(0.0)
        assert p(2.0) == pytest.approx(12.0)

    def test_divmod(self):
        num = Poly([2.0, 3.0, 1.0])
        den = Poly([1.0, 1.0])
        q, r = poly_divmod(num, den)
        assert np.allclose(q.coeffs, [2.0, 1.0])
        assert r.is_zero

    def test_roots(self):
        r = roots(Poly([2.0, 3.0, 1.0]))
        assert np.allclose(sorted(r.real), [-2.0, -1.0])


class TestDeterminant:
    def test_degree_two_plant(self):
        # det [[xi-1, -1], [-3xi-1, -xi]] = -(xi+1)^2
        R = PolyMatrix.from_entries(
            [[[-1.0, 1.0], [-1.0]], [[-1.0, -3.0], [0.0, -1.0]]]
        )
        d = determinant(R)
        assert d.degree == 2
        assert np.allclose(d.coeffs, [-1.0, -2.0, -1.0])

    @pytest.mark.parametrize("n,deg", [(2, 2), (3, 1), (4, 2), (5, 1)])
    def test_matches_symbolic(self, n, deg):
        rng = np.random.default_rng(17 * n + deg)
        R = _random_polymatrix(rng, n, deg)
        ours = determinant(R)
        ref = sympy.Poly(_to_sympy(R).det(), xi).all_coeffs()[::-1]
        ref = np.array([float(v) for v in ref])
        got = ours.coeffs[: len(ref)]
        assert np.allclose(got, ref, atol=1e-6 * max(1.0, np.abs(ref).max()))

    def test_adjugate_identity(self):
        rng = np.random.default_rng(3)
        R = _random_polymatrix(rng, 3, 1)
        prod = R @ adjugate(R)
        d = determinant(R)
        for i in range(3):
            for j in range(3):
                e = prod.entry(i, j)
                if i == j:
                    assert np.allclose(
                        e.coeffs[: d.coeffs.size], d.coeffs, atol=1e-8
                    )
                else:
                    assert e.is_zero or np.abs(e.coeffs).max() < 1e-8


class TestHurwitz:
    def test_stable(self):
        R = PolyMatrix.from_entries([[[2.0, 3.0, 1.0]]])
        assert is_hurwitz(R)

    def test_root_at_plus_one(self):
        R = PolyMatrix.from_entries([[[-1.0, 1.0]]])
        assert not is_hurwitz(R)

    def test_imaginary_axis(self):
        # xi^2 + 1 has roots on the axis
        R = PolyMatrix.from_entries([[[1.0, 0.0, 1.0]]])
        assert not is_hurwitz(R)


class TestCanonicalRep:
    @pytest.mark.parametrize("seed", range(20))
    def test_reconstruction_and_idempotence(self, seed):
        """F = N R + (F mod R) with the remainder strictly proper, 10 cases per seed."""
        rng = np.random.default_rng(seed)
        for _ in range(10):
            n = int(rng.integers(1, 4))
            R = _random_polymatrix(rng, n, int(rng.integers(1, 3)))
            if abs(determinant(R).coeffs[-1]) < 1e-9:
                continue
            F = PolyMatrix(
                rng.integers(-3, 4, size=(3, int(rng.integers(1, 3)), n)).astype(float)
            )
            C = canonical_rep(F, R)
            _, N = rational_decompose(F, R)
            recon = (N @ R) + C
            assert (recon - F).max_norm() < 1e-7 * max(1.0, F.max_norm())
            # remainder is strictly proper against R
            assert is_strictly_proper(C, R)
            # idempotence
            CC = canonical_rep(C, R)
            assert (CC - C).max_norm() < 1e-7 * max(1.0, C.max_norm())

    def test_row_already_reduced(self):
        R = PolyMatrix.from_entries([[[2.0, 3.0, 1.0]]])
        F = PolyMatrix.from_entries([[[0.0, 1.0]]])  # xi, strictly proper
        C = canonical_rep(F, R)
        assert (C - F).max_norm() < 1e-12

    def test_degree_drop(self):
        # xi^2 mod (xi^2+3xi+2) = -3xi - 2
        R = PolyMatrix.from_entries([[[2.0, 3.0, 1.0]]])
        F = PolyMatrix.from_entries([[[0.0, 0.0, 1.0]]])
        C = canonical_rep(F, R)
        assert np.allclose(C.entry(0, 0).coeffs, [-2.0, -3.0])


class TestColumnReduction:
    def test_reduces(self):
        R = PolyMatrix.from_entries(
            [[[1.0, 1.0], [1.0, 1.0]], [[1.0], [0.0]]]
        )
        Rred, U = column_reduce(R)
        lead = np.sum(np.array(column_degrees(Rred)))
        assert lead <= determinant(R).degree + 1  # proper column degrees

    def test_unimodular_inverse(self):
        U = PolyMatrix.from_entries([[[1.0], [0.0, 1.0]], [[0.0], [1.0]]])
        V = unimodular_inverse(U)
        prod = U @ V
        eye = PolyMatrix.identity(2)
        assert (prod - eye).max_norm() < 1e-9


class TestStrictlyProper:
    def test_common_factor_cancellation(self):
        # (xi+1) / ((xi+1)(xi+2)) is strictly proper after cancellation
        N = PolyMatrix.from_entries([[[1.0, 1.0]]])
        D = PolyMatrix.from_entries([[[2.0, 3.0, 1.0]]])
        assert is_strictly_proper(N, D)

    def test_biproper(self):
        N = PolyMatrix.from_entries([[[1.0, 0.0, 1.0]]])
        D = PolyMatrix.from_entries([[[2.0, 3.0, 1.0]]])
        assert not is_strictly_proper(N, D)


class TestJson:
    def test_round_trip(self):
        R = PolyMatrix.from_entries([[[0.0], [1.0, 1.0]], [[1.0], [-1.0]]])
        doc = json.loads(json.dumps(polymatrix_to_json(R)))
        back = polymatrix_from_json(doc)
        assert (R - back).max_norm() == 0.0


def test_vstack():
    A = PolyMatrix.identity(2)
    B = PolyMatrix.from_entries([[[0.0, 1.0], [0.0]]])
    M = vstack([A, B])
    assert M.shape == (3, 2)
    assert np.allclose(M.entry(2, 0).coeffs, [0.0, 1.0])
