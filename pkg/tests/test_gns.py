import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import block_diag

from hypclif.gns import (GnsError, OperatorTuple, build_operators, cayley_hamilton_cofactor, cofactor_residual,
                         determinant_poly, factor_and_cone_check, gns, gram_from_moments, quotient_basis, rank_bound,
                         verify_representation)
from hypclif.moment import WordIndex, build_program, moments_from_operators, solve_program
from hypclif.poly import MultiPoly, PolyError, UniPoly, parse_poly

SX = np.array([[0.0, 1.0], [1.0, 0.0]])
SZ = np.diag([1.0, -1.0])


def ops_of(mats, v=None):
    r = mats[0].shape[0]
    v = np.eye(r)[0] if v is None else np.asarray(v, float)
    return OperatorTuple([np.asarray(M, float) for M in mats], v, np.zeros((r, 0)))


@pytest.fixture
def clifford2():
    idx = WordIndex(2, 3)
    return idx, moments_from_operators(idx, [np.eye(2), SX], np.array([1.0, 0.0]))


# Gram matrix and quotient


def test_gram_clifford(clifford2):
    idx, phi = clifford2
    assert np.allclose(gram_from_moments(phi, idx, 1), [[1, 1, 0], [1, 1, 0], [0, 0, 1]])
    assert np.allclose(gram_from_moments(phi, idx, 0), [[1.0]])


def test_gram_rejects_high_degree(clifford2):
    idx, phi = clifford2
    with pytest.raises(GnsError):
        gram_from_moments(phi, idx, 4)


def test_gram_rejects_wrong_length(clifford2):
    idx, phi = clifford2
    with pytest.raises(GnsError):
        gram_from_moments(phi[:-1], idx, 1)


def test_quotient_rank_two():
    b = quotient_basis(np.array([[1.0, 1, 0], [1, 1, 0], [0, 0, 1]]))
    assert b.r == 2 and np.allclose(b.kept, [1.0, 2.0])
    assert np.allclose(b.W.T @ b.W, [[1, 1, 0], [1, 1, 0], [0, 0, 1]])


def test_quotient_identity():
    b = quotient_basis(np.eye(4))
    assert b.r == 4
    assert np.allclose(b.W @ b.W.T, np.eye(4))


def test_quotient_rejects_zero_and_indefinite():
    with pytest.raises(GnsError):
        quotient_basis(np.zeros((3, 3)))
    with pytest.raises(GnsError):
        quotient_basis(np.diag([1.0, -0.5]))


@given(st.integers(1, 5), st.integers(0, 2 ** 32 - 1))
def test_quotient_reproduces_gram(r, seed):
    rng = np.random.default_rng(seed)
    F = rng.standard_normal((r, 6))
    G = F.T @ F
    b = quotient_basis(G)
    assert b.r == r
    assert np.allclose(b.W.T @ b.W, G, atol=1e-8 * np.abs(G).max())


# operators


def test_operators_clifford(clifford2):
    idx, phi = clifford2
    ops = gns(phi, idx, 2)
    assert ops.r == 2
    assert np.allclose(ops.M[0], np.eye(2), atol=1e-10)
    assert np.allclose(np.linalg.eigvalsh(ops.M[1]), [-1.0, 1.0], atol=1e-10)
    assert np.linalg.norm(ops.v) == pytest.approx(1.0)


def test_operators_reproduce_moments(clifford2):
    idx, phi = clifford2
    ops = gns(phi, idx, 2)
    again = moments_from_operators(idx, ops.M, ops.v)
    assert np.allclose(again, phi, atol=1e-10)


def test_operators_linear():
    mp = build_program(parse_poly("x1", 1), [1.0])
    sol = solve_program(mp)
    ops = gns(sol.moments, mp.index, 1)
    assert ops.r == 1 and np.allclose(ops.M[0], [[1.0]])


def test_operators_need_enough_moments():
    idx = WordIndex(2, 1)
    phi = moments_from_operators(idx, [np.eye(2), SX], np.array([1.0, 0.0]))
    with pytest.raises(GnsError):
        build_operators(phi, idx, quotient_basis(gram_from_moments(phi, idx, 1)), 1)


def test_inconsistent_moments_rejected(clifford2):
    idx, phi = clifford2
    bad = phi.copy()
    bad[idx.class_id((1, 2))] += 0.3
    with pytest.raises(GnsError):
        gns(bad, idx, 2)


def test_json_round_trip():
    ops = ops_of([np.eye(2), SZ, SX], [0.6, 0.8])
    back = OperatorTuple.from_json(json.loads(json.dumps(ops.to_json({"k": 3}))))
    assert all(np.array_equal(a, b) for a, b in zip(ops.M, back.M)) and np.array_equal(ops.v, back.v)


def test_json_rejects_bad_shape():
    data = ops_of([np.eye(2), SX]).to_json()
    data["r"] = 3
    with pytest.raises(GnsError):
        OperatorTuple.from_json(data)


# verification


def test_verify_exact_model(hyp2):
    rep = verify_representation(*hyp2, ops_of([np.eye(2), SX]))
    assert rep.e_identity_residual <= 1e-12 and rep.ch_residual <= 1e-12
    assert rep.interior_min_eig > 0


def test_verify_lorentz_pipeline(lorentz):
    h, e = lorentz
    mp = build_program(h, e)
    sol = solve_program(mp)
    ops = gns(sol.moments, mp.index, 2)
    rep = verify_representation(h, e, ops)
    assert rep.e_identity_residual <= 1e-6 and rep.ch_residual <= 1e-6


def test_verify_detects_wrong_model(lorentz):
    rep = verify_representation(*lorentz, ops_of([np.eye(2), 2 * SZ, SX]))
    assert rep.ch_residual > 1e-2


# determinant and factor check


def test_determinant_examples():
    g, res = determinant_poly(ops_of([np.eye(2), SX]))
    assert g.allclose(parse_poly("x1^2 - x2^2", 2), 1e-10) and res <= 1e-10
    g, _ = determinant_poly(ops_of([np.eye(1)]))
    assert g.allclose(parse_poly("x1", 1), 1e-12)
    g, _ = determinant_poly(ops_of([np.diag(r) for r in np.eye(3)]))
    assert g.allclose(parse_poly("x1*x2*x3", 3), 1e-10)


def test_determinant_random_against_direct(rng):
    for _ in range(5):
        mats = []
        for _ in range(3):
            B = rng.standard_normal((3, 3))
            mats.append(B + B.T)
        g, _ = determinant_poly(ops_of(mats))
        for a in rng.standard_normal((10, 3)):
            assert g(a) == pytest.approx(np.linalg.det(np.tensordot(a, mats, axes=1)), rel=1e-8, abs=1e-8)


def test_factor_lorentz_exact(lorentz):
    rep = factor_and_cone_check(*lorentz, ops_of([np.eye(2), SZ, SX]))
    assert rep.f.allclose(MultiPoly.constant(3, 1.0), 1e-8)
    assert rep.cone_agreement == 1.0 and rep.divide_residual <= 1e-8 and rep.divisible


def test_factor_cube_diagonal(cube):
    rep = factor_and_cone_check(*cube, ops_of([np.diag(r) for r in np.eye(3)]))
    assert rep.f.allclose(MultiPoly.constant(3, 1.0), 1e-8)
    assert rep.cone_agreement == 1.0


def test_factor_extra_linear_factor(lorentz):
    # det of the block-diagonal model is h * x1; x1 > 0 on the interior of the cone
    ops = ops_of([block_diag(np.eye(2), [[1.0]]), block_diag(SZ, [[0.0]]), block_diag(SX, [[0.0]])])
    rep = factor_and_cone_check(*lorentz, ops)
    assert rep.g.allclose(parse_poly("x1^3 - x1*x2^2 - x1*x3^2", 3), 1e-10)
    assert rep.f.allclose(parse_poly("x1", 3), 1e-8)
    assert rep.cone_agreement == 1.0


def test_factor_detects_wrong_cone(lorentz):
    # det is x1^2 - (x2^2 + x3^2)/4: a wider cone, not a multiple of h
    rep = factor_and_cone_check(*lorentz, ops_of([np.eye(2), 0.5 * SZ, 0.5 * SX]))
    assert rep.divisible is False and rep.divide_residual > 1e-2
    assert rep.cone_agreement < 1.0 and rep.mismatches


def test_factor_rejects_low_degree(lorentz):
    with pytest.raises(PolyError):
        factor_and_cone_check(*lorentz, ops_of([np.eye(1), np.zeros((1, 1)), np.zeros((1, 1))]))


# Cayley-Hamilton cofactor


def adjugate(M):
    return np.linalg.det(M) * np.linalg.inv(M)


def test_cofactor_diagonal():
    A = np.diag([1.0, 2.0])
    p = UniPoly([2.0, -3.0, 1.0])
    cof = cayley_hamilton_cofactor(p, A)
    assert cof.residual <= 1e-12
    assert np.allclose(cof.B[1], np.eye(2)) and np.allclose(cof.B[0], A - 3 * np.eye(2))
    for t in (0.3, -1.7, 5.0):
        assert np.allclose(cof(t), adjugate(t * np.eye(2) - A))


def test_cofactor_trivial():
    cof = cayley_hamilton_cofactor(UniPoly([0.0, 1.0]), np.zeros((1, 1)))
    assert np.allclose(cof.B[0], [[1.0]]) and cof.residual == 0.0


def test_cofactor_random_symmetric(rng):
    for _ in range(20):
        B = rng.standard_normal((5, 5))
        A = B + B.T
        p = UniPoly(np.poly(A)[::-1])
        cof = cayley_hamilton_cofactor(p, A)
        assert cof.residual <= 1e-10
        t = rng.uniform(-1, 1) + 10.0
        assert np.allclose(cof(t), adjugate(t * np.eye(5) - A), rtol=1e-8)


def test_cofactor_minimal_polynomial():
    # p need only annihilate A, not be its characteristic polynomial
    A = np.diag([1.0, 1.0, 2.0])
    cof = cayley_hamilton_cofactor(UniPoly([2.0, -3.0, 1.0]), A)
    assert cof.residual <= 1e-12


def test_cofactor_rejects_non_annihilating():
    with pytest.raises(PolyError):
        cayley_hamilton_cofactor(UniPoly([1.0, 0.0, 1.0]), np.diag([1.0, 2.0]))


def test_cofactor_residual_detects_error():
    A = np.diag([1.0, 2.0])
    p = UniPoly([2.0, -3.0, 1.0])
    B = cayley_hamilton_cofactor(p, A).B
    B[0] = B[0] + 1e-3
    assert cofactor_residual(p, A, B) > 1e-4


@pytest.mark.parametrize("n, d, r", [(3, 2, 4), (3, 3, 13), (2, 2, 3), (1, 5, 5)])
def test_rank_bound(n, d, r):
    assert rank_bound(n, d) == r
