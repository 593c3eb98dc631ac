import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypclif import moment
from hypclif.moment import (INFEASIBLE_CONSEQUENCE, TRACE, WordIndex, build_program, export_program,
                            literal_residuals, moment_matrix, moments_from_operators, solve_program,
                            spectral_bound, truncation_level)
from hypclif.ncalg import NcPoly, canonical, enumerate_words, ideal_generators, involution, word_count
from hypclif.poly import parse_poly
from hypclif.sdp import SdpError, Status, parse_sdpa

SX = np.array([[0.0, 1.0], [1.0, 0.0]])
SZ = np.diag([1.0, -1.0])
LORENTZ_OPS = [np.eye(2), SZ, SX]
CUBE_OPS = [np.diag(r) for r in np.eye(3)]


def literal_nullity(h, e, k, unit_value=1.0):
    """Dimension of the solution set of the literal linear constraints over reversal classes."""
    n = h.nvars
    words = enumerate_words(n, 2 * k)
    cls = {}
    for w in words:
        cls.setdefault(canonical(w), len(cls))
    gens = ideal_generators(h, e).all()
    rows = []
    for g in gens:
        budget = 2 * k - g.degree
        short = [w for w in words if len(w) <= budget]
        for p in short:
            for q in short:
                if len(p) + len(q) > budget:
                    continue
                row = np.zeros(len(cls))
                for w, c in g.terms.items():
                    row[cls[canonical(p + w + q)]] += c
                rows.append(row)
    rows.append(np.eye(1, len(cls), 0)[0])
    A = np.array(rows)
    return len(cls) - np.linalg.matrix_rank(A, tol=1e-9 * np.abs(A).max())


def phi_of(p: NcPoly, index: WordIndex, moments) -> float:
    return sum(c * moments[index.class_id(w)] for w, c in p.terms.items())


# truncation and the spectral bound


@pytest.mark.parametrize("d, k", [(1, 2), (2, 3), (3, 4), (4, 6), (5, 8)])
def test_truncation_level(d, k):
    assert truncation_level(d) == k


def test_truncation_rejects_zero():
    with pytest.raises(ValueError):
        truncation_level(0)


def test_spectral_bound_lorentz(lorentz):
    assert spectral_bound(*lorentz) == pytest.approx(1.1 * np.sqrt(2), rel=1e-3)


def test_spectral_bound_linear():
    assert spectral_bound(parse_poly("x1", 1), [1.0]) == pytest.approx(1.1)


def test_spectral_bound_scale_invariant(lorentz):
    h, e = lorentz
    assert spectral_bound(2 * h, e) == pytest.approx(spectral_bound(h, e), rel=1e-12)


# structure


def test_word_index_classes():
    idx = WordIndex(2, 2)
    assert idx.size == 7 and idx.classes[0] == ()
    assert idx.class_id((1, 2)) == idx.class_id((2, 1))
    assert idx.class_id((1, 1, 2)) != idx.class_id((1, 2, 1))
    for i, w in enumerate(enumerate_words(2, 4)):
        assert idx.word_id(w) == i
        assert idx.word_class[i] == idx.class_id(w[::-1])


@pytest.mark.parametrize("text, e, n, size", [("x1^2 - x2^2", [1, 0], 2, 15),
                                              ("x1^2 - x2^2 - x3^2", [1, 0, 0], 3, 40)])
def test_block_size(text, e, n, size):
    mp = build_program(parse_poly(text, n), e)
    assert mp.size == size == mp.problem.block_sizes[0] == word_count(n, 3)
    assert mp.problem.block_sizes[1] == -(size - 1)


def test_k_below_degree_rejected(cube):
    with pytest.raises(ValueError):
        build_program(*cube, k=2)


def test_small_k_warns(lorentz):
    assert build_program(*lorentz, k=2).warnings


def test_dimension_cap(lorentz):
    with pytest.raises(SdpError):
        build_program(*lorentz, dim_cap=39)


def test_rejects_unknown_mode(lorentz):
    with pytest.raises(ValueError):
        build_program(*lorentz, mode="both")


def test_unit_row_present_once(lorentz):
    mp = build_program(*lorentz)
    assert mp.system.counts()["unit"] == 1


def test_reduction_matches_direct_expansion(cube, rng):
    mp = build_program(*cube)
    red, idx = mp.reduction, mp.index
    words = enumerate_words(3, 2 * mp.k)
    for i in rng.choice(len(words), 200, replace=False):
        w = words[i]
        direct = np.zeros(red.num_classes)
        for rw, c in moment._word_vector(red, idx, w).items():
            direct[red.red_class[red.red_index[rw]]] += c
        assert np.allclose(red.V[idx.word_id(w)], direct, atol=1e-12)


@pytest.mark.parametrize("case", ["hyp2_k3", "lorentz_k2", "cube_k3"])
def test_free_count_matches_literal_system(case):
    text, e, n, k = {"hyp2_k3": ("x1^2 - x2^2", [1, 0], 2, 3),
                     "lorentz_k2": ("x1^2 - x2^2 - x3^2", [1, 0, 0], 3, 2),
                     "cube_k3": ("x1*x2*x3", [1, 1, 1], 3, 3)}[case]
    h = parse_poly(text, n)
    mp = build_program(h, e, k=k)
    assert mp.num_free == literal_nullity(h, np.array(e, float), k)


@pytest.fixture(scope="module")
def lorentz_program():
    return build_program(parse_poly("x1^2 - x2^2 - x3^2", 3), [1.0, 0.0, 0.0])


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.1, 10.0))
def test_parametrization_satisfies_literal_constraints(lorentz_program, seed, scale):
    mp = lorentz_program
    x = scale * np.random.default_rng(seed).standard_normal(mp.num_free)
    r = literal_residuals(mp, mp.moments(x))
    assert r["unit"] <= 1e-12 and r["ideal"] <= 1e-9 * (1 + scale ** 2)


def test_trace_parametrization_satisfies_literal_constraints(hyp2, rng):
    mp = build_program(*hyp2, mode=TRACE)
    r = literal_residuals(mp, mp.moments(rng.standard_normal(mp.num_free)))
    assert max(r["unit"], r["ideal"], r["cyclic"], r["trace"]) <= 1e-9


def test_moment_matrix_affine(hyp2, rng):
    mp = build_program(*hyp2)
    x = rng.standard_normal(mp.num_free)
    assert np.allclose(mp.moment_matrix(x), moment_matrix(mp.index, mp.moments(x)), atol=1e-10)


# finite models


def test_lorentz_model_is_feasible(lorentz):
    mp = build_program(*lorentz)
    for v in (np.array([1.0, 0.0]), np.array([0.6, 0.8])):
        r = literal_residuals(mp, moments_from_operators(mp.index, LORENTZ_OPS, v))
        assert max(r.values()) <= 1e-9


def test_lorentz_trace_model_is_feasible(lorentz):
    mp = build_program(*lorentz, mode=TRACE)
    phi = sum(moments_from_operators(mp.index, LORENTZ_OPS, v) for v in np.eye(2))
    r = literal_residuals(mp, phi)
    assert max(r.values()) <= 1e-9


def test_cube_diagonal_model_is_feasible(cube):
    mp = build_program(*cube)
    phi = moments_from_operators(mp.index, CUBE_OPS, np.ones(3) / np.sqrt(3))
    assert max(literal_residuals(mp, phi).values()) <= 1e-9


def test_wrong_model_violates(lorentz):
    mp = build_program(*lorentz)
    phi = moments_from_operators(mp.index, [np.eye(2), 2 * SZ, SX], np.array([1.0, 0.0]))
    assert literal_residuals(mp, phi)["ideal"] > 1e-3


# solving


@pytest.fixture(scope="module")
def hyp2_solution():
    mp = build_program(parse_poly("x1^2 - x2^2", 2), [1.0, 0.0])
    return mp, solve_program(mp)


def test_hyp2_solution(hyp2_solution):
    mp, sol = hyp2_solution
    assert sol.status is Status.FEASIBLE
    idx, phi = mp.index, sol.moments
    assert phi[idx.class_id((1,))] == pytest.approx(1.0, abs=1e-9)
    assert phi[idx.class_id((2, 2))] == pytest.approx(1.0, abs=1e-9)
    r = literal_residuals(mp, phi)
    assert r["ideal"] <= 1e-8 and r["unit"] <= 1e-12 and r["psd"] <= 1e-8


def test_pull_back_soundness(hyp2_solution, rng):
    mp, sol = hyp2_solution
    for _ in range(20):
        a = rng.standard_normal(2)
        f = rng.standard_normal(3)
        az = NcPoly(2, {(1,): a[0], (2,): a[1]})
        p = f[0] * NcPoly.one(2) + f[1] * az + f[2] * az * az
        assert phi_of(involution(p) * p, mp.index, sol.moments) >= -1e-7


def test_trace_mode_symmetric_entry(hyp2):
    mp = build_program(*hyp2, mode=TRACE)
    sol = solve_program(mp)
    assert sol.status is Status.FEASIBLE
    assert sol.moments[0] == pytest.approx(2.0)
    assert sol.moments[mp.index.class_id((1, 2))] == pytest.approx(0.0, abs=1e-8)


def test_linear_form():
    mp = build_program(parse_poly("x1", 1), [1.0])
    sol = solve_program(mp)
    assert sol.status is Status.FEASIBLE and mp.num_free == 0
    assert np.allclose(sol.moments, 1.0, atol=1e-12)


def test_cube_feasible(cube):
    mp = build_program(*cube)
    sol = solve_program(mp)
    assert sol.status is Status.FEASIBLE
    r = literal_residuals(mp, sol.moments)
    assert r["ideal"] <= 1e-8 and r["psd"] <= 1e-8


def test_infeasible_with_tight_bound(lorentz):
    # R below the largest root excludes every representation
    sol = solve_program(build_program(*lorentz, R=0.5))
    assert sol.status is Status.INFEASIBLE
    assert sol.consequence == INFEASIBLE_CONSEQUENCE


# export


def test_export_deterministic_and_parses(hyp2):
    a = export_program(build_program(*hyp2))
    b = export_program(build_program(*hyp2))
    assert a[0] == b[0] and json.dumps(a[1], sort_keys=True) == json.dumps(b[1], sort_keys=True)
    mp = build_program(*hyp2)
    assert parse_sdpa(a[0]).same_as(mp.problem)


def test_export_sidecar(hyp2):
    mp = build_program(*hyp2)
    text, side = export_program(mp)
    assert int(text.splitlines()[0]) == mp.num_free + 1 == len(side["variables"])
    assert side["variables"][-1]["role"] == "lambda"
    assert len(side["moment_words"]) == 15 and side["moment_words"][0] == []


def test_canonical_problem_certifies_model(lorentz):
    # the Lorentz model's free-class values make the canonical slack psd with lambda = 0
    mp = build_program(*lorentz)
    phi = moments_from_operators(mp.index, LORENTZ_OPS, np.array([1.0, 0.0]))
    reps = [mp.index.word_id(w) for w in mp.free_words()]
    x = phi[mp.index.word_class[reps]]
    y = np.concatenate([x, [0.0]])
    assert min(np.linalg.eigvalsh(mp.problem.slack(y)[0])[0], mp.problem.slack(y)[1].min()) >= -1e-9
