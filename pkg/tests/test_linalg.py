import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from twodpca.errors import InvalidInputError, InvalidSpecError, NumericFailureError
from twodpca.linalg import (check_symmetric, jacobi_eigh, lp_norm, signed_power,
                            spectral_norm, sym_eig_topk)


@pytest.mark.parametrize("v, p, expected", [
    ([3, 4], 2, 5.0),
    ([1, -1, 1], 1, 3.0),
    ([2, -3, 0], math.inf, 3.0),
])
def test_lp_norm_examples(v, p, expected):
    assert lp_norm(v, p) == expected


def test_lp_norm_matches_definition(rng):
    v = rng.standard_normal(17)
    for p in (0.5, 1.3, 2.7, 7.0):
        assert lp_norm(v, p) == pytest.approx(np.sum(np.abs(v) ** p) ** (1 / p), rel=1e-13)


def test_lp_norm_large_p_does_not_overflow():
    assert lp_norm([1e200, 1e200], 4.0) == pytest.approx(1e200 * 2 ** 0.25)


@pytest.mark.parametrize("bad", [[1.0, np.nan], [np.inf], []])
def test_lp_norm_rejects_bad_vectors(bad):
    with pytest.raises(InvalidInputError):
        lp_norm(bad, 2)


def test_lp_norm_rejects_bad_p():
    with pytest.raises(InvalidSpecError):
        lp_norm([1.0], 0.0)


@pytest.mark.parametrize("v, e, expected", [
    ([-2, 3], 2, [-4, 9]),
    ([-2, 0, 5], 0, [-1, 0, 1]),
    ([4, -9], 0.5, [2, -3]),
])
def test_signed_power_examples(v, e, expected):
    np.testing.assert_allclose(signed_power(v, e), expected, rtol=1e-15)


def test_eig_diagonal():
    (pair,) = sym_eig_topk(np.diag([3.0, 1.0]), 1)
    assert pair.value == pytest.approx(3.0)
    np.testing.assert_allclose(pair.vector, [1.0, 0.0], atol=1e-15)


def test_eig_two_by_two():
    top, low = sym_eig_topk([[2.0, 1.0], [1.0, 2.0]], 2)
    assert top.value == pytest.approx(3.0, rel=1e-14)
    assert low.value == pytest.approx(1.0, rel=1e-14)
    np.testing.assert_allclose(top.vector, [1 / math.sqrt(2)] * 2, rtol=1e-14)


def _random_sym(rng, n):
    B = rng.standard_normal((n, n))
    return B + B.T


def test_eig_residuals_and_orthogonality(rng):
    for n in (1, 2, 3, 6, 11, 24):
        A = _random_sym(rng, n)
        vals, vecs = jacobi_eigh(A)
        bound = 1e-10 * (1 + np.linalg.norm(A))
        assert np.all(np.diff(vals) <= 0)
        for j in range(n):
            assert np.linalg.norm(A @ vecs[:, j] - vals[j] * vecs[:, j]) <= bound
        np.testing.assert_allclose(vecs.T @ vecs, np.eye(n), atol=1e-10)


def test_eig_matches_numpy(rng):
    A = _random_sym(rng, 9)
    vals, vecs = jacobi_eigh(A)
    ref_vals, ref_vecs = np.linalg.eigh(A)
    np.testing.assert_allclose(vals, ref_vals[::-1], atol=1e-12)
    for j in range(9):
        ref = ref_vecs[:, ::-1][:, j]
        assert min(np.linalg.norm(vecs[:, j] - ref), np.linalg.norm(vecs[:, j] + ref)) < 1e-9


def test_eig_three_by_three_characteristic_roots(rng):
    # brute-force oracle: roots of det(A - x I)
    A = _random_sym(rng, 3)
    roots = np.sort(np.roots(np.poly(A)).real)[::-1]
    np.testing.assert_allclose([p.value for p in sym_eig_topk(A, 3)], roots, atol=1e-10)


def test_eig_sign_convention(rng):
    A = _random_sym(rng, 7)
    _, vecs = jacobi_eigh(A)
    for v in vecs.T:
        j = int(np.argmax(np.abs(v)))
        assert v[j] > 0


def test_eig_sign_tie_goes_to_lowest_index():
    # eigenvector (1, -1)/sqrt2 has a tie in magnitude: the first entry decides
    _, vecs = jacobi_eigh(np.array([[1.0, -1.0], [-1.0, 1.0]]))
    assert vecs[0, 0] > 0 and vecs[1, 0] < 0


def test_eig_repeated_values_give_orthonormal_basis():
    vals, vecs = jacobi_eigh(np.eye(4) * 2.0)
    np.testing.assert_allclose(vals, 2.0)
    np.testing.assert_allclose(vecs.T @ vecs, np.eye(4), atol=1e-15)


def test_eig_rejects_asymmetric():
    with pytest.raises(InvalidInputError):
        sym_eig_topk([[1.0, 2.0], [0.0, 1.0]], 1)


def test_eig_rejects_non_square_and_bad_k(rng):
    with pytest.raises(InvalidInputError):
        check_symmetric(np.ones((2, 3)))
    with pytest.raises(InvalidSpecError):
        sym_eig_topk(np.eye(3), 4)


def test_eig_sweep_cap_raises(rng):
    with pytest.raises(NumericFailureError):
        jacobi_eigh(_random_sym(rng, 8), max_sweeps=1)


def test_eig_is_deterministic(rng):
    A = _random_sym(rng, 15)
    a = jacobi_eigh(A)
    b = jacobi_eigh(A.copy())
    assert a[0].tobytes() == b[0].tobytes() and a[1].tobytes() == b[1].tobytes()


def test_spectral_norm_matches_svd(rng):
    for shape in ((5, 3), (3, 7), (1, 4), (6, 6)):
        A = rng.standard_normal(shape)
        assert spectral_norm(A) == pytest.approx(np.linalg.norm(A, 2), rel=1e-9)
    assert spectral_norm(np.zeros((3, 2))) == 0.0


finite = st.floats(-1e3, 1e3, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.integers(1, 12), elements=finite),
       st.floats(0.2, 8.0), st.floats(0.01, 10.0))
def test_lp_norm_is_absolutely_homogeneous(v, p, c):
    assert lp_norm(c * v, p) == pytest.approx(c * lp_norm(v, p), rel=1e-9, abs=1e-300)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (5, 5), elements=st.floats(-10, 10)))
def test_eig_trace_is_preserved(B):
    A = B + B.T
    vals, _ = jacobi_eigh(A)
    assert vals.sum() == pytest.approx(np.trace(A), abs=1e-9 * (1 + np.abs(A).sum()))
