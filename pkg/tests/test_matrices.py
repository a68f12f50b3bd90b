import json
import math
from fractions import Fraction

import numpy as np
import pytest

from stablecap.capacity import capacity
from stablecap.constants import G
from stablecap.errors import ArgumentError, CapacityGuardError, ValidationError
from stablecap.matrices import (
    PsdTuple,
    det_polynomial,
    det_polynomial_raw,
    enumerate_lambda,
    is_lambda_matrix,
    lambda_first_rows,
    lambda_record,
    mixed_discriminant,
    ones_matrix,
    permanent,
    permanent_naive,
    prod_polynomial,
    read_matrix_csv,
    sinkhorn,
    special_matrix_D,
    write_matrix_csv,
)
from stablecap.poly import HomPoly, is_doubly_stochastic, mixed_partial_at_zero

from conftest import random_psd_tuple

F = Fraction


def test_prod_examples():
    assert prod_polynomial(np.eye(2)) == HomPoly(2, 2, {(1, 1): 1.0})
    assert dict(prod_polynomial(ones_matrix(2, exact=True)).terms) == {(2, 0): F(1, 4), (1, 1): F(1, 2), (0, 2): F(1, 4)}
    D = special_matrix_D(3, 2, exact=True)
    a, b, c = F(1, 4), F(1, 2), F(1, 2)
    expected = HomPoly.linear_form([a, a, b]) ** 2 * HomPoly.linear_form([c, c, 0])
    assert prod_polynomial(D) == expected


def test_prod_guard():
    with pytest.raises(CapacityGuardError):
        prod_polynomial(np.ones((11, 11)))


def test_prod_rejects_negative():
    with pytest.raises(ValidationError):
        prod_polynomial([[1, -1], [0, 1]])


def test_det_examples():
    T = PsdTuple((np.diag([1.0, 0.0]), np.diag([0.0, 1.0])))
    assert det_polynomial(T) == HomPoly(2, 2, {(1, 1): 1.0})
    half = [[F(1, 2), 0], [0, F(1, 2)]]
    p = det_polynomial(PsdTuple((half, half)))
    assert dict(p.terms) == {(2, 0): F(1, 4), (1, 1): F(1, 2), (0, 2): F(1, 4)}


def test_det_rejects_non_psd():
    with pytest.raises(ValidationError):
        PsdTuple((np.diag([1.0, -1.0]), np.eye(2)))
    with pytest.raises(ValidationError):
        PsdTuple((np.array([[1.0, 2.0], [0.0, 1.0]]), np.eye(2)))


def test_det_guard(rng):
    with pytest.raises(CapacityGuardError):
        det_polynomial(random_psd_tuple(rng, 7))


def test_det_expansion_matches_leibniz_and_clamp_band(rng):
    for _ in range(15):
        n = int(rng.integers(2, 5))
        T = random_psd_tuple(rng, n, rank=int(rng.integers(1, n + 1)))
        raw = det_polynomial_raw(T)
        scale = max(abs(c) for c in raw.values())
        # nonnegativity of the true coefficients, up to rounding
        assert min(raw.values()) >= -1e-12 * scale
        p = det_polynomial(T)
        for e, c in raw.items():
            assert p.coefficient(e) == pytest.approx(c, abs=1e-10 * scale)


def test_det_exact_integer_rank(rng):
    for _ in range(10):
        n = 3
        mats = []
        for _ in range(n):
            B = rng.integers(-2, 3, (n, 1)).tolist()
            mats.append([[B[i][0] * B[j][0] for j in range(n)] for i in range(n)])
        p = det_polynomial(PsdTuple(tuple(mats)))
        assert p.is_exact
        assert all(c >= 0 for c in p.terms.values())


def test_det_evaluates_determinant(rng):
    T = random_psd_tuple(rng, 4)
    p = det_polynomial(T)
    for _ in range(5):
        t = rng.uniform(0.1, 2, 4)
        direct = np.linalg.det(sum(ti * A for ti, A in zip(t, T.arrays())))
        assert p(t) == pytest.approx(direct, rel=1e-9)


@pytest.mark.parametrize(
    "A, expected",
    [
        (np.eye(3), 1.0),
        (ones_matrix(3), 6 / 27),
        (special_matrix_D(3, 2), 0.25),
    ],
)
def test_permanent_examples(A, expected):
    assert permanent(A) == pytest.approx(expected, rel=1e-12)


def test_permanent_exact():
    assert permanent(ones_matrix(3, exact=True)) == F(2, 9)
    assert permanent([[1, 2], [3, 4]]) == 10


def test_ryser_vs_naive(rng):
    for _ in range(100):
        n = int(rng.integers(1, 9))
        A = rng.uniform(0, 1, (n, n)) * (rng.random((n, n)) < 0.8)
        naive = permanent_naive(A)
        assert permanent(A) == pytest.approx(naive, rel=1e-9, abs=1e-300)


def test_permanent_nonneg_and_monotone(rng):
    for _ in range(30):
        A = rng.uniform(0, 1, (5, 5))
        B = A + rng.uniform(0, 0.5, (5, 5)) * (rng.random((5, 5)) < 0.3)
        assert 0 <= permanent(A) <= permanent(B)


@pytest.mark.parametrize(
    "mats, expected",
    [
        ((np.diag([1.0, 0.0]), np.diag([0.0, 1.0])), 1.0),
        ((np.eye(2) / 2, np.eye(2) / 2), 0.5),
    ],
)
def test_mixed_discriminant_examples(mats, expected):
    assert mixed_discriminant(PsdTuple(mats)) == pytest.approx(expected)


def test_mixed_discriminant_exact():
    half = [[F(1, 2), 0], [0, F(1, 2)]]
    assert mixed_discriminant(PsdTuple((half, half))) == F(1, 2)


def test_mixed_discriminant_vs_expansion(rng):
    for _ in range(30):
        n = int(rng.integers(2, 5))
        T = random_psd_tuple(rng, n)
        md = mixed_discriminant(T)
        assert float(mixed_partial_at_zero(det_polynomial(T))) == pytest.approx(md, rel=1e-8)
        assert det_polynomial_raw(T).get((1,) * n, 0.0) == pytest.approx(md, rel=1e-8)


def test_diagonal_tuple_is_permanent(rng):
    for _ in range(20):
        n = int(rng.integers(1, 6))
        A = rng.uniform(0, 1, (n, n))
        assert mixed_discriminant(PsdTuple.diagonal(A)) == pytest.approx(permanent(A), rel=1e-9)


def test_psd_tuple_json_roundtrip(rng):
    T = random_psd_tuple(rng, 3)
    U = PsdTuple.from_json_obj(json.loads(json.dumps(T.to_json_obj())))
    assert all(np.array_equal(a, b) for a, b in zip(T.arrays(), U.arrays()))


def test_psd_doubly_stochastic():
    assert PsdTuple((np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))).is_doubly_stochastic()
    assert not PsdTuple((np.eye(2), np.eye(2))).is_doubly_stochastic()


def test_lambda_small_sets():
    got = [M.tolist() for M in enumerate_lambda(2, 2)]
    assert sorted(got) == sorted([[[2, 0], [0, 2]], [[0, 2], [2, 0]], [[1, 1], [1, 1]]])
    assert len(got) == 3
    for n in range(1, 5):
        assert sum(1 for _ in enumerate_lambda(1, n)) == math.factorial(n)


def test_lambda_lexicographic_and_distinct():
    mats = [tuple(map(tuple, M.tolist())) for M in enumerate_lambda(2, 4)]
    assert mats == sorted(mats)
    assert len(set(mats)) == len(mats)


def test_lambda_shards_cover():
    full = [M.tolist() for M in enumerate_lambda(2, 4)]
    sharded = [M.tolist() for r in lambda_first_rows(2, 4) for M in enumerate_lambda(2, 4, first_row=r)]
    assert sorted(full) == sorted(sharded)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_lambda_two_min_permanent(n):
    assert min(permanent(M.tolist()) for M in enumerate_lambda(2, n)) == 2


def test_lambda_members_are_scaled_doubly_stochastic():
    for M in enumerate_lambda(2, 3):
        assert is_lambda_matrix(M, 2)
        p = prod_polynomial([[F(int(v), 2) for v in r] for r in M.tolist()])
        assert is_doubly_stochastic(p)
        assert capacity(prod_polynomial(M)).value == pytest.approx(2**3, rel=1e-6)


def test_lambda_guard():
    with pytest.raises(CapacityGuardError):
        next(enumerate_lambda(5, 3))
    with pytest.raises(CapacityGuardError):
        next(enumerate_lambda(2, 6))
    assert next(enumerate_lambda(2, 6, n_max=6)).shape == (6, 6)


@pytest.mark.parametrize("n,k", [(n, k) for n in range(3, 7) for k in range(2, n)])
def test_special_matrix_D(n, k):
    D = special_matrix_D(n, k, exact=True)
    for i in range(n):
        assert sum(D[i]) == 1 and sum(D[r][i] for r in range(n)) == 1
    expected = G(k) * F(math.factorial(n - 1), (n - 1) ** (n - 1))
    assert permanent(D) == expected


def test_special_matrix_D_rows():
    D = special_matrix_D(3, 2, exact=True)
    assert D == [[F(1, 4), F(1, 4), F(1, 2)], [F(1, 4), F(1, 4), F(1, 2)], [F(1, 2), F(1, 2), 0]]
    with pytest.raises(ArgumentError):
        special_matrix_D(3, 3)


def test_sinkhorn(rng):
    A = sinkhorn(rng.uniform(0.1, 1, (5, 5)))
    assert np.allclose(A.sum(axis=0), 1, atol=1e-12) and np.allclose(A.sum(axis=1), 1, atol=1e-12)


def test_csv_roundtrip(tmp_path, rng):
    A = rng.uniform(0, 1, (4, 4))
    path = tmp_path / "a.csv"
    write_matrix_csv(A, path)
    assert np.array_equal(read_matrix_csv(path), A)
    (tmp_path / "bad.csv").write_text("1,2\n3\n")
    with pytest.raises(ValidationError):
        read_matrix_csv(tmp_path / "bad.csv")


def test_lambda_record():
    rec = json.loads(lambda_record(np.eye(2, dtype=int), 1))
    assert rec == {"matrix": [[1, 0], [0, 1]], "permanent": 1.0}
