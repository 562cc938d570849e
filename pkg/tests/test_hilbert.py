import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from nsselab import hilbert
from nsselab.errors import DimensionMismatchError, InvalidDimensionError


def test_ladder_action_dim4():
    a, ad, N = hilbert.ladder_ops(4)
    assert np.array_equal(a @ hilbert.basis(4, 0), np.zeros(4))
    np.testing.assert_allclose(ad @ hilbert.basis(4, 1), np.sqrt(2) * hilbert.basis(4, 2), atol=1e-15)
    np.testing.assert_allclose(N @ hilbert.basis(4, 3), 3 * hilbert.basis(4, 3), atol=1e-15)


def test_creation_kills_top_level():
    _, ad, _ = hilbert.ladder_ops(5)
    assert np.array_equal(ad @ hilbert.basis(5, 4), np.zeros(5))


def test_number_is_product():
    a, ad, N = hilbert.ladder_ops(7)
    assert abs(N - ad @ a).max() < 1e-15
    np.testing.assert_array_equal(N.diagonal().real, np.arange(7))


@pytest.mark.parametrize("dim", [0, 1, -3, 2.5])
def test_invalid_dimension(dim):
    with pytest.raises(InvalidDimensionError):
        hilbert.ladder_ops(dim)
    with pytest.raises(InvalidDimensionError):
        hilbert.quadratures(dim)


def test_quadrature_identity_interior_and_boundary():
    Q, P = hilbert.quadratures(6)
    I = hilbert.identity(6)
    M = 0.5 * (Q @ Q + P @ P - I)
    np.testing.assert_allclose(M @ hilbert.basis(6, 2), 2 * hilbert.basis(6, 2), atol=1e-12)
    assert np.linalg.norm(M @ hilbert.basis(6, 5) - 5 * hilbert.basis(6, 5)) > 1e-3
    for j in range(4):
        np.testing.assert_allclose(M @ hilbert.basis(6, j), j * hilbert.basis(6, j), atol=1e-12)


def test_canonical_commutator():
    Q, P = hilbert.quadratures(6)
    e1 = hilbert.basis(6, 1)
    np.testing.assert_allclose((Q @ P - P @ Q) @ e1, 1j * e1, atol=1e-12)


def test_quadratures_hermitian():
    Q, P = hilbert.quadratures(9)
    assert hilbert.is_hermitian(Q) and hilbert.is_hermitian(P)


def test_adjoint_examples():
    a, ad, N = hilbert.ladder_ops(5)
    assert abs(hilbert.adjoint(a) - ad).max() == 0
    H = sp.csr_matrix(np.arange(25).reshape(5, 5) * (1 + 2j))
    assert abs(hilbert.adjoint(hilbert.adjoint(H)) - H).max() == 0
    assert abs(hilbert.adjoint(1j * N) + 1j * N).max() == 0


def test_operator_kind():
    a, ad, N = hilbert.ladder_ops(5)
    assert hilbert.operator_kind(N) == "hermitian"
    assert hilbert.operator_kind(1j * N) == "anti-hermitian"
    assert hilbert.operator_kind(a) == "general"


def test_apply_examples():
    _, _, N = hilbert.ladder_ops(4)
    a = hilbert.ladder_ops(4)[0]
    x = (hilbert.basis(4, 0) + hilbert.basis(4, 3)) / np.sqrt(2)
    np.testing.assert_allclose(hilbert.apply(N, x), 3 / np.sqrt(2) * hilbert.basis(4, 3), atol=1e-15)
    np.testing.assert_array_equal(hilbert.apply(hilbert.identity(4), x), x)
    assert np.array_equal(hilbert.apply(a @ a, hilbert.basis(4, 1)), np.zeros(4))


def test_apply_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        hilbert.apply(hilbert.identity(4), np.ones(5))


def test_basis_out_of_range():
    with pytest.raises(InvalidDimensionError):
        hilbert.basis(4, 4)


def test_bandwidth():
    a, ad, N = hilbert.ladder_ops(8)
    assert hilbert.bandwidth(N) == 0
    assert hilbert.bandwidth(a) == 1
    assert hilbert.bandwidth(ad @ ad) == 2
    assert hilbert.bandwidth(hilbert.zero(8)) == 0


def _vec(draw, n, dim):
    re = draw(st.lists(st.floats(-1, 1), min_size=n, max_size=n))
    im = draw(st.lists(st.floats(-1, 1), min_size=n, max_size=n))
    x = np.zeros(dim, dtype=complex)
    x[:n] = np.array(re) + 1j * np.array(im)
    return x


@st.composite
def interior_pair(draw):
    dim = draw(st.integers(2, 30))
    return dim, _vec(draw, dim - 1, dim), _vec(draw, dim - 1, dim)


@settings(max_examples=60, deadline=None)
@given(interior_pair())
def test_adjointness_away_from_boundary(case):
    dim, x, y = case
    a, ad, _ = hilbert.ladder_ops(dim)
    assert abs(np.vdot(ad @ x, y) - np.vdot(x, a @ y)) <= 1e-12 * (1 + np.linalg.norm(x) * np.linalg.norm(y) * dim)


@settings(max_examples=60, deadline=None)
@given(interior_pair())
def test_commutator_away_from_boundary(case):
    dim, x, _ = case
    a, ad, _ = hilbert.ladder_ops(dim)
    np.testing.assert_allclose((a @ ad - ad @ a) @ x, x, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(interior_pair(), st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_apply_is_linear(case, al, be):
    dim, x, y = case
    a, ad, N = hilbert.ladder_ops(dim)
    A = a + 2 * ad @ ad + 0.5j * N
    lhs = hilbert.apply(A, al * x + be * y)
    rhs = al * hilbert.apply(A, x) + be * hilbert.apply(A, y)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(rhs)))
