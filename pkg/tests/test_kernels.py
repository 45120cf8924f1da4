import numpy as np
import pytest
from hypothesis import given, strategies as st

from sparsepce import _kernels_py, kernels
from sparsepce.multi_index import generate_set
from sparsepce.qrupdate import IncrementalQR

compiled = pytest.importorskip("sparsepce._kernels")


def test_compiled_backend_selected():
    assert kernels.BACKEND == "compiled"


@given(st.integers(1, 50), st.integers(1, 6), st.integers(0, 12), st.integers(0, 2**32 - 1))
def test_legendre_table_backends_agree(rows, dims, deg, seed):
    x = np.random.default_rng(seed).uniform(-1, 1, (rows, dims))
    np.testing.assert_allclose(compiled.legendre_table(x, deg), _kernels_py.legendre_table(x, deg),
                               rtol=1e-14, atol=1e-14)


@pytest.mark.parametrize("dims,deg", [(1, 5), (3, 4), (6, 3)])
def test_tensor_columns_backends_agree(dims, deg):
    x = np.random.default_rng(dims).uniform(-1, 1, (40, dims))
    table = _kernels_py.legendre_table(x, deg)
    exps = np.array(generate_set("TD", dims, deg).indices, dtype=np.int64)
    np.testing.assert_allclose(compiled.tensor_columns(table, exps),
                               _kernels_py.tensor_columns(table, exps), rtol=1e-14, atol=1e-14)


def test_kernel_wrapper_validation():
    with pytest.raises(ValueError):
        kernels.legendre_table(np.zeros(3), 2)
    with pytest.raises(ValueError):
        kernels.legendre_table(np.zeros((3, 1)), -1)
    table = kernels.legendre_table(np.zeros((3, 2)), 2)
    with pytest.raises(ValueError):
        _kernels_py.tensor_columns(table, np.array([[3, 0]]))


@pytest.mark.parametrize("backend", ["compiled", "python"])
def test_givens_row_append(backend):
    mod = compiled if backend == "compiled" else _kernels_py
    rng = np.random.default_rng(3)
    m, n = 12, 5
    A = rng.standard_normal((m, n))
    b = rng.standard_normal(m)
    q0, r0 = np.linalg.qr(A)
    q = np.zeros((m + 1, n), order="F")
    q[:m] = q0
    r = r0.copy()
    z = q0.T @ b
    row = rng.standard_normal(n)
    mod.givens_append_row(q, r, z, row.copy(), 0.7, m, n)
    A2, b2 = np.vstack([A, row]), np.append(b, 0.7)
    np.testing.assert_allclose(q @ r, A2, atol=1e-13)
    np.testing.assert_allclose(q.T @ q, np.eye(n), atol=1e-13)
    np.testing.assert_allclose(np.linalg.solve(r, z), np.linalg.lstsq(A2, b2, rcond=None)[0], atol=1e-12)


def test_incremental_qr_matches_lstsq():
    rng = np.random.default_rng(9)
    D = rng.standard_normal((10, 3))
    b = rng.standard_normal(10)
    qr = IncrementalQR(D, b)
    for _ in range(6):
        rows, vals = rng.standard_normal((2, D.shape[1])), rng.standard_normal(2)
        qr.add_rows(rows, vals)
        D, b = np.vstack([D, rows]), np.append(b, vals)
        cols = rng.standard_normal((D.shape[0], 2))
        qr.add_columns(cols)
        D = np.hstack([D, cols])
    np.testing.assert_allclose(qr.q @ qr.r, D, atol=1e-12)
    np.testing.assert_allclose(qr.q.T @ qr.q, np.eye(qr.cols), atol=1e-12)
    np.testing.assert_allclose(qr.solve(), np.linalg.lstsq(D, b, rcond=None)[0], atol=1e-10)
    with pytest.raises(ValueError):
        qr.add_columns(rng.standard_normal((qr.rows, qr.rows)))


def test_incremental_qr_flags_dependent_column():
    A = np.random.default_rng(1).standard_normal((8, 2))
    qr = IncrementalQR(A, np.ones(8))
    qr.add_columns(A[:, :1] * 2.0)
    assert qr.stale
