from __future__ import annotations

import numpy as np
import pytest

from qrecone import divdiff
from qrecone.divdiff_backend import BACKEND_ENV, resolve_divdiff_backend


def _cubic(lam):
    return lam**3, 3 * lam**2, 6 * lam


def test_first_table_distinct_and_degenerate():
    lam = np.array([1.0, 1.0, 3.0])
    f, df, _ = _cubic(lam)
    table = divdiff.first_divided_differences(lam, f, df)
    assert table[0, 1] == pytest.approx(3.0)
    assert table[0, 2] == pytest.approx((27.0 - 1.0) / 2.0)
    np.testing.assert_allclose(table, table.T)


def test_second_table_of_cubic_is_sum_of_points():
    lam = np.array([0.5, 0.5 + 1e-9, 2.0, 4.0])
    f, df, d2f = _cubic(lam)
    table = divdiff.second_divided_differences(lam, f, df, d2f)
    expected = lam[:, None, None] + lam[None, :, None] + lam[None, None, :]
    np.testing.assert_allclose(table, expected, rtol=1e-6)


def test_python_backend_by_name_and_environment(monkeypatch):
    assert resolve_divdiff_backend("python")[1] == "python"
    monkeypatch.setenv(BACKEND_ENV, "python")
    assert resolve_divdiff_backend()[1] == "python"


def test_unknown_backend_is_rejected():
    with pytest.raises(ValueError):
        resolve_divdiff_backend("fortran")


def test_cython_backend_agrees_with_python():
    try:
        kernels, name = resolve_divdiff_backend("cython")
    except RuntimeError:
        pytest.skip("compiled divided-difference kernels are not built")
    assert name == "cython"
    lam = np.array([0.2, 0.7, 0.7, 5.0])
    f, df, d2f = np.log(lam), 1 / lam, -1 / lam**2
    np.testing.assert_allclose(
        kernels.second_divided_differences(lam, f, df, d2f),
        divdiff.second_divided_differences(lam, f, df, d2f),
        rtol=1e-14,
    )
