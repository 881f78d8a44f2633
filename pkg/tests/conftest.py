import numpy as np
import pytest
from hypothesis import strategies as st

from ldpc_prune.protograph import BaseMatrix, load_base_matrix, rescale


@pytest.fixture(scope="session")
def h11n_r12():
    return load_base_matrix("11n_z81_r12.bm")


@pytest.fixture(scope="session")
def h11n_r23():
    return load_base_matrix("11n_z81_r23.bm")


@pytest.fixture(scope="session")
def h16e_r12_z40():
    return rescale(load_base_matrix("16e_r12.bm"), 40)


@pytest.fixture(scope="session")
def fig1():
    return load_base_matrix("fig1_z4.bm")


@st.composite
def base_matrices(draw, max_m=5, max_n=9, max_z=7):
    """Random valid base matrices (no empty rows or columns)."""
    m = draw(st.integers(1, max_m))
    n = draw(st.integers(m + 1, max(m + 1, max_n)))
    z = draw(st.integers(1, max_z))
    flat = draw(st.lists(st.integers(-1, z - 1), min_size=m * n, max_size=m * n))
    h = np.array(flat).reshape(m, n)
    # guarantee a non-negative entry in every row and column
    for i in range(m):
        if (h[i] < 0).all():
            h[i, draw(st.integers(0, n - 1))] = draw(st.integers(0, z - 1))
    for j in range(n):
        if (h[:, j] < 0).all():
            h[draw(st.integers(0, m - 1)), j] = draw(st.integers(0, z - 1))
    return BaseMatrix(h, z)
