import numpy as np
import pytest

from retrial_qbd import ModelParams, SingularSystem, SizeBudgetExceeded, build_blocks, embed_full, rate_rows
from retrial_qbd.oracle import (
    STATE_BUDGET,
    boundary_solve,
    dense_rate_matrix,
    truncated_generator,
    truncated_generator_solve,
)
from retrial_qbd.stationary import total_variation


def test_single_step_is_plain_inverse(table_params):
    for n in (1, 3, 20):
        b = build_blocks(table_params, n)
        want = -b.q0 @ np.linalg.inv(b.q1)
        np.testing.assert_allclose(dense_rate_matrix(table_params, n, 1), want, rtol=1e-13, atol=1e-15)


def test_only_top_two_rows_nonzero(table_params):
    D = dense_rate_matrix(table_params, 2, 16)
    assert not D[: table_params.c - 1].any()
    assert D[-2:].min() > 0


def test_monotone_in_depth(table_params):
    prev = dense_rate_matrix(table_params, 1, 1)
    for k in (2, 4, 8, 16, 32):
        cur = dense_rate_matrix(table_params, 1, k)
        assert np.all(cur >= prev - 1e-15)
        prev = cur


def test_exit_diagonal_survives_heavy_load():
    # slow retrials under heavy load: the rows of R(1) reach ~77 and the
    # directly summed diagonal cancels to garbage
    p = ModelParams(6, 1.5, 25.0, 0.1, 5.0)
    rows = rate_rows(p, 1)
    exit_ = dense_rate_matrix(p, 1, rows.iterations)
    direct = dense_rate_matrix(p, 1, rows.iterations, diagonal="direct")
    assert np.abs(exit_ - embed_full(rows)).max() <= 1e-10
    assert np.abs(direct - embed_full(rows)).max() > 1.0


def test_bad_arguments(table_params):
    with pytest.raises(ValueError):
        dense_rate_matrix(table_params, 0, 1)
    with pytest.raises(ValueError):
        dense_rate_matrix(table_params, 1, 1, diagonal="other")


def test_boundary_null_vector(table_params):
    R1 = embed_full(rate_rows(table_params, 1))
    b = boundary_solve(table_params, R1)
    A = build_blocks(table_params, 0).q1 + R1 @ build_blocks(table_params, 1).q2
    assert np.abs(b.x @ A).max() <= 1e-12
    assert b.x.min() > 0
    assert b.x.sum() == pytest.approx(1.0)


def test_boundary_without_null_vector(table_params):
    # the unreturned flow makes the system nonsingular
    with pytest.raises(SingularSystem):
        boundary_solve(table_params, np.zeros((table_params.c + 1,) * 2))


def test_truncated_generator_rows(table_params):
    Q = truncated_generator(table_params, 30)
    assert Q.shape == (31 * 6, 31 * 6)
    np.testing.assert_allclose(np.asarray(Q.sum(axis=1)).ravel(), 0.0, atol=1e-12)
    off = Q - np.diag(Q.diagonal())
    assert np.asarray(off).min() >= 0


def test_truncated_solve_is_stable_in_N(table_params):
    a = truncated_generator_solve(table_params, 60)
    b = truncated_generator_solve(table_params, 90)
    assert total_variation(a.pi, b.pi[:61]) <= 1e-9


def test_state_budget():
    p = ModelParams.from_rho(100, 0.5, 4.0, 1.0, 1.0)
    N = STATE_BUDGET // 101 + 1
    with pytest.raises(SizeBudgetExceeded):
        truncated_generator_solve(p, N)
