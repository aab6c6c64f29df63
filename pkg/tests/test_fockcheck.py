"""Truncated-operator oracle: identities that pin every derived constant."""

import numpy as np
import pytest

from qrobust.errors import DimensionError, PreconditionError
from qrobust.fockcheck import (COEFF_SHAPES, MONOMIALS, arbitrate_comm_factor,
                               build_mode_ops, check_ccr,
                               check_double_commutator,
                               check_generator_decomposition,
                               check_quadratic_identities, ladder,
                               random_hermitian_structured,
                               random_structured_P,
                               random_structured_coupling)
from qrobust.smallgain import COMM_FACTOR


def test_ladder_matrix_elements():
    a = ladder(5)
    num = a.conj().T @ a
    assert np.allclose(np.diag(num), [0, 1, 2, 3, 4])
    comm = a @ a.conj().T - num
    assert np.allclose(comm[:4, :4], np.eye(4))


def test_ccr_residuals():
    assert check_ccr(1, 30) <= 1e-12
    assert check_ccr(2, 20) <= 1e-12


def test_mode_ops_commute_across_modes():
    ops = build_mode_ops(2, 8)
    assert float(np.abs(ops.a @ ops.b - ops.b @ ops.a).max()) == 0.0


def test_double_commutator_frozen_values():
    e = np.array([[1.0 + 0.0j, 0.0j]])
    scalar, formula, res = check_double_commutator(
        np.eye(2, dtype=complex), e, 30)
    assert abs(scalar) < 1e-12 and abs(formula) < 1e-12 and res < 1e-12

    p = np.array([[2.0, 1.0], [1.0, 2.0]], dtype=complex)
    scalar, formula, res = check_double_commutator(p, e, 30)
    assert scalar == pytest.approx(2.0, abs=1e-12)
    assert formula == pytest.approx(1.0, abs=1e-12)
    assert res < 1e-12

    q = 0.3 + 0.4j
    p = np.array([[1.5, q], [np.conj(q), 1.5]])
    scalar, formula, res = check_double_commutator(p, e, 30)
    assert scalar == pytest.approx(2.0 * q, abs=1e-12)
    assert formula == pytest.approx(q, abs=1e-12)


def test_double_commutator_scalar_invariant_in_truncation():
    rng = np.random.default_rng(12)
    p = random_hermitian_structured(rng)
    e = rng.uniform(-1, 1, (1, 2)) + 1j * rng.uniform(-1, 1, (1, 2))
    values = [check_double_commutator(p, e, n)[0] for n in (20, 30, 40)]
    assert abs(values[0] - values[1]) <= 1e-10
    assert abs(values[1] - values[2]) <= 1e-10


def test_residual_monotone_on_fixed_window():
    # identities are exact on the kept window, so enlarging the space
    # while fixing the window cannot add truncation error; only BLAS
    # summation-order roundoff remains
    rng = np.random.default_rng(11)
    for _ in range(5):
        p = random_hermitian_structured(rng)
        e = rng.uniform(-1, 1, (1, 2)) + 1j * rng.uniform(-1, 1, (1, 2))
        m = random_hermitian_structured(rng)
        n_a = random_structured_coupling(rng)
        r_small = check_double_commutator(p, e, 20, drop=4)[2]
        r_big = check_double_commutator(p, e, 40, drop=24)[2]
        assert r_big <= r_small + 1e-14
        q_small = max(check_quadratic_identities(p, m, n_a, 20, drop=4))
        q_big = max(check_quadratic_identities(p, m, n_a, 40, drop=24))
        assert q_big <= q_small + 1e-14


def test_quadratic_identities_random_draws():
    rng = np.random.default_rng(4)
    for _ in range(10):
        p = random_hermitian_structured(rng)
        m = random_hermitian_structured(rng)
        n_a = random_structured_coupling(rng)
        r1, r2, r3 = check_quadratic_identities(p, m, n_a, 30)
        assert r1 <= 1e-8 and r2 <= 1e-8 and r3 <= 1e-8


def test_quadratic_identities_two_channel_coupling():
    rng = np.random.default_rng(6)
    p = random_hermitian_structured(rng)
    m = random_hermitian_structured(rng)
    n_a = random_structured_coupling(rng, m=2)
    r1, r2, r3 = check_quadratic_identities(p, m, n_a, 30)
    assert max(r1, r2, r3) <= 1e-8


def test_generator_decomposition_all_monomials():
    rng = np.random.default_rng(5)
    p = random_hermitian_structured(rng)
    e = rng.uniform(-1, 1, (1, 2)) + 1j * rng.uniform(-1, 1, (1, 2))
    for k, l in MONOMIALS:
        for shape in COEFF_SHAPES:
            assert check_generator_decomposition(k, l, shape, p, e, 16) <= 1e-7


def test_generator_decomposition_degree_zero_is_exact():
    rng = np.random.default_rng(8)
    p = random_hermitian_structured(rng)
    e = rng.uniform(-1, 1, (1, 2)) + 1j * rng.uniform(-1, 1, (1, 2))
    assert check_generator_decomposition(0, 0, "b_dag_b", p, e, 16) == 0.0


def test_generator_decomposition_validation():
    rng = np.random.default_rng(8)
    p = random_hermitian_structured(rng)
    e = np.array([[1.0 + 0.0j, 0.0j]])
    with pytest.raises(PreconditionError):
        check_generator_decomposition(2, 2, "I", p, e, 16)
    with pytest.raises(PreconditionError):
        check_generator_decomposition(1, 0, "nope", p, e, 16)
    with pytest.raises(PreconditionError):
        check_generator_decomposition(1, 0, "I", p, e, 12)


def test_structured_p_required():
    from qrobust.errors import ModelError
    e = np.array([[1.0 + 0.0j, 0.0j]])
    bad = np.array([[1.0, 0.5], [0.5, 2.0]], dtype=complex)  # diag breaks symmetry
    with pytest.raises(ModelError):
        check_double_commutator(bad, e, 30)
    with pytest.raises(DimensionError):
        check_double_commutator(np.eye(4, dtype=complex), e, 30)


def test_random_structured_p_is_positive_and_structured():
    from qrobust.model import structure_residual
    rng = np.random.default_rng(14)
    for _ in range(10):
        p = random_structured_P(rng)
        assert float(np.linalg.eigvalsh(p).min()) > 0
        assert structure_residual(p, 1) < 1e-14


def test_arbitrated_factor_matches_repo_constant():
    value = arbitrate_comm_factor(trials=50, n=30, seed=0)
    assert abs(value - COMM_FACTOR) <= 1e-8
