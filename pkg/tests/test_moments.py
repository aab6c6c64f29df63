"""Closed-loop second moments against the certified bound."""

import numpy as np
import pytest

from qrobust.errors import DimensionError, ModelError, PreconditionError
from qrobust.model import validate_model
from qrobust.moments import (build_closed_loop, integrate_moments,
                             scalar_damping_rate, steady_state_moments,
                             vacuum_state)
from qrobust.opa import OpaParams, build_opa_model

FLAGSHIP = OpaParams(chi=0.1, kappa_a=2.0, kappa_b=4.0, abar=1.0, bbar=1.0)

# hand-derived closed-loop matrices for the flagship parameters
FLAGSHIP_A_CL = np.array([
    [-1.0, -0.1, -0.2, 0.0],
    [-0.1, -1.0, 0.0, -0.2],
    [0.2, 0.0, -2.0, 0.0],
    [0.0, 0.2, 0.0, -2.0],
])
FLAGSHIP_D = np.diag([2.0, 0.0, 4.0, 0.0])


def flagship_loop():
    model, g, _ = build_opa_model(FLAGSHIP)
    return build_closed_loop(model, g)


def decoupled_model(kappa_a=2.0, kappa_b=4.0):
    return validate_model(np.zeros((2, 2)), np.sqrt(kappa_a) * np.eye(2),
                          np.sqrt(kappa_b) * np.eye(2),
                          np.array([[1.0 + 0.0j, 0.0j]]))


def test_scalar_damping_rate():
    assert scalar_damping_rate(np.sqrt(4.0) * np.eye(2)) == pytest.approx(4.0)
    with pytest.raises(DimensionError):
        scalar_damping_rate(np.ones((3, 2)))


def test_scalar_damping_rate_rejects_nonpositive():
    # swap-type coupling has |alpha|^2 - |beta|^2 = -1
    with pytest.raises(ModelError):
        scalar_damping_rate(np.array([[0.0, 1.0], [1.0, 0.0]]))


def test_flagship_closed_loop_matrices():
    sys = flagship_loop()
    assert np.allclose(sys.A_cl, FLAGSHIP_A_CL, atol=1e-14)
    assert np.allclose(sys.D, FLAGSHIP_D, atol=1e-14)
    assert sys.n_a == 1 and sys.n_b == 1


def test_steady_state_flagship():
    sys = flagship_loop()
    st = steady_state_moments(sys)
    x = st.X
    assert float(np.abs(x - x.conj().T).max()) < 1e-12
    # residual of the moment equation itself
    lhs = sys.A_cl @ x + x @ sys.A_cl.conj().T + sys.D
    assert float(np.abs(lhs).max()) < 1e-12
    assert st.ms_value > 1.0  # squeezing adds photons above vacuum
    assert st.ms_value < 1.1


def test_vacuum_state_counts_modes():
    sys = flagship_loop()
    x0 = vacuum_state(sys)
    assert x0.shape == (4, 4)
    # plant-sector diagonal holds one unit per mode, conjugate slots empty
    assert np.allclose(np.diagonal(x0).real, [1.0, 0.0, 1.0, 0.0])
    assert float(np.abs(x0 - np.diag(np.diagonal(x0))).max()) == 0.0


def test_uncoupled_vacuum_is_exact_steady_state():
    sys = build_closed_loop(decoupled_model(), 0.0)
    st = steady_state_moments(sys)
    assert abs(st.ms_value - 1.0) <= 1e-9


def test_unstable_loop_rejected():
    # weak coupling: the damped second mode cannot rescue the plant
    model, g, _ = build_opa_model(
        OpaParams(chi=1.2, kappa_a=2.0, kappa_b=4.0, abar=0.01, bbar=1.0))
    sys = build_closed_loop(model, g)
    with pytest.raises(PreconditionError, match="diverge"):
        steady_state_moments(sys)


def test_build_closed_loop_needs_single_uncertain_mode():
    model, g, _ = build_opa_model(FLAGSHIP)
    big = validate_model(np.zeros((2, 2)), np.sqrt(2.0) * np.eye(2),
                         np.sqrt(3.0) * np.eye(4),
                         np.array([[1.0 + 0.0j, 0.0j]]), n_b=2)
    with pytest.raises(DimensionError):
        build_closed_loop(big, g)


def test_trajectory_converges_to_steady_state():
    sys = flagship_loop()
    target = steady_state_moments(sys).X
    traj = integrate_moments(sys, 20.0)
    assert not traj.diverged
    assert float(np.abs(traj.X_final - target).max()) < 1e-8
    assert traj.ms_values[-1] == pytest.approx(
        steady_state_moments(sys).ms_value, abs=1e-8)
    assert traj.t[0] == 0.0
    assert traj.t[-1] == pytest.approx(20.0)


def test_trajectory_flags_divergence():
    model, g, _ = build_opa_model(
        OpaParams(chi=1.2, kappa_a=2.0, kappa_b=4.0, abar=0.01, bbar=1.0))
    sys = build_closed_loop(model, g)
    traj = integrate_moments(sys, 400.0, dt=0.01)
    assert traj.diverged
    assert traj.ms_values[-1] == np.inf


def test_trajectory_monotone_from_vacuum_flagship():
    sys = flagship_loop()
    traj = integrate_moments(sys, 10.0)
    diffs = np.diff(traj.ms_values)
    assert (diffs >= -1e-12).all()
