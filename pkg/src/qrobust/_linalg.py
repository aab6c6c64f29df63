"""Dense linear-algebra workhorses shared by the certification modules.

Everything here operates on plain complex ndarrays.  The Riccati solver
is the classical invariant-subspace construction: an ordered complex
Schur factorization of the 4n x 4n matrix [[A, R], [-Q, -A^dagger]]
selects the stable subspace [U; V], and P = V U^{-1} is the stabilizing
solution of A^dagger P + P A + P R P + Q = 0.  The H-infinity norm uses
the standard Hamiltonian bisection: for g > 0, the matrix
[[A, B B^dagger / g], [-C^dagger C / g, -A^dagger]] has an eigenvalue on
the imaginary axis iff the transfer-function norm is at least g.
"""

import numpy as np
import scipy.linalg as sla

from .errors import InfeasibleError, NumericError, PreconditionError

__all__ = [
    "hermitian_part",
    "spectral_abscissa",
    "lyap",
    "riccati_stabilizing",
    "transfer_scalar",
    "hinf_bisect",
]

# absolute tolerance on eigenvalue real parts in the bisection axis test
AXIS_TOL = 1e-8
# relative residual allowed for a Riccati solve, scaled by max(1, |A|_max)
RICCATI_RTOL = 1e-8


def hermitian_part(x):
    return 0.5 * (x + x.conj().T)


def spectral_abscissa(a):
    try:
        eigs = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigenvalue computation failed: {exc}") from exc
    return float(eigs.real.max())


def lyap(a, q, rtol=1e-10):
    """Solve a X + X a^dagger + q = 0 and verify the residual.

    The residual check is entrywise, relative to |q|_max.
    """
    x = sla.solve_continuous_lyapunov(a, -np.asarray(q, dtype=complex))
    scale = max(float(np.abs(q).max()), 1e-300)
    res = float(np.abs(a @ x + x @ a.conj().T + q).max())
    if res > rtol * scale:
        raise NumericError(
            f"Lyapunov solve residual {res:.3e} exceeds {rtol:.0e} x |Q|_max; "
            "the drift is likely too close to instability")
    return x


def riccati_stabilizing(a, r, q):
    """Stabilizing solution of A^dagger P + P A + P R P + Q = 0.

    Returns (P, residual) with residual the max-entry magnitude of the
    equation evaluated at P.  Raises InfeasibleError when the stable
    invariant subspace does not exist or cannot be inverted, which is
    how an infeasible shift manifests.
    """
    n = a.shape[0]
    z = np.block([[a, r], [-q, -a.conj().T]])
    try:
        _, vecs, sdim = sla.schur(z, output="complex", sort="lhp")
    except Exception as exc:  # scipy raises LinAlgError or SqrtmError-likes
        raise NumericError(f"Schur factorization failed: {exc}") from exc
    if sdim != n:
        raise InfeasibleError(
            f"no stabilizing solution: stable subspace has dimension {sdim}, expected {n}")
    u = vecs[:n, :n]
    v = vecs[n:, :n]
    if np.linalg.cond(u) > 1e12:
        raise InfeasibleError("stable subspace is numerically singular; no stabilizing solution")
    p = hermitian_part(v @ np.linalg.inv(u))
    residual = float(np.abs(a.conj().T @ p + p @ a + p @ r @ p + q).max())
    if residual > RICCATI_RTOL * max(1.0, float(np.abs(a).max())):
        raise NumericError(f"Riccati residual {residual:.3e} exceeds tolerance")
    return p, residual


def transfer_scalar(a, b, c, omegas):
    """H(i w) = C (i w I - A)^{-1} B for a SISO realization, vectorized.

    Uses the eigendecomposition residue form, one solve per plant rather
    than one per frequency; intended for dense grid oracles.
    """
    omegas = np.asarray(omegas, dtype=float)
    lam, s = np.linalg.eig(a)
    cs = (np.asarray(c) @ s).ravel()
    sb = np.linalg.solve(s, np.asarray(b)).ravel()
    weights = cs * sb
    # H(iw) = sum_k weights_k / (iw - lam_k)
    return (weights[None, :] / (1j * omegas[:, None] - lam[None, :])).sum(axis=1)


def _axis_crossing(a, b, c, g):
    """True iff the norm of C (sI - A)^{-1} B is at least g."""
    ham = np.block([
        [a, (b @ b.conj().T) / g],
        [-(c.conj().T @ c) / g, -a.conj().T],
    ])
    eigs = np.linalg.eigvals(ham)
    return bool(np.abs(eigs.real).min() < AXIS_TOL)


def hinf_bisect(a, b, c, rel_tol=1e-9, grid_points=512):
    """Supremum over frequency of |C (iw I - A)^{-1} B|, A Hurwitz.

    A log grid over [1e-4, 1e4] x |A|_2 (both frequency signs, plus
    w = 0; the magnitude response of a complex-coefficient realization
    is not an even function) provides an achieved lower bracket; the
    upper bracket is grown until the Hamiltonian axis test clears, then
    bisected to rel_tol.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex).reshape(a.shape[0], -1)
    c = np.asarray(c, dtype=complex).reshape(-1, a.shape[0])
    if spectral_abscissa(a) >= 0:
        raise PreconditionError("transfer-function norm needs a Hurwitz drift")
    scale = max(float(np.linalg.norm(a, 2)), 1e-12)
    mags = np.geomspace(1e-4 * scale, 1e4 * scale, grid_points)
    grid = np.concatenate([-mags[::-1], [0.0], mags])
    lo = float(np.abs(transfer_scalar(a, b, c, grid)).max())
    if lo == 0.0:
        # a rational response vanishing on the whole grid is identically zero
        return 0.0
    hi = 10.0 * lo
    for _ in range(60):
        if not _axis_crossing(a, b, c, hi):
            break
        hi *= 10.0
    else:
        raise NumericError("transfer-function norm bracket failed to close")
    for _ in range(200):
        if hi - lo <= rel_tol * lo:
            break
        mid = 0.5 * (lo + hi)
        if _axis_crossing(a, b, c, mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
