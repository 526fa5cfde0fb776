"""Gramians, H2 norms, and L-infinity peak gain.

Conventions
-----------
The controllability Gramian Theta is the solution of the Lyapunov
equation A Theta + Theta A* + B B* = 0 for stable A.  Under this
normalization, for a real system

    trace(C Theta C*) = (1/pi) * integral_0^inf ||G(jw)||_F^2 dw

and for a complex system the matching identity uses (1/2pi) times the
two-sided integral.  Every norm in this package uses the same scaling, so
identities like gamma_0 = trace(C Theta C*) hold without stray constants.

Systems with eigenvalues in both half-planes (no imaginary-axis poles)
still have a well-defined frequency-domain Gramian; it is computed by a
Schur-based stable/antistable separation, where the antistable block
solves the sign-flipped Lyapunov equation.  The peak-gain routine follows
the quadratically convergent scheme of Bruinsma and Steinbuch (1990),
locating candidate frequencies from purely imaginary eigenvalues of a
Hamiltonian matrix.
"""

from __future__ import annotations

import dataclasses
import math
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

from .errors import (
    EmptyGrid,
    IllConditionedLyapunov,
    NonzeroFeedthrough,
    SingularResolvent,
)
from .lti import StateSpace, eval_tf, freq_sweep, is_strictly_stable, series_sub

_trapezoid = getattr(np, "trapezoid", None) or np.trapz

__all__ = [
    "GramianResult",
    "PeakGain",
    "ErrorEstimate",
    "controllability_gramian",
    "h2_norm_sq",
    "peak_gain",
    "error_norm",
    "psd_factor",
]

#: Accepted Lyapunov solves must satisfy residual <= this times ||B B*||_F.
LYAPUNOV_RESIDUAL_RTOL = 1e-8

#: Hamiltonian eigenvalues count as purely imaginary when
#: |Re| <= this * (1 + |eig|).
_HAM_IMAG_RTOL = 1e-8


@dataclasses.dataclass(frozen=True, eq=False)
class GramianResult:
    """Controllability Gramian with its solve-quality certificate.

    Attributes
    ----------
    theta : numpy.ndarray
        Hermitian positive-semidefinite n x n Gramian.
    residual : float
        Frobenius norm of the defect of the equation(s) actually solved.
        For stable systems this is ||A Theta + Theta A* + B B*||_F; for
        systems needing stable/antistable separation it is the largest
        defect among the per-part Lyapunov solves.
    """

    theta: np.ndarray
    residual: float


class PeakGain(NamedTuple):
    """Largest singular value of the frequency response and where it occurs.

    ``omega_star = math.inf`` is the sentinel for a supremum attained only
    in the limit w -> inf, in which case ``gain`` is the largest singular
    value of the feedthrough D.
    """

    omega_star: float
    gain: float


class ErrorEstimate(NamedTuple):
    """Result of :func:`error_norm`.

    ``approximate`` is True when the value came from the frequency-grid
    quadrature fallback rather than an exact Gramian computation.
    """

    value: float
    approximate: bool


def psd_factor(theta: np.ndarray) -> np.ndarray:
    """Factor a (numerically) PSD Hermitian matrix as L with theta = L L*.

    Eigenvalues that dip slightly negative from roundoff are clipped to
    zero, so the factor is always well defined for Gramian-quality inputs.
    """
    if theta.shape[0] == 0:
        return theta.copy()
    lam, V = np.linalg.eigh(theta)
    lam = np.clip(lam, 0.0, None)
    return V * np.sqrt(lam)


def _lyapunov_defect(A, X, rhs_sign_bbh):
    return np.linalg.norm(A @ X + X @ A.conj().T + rhs_sign_bbh, "fro")


def controllability_gramian(sys: StateSpace) -> GramianResult:
    """Compute the controllability Gramian of ``sys``.

    For stable A this solves A Theta + Theta A* + B B* = 0 with a dense
    Bartels-Stewart solver.  When A has eigenvalues in both half-planes,
    the dynamics are decoupled by an ordered Schur form and a Sylvester
    solve; the stable block keeps its usual Gramian while the antistable
    block solves the sign-flipped equation, which is what the two-sided
    frequency integral of the resolvent demands.

    Raises
    ------
    InvariantViolation
        If A has an eigenvalue on the imaginary axis (no Gramian exists).
    IllConditionedLyapunov
        If any solve leaves a relative residual above 1e-8.
    """
    sys.assert_no_imaginary_poles()
    n = sys.n
    dtype = np.float64 if sys.is_real else np.complex128
    if n == 0:
        return GramianResult(np.zeros((0, 0), dtype=dtype), 0.0)

    A, B = sys.A, sys.B
    bbh = B @ B.conj().T
    bbh_norm = np.linalg.norm(bbh, "fro")

    lam = np.linalg.eigvals(A)
    if np.all(lam.real < 0):
        theta = sla.solve_continuous_lyapunov(A, -bbh)
        theta = 0.5 * (theta + theta.conj().T)
        residual = _lyapunov_defect(A, theta, bbh)
    elif np.all(lam.real > 0):
        theta = sla.solve_continuous_lyapunov(A, bbh)
        theta = 0.5 * (theta + theta.conj().T)
        residual = _lyapunov_defect(A, theta, -bbh)
    else:
        theta, residual = _separated_gramian(sys)

    if residual > LYAPUNOV_RESIDUAL_RTOL * max(bbh_norm, np.finfo(float).tiny):
        raise IllConditionedLyapunov(
            f"Lyapunov residual {residual:.3e} exceeds "
            f"{LYAPUNOV_RESIDUAL_RTOL:g} * ||BB*||_F = "
            f"{LYAPUNOV_RESIDUAL_RTOL * bbh_norm:.3e}"
        )
    return GramianResult(theta, float(residual))


def _separated_gramian(sys: StateSpace):
    """Gramian of a system with poles in both open half-planes."""
    A, B = sys.A, sys.B
    n = A.shape[0]
    if sys.is_real:
        T, Q, k = sla.schur(A, output="real", sort="lhp")
    else:
        T, Q, k = sla.schur(A, output="complex", sort="lhp")
    T11, T12, T22 = T[:k, :k], T[:k, k:], T[k:, k:]
    Bt = Q.conj().T @ B

    # Decouple: with state transform [[I, Y], [0, I]], the stable block
    # sees the input matrix B1 - Y B2.
    Y = sla.solve_sylvester(T11, -T22, -T12)
    syl_defect = np.linalg.norm(T11 @ Y - Y @ T22 + T12, "fro")
    syl_scale = (
        np.linalg.norm(T11 @ Y, "fro")
        + np.linalg.norm(Y @ T22, "fro")
        + np.linalg.norm(T12, "fro")
    )
    if syl_defect > 1e-10 * max(syl_scale, np.finfo(float).tiny):
        raise IllConditionedLyapunov(
            f"stable/antistable coupling solve left residual {syl_defect:.3e} "
            f"(scale {syl_scale:.3e})"
        )

    B1 = Bt[:k] - Y @ Bt[k:]
    B2 = Bt[k:]
    P_s = sla.solve_continuous_lyapunov(T11, -(B1 @ B1.conj().T))
    P_a = sla.solve_continuous_lyapunov(T22, B2 @ B2.conj().T)
    residual = max(
        _lyapunov_defect(T11, P_s, B1 @ B1.conj().T),
        _lyapunov_defect(T22, P_a, -(B2 @ B2.conj().T)),
    )

    S = np.eye(n, dtype=T.dtype)
    S[:k, k:] = Y
    inner = S @ sla.block_diag(P_s, P_a) @ S.conj().T
    theta = Q @ inner @ Q.conj().T
    theta = 0.5 * (theta + theta.conj().T)
    if sys.is_real:
        theta = theta.real
    return theta, float(residual)


def h2_norm_sq(sys: StateSpace, strict_proper: bool = False) -> float:
    """Squared H2 norm trace(C Theta C*) of a strictly proper system.

    Parameters
    ----------
    sys : StateSpace
        System to measure.  Must have D = 0 unless ``strict_proper`` is
        set, in which case D is dropped before the computation.
    strict_proper : bool
        Project out the feedthrough instead of raising.

    Raises
    ------
    NonzeroFeedthrough
        If D != 0 and ``strict_proper`` is False (the norm is infinite).
    """
    if np.any(sys.D != 0) and not strict_proper:
        raise NonzeroFeedthrough(
            "squared H2 norm is infinite for nonzero feedthrough; "
            "pass strict_proper=True to measure the strictly proper part"
        )
    if sys.n == 0:
        return 0.0
    gram = controllability_gramian(sys)
    val = float(np.real(np.trace(sys.C @ gram.theta @ sys.C.conj().T)))
    return max(val, 0.0)


# ---------------------------------------------------------------------------
# peak gain
# ---------------------------------------------------------------------------


def _sigma_max(sys: StateSpace, w: float) -> float:
    val = eval_tf(sys, 1j * w)
    if val.size == 0:
        return 0.0
    return float(np.linalg.svd(val, compute_uv=False)[0])


def _imag_eig_frequencies(ham_eigs: np.ndarray, real_field: bool) -> np.ndarray:
    on_axis = ham_eigs[np.abs(ham_eigs.real) <= _HAM_IMAG_RTOL * (1.0 + np.abs(ham_eigs))]
    if on_axis.size == 0:
        return np.zeros(0)
    if real_field:
        return np.unique(np.abs(on_axis.imag))
    return np.unique(on_axis.imag)


def peak_gain(sys: StateSpace, rtol: float = 1e-6) -> PeakGain:
    """Locate the largest singular value of G(jw) over all frequencies.

    Uses the Hamiltonian-eigenvalue test: gamma exceeds the peak if and
    only if the associated 2n x 2n Hamiltonian matrix has no purely
    imaginary eigenvalues.  Starting from singular values at frequency
    candidates derived from the poles, each round evaluates midpoints of
    the imaginary-eigenvalue frequencies of an infeasible gamma, which
    converges quadratically (Bruinsma and Steinbuch, 1990).  Stability of
    A is not required, only the absence of imaginary-axis poles.

    Parameters
    ----------
    sys : StateSpace
    rtol : float
        Relative accuracy of the returned gain, in (0, 0.5).

    Returns
    -------
    PeakGain
        ``gain`` is the largest singular value found, attained at
        ``omega_star`` (recomputable from the response there).  If the
        supremum is approached only as w -> inf, the sentinel
        ``PeakGain(math.inf, sigma_max(D))`` is returned instead of an
        error.
    """
    if not 0.0 < rtol < 0.5:
        raise ValueError(f"rtol must lie in (0, 0.5), got {rtol}")
    p, q = sys.p, sys.q
    sd = np.linalg.svd(sys.D, compute_uv=False) if sys.D.size else np.zeros(0)
    sigma_d = float(sd[0]) if sd.size else 0.0
    if sys.n == 0:
        return PeakGain(math.inf, sigma_d)

    lam = sys.poles()
    candidates = {0.0}
    for ev in lam:
        candidates.add(abs(ev.imag))
        candidates.add(abs(ev))
        if not sys.is_real:
            candidates.add(ev.imag)
            candidates.add(-abs(ev))

    best_gain, best_w = sigma_d, math.inf
    for w in sorted(candidates):
        s = _sigma_max(sys, w)
        if s > best_gain:
            best_gain, best_w = s, w

    if best_gain <= 0.0:
        return PeakGain(0.0, 0.0)

    eps = rtol / 2.0
    A, B, C, D = sys.A, sys.B, sys.C, sys.D
    for _ in range(100):
        gamma = best_gain * (1.0 + 2.0 * eps)
        R = gamma * gamma * np.eye(q) - D.conj().T @ D
        Rinv = np.linalg.inv(R)
        Acl = A + B @ Rinv @ D.conj().T @ C
        ham = np.block(
            [
                [Acl, B @ Rinv @ B.conj().T],
                [-C.conj().T @ (np.eye(p) + D @ Rinv @ D.conj().T) @ C, -Acl.conj().T],
            ]
        )
        freqs = _imag_eig_frequencies(np.linalg.eigvals(ham), sys.is_real)
        if freqs.size == 0:
            break
        mids = freqs if freqs.size == 1 else 0.5 * (freqs[1:] + freqs[:-1])
        improved = False
        for w in mids:
            s = _sigma_max(sys, float(w))
            if s > best_gain:
                best_gain, best_w, improved = s, float(w), True
        if not improved:
            break

    if math.isinf(best_w):
        return PeakGain(math.inf, sigma_d)
    return PeakGain(best_w, best_gain)


# ---------------------------------------------------------------------------
# error norm
# ---------------------------------------------------------------------------


def _grid_responses(err: StateSpace, omegas: np.ndarray):
    """Response samples, skipping isolated near-singular nodes."""
    try:
        return [(r.omega, r.value) for r in freq_sweep(err, omegas)]
    except SingularResolvent:
        out = []
        for w in omegas:
            try:
                out.append((float(w), eval_tf(err, 1j * float(w))))
            except SingularResolvent:
                continue
        return out


def error_norm(g: StateSpace, r: StateSpace, grid_fallback) -> ErrorEstimate:
    """H2-type norm of the error system g - r.

    When the error system is strictly stable the value is exact:
    sqrt(h2_norm_sq(g - r)).  Otherwise (the reduced model picked up
    unstable or marginal modes) the two-sided frequency integral is
    approximated by trapezoidal quadrature of ||E(jw)||_F^2 over
    ``grid_fallback`` and the result is flagged approximate.  Grid nodes
    that happen to sit numerically on a pole of the error system are
    skipped.

    Parameters
    ----------
    g, r : StateSpace
        Full and reduced models with matching I/O dimensions and equal
        feedthrough.
    grid_fallback : array_like of float
        Nonnegative quadrature nodes for the unstable fallback, ignored on
        the exact path.  At least two nodes are required when used.

    Returns
    -------
    ErrorEstimate
    """
    err = series_sub(g, r)
    if np.any(err.D != 0):
        raise NonzeroFeedthrough(
            "error system has nonzero feedthrough; its H2 norm is infinite"
        )
    if is_strictly_stable(err):
        return ErrorEstimate(math.sqrt(h2_norm_sq(err)), False)

    omegas = np.unique(np.asarray([float(w) for w in grid_fallback], dtype=float))
    if omegas.size and omegas[0] < 0:
        raise ValueError("grid_fallback frequencies must be nonnegative")
    samples = _grid_responses(err, omegas)
    if len(samples) < 2:
        raise EmptyGrid(
            "quadrature fallback needs at least two usable grid frequencies"
        )
    ws = np.array([w for w, _ in samples])
    f = np.array([np.linalg.norm(v, "fro") ** 2 for _, v in samples])
    if err.is_real:
        val = _trapezoid(f, ws) / math.pi
    else:
        # Complex systems are not conjugate-symmetric; sample both signs.
        mirrored = _grid_responses(err, -ws[::-1])
        wneg = np.array([w for w, _ in mirrored])
        fneg = np.array([np.linalg.norm(v, "fro") ** 2 for _, v in mirrored])
        val = (_trapezoid(f, ws) + _trapezoid(fneg, wneg)) / (2.0 * math.pi)
    return ErrorEstimate(math.sqrt(max(float(val), 0.0)), True)
