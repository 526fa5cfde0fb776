"""Shared system builders and slow-but-independent oracles.

Everything here is deliberately naive: dense inverses, adaptive
quadrature, brute-force grids.  The point is to cross-check the library's
fast paths against implementations too simple to share their bugs.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.integrate

from tanmor import StateSpace

# ---------------------------------------------------------------------------
# system builders
# ---------------------------------------------------------------------------


def random_stable(n, p, q, seed, field="real", margin=0.5, feedthrough=False):
    """Shifted-Gaussian stable system; minimal with probability one."""
    rng = np.random.default_rng(seed)
    if field == "real":
        A = rng.standard_normal((n, n))
        B = rng.standard_normal((n, q))
        C = rng.standard_normal((p, n))
        D = rng.standard_normal((p, q)) if feedthrough else np.zeros((p, q))
    else:
        A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        B = rng.standard_normal((n, q)) + 1j * rng.standard_normal((n, q))
        C = rng.standard_normal((p, n)) + 1j * rng.standard_normal((p, n))
        D = (
            rng.standard_normal((p, q)) + 1j * rng.standard_normal((p, q))
            if feedthrough
            else np.zeros((p, q))
        )
    A = A - (np.max(np.linalg.eigvals(A).real) + margin) * np.eye(n)
    return StateSpace(A, B, C, D, scalar_field=field)


def random_mixed(n_stable, n_anti, p, q, seed, field="real"):
    """System with poles in both open half-planes (none on the axis)."""
    rng = np.random.default_rng(seed)
    s = random_stable(n_stable, p, q, seed, field=field)
    a = random_stable(n_anti, p, q, seed + 1, field=field)
    n = n_stable + n_anti
    A = np.zeros((n, n), dtype=s.A.dtype)
    A[:n_stable, :n_stable] = s.A
    A[n_stable:, n_stable:] = -a.A  # antistable copy
    B = np.vstack([s.B, a.B])
    C = np.hstack([s.C, a.C])
    # Orthogonal similarity so the split is not visible in the coordinates.
    T = np.linalg.qr(rng.standard_normal((n, n)))[0]
    return StateSpace(
        T @ A @ T.T, T @ B, C @ T.T, np.zeros((p, q)), scalar_field=field
    )


def modal_stable(n_pairs, p, q, seed, wmin=0.3, wmax=30.0):
    """Real modal system with well-separated lightly damped resonances.

    Useful when an oracle needs a smooth, easily integrable response.
    """
    rng = np.random.default_rng(seed)
    freqs = np.geomspace(wmin, wmax, n_pairs)
    zetas = rng.uniform(0.05, 0.4, n_pairs)
    n = 2 * n_pairs
    A = np.zeros((n, n))
    B = np.zeros((n, q))
    C = np.zeros((p, n))
    for k, (w, z) in enumerate(zip(freqs, zetas)):
        i = 2 * k
        A[i, i + 1] = w
        A[i + 1, i] = -w
        A[i + 1, i + 1] = -2.0 * z * w
        B[i + 1, :] = rng.standard_normal(q)
        C[:, i] = rng.standard_normal(p)
    return StateSpace(A, B, C, np.zeros((p, q)))


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------


def naive_tf(sys, s):
    """Transfer function through a dense solve, no factorization tricks."""
    shifted = s * np.eye(sys.n, dtype=complex) - sys.A
    return sys.C @ np.linalg.solve(shifted, sys.B.astype(complex)) + sys.D


def h2_sq_quadrature(sys, rtol=1e-10):
    """Squared H2 norm by adaptive quadrature of the response.

    Real systems use the single-sided convention (1/pi) * int_0^inf of the
    squared Frobenius response; complex systems integrate both signs with
    weight 1/(2 pi).  The feedthrough is excluded (it has no H2 norm).
    """
    proper = StateSpace(sys.A, sys.B, sys.C, np.zeros_like(sys.D), sys.scalar_field)

    def f(w):
        return np.linalg.norm(naive_tf(proper, 1j * w), "fro") ** 2

    mags = np.abs(np.linalg.eigvals(sys.A))
    cut = 10.0 * max(1.0, float(mags.max())) if mags.size else 10.0
    heads = sorted(set(np.clip(mags, 0.0, cut * 0.99)))
    # Near-zero integrands (recovered models) trip quad's subdivision
    # heuristics without affecting the returned value at our tolerances.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.integrate.IntegrationWarning)
        if sys.is_real:
            head, _ = scipy.integrate.quad(
                f, 0.0, cut, points=heads, limit=400, epsrel=rtol, epsabs=0.0
            )
            tail, _ = scipy.integrate.quad(f, cut, np.inf, limit=200, epsrel=rtol)
            return (head + tail) / np.pi
        neg_heads = sorted(-m for m in heads)
        head_pos, _ = scipy.integrate.quad(
            f, 0.0, cut, points=heads, limit=400, epsrel=rtol, epsabs=0.0
        )
        head_neg, _ = scipy.integrate.quad(
            f, -cut, 0.0, points=neg_heads, limit=400, epsrel=rtol, epsabs=0.0
        )
        tail_pos, _ = scipy.integrate.quad(f, cut, np.inf, limit=200, epsrel=rtol)
        tail_neg, _ = scipy.integrate.quad(f, -np.inf, -cut, limit=200, epsrel=rtol)
        return (head_pos + head_neg + tail_pos + tail_neg) / (2.0 * np.pi)


def grid_peak(sys, num=20000):
    """Brute-force largest response singular value over a dense log grid."""
    mags = np.abs(np.linalg.eigvals(sys.A)) if sys.n else np.array([1.0])
    nz = mags[mags > 0]
    lo = 1e-3 * float(nz.min()) if nz.size else 1e-3
    hi = 1e3 * max(1.0, float(mags.max()))
    grid = np.concatenate([[0.0], np.geomspace(lo, hi, num)])
    if not sys.is_real:
        grid = np.concatenate([-grid[::-1], grid])
    best_w, best = 0.0, -1.0
    for w in grid:
        val = np.linalg.svd(naive_tf(sys, 1j * w), compute_uv=False)
        s = float(val[0]) if val.size else 0.0
        if s > best:
            best_w, best = float(w), s
    return best_w, best
