"""Greedy barycentric rational approximation (adaptive Antoulas-Anderson).

The fit builds r(z) = N(z)/D(z) with

    N(z) = sum_j w_j f_j / (z - z_j),    D(z) = sum_j w_j / (z - z_j)

over greedily chosen support points z_j.  At each step the sample with the
largest current error joins the support set and the weights are recomputed
as the smallest-singular-direction null vector of the Loewner matrix.
Errors are measured relative to the sup-norm of the samples, which stays
well defined for functions passing through zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


class AAAError(RuntimeError):
    pass


@dataclass(frozen=True)
class BarycentricRational:
    """Barycentric-form rational interpolant.

    Interpolates ``support_values`` at ``support_points`` exactly; elsewhere
    evaluation uses the barycentric formula.  ``achieved_error`` is the
    sup-relative error over the fitting samples.
    """

    support_points: np.ndarray
    support_values: np.ndarray
    weights: np.ndarray
    achieved_error: float = np.nan

    @property
    def degree(self) -> int:
        return len(self.support_points) - 1

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        scalar = z.ndim == 0
        zv = np.atleast_1d(z).astype(complex)
        out = np.empty_like(zv)
        diff = zv[:, None] - self.support_points[None, :]
        exact = np.isclose(diff, 0.0, atol=0.0)
        hit = exact.any(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            cauchy = self.weights[None, :] / diff
            num = cauchy @ self.support_values
            den = cauchy.sum(axis=1)
            out = num / den
        if hit.any():
            idx = exact[hit].argmax(axis=1)
            out[hit] = self.support_values[idx]
        out = out.real if np.isrealobj(self.support_values) else out
        return out[0] if scalar else out


def aaa_fit(x: np.ndarray, f: np.ndarray, tol: float = 1e-9, max_degree: int = 40) -> BarycentricRational:
    """Fit samples (x_i, f_i) with a barycentric rational to sup-relative tol.

    Parameters
    ----------
    x, f : array_like
        Sample abscissae (distinct) and values; at least 3 samples.
    tol : float
        Target max_i |f_i - r(x_i)| / max_i |f_i|.
    max_degree : int
        Degree cap; reaching it is reported via ``achieved_error`` rather
        than raised, so callers can decide.
    """
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    if x.ndim != 1 or x.shape != f.shape:
        raise ValueError("x and f must be 1-D arrays of equal length")
    if len(x) < 3:
        raise ValueError("need at least 3 samples")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if len(np.unique(x)) != len(x):
        raise AAAError("duplicate abscissae in samples")

    scale = np.max(np.abs(f))
    if scale == 0.0:
        return BarycentricRational(x[:1].copy(), f[:1].copy(), np.ones(1), 0.0)

    support: list[int] = []
    free = np.ones(len(x), dtype=bool)
    r = np.full_like(f, np.mean(f))
    best: BarycentricRational | None = None

    for _ in range(max_degree + 1):
        err = np.abs(f - r)
        err[~free] = 0.0
        j = int(np.argmax(err))
        if err[j] / scale < tol and support:
            break
        support.append(j)
        free[j] = False
        zs = x[support]
        fs = f[support]
        xr = x[free]
        fr = f[free]
        if len(xr) == 0:
            w = np.ones(len(zs))
            best = BarycentricRational(zs.copy(), fs.copy(), w, 0.0)
            break
        # Loewner matrix over the free samples.
        C = 1.0 / (xr[:, None] - zs[None, :])
        L = fr[:, None] * C - C * fs[None, :]
        _, _, vh = scipy.linalg.svd(L, full_matrices=False, check_finite=False)
        w = vh[-1].conj()
        num = C @ (w * fs)
        den = C @ w
        r = f.copy()
        with np.errstate(divide="ignore", invalid="ignore"):
            r[free] = num / den
        bad = ~np.isfinite(r)
        r[bad] = f[bad]  # zero denominator at a sample: treat as interpolated
        cur = float(np.max(np.abs(f - r)) / scale)
        cand = BarycentricRational(zs.copy(), fs.copy(), w.real if np.isrealobj(f) else w, cur)
        if best is None or cur < best.achieved_error:
            best = cand
        if cur < tol:
            break

    assert best is not None
    return best


def poles_residues(r: BarycentricRational, prune_tol: float = 1e-12):
    """Convert a barycentric form to (poles, residues, constant).

    Poles come from the generalized eigenvalue problem of the barycentric
    arrowhead pencil; residues from N(p)/D'(p).  Spurious pole-zero pairs
    (residue below ``prune_tol`` times the natural scale) are pruned and
    returned separately.

    Returns
    -------
    poles, residues : np.ndarray (complex)
    constant : float
        Value r at infinity: sum(w f) / sum(w).
    pruned : list of (pole, residue)
    """
    z, fv, w = r.support_points, r.support_values, r.weights
    m = len(z)
    constant = float(np.real(np.sum(w * fv) / np.sum(w))) if abs(np.sum(w)) > 0 else 0.0
    if m == 1:
        return np.array([]), np.array([]), float(fv[0]), []

    # Work in a rescaled variable zeta = z / sigma so the pencil is balanced
    # (PSD fits span ~20 decades in the raw variable).  Poles and residue
    # formulas are equivariant: p = sigma p_zeta, res = sigma res_zeta.
    sigma = max(float(np.max(np.abs(z))), 1e-300)
    zs = z / sigma

    # Arrowhead pencil: eigenvalues of (E, Bmat) excluding the two at infinity.
    E = np.zeros((m + 1, m + 1), dtype=complex)
    E[0, 1:] = w
    E[1:, 0] = 1.0
    E[1:, 1:] = np.diag(zs)
    Bmat = np.eye(m + 1)
    Bmat[0, 0] = 0.0
    eig = scipy.linalg.eigvals(E, Bmat)
    ps = eig[np.isfinite(eig)]
    # D has m-1 zeros; spurious huge magnitudes are the infinite pair.
    ps = ps[np.abs(ps) < 1e10]
    if len(ps):
        # a pole numerically on a support point is spurious (cancels a zero)
        ps = ps[np.min(np.abs(ps[:, None] - zs[None, :]), axis=1) > 1e-14]

    def N(s):
        return np.sum(w * fv / (s - zs))

    def Dp(s):
        return -np.sum(w / (s - zs) ** 2)

    with np.errstate(all="ignore"):
        residues = sigma * np.array([N(p) / Dp(p) for p in ps]) if len(ps) else np.array([])
    poles = sigma * ps
    scale = float(np.max(np.abs(fv))) * sigma
    keep = np.abs(residues) >= prune_tol * scale
    pruned = [(poles[i], residues[i]) for i in range(len(poles)) if not keep[i]]
    return poles[keep], residues[keep], constant, pruned


def pole_sum_eval(poles: np.ndarray, residues: np.ndarray, constant: float, z) -> np.ndarray:
    """Evaluate constant + sum_k residues_k / (z - poles_k)."""
    zv = np.atleast_1d(np.asarray(z, dtype=complex))
    out = np.full(zv.shape, constant, dtype=complex)
    for p, res in zip(poles, residues):
        out += res / (zv - p)
    return out.real if np.all(np.abs(out.imag) < 1e-9 * (np.abs(out.real) + 1e-300)) else out
