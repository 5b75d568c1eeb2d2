"""Dimension-generic dense linear algebra and calculus primitives.

Everything here works on small matrices (dimensions capped at 16): SVD by
one-sided Jacobi rotations, orthonormal complements, central-difference
Jacobians and a classical RK4 step. All functions are pure.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFrame, InvalidInput

MAX_DIM = 16
# Components smaller than this are treated as zero by the sign convention.
_SIGN_TOL = 1e-12
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SvdResult:
    """A = left_frame @ diag(singular_values) @ right_frame.T (full frames).

    singular_values are descending and padded conceptually with zeros:
    only min(n, m) values are stored for an n x m input. left_frame is
    n x n, right_frame is m x m, both orthonormal.
    """

    singular_values: np.ndarray
    left_frame: np.ndarray
    right_frame: np.ndarray

    @property
    def sigma_max(self) -> float:
        return float(self.singular_values[0])

    @property
    def sigma_min(self) -> float:
        return float(self.singular_values[-1])

    def reconstruct(self) -> np.ndarray:
        n = self.left_frame.shape[0]
        m = self.right_frame.shape[0]
        k = len(self.singular_values)
        return (self.left_frame[:, :k] * self.singular_values) @ self.right_frame[:, :k].T


def _check_matrix(a):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise InvalidInput(f"expected a 2-d matrix, got shape {a.shape}")
    if a.shape[0] > MAX_DIM or a.shape[1] > MAX_DIM or 0 in a.shape:
        raise InvalidInput(f"dimensions must be in 1..{MAX_DIM}, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput("matrix has non-finite entries")
    return a


def _jacobi_orthogonalize(w, max_sweeps=60, tol=1e-15):
    # One-sided Jacobi: rotate column pairs of the tall matrix w until all
    # pairs are numerically orthogonal; accumulates the rotations in v.
    n = w.shape[1]
    v = np.eye(n)
    for _ in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                app = w[:, p] @ w[:, p]
                aqq = w[:, q] @ w[:, q]
                apq = w[:, p] @ w[:, q]
                denom = np.sqrt(app * aqq)
                if denom <= 0.0 or abs(apq) <= tol * denom:
                    continue
                off = max(off, abs(apq) / denom)
                zeta = (aqq - app) / (2.0 * apq)
                t = np.copysign(1.0, zeta) / (abs(zeta) + np.hypot(1.0, zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                rot = np.array([[c, s], [-s, c]])
                w[:, [p, q]] = w[:, [p, q]] @ rot
                v[:, [p, q]] = v[:, [p, q]] @ rot
        if off < tol:
            break
    return w, v


def _complete_frame(cols, dim):
    # Extend a (possibly empty) set of orthonormal columns to a full
    # orthonormal basis of R^dim, deterministically from the identity basis.
    basis = [cols[:, j] for j in range(cols.shape[1])]
    for i in range(dim):
        cand = np.zeros(dim)
        cand[i] = 1.0
        for b in basis:
            cand = cand - (b @ cand) * b
        norm = np.linalg.norm(cand)
        if norm > 1e-8:
            basis.append(cand / norm)
        if len(basis) == dim:
            break
    return np.column_stack(basis) if basis else np.zeros((dim, 0))


def _fix_signs(sigma, u, v):
    # Deterministic orientation: first nonzero component of each right-frame
    # vector made positive; the paired left column flips with it so the
    # product U S V^T is unchanged. Unpaired (null-space) columns of both
    # frames get the rule independently.
    k = len(sigma)
    for j in range(v.shape[1]):
        col = v[:, j]
        nz = np.nonzero(np.abs(col) > _SIGN_TOL)[0]
        if len(nz) and col[nz[0]] < 0:
            v[:, j] = -col
            if j < k and sigma[j] > 0:
                u[:, j] = -u[:, j]
    for j in range(u.shape[1]):
        if j < k and sigma[j] > 0:
            continue
        col = u[:, j]
        nz = np.nonzero(np.abs(col) > _SIGN_TOL)[0]
        if len(nz) and col[nz[0]] < 0:
            u[:, j] = -col
    return u, v


def svd(a) -> SvdResult:
    """Full SVD of a small dense matrix via one-sided Jacobi.

    Returns descending singular values and complete orthonormal frames;
    reconstruction holds to 1e-9 relative Frobenius error.
    """
    a = _check_matrix(a)
    n, m = a.shape
    transposed = n < m
    work = (a.T if transposed else a).copy()  # tall: rows >= cols
    work, small_frame = _jacobi_orthogonalize(work)
    sigma = np.linalg.norm(work, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    work = work[:, order]
    small_frame = small_frame[:, order]

    smax = sigma[0] if len(sigma) else 0.0
    good = sigma > smax * 1e-13  # columns with reliably resolved directions
    tall_cols = np.column_stack(
        [work[:, j] / sigma[j] for j in range(len(sigma)) if good[j]]
    ) if np.any(good) else np.zeros((work.shape[0], 0))
    tall_frame = _complete_frame(tall_cols, work.shape[0])

    if transposed:
        u, v = small_frame, tall_frame
    else:
        u, v = tall_frame, small_frame
    u, v = _fix_signs(sigma, u, v)
    return SvdResult(singular_values=sigma, left_frame=u, right_frame=v)


def orthonormal_complement(vectors) -> list:
    """Orthonormal basis of the orthogonal complement of span(vectors) in R^m.

    Input vectors must be linearly independent (Gram determinant > 1e-12).
    Returns m - len(vectors) vectors with the deterministic sign convention.
    """
    vecs = [np.asarray(v, dtype=float) for v in vectors]
    if not vecs:
        raise InvalidInput("need at least one vector to fix the ambient dimension")
    m = len(vecs[0])
    if m > MAX_DIM:
        raise InvalidInput(f"dimension {m} exceeds cap {MAX_DIM}")
    mat = np.column_stack(vecs)
    if not np.all(np.isfinite(mat)):
        raise InvalidInput("non-finite input vector")
    gram = mat.T @ mat
    if len(vecs) > m or np.linalg.det(gram) <= 1e-12:
        raise DegenerateFrame("input vectors are (numerically) dependent")

    # Orthonormalize the inputs, then extend from the identity basis.
    ortho = []
    for v in vecs:
        w = v.copy()
        for b in ortho:
            w -= (b @ w) * b
        ortho.append(w / np.linalg.norm(w))
    full = _complete_frame(np.column_stack(ortho), m)
    out = []
    for j in range(len(vecs), m):
        col = full[:, j]
        nz = np.nonzero(np.abs(col) > _SIGN_TOL)[0]
        if len(nz) and col[nz[0]] < 0:
            col = -col
        out.append(col)
    return out


def default_fd_step(x) -> float:
    """Central-difference step h = eps^(1/3) * max(1, ||x||)."""
    x = np.asarray(x, dtype=float)
    return _EPS ** (1.0 / 3.0) * max(1.0, float(np.linalg.norm(x)))


def fd_jacobian(f, x, h=None) -> np.ndarray:
    """Central-difference Jacobian of f at x; O(h^2) accurate for C^3 maps.

    f must be evaluable at x +- h*e_i for every coordinate; a DomainViolation
    raised by f propagates unchanged.
    """
    x = np.asarray(x, dtype=float)
    if h is None:
        h = default_fd_step(x)
    if h <= 0:
        raise InvalidInput("step h must be positive")
    cols = []
    for i in range(len(x)):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        cols.append((np.asarray(f(xp), dtype=float) - np.asarray(f(xm), dtype=float)) / (2.0 * h))
    return np.column_stack(cols)


def rk4_step(f, t, y, h):
    """One classical Runge-Kutta step for y' = f(t, y)."""
    y = np.asarray(y, dtype=float)
    k1 = np.asarray(f(t, y))
    k2 = np.asarray(f(t + 0.5 * h, y + 0.5 * h * k1))
    k3 = np.asarray(f(t + 0.5 * h, y + 0.5 * h * k2))
    k4 = np.asarray(f(t + h, y + h * k3))
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
