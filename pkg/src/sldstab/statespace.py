"""Minimal state maps, companion realizations and mode eigenstructure.

A minimal state map for an autonomous kernel behavior ``ker R(d/dt)`` is a
polynomial matrix ``X`` whose rows form a basis of the row vectors ``f`` with
``f R^{-1}`` strictly proper.  The induced realization satisfies
``xi X(xi) = A X(xi) + B R(xi)`` together with the output map ``w = C x``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .polymat import (
    MINUS_INF,
    PolyMatrix,
    canonical_rep,
    column_degrees,
    column_reduce,
    determinant,
    poly_roots,
    unimodular_inverse,
)

REALIZE_TOL = 1e-9
EIGVEC_TOL = 1e-8


def coefficient_matrix(M: PolyMatrix, grid: int) -> np.ndarray:
    """Stack coefficient slices horizontally: ``[M_0 ... M_{grid-1}]``."""
    d, r, c = M.coeffs.shape
    if d > grid:
        raise ValueError("grid too small for the matrix degree")
    out = np.zeros((r, grid * c))
    for i in range(d):
        out[:, i * c : (i + 1) * c] = M.coeffs[i]
    return out


def minimal_state_map(R: PolyMatrix) -> PolyMatrix:
    """Deterministic minimal state map for ``ker R(d/dt)``.

    Column-reduce ``R`` to ``R' = R U`` with column degrees ``d_j``; the rows
    ``e_j xi^k`` (``k < d_j``) form a basis for ``R'`` and are mapped back
    through ``U^{-1}``, then normalized by the canonical representative.
    Rows are ordered by (column index, power ascending).
    """
    Rp, U = column_reduce(R)
    degs = column_degrees(Rp)
    w = R.cols
    Uinv = unimodular_inverse(U)
    rows = []
    for j in range(w):
        dj = degs[j]
        if dj == MINUS_INF:
            raise ValueError("column-reduced matrix has a zero column")
        for k in range(int(dj)):
            c = np.zeros((k + 1, 1, w))
            c[k, 0, j] = 1.0
            rows.append(PolyMatrix(c) @ Uinv)
    n = int(round(determinant(R).degree))
    if len(rows) != n:
        raise ValueError(
            f"state-map construction produced {len(rows)} rows, expected {n}"
        )
    if n == 0:
        return PolyMatrix.zeros(0, w)
    from .polymat import vstack

    X = vstack(rows)
    return canonical_rep(X, R)


@dataclass(frozen=True)
class StateRealization:
    """Companion-style realization of ``ker R(d/dt)`` over a state map X."""

    R: PolyMatrix
    X: PolyMatrix
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def w(self) -> int:
        return self.R.cols


def realize(R: PolyMatrix, X: PolyMatrix, tol: float = REALIZE_TOL) -> StateRealization:
    """Solve ``xi X = A X + B R`` and ``I_w mod R = C X`` by coefficient match.

    Raises if the residual exceeds ``tol`` (the given X is then not a valid
    state map for ``ker R``).
    """
    n, w = X.rows, R.cols
    L = int(R.degree) if R.degree != MINUS_INF else 0
    grid = max(L + 1, int(X.degree) + 2 if X.degree != MINUS_INF else 1)
    Xa = coefficient_matrix(X, grid)  # X(xi) over the monomial stack
    Xb = np.zeros_like(Xa)  # xi * X(xi)
    Xb[:, w:] = Xa[:, :-w]
    Rt = coefficient_matrix(R, grid)
    M = np.vstack([Xa, Rt])  # (n + w) x (grid*w)
    sol, *_ = np.linalg.lstsq(M.T, Xb.T, rcond=None)
    AB = sol.T
    A, B = AB[:, :n], AB[:, n:]
    scale = max(1.0, np.max(np.abs(Xa)), R.max_norm())
    resid = np.max(np.abs(AB @ M - Xb))
    if resid > tol * scale:
        raise ValueError(f"X is not a valid state map (residual {resid:.3e})")
    Ican = canonical_rep(PolyMatrix.identity(w), R)
    Ia = coefficient_matrix(Ican, grid)
    Csol, *_ = np.linalg.lstsq(Xa.T, Ia.T, rcond=None)
    C = Csol.T
    cres = np.max(np.abs(C @ Xa - Ia))
    if cres > tol * scale:
        raise ValueError(f"output map not expressible over X (residual {cres:.3e})")
    return StateRealization(R=R, X=X, A=A, B=B, C=C)


@dataclass(frozen=True)
class ModeEigenstructure:
    """Eigenpairs ``(lambda_i, w_i)`` of a mode and the matrix V of state
    directions ``X(lambda_i) w_i``."""

    eigenvalues: np.ndarray  # complex, length n
    directions: np.ndarray  # complex, w x n (kernel vectors of R(lambda))
    V: np.ndarray  # complex, n x n
    condition_number: float


def _cluster_roots(rts: np.ndarray, tol: float) -> list[tuple[complex, int]]:
    out: list[list] = []
    for r in sorted(rts, key=lambda z: (z.real, z.imag)):
        for grp in out:
            if abs(r - grp[0]) <= tol * max(1.0, abs(grp[0])):
                grp[1] += 1
                grp[0] = grp[0] + (r - grp[0]) / grp[1]
                break
        else:
            out.append([r, 1])
    return [(complex(g[0]), int(g[1])) for g in out]


def eigenstructure(
    R: PolyMatrix, X: PolyMatrix, tol: float = 1e-6
) -> ModeEigenstructure:
    """Roots of ``det R`` with kernel directions and the V matrix.

    Requires the algebraic multiplicity of each root to equal
    ``dim ker R(lambda)``; defective modes are a hard error (the conservative
    LMI route does not need this data).
    """
    det = determinant(R)
    rts = poly_roots(det)
    n = len(rts)
    clusters = _cluster_roots(rts, tol)
    lams, dirs, vcols = [], [], []
    for lam, mult in clusters:
        if abs(lam.imag) < 1e-9 * max(1.0, abs(lam)):
            lam = complex(lam.real, 0.0)
        if lam.imag < 0:
            continue  # handled via conjugate closure below
        M = R(lam)
        u, s, vh = np.linalg.svd(M)
        smax = s[0] if s.size else 0.0
        null_dim = int(np.sum(s <= 1e-8 * max(smax, 1.0)))
        if null_dim < mult:
            raise ValueError(
                f"defective root {lam:.6g}: algebraic multiplicity {mult}, "
                f"kernel dimension {null_dim}; use the conservative route"
            )
        W = vh[-mult:, :].conj().T  # w x mult, orthonormal kernel basis
        for i in range(mult):
            wv = W[:, i]
            wv = wv / np.linalg.norm(wv)
            # deterministic phase: largest entry real positive
            piv = np.argmax(np.abs(wv))
            wv = wv * np.exp(-1j * np.angle(wv[piv]))
            resid = np.linalg.norm(M @ wv)
            if resid > EIGVEC_TOL * max(1.0, np.linalg.norm(M)):
                raise ValueError(f"kernel residual {resid:.3e} at root {lam:.6g}")
            lams.append(lam)
            dirs.append(wv)
            vcols.append(X(lam) @ wv)
            if lam.imag > 0:
                lams.append(np.conj(lam))
                dirs.append(np.conj(wv))
                vcols.append(X(np.conj(lam)) @ np.conj(wv))
    order = np.lexsort((np.array(lams).imag, np.array(lams).real))
    lams = np.array(lams)[order]
    dirs = np.array(dirs).T[:, order]
    V = np.array(vcols).T[:, order]
    if V.shape != (n, n):
        raise ValueError("eigenstructure assembly produced a non-square V")
    s = np.linalg.svd(V, compute_uv=False)
    if s[-1] <= 1e-10 * max(s[0], 1.0):
        raise ValueError("V matrix is singular beyond tolerance")
    return ModeEigenstructure(
        eigenvalues=lams,
        directions=dirs,
        V=V,
        condition_number=float(s[0] / s[-1]),
    )


def expm_propagate(A: np.ndarray, x0: np.ndarray, dt: float) -> np.ndarray:
    """Exact propagation ``exp(A dt) x0`` (scaling-and-squaring expm)."""
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    if dt == 0.0 or A.size == 0:
        return np.array(x0, dtype=float, copy=True)
    return scipy.linalg.expm(np.asarray(A) * dt) @ np.asarray(x0, dtype=float)
