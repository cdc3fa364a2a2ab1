"""Two-variable polynomial matrices and quadratic differential forms.

A symmetric two-variable polynomial matrix ``Phi(z, e) = sum Phi_hk z^h e^k``
is stored as a square grid of real ``w x w`` coefficient blocks.  Its
quadratic differential form acts on a trajectory through the stack of
derivatives ``w, w', w'', ...``.
"""

from __future__ import annotations

import numpy as np

from .polymat import PolyMatrix, canonical_rep, vstack

SYM_TOL = 1e-12
CANONICAL_RESIDUAL_TOL = 1e-9


class TwoVarForm:
    """Symmetric two-variable polynomial matrix.

    ``blocks[h, k]`` is the ``w x w`` real matrix multiplying ``z^h e^k``.
    Symmetry ``Phi_hk = Phi_kh^T`` is enforced by symmetrization at
    construction.
    """

    __slots__ = ("blocks",)

    def __init__(self, blocks):
        b = np.asarray(blocks, dtype=float)
        if b.ndim != 4:
            raise ValueError("expected blocks of shape (m, m, w, w)")
        if b.shape[0] != b.shape[1] or b.shape[2] != b.shape[3]:
            raise ValueError("block grid and blocks must be square")
        b = 0.5 * (b + np.transpose(b, (1, 0, 3, 2)))
        # trim trailing all-zero grid rows/columns
        m = b.shape[0]
        while m > 1 and not np.any(b[m - 1, :, :, :]) and not np.any(b[:, m - 1, :, :]):
            m -= 1
        self.blocks = b[:m, :m].copy()

    @classmethod
    def constant(cls, M) -> "TwoVarForm":
        M = np.asarray(M, dtype=float)
        return cls(M[None, None, :, :])

    @classmethod
    def from_flat(cls, flat: np.ndarray, w: int) -> "TwoVarForm":
        """Inverse of :meth:`flat`: unflatten a ``w(m) x w(m)`` matrix."""
        n = flat.shape[0] // w
        b = np.zeros((n, n, w, w))
        for h in range(n):
            for k in range(n):
                b[h, k] = flat[h * w : (h + 1) * w, k * w : (k + 1) * w]
        return cls(b)

    @property
    def w(self) -> int:
        return self.blocks.shape[2]

    @property
    def grid(self) -> int:
        """Number of powers present per variable (degree + 1)."""
        return self.blocks.shape[0]

    def flat(self, grid: int | None = None) -> np.ndarray:
        """Flattened symmetric coefficient matrix in the monomial-stack basis.

        Row-block h / column-block k holds ``Phi_hk``; optionally zero-padded
        to a larger grid.
        """
        m = self.grid if grid is None else grid
        if m < self.grid:
            raise ValueError("grid smaller than the form's degree")
        w = self.w
        out = np.zeros((m * w, m * w))
        for h in range(self.grid):
            for k in range(self.grid):
                out[h * w : (h + 1) * w, k * w : (k + 1) * w] = self.blocks[h, k]
        return out

    def pad(self, grid: int) -> np.ndarray:
        b = np.zeros((grid, grid, self.w, self.w))
        b[: self.grid, : self.grid] = self.blocks
        return b

    def __add__(self, other: "TwoVarForm") -> "TwoVarForm":
        if self.w != other.w:
            raise ValueError("variable-count mismatch")
        m = max(self.grid, other.grid)
        return TwoVarForm(self.pad(m) + other.pad(m))

    def __neg__(self):
        return TwoVarForm(-self.blocks)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, a: float) -> "TwoVarForm":
        return TwoVarForm(a * self.blocks)

    def max_norm(self) -> float:
        return float(np.max(np.abs(self.blocks)))

    def is_symmetric(self, tol: float = SYM_TOL) -> bool:
        return bool(
            np.max(np.abs(self.blocks - np.transpose(self.blocks, (1, 0, 3, 2))))
            <= tol * max(1.0, self.max_norm())
        )

    def __repr__(self):
        return f"TwoVarForm(w={self.w}, grid={self.grid})"


class CanonicalQdf:
    """A QDF written as ``X(z)^T K X(e)`` over a minimal state map ``X``."""

    __slots__ = ("state_map", "kernel")

    def __init__(self, state_map: PolyMatrix, kernel: np.ndarray):
        kernel = np.asarray(kernel, dtype=float)
        if kernel.shape[0] != kernel.shape[1]:
            raise ValueError("kernel must be square")
        if np.max(np.abs(kernel - kernel.T)) > 1e-9 * max(1.0, np.max(np.abs(kernel))):
            raise ValueError("kernel must be symmetric")
        if state_map.rows != kernel.shape[0]:
            raise ValueError("kernel size must match the state-map row count")
        self.state_map = state_map
        self.kernel = 0.5 * (kernel + kernel.T)

    def expand(self) -> TwoVarForm:
        """Expand back to the explicit two-variable form."""
        return sandwich(self.state_map, self.kernel)


def sandwich(X: PolyMatrix, K: np.ndarray) -> TwoVarForm:
    """The form ``X(z)^T K X(e)`` for a polynomial matrix X and constant K."""
    d = X.coeffs.shape[0]
    w = X.cols
    b = np.zeros((d, d, w, w))
    for h in range(d):
        for k in range(d):
            b[h, k] = X.coeffs[h].T @ K @ X.coeffs[k]
    return TwoVarForm(b)


def two_var_product(M: PolyMatrix, N: PolyMatrix, signs: np.ndarray | None = None) -> TwoVarForm:
    """The form ``M(z)^T S N(e)`` with optional diagonal sign matrix S."""
    dm, dn = M.coeffs.shape[0], N.coeffs.shape[0]
    d = max(dm, dn)
    w = M.cols
    S = np.eye(M.rows) if signs is None else np.diag(signs)
    b = np.zeros((d, d, w, w))
    for h in range(dm):
        for k in range(dn):
            b[h, k] += M.coeffs[h].T @ S @ N.coeffs[k]
    return TwoVarForm(b)


def qdf_derivative(psi: TwoVarForm) -> TwoVarForm:
    """The coefficient form of ``d/dt Q_psi``, i.e. ``(z + e) psi``."""
    m = psi.grid + 1
    b = np.zeros((m, m, psi.w, psi.w))
    b[1:, : psi.grid] += psi.blocks  # z * psi
    b[: psi.grid, 1:] += psi.blocks  # e * psi
    return TwoVarForm(b)


def _factor_flat(psi: TwoVarForm) -> tuple[PolyMatrix, np.ndarray]:
    """Rank-revealing symmetric factorization ``psi = M(z)^T S M(e)``.

    Eigendecomposition of the flattened coefficient matrix; ``M`` collects the
    scaled eigenvector rows as a polynomial matrix, ``S`` the eigenvalue signs.
    """
    flat = psi.flat()
    lam, U = np.linalg.eigh(flat)
    scale = np.max(np.abs(lam)) if lam.size else 0.0
    keep = np.abs(lam) > 1e-12 * max(scale, 1.0)
    lam, U = lam[keep], U[:, keep]
    rowsc = np.sqrt(np.abs(lam))[:, None] * U.T  # r x (grid*w)
    w = psi.w
    c = np.zeros((psi.grid, rowsc.shape[0], w))
    for h in range(psi.grid):
        c[h] = rowsc[:, h * w : (h + 1) * w]
    return PolyMatrix(c), np.sign(lam)


def qdf_mod(phi: TwoVarForm, R: PolyMatrix) -> TwoVarForm:
    """R-canonical representative of a two-variable form.

    Factors ``phi = M(z)^T S M(e)``, reduces ``M`` modulo ``R`` row-wise and
    re-multiplies.
    """
    if R.cols != phi.w:
        raise ValueError("variable-count mismatch between form and R")
    M, signs = _factor_flat(phi)
    if M.rows == 0:
        return TwoVarForm(np.zeros((1, 1, phi.w, phi.w)))
    Mred = canonical_rep(M, R)
    return two_var_product(Mred, Mred, signs)


def to_canonical(psi: TwoVarForm, X: PolyMatrix, R: PolyMatrix) -> CanonicalQdf:
    """Express an R-canonical form as ``X(z)^T K X(e)``.

    Solves the linear coefficient system by least squares and rejects if the
    reconstruction residual exceeds the canonical tolerance, which signals
    that ``psi`` is not expressible over the given state map.
    """
    if X.cols != psi.w:
        raise ValueError("variable-count mismatch between form and state map")
    grid = max(psi.grid, X.coeffs.shape[0])
    w, n = psi.w, X.rows
    Xa = np.zeros((n, grid * w))
    for h in range(X.coeffs.shape[0]):
        Xa[:, h * w : (h + 1) * w] = X.coeffs[h]
    target = psi.flat(grid)
    Xp = np.linalg.pinv(Xa)
    K = Xp.T @ target @ Xp
    K = 0.5 * (K + K.T)
    resid = np.max(np.abs(Xa.T @ K @ Xa - target))
    scale = max(1.0, psi.max_norm())
    if resid > CANONICAL_RESIDUAL_TOL * scale:
        raise ValueError(
            f"form is not expressible over the state map (residual {resid:.3e})"
        )
    return CanonicalQdf(X, K)


def eval_along_trajectory(psi: TwoVarForm, derivs) -> float:
    """Value of the QDF at one time instant.

    ``derivs`` stacks the trajectory value and its derivatives row-wise:
    ``derivs[j]`` is the j-th derivative, a vector of length w.
    """
    D = np.asarray(derivs, dtype=float)
    if D.ndim == 1:
        D = D[None, :]
    if D.shape[1] != psi.w:
        raise ValueError(f"trajectory has {D.shape[1]} variables, form has {psi.w}")
    if D.shape[0] < psi.grid:
        raise ValueError(
            f"need {psi.grid} derivative levels, got {D.shape[0]}"
        )
    val = 0.0
    for h in range(psi.grid):
        for k in range(psi.grid):
            val += D[h] @ psi.blocks[h, k] @ D[k]
    return float(val)


def divide_by_zeta_plus_eta(phi: TwoVarForm, tol: float = 1e-9) -> TwoVarForm:
    """Exact division ``psi = phi / (z + e)`` on the coefficient grid.

    Back-substitution along anti-diagonals; raises if the remainder exceeds
    ``tol`` times the coefficient scale.
    """
    m = phi.grid
    w = phi.w
    if m < 2:
        if phi.max_norm() == 0.0:
            return TwoVarForm(np.zeros((1, 1, w, w)))
        raise ValueError("form is not divisible by (zeta + eta)")
    p = m - 1
    B = phi.pad(m)
    psi = np.zeros((p, p, w, w))
    # phi_hk = psi_{h-1,k} + psi_{h,k-1}; sweep k ascending, h descending.
    for k in range(p):
        for h in range(p - 1, -1, -1):
            acc = B[h + 1, k].copy()
            if k > 0:
                acc -= psi[h + 1, k - 1] if h + 1 < p else 0.0
            psi[h, k] = acc
    out = TwoVarForm(psi)
    resid = (qdf_derivative(out) - phi).max_norm()
    if resid > tol * max(1.0, phi.max_norm()):
        raise ValueError(f"form is not divisible by (zeta + eta) (residual {resid:.3e})")
    return out


def two_var_from_pair(A: PolyMatrix, B: PolyMatrix) -> TwoVarForm:
    """The symmetric form ``A(z)^T B(e) + B(z)^T A(e)``."""
    dm = max(A.coeffs.shape[0], B.coeffs.shape[0])
    w = A.cols
    b = np.zeros((dm, dm, w, w))
    for h in range(A.coeffs.shape[0]):
        for k in range(B.coeffs.shape[0]):
            b[h, k] += A.coeffs[h].T @ B.coeffs[k]
            b[k, h] += B.coeffs[k].T @ A.coeffs[h]
    return TwoVarForm(b)


# JSON wire format: blocks[h][k] = w x w matrix; symmetry validated on load.


def twovarform_to_json(psi: TwoVarForm) -> list:
    return psi.blocks.tolist()


def twovarform_from_json(data) -> TwoVarForm:
    b = np.asarray(data, dtype=float)
    form = TwoVarForm(b)
    orig = np.asarray(data, dtype=float)
    if np.max(np.abs(orig - form.pad(orig.shape[0]))) > 1e-9 * max(1.0, form.max_norm()):
        raise ValueError("coefficient blocks violate symmetry")
    return form
