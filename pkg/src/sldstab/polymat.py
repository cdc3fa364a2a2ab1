"""Univariate real polynomials and polynomial matrices.

Coefficients are stored ascending (index i holds the coefficient of
``xi**i``) in double precision.  All values are trimmed against a global
relative tolerance and treated as immutable; every operation returns a new
object.
"""

from __future__ import annotations

import numpy as np

# Relative trimming tolerance for coefficient arrays.  Kept well below the
# smallest genuine coefficient ratios seen in physically scaled models
# (circuit determinants legitimately span ~10 decades) while still above
# double-precision cancellation noise.
TRIM_TOL = 1e-13
# Absolute tolerance on real parts for the Hurwitz test.
HURWITZ_TOL = 1e-9
# Root-matching tolerance for approximate gcd cancellation.
GCD_ROOT_TOL = 1e-7

MINUS_INF = float("-inf")


def _trim(c: np.ndarray, tol: float = TRIM_TOL) -> np.ndarray:
    c = np.atleast_1d(np.asarray(c, dtype=float))
    if c.size == 0:
        return np.zeros(1)
    scale = np.max(np.abs(c))
    if scale == 0.0:
        return np.zeros(1)
    nz = np.nonzero(np.abs(c) > tol * scale)[0]
    if nz.size == 0:
        return np.zeros(1)
    return c[: nz[-1] + 1].copy()


class Poly:
    """A real univariate polynomial with ascending coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        if isinstance(coeffs, Poly):
            coeffs = coeffs.coeffs
        self.coeffs = _trim(coeffs)

    @property
    def degree(self) -> float:
        """Degree; ``-inf`` for the zero polynomial."""
        if self.is_zero():
            return MINUS_INF
        return float(len(self.coeffs) - 1)

    def is_zero(self) -> bool:
        return len(self.coeffs) == 1 and self.coeffs[0] == 0.0

    def __add__(self, other):
        other = as_poly(other)
        n = max(len(self.coeffs), len(other.coeffs))
        c = np.zeros(n)
        c[: len(self.coeffs)] += self.coeffs
        c[: len(other.coeffs)] += other.coeffs
        return Poly(c)

    __radd__ = __add__

    def __neg__(self):
        return Poly(-self.coeffs)

    def __sub__(self, other):
        return self + (-as_poly(other))

    def __rsub__(self, other):
        return as_poly(other) + (-self)

    def __mul__(self, other):
        other = as_poly(other)
        if self.is_zero() or other.is_zero():
            return Poly([0.0])
        return Poly(np.convolve(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def __call__(self, x):
        # Horner evaluation; works for real, complex and array arguments.
        acc = 0.0 * np.asarray(x) + self.coeffs[-1]
        for c in self.coeffs[-2::-1]:
            acc = acc * x + c
        return acc

    def __eq__(self, other):
        other = as_poly(other)
        return np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash(tuple(self.coeffs))

    def shift(self, k: int) -> "Poly":
        """Multiply by xi**k."""
        if self.is_zero():
            return Poly([0.0])
        return Poly(np.concatenate([np.zeros(k), self.coeffs]))

    def __repr__(self):
        return f"Poly({list(self.coeffs)})"


def as_poly(p) -> Poly:
    if isinstance(p, Poly):
        return p
    if np.isscalar(p):
        return Poly([float(p)])
    return Poly(p)


def poly_divmod(num: Poly, den: Poly) -> tuple[Poly, Poly]:
    """Quotient and remainder of ``num / den``."""
    num, den = as_poly(num), as_poly(den)
    if den.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    if num.degree < den.degree:
        return Poly([0.0]), num
    q, r = np.polydiv(num.coeffs[::-1], den.coeffs[::-1])
    return Poly(q[::-1]), Poly(r[::-1])


def poly_roots(p: Poly) -> np.ndarray:
    """All complex roots with multiplicity, via balanced companion eigenvalues.

    Conjugate pairing is enforced: roots whose imaginary parts fail to cancel
    within ``1e-8 * |root|`` of their mirror are symmetrized.
    """
    p = as_poly(p)
    if p.is_zero():
        raise ValueError("zero polynomial has no well-defined root set")
    if p.degree == 0:
        return np.array([], dtype=complex)
    r = np.roots(p.coeffs[::-1]).astype(complex)
    # Symmetrize against the conjugate multiset.
    order = np.lexsort((r.imag, r.real))
    r = r[order]
    conj = np.conj(r)
    conj = conj[np.lexsort((conj.imag, conj.real))]
    r = 0.5 * (r + conj)
    r.imag[np.abs(r.imag) < 1e-8 * np.maximum(np.abs(r), 1.0)] = 0.0
    return r


class PolyMatrix:
    """A rectangular matrix with :class:`Poly` entries.

    Internally a single float array ``coeffs`` of shape
    ``(degree + 1, rows, cols)``; slice ``coeffs[i]`` is the constant matrix
    multiplying ``xi**i``.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = np.asarray(coeffs, dtype=float)
        if c.ndim == 2:
            c = c[None, :, :]
        if c.ndim != 3:
            raise ValueError("expected array of shape (deg+1, rows, cols)")
        scale = np.max(np.abs(c)) if c.size else 0.0
        if scale == 0.0:
            c = np.zeros((1,) + c.shape[1:])
        else:
            keep = np.nonzero(np.abs(c).max(axis=(1, 2)) > TRIM_TOL * scale)[0]
            last = keep[-1] if keep.size else 0
            c = c[: last + 1].copy()
            c[np.abs(c) <= TRIM_TOL * scale] = 0.0
        self.coeffs = c

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_entries(cls, grid) -> "PolyMatrix":
        """Build from a nested list of Poly / coefficient-list entries."""
        rows = len(grid)
        cols = len(grid[0])
        polys = [[as_poly(grid[i][j]) for j in range(cols)] for i in range(rows)]
        deg = max(len(p.coeffs) for row in polys for p in row)
        c = np.zeros((deg, rows, cols))
        for i in range(rows):
            for j in range(cols):
                pc = polys[i][j].coeffs
                c[: len(pc), i, j] = pc
        return cls(c)

    @classmethod
    def identity(cls, n: int) -> "PolyMatrix":
        return cls(np.eye(n)[None, :, :])

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "PolyMatrix":
        return cls(np.zeros((1, rows, cols)))

    # -- basic queries ----------------------------------------------------

    @property
    def rows(self) -> int:
        return self.coeffs.shape[1]

    @property
    def cols(self) -> int:
        return self.coeffs.shape[2]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def degree(self) -> float:
        if self.is_zero():
            return MINUS_INF
        return float(self.coeffs.shape[0] - 1)

    def is_zero(self) -> bool:
        return self.coeffs.shape[0] == 1 and not np.any(self.coeffs)

    def entry(self, i: int, j: int) -> Poly:
        return Poly(self.coeffs[:, i, j])

    def entries(self) -> list[list[Poly]]:
        return [[self.entry(i, j) for j in range(self.cols)] for i in range(self.rows)]

    def __call__(self, x):
        """Evaluate at a (possibly complex) scalar; returns a dense matrix."""
        acc = np.asarray(self.coeffs[-1], dtype=np.result_type(x, float)).copy()
        for k in range(self.coeffs.shape[0] - 2, -1, -1):
            acc = acc * x + self.coeffs[k]
        return acc

    # -- arithmetic -------------------------------------------------------

    def _check_same_shape(self, other):
        if self.shape != other.shape:
            raise ValueError(f"dimension mismatch: {self.shape} vs {other.shape}")

    def __add__(self, other: "PolyMatrix") -> "PolyMatrix":
        self._check_same_shape(other)
        n = max(self.coeffs.shape[0], other.coeffs.shape[0])
        c = np.zeros((n,) + self.shape)
        c[: self.coeffs.shape[0]] += self.coeffs
        c[: other.coeffs.shape[0]] += other.coeffs
        return PolyMatrix(c)

    def __neg__(self):
        return PolyMatrix(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __matmul__(self, other: "PolyMatrix") -> "PolyMatrix":
        if self.cols != other.rows:
            raise ValueError(f"dimension mismatch: {self.shape} @ {other.shape}")
        da, db = self.coeffs.shape[0], other.coeffs.shape[0]
        c = np.zeros((da + db - 1, self.rows, other.cols))
        for i in range(da):
            for j in range(db):
                c[i + j] += self.coeffs[i] @ other.coeffs[j]
        return PolyMatrix(c)

    def scale(self, a) -> "PolyMatrix":
        """Multiply by a real scalar or a scalar :class:`Poly`."""
        a = as_poly(a)
        da = len(a.coeffs)
        c = np.zeros((da + self.coeffs.shape[0] - 1,) + self.shape)
        for i, ai in enumerate(a.coeffs):
            c[i : i + self.coeffs.shape[0]] += ai * self.coeffs
        return PolyMatrix(c)

    @property
    def T(self) -> "PolyMatrix":
        return PolyMatrix(np.transpose(self.coeffs, (0, 2, 1)))

    def subs_neg(self) -> "PolyMatrix":
        """Substitute xi -> -xi."""
        c = self.coeffs.copy()
        c[1::2] *= -1.0
        return PolyMatrix(c)

    def row(self, i: int) -> "PolyMatrix":
        return PolyMatrix(self.coeffs[:, i : i + 1, :])

    def max_norm(self) -> float:
        return float(np.max(np.abs(self.coeffs)))

    def __repr__(self):
        return f"PolyMatrix(shape={self.shape}, degree={self.degree})"


def vstack(mats: list[PolyMatrix]) -> PolyMatrix:
    cols = mats[0].cols
    deg = max(m.coeffs.shape[0] for m in mats)
    rows = sum(m.rows for m in mats)
    c = np.zeros((deg, rows, cols))
    at = 0
    for m in mats:
        c[: m.coeffs.shape[0], at : at + m.rows, :] = m.coeffs
        at += m.rows
    return PolyMatrix(c)


class RationalMatrix:
    """A rational matrix in common-denominator form ``numerator / denominator``.

    No coprimeness is required; reduction is explicit where needed.
    """

    __slots__ = ("numerator", "denominator")

    def __init__(self, numerator: PolyMatrix, denominator: Poly):
        denominator = as_poly(denominator)
        if denominator.is_zero():
            raise ValueError("denominator must be nonzero")
        self.numerator = numerator
        self.denominator = denominator

    @property
    def shape(self):
        return self.numerator.shape

    def __call__(self, x):
        return self.numerator(x) / self.denominator(x)

    def is_zero(self) -> bool:
        return self.numerator.is_zero()


# ---------------------------------------------------------------------------
# determinant / adjugate


def _det_cofactor(c: PolyMatrix) -> Poly:
    n = c.rows
    if n == 1:
        return c.entry(0, 0)
    if n == 2:
        return c.entry(0, 0) * c.entry(1, 1) - c.entry(0, 1) * c.entry(1, 0)
    total = Poly([0.0])
    for j in range(n):
        e = c.entry(0, j)
        if e.is_zero():
            continue
        minor = np.delete(c.coeffs[:, 1:, :], j, axis=2)
        sub = _det_cofactor(PolyMatrix(minor))
        term = e * sub
        total = total + term if j % 2 == 0 else total - term
    return total


def _interp_nodes(num: int, scale: float) -> np.ndarray:
    # Chebyshev nodes scaled to the coefficient magnitude of the input.
    k = np.arange(num)
    return scale * np.cos((2 * k + 1) * np.pi / (2 * num))


def _fit_poly(xs: np.ndarray, ys: np.ndarray) -> Poly:
    V = np.vander(xs, len(xs), increasing=True)
    return Poly(np.linalg.solve(V, ys))


def determinant(R: PolyMatrix) -> Poly:
    """Exact polynomial determinant.

    Cofactor expansion up to size 4; evaluation-interpolation at scaled
    Chebyshev nodes above that.
    """
    if R.rows != R.cols:
        raise ValueError("determinant requires a square matrix")
    n = R.rows
    if n <= 4:
        return _det_cofactor(R)
    dmax = int(n * max(R.degree, 0)) + 1
    scale = max(1.0, R.max_norm())
    xs = _interp_nodes(dmax, scale)
    ys = np.array([np.linalg.det(R(x)) for x in xs])
    return _fit_poly(xs, ys)


def adjugate(R: PolyMatrix) -> PolyMatrix:
    """Adjugate matrix, satisfying ``R @ adj(R) = det(R) * I``."""
    if R.rows != R.cols:
        raise ValueError("adjugate requires a square matrix")
    n = R.rows
    if n == 1:
        return PolyMatrix.identity(1)
    if n <= 4:
        out = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                minor = np.delete(np.delete(R.coeffs, i, axis=1), j, axis=2)
                cof = _det_cofactor(PolyMatrix(minor))
                if (i + j) % 2 == 1:
                    cof = -cof
                out[j][i] = cof  # transpose of the cofactor matrix
        return PolyMatrix.from_entries(out)
    dmax = int((n - 1) * max(R.degree, 0)) + 1
    scale = max(1.0, R.max_norm())
    xs = _interp_nodes(dmax, scale)
    samples = []
    for x in xs:
        M = R(x)
        samples.append(np.linalg.det(M) * np.linalg.inv(M))
    samples = np.array(samples)
    out = [[_fit_poly(xs, samples[:, i, j]) for j in range(n)] for i in range(n)]
    return PolyMatrix.from_entries(out)


def roots(p: Poly) -> np.ndarray:
    return poly_roots(p)


def is_hurwitz(R: PolyMatrix, tol: float = HURWITZ_TOL) -> bool:
    """True iff every root of ``det R`` has real part below ``-tol``."""
    d = determinant(R)
    if d.is_zero():
        raise ValueError("det R is identically zero")
    if d.degree == 0:
        return True
    return bool(np.all(poly_roots(d).real < -tol))


# ---------------------------------------------------------------------------
# division modulo a nonsingular R


def _require_nonsingular(R: PolyMatrix) -> Poly:
    if R.rows != R.cols:
        raise ValueError("expected a square matrix")
    d = determinant(R)
    if d.is_zero():
        raise ValueError("matrix is singular (det identically zero)")
    return d


def rational_decompose(F: PolyMatrix, R: PolyMatrix) -> tuple[RationalMatrix, PolyMatrix]:
    """Split ``F R^{-1} = S + N`` with ``S`` strictly proper and ``N`` polynomial.

    Row-wise long division of ``F adj(R)`` by ``det R``.
    """
    if F.cols != R.rows:
        raise ValueError("dimension mismatch between F and R")
    d = _require_nonsingular(R)
    G = F @ adjugate(R)
    num = [[None] * F.cols for _ in range(F.rows)]
    quo = [[None] * F.cols for _ in range(F.rows)]
    for i in range(F.rows):
        for j in range(F.cols):
            q, r = poly_divmod(G.entry(i, j), d)
            quo[i][j] = q
            num[i][j] = r
    S = RationalMatrix(PolyMatrix.from_entries(num), d)
    N = PolyMatrix.from_entries(quo)
    return S, N


def canonical_rep(F: PolyMatrix, R: PolyMatrix) -> PolyMatrix:
    """Canonical representative of ``F`` modulo ``R``.

    Returns ``G' = S R`` where ``S`` is the strictly proper part of
    ``F R^{-1}``; equivalently ``F - N R`` with ``N`` the polynomial part.
    """
    _, N = rational_decompose(F, R)
    return F - (N @ R)


def _cancel_common_roots(num: Poly, den: Poly, tol: float = GCD_ROOT_TOL):
    """Reduced (numerator, denominator) degrees after approximate gcd
    cancellation by root matching."""
    if num.is_zero():
        return MINUS_INF, den.degree
    nr = list(poly_roots(num))
    dr = list(poly_roots(den))
    kept_d = []
    for rt in dr:
        hit = None
        for i, nrt in enumerate(nr):
            if abs(rt - nrt) <= tol * max(1.0, abs(rt)):
                hit = i
                break
        if hit is None:
            kept_d.append(rt)
        else:
            nr.pop(hit)
    return float(len(nr)), float(len(kept_d))  # reduced degrees


def is_strictly_proper(N: PolyMatrix, D: PolyMatrix) -> bool:
    """True iff every entry of ``N D^{-1}`` is strictly proper after gcd
    cancellation with ``det D``."""
    if N.cols != D.rows:
        raise ValueError("dimension mismatch between N and D")
    d = _require_nonsingular(D)
    G = N @ adjugate(D)
    den_deg = d.degree
    for i in range(N.rows):
        for j in range(N.cols):
            e = G.entry(i, j)
            if e.is_zero():
                continue
            ndeg, ddeg = _cancel_common_roots(e, d)
            if ndeg >= ddeg:
                return False
    return True


# ---------------------------------------------------------------------------
# column reduction


def column_degrees(R: PolyMatrix) -> list[float]:
    degs = []
    for j in range(R.cols):
        col = R.coeffs[:, :, j]
        nz = np.nonzero(np.abs(col).max(axis=1) > 0)[0]
        degs.append(MINUS_INF if nz.size == 0 else float(nz[-1]))
    return degs


def leading_column_matrix(R: PolyMatrix) -> np.ndarray:
    degs = column_degrees(R)
    G = np.zeros(R.shape)
    for j, dj in enumerate(degs):
        if dj == MINUS_INF:
            continue
        G[:, j] = R.coeffs[int(dj), :, j]
    return G


def column_reduce(R: PolyMatrix, max_iter: int = 200) -> tuple[PolyMatrix, PolyMatrix]:
    """Column reduction ``R' = R U`` with ``U`` unimodular.

    Repeatedly cancels the highest-column-degree coefficient matrix along a
    null direction until it becomes nonsingular.
    """
    d = _require_nonsingular(R)
    n = R.cols
    Rp = R
    U = PolyMatrix.identity(n)
    for _ in range(max_iter):
        G = leading_column_matrix(Rp)
        s = np.linalg.svd(G, compute_uv=False)
        if s[-1] > 1e-10 * max(s[0], 1.0):
            return Rp, U
        v = np.linalg.svd(G)[2][-1]
        degs = column_degrees(Rp)
        active = [j for j in range(n) if abs(v[j]) > 1e-8]
        jstar = max(active, key=lambda j: degs[j])
        # column jstar <- sum_j v_j xi^(d_jstar - d_j) column_j
        op = [[Poly([1.0]) if i == j else Poly([0.0]) for j in range(n)] for i in range(n)]
        for j in range(n):
            if j == jstar:
                op[j][jstar] = Poly([v[j]])
            elif abs(v[j]) > 0:
                op[j][jstar] = Poly([v[j]]).shift(int(degs[jstar] - degs[j]))
        E = PolyMatrix.from_entries(op)
        Rp = Rp @ E
        U = U @ E
    raise RuntimeError("column reduction failed to terminate")


def unimodular_inverse(U: PolyMatrix) -> PolyMatrix:
    """Polynomial inverse of a unimodular matrix."""
    d = determinant(U)
    if d.degree != 0:
        raise ValueError("matrix is not unimodular (nonconstant determinant)")
    return adjugate(U).scale(1.0 / d.coeffs[0])


# ---------------------------------------------------------------------------
# JSON wire format: entries[row][col] = ascending coefficient list


def polymatrix_to_json(M: PolyMatrix) -> list:
    return [[list(map(float, M.entry(i, j).coeffs)) for j in range(M.cols)] for i in range(M.rows)]


def polymatrix_from_json(data) -> PolyMatrix:
    if not data or not data[0]:
        raise ValueError("empty polynomial matrix")
    return PolyMatrix.from_entries(data)
