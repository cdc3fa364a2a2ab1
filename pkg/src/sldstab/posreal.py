"""Positive-realness route to stability of two-mode switched systems.

For a pair of kernel representations with ``R2 R1^{-1}`` strictly proper, the
state space of mode 2 nests inside that of mode 1.  The *standard* gluing
conditions transport states through that nesting, and strict positive realness
of ``R2 R1^{-1}`` then yields a multiple Lyapunov function algebraically: a
spectral factor ``Q`` of the boundary form gives the storage function

    Psi_1 = (R1(z)^T R2(e) + R2(z)^T R1(e) - Q(z)^T Q(e)) / (z + e)

for mode 1, and ``Psi_2 = Psi_1 mod R2`` for mode 2.  Conversely a valid MLF
of this structure produces a strictly positive-real completion ``M`` with
``M R2 R1^{-1}`` SPR.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mlf import EPS_REL, MlfCertificate, mode_decay_forms, problem_scale, verify_mlf
from .model import SldsModel, _express_in_state_basis
from .polymat import (
    HURWITZ_TOL,
    MINUS_INF,
    Poly,
    PolyMatrix,
    adjugate,
    determinant,
    is_hurwitz,
    is_strictly_proper,
    poly_roots,
    rational_decompose,
    vstack,
)
from .qdf import (
    divide_by_zeta_plus_eta,
    to_canonical,
    two_var_from_pair,
    two_var_product,
)
from .statespace import coefficient_matrix, minimal_state_map, realize

FACTOR_TOL = 1e-8
AXIS_TOL = 1e-7


@dataclass(frozen=True)
class SpectralFactor:
    """Polynomial factor with ``Q(-xi)^T Q(xi)`` equal to a given boundary form."""

    Q: PolyMatrix


@dataclass(frozen=True)
class StandardSlds:
    """Two-mode system with nested state maps and standard gluing."""

    R1: PolyMatrix
    R2: PolyMatrix
    X1: PolyMatrix  # col(X2, X1p), minimal state map of mode 1
    X2: PolyMatrix  # minimal state map of mode 2
    X1p: PolyMatrix  # extra mode-1 state rows
    Pi: np.ndarray  # X1p mod R2 = Pi X2
    K: np.ndarray  # lim xi X1p R1^{-1} (constant feed-through)
    model: SldsModel

    @property
    def n1(self) -> int:
        return self.X1.rows

    @property
    def n2(self) -> int:
        return self.X2.rows


# ---------------------------------------------------------------------------
# strict positive realness


def para_hermitian_boundary(N: PolyMatrix, D: PolyMatrix) -> PolyMatrix:
    """The boundary polynomial ``D(-xi)^T N(xi) + N(-xi)^T D(xi)``.

    Evaluated at ``xi = j omega`` it equals ``G(-j w)^T + G(j w)`` scaled by
    ``D(-j w)^T (.) D(j w)``, so its positivity on the axis is the SPR
    boundary condition for ``G = N D^{-1}``.
    """
    return (D.subs_neg().T @ N) + (N.subs_neg().T @ D)


def _uncancelled_rhp_poles(N: PolyMatrix, D: PolyMatrix) -> list[complex]:
    """Closed-right-half-plane roots of det D surviving gcd reduction."""
    det = determinant(D)
    rts = poly_roots(det)
    bad = [r for r in rts if r.real > -HURWITZ_TOL]
    if not bad:
        return []
    G = N @ adjugate(D)
    poles = []
    # multiplicity of each candidate in det D
    for lam in bad:
        mult = sum(1 for r in rts if abs(r - lam) <= 1e-7 * max(1.0, abs(lam)))
        cancelled = True
        for i in range(G.rows):
            for j in range(G.cols):
                e = G.entry(i, j)
                if e.is_zero():
                    continue
                hits = sum(
                    1
                    for r in poly_roots(e)
                    if abs(r - lam) <= 1e-6 * max(1.0, abs(lam))
                )
                if hits < mult:
                    cancelled = False
        if not cancelled:
            poles.append(lam)
    return poles


def is_strictly_positive_real(
    N: PolyMatrix, D: PolyMatrix
) -> tuple[bool, dict]:
    """SPR test for ``G = N D^{-1}`` with a witness on failure.

    Checks analyticity in the closed right half-plane (uncancelled poles)
    and strict positivity of the boundary polynomial at ``omega = 0``
    together with absence of imaginary-axis roots of its determinant.
    """
    if D.rows != D.cols:
        raise ValueError("D must be square")
    if determinant(D).is_zero():
        raise ValueError("D is singular")
    poles = _uncancelled_rhp_poles(N, D)
    if poles:
        return False, {"reason": "pole in closed right half-plane", "pole": poles[0]}
    P = para_hermitian_boundary(N, D)
    P0 = 0.5 * (P(0.0) + P(0.0).T)
    lam0 = np.linalg.eigvalsh(P0)
    scale = max(1.0, P.max_norm())
    if lam0[0] <= AXIS_TOL * scale:
        return False, {"reason": "boundary form not positive definite", "omega": 0.0}
    detP = determinant(P)
    if detP.is_zero():
        return False, {"reason": "boundary determinant identically zero", "omega": None}
    if detP.degree > 0:
        for r in poly_roots(detP):
            if abs(r.real) <= AXIS_TOL * max(1.0, abs(r)):
                return False, {
                    "reason": "boundary form singular on the imaginary axis",
                    "omega": float(r.imag),
                }
    return True, {}


# ---------------------------------------------------------------------------
# spectral factorization


def _scalar_factor(p: Poly, R1: PolyMatrix | None) -> PolyMatrix:
    """Root-splitting factorization of an even scalar ``p(xi) = q(-xi)q(xi)``.

    From each ``{lam, -lam}`` root pair, picks the root keeping
    ``col(R1(lam), q(lam))`` full rank when ``R1`` is supplied; ties break
    toward the left half-plane.
    """
    if p.degree == MINUS_INF:
        raise ValueError("cannot factor the zero polynomial")
    deg = int(p.degree)
    if deg % 2 != 0:
        raise ValueError("boundary polynomial has odd degree")
    m = deg // 2
    lead = p.coeffs[-1] * (-1.0) ** m
    if lead <= 0:
        raise ValueError("boundary polynomial is indefinite (negative at infinity)")
    if m == 0:
        if p.coeffs[0] <= 0:
            raise ValueError("boundary polynomial is indefinite")
        return PolyMatrix.from_entries([[Poly([np.sqrt(p.coeffs[0])])]])
    rts = list(poly_roots(p))
    chosen = []
    while rts:
        r = rts.pop(0)
        # mate is the (approximate) mirror -r
        dists = [abs(r + s) for s in rts]
        j = int(np.argmin(dists))
        if dists[j] > 1e-6 * max(1.0, abs(r)):
            raise ValueError("roots do not come in +/- pairs (not para-even)")
        mate = rts.pop(j)
        pick, other = (r, mate) if r.real < mate.real else (mate, r)
        if R1 is not None:
            # avoid a common zero of R1 and q: rank col(R1(lam), q(lam)) = w
            d1 = determinant(R1)
            if abs(d1(pick)) <= 1e-7 * max(1.0, d1.coeffs[-1]) and abs(
                d1(other)
            ) > 1e-7 * max(1.0, d1.coeffs[-1]):
                pick = other
        chosen.append(pick)
    qm = np.sqrt(lead)
    coeffs = qm * np.poly(chosen)[::-1]  # ascending
    if np.max(np.abs(coeffs.imag)) > 1e-7 * max(1.0, np.max(np.abs(coeffs))):
        raise ValueError("root selection produced a non-real factor")
    return PolyMatrix(coeffs.real[:, None, None])


def _gram_factor(P: PolyMatrix) -> PolyMatrix:
    """Matrix spectral factor via a Gram-matrix semidefinite program.

    Searches a PSD block matrix G (blocks ``G_ij = Q_i^T Q_j``) whose signed
    anti-diagonal sums reproduce the coefficients of P, then factors G.  The
    resulting Q may have more than w rows.
    """
    from .sdp import LmiProblem  # local import to keep module deps acyclic

    w = P.cols
    deg = int(max(P.degree, 0))
    if deg % 2 != 0:
        raise ValueError("boundary polynomial matrix has odd degree")
    d = deg // 2
    nb = d + 1
    scale = max(1.0, P.max_norm())
    eps = 1e-9 * scale
    prob = LmiProblem()
    prob.add_symmetric("G", nb * w)
    prob.add_constraint("psd", lambda v: v["G"], "psd", 0.0)
    Pc = np.zeros((2 * d + 1, w, w))
    Pc[: P.coeffs.shape[0]] = P.coeffs

    def match(k):
        def expr(v, k=k):
            G = v["G"]
            acc = -Pc[k].copy()
            for i in range(nb):
                j = k - i
                if 0 <= j < nb:
                    acc += (-1.0) ** i * G[i * w : (i + 1) * w, j * w : (j + 1) * w]
            return acc

        return expr

    for k in range(2 * d + 1):
        prob.add_constraint(f"coef_{k}", match(k), "zero", 0.0)
    report = prob.solve(eps, budget=20_000)
    if not report.feasible:
        raise ValueError("boundary form admits no PSD Gram matrix (indefinite?)")
    G = report.values["G"]
    lam, U = np.linalg.eigh(0.5 * (G + G.T))
    keep = lam > 1e-10 * max(1.0, lam[-1])
    Qt = (np.sqrt(lam[keep])[:, None] * U[:, keep].T)  # r x (nb*w)
    r = Qt.shape[0]
    c = np.zeros((nb, r, w))
    for i in range(nb):
        c[i] = Qt[:, i * w : (i + 1) * w]
    return PolyMatrix(c)


def spectral_factorize(P: PolyMatrix, R1: PolyMatrix | None = None) -> SpectralFactor:
    """Factor a para-Hermitian line polynomial as ``P(xi) = Q(-xi)^T Q(xi)``.

    ``P`` is the one-variable boundary form (``P(j w)`` Hermitian PSD for all
    real ``w``); scalar inputs use exact root splitting, ``w = 2`` uses a
    Gram-matrix feasibility search, larger sizes are not supported.
    """
    if P.rows != P.cols:
        raise ValueError("boundary form must be square")
    w = P.cols
    scale = max(1.0, P.max_norm())
    # quick indefiniteness screen on a frequency sweep
    radius = 1.0 + scale
    for om in np.linspace(0.0, radius, 17):
        H = P(1j * om)
        H = 0.5 * (H + H.conj().T)
        if np.linalg.eigvalsh(H)[0] < -1e-9 * scale:
            raise ValueError(f"boundary form is indefinite (negative at omega={om:.3g})")
    if w == 1:
        Q = _scalar_factor(P.entry(0, 0), R1)
    elif w == 2:
        Q = _gram_factor(P)
    else:
        raise NotImplementedError(
            "matrix spectral factorization supported only up to 2x2"
        )
    resid = ((Q.subs_neg().T @ Q) - P).max_norm()
    if resid > FACTOR_TOL * scale:
        raise ValueError(f"spectral factorization residual {resid:.3e}")
    return SpectralFactor(Q=Q)


# ---------------------------------------------------------------------------
# standard SLDS construction


def build_standard_slds(R1: PolyMatrix, R2: PolyMatrix) -> StandardSlds:
    """Nested state maps, Pi and the standard gluing pairs for (R1, R2)."""
    if R1.shape != R2.shape or R1.rows != R1.cols:
        raise ValueError("R1 and R2 must be square with equal sizes")
    w = R1.cols
    if not is_strictly_proper(R2, R1):
        raise ValueError(
            "R2 R1^{-1} is not strictly proper; the biproper case is out of scope"
        )
    n1 = int(determinant(R1).degree)
    n2 = int(max(determinant(R2).degree, 0))
    if n1 - n2 != w:
        raise ValueError(
            f"state-dimension gap n1-n2 = {n1 - n2} differs from w = {w}; "
            "the input pair does not admit a standard construction"
        )
    X2 = minimal_state_map(R2)
    if X2.rows and not is_strictly_proper(X2, R1):
        raise ValueError("mode-2 state rows are not states of mode 1")
    # extend X2 to a minimal state map of mode 1 with rows from its own map
    Xc = minimal_state_map(R1)
    grid = int(max(Xc.degree, X2.degree if X2.rows else 0, 0)) + 1
    base = (
        coefficient_matrix(X2, grid) if X2.rows else np.zeros((0, grid * w))
    )
    picked = []
    rank = np.linalg.matrix_rank(base) if base.size else 0
    stack = base
    for i in range(Xc.rows):
        cand = coefficient_matrix(Xc.row(i), grid)
        trial = np.vstack([stack, cand])
        r = np.linalg.matrix_rank(trial)
        if r > rank:
            rank = r
            stack = trial
            picked.append(Xc.row(i))
        if rank == n1:
            break
    if len(picked) != n1 - n2:
        raise ValueError("failed to extend the mode-2 state basis to mode 1")
    X1p = vstack(picked)
    X1 = vstack([X2, X1p]) if X2.rows else X1p
    realize(R1, X1)  # validates X1 as a state map for mode 1
    Pi = _express_in_state_basis(X1p, R2, X2)
    # constant feed-through K = lim xi X1p R1^{-1}
    xi = Poly([0.0, 1.0])
    _, Kmat = rational_decompose(X1p.scale(xi), R1)
    if Kmat.degree > 0:
        raise ValueError("xi X1' R1^{-1} is not proper")
    K = Kmat.coeffs[0]
    if abs(np.linalg.det(K)) <= 1e-10:
        raise ValueError("feed-through matrix K is singular")
    PiX2 = PolyMatrix(Pi[None, :, :]) @ X2
    gluing = {
        (2, 1): (vstack([X2, PiX2]), X1),
        (1, 2): (X2, X2),
    }
    model = SldsModel(modes=[R1, R2], gluing=gluing, state_maps=[X1, X2])
    return StandardSlds(
        R1=R1, R2=R2, X1=X1, X2=X2, X1p=X1p, Pi=Pi, K=K, model=model
    )


# ---------------------------------------------------------------------------
# storage-function MLF (algebraic route)


def mlf_from_positive_real(s: StandardSlds) -> MlfCertificate:
    """Storage-function MLF for a standard SLDS with SPR ``R2 R1^{-1}``."""
    if not is_hurwitz(s.R1) or not is_hurwitz(s.R2):
        raise ValueError("both modes must be Hurwitz")
    ok, witness = is_strictly_positive_real(s.R2, s.R1)
    if not ok:
        raise ValueError(f"R2 R1^-1 is not strictly positive real: {witness}")
    P = para_hermitian_boundary(s.R2, s.R1)
    Q = spectral_factorize(P, s.R1).Q
    if not is_strictly_proper(Q, s.R1):
        raise ValueError("spectral factor Q R1^{-1} is not strictly proper")
    phi = two_var_from_pair(s.R1, s.R2)
    psi1 = divide_by_zeta_plus_eta(phi - two_var_product(Q, Q))
    K1 = to_canonical(psi1, s.X1, s.R1).kernel
    from .qdf import qdf_mod

    psi2 = qdf_mod(psi1, s.R2)
    if s.X2.rows:
        K2 = to_canonical(psi2, s.X2, s.R2).kernel
    else:
        K2 = np.zeros((0, 0))
    n2 = s.n2
    # structural identity of the storage kernel: Psi_12 = -Pi^T Psi_22
    P12 = K1[:n2, n2:]
    P22 = K1[n2:, n2:]
    berr = np.max(np.abs(P12 + s.Pi.T @ P22)) if P12.size else 0.0
    if berr > 1e-7 * max(1.0, np.max(np.abs(K1))):
        raise ValueError(f"storage kernel violates the block structure ({berr:.3e})")
    eps = EPS_REL * problem_scale(s.model)
    mults = [real.B.T @ K for real, K in zip(s.model.realizations, (K1, K2))]
    cert = MlfCertificate(
        route="posreal",
        epsilon=eps,
        kernels=[K1, K2],
        multipliers=mults,
        margins={},
        solver={"feasible": True, "iterations": 0, "budget": 0},
        fbars=mode_decay_forms(s.model, [K1, K2]),
    )
    ok, margins = verify_mlf(s.model, cert)
    cert.margins = margins
    cert.solver["feasible"] = bool(ok)
    return cert


# ---------------------------------------------------------------------------
# positive-real completion


def positive_real_completion(s: StandardSlds, cert: MlfCertificate) -> PolyMatrix:
    """Completion ``M`` with ``M R2 R1^{-1}`` strictly positive real.

    Uses the closed form ``M = K^T Psi_22 P`` where ``P`` is the polynomial
    part of ``X1' R2^{-1}``; validated by reconstructing the dissipation
    identity and re-running the SPR check on ``M R2 R1^{-1}``.
    """
    K1 = np.asarray(cert.kernels[0], dtype=float)
    n2 = s.n2
    P22 = K1[n2:, n2:]
    # hypothesis: the dissipation rate has full rank on the axis
    P = para_hermitian_boundary(s.R2, s.R1)
    detP = determinant(P)
    if detP.is_zero():
        raise ValueError("dissipation form is rank deficient everywhere")
    if detP.degree > 0:
        for r in poly_roots(detP):
            if abs(r.real) <= AXIS_TOL * max(1.0, abs(r)):
                raise ValueError(
                    f"rank Q(j omega) drops at omega = {r.imag:.6g}; "
                    "the completion hypothesis fails"
                )
    _, Ppoly = rational_decompose(s.X1p, s.R2)
    Mconst = s.K.T @ P22
    M = PolyMatrix(Mconst[None, :, :]) @ Ppoly
    # reconstruct (z+e)Psi1 = -Q^T Q + V(z)^T R1(e) + R1(z)^T V(e), V = M R2
    Q = spectral_factorize(P, s.R1).Q
    from .qdf import qdf_derivative, sandwich

    V = M @ s.R2
    lhs = qdf_derivative(sandwich(s.X1, K1))
    rhs = two_var_from_pair(V, s.R1) - two_var_product(Q, Q)
    resid = (lhs - rhs).max_norm()
    if resid > 1e-7 * max(1.0, lhs.max_norm()):
        raise ValueError(f"completion identity residual {resid:.3e}")
    if not check_completion(M, s.R2, s.R1):
        raise ValueError("computed M fails the SPR completion check")
    return M


def check_completion(M: PolyMatrix, R2: PolyMatrix, R1: PolyMatrix) -> bool:
    """True iff ``M R2 R1^{-1}`` is strictly positive real."""
    ok, _ = is_strictly_positive_real(M @ R2, R1)
    return ok
