"""Multiple Lyapunov functions for switched linear differential systems.

Per mode k the certificate is a quadratic differential form
``Q_k(w) = x^T Kbar_k x`` over the minimal state map, found from the
polynomial Lyapunov equation in coefficient-matrix form:

    Xb^T Kbar Xa + Xa^T Kbar Xb - Xa^T Ybar^T Rt - Rt^T Ybar Xa  <=  0
    A^T Kbar + Kbar A                                            <= -eps I
    Kbar                                                         >=  eps I

where ``Rt = [R_0 ... R_L]`` stacks the coefficient matrices of the kernel
representation, ``Xa = [X_0 ... X_{L-1} 0]`` and ``Xb`` its one-block shift
(the coefficient form of ``xi X``).  At a transition k -> l with
re-initialisation map L the value must not increase:

    Kbar_k - L^T Kbar_l L  >=  0        (conservative: all states)

or, on the exact route, only along the mode-k eigendirections ``V_k``,
which gives a Hermitian inequality realified as ``[[Re H, -Im H],
[Im H, Re H]] >= 0``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .model import SldsModel, reinit_maps
from .sdp import DEFAULT_BUDGET, LmiProblem
from .statespace import coefficient_matrix, eigenstructure

EPS_REL = 1e-7


@dataclass
class MlfCertificate:
    route: str  # "exact" | "conservative" | "posreal"
    epsilon: float
    kernels: list[np.ndarray]  # Kbar per mode
    multipliers: list[np.ndarray]  # Ybar per mode
    margins: dict  # constraint name -> margin at the stored values
    solver: dict  # iterations, feasible flag, budget
    fbars: list | None = None  # A^T Kbar + Kbar A per mode

    @property
    def feasible(self) -> bool:
        return bool(self.solver.get("feasible", False))


def mode_decay_forms(model: SldsModel, kernels) -> list[np.ndarray]:
    """Closed-form decay matrices ``Fbar_k = A_k^T Kbar_k + Kbar_k A_k``."""
    out = []
    for real, K in zip(model.realizations, kernels):
        K = np.asarray(K, dtype=float)
        out.append(real.A.T @ K + K @ real.A)
    return out


def _mode_data(model: SldsModel):
    """Coefficient matrices (Rt, Xa, Xb) and (A, B) per mode."""
    data = []
    for real in model.realizations:
        L = int(max(real.R.degree, 1))
        grid = L + 1
        Rt = coefficient_matrix(real.R, grid)
        Xa = coefficient_matrix(real.X, grid)
        w = real.w
        Xb = np.zeros_like(Xa)
        Xb[:, w:] = Xa[:, :-w]
        data.append((Rt, Xa, Xb, real.A, real.B))
    return data


def _realify(H: np.ndarray) -> np.ndarray:
    """Real symmetric embedding of a Hermitian matrix (same definiteness)."""
    return np.block([[H.real, -H.imag], [H.imag, H.real]])


def problem_scale(model: SldsModel) -> float:
    """Natural magnitude of a Lyapunov certificate for the model.

    Uses the per-mode solutions of ``A^T K + K A = -I``; the LMI tolerance
    ``eps`` is relative to this.
    """
    best = 0.0
    for real in model.realizations:
        K = scipy.linalg.solve_lyapunov(real.A.T, -np.eye(real.n))
        best = max(best, float(np.max(np.abs(K))))
    return max(best, 1e-300)


def _warm_start(model: SldsModel) -> dict:
    """Per-mode Lyapunov pairs ``K = lyap(A)``, ``Ybar = B^T K``."""
    values = {}
    for k, real in enumerate(model.realizations, start=1):
        K = scipy.linalg.solve_lyapunov(real.A.T, -np.eye(real.n))
        values[f"K{k}"] = 0.5 * (K + K.T)
        values[f"Y{k}"] = real.B.T @ values[f"K{k}"]
    return values


def assemble_ple_lmi(
    R, X, Qbar, require_positive: bool = False, eps: float = 0.0
) -> LmiProblem:
    """Single-mode polynomial Lyapunov equation with a fixed supply rate.

    Encodes, over the stacked coefficient matrices, the equality

        (zeta+eta) X(zeta)^T Kbar X(eta)
            = Y(zeta)^T R(eta) + R(zeta)^T Y(eta) - Q(zeta)^T Q(eta)

    with ``Q = Qbar X`` given and ``(Kbar, Ybar)`` unknown.  With
    ``require_positive`` an additional ``Kbar >= eps I`` constraint is added.
    """
    from .statespace import realize

    real = realize(R, X)
    L = int(max(R.degree, 1))
    grid = L + 1
    Rt = coefficient_matrix(R, grid)
    Xa = coefficient_matrix(X, grid)
    w = R.shape[1]
    Xb = np.zeros_like(Xa)
    Xb[:, w:] = Xa[:, :-w]
    Qbar = np.atleast_2d(np.asarray(Qbar, dtype=float))
    if Qbar.shape[1] != real.n:
        raise ValueError(
            f"Qbar has {Qbar.shape[1]} columns, state dimension is {real.n}"
        )
    QX = Qbar @ Xa

    prob = LmiProblem()
    prob.add_symmetric("K", real.n)
    prob.add_matrix("Y", w, real.n)

    def ple(v):
        K, Y = v["K"], v["Y"]
        return (
            Xb.T @ K @ Xa
            + Xa.T @ K @ Xb
            - Xa.T @ Y.T @ Rt
            - Rt.T @ Y @ Xa
            + QX.T @ QX
        )

    prob.add_constraint("ple", ple, "zero")
    if require_positive:
        prob.add_constraint("pos", lambda v: v["K"], "psd", eps)
    return prob


def assemble_mlf_lmis(
    model: SldsModel, eps: float, conservative: bool = False, strict: bool = True
) -> LmiProblem:
    """Build the feasibility problem for an MLF certificate.

    ``conservative=True`` imposes the switch conditions on the whole state
    space instead of the mode eigendirections, which avoids computing the
    eigenstructure (and works for defective modes) at the cost of
    conservatism.  ``strict=False`` relaxes decay/positivity to the
    semidefinite sense, which is what storage-function certificates satisfy
    (their decay rate is a dissipation form with a nontrivial kernel).
    """
    prob = LmiProblem()
    data = _mode_data(model)
    for k, (Rt, Xa, Xb, A, B) in enumerate(data, start=1):
        n, w = A.shape[0], model.w
        prob.add_symmetric(f"K{k}", n)
        prob.add_matrix(f"Y{k}", w, n)

        def ple(v, Rt=Rt, Xa=Xa, Xb=Xb, k=k):
            K, Y = v[f"K{k}"], v[f"Y{k}"]
            return Xb.T @ K @ Xa + Xa.T @ K @ Xb - Xa.T @ Y.T @ Rt - Rt.T @ Y @ Xa

        def decay(v, A=A, k=k):
            K = v[f"K{k}"]
            return A.T @ K + K @ A

        def pos(v, k=k):
            return v[f"K{k}"]

        shift = eps if strict else 0.0
        prob.add_constraint(f"ple_{k}", ple, "nsd", 0.0)
        prob.add_constraint(f"decay_{k}", decay, "nsd", shift)
        prob.add_constraint(f"pos_{k}", pos, "psd", shift)
    rmaps = reinit_maps(model)
    eig = None
    if not conservative:
        eig = [
            eigenstructure(model.modes[i], model.state_maps[i])
            for i in range(model.n_modes)
        ]
    for (k, l), rm in sorted(rmaps.items()):
        L = rm.L
        if conservative:

            def switch(v, L=L, k=k, l=l):
                return v[f"K{k}"] - L.T @ v[f"K{l}"] @ L

        else:
            V = eig[k - 1].V

            def switch(v, L=L, V=V, k=k, l=l):
                H = V.conj().T @ (v[f"K{k}"] - L.T @ v[f"K{l}"] @ L) @ V
                return _realify(H)

        prob.add_constraint(f"switch_{k}_{l}", switch, "psd", 0.0)
    return prob


def find_mlf(
    model: SldsModel,
    conservative: bool = False,
    eps: float | None = None,
    budget: int = DEFAULT_BUDGET,
) -> MlfCertificate:
    """Search for an MLF certificate; check ``.feasible`` on the result."""
    if eps is None:
        eps = EPS_REL * problem_scale(model)
    prob = assemble_mlf_lmis(model, eps, conservative=conservative)
    report = prob.solve(eps, budget=budget, warm_start=_warm_start(model))
    kernels = [report.values[f"K{k}"] for k in range(1, model.n_modes + 1)]
    mults = [report.values[f"Y{k}"] for k in range(1, model.n_modes + 1)]
    return MlfCertificate(
        route="conservative" if conservative else "exact",
        epsilon=eps,
        kernels=kernels,
        multipliers=mults,
        margins=report.margins,
        solver={
            "feasible": report.feasible,
            "iterations": report.iterations,
            "budget": budget,
        },
        fbars=mode_decay_forms(model, kernels),
    )


def verify_mlf(
    model: SldsModel, cert: MlfCertificate, eps: float | None = None
) -> tuple[bool, dict]:
    """Independent margin re-check of a certificate against a model.

    Rebuilds all constraints from scratch and evaluates them at the stored
    kernels; returns (all margins >= eps/2, margins).
    """
    if eps is None:
        eps = cert.epsilon
    prob = assemble_mlf_lmis(
        model,
        eps,
        conservative=(cert.route == "conservative"),
        strict=(cert.route != "posreal"),
    )
    values = {}
    for k in range(1, model.n_modes + 1):
        values[f"K{k}"] = np.asarray(cert.kernels[k - 1], dtype=float)
        values[f"Y{k}"] = np.asarray(cert.multipliers[k - 1], dtype=float)
    margins = prob.verify(values, eps)
    ok = all(m >= eps / 2 for m in margins.values())
    return ok, margins


def scan_canonical_family(
    model: SldsModel, ratios=None, eps: float | None = None
) -> dict:
    """Scan the one-parameter candidate family of scalar-state models.

    For models whose modes all have McMillan degree 1 the canonical
    quadratic candidates are ``c_k x_k^2`` with ``c_k > 0``; after scale
    normalization (``c_1 = 1``) a two-mode model leaves a single free ratio.
    Each grid point is evaluated against the three certificate conditions —
    positivity on the mode, decay along the mode, and non-increase at
    switches — and the binding (worst-margin) condition is recorded.

    The scan verdict is cross-checked against the LMI search so that the
    report is self-consistent; see the README's "known discrepancies" note
    for the documented external disagreement on the averaging-gluing
    two-mode example.
    """
    if model.n_modes != 2:
        raise ValueError("family scan is implemented for two-mode models")
    if any(real.n != 1 for real in model.realizations):
        raise ValueError("family scan requires McMillan degree 1 in every mode")
    if eps is None:
        eps = EPS_REL * problem_scale(model)
    if ratios is None:
        ratios = np.geomspace(1e-3, 1e3, 121)
    prob = assemble_mlf_lmis(model, eps, conservative=False)
    groups = {"positivity": ("pos_",), "decay": ("decay_", "ple_"), "switch": ("switch_",)}
    results = []
    feasible_ratios = []
    for r in ratios:
        values = {}
        for k, real in enumerate(model.realizations, start=1):
            c = 1.0 if k == 1 else float(r)
            K = np.array([[c]])
            values[f"K{k}"] = K
            values[f"Y{k}"] = real.B.T @ K
        margins = prob.verify(values, eps)
        group_margins = {
            g: min(m for name, m in margins.items() if name.startswith(pre))
            for g, pre in groups.items()
        }
        binding = min(group_margins, key=group_margins.get)
        ok = all(m >= eps / 2 for m in margins.values())
        if ok:
            feasible_ratios.append(float(r))
        results.append(
            {
                "ratio": float(r),
                "margins": {k: float(v) for k, v in margins.items()},
                "group_margins": {k: float(v) for k, v in group_margins.items()},
                "binding": binding,
                "feasible": ok,
            }
        )
    cert = find_mlf(model)
    scan_feasible = bool(feasible_ratios)
    return {
        "family": "K_k = c_k (scalar states); c_1 normalized to 1",
        "epsilon": float(eps),
        "results": results,
        "feasible_ratios": feasible_ratios,
        "scan_feasible": scan_feasible,
        "lmi_feasible": cert.feasible,
        "consistent": scan_feasible == cert.feasible,
        "note": (
            "This verdict is computed, not asserted: external analyses of the "
            "averaging-gluing two-mode example report that no quadratic "
            "candidate works and the system is unstable, which disagrees with "
            "a direct reading of the mode equations used here.  See the "
            "documented open question in the README."
        ),
    }


# ---------------------------------------------------------------------------
# certificate JSON


def certificate_to_json(cert: MlfCertificate) -> dict:
    modes = []
    fbars = cert.fbars if cert.fbars is not None else [None] * len(cert.kernels)
    for k, (K, Y, F) in enumerate(zip(cert.kernels, cert.multipliers, fbars), start=1):
        entry = {"K": np.asarray(K).tolist(), "Y": np.asarray(Y).tolist()}
        if F is not None:
            entry["F"] = np.asarray(F).tolist()
        entry["margins"] = {
            name: float(m)
            for name, m in cert.margins.items()
            if name.endswith(f"_{k}") and not name.startswith("switch")
        }
        modes.append(entry)
    transitions = []
    for name, m in sorted(cert.margins.items()):
        if name.startswith("switch_"):
            _, k, l = name.split("_")
            transitions.append(
                {"from": int(k), "to": int(l), "switch_margin": float(m)}
            )
    return {
        "route": cert.route,
        "epsilon": cert.epsilon,
        "modes": modes,
        "transitions": transitions,
        "margins": {k: float(v) for k, v in cert.margins.items()},
        "solver": cert.solver,
    }


def certificate_from_json(doc: dict) -> MlfCertificate:
    for key in ("route", "epsilon", "modes"):
        if key not in doc:
            raise ValueError(f"certificate missing key '{key}'")
    kernels = [np.asarray(m["K"], dtype=float) for m in doc["modes"]]
    mults = [np.asarray(m["Y"], dtype=float) for m in doc["modes"]]
    fbars = None
    if all("F" in m for m in doc["modes"]):
        fbars = [np.asarray(m["F"], dtype=float) for m in doc["modes"]]
    for K, Y in zip(kernels, mults):
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise ValueError("kernel K must be square")
        if not np.allclose(K, K.T, atol=1e-12 * max(1.0, np.abs(K).max())):
            raise ValueError("kernel K must be symmetric")
        if Y.ndim != 2 or Y.shape[1] != K.shape[0]:
            raise ValueError("multiplier Y has incompatible shape")
    return MlfCertificate(
        route=str(doc["route"]),
        epsilon=float(doc["epsilon"]),
        kernels=kernels,
        multipliers=mults,
        margins={k: float(v) for k, v in doc.get("margins", {}).items()},
        solver=dict(doc.get("solver", {})),
        fbars=fbars,
    )


def save_certificate(cert: MlfCertificate, path) -> None:
    with open(path, "w") as fh:
        json.dump(certificate_to_json(cert), fh, indent=2)


def load_certificate(path) -> MlfCertificate:
    with open(path) as fh:
        return certificate_from_json(json.load(fh))
