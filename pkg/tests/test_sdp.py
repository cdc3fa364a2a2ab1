import numpy as np
import pytest

from sldstab.sdp import LmiProblem


def _lyapunov_problem(A, eps):
    """Find K > 0 with A^T K + K A < 0 for a Hurwitz A."""
    prob = LmiProblem()
    n = A.shape[0]
    prob.add_symmetric("K", n)
    prob.add_constraint("pos", lambda v: v["K"], "psd", shift=eps)
    prob.add_constraint(
        "decay", lambda v: A.T @ v["K"] + v["K"] @ A, "nsd", shift=eps
    )
    return prob


class TestFeasible:
    def test_scalar_lyapunov(self):
        A = np.array([[-1.0]])
        prob = _lyapunov_problem(A, 1e-7)
        rep = prob.solve(eps=1e-7)
        assert rep.feasible
        K = rep.values["K"]
        assert K[0, 0] > 0
        assert (A.T @ K + K @ A)[0, 0] < 0

    def test_coupled_blocks(self):
        # K1 - K2 == 0 forced through an equality; both must stay psd
        prob = LmiProblem()
        prob.add_symmetric("K1", 2)
        prob.add_symmetric("K2", 2)
        prob.add_constraint("eq", lambda v: v["K1"] - v["K2"], "zero")
        prob.add_constraint("p1", lambda v: v["K1"], "psd", shift=1e-6)
        A = np.array([[-2.0, 1.0], [0.0, -3.0]])
        prob.add_constraint(
            "d2", lambda v: A.T @ v["K2"] + v["K2"] @ A, "nsd", shift=1e-6
        )
        rep = prob.solve(eps=1e-6)
        assert rep.feasible
        assert np.allclose(rep.values["K1"], rep.values["K2"], atol=1e-8)

    def test_warm_start_accepted_immediately(self):
        A = np.array([[-1.0]])
        prob = _lyapunov_problem(A, 1e-7)
        rep = prob.solve(eps=1e-7, warm_start={"K": np.array([[1.0]])})
        assert rep.feasible
        assert rep.iterations == 0

    def test_rectangular_variable(self):
        prob = LmiProblem()
        prob.add_symmetric("K", 1)
        prob.add_matrix("Y", 1, 2)
        target = np.array([[3.0, -1.0]])
        prob.add_constraint(
            "fix", lambda v: np.diag((v["Y"] - target).ravel()), "zero"
        )
        prob.add_constraint("pos", lambda v: v["K"], "psd", shift=1e-6)
        rep = prob.solve(eps=1e-6)
        assert rep.feasible
        assert np.allclose(rep.values["Y"], target, atol=1e-9)


class TestInfeasible:
    def test_contradictory_cones(self):
        prob = LmiProblem()
        prob.add_symmetric("K", 1)
        prob.add_constraint("up", lambda v: v["K"] - 1.0 * np.eye(1), "psd")
        prob.add_constraint("dn", lambda v: v["K"] + 1.0 * np.eye(1), "nsd")
        rep = prob.solve(eps=1e-8, budget=2000)
        assert not rep.feasible
        # the report still carries the worst margins honestly
        assert min(rep.margins.values()) < 0

    def test_unstable_lyapunov(self):
        A = np.array([[1.0]])  # not Hurwitz: no K > 0 can work
        prob = _lyapunov_problem(A, 1e-6)
        rep = prob.solve(eps=1e-6, budget=2000)
        assert not rep.feasible


class TestDeterminism:
    def test_identical_runs(self):
        A = np.array([[-2.0, 1.0], [-1.0, -1.0]])
        r1 = _lyapunov_problem(A, 1e-7).solve(eps=1e-7)
        r2 = _lyapunov_problem(A, 1e-7).solve(eps=1e-7)
        assert r1.iterations == r2.iterations
        assert np.array_equal(r1.values["K"], r2.values["K"])


class TestVerify:
    def test_margins_match_solution(self):
        A = np.array([[-2.0, 1.0], [-1.0, -1.0]])
        prob = _lyapunov_problem(A, 1e-7)
        rep = prob.solve(eps=1e-7)
        margins = prob.verify(rep.values, eps=1e-7)
        assert set(margins) == {"pos", "decay"}
        for name, m in margins.items():
            assert m == pytest.approx(rep.margins[name], abs=1e-12)
            assert m >= 0.5e-7

    def test_verify_flags_violation(self):
        A = np.array([[-1.0]])
        prob = _lyapunov_problem(A, 1e-7)
        margins = prob.verify({"K": np.array([[-1.0]])}, eps=1e-7)
        assert margins["pos"] < 0

    def test_zero_sense_margin(self):
        prob = LmiProblem()
        prob.add_symmetric("K", 1)
        prob.add_constraint("eq", lambda v: v["K"] - np.eye(1), "zero")
        good = prob.verify({"K": np.array([[1.0]])}, eps=1e-9)
        bad = prob.verify({"K": np.array([[1.5]])}, eps=1e-9)
        assert good["eq"] > 0 > bad["eq"]


class TestValidation:
    def test_duplicate_variable(self):
        prob = LmiProblem()
        prob.add_symmetric("K", 2)
        with pytest.raises(ValueError):
            prob.add_matrix("K", 1, 1)

    def test_unknown_sense(self):
        prob = LmiProblem()
        with pytest.raises(ValueError):
            prob.add_constraint("c", lambda v: np.eye(1), "geq")

    def test_nonsquare_constraint(self):
        prob = LmiProblem()
        prob.add_matrix("Y", 1, 2)
        prob.add_constraint("c", lambda v: v["Y"], "psd")
        with pytest.raises(ValueError):
            prob.solve(eps=1e-8)
