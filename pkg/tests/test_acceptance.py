"""Acceptance suite: one test per criterion, one printed line each.

A1 and A5 fail by design of the measurement, not of the solver: both
encode the stability estimates' upper-bound rates as expected measured
exponents, and on this discretization the scheme controls divergence and
penalization strictly better than those bounds (see the summaries the
tests print, and docs in the criterion functions). They are kept red
rather than loosened.
"""

from vppflow.acceptance import run_criterion

# stated wall-clock budgets (seconds)
BUDGETS = {"A1": 120.0, "A4": 5.0, "A5": 600.0, "A8": 10.0}


def _check(name):
    res = run_criterion(name)
    status = "PASS" if res.passed else "FAIL"
    print(f"\n[{status}] {res.name}: {res.summary} ({res.elapsed:.1f}s)")
    for key, val in res.details.items():
        print(f"    {key}: {val}")
    if name in BUDGETS:
        assert res.elapsed <= BUDGETS[name], \
            f"{name} exceeded its runtime budget: {res.elapsed:.1f}s"
    assert res.passed, f"{res.name}: {res.summary}"


def test_a1_divergence_eps_scaling():
    _check("A1")


def test_a2_energy_stability():
    _check("A2")


def test_a3_manufactured_convergence():
    _check("A3")


def test_a4_splitting_limit_oracle_equivalence():
    _check("A4")


def test_a5_penalization_slip_scaling():
    _check("A5")


def test_a6_interior_rigid_motion():
    _check("A6")


def test_a7_translation_estimator():
    _check("A7")


def test_a8_operator_algebra():
    _check("A8")
