import pytest
from pydantic import ValidationError

from app.model.algebra import Projection, TracialAlgebra
from app.model.errors import InequalityViolationError
from app.model.reports import ChainConstants, MuDirection, MuEstimate, MuMethod, TnBoundsReport


def _report(passed: bool) -> TnBoundsReport:
    return TnBoundsReport(
        passed=passed,
        n=2,
        p=0.5,
        lower=1.0,
        computed=4.2,
        upper=20.0,
        lower_ok=passed,
        upper_ok=True,
        shift_norm=1.0,
        shift_identity_ok=True,
    )


def test_enforce_raises_with_report():
    report = _report(False)
    with pytest.raises(InequalityViolationError) as info:
        report.enforce(strict=True)
    assert info.value.report is report
    assert report.failures() == ["lower_ok"]
    assert report.enforce(strict=False) is report
    assert _report(True).enforce(strict=True).passed


def test_upper_bound_needs_witness():
    with pytest.raises(ValidationError):
        MuEstimate(t=0.25, value=1.0, direction=MuDirection.UPPER_BOUND, method=MuMethod.GRASSMANN_SEARCH)


def test_certified_bound_forbids_witness():
    e = Projection.identity(TracialAlgebra.normalized(4))
    with pytest.raises(ValidationError):
        MuEstimate(
            t=0.25,
            value=1.0,
            witness=e,
            direction=MuDirection.CERTIFIED_LOWER_BOUND,
            method=MuMethod.ANALYTIC_CERTIFICATE,
        )


def test_witness_corank_within_budget():
    alg = TracialAlgebra.normalized(4)
    with pytest.raises(ValidationError):
        MuEstimate(
            t=0.25,
            value=1.0,
            witness=Projection.diagonal([1, 0, 0, 1], alg),
            direction=MuDirection.UPPER_BOUND,
            method=MuMethod.DIAG_EXHAUSTIVE,
        )


def test_chain_constants_ranges():
    with pytest.raises(ValidationError):
        ChainConstants(p=0.25, c_p=0.1, C_p=1.0, t_prime=1.5, delta=0.1)
