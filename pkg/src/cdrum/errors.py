"""Exception hierarchy."""

from __future__ import annotations


class CdrumError(Exception):
    """Base class for every error raised by the package."""


class ParseError(CdrumError, ValueError):
    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(f"field {field}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.field = field
        self.line = line


class ValidationError(CdrumError, ValueError):
    pass


class NegativeProbability(ValidationError):
    def __init__(self, entry, value):
        super().__init__(f"negative probability {value} at {entry}")
        self.entry = entry
        self.value = value


class NormalizationFailure(ValidationError):
    def __init__(self, menus, deviation):
        super().__init__(f"probabilities for menus {menus} deviate from one by {deviation}")
        self.menus = menus
        self.deviation = deviation


class ChoiceOutsideMenu(ValidationError):
    def __init__(self, entry):
        super().__init__(f"choice outside its menu at {entry}")
        self.entry = entry


class DomainIncomplete(CdrumError):
    def __init__(self, missing):
        super().__init__(f"operation needs the full menu lattice; missing menu sequence {missing}")
        self.missing = missing


class MarginalityViolated(CdrumError):
    def __init__(self, report):
        w = report.witnesses[0] if report.witnesses else None
        super().__init__(f"marginality fails ({report.n_violations} violations; first {w})")
        self.report = report


class NotCdrum(CdrumError):
    def __init__(self, verdict):
        failed = [k for k, r in verdict.reports.items() if not r.holds]
        super().__init__(f"rule is not consistent with CDRUM; failing: {', '.join(failed)}")
        self.verdict = verdict


class NegativeCapacity(CdrumError):
    pass


class ConservationViolated(CdrumError):
    pass


class UniverseTooLarge(CdrumError):
    pass


class SolverStalled(CdrumError):
    def __init__(self, residual):
        super().__init__(f"QP solver stopped with first-order residual {residual:.3e}")
        self.residual = residual


class PositivityViolated(CdrumError):
    pass
