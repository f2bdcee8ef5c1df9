"""Error taxonomy shared by all modules.

Every rejected input raises a subclass of CtmcError carrying enough
context (state index, offending value) to point at the problem.
Warnings (non-fatal degradations) live at the bottom.
"""

from __future__ import annotations


class CtmcError(Exception):
    """Base class for all model/analysis errors raised by this package."""


# ---------------------------------------------------------------- model


class RowSumError(CtmcError):
    def __init__(self, state: int, total: float):
        self.state = state
        self.total = total
        super().__init__(f"row of state {state} sums to {total!r}, expected 1")


class NonpositiveRate(CtmcError):
    def __init__(self, state: int):
        self.state = state
        super().__init__(f"state {state} has non-positive exit rate")


class NonAbsorbingGoal(CtmcError):
    pass


class NonpositiveScale(CtmcError):
    pass


class EmptyGoalSet(CtmcError):
    pass


class RateTooSmall(CtmcError):
    def __init__(self, q: float, max_rate: float):
        self.q = q
        self.max_rate = max_rate
        super().__init__(f"uniformization rate {q} is below the maximal exit rate {max_rate}")


class NoGoalState(CtmcError):
    pass


class NonUniformRates(CtmcError):
    pass


# ---------------------------------------------------------------- bisim


class PairNotRelated(CtmcError):
    pass


class NotBisimilar(CtmcError):
    pass


# ---------------------------------------------------------------- erlang / bounds


class NotApplicable(CtmcError):
    """The requested quantity is undefined for these inputs (e.g. an
    expected-hit-count bound on a chain that may never reach the goal)."""


# ---------------------------------------------------------------- spectral


class WrongKind(CtmcError):
    pass


class ModulusOneNotOne(CtmcError):
    """An eigenvalue of modulus ~1 that is not ~1, or a multiplicity mismatch
    with the absorbing-state count: absorption is not almost sure."""


class DecompositionUnstable(CtmcError):
    def __init__(self, residual: float, tol: float):
        self.residual = residual
        self.tol = tol
        super().__init__(f"reconstruction residual {residual:g} exceeds tolerance {tol:g}")


class SpectralGapZero(CtmcError):
    pass


class AcyclicChain(CtmcError):
    """All transient eigenvalues vanish; use the exact finite-sum route."""


class NotAcyclic(CtmcError):
    pass


# ---------------------------------------------------------------- rewards


class NonzeroReward(CtmcError):
    pass


class AbsorbingState(CtmcError):
    pass


class ZeroRewardCycle(CtmcError):
    pass


class ZeroReward(CtmcError):
    def __init__(self, state: int):
        self.state = state
        super().__init__(f"state {state} has zero reward")


# ---------------------------------------------------------------- pair uniformization


class NotTransitive(CtmcError):
    pass


class NotZeroDeltaBisim(CtmcError):
    pass


# ---------------------------------------------------------------- warnings


class OrderingAssumptionViolated(UserWarning):
    """The input pair fails the assumed reachability ordering on the check
    grid; the transformation is still returned, the ordering check skipped."""


class DecompositionFallbackWarning(UserWarning):
    """A spectral bound degraded to the length-capped chain bound because the
    matrix decomposition failed or was rejected."""
