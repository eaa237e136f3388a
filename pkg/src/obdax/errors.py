"""Exception types shared across the engine."""

from __future__ import annotations


class EngineError(Exception):
    """Base class for all engine-level errors."""


class InconsistentKBError(EngineError):
    """Raised when an operation requires a consistent knowledge base."""

    def __init__(self, message: str = "knowledge base is inconsistent",
                 axiom=None, witness=None):
        super().__init__(message)
        self.axiom = axiom
        self.witness = witness


class UnsupportedFragmentError(EngineError):
    """The TBox falls outside the fragments the operation supports."""


class RecursiveTBoxError(EngineError):
    """Plain saturation was asked to run over a TBox with recursive role chains."""


class CapExceededError(EngineError):
    """Saturation hit the configured step cap before reaching a fixpoint."""

    def __init__(self, steps: int, cap: int):
        super().__init__(f"rewriting step cap exceeded ({steps} >= {cap})")
        self.steps = steps
        self.cap = cap


class UnboundedOrUnknownError(EngineError):
    """No chain bound could be established for a recursion-safe KB."""


class UnsupportedShapeError(EngineError):
    """Containment was asked about a query outside the restricted shapes."""


class StaleMoveError(EngineError):
    """A reformulation move was applied to a query or KB it was not computed for."""


class NotADimensionVariableError(EngineError):
    """Navigation was requested on a variable not bound through a dimension role."""


class NoApplicableChainError(EngineError):
    """No navigation chain can be assembled for the requested variable."""


class EmptyConstraintSetError(EngineError):
    """The chain-bound of an empty order-constraint set is undefined."""
