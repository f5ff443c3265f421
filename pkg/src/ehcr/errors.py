"""Exception types raised by the model and solvers."""


class ModelError(ValueError):
    """Base class for all model errors."""


class InvalidScenario(ModelError):
    pass


class InfeasibleDevice(ModelError):
    """A device cannot afford to transmit for any harvesting ratio."""

    def __init__(self, device_id, ratio):
        super().__init__(
            f"device {device_id}: minimum harvesting ratio {ratio:.6g} >= 1"
        )
        self.device_id = device_id
        self.ratio = ratio


class UndefinedPower(ModelError):
    pass


class InfeasibleMu(ModelError):
    pass


class DegenerateDenominator(ModelError):
    pass


class InfeasibleScenario(ModelError):
    """Raised by solvers that could not meet every constraint.

    The best-effort allocation and its report are attached.
    """

    def __init__(self, message, allocation=None, report=None):
        super().__init__(message)
        self.allocation = allocation
        self.report = report


class InstanceTooLarge(ModelError):
    pass


class NoFeasibleSolution(ModelError):
    pass


class MismatchedScenario(ModelError):
    pass
