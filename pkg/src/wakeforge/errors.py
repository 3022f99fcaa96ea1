"""Exception hierarchy shared by all wakeforge modules."""


class WakeforgeError(Exception):
    """Base class for all wakeforge errors."""


class ConfigError(WakeforgeError):
    """Invalid configuration, table or model setup."""


class DomainError(WakeforgeError):
    """Input outside the physical/mathematical domain of an operation."""


class NearWakeError(DomainError):
    """Gaussian deficit evaluated inside the invalid near-wake region."""

    def __init__(self, x, msg=None):
        self.x = x
        super().__init__(msg or f"near-wake region entered at x = {x:.3f} m")


class SolverInstabilityError(WakeforgeError):
    """Marching solver produced NaN or an unphysical deficit."""

    def __init__(self, x_station, msg=None):
        self.x_station = x_station
        super().__init__(msg or f"marching solve unstable at x = {x_station:.3f} m")


class LayoutError(WakeforgeError):
    """Turbine layout inconsistent with the farm grid or spacing rules."""


class SamplingError(WakeforgeError):
    """Rotor-line sampling outside the flow-field grid."""


class ModelFormatError(WakeforgeError):
    """Corrupt, truncated or incompatible model/dataset file."""


class DivergenceError(WakeforgeError):
    """Training loss became NaN."""

    def __init__(self, epoch, msg=None):
        self.epoch = epoch
        super().__init__(msg or f"training diverged at epoch {epoch}")
