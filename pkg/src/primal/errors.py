"""Exception types shared across the simulator."""


class ConfigError(ValueError):
    """Raised when a simulation configuration is inconsistent or out of range."""


class ProtocolError(RuntimeError):
    """Raised when a message is sent over a channel that does not exist."""
