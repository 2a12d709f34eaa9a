"""Exception types raised across the package."""


class SceneryError(Exception):
    """Base class for all package errors."""


class InvalidParameter(SceneryError, ValueError):
    pass


class OutOfBounds(SceneryError, IndexError):
    pass


class ShapeMismatch(SceneryError, ValueError):
    pass


class InvalidAnchor(SceneryError, ValueError):
    pass


class ConfigError(SceneryError, ValueError):
    pass


class PhaseError(SceneryError):
    """A reconstruction phase could not produce its output.

    ``phase`` is the 1-based phase number, ``reason`` a short machine tag
    such as ``"seed-not-found"`` or ``"tiling-conflict"``.
    """

    def __init__(self, phase: int, reason: str, detail: str = ""):
        self.phase = phase
        self.reason = reason
        self.detail = detail
        msg = f"phase {phase}: {reason}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class SeedNotFound(PhaseError):
    def __init__(self, detail: str = ""):
        super().__init__(3, "seed-not-found", detail)


class TilingConflict(PhaseError):
    def __init__(self, detail: str = "", partial=None):
        super().__init__(4, "tiling-conflict", detail)
        self.partial = partial
