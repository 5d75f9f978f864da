"""
Exception hierarchy shared by every anchor-edit module
"""

from typing import Optional

__all__ = ["AnchorEditError", "ContractError", "ConfigError", "FormatError", "GapError",
           "UnsupportedMetricError", "StageError"]


class AnchorEditError(RuntimeError):
    def __init__(self, msg: str):
        super().__init__(msg)


class ContractError(AnchorEditError):
    """A pre-condition of an operation was violated (shapes, ranges, missing cache entries)."""


class ConfigError(AnchorEditError):
    """Invalid or unknown configuration value."""


class FormatError(AnchorEditError):
    """Malformed file: bad magic, truncated payload, inconsistent frame directory."""


class GapError(FormatError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"Frame sequence has a gap: missing frame {index:06d}")


class UnsupportedMetricError(AnchorEditError):
    """The selected embedder cannot produce the requested metric."""


class StageError(AnchorEditError):
    def __init__(self, stage: str, segment: Optional[int], cause: Exception):
        self.stage = stage
        self.segment = segment
        self.cause = cause
        where = f"stage '{stage}'" if segment is None else f"stage '{stage}', segment {segment}"
        super().__init__(f"{where} failed: {cause}")
