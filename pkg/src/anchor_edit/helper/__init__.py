from . import config, utilities

__all__ = ["config", "utilities"]
