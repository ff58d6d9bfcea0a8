from . import core

__all__ = ["core"]
