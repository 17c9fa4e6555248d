"""qidlab: desk-scale checks of an all-but-one entropic uncertainty relation and the Q-ID protocol."""

__version__ = "0.1.0"

from ._accel import backend  # noqa: E402

__all__ = ["__version__", "backend"]
