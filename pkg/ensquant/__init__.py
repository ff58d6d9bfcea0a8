__version__ = "0.1.0"

from .api.core import report, run, score, simulate_dataset  # re-export high-level API
