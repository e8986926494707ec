"""amlpipe: hybrid money-laundering detection on synthetic bank transactions.

Weak-supervision auto-labeling, six from-scratch classifiers, Gaussian and
isolation-forest anomaly detectors, and a logical-AND fusion stage that
trades recall for precision — all seeded and deterministic end to end.
"""

__version__ = "0.1.0"

from .data_model import Dataset, LabelValue, TransactionRecord  # noqa: F401
from .synth_gen import GeneratorConfig, ScenarioTag, generate  # noqa: F401

__all__ = [
    "Dataset",
    "GeneratorConfig",
    "LabelValue",
    "ScenarioTag",
    "TransactionRecord",
    "generate",
    "__version__",
]
