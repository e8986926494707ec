"""Exception hierarchy shared across the pipeline.

Three coarse categories map onto CLI exit codes: configuration problems
(exit 2), data problems (exit 3), and violated internal invariants (exit 4).
"""


class PipelineError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(PipelineError):
    """Invalid configuration value or unusable config/rule/wordlist file."""


class DataError(PipelineError):
    """Malformed or inconsistent input data."""


class InternalError(PipelineError):
    """An invariant the pipeline guarantees was observed to fail."""


# --- data_model ---------------------------------------------------------

class MalformedHeader(DataError):
    """CSV header does not match the canonical schema header."""


class RowError(DataError):
    """A CSV row violates a field invariant."""

    def __init__(self, row_index: int, field: str, message: str):
        super().__init__(f"row {row_index}, field '{field}': {message}")
        self.row_index = row_index
        self.field = field


class DuplicateId(DataError):
    """Two rows share a transaction_id."""


# --- weak_label ---------------------------------------------------------

class MissingWordlist(ConfigError):
    """A rule references a wordlist that was never loaded."""


class RuleSyntaxError(ConfigError):
    """A rule expression could not be parsed."""


class EmptyAnchors(DataError):
    """Weight fitting requires at least one expert-labeled anchor row."""


class DimensionMismatch(DataError):
    """Label matrix shape does not match the model or companion input."""


# --- preprocess ---------------------------------------------------------

class DegenerateClass(DataError):
    """Stratified splitting needs at least two rows of every class."""


class TooFewMinority(DataError):
    """SMOTE needs more minority rows than requested neighbours."""


# --- classifiers --------------------------------------------------------

class SingleClassTraining(DataError):
    """Supervised fitting requires both classes in the training labels."""


class NonFiniteLoss(InternalError):
    """Training loss became NaN or infinite."""


class SchemaMismatch(DataError):
    """Feature matrix does not match the schema a model was fit with."""


# --- anomaly ------------------------------------------------------------

class TooFewRows(DataError):
    """Detector fitting requires at least two rows."""


class SingleClassCv(DataError):
    """Threshold selection needs both classes in the cross-validation labels."""


class UnsetThreshold(ConfigError):
    """Flagging requested before a threshold was selected or supplied."""


# --- fusion_eval --------------------------------------------------------

class LengthMismatch(DataError):
    """Two aligned sequences differ in length."""


class EmptyEvaluation(DataError):
    """Metrics requested over zero rows."""


class SingleClassTruth(DataError):
    """AUC needs both classes present in the ground truth."""


class UnmatchedIds(DataError):
    """Prediction and truth files do not cover the same transaction ids."""


# --- cluster ------------------------------------------------------------

class KTooLarge(DataError):
    """Requested more clusters than data rows."""
