"""Transaction schema, dataset container, and canonical CSV round trip.

Amounts are carried as exact two-decimal ``Decimal`` values at the I/O
boundary so that ``parse -> save`` is byte-identical; they become floats only
when feature matrices are built. Statement text is one free-text field,
tokenized on non-alphanumeric boundaries, case-insensitive.
"""

from __future__ import annotations

import csv
import enum
import io
import re
from dataclasses import dataclass
from datetime import datetime
from decimal import Decimal, InvalidOperation
from functools import cached_property
from typing import Iterable, TextIO

import numpy as np

from .errors import DuplicateId, MalformedHeader, RowError

SCHEMA_VERSION = "1"

HEADER = (
    "transaction_id,account_id,customer_type,product_type,transaction_code,"
    "branch,source_bank,dest_bank,timestamp,amount,avg_amount_prev_month,"
    "currency,credit_debit,country_origin,country_dest,statement,"
    "credit_score,expert_label"
)
FIELD_NAMES = tuple(HEADER.split(","))

TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M"

_COUNTRY_RE = re.compile(r"^[A-Z]{3}$")
_TOKEN_RE = re.compile(r"[^0-9a-z]+")

_CENT = Decimal("0.01")


class CustomerType(str, enum.Enum):
    INDIVIDUAL = "Individual"
    ORGANISATION = "Organisation"
    ASSOCIATION = "Association"
    TRUST = "Trust"


class ProductType(str, enum.Enum):
    CASH_IN = "CashIn"
    CASH_OUT = "CashOut"
    CARD = "Card"
    DIRECT_PAYMENT = "DirectPayment"
    CHEQUE_IN = "ChequeIn"
    CHEQUE_OUT = "ChequeOut"
    ONLINE_BANKING = "OnlineBanking"
    GLOBAL_PAYMENT = "GlobalPayment"


class CreditDebit(str, enum.Enum):
    CREDIT = "Credit"
    DEBIT = "Debit"


class LabelValue(enum.IntEnum):
    """Binary transaction label; 1 flags a suspicious transaction."""

    SUSPICIOUS = 1
    NORMAL = 0
    UNLABELED = -1


_EXPERT_LABEL_TO_TEXT = {LabelValue.SUSPICIOUS: "Suspicious", LabelValue.NORMAL: "Normal"}
_TEXT_TO_EXPERT_LABEL = {v: k for k, v in _EXPERT_LABEL_TO_TEXT.items()}


def tokenize(text: str) -> frozenset[str]:
    """Lower-case word set of a statement, split on non-alphanumeric runs."""
    return frozenset(t for t in _TOKEN_RE.split(text.lower()) if t)


@dataclass(frozen=True)
class TransactionRecord:
    transaction_id: str
    account_id: str
    customer_type: CustomerType
    product_type: ProductType
    transaction_code: int
    branch: str
    source_bank: str
    dest_bank: str
    timestamp: datetime
    amount: Decimal
    avg_amount_prev_month: Decimal
    currency: str
    credit_debit: CreditDebit
    country_origin: str
    country_dest: str
    statement: str
    credit_score: float
    expert_label: LabelValue | None = None

    def __post_init__(self):
        if self.amount < 0:
            raise ValueError("amount must be non-negative")
        if self.avg_amount_prev_month < 0:
            raise ValueError("avg_amount_prev_month must be non-negative")
        if self.amount != self.amount.quantize(_CENT):
            raise ValueError("amount must have at most two decimal places")
        if self.avg_amount_prev_month != self.avg_amount_prev_month.quantize(_CENT):
            raise ValueError("avg_amount_prev_month must have at most two decimal places")
        if not 0.0 <= self.credit_score <= 1.0:
            raise ValueError("credit_score must lie in [0, 1]")
        if not _COUNTRY_RE.match(self.country_origin):
            raise ValueError("country_origin must be 3 uppercase letters")
        if not _COUNTRY_RE.match(self.country_dest):
            raise ValueError("country_dest must be 3 uppercase letters")
        if not _COUNTRY_RE.match(self.currency):
            raise ValueError("currency must be a 3-letter uppercase code")
        if self.timestamp.second != 0 or self.timestamp.microsecond != 0:
            raise ValueError("timestamp must have minute resolution")
        if self.transaction_code < 0:
            raise ValueError("transaction_code must be non-negative")
        if self.expert_label is LabelValue.UNLABELED:
            raise ValueError("expert_label is either Suspicious, Normal, or absent")


@dataclass(frozen=True)
class Columns:
    """Column-oriented view of a dataset for vectorized rule/feature code."""

    transaction_id: np.ndarray
    account_id: np.ndarray
    customer_type: np.ndarray
    product_type: np.ndarray
    transaction_code: np.ndarray
    branch: np.ndarray
    source_bank: np.ndarray
    dest_bank: np.ndarray
    hour: np.ndarray
    amount: np.ndarray
    avg_amount_prev_month: np.ndarray
    currency: np.ndarray
    credit_debit: np.ndarray
    country_origin: np.ndarray
    country_dest: np.ndarray
    credit_score: np.ndarray
    statement_tokens: tuple[frozenset[str], ...]


@dataclass(frozen=True)
class Dataset:
    """Immutable, ordered collection of transactions."""

    records: tuple[TransactionRecord, ...]
    schema_version: str = SCHEMA_VERSION

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, index):
        return self.records[index]

    def subset(self, indices) -> "Dataset":
        return Dataset(tuple(self.records[i] for i in indices), self.schema_version)

    @cached_property
    def columns(self) -> Columns:
        recs = self.records
        return Columns(
            transaction_id=np.array([r.transaction_id for r in recs], dtype=object),
            account_id=np.array([r.account_id for r in recs], dtype=object),
            customer_type=np.array([r.customer_type.value for r in recs], dtype=object),
            product_type=np.array([r.product_type.value for r in recs], dtype=object),
            transaction_code=np.array([r.transaction_code for r in recs], dtype=np.int64),
            branch=np.array([r.branch for r in recs], dtype=object),
            source_bank=np.array([r.source_bank for r in recs], dtype=object),
            dest_bank=np.array([r.dest_bank for r in recs], dtype=object),
            hour=np.array([r.timestamp.hour for r in recs], dtype=np.int64),
            amount=np.array([float(r.amount) for r in recs], dtype=np.float64),
            avg_amount_prev_month=np.array(
                [float(r.avg_amount_prev_month) for r in recs], dtype=np.float64
            ),
            currency=np.array([r.currency for r in recs], dtype=object),
            credit_debit=np.array([r.credit_debit.value for r in recs], dtype=object),
            country_origin=np.array([r.country_origin for r in recs], dtype=object),
            country_dest=np.array([r.country_dest for r in recs], dtype=object),
            credit_score=np.array([r.credit_score for r in recs], dtype=np.float64),
            statement_tokens=tuple(tokenize(r.statement) for r in recs),
        )


def _parse_enum(enum_cls, text: str, row_index: int, field: str):
    try:
        return enum_cls(text)
    except ValueError:
        allowed = ", ".join(m.value for m in enum_cls)
        raise RowError(row_index, field, f"'{text}' not one of: {allowed}") from None


def _parse_decimal(text: str, row_index: int, field: str) -> Decimal:
    try:
        value = Decimal(text)
    except InvalidOperation:
        raise RowError(row_index, field, f"'{text}' is not a decimal number") from None
    if not value.is_finite():
        raise RowError(row_index, field, "must be finite")
    return value


def _record_from_row(row: list[str], row_index: int) -> TransactionRecord:
    if len(row) != len(FIELD_NAMES):
        raise RowError(row_index, "<row>", f"expected {len(FIELD_NAMES)} fields, got {len(row)}")
    values = dict(zip(FIELD_NAMES, row))

    try:
        timestamp = datetime.strptime(values["timestamp"], TIMESTAMP_FORMAT)
    except ValueError:
        raise RowError(
            row_index, "timestamp", f"'{values['timestamp']}' is not YYYY-MM-DDTHH:MM"
        ) from None

    try:
        transaction_code = int(values["transaction_code"])
    except ValueError:
        raise RowError(row_index, "transaction_code", "must be an integer") from None

    try:
        credit_score = float(values["credit_score"])
    except ValueError:
        raise RowError(row_index, "credit_score", "must be a real number") from None

    expert_text = values["expert_label"]
    if expert_text == "":
        expert_label = None
    elif expert_text in _TEXT_TO_EXPERT_LABEL:
        expert_label = _TEXT_TO_EXPERT_LABEL[expert_text]
    else:
        raise RowError(row_index, "expert_label", f"'{expert_text}' not Suspicious/Normal/empty")

    kwargs = dict(
        transaction_id=values["transaction_id"],
        account_id=values["account_id"],
        customer_type=_parse_enum(CustomerType, values["customer_type"], row_index, "customer_type"),
        product_type=_parse_enum(ProductType, values["product_type"], row_index, "product_type"),
        transaction_code=transaction_code,
        branch=values["branch"],
        source_bank=values["source_bank"],
        dest_bank=values["dest_bank"],
        timestamp=timestamp,
        amount=_parse_decimal(values["amount"], row_index, "amount"),
        avg_amount_prev_month=_parse_decimal(
            values["avg_amount_prev_month"], row_index, "avg_amount_prev_month"
        ),
        currency=values["currency"],
        credit_debit=_parse_enum(CreditDebit, values["credit_debit"], row_index, "credit_debit"),
        country_origin=values["country_origin"],
        country_dest=values["country_dest"],
        statement=values["statement"],
        credit_score=credit_score,
        expert_label=expert_label,
    )
    try:
        return TransactionRecord(**kwargs)
    except ValueError as exc:
        # Attribute the invariant violation to the most likely field.
        message = str(exc)
        field = message.split(" ", 1)[0]
        if field not in FIELD_NAMES:
            field = "<row>"
        raise RowError(row_index, field, message) from None


def parse_transactions(source: str | TextIO) -> Dataset:
    """Parse the canonical CSV into a Dataset, validating every row.

    Raises MalformedHeader, RowError (with row index and field), or
    DuplicateId. Row order is preserved; row indices are 1-based over data
    rows (the header is row 0).
    """
    text = source.read() if hasattr(source, "read") else source
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedHeader("empty input, expected canonical header") from None
    if header != list(FIELD_NAMES):
        raise MalformedHeader(f"header mismatch: got {','.join(header)!r}")

    records: list[TransactionRecord] = []
    seen: set[str] = set()
    for row_index, row in enumerate(reader, start=1):
        record = _record_from_row(row, row_index)
        if record.transaction_id in seen:
            raise DuplicateId(f"duplicate transaction_id '{record.transaction_id}'")
        seen.add(record.transaction_id)
        records.append(record)
    return Dataset(tuple(records))


def _record_to_row(r: TransactionRecord) -> list[str]:
    return [
        r.transaction_id,
        r.account_id,
        r.customer_type.value,
        r.product_type.value,
        str(r.transaction_code),
        r.branch,
        r.source_bank,
        r.dest_bank,
        r.timestamp.strftime(TIMESTAMP_FORMAT),
        f"{r.amount:.2f}",
        f"{r.avg_amount_prev_month:.2f}",
        r.currency,
        r.credit_debit.value,
        r.country_origin,
        r.country_dest,
        r.statement,
        f"{r.credit_score:.6f}",
        "" if r.expert_label is None else _EXPERT_LABEL_TO_TEXT[r.expert_label],
    ]


def save_transactions(dataset: Dataset) -> str:
    """Serialize to the canonical CSV text: fixed header, 2-decimal amounts,
    6-decimal scores, LF line endings."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(FIELD_NAMES)
    for record in dataset:
        writer.writerow(_record_to_row(record))
    return buffer.getvalue()


def labels_of(dataset: Dataset) -> list[LabelValue]:
    """Expert label where present, UNLABELED elsewhere, in row order."""
    return [
        r.expert_label if r.expert_label is not None else LabelValue.UNLABELED for r in dataset
    ]


def write_ground_truth(ids: Iterable[str], truth: Iterable[LabelValue], tags: Iterable) -> str:
    """Sidecar ground-truth CSV: transaction_id,ground_truth,scenario_tag."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["transaction_id", "ground_truth", "scenario_tag"])
    for tid, label, tag in zip(ids, truth, tags):
        writer.writerow([tid, _EXPERT_LABEL_TO_TEXT[label], tag.value])
    return buffer.getvalue()


def parse_ground_truth(source: str | TextIO) -> dict[str, LabelValue]:
    """Read the sidecar ground-truth CSV into an id -> label mapping."""
    text = source.read() if hasattr(source, "read") else source
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or header[:2] != ["transaction_id", "ground_truth"]:
        raise MalformedHeader("expected ground-truth header transaction_id,ground_truth[,scenario_tag]")
    truth: dict[str, LabelValue] = {}
    for row_index, row in enumerate(reader, start=1):
        if len(row) < 2:
            raise RowError(row_index, "<row>", "expected at least 2 fields")
        if row[1] not in _TEXT_TO_EXPERT_LABEL:
            raise RowError(row_index, "ground_truth", f"'{row[1]}' not Suspicious/Normal")
        if row[0] in truth:
            raise DuplicateId(f"duplicate transaction_id '{row[0]}'")
        truth[row[0]] = _TEXT_TO_EXPERT_LABEL[row[1]]
    return truth
