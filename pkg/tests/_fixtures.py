"""Shared record/dataset builders for the test suite."""

from datetime import datetime
from decimal import Decimal

from amlpipe.data_model import (
    CreditDebit,
    CustomerType,
    Dataset,
    LabelValue,
    ProductType,
    TransactionRecord,
)

_DEFAULTS = dict(
    transaction_id="TX00000000",
    account_id="AC000001",
    customer_type=CustomerType.INDIVIDUAL,
    product_type=ProductType.CARD,
    transaction_code=1,
    branch="BR001",
    source_bank="ANZ",
    dest_bank="CBA",
    timestamp=datetime(2025, 3, 14, 10, 30),
    amount=Decimal("120.00"),
    avg_amount_prev_month=Decimal("150.00"),
    currency="AUD",
    credit_debit=CreditDebit.DEBIT,
    country_origin="AUS",
    country_dest="AUS",
    statement="groceries rent",
    credit_score=0.7,
    expert_label=None,
)


def make_record(**overrides) -> TransactionRecord:
    fields = dict(_DEFAULTS)
    fields.update(overrides)
    if isinstance(fields["amount"], (int, float)):
        fields["amount"] = Decimal(f"{fields['amount']:.2f}")
    if isinstance(fields["avg_amount_prev_month"], (int, float)):
        fields["avg_amount_prev_month"] = Decimal(f"{fields['avg_amount_prev_month']:.2f}")
    return TransactionRecord(**fields)


def make_dataset(*records: TransactionRecord) -> Dataset:
    return Dataset(tuple(records))


def numbered(records) -> Dataset:
    """Reassign unique sequential transaction ids."""
    out = []
    for i, r in enumerate(records):
        out.append(
            TransactionRecord(
                **{**r.__dict__, "transaction_id": f"TX{i:08d}"}
            )
        )
    return Dataset(tuple(out))


SUSPICIOUS = LabelValue.SUSPICIOUS
NORMAL = LabelValue.NORMAL
UNLABELED = LabelValue.UNLABELED
