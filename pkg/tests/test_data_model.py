"""Schema validation and canonical CSV round-trip behaviour."""

import pytest

from amlpipe.data_model import (
    HEADER,
    Dataset,
    LabelValue,
    labels_of,
    parse_transactions,
    save_transactions,
    tokenize,
)
from amlpipe.errors import DuplicateId, MalformedHeader, RowError
from amlpipe.synth_gen import GeneratorConfig, generate

from _fixtures import make_record

VALID_ROW = (
    "TX00000001,AC000001,Individual,CashIn,2,BR003,ANZ,CBA,2025-02-01T09:15,"
    "15000.00,900.00,AUD,Credit,AUS,AUS,deposit savings,0.450000,"
)


def test_parse_minimal_valid():
    dataset = parse_transactions(HEADER + "\n" + VALID_ROW + "\n")
    assert len(dataset) == 1
    record = dataset[0]
    assert record.transaction_id == "TX00000001"
    assert float(record.amount) == 15000.00
    assert record.expert_label is None


def test_parse_rejects_out_of_range_credit_score():
    row = VALID_ROW.replace(",0.450000,", ",1.300000,")
    with pytest.raises(RowError) as excinfo:
        parse_transactions(HEADER + "\n" + row + "\n")
    assert excinfo.value.field == "credit_score"
    assert excinfo.value.row_index == 1


@pytest.mark.parametrize(
    "mangle,field",
    [
        (lambda r: r.replace("15000.00", "-1.00"), "amount"),
        (lambda r: r.replace(",AUS,AUS,", ",AU,AUS,"), "country_origin"),
        (lambda r: r.replace("Individual", "Person"), "customer_type"),
        (lambda r: r.replace("2025-02-01T09:15", "2025-02-01 09:15"), "timestamp"),
        (lambda r: r.replace("2025-02-01T09:15", "2025-02-01T09:15:30"), "timestamp"),
        (lambda r: r + "Maybe", "expert_label"),
        (lambda r: r.replace(",CashIn,", ",Cash,"), "product_type"),
    ],
)
def test_parse_rejects_invalid_fields(mangle, field):
    with pytest.raises(RowError) as excinfo:
        parse_transactions(HEADER + "\n" + mangle(VALID_ROW) + "\n")
    assert excinfo.value.field == field


def test_parse_rejects_bad_header():
    with pytest.raises(MalformedHeader):
        parse_transactions("id,amount\n1,2\n")


def test_parse_rejects_duplicate_ids():
    text = HEADER + "\n" + VALID_ROW + "\n" + VALID_ROW + "\n"
    with pytest.raises(DuplicateId):
        parse_transactions(text)


def test_parse_rejects_short_row():
    with pytest.raises(RowError):
        parse_transactions(HEADER + "\nTX1,AC1,Individual\n")


def test_save_empty_dataset_is_header_only():
    assert save_transactions(Dataset(())) == HEADER + "\n"


def test_save_formats_amounts_and_scores():
    record = make_record(amount=15000, credit_score=0.45)
    text = save_transactions(Dataset((record,)))
    assert "15000.00" in text
    assert "0.450000" in text


def test_round_trip_is_byte_identical():
    dataset, _, _ = generate(GeneratorConfig(n_rows=300, seed=5))
    saved = save_transactions(dataset)
    assert save_transactions(parse_transactions(saved)) == saved


def test_save_parse_save_idempotent_from_file_text():
    text = HEADER + "\n" + VALID_ROW + "\n"
    once = save_transactions(parse_transactions(text))
    twice = save_transactions(parse_transactions(once))
    assert once == twice


def test_labels_of_all_expert_labeled():
    records = (
        make_record(transaction_id="A", expert_label=LabelValue.SUSPICIOUS),
        make_record(transaction_id="B", expert_label=LabelValue.NORMAL),
    )
    assert labels_of(Dataset(records)) == [LabelValue.SUSPICIOUS, LabelValue.NORMAL]


def test_labels_of_without_expert_labels():
    dataset = Dataset((make_record(transaction_id="A"), make_record(transaction_id="B")))
    assert labels_of(dataset) == [LabelValue.UNLABELED, LabelValue.UNLABELED]


def test_labels_of_generated_anchor_fraction():
    config = GeneratorConfig(n_rows=2000, suspicious_rate=0.08, anchor_fraction=0.10, seed=9)
    dataset, truth, _ = generate(config)
    labels = labels_of(dataset)
    n_suspicious = sum(1 for t in truth if t is LabelValue.SUSPICIOUS)
    n_normal = len(truth) - n_suspicious
    expected = round(0.10 * n_suspicious) + round(0.10 * n_normal)
    assert sum(1 for v in labels if v is not LabelValue.UNLABELED) == expected
    # anchors agree with ground truth
    for label, t in zip(labels, truth):
        if label is not LabelValue.UNLABELED:
            assert label is t


def test_record_validation_raises_in_constructor():
    with pytest.raises(ValueError):
        make_record(credit_score=-0.2)
    with pytest.raises(ValueError):
        make_record(country_dest="AUSX")
    with pytest.raises(ValueError):
        make_record(amount=-5)
    with pytest.raises(ValueError):
        make_record(expert_label=LabelValue.UNLABELED)


def test_statement_with_comma_survives_round_trip():
    record = make_record(statement='transfer, "urgent" rent')
    saved = save_transactions(Dataset((record,)))
    parsed = parse_transactions(saved)
    assert parsed[0].statement == 'transfer, "urgent" rent'
    assert save_transactions(parsed) == saved


def test_tokenize_splits_on_non_alphanumeric_case_insensitive():
    assert tokenize("Pay HIJACK-fund; terror_2001!") == {
        "pay", "hijack", "fund", "terror", "2001",
    }
    assert tokenize("") == frozenset()
