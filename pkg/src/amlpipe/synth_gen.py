"""Seeded synthetic transaction generator with planted laundering scenarios.

The generator substitutes for private bank data: it is calibrated to the
stated marginals (domestic share at least 95%, suspicious share below 10%)
and plants scenario rows that the built-in labeling rules can find — plus
two adversarial scenarios: StealthLaundering rows are suspicious yet fire no
rule, and BenignLookalike rows fire a rule yet are normal, so false-negative
and false-positive paths are exercised.

Randomness comes from a single NumPy PCG64 stream seeded from the config, so
identical configs produce byte-identical CSV output on every platform.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from decimal import Decimal
from typing import Mapping

import numpy as np

from .data_model import (
    CreditDebit,
    CustomerType,
    Dataset,
    LabelValue,
    ProductType,
    TransactionRecord,
)
from .errors import ConfigError
from .wordlists import default_wordlists, CATEGORY_WORDS, STATEMENT_WORDS


class ScenarioTag(str, enum.Enum):
    CLEAN_ROUTINE = "CleanRoutine"
    CASH_STRUCTURING = "CashStructuring"
    BLACKLIST_CORRIDOR = "BlacklistCorridor"
    WILDLIFE_CORRIDOR = "WildlifeCorridor"
    KEYWORD_STATEMENT = "KeywordStatement"
    VELOCITY_SPIKE = "VelocitySpike"
    LOW_SCORE_LARGE_AMOUNT = "LowScoreLargeAmount"
    STEALTH_LAUNDERING = "StealthLaundering"
    BENIGN_LOOKALIKE = "BenignLookalike"


SUSPICIOUS_TAGS = (
    ScenarioTag.CASH_STRUCTURING,
    ScenarioTag.BLACKLIST_CORRIDOR,
    ScenarioTag.WILDLIFE_CORRIDOR,
    ScenarioTag.KEYWORD_STATEMENT,
    ScenarioTag.VELOCITY_SPIKE,
    ScenarioTag.LOW_SCORE_LARGE_AMOUNT,
    ScenarioTag.STEALTH_LAUNDERING,
)
NORMAL_TAGS = (ScenarioTag.CLEAN_ROUTINE, ScenarioTag.BENIGN_LOOKALIKE)

# Documented stand-ins for the redacted country lists.
FATF_COUNTRIES = ("PAK", "SYR", "IRN", "YEM")
WILDLIFE_COUNTRIES = ("KEN", "TZA", "VNM")
SAFE_FOREIGN = ("NZL", "GBR", "USA", "JPN", "DEU", "SGP", "FRA", "CAN")

_BANKS = ("ANZ", "CBA", "NAB", "WBC", "BOQ", "ING")
_FOREIGN_CURRENCIES = ("USD", "EUR", "GBP", "NZD")
_BENIGN_WORDS = (
    "groceries", "rent", "salary", "invoice", "utilities", "transfer", "school",
    "fuel", "insurance", "dining", "pharmacy", "savings", "mortgage", "payroll",
    "refund", "subscription", "hardware", "travelcard", "vet", "gym",
)
_CODES_PER_PRODUCT = {
    ProductType.CASH_IN: 3, ProductType.CASH_OUT: 3, ProductType.CARD: 10,
    ProductType.DIRECT_PAYMENT: 4, ProductType.CHEQUE_IN: 2, ProductType.CHEQUE_OUT: 2,
    ProductType.ONLINE_BANKING: 5, ProductType.GLOBAL_PAYMENT: 4,
}

_EPOCH = datetime(2025, 1, 1, 0, 0)
_DAYS = 180

# Hour-of-day sampling weights: routine traffic peaks in business hours,
# several planted scenarios lean into the night.
_DAY_HOUR_P = np.array(
    [1, 1, 1, 1, 1, 2, 4, 8, 12, 14, 14, 13, 12, 12, 12, 12, 11, 10, 9, 7, 5, 4, 2, 1],
    dtype=float,
)
_DAY_HOUR_P /= _DAY_HOUR_P.sum()
_NIGHT_HOUR_P = np.array(
    [14, 16, 16, 14, 12, 8, 4, 2, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 2, 2, 4, 6, 8, 10],
    dtype=float,
)
_NIGHT_HOUR_P /= _NIGHT_HOUR_P.sum()
_DAY_HOUR_CUM = np.cumsum(_DAY_HOUR_P)
_NIGHT_HOUR_CUM = np.cumsum(_NIGHT_HOUR_P)

_PRODUCT_VALUES = tuple(p.value for p in ProductType)
_PRODUCT_CLEAN_CUM = np.cumsum([0.08, 0.07, 0.34, 0.20, 0.04, 0.04, 0.20, 0.03])

_CENT = Decimal("0.01")


def default_scenario_mix(suspicious_rate: float) -> dict[ScenarioTag, float]:
    """Default mix: the six rule-aligned scenarios share 90% of the suspicious
    mass, StealthLaundering takes 10% of it, BenignLookalike takes 2% of the
    normal mass, and CleanRoutine gets the remainder."""
    stealth = 0.10 * suspicious_rate
    per_rule = 0.90 * suspicious_rate / 6.0
    benign = 0.02 * (1.0 - suspicious_rate)
    clean = 1.0 - suspicious_rate - benign
    mix = {tag: per_rule for tag in SUSPICIOUS_TAGS if tag is not ScenarioTag.STEALTH_LAUNDERING}
    mix[ScenarioTag.STEALTH_LAUNDERING] = stealth
    mix[ScenarioTag.BENIGN_LOOKALIKE] = benign
    mix[ScenarioTag.CLEAN_ROUTINE] = clean
    return mix


@dataclass(frozen=True)
class GeneratorConfig:
    n_rows: int
    suspicious_rate: float = 0.08
    domestic_rate: float = 0.95
    anchor_fraction: float = 0.10
    seed: int = 42
    scenario_mix: Mapping[ScenarioTag, float] | None = None

    def validate(self):
        if self.n_rows < 1:
            raise ConfigError("n_rows must be positive")
        if not 0.0 < self.suspicious_rate <= 0.10:
            raise ConfigError("suspicious_rate must lie in (0, 0.10]")
        if not 0.95 <= self.domestic_rate <= 1.0:
            raise ConfigError("domestic_rate must lie in [0.95, 1]")
        if not 0.0 <= self.anchor_fraction <= 1.0:
            raise ConfigError("anchor_fraction must lie in [0, 1]")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        mix = self.effective_mix()
        if any(w < 0 for w in mix.values()):
            raise ConfigError("scenario weights must be non-negative")
        total = sum(mix.values())
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"scenario weights must sum to 1 (got {total!r})")

    def effective_mix(self) -> dict[ScenarioTag, float]:
        if self.scenario_mix is None:
            return default_scenario_mix(self.suspicious_rate)
        return {tag: float(self.scenario_mix.get(tag, 0.0)) for tag in ScenarioTag}


def _apportion(total: int, weights: list[float]) -> list[int]:
    """Largest-remainder apportionment of `total` among `weights`."""
    if total == 0:
        return [0] * len(weights)
    weight_sum = sum(weights)
    if weight_sum <= 0:
        raise ConfigError("cannot apportion rows over zero scenario weight")
    quotas = [total * w / weight_sum for w in weights]
    counts = [math.floor(q) for q in quotas]
    remainder = total - sum(counts)
    order = sorted(range(len(weights)), key=lambda i: (counts[i] - quotas[i], i))
    for i in order[:remainder]:
        counts[i] += 1
    return counts


def _money(value: float) -> Decimal:
    return Decimal(f"{value:.2f}")


@dataclass
class _Row:
    customer_type: CustomerType = CustomerType.INDIVIDUAL
    product_type: ProductType = ProductType.CARD
    amount: float = 0.0
    avg_prev: float = 0.0
    credit_score: float = 0.5
    country_origin: str = "AUS"
    country_dest: str = "AUS"
    currency: str = "AUD"
    statement_words: list[str] = field(default_factory=list)
    night: bool = False


class _Sampler:
    """Per-scenario field sampling from one shared PCG64 stream."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        lists = default_wordlists()
        self.trigger_statement = sorted(lists[STATEMENT_WORDS])
        self.trigger_category = sorted(lists[CATEGORY_WORDS])

    def _pick(self, seq):
        return seq[int(self.rng.integers(0, len(seq)))]

    def _benign_words(self) -> list[str]:
        count = int(self.rng.integers(2, 5))
        idx = self.rng.integers(0, len(_BENIGN_WORDS), size=count)
        return [_BENIGN_WORDS[i] for i in idx]

    def _customer(self, p_individual: float = 0.80) -> CustomerType:
        u = self.rng.random()
        if u < p_individual:
            return CustomerType.INDIVIDUAL
        if u < p_individual + 0.6 * (1 - p_individual):
            return CustomerType.ORGANISATION
        if u < p_individual + 0.85 * (1 - p_individual):
            return CustomerType.ASSOCIATION
        return CustomerType.TRUST

    def clean(self, foreign: bool) -> _Row:
        row = _Row()
        row.customer_type = self._customer()
        row.product_type = ProductType(
            _PRODUCT_VALUES[int(np.searchsorted(_PRODUCT_CLEAN_CUM, self.rng.random()))]
        )
        row.credit_score = float(self.rng.beta(5.0, 2.0))
        if self.rng.random() < 0.025:
            # One-off spike from an irregular earner: legitimate, still under
            # every rule threshold, but unusual enough to tempt the
            # detectors (controls their false-positive behaviour).
            row.amount = float(self.rng.uniform(3000.0, 9500.0))
            row.avg_prev = float(self.rng.uniform(300.0, 1100.0))
            row.statement_words = self._benign_words()
            row.night = True
            return row
        amount = float(self.rng.lognormal(math.log(180.0), 1.0))
        for _ in range(8):
            if amount < 9800.0:
                break
            amount = float(self.rng.lognormal(math.log(180.0), 1.0))
        else:
            amount = float(self.rng.uniform(50.0, 5000.0))
        row.amount = amount
        row.avg_prev = max(1.0, amount * float(np.exp(self.rng.normal(0.0, 0.5))))
        row.statement_words = self._benign_words()
        if foreign:
            country = self._pick(SAFE_FOREIGN)
            if self.rng.random() < 0.5:
                row.country_origin = country
            else:
                row.country_dest = country
            row.currency = self._pick(_FOREIGN_CURRENCIES)
        return row

    def cash_structuring(self) -> _Row:
        # A burst of over-threshold cash against a much smaller monthly
        # average, often at night.
        row = _Row()
        row.customer_type = self._customer(0.85)
        row.product_type = (
            ProductType.CASH_IN if self.rng.random() < 0.7 else ProductType.CASH_OUT
        )
        row.amount = float(self.rng.uniform(10500.0, 32000.0))
        row.avg_prev = row.amount * float(self.rng.uniform(0.10, 0.50))
        row.credit_score = float(self.rng.beta(5.0, 2.0))
        row.statement_words = self._benign_words()
        row.night = self.rng.random() < 0.6
        return row

    def blacklist_corridor(self) -> _Row:
        row = _Row()
        row.customer_type = self._customer(0.7)
        row.product_type = ProductType.GLOBAL_PAYMENT
        row.amount = float(self.rng.uniform(10500.0, 60000.0))
        row.avg_prev = row.amount * float(self.rng.uniform(0.80, 1.40))
        row.credit_score = float(self.rng.beta(5.0, 2.0))
        row.statement_words = self._benign_words()
        country = self._pick(FATF_COUNTRIES)
        if self.rng.random() < 0.5:
            row.country_origin = country
        else:
            row.country_dest = country
        row.currency = self._pick(("AUD", "USD"))
        return row

    def wildlife_corridor(self) -> _Row:
        row = self.blacklist_corridor()
        country = self._pick(WILDLIFE_COUNTRIES)
        if row.country_origin != "AUS":
            row.country_origin = country
        else:
            row.country_dest = country
        row.amount = float(self.rng.uniform(20500.0, 80000.0))
        row.avg_prev = row.amount * float(self.rng.uniform(0.80, 1.40))
        return row

    def keyword_statement(self) -> _Row:
        row = _Row()
        row.customer_type = self._customer(0.75)
        row.product_type = ProductType(
            self._pick(("Card", "DirectPayment", "OnlineBanking", "GlobalPayment"))
        )
        row.amount = float(self.rng.uniform(8000.0, 26000.0))
        row.avg_prev = row.amount * float(self.rng.uniform(0.50, 1.10))
        row.credit_score = float(self.rng.beta(5.0, 2.0))
        row.night = self.rng.random() < 0.4
        words = self._benign_words()
        triggers = (
            self.trigger_statement if self.rng.random() < 0.5 else self.trigger_category
        )
        trigger = self._pick(triggers)
        words.insert(int(self.rng.integers(0, len(words) + 1)), trigger)
        row.statement_words = words
        return row

    def velocity_spike(self) -> _Row:
        row = _Row()
        row.statement_words = self._benign_words()
        row.credit_score = float(self.rng.beta(5.0, 2.0))
        row.product_type = ProductType(
            self._pick(("Card", "DirectPayment", "OnlineBanking"))
        )
        row.night = self.rng.random() < 0.4
        if self.rng.random() < 0.6:
            row.customer_type = CustomerType.INDIVIDUAL
            row.avg_prev = float(self.rng.uniform(2000.0, 6500.0))
            row.amount = max(row.avg_prev * float(self.rng.uniform(2.5, 8.0)), 10600.0)
        else:
            row.customer_type = CustomerType(
                self._pick(("Organisation", "Association", "Trust"))
            )
            row.avg_prev = float(self.rng.uniform(7000.0, 14000.0))
            row.amount = max(row.avg_prev * float(self.rng.uniform(2.5, 8.0)), 20600.0)
        return row

    def low_score_large_amount(self) -> _Row:
        row = _Row()
        row.customer_type = CustomerType.INDIVIDUAL
        row.product_type = ProductType(
            self._pick(("DirectPayment", "OnlineBanking", "GlobalPayment"))
        )
        row.amount = float(self.rng.uniform(20600.0, 90000.0))
        row.avg_prev = row.amount * float(self.rng.uniform(0.80, 1.30))
        row.credit_score = float(self.rng.uniform(0.001, 0.045))
        row.statement_words = self._benign_words()
        return row

    def stealth_laundering(self) -> _Row:
        # Suspicious by ground truth but engineered under every rule
        # threshold: high-but-sub-10k amounts against a tiny monthly average,
        # at night. Detectable by density/isolation, invisible to the rules.
        row = _Row()
        row.customer_type = CustomerType.INDIVIDUAL
        row.product_type = ProductType(
            self._pick(("GlobalPayment", "OnlineBanking", "CashIn"))
        )
        row.amount = float(self.rng.uniform(7600.0, 9600.0))
        row.avg_prev = float(self.rng.uniform(250.0, 900.0))
        row.credit_score = float(self.rng.uniform(0.06, 0.25))
        row.statement_words = self._benign_words()
        row.night = True
        return row

    def benign_lookalike(self) -> _Row:
        # Normal by ground truth but fires a rule: an ordinary customer making
        # a slightly-over-threshold cash deposit, or a legitimate gaming-shop
        # purchase whose statement carries a category keyword. Deliberately
        # unremarkable in every other feature.
        row = _Row()
        row.credit_score = float(self.rng.beta(5.0, 2.0))
        if self.rng.random() < 0.8:
            row.customer_type = self._customer(0.7)
            row.product_type = (
                ProductType.CASH_IN if self.rng.random() < 0.75 else ProductType.CASH_OUT
            )
            row.amount = float(self.rng.uniform(10200.0, 13500.0))
            row.avg_prev = row.amount * float(self.rng.uniform(0.95, 1.45))
            row.statement_words = self._benign_words()
        else:
            row.customer_type = self._customer(0.85)
            row.product_type = ProductType.CARD
            row.amount = float(self.rng.uniform(5200.0, 9000.0))
            row.avg_prev = row.amount * float(self.rng.uniform(0.85, 1.35))
            words = self._benign_words()
            trigger = self._pick(self.trigger_category)
            words.insert(int(self.rng.integers(0, len(words) + 1)), trigger)
            row.statement_words = words
        return row

    def build(self, tag: ScenarioTag, foreign_clean: bool) -> _Row:
        if tag is ScenarioTag.CLEAN_ROUTINE:
            return self.clean(foreign_clean)
        if tag is ScenarioTag.CASH_STRUCTURING:
            return self.cash_structuring()
        if tag is ScenarioTag.BLACKLIST_CORRIDOR:
            return self.blacklist_corridor()
        if tag is ScenarioTag.WILDLIFE_CORRIDOR:
            return self.wildlife_corridor()
        if tag is ScenarioTag.KEYWORD_STATEMENT:
            return self.keyword_statement()
        if tag is ScenarioTag.VELOCITY_SPIKE:
            return self.velocity_spike()
        if tag is ScenarioTag.LOW_SCORE_LARGE_AMOUNT:
            return self.low_score_large_amount()
        if tag is ScenarioTag.STEALTH_LAUNDERING:
            return self.stealth_laundering()
        return self.benign_lookalike()


def _scenario_counts(cfg: GeneratorConfig) -> tuple[dict[ScenarioTag, int], int]:
    """Per-scenario row counts honouring the exact suspicious-row target and
    the foreign-corridor budget implied by domestic_rate."""
    n = cfg.n_rows
    mix = cfg.effective_mix()
    n_suspicious = round(n * cfg.suspicious_rate)

    sus_counts = _apportion(n_suspicious, [mix[t] for t in SUSPICIOUS_TAGS])
    norm_counts = _apportion(n - n_suspicious, [mix[t] for t in NORMAL_TAGS])
    counts = dict(zip(SUSPICIOUS_TAGS, sus_counts)) | dict(zip(NORMAL_TAGS, norm_counts))

    # Corridor scenarios need a non-AUS side; cap them by the foreign budget
    # and convert any overflow to CashStructuring (stays suspicious).
    budget = math.floor(n * (1.0 - cfg.domestic_rate))
    for tag in (ScenarioTag.WILDLIFE_CORRIDOR, ScenarioTag.BLACKLIST_CORRIDOR):
        used = counts[ScenarioTag.BLACKLIST_CORRIDOR] + counts[ScenarioTag.WILDLIFE_CORRIDOR]
        overflow = max(0, used - budget)
        moved = min(overflow, counts[tag])
        counts[tag] -= moved
        counts[ScenarioTag.CASH_STRUCTURING] += moved

    used = counts[ScenarioTag.BLACKLIST_CORRIDOR] + counts[ScenarioTag.WILDLIFE_CORRIDOR]
    clean_foreign = min(counts[ScenarioTag.CLEAN_ROUTINE], budget - used, round(0.015 * n))
    return counts, max(0, clean_foreign)


def generate(cfg: GeneratorConfig) -> tuple[Dataset, list[LabelValue], list[ScenarioTag]]:
    """Generate a dataset plus hidden ground truth and scenario tags.

    Exactly round(n_rows * suspicious_rate) rows are ground-truth Suspicious;
    at least domestic_rate of rows are AUS->AUS; a stratified anchor_fraction
    of rows carry an expert label equal to the ground truth. Pure function of
    the config.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_rows
    counts, clean_foreign = _scenario_counts(cfg)

    tags: list[ScenarioTag] = []
    for tag in ScenarioTag:
        tags.extend([tag] * counts[tag])
    order = rng.permutation(n)
    tags = [tags[i] for i in order]

    clean_positions = [i for i, t in enumerate(tags) if t is ScenarioTag.CLEAN_ROUTINE]
    foreign_rows: set[int] = set()
    if clean_foreign > 0:
        chosen = rng.choice(len(clean_positions), size=clean_foreign, replace=False)
        foreign_rows = {clean_positions[int(i)] for i in chosen}

    truth = [
        LabelValue.SUSPICIOUS if t in SUSPICIOUS_TAGS else LabelValue.NORMAL for t in tags
    ]

    suspicious_idx = [i for i, t in enumerate(truth) if t is LabelValue.SUSPICIOUS]
    normal_idx = [i for i, t in enumerate(truth) if t is LabelValue.NORMAL]
    anchor_rows: set[int] = set()
    for pool in (suspicious_idx, normal_idx):
        take = round(cfg.anchor_fraction * len(pool))
        if take > 0:
            chosen = rng.choice(len(pool), size=take, replace=False)
            anchor_rows |= {pool[int(i)] for i in chosen}

    sampler = _Sampler(rng)
    n_accounts = max(50, n // 8)
    n_banks = len(_BANKS)
    records: list[TransactionRecord] = []
    for i in range(n):
        row = sampler.build(tags[i], i in foreign_rows)
        day = int(rng.integers(0, _DAYS))
        hour_cum = _NIGHT_HOUR_CUM if row.night else _DAY_HOUR_CUM
        hour = int(np.searchsorted(hour_cum, rng.random()))
        minute = int(rng.integers(0, 60))
        timestamp = _EPOCH + timedelta(days=day, hours=hour, minutes=minute)
        product_codes = _CODES_PER_PRODUCT[row.product_type]
        records.append(
            TransactionRecord(
                transaction_id=f"TX{i:08d}",
                account_id=f"AC{int(rng.integers(0, n_accounts)):06d}",
                customer_type=row.customer_type,
                product_type=row.product_type,
                transaction_code=int(rng.integers(0, product_codes)),
                branch=f"BR{int(rng.integers(1, 41)):03d}",
                source_bank=_BANKS[int(rng.integers(0, n_banks))],
                dest_bank=_BANKS[int(rng.integers(0, n_banks))],
                timestamp=timestamp,
                amount=_money(row.amount),
                avg_amount_prev_month=_money(row.avg_prev),
                currency=row.currency,
                credit_debit=(
                    CreditDebit.CREDIT if rng.random() < 0.5 else CreditDebit.DEBIT
                ),
                country_origin=row.country_origin,
                country_dest=row.country_dest,
                statement=" ".join(row.statement_words),
                credit_score=float(f"{row.credit_score:.6f}"),
                expert_label=truth[i] if i in anchor_rows else None,
            )
        )
    return Dataset(tuple(records)), truth, tags


def describe_scenarios() -> list[tuple[ScenarioTag, str]]:
    """One human-readable description per scenario tag."""
    return [
        (ScenarioTag.CLEAN_ROUTINE,
         "Routine domestic activity; small log-normal amounts, fires no rule."),
        (ScenarioTag.CASH_STRUCTURING,
         "Cash deposits/withdrawals over the 10k cash-rule threshold."),
        (ScenarioTag.BLACKLIST_CORRIDOR,
         "Payments over 10k with an FATF-blacklisted origin or destination."),
        (ScenarioTag.WILDLIFE_CORRIDOR,
         "Payments over 20k along wildlife-trafficking corridors."),
        (ScenarioTag.KEYWORD_STATEMENT,
         "Statements carrying flagged keywords on payments over 5k."),
        (ScenarioTag.VELOCITY_SPIKE,
         "Amounts far above the account's previous-month average "
         "(1.5x for individuals over 10k, 2x for organisations over 20k)."),
        (ScenarioTag.LOW_SCORE_LARGE_AMOUNT,
         "Individuals with credit score under 0.05 moving over 20k."),
        (ScenarioTag.STEALTH_LAUNDERING,
         "Suspicious by construction but under every rule threshold; "
         "only anomaly detection has a chance."),
        (ScenarioTag.BENIGN_LOOKALIKE,
         "Legitimate activity that trips a rule (just-over-threshold cash, "
         "gaming-related statement); a planted false-positive source."),
    ]
