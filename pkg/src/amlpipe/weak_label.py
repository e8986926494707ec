"""Labeling functions, the rule predicate DSL, and label aggregation.

A labeling function (LF) votes Suspicious on a transaction or abstains; the
ten built-ins mirror the cash-amount, country-corridor, statement-keyword,
velocity, and credit-score rules with configurable thresholds. Applying a
list of LFs to a dataset yields a label matrix (rows x LFs, cells
Suspicious/Normal/Abstain) which is aggregated to one training label per row
either by majority vote or by an accuracy-weighted vote whose per-LF weights
are fit on the expert-labeled anchor subset.

Rule expressions use a small predicate language::

    expr       := term ("or" term)*
    term       := factor ("and" factor)*
    factor     := "(" expr ")" | predicate
    predicate  := field (< | <= | > | >= | ==) number
                | amount OP number "*" avg_amount_prev_month
                | field "in" "{" value ("," value)* "}"
                | field "==" value
                | "statement" "has" wordlist_name

Numeric literals may also be rule-local constants declared with
``const name = value``. Word matching is case-insensitive over tokens split
on non-alphanumeric boundaries and includes synonym expansions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .data_model import (
    Columns,
    CreditDebit,
    CustomerType,
    Dataset,
    LabelValue,
    ProductType,
)
from .errors import (
    DimensionMismatch,
    EmptyAnchors,
    LengthMismatch,
    MissingWordlist,
    RuleSyntaxError,
)
from .wordlists import CATEGORY_WORDS, STATEMENT_WORDS, default_wordlists

# Vote values inside a LabelMatrix.
SUSPICIOUS = int(LabelValue.SUSPICIOUS)
NORMAL = int(LabelValue.NORMAL)
ABSTAIN = -1

MAX_RULE_DEPTH = 8

NUMERIC_FIELDS = frozenset(
    {"amount", "avg_amount_prev_month", "credit_score", "transaction_code", "hour"}
)
STRING_FIELDS = frozenset(
    {
        "customer_type",
        "product_type",
        "credit_debit",
        "currency",
        "country_origin",
        "country_dest",
        "branch",
        "source_bank",
        "dest_bank",
        "account_id",
        "transaction_id",
    }
)
_ENUM_VALUES = {
    "customer_type": frozenset(m.value for m in CustomerType),
    "product_type": frozenset(m.value for m in ProductType),
    "credit_debit": frozenset(m.value for m in CreditDebit),
}


class EvalContext:
    """Column arrays plus the wordlist registry, with cached keyword hits."""

    def __init__(self, columns: Columns, wordlists: Mapping[str, frozenset[str]]):
        self.columns = columns
        self.wordlists = wordlists
        self._hit_cache: dict[str, np.ndarray] = {}

    def wordlist_hits(self, name: str) -> np.ndarray:
        if name not in self._hit_cache:
            if name not in self.wordlists:
                raise MissingWordlist(f"wordlist '{name}' is not loaded")
            words = self.wordlists[name]
            tokens = self.columns.statement_tokens
            self._hit_cache[name] = np.fromiter(
                (not words.isdisjoint(t) for t in tokens), dtype=bool, count=len(tokens)
            )
        return self._hit_cache[name]


_COMPARATORS = {
    "<": np.less,
    "<=": np.less_equal,
    ">": np.greater,
    ">=": np.greater_equal,
    "==": np.equal,
}


@dataclass(frozen=True)
class NumericThreshold:
    field: str
    op: str
    value: float

    def mask(self, ctx: EvalContext) -> np.ndarray:
        return _COMPARATORS[self.op](getattr(ctx.columns, self.field), self.value)

    def depth(self) -> int:
        return 1


@dataclass(frozen=True)
class NumericRatio:
    """amount compared against multiplier * avg_amount_prev_month."""

    op: str
    multiplier: float

    def mask(self, ctx: EvalContext) -> np.ndarray:
        return _COMPARATORS[self.op](
            ctx.columns.amount, self.multiplier * ctx.columns.avg_amount_prev_month
        )

    def depth(self) -> int:
        return 1


@dataclass(frozen=True)
class SetMembership:
    field: str
    values: frozenset[str]

    def mask(self, ctx: EvalContext) -> np.ndarray:
        column = getattr(ctx.columns, self.field)
        return np.isin(column, sorted(self.values))

    def depth(self) -> int:
        return 1


@dataclass(frozen=True)
class EnumEquals:
    field: str
    value: str

    def mask(self, ctx: EvalContext) -> np.ndarray:
        return getattr(ctx.columns, self.field) == self.value

    def depth(self) -> int:
        return 1


@dataclass(frozen=True)
class WordMatch:
    wordlist: str

    def mask(self, ctx: EvalContext) -> np.ndarray:
        return ctx.wordlist_hits(self.wordlist)

    def depth(self) -> int:
        return 1


@dataclass(frozen=True)
class And:
    children: tuple

    def mask(self, ctx: EvalContext) -> np.ndarray:
        out = self.children[0].mask(ctx)
        for child in self.children[1:]:
            out = out & child.mask(ctx)
        return out

    def depth(self) -> int:
        return 1 + max(c.depth() for c in self.children)


@dataclass(frozen=True)
class Or:
    children: tuple

    def mask(self, ctx: EvalContext) -> np.ndarray:
        out = self.children[0].mask(ctx)
        for child in self.children[1:]:
            out = out | child.mask(ctx)
        return out

    def depth(self) -> int:
        return 1 + max(c.depth() for c in self.children)


@dataclass(frozen=True)
class LabelingFunction:
    """Deterministic rule that emits Suspicious where its condition holds."""

    name: str
    condition: object
    emits: LabelValue = LabelValue.SUSPICIOUS

    def __post_init__(self):
        if self.condition.depth() > MAX_RULE_DEPTH:
            raise RuleSyntaxError(
                f"rule '{self.name}' exceeds maximum predicate depth {MAX_RULE_DEPTH}"
            )

    def votes(self, ctx: EvalContext) -> np.ndarray:
        try:
            mask = self.condition.mask(ctx)
        except MissingWordlist as exc:
            raise MissingWordlist(f"rule '{self.name}': {exc}") from None
        return np.where(mask, np.int8(int(self.emits)), np.int8(ABSTAIN))


# --- expression parsing --------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op><=|>=|==|[<>(){},*]))"
)


def _lex(text: str) -> list[str]:
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None or match.end() == pos:
            remainder = text[pos:].strip()
            if not remainder:
                break
            raise RuleSyntaxError(f"cannot tokenize near {remainder[:20]!r}")
        tokens.append(match.group().strip())
        pos = match.end()
    return tokens


class _Parser:
    def __init__(self, tokens: list[str], constants: Mapping[str, float]):
        self.tokens = tokens
        self.pos = 0
        self.constants = constants

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> str:
        token = self.peek()
        if token is None:
            raise RuleSyntaxError("unexpected end of expression")
        self.pos += 1
        return token

    def expect(self, token: str):
        got = self.take()
        if got != token:
            raise RuleSyntaxError(f"expected {token!r}, got {got!r}")

    def parse(self):
        expr = self.parse_or()
        if self.peek() is not None:
            raise RuleSyntaxError(f"trailing tokens from {self.peek()!r}")
        return expr

    def parse_or(self):
        children = [self.parse_and()]
        while self.peek() == "or":
            self.take()
            children.append(self.parse_and())
        return children[0] if len(children) == 1 else Or(tuple(children))

    def parse_and(self):
        children = [self.parse_factor()]
        while self.peek() == "and":
            self.take()
            children.append(self.parse_factor())
        return children[0] if len(children) == 1 else And(tuple(children))

    def parse_factor(self):
        if self.peek() == "(":
            self.take()
            expr = self.parse_or()
            self.expect(")")
            return expr
        return self.parse_predicate()

    def _number(self, token: str) -> float:
        if re.fullmatch(r"\d+(?:\.\d+)?", token):
            return float(token)
        if token in self.constants:
            return float(self.constants[token])
        raise RuleSyntaxError(f"{token!r} is neither a number nor a declared constant")

    def parse_predicate(self):
        name = self.take()
        if name == "statement":
            self.expect("has")
            return WordMatch(self.take())
        if name not in NUMERIC_FIELDS and name not in STRING_FIELDS:
            raise RuleSyntaxError(f"unknown field {name!r}")

        op = self.take()
        if op == "in":
            self.expect("{")
            values = [self.take()]
            while self.peek() == ",":
                self.take()
                values.append(self.take())
            self.expect("}")
            if name in NUMERIC_FIELDS:
                raise RuleSyntaxError(f"'in' applies to string fields, not {name!r}")
            self._check_enum_values(name, values)
            return SetMembership(name, frozenset(values))

        if op not in _COMPARATORS:
            raise RuleSyntaxError(f"expected comparator after {name!r}, got {op!r}")

        if name in STRING_FIELDS:
            if op != "==":
                raise RuleSyntaxError(f"string field {name!r} supports only '=='")
            value = self.take()
            self._check_enum_values(name, [value])
            return EnumEquals(name, value)

        operand = self.take()
        value = self._number(operand)
        if self.peek() == "*":
            self.take()
            other = self.take()
            if name != "amount" or other != "avg_amount_prev_month":
                raise RuleSyntaxError(
                    "ratio predicates must compare amount against avg_amount_prev_month"
                )
            return NumericRatio(op, value)
        return NumericThreshold(name, op, value)

    @staticmethod
    def _check_enum_values(field_name: str, values: Sequence[str]):
        allowed = _ENUM_VALUES.get(field_name)
        if allowed is None:
            return
        for value in values:
            if value not in allowed:
                raise RuleSyntaxError(
                    f"{value!r} is not a valid {field_name} (one of {sorted(allowed)})"
                )


def parse_expression(text: str, constants: Mapping[str, float] | None = None):
    """Parse one rule expression into a condition tree."""
    return _Parser(_lex(text), constants or {}).parse()


def load_rules(text: str) -> list[LabelingFunction]:
    """Parse a declarative rules file into labeling functions.

    Format: ``[rule_name]`` section headers, optional ``const name = value``
    lines, and one ``when: expression`` line per rule. ``#`` starts a comment.
    """
    lfs: list[LabelingFunction] = []
    name: str | None = None
    constants: dict[str, float] = {}
    condition = None

    def flush():
        nonlocal condition
        if name is not None:
            if condition is None:
                raise RuleSyntaxError(f"rule '{name}' has no 'when:' line")
            lfs.append(LabelingFunction(name, condition))
            condition = None

    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            flush()
            name = line[1:-1].strip()
            constants = {}
            continue
        if name is None:
            raise RuleSyntaxError(f"content before first [rule] header: {line!r}")
        if line.startswith("const "):
            body = line[len("const "):]
            if "=" not in body:
                raise RuleSyntaxError(f"const line must be 'const name = value': {line!r}")
            const_name, _, value = body.partition("=")
            try:
                constants[const_name.strip()] = float(value.strip())
            except ValueError:
                raise RuleSyntaxError(f"bad constant value in {line!r}") from None
            continue
        if line.startswith("when:") or line.startswith("when ="):
            expression = line.split(":", 1)[1] if ":" in line else line.split("=", 1)[1]
            condition = parse_expression(expression, constants)
            continue
        raise RuleSyntaxError(f"unrecognized rule line: {line!r}")
    flush()
    if not lfs:
        raise RuleSyntaxError("rules file defines no rules")
    return lfs


# --- built-in rules ------------------------------------------------------

@dataclass(frozen=True)
class LfThresholds:
    """Configurable constants of the ten built-in rules (published defaults)."""

    cash_amount: float = 10000.0
    fatf_amount: float = 10000.0
    wildlife_amount: float = 20000.0
    keyword_amount: float = 5000.0
    individual_multiplier: float = 1.5
    individual_amount: float = 10000.0
    org_multiplier: float = 2.0
    org_amount: float = 20000.0
    credit_score_cutoff: float = 0.05
    credit_amount: float = 20000.0
    fatf_countries: tuple[str, ...] = ("PAK", "SYR", "IRN", "YEM")
    wildlife_countries: tuple[str, ...] = ("KEN", "TZA", "VNM")


def builtin_rule_text(thresholds: LfThresholds | None = None) -> str:
    """The ten built-in rules rendered in the rule DSL."""
    t = thresholds or LfThresholds()
    fatf = ", ".join(t.fatf_countries)
    wild = ", ".join(t.wildlife_countries)
    return f"""
[cash_large]
when: product_type in {{CashIn, CashOut}} and amount > {t.cash_amount!r}

[fatf_origin]
when: country_origin in {{{fatf}}} and amount > {t.fatf_amount!r}

[wildlife_origin]
when: country_origin in {{{wild}}} and amount > {t.wildlife_amount!r}

[fatf_dest]
when: country_dest in {{{fatf}}} and amount > {t.fatf_amount!r}

[wildlife_dest]
when: country_dest in {{{wild}}} and amount > {t.wildlife_amount!r}

[statement_keyword]
when: statement has {STATEMENT_WORDS} and amount > {t.keyword_amount!r}

[category_keyword]
when: statement has {CATEGORY_WORDS} and amount > {t.keyword_amount!r}

[individual_velocity]
when: customer_type == Individual and amount > {t.individual_multiplier!r} * avg_amount_prev_month and amount > {t.individual_amount!r}

[org_velocity]
when: customer_type in {{Organisation, Association, Trust}} and amount > {t.org_multiplier!r} * avg_amount_prev_month and amount > {t.org_amount!r}

[low_credit_large]
when: customer_type == Individual and credit_score < {t.credit_score_cutoff!r} and amount > {t.credit_amount!r}
"""


def builtin_lfs(
    thresholds: LfThresholds | None = None,
    wordlists: Mapping[str, frozenset[str]] | None = None,
) -> list[LabelingFunction]:
    """The ten built-in labeling functions, in registration order.

    ``wordlists`` must contain the statement and category lists; it defaults
    to the packaged ones.
    """
    registry = default_wordlists() if wordlists is None else wordlists
    for required in (STATEMENT_WORDS, CATEGORY_WORDS):
        if required not in registry:
            raise MissingWordlist(f"wordlist '{required}' is not loaded")
    return load_rules(builtin_rule_text(thresholds))


# --- label matrix and aggregation ----------------------------------------

@dataclass(frozen=True)
class LabelMatrix:
    """Per-transaction votes of every LF; cells Suspicious/Normal/Abstain."""

    votes: np.ndarray  # (n_rows, n_lfs) int8
    lf_names: tuple[str, ...]

    @property
    def n_rows(self) -> int:
        return self.votes.shape[0]

    @property
    def n_lfs(self) -> int:
        return self.votes.shape[1]


@dataclass(frozen=True)
class LabelModel:
    """Per-LF accuracy estimates and log-odds weights from the anchor set."""

    weights: np.ndarray
    accuracies: np.ndarray
    lf_names: tuple[str, ...]
    threshold: float = 0.0


def apply_lfs(
    dataset: Dataset,
    lfs: Sequence[LabelingFunction],
    wordlists: Mapping[str, frozenset[str]] | None = None,
) -> LabelMatrix:
    """Evaluate every LF on every row; column order follows ``lfs``."""
    ctx = EvalContext(dataset.columns, default_wordlists() if wordlists is None else wordlists)
    n = len(dataset)
    votes = np.empty((n, len(lfs)), dtype=np.int8)
    for k, lf in enumerate(lfs):
        votes[:, k] = lf.votes(ctx)
    return LabelMatrix(votes, tuple(lf.name for lf in lfs))


def coverage(matrix: LabelMatrix) -> np.ndarray:
    """Per-LF non-abstain rate."""
    if matrix.n_rows == 0:
        return np.zeros(matrix.n_lfs)
    return (matrix.votes != ABSTAIN).mean(axis=0)


def majority_vote(matrix: LabelMatrix) -> list[LabelValue]:
    """Suspicious iff Suspicious votes strictly outnumber Normal votes.

    All-abstain rows and ties resolve to Normal: the pipeline's precision
    goal penalizes spurious positives.
    """
    suspicious = (matrix.votes == SUSPICIOUS).sum(axis=1)
    normal = (matrix.votes == NORMAL).sum(axis=1)
    return [
        LabelValue.SUSPICIOUS if s > m else LabelValue.NORMAL
        for s, m in zip(suspicious, normal)
    ]


def fit_weights(
    matrix: LabelMatrix, anchors: Sequence[tuple[int, LabelValue]]
) -> LabelModel:
    """Estimate per-LF accuracy on the expert anchor rows.

    accuracy = (correct non-abstain votes + 1) / (non-abstain votes + 2)
    (Laplace smoothing, so a perfect small-sample LF cannot reach an
    infinite weight), clamped to [0.01, 0.99]; weight = ln(acc / (1 - acc)).
    """
    if len(anchors) == 0:
        raise EmptyAnchors("weight fitting needs at least one anchor row")
    rows = np.array([i for i, _ in anchors], dtype=np.intp)
    labels = np.array([int(label) for _, label in anchors], dtype=np.int8)
    if np.any((labels != SUSPICIOUS) & (labels != NORMAL)):
        raise EmptyAnchors("anchor labels must be Suspicious or Normal")

    votes = matrix.votes[rows]
    non_abstain = votes != ABSTAIN
    correct = non_abstain & (votes == labels[:, None])
    acc = (correct.sum(axis=0) + 1.0) / (non_abstain.sum(axis=0) + 2.0)
    acc = np.clip(acc, 0.01, 0.99)
    weights = np.log(acc / (1.0 - acc))
    return LabelModel(weights=weights, accuracies=acc, lf_names=matrix.lf_names)


def weighted_vote(matrix: LabelMatrix, model: LabelModel) -> list[LabelValue]:
    """Per row: sum +weight for Suspicious votes, -weight for Normal votes;
    Suspicious iff the score strictly exceeds the model threshold."""
    if matrix.n_lfs != len(model.weights):
        raise DimensionMismatch(
            f"matrix has {matrix.n_lfs} LFs but model has {len(model.weights)} weights"
        )
    score = (matrix.votes == SUSPICIOUS) @ model.weights - (
        matrix.votes == NORMAL
    ) @ model.weights
    return [
        LabelValue.SUSPICIOUS if s > model.threshold else LabelValue.NORMAL for s in score
    ]


def compose_training_labels(
    dataset: Dataset, auto: Sequence[LabelValue]
) -> list[LabelValue]:
    """Expert label wins where present; the auto label fills the rest."""
    if len(dataset) != len(auto):
        raise LengthMismatch(f"dataset has {len(dataset)} rows, auto labels {len(auto)}")
    out: list[LabelValue] = []
    for record, auto_label in zip(dataset, auto):
        label = record.expert_label if record.expert_label is not None else auto_label
        if label is LabelValue.UNLABELED:
            raise LengthMismatch("auto labels must not contain Unlabeled")
        out.append(label)
    return out


def anchor_pairs(dataset: Dataset, restrict_to: Sequence[int] | None = None
                 ) -> list[tuple[int, LabelValue]]:
    """(row index, expert label) for every expert-labeled row, optionally
    restricted to a set of row indices (e.g. the training split)."""
    allowed = None if restrict_to is None else set(int(i) for i in restrict_to)
    pairs = []
    for i, record in enumerate(dataset):
        if record.expert_label is not None and (allowed is None or i in allowed):
            pairs.append((i, record.expert_label))
    return pairs


def disagreement_count(a: Sequence[LabelValue], b: Sequence[LabelValue]) -> int:
    if len(a) != len(b):
        raise LengthMismatch("label lists differ in length")
    return int(sum(1 for x, y in zip(a, b) if x != y))
