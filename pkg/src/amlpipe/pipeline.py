"""End-to-end experiment orchestration: generate -> label -> preprocess ->
train -> detect -> fuse -> evaluate.

Every randomized stage draws its seed from the master seed through
``seeding.derive_seed``, so a whole run is a pure function of its config.
Metrics are always computed on the held-out test split against the
generator's hidden ground truth; expert anchors used for LF-weight fitting
are restricted to training rows.
"""

from __future__ import annotations

import configparser
import io
from contextlib import contextmanager
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import anomaly, weak_label
from .classifiers import TrainConfig, TrainedModel, kinds_from_text, predict_proba, train
from .classifiers.common import proba_to_labels
from .data_model import Dataset, LabelValue, save_transactions, write_ground_truth
from .errors import ConfigError, InternalError, PipelineError
from .fusion_eval import (
    MetricsReport,
    auc,
    combine_and,
    confusion,
    metrics,
    reports_to_csv,
    reports_to_table,
)
from .preprocess import (
    SmoteConfig,
    build_features,
    default_schema,
    features_to_csv,
    fit_encoder,
    fit_standardizer,
    smote_augment,
    split_train_test,
    transform,
)
from .seeding import derive_seed
from .synth_gen import GeneratorConfig, generate
from .wordlists import (
    CATEGORY_WORDS,
    STATEMENT_WORDS,
    default_wordlists,
    load_wordlist,
)

DETECTOR_KINDS = ("iforest", "gaussian")
LABEL_MODELS = ("weighted", "majority")

# Fraction of the training split held out to tune the detector threshold.
DETECTOR_CV_FRACTION = 0.25


@dataclass(frozen=True)
class PipelineConfig:
    # generator
    n_rows: int = 100_000
    suspicious_rate: float = 0.08
    domestic_rate: float = 0.95
    anchor_fraction: float = 0.10
    # labeling
    label_model: str = "weighted"
    rules_file: str = ""
    statement_words_file: str = ""
    category_words_file: str = ""
    synonyms_file: str = ""
    # training
    classifiers: str = "all"
    test_fraction: float = 0.2
    smote_k_neighbors: int = 5
    smote_target_ratio: float = 1.0
    # detector
    detector: str = "iforest"
    iforest_trees: int = 100
    iforest_subsample: int = 256
    detector_threshold: str = "auto"
    # run
    seed: int = 42

    def validate(self):
        if self.label_model not in LABEL_MODELS:
            raise ConfigError(f"label_model must be one of {LABEL_MODELS}")
        if self.detector not in DETECTOR_KINDS:
            raise ConfigError(f"detector must be one of {DETECTOR_KINDS}")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError("test_fraction must lie strictly between 0 and 1")
        if self.detector_threshold != "auto":
            try:
                float(self.detector_threshold)
            except ValueError:
                raise ConfigError(
                    "detector_threshold must be 'auto' or a number"
                ) from None
        try:
            kinds_from_text(self.classifiers)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        for path in (
            self.rules_file,
            self.statement_words_file,
            self.category_words_file,
            self.synonyms_file,
        ):
            if path and not Path(path).is_file():
                raise ConfigError(f"referenced file does not exist: {path}")
        self.generator_config().validate()

    def generator_config(self) -> GeneratorConfig:
        return GeneratorConfig(
            n_rows=self.n_rows,
            suspicious_rate=self.suspicious_rate,
            domestic_rate=self.domestic_rate,
            anchor_fraction=self.anchor_fraction,
            seed=derive_seed(self.seed, "generate"),
        )

    def wordlists(self) -> dict[str, frozenset[str]]:
        lists = default_wordlists()
        synonyms = self.synonyms_file or None
        if self.statement_words_file:
            lists[STATEMENT_WORDS] = load_wordlist(self.statement_words_file, synonyms)
        if self.category_words_file:
            lists[CATEGORY_WORDS] = load_wordlist(self.category_words_file, synonyms)
        return lists


_CONFIG_SECTIONS = {
    "generator": ("n_rows", "suspicious_rate", "domestic_rate", "anchor_fraction"),
    "labeling": (
        "label_model",
        "rules_file",
        "statement_words_file",
        "category_words_file",
        "synonyms_file",
    ),
    "training": ("classifiers", "test_fraction", "smote_k_neighbors", "smote_target_ratio"),
    "detector": ("detector", "iforest_trees", "iforest_subsample", "detector_threshold"),
    "run": ("seed",),
}


def config_from_ini(path: str | Path) -> PipelineConfig:
    """Load a config file (INI sections per stage; missing keys keep their
    documented defaults)."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    read = parser.read(str(path))
    if not read:
        raise ConfigError(f"config file not found: {path}")
    defaults = PipelineConfig()
    values: dict[str, object] = {}
    for section, keys in _CONFIG_SECTIONS.items():
        if not parser.has_section(section):
            continue
        for key in parser.options(section):
            if key not in keys:
                raise ConfigError(f"unknown config key [{section}] {key}")
            default = getattr(defaults, key)
            raw = parser.get(section, key).strip()
            try:
                if isinstance(default, bool):
                    values[key] = parser.getboolean(section, key)
                elif isinstance(default, int):
                    values[key] = int(raw)
                elif isinstance(default, float):
                    values[key] = float(raw)
                else:
                    values[key] = raw
            except ValueError:
                raise ConfigError(f"bad value for [{section}] {key}: {raw!r}") from None
    return replace(defaults, **values)


def config_to_ini_text(cfg: PipelineConfig | None = None) -> str:
    """Render a config (defaults if none given) as a commented INI template."""
    cfg = cfg or PipelineConfig()
    comments = {
        "n_rows": "rows to generate",
        "suspicious_rate": "ground-truth suspicious share, in (0, 0.10]",
        "domestic_rate": "minimum AUS->AUS share, in [0.95, 1]",
        "anchor_fraction": "share of rows given expert labels",
        "label_model": "weighted | majority",
        "rules_file": "blank = the ten built-in rules",
        "statement_words_file": "blank = packaged list",
        "category_words_file": "blank = packaged list",
        "synonyms_file": "blank = packaged synonym map",
        "classifiers": "all, or comma list: logreg,knn,gaussian_nb,multinomial_nb,random_forest,neural_net",
        "test_fraction": "held-out test share of rows",
        "smote_k_neighbors": "SMOTE nearest-neighbour count",
        "smote_target_ratio": "minority/majority ratio after augmentation",
        "detector": "iforest | gaussian",
        "iforest_trees": "isolation trees",
        "iforest_subsample": "subsample size per tree",
        "detector_threshold": "auto = F1 sweep on CV data, or a number",
        "seed": "master seed; all stage seeds derive from it",
    }
    out = io.StringIO()
    for section, keys in _CONFIG_SECTIONS.items():
        out.write(f"[{section}]\n")
        for key in keys:
            out.write(f"{key} = {getattr(cfg, key)}  # {comments[key]}\n")
        out.write("\n")
    return out.getvalue()


@dataclass
class LfDiagnostic:
    name: str
    coverage: float
    anchor_accuracy: float
    weight: float


@dataclass
class RunResult:
    config: PipelineConfig
    stage_seeds: dict[str, int]
    dataset: Dataset
    ground_truth: list[LabelValue]
    tags: list
    training_labels: list[LabelValue]
    lf_diagnostics: list[LfDiagnostic]
    vote_disagreements: int
    train_idx: np.ndarray
    test_idx: np.ndarray
    reports: list[MetricsReport]
    test_flags: dict[str, list[LabelValue]]
    fusion_members: tuple[str, str]
    models: dict[str, TrainedModel]
    detector_model: object
    schema: object
    features_csv: str | None = None


def _stage_seeds(cfg: PipelineConfig) -> dict[str, int]:
    kinds = kinds_from_text(cfg.classifiers)
    seeds = {
        "generate": derive_seed(cfg.seed, "generate"),
        "split": derive_seed(cfg.seed, "split"),
        "smote": derive_seed(cfg.seed, "smote"),
        "detector_cv": derive_seed(cfg.seed, "detector_cv"),
        "detector": derive_seed(cfg.seed, "detector"),
    }
    for kind in kinds:
        seeds[f"train.{kind.value}"] = derive_seed(cfg.seed, f"train.{kind.value}")
    return seeds


def run_pipeline(cfg: PipelineConfig, dump_features: bool = False) -> RunResult:
    """Execute the full experiment; the result is a pure function of cfg."""
    cfg.validate()
    seeds = _stage_seeds(cfg)
    wordlists = cfg.wordlists()

    dataset, truth, tags = generate(cfg.generator_config())

    if cfg.rules_file:
        lfs = weak_label.load_rules(Path(cfg.rules_file).read_text(encoding="utf-8"))
    else:
        lfs = weak_label.builtin_lfs(wordlists=wordlists)
    matrix = weak_label.apply_lfs(dataset, lfs, wordlists)

    majority = weak_label.majority_vote(matrix)

    # Split stratified on the anchor-free majority vote so weight fitting can
    # be restricted to training-row anchors without circularity.
    train_idx, test_idx = split_train_test(
        dataset, majority, cfg.test_fraction, seeds["split"]
    )

    anchors_train = weak_label.anchor_pairs(dataset, restrict_to=train_idx)
    label_model = None
    weighted = None
    if anchors_train:
        label_model = weak_label.fit_weights(matrix, anchors_train)
        weighted = weak_label.weighted_vote(matrix, label_model)

    if cfg.label_model == "weighted":
        if label_model is None:
            raise ConfigError(
                "label_model=weighted needs expert anchors; set anchor_fraction > 0"
            )
        auto = weighted
    else:
        auto = majority
    training_labels = weak_label.compose_training_labels(dataset, auto)

    diagnostics = []
    cov = weak_label.coverage(matrix)
    for k, name in enumerate(matrix.lf_names):
        diagnostics.append(
            LfDiagnostic(
                name=name,
                coverage=float(cov[k]),
                anchor_accuracy=float(label_model.accuracies[k]) if label_model else 0.5,
                weight=float(label_model.weights[k]) if label_model else 0.0,
            )
        )
    disagreements = (
        weak_label.disagreement_count(majority, weighted) if weighted is not None else 0
    )

    schema = default_schema(tuple(wordlists))
    encoder = fit_encoder(dataset.subset(train_idx))
    X_raw = build_features(dataset, encoder, wordlists, schema)
    standardizer = fit_standardizer(X_raw[train_idx])
    X = transform(standardizer, X_raw)

    y_train = np.array([int(training_labels[i]) for i in train_idx])
    X_aug, y_aug = smote_augment(
        X[train_idx],
        y_train,
        SmoteConfig(
            k_neighbors=cfg.smote_k_neighbors,
            target_ratio=cfg.smote_target_ratio,
            seed=seeds["smote"],
        ),
    )

    truth_test = [truth[i] for i in test_idx]
    X_test = X[test_idx]

    reports: list[MetricsReport] = []
    test_flags: dict[str, list[LabelValue]] = {}
    models: dict[str, TrainedModel] = {}
    for kind in kinds_from_text(cfg.classifiers):
        train_cfg = TrainConfig(seed=seeds[f"train.{kind.value}"])
        model = train(kind, X_aug, y_aug, train_cfg).with_schema(schema)
        models[kind.value] = model
        scores = predict_proba(model, X_test)
        flags = proba_to_labels(scores, threshold=0.5)
        test_flags[kind.value] = flags
        reports.append(
            metrics(
                confusion(flags, truth_test),
                model=kind.value,
                auc_value=auc(scores, truth_test),
                seed=train_cfg.seed,
            )
        )

    detector_model, detector_scores, detector_flags = _run_detector(
        cfg, seeds, X, train_idx, training_labels, X_test
    )
    test_flags[cfg.detector] = detector_flags
    reports.append(
        metrics(
            confusion(detector_flags, truth_test),
            model=cfg.detector,
            auc_value=auc(detector_scores, truth_test),
            seed=seeds["detector"],
        )
    )

    # AND-fusion of the best classifier (held-out F1, ties by name) with the
    # detector.
    classifier_reports = reports[:-1]
    best = max(classifier_reports, key=lambda r: (r.f1, r.model))
    fused = combine_and(test_flags[best.model], detector_flags)
    fusion_name = f"and({best.model}+{cfg.detector})"
    test_flags[fusion_name] = fused
    reports.append(
        metrics(confusion(fused, truth_test), model=fusion_name, seed=cfg.seed)
    )
    _check_intersection_laws(reports[-1], test_flags[best.model], detector_flags, fused)

    return RunResult(
        config=cfg,
        stage_seeds=seeds,
        dataset=dataset,
        ground_truth=truth,
        tags=tags,
        training_labels=training_labels,
        lf_diagnostics=diagnostics,
        vote_disagreements=disagreements,
        train_idx=train_idx,
        test_idx=test_idx,
        reports=reports,
        test_flags=test_flags,
        fusion_members=(best.model, cfg.detector),
        models=models,
        detector_model=detector_model,
        schema=schema,
        features_csv=features_to_csv(X, schema) if dump_features else None,
    )


def _run_detector(cfg, seeds, X, train_idx, training_labels, X_test):
    """Fit the detector on believed-normal training rows, tune its threshold
    on a mixed CV slice of the training split, and flag the test split."""
    y_train_labels = [training_labels[i] for i in train_idx]
    stats_local, cv_local = split_train_test(
        len(train_idx), y_train_labels, DETECTOR_CV_FRACTION, seeds["detector_cv"]
    )
    stats_rows = train_idx[stats_local]
    cv_rows = train_idx[cv_local]
    normal_rows = np.array(
        [i for i in stats_rows if training_labels[i] is LabelValue.NORMAL], dtype=np.intp
    )
    X_fit = X[normal_rows]
    X_cv = X[cv_rows]
    y_cv = np.array([int(training_labels[i]) for i in cv_rows])

    if cfg.detector == "iforest":
        model = anomaly.fit_iforest(
            X_fit, t=cfg.iforest_trees, psi=cfg.iforest_subsample, seed=seeds["detector"]
        )
        if cfg.detector_threshold == "auto":
            threshold = anomaly.select_iforest_threshold(model, X_cv, y_cv)
        else:
            threshold = float(cfg.detector_threshold)
        model = anomaly.with_threshold(model, threshold)
        scores = anomaly.anomaly_score(model, X_test)
    else:
        model = anomaly.fit_gaussian(X_fit)
        if cfg.detector_threshold == "auto":
            threshold = anomaly.select_epsilon(model, X_cv, y_cv)
        else:
            threshold = float(cfg.detector_threshold)
        model = anomaly.with_threshold(model, threshold)
        # Higher score = more anomalous, for AUC comparability.
        scores = -anomaly.log_density(model, X_test)
    flags = anomaly.flag(model, X_test)
    return model, scores, flags


def _check_intersection_laws(fusion_report, flags_a, flags_b, fused):
    pos_a = {i for i, f in enumerate(flags_a) if f is LabelValue.SUSPICIOUS}
    pos_b = {i for i, f in enumerate(flags_b) if f is LabelValue.SUSPICIOUS}
    pos_f = {i for i, f in enumerate(fused) if f is LabelValue.SUSPICIOUS}
    if not (pos_f <= pos_a and pos_f <= pos_b):
        raise InternalError("fusion positives escaped a component's positive set")
    if pos_f != (pos_a & pos_b):
        raise InternalError("fusion flags are not the exact intersection")


def report_header(result: RunResult) -> str:
    cfg = result.config
    lines = [
        "# amlpipe run report",
        f"# rows={cfg.n_rows} suspicious_rate={cfg.suspicious_rate} "
        f"domestic_rate={cfg.domestic_rate} anchor_fraction={cfg.anchor_fraction}",
        f"# label_model={cfg.label_model} classifiers={cfg.classifiers} "
        f"detector={cfg.detector} detector_threshold={cfg.detector_threshold}",
        f"# test_fraction={cfg.test_fraction} smote_k={cfg.smote_k_neighbors} "
        f"smote_ratio={cfg.smote_target_ratio}",
        f"# master_seed={cfg.seed}",
        "# stage_seeds: "
        + " ".join(f"{name}={seed}" for name, seed in sorted(result.stage_seeds.items())),
        f"# fusion=and({result.fusion_members[0]}+{result.fusion_members[1]})",
        f"# weighted/majority vote disagreements: {result.vote_disagreements}",
        "# conventions: population std-dev standardization; metrics on the held-out test split",
    ]
    return "\n".join(lines) + "\n"


def lf_diagnostics_csv(result: RunResult) -> str:
    out = io.StringIO()
    out.write("lf,coverage,anchor_accuracy,weight\n")
    for d in result.lf_diagnostics:
        out.write(f"{d.name},{d.coverage:.6f},{d.anchor_accuracy:.6f},{d.weight:.6f}\n")
    return out.getvalue()


def labels_csv(result: RunResult) -> str:
    out = io.StringIO()
    out.write("transaction_id,label\n")
    for record, label in zip(result.dataset, result.training_labels):
        text = "Suspicious" if label is LabelValue.SUSPICIOUS else "Normal"
        out.write(f"{record.transaction_id},{text}\n")
    return out.getvalue()


def write_outputs(result: RunResult, out_dir: str | Path) -> list[Path]:
    """Write the full deterministic artifact set for a run."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def _write(name: str, text: str):
        path = out / name
        path.write_text(text, encoding="utf-8")
        written.append(path)

    ids = [r.transaction_id for r in result.dataset]
    _write("transactions.csv", save_transactions(result.dataset))
    _write("ground_truth.csv", write_ground_truth(ids, result.ground_truth, result.tags))
    _write("labels.csv", labels_csv(result))
    _write("lf_diagnostics.csv", lf_diagnostics_csv(result))
    _write("metrics.csv", reports_to_csv(result.reports))
    _write("report.txt", report_header(result) + reports_to_table(result.reports))
    if result.features_csv is not None:
        _write("features.csv", result.features_csv)
    return written
