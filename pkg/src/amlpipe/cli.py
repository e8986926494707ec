"""Command-line interface.

Subcommands: generate, label, train, detect, run, evaluate, cluster.
Exit codes: 0 success, 2 configuration error, 3 data error, 4 violated
internal invariant.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import anomaly, weak_label
from .classifiers import TrainConfig, kinds_from_text, train
from .data_model import (
    Dataset,
    LabelValue,
    parse_ground_truth,
    parse_transactions,
    save_transactions,
    write_ground_truth,
)
from .errors import ConfigError, DataError, InternalError, UnmatchedIds
from .fusion_eval import confusion, metrics, reports_to_csv, reports_to_table
from .model_io import (
    classifier_to_dict,
    detector_to_dict,
    encoder_to_dict,
    save_artifact,
    schema_to_dict,
    standardizer_to_dict,
)
from .pipeline import (
    PipelineConfig,
    config_from_ini,
    config_to_ini_text,
    run_pipeline,
    write_outputs,
)
from .preprocess import (
    build_features,
    default_schema,
    features_to_csv,
    fit_encoder,
    fit_standardizer,
    transform,
)
from .seeding import derive_seed
from .synth_gen import describe_scenarios, generate
from .cluster import elbow_select, elbow_to_csv


def _load_config(args) -> PipelineConfig:
    cfg = config_from_ini(args.config) if args.config else PipelineConfig()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "model", None):
        overrides["classifiers"] = args.model
    if getattr(args, "detector", None):
        overrides["detector"] = args.detector
    if overrides:
        from dataclasses import replace

        cfg = replace(cfg, **overrides)
    return cfg


def _read_labels_csv(path: str) -> dict[str, LabelValue]:
    import csv

    mapping = {}
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or header[0] != "transaction_id":
            raise DataError(f"{path}: expected header transaction_id,label")
        for row in reader:
            if len(row) < 2:
                raise DataError(f"{path}: short row {row!r}")
            if row[1] not in ("Suspicious", "Normal"):
                raise DataError(f"{path}: label must be Suspicious/Normal, got {row[1]!r}")
            mapping[row[0]] = (
                LabelValue.SUSPICIOUS if row[1] == "Suspicious" else LabelValue.NORMAL
            )
    return mapping


def _labels_for_dataset(dataset: Dataset, mapping: dict[str, LabelValue]) -> list[LabelValue]:
    ids = {r.transaction_id for r in dataset}
    if ids != set(mapping):
        missing = sorted(ids ^ set(mapping))[:5]
        raise UnmatchedIds(f"label file does not cover the dataset (e.g. {missing})")
    return [mapping[r.transaction_id] for r in dataset]


def cmd_generate(args) -> int:
    cfg = _load_config(args)
    gen_cfg = cfg.generator_config()
    dataset, truth, tags = generate(gen_cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "transactions.csv").write_text(save_transactions(dataset), encoding="utf-8")
    ids = [r.transaction_id for r in dataset]
    (out / "ground_truth.csv").write_text(
        write_ground_truth(ids, truth, tags), encoding="utf-8"
    )
    n_suspicious = sum(1 for t in truth if t is LabelValue.SUSPICIOUS)
    n_anchor = sum(1 for r in dataset if r.expert_label is not None)
    print(f"rows: {len(dataset)}")
    print(f"suspicious: {n_suspicious}")
    print(f"expert-labeled anchors: {n_anchor}")
    print(f"wrote {out / 'transactions.csv'} and {out / 'ground_truth.csv'}")
    return 0


def cmd_label(args) -> int:
    cfg = _load_config(args)
    dataset = parse_transactions(Path(args.data).read_text(encoding="utf-8"))
    wordlists = cfg.wordlists()
    if cfg.rules_file:
        lfs = weak_label.load_rules(Path(cfg.rules_file).read_text(encoding="utf-8"))
    else:
        lfs = weak_label.builtin_lfs(wordlists=wordlists)
    matrix = weak_label.apply_lfs(dataset, lfs, wordlists)
    majority = weak_label.majority_vote(matrix)
    anchors = weak_label.anchor_pairs(dataset)

    label_model = None
    weighted = None
    if anchors:
        label_model = weak_label.fit_weights(matrix, anchors)
        weighted = weak_label.weighted_vote(matrix, label_model)

    if cfg.label_model == "weighted":
        if weighted is None:
            raise ConfigError("label_model=weighted needs expert-labeled anchor rows")
        auto = weighted
    else:
        auto = majority
    labels = weak_label.compose_training_labels(dataset, auto)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["transaction_id,label"]
    for record, label in zip(dataset, labels):
        text = "Suspicious" if label is LabelValue.SUSPICIOUS else "Normal"
        lines.append(f"{record.transaction_id},{text}")
    (out / "labels.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    cov = weak_label.coverage(matrix)
    diag = ["lf,coverage,anchor_accuracy,weight"]
    for k, name in enumerate(matrix.lf_names):
        acc = label_model.accuracies[k] if label_model else 0.5
        weight = label_model.weights[k] if label_model else 0.0
        diag.append(f"{name},{cov[k]:.6f},{acc:.6f},{weight:.6f}")
    (out / "lf_diagnostics.csv").write_text("\n".join(diag) + "\n", encoding="utf-8")

    n_suspicious = sum(1 for v in labels if v is LabelValue.SUSPICIOUS)
    print(f"labeled {len(labels)} rows ({n_suspicious} suspicious)")
    if weighted is not None:
        print(
            "weighted vs majority disagreements: "
            f"{weak_label.disagreement_count(majority, weighted)}"
        )
    print(f"wrote {out / 'labels.csv'} and {out / 'lf_diagnostics.csv'}")
    return 0


def cmd_train(args) -> int:
    cfg = _load_config(args)
    dataset = parse_transactions(Path(args.data).read_text(encoding="utf-8"))
    labels = _labels_for_dataset(dataset, _read_labels_csv(args.labels))
    kinds = kinds_from_text(args.model or cfg.classifiers)

    wordlists = cfg.wordlists()
    schema = default_schema(tuple(wordlists))
    encoder = fit_encoder(dataset)
    X_raw = build_features(dataset, encoder, wordlists, schema)
    standardizer = fit_standardizer(X_raw)
    X = transform(standardizer, X_raw)
    y = np.array([int(v) for v in labels])

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.dump_features:
        (out / "features.csv").write_text(features_to_csv(X, schema), encoding="utf-8")

    for kind in kinds:
        train_cfg = TrainConfig(seed=derive_seed(cfg.seed, f"train.{kind.value}"))
        model = train(kind, X, y, train_cfg).with_schema(schema)
        payload = {
            "model": classifier_to_dict(model),
            "encoder": encoder_to_dict(encoder),
            "standardizer": standardizer_to_dict(standardizer),
            "schema": schema_to_dict(schema),
        }
        path = out / f"model_{kind.value}.json"
        save_artifact(path, "classifier-bundle", payload)
        print(f"trained {kind.value} on {len(X)} rows -> {path}")
    return 0


def cmd_detect(args) -> int:
    cfg = _load_config(args)
    dataset = parse_transactions(Path(args.data).read_text(encoding="utf-8"))
    wordlists = cfg.wordlists()
    schema = default_schema(tuple(wordlists))
    encoder = fit_encoder(dataset)
    X_raw = build_features(dataset, encoder, wordlists, schema)
    standardizer = fit_standardizer(X_raw)
    X = transform(standardizer, X_raw)

    labels = None
    if args.labels:
        labels = _labels_for_dataset(dataset, _read_labels_csv(args.labels))
        normal_rows = np.array(
            [i for i, v in enumerate(labels) if v is LabelValue.NORMAL], dtype=np.intp
        )
        X_fit = X[normal_rows]
    else:
        X_fit = X

    detector_seed = derive_seed(cfg.seed, "detector")
    if cfg.detector == "iforest":
        model = anomaly.fit_iforest(
            X_fit, t=cfg.iforest_trees, psi=cfg.iforest_subsample, seed=detector_seed
        )
    else:
        model = anomaly.fit_gaussian(X_fit)

    if cfg.detector_threshold == "auto":
        if labels is None:
            if cfg.detector == "gaussian":
                raise ConfigError(
                    "gaussian detector needs --labels for the threshold sweep "
                    "or an explicit detector_threshold"
                )
            threshold = model.threshold  # iforest default 0.6
        else:
            y = np.array([int(v) for v in labels])
            if cfg.detector == "iforest":
                threshold = anomaly.select_iforest_threshold(model, X, y)
            else:
                threshold = anomaly.select_epsilon(model, X, y)
    else:
        threshold = float(cfg.detector_threshold)
    model = anomaly.with_threshold(model, threshold)

    flags = anomaly.flag(model, X)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["transaction_id,label"]
    for record, label in zip(dataset, flags):
        text = "Suspicious" if label is LabelValue.SUSPICIOUS else "Normal"
        lines.append(f"{record.transaction_id},{text}")
    (out / "flags.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    save_artifact(out / "detector.json", "detector", detector_to_dict(model))

    n_flagged = sum(1 for v in flags if v is LabelValue.SUSPICIOUS)
    print(f"{cfg.detector}: flagged {n_flagged} of {len(flags)} rows "
          f"(threshold {threshold:.6f})")
    print(f"wrote {out / 'flags.csv'} and {out / 'detector.json'}")
    return 0


def cmd_run(args) -> int:
    cfg = _load_config(args)
    result = run_pipeline(cfg, dump_features=args.dump_features)
    written = write_outputs(result, args.out)
    print(reports_to_table(result.reports), end="")
    print(f"fusion members: {result.fusion_members[0]} AND {result.fusion_members[1]}")
    print(f"wrote {len(written)} files to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    predictions = _read_labels_csv(args.predictions)
    truth = parse_ground_truth(Path(args.truth).read_text(encoding="utf-8"))
    if set(predictions) != set(truth):
        missing = sorted(set(predictions) ^ set(truth))[:5]
        raise UnmatchedIds(f"prediction/truth ids differ (e.g. {missing})")
    ids = sorted(predictions)
    pred = [predictions[i] for i in ids]
    true = [truth[i] for i in ids]
    report = metrics(confusion(pred, true), model=args.name)
    print(reports_to_table([report]), end="")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.csv").write_text(reports_to_csv([report]), encoding="utf-8")
        print(f"wrote {out / 'metrics.csv'}")
    return 0


def cmd_cluster(args) -> int:
    cfg = _load_config(args)
    dataset = parse_transactions(Path(args.data).read_text(encoding="utf-8"))
    wordlists = cfg.wordlists()
    schema = default_schema(tuple(wordlists))
    encoder = fit_encoder(dataset)
    X_raw = build_features(dataset, encoder, wordlists, schema)
    X = transform(fit_standardizer(X_raw), X_raw)
    report = elbow_select(X, args.k_max, seed=derive_seed(cfg.seed, "cluster"))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "elbow.csv").write_text(elbow_to_csv(report), encoding="utf-8")
    print(f"selected k = {report.selected_k} (k_max = {args.k_max})")
    for k, value in enumerate(report.wcss, start=1):
        print(f"  k={k}: wcss={value:.4f}")
    print(f"wrote {out / 'elbow.csv'}")
    return 0


def cmd_scenarios(_args) -> int:
    for tag, description in describe_scenarios():
        print(f"{tag.value}: {description}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="amlpipe",
        description="Hybrid money-laundering detection pipeline on synthetic data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default="out"):
        p.add_argument("--config", help="INI config file (defaults used if omitted)")
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--out", default=out_default, help="output directory")

    p = sub.add_parser("generate", help="generate a synthetic dataset + ground truth")
    common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("label", help="apply labeling functions and compose labels")
    common(p)
    p.add_argument("--data", required=True, help="transactions CSV")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("train", help="train classifier(s) on labeled data")
    common(p)
    p.add_argument("--data", required=True, help="transactions CSV")
    p.add_argument("--labels", required=True, help="labels CSV (transaction_id,label)")
    p.add_argument("--model", help="model kind(s), e.g. random_forest or all")
    p.add_argument("--dump-features", action="store_true", help="write features.csv")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("detect", help="fit an anomaly detector and flag rows")
    common(p)
    p.add_argument("--data", required=True, help="transactions CSV")
    p.add_argument("--labels", help="labels CSV for normal-only fit + threshold sweep")
    p.add_argument("--detector", choices=["iforest", "gaussian"], help="detector kind")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("run", help="full pipeline: generate, label, train, detect, fuse")
    common(p)
    p.add_argument("--model", help="classifier list override (default: all six)")
    p.add_argument("--detector", choices=["iforest", "gaussian"], help="detector kind")
    p.add_argument("--dump-features", action="store_true", help="write features.csv")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("evaluate", help="score a predictions file against ground truth")
    p.add_argument("--predictions", required=True, help="CSV: transaction_id,label")
    p.add_argument("--truth", required=True, help="ground-truth CSV")
    p.add_argument("--name", default="predictions", help="model name for the report row")
    p.add_argument("--out", help="optional output directory for metrics.csv")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("cluster", help="k-means elbow sweep over the feature matrix")
    common(p)
    p.add_argument("--data", required=True, help="transactions CSV")
    p.add_argument("--k-max", type=int, default=6, help="largest k to try")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("scenarios", help="describe the planted generator scenarios")
    p.set_defaults(func=cmd_scenarios)

    p = sub.add_parser("print-config", help="print a commented default config template")
    p.set_defaults(func=lambda _a: (print(config_to_ini_text(), end=""), 0)[1])

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except InternalError as exc:
        print(f"internal invariant failure: {exc}", file=sys.stderr)
        return 4
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
