"""Command-line interface. Every subcommand works offline; `serve` starts the API."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from air.backends import build_backend_set
from air.core.manifest import dataset_write_lock, load_manifest, save_manifest
from air.core.canonical import write_canonical_json
from air.core.splits import split_dataset
from air.core.types import ContextGrammar
from air.errors import AirError
from air.filtering import FilterParams, filter_dataset
from air.pipeline import PipelineConfig, run_air_aug, run_air_gen
from air.training import (
    TrainConfig,
    cross_validate,
    evaluate,
    load_model,
    merge_for_training,
    predict,
    save_model,
    train_probe,
)
from air.training.crossval import features_and_labels


def _print_event(stage: str, progress: float, message: str) -> None:
    print(f"[{progress:6.1%}] {stage}: {message}", file=sys.stderr)


def _load_grammar(path: str) -> ContextGrammar:
    raw = json.loads(Path(path).read_text("utf-8"))
    return ContextGrammar.from_json_dict(raw)


def _filter_params(args) -> FilterParams:
    return FilterParams(
        beta=args.beta,
        retention_target=args.retention,
        alpha=args.alpha,
        per_class=not getattr(args, "global_pass", False),
    )


def _pipeline_config(args, use_style: bool = False) -> PipelineConfig:
    return PipelineConfig(
        images_per_prompt=getattr(args, "images_per_prompt", 8),
        image_size=args.image_size,
        use_rewriter=not getattr(args, "no_rewriter", False),
        use_style_transfer=use_style,
        style_domain=getattr(args, "style", None) or "warm",
        use_filter=not args.no_filter,
        filter=_filter_params(args),
        seed=args.seed,
        parallelism=args.parallelism,
    )


def _backends(args):
    return build_backend_set(mode=args.backend_mode, embed_sigma=args.mock_sigma)


def _add_common(parser: argparse.ArgumentParser, images_per_prompt: bool = False) -> None:
    parser.add_argument("--image-size", type=int, default=512, choices=(256, 512, 1024))
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--parallelism", type=int, default=4)
    parser.add_argument("--no-filter", action="store_true")
    parser.add_argument("--beta", type=float, default=0.9825)
    parser.add_argument("--retention", type=float, default=0.9)
    parser.add_argument("--alpha", type=float, default=None)
    parser.add_argument("--backend-mode", default=None, choices=("mock", "http"))
    parser.add_argument(
        "--mock-sigma",
        type=float,
        default=0.25,
        help="embedder mock noise scale; smaller packs a class tighter",
    )
    parser.add_argument("--quiet", action="store_true")
    if images_per_prompt:
        parser.add_argument("--images-per-prompt", type=int, default=8)


def cmd_gen(args) -> int:
    grammar = _load_grammar(args.grammar)
    config = _pipeline_config(args, use_style=False)
    manifest = run_air_gen(
        grammar,
        config,
        _backends(args),
        args.out,
        emit=None if args.quiet else _print_event,
    )
    kept = len(manifest.kept_images())
    print(json.dumps({
        "dataset_id": manifest.dataset_id,
        "prompts": len(manifest.prompts),
        "images": len(manifest.images),
        "kept": kept,
        "out": str(args.out),
    }))
    return 0


def cmd_aug(args) -> int:
    source = load_manifest(args.source)
    config = _pipeline_config(args, use_style=args.style is not None)
    manifest = run_air_aug(
        source,
        args.source,
        config,
        _backends(args),
        args.out,
        emit=None if args.quiet else _print_event,
    )
    print(json.dumps({
        "dataset_id": manifest.dataset_id,
        "source_dataset_id": source.dataset_id,
        "prompts": len(manifest.prompts),
        "images": len(manifest.images),
        "kept": len(manifest.kept_images()),
        "out": str(args.out),
    }))
    return 0


def cmd_filter(args) -> int:
    manifest = load_manifest(args.dataset)
    filtered, report = filter_dataset(manifest, _filter_params(args))
    with dataset_write_lock(Path(args.dataset)):
        save_manifest(filtered, args.dataset)
        write_canonical_json(Path(args.dataset) / "filter_report.json", report.to_json_dict())
    print(json.dumps(report.to_json_dict()))
    return 0


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch_size,
        epochs=args.epochs,
        optimizer=args.optimizer,
        seed=args.seed,
        train_fraction=args.train_fraction,
    )


def cmd_train(args) -> int:
    manifest = load_manifest(args.dataset)
    config = _train_config(args)
    payload: dict = {}
    if args.kfold:
        result = cross_validate(manifest, args.kfold, config)
        payload["folds"] = [f.to_json_dict() for f in result.folds]
        payload["mean"] = result.mean
    train_ids, val_ids = split_dataset(manifest, config.train_fraction, config.seed)
    train_x, train_y, classes = features_and_labels(manifest, train_ids)
    val_x, val_y, _ = features_and_labels(manifest, val_ids)
    if args.merge:
        augmented = load_manifest(args.merge)
        kept = {r.id: r for r in manifest.kept_images()}
        records = [kept[i] for i in train_ids]
        merged = merge_for_training(manifest, augmented, args.fraction, config.seed)
        records.extend(r for r in merged if r.id not in kept)
        index = {c: i for i, c in enumerate(classes)}
        train_x = np.asarray([r.embedding for r in records], dtype=np.float64)
        train_y = np.asarray([index[r.class_label] for r in records], dtype=np.int64)
    model = train_probe(
        train_x, train_y, config, class_names=classes,
        val_features=val_x, val_labels=val_y,
    )
    report = evaluate(model, val_x, val_y)
    save_model(model, args.out)
    payload["report"] = report.to_json_dict()
    write_canonical_json(Path(args.out) / "metrics.json", payload)
    print(json.dumps({"model_dir": str(args.out), "metrics": report.as_percent_row()}))
    return 0


def cmd_eval(args) -> int:
    model = load_model(args.model)
    manifest = load_manifest(args.dataset)
    features, labels, classes = features_and_labels(manifest)
    if tuple(classes) != model.class_names:
        print(json.dumps({"error": "class mismatch", "model": list(model.class_names),
                          "dataset": list(classes)}))
        return 1
    report = evaluate(model, features, labels)
    print(json.dumps({"metrics": report.as_percent_row(), "confusion": report.to_json_dict()["confusion"]}))
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    if (args.image is None) == (args.embedding is None):
        print("error: provide exactly one of --image or --embedding", file=sys.stderr)
        return 2
    if args.embedding:
        raw = json.loads(Path(args.embedding).read_text("utf-8"))
        vector = np.asarray(raw, dtype=np.float64)
    else:
        payload = Path(args.image).read_bytes()
        backends = _backends(args)
        vector = np.asarray(backends.embedder.embed(payload), dtype=np.float64)
    probs, labels = predict(model, vector.reshape(1, -1))
    print(json.dumps({
        "label": model.class_names[int(labels[0])],
        "probabilities": {c: float(p) for c, p in zip(model.class_names, probs[0])},
    }))
    return 0


def cmd_serve(args) -> int:
    import os

    import uvicorn

    from air.service import create_app

    listen = args.listen or os.environ.get("AIR_LISTEN_ADDR", "127.0.0.1:8080")
    host, _, port = listen.rpartition(":")
    app = create_app(
        data_dir=args.data_dir or os.environ.get("AIR_DATA_DIR", "air-data"),
        backends=build_backend_set(mode=args.backend_mode, embed_sigma=args.mock_sigma),
        worker_count=args.workers,
    )
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="air", description="Synthetic dataset pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="synthesize a dataset from a context grammar")
    p.add_argument("--grammar", required=True, help="grammar JSON file")
    p.add_argument("--out", required=True)
    p.add_argument("--no-rewriter", action="store_true")
    _add_common(p, images_per_prompt=True)
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("aug", help="replicate an existing dataset 1:1")
    p.add_argument("--source", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--style", default=None, help="style domain id (enables style transfer)")
    _add_common(p)
    p.set_defaults(fn=cmd_aug)

    p = sub.add_parser("filter", help="re-run duplicate/outlier removal on a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--beta", type=float, default=0.9825)
    p.add_argument("--retention", type=float, default=0.9)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--global", dest="global_pass", action="store_true",
                   help="filter across classes instead of per class")
    p.set_defaults(fn=cmd_filter)

    p = sub.add_parser("train", help="train a probe on a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=25)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--optimizer", default="adamw", choices=("sgd", "adamw"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--kfold", type=int, default=None)
    p.add_argument("--merge", default=None, help="augmented dataset directory")
    p.add_argument("--fraction", type=float, default=1.0, help="augmented fraction to merge")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model on a dataset's kept images")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("predict", help="classify one image or raw embedding")
    p.add_argument("--model", required=True)
    p.add_argument("--image", default=None)
    p.add_argument("--embedding", default=None, help="JSON file with 512 floats")
    p.add_argument("--backend-mode", default=None, choices=("mock", "http"))
    p.add_argument("--mock-sigma", type=float, default=0.25)
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--listen", default=None, help="host:port (default AIR_LISTEN_ADDR)")
    p.add_argument("--data-dir", default=None)
    p.add_argument("--workers", type=int, default=2)
    p.add_argument("--backend-mode", default=None, choices=("mock", "http"))
    p.add_argument("--mock-sigma", type=float, default=0.25)
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except AirError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
