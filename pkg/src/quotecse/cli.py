"""Command-line entry point wiring the pipeline stages.

Commands:
    quotecse extract    Annotate article JSONL with extracted quotes
    quotecse mine       Mine anchor/positive/negative triplets and split them
    quotecse train      Contrastive-train an encoder on mined triplets
    quotecse evaluate   Repeated-split detection evaluation (F1/AUC report)
    quotecse detect     Score headline quotes with a trained classifier

Every command is deterministic given its inputs and seeds; emitted artifacts
embed (or sit next to) the 12-hex hash of the effective run parameters.
Exit codes: 0 success, 1 usage/config error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import __version__
from .contrastive import TrainConfig, train
from .corpus import (
    DEFAULT_DELIMITERS,
    load_articles,
    load_detection_examples,
    write_articles,
)
from .detection import ClassifierConfig, ClassifierParams, detect, prediction_record, write_predictions
from .encoder import Encoder, EncoderConfig
from .errors import ConfigError, DataFormatError
from .evaluation import DEFAULT_SEEDS, EvalConfig, repeated_split_eval
from .mining import mine_corpus, load_triplets, write_triplets

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class _UsageExit(Exception):
    def __init__(self, code, message=None):
        super().__init__(message or "")
        self.code = code
        self.message = message


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        raise _UsageExit(EXIT_USAGE, f"{self.prog}: error: {message}")


def config_hash(params: dict) -> str:
    """12-hex digest of the semantic run parameters (paths excluded)."""
    canonical = json.dumps(params, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def _write_meta(artifact_path: Path, params: dict, digest: str) -> None:
    meta = {"config": params, "config_hash": digest, "tool": f"quotecse {__version__}"}
    artifact_path.with_suffix(artifact_path.suffix + ".meta.json").write_text(
        json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def _parse_delimiters(pairs) -> tuple:
    if not pairs:
        return DEFAULT_DELIMITERS
    return tuple((open_mark, close_mark) for open_mark, close_mark in pairs)


def _load_json_config(path) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise DataFormatError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return data


def cmd_extract(args) -> int:
    delimiters = _parse_delimiters(args.delimiter)
    articles = load_articles(args.input, delimiters)
    count = write_articles(args.output, articles)
    params = {"command": "extract", "delimiters": [list(p) for p in delimiters]}
    digest = config_hash(params)
    _write_meta(Path(args.output), params, digest)
    total_quotes = sum(len(a.headline_quotes) + len(a.body_quotes) for a in articles)
    print(f"extract: {count} articles, {total_quotes} quotes -> {args.output} [config {digest}]")
    return EXIT_OK


def cmd_mine(args) -> int:
    enc = Encoder.load(args.encoder)
    articles = load_articles(args.articles)
    result = mine_corpus(articles, enc, threshold=args.threshold, seed=args.seed)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    params = {
        "command": "mine",
        "threshold": args.threshold,
        "seed": args.seed,
        "encoder": enc.identifier,
    }
    digest = config_hash(params)
    for name, triplets in (("train", result.train), ("val", result.val), ("test", result.test)):
        path = out_dir / f"triplets_{name}.jsonl"
        write_triplets(path, triplets)
        _write_meta(path, params, digest)
    stats_path = out_dir / "stats.json"
    stats_path.write_text(
        json.dumps({"stats": result.stats, "config": params, "config_hash": digest},
                   sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    print(
        f"mine: kept {result.stats['kept']} of {sum(result.stats.values())} articles "
        f"(train/val/test = {len(result.train)}/{len(result.val)}/{len(result.test)}) "
        f"-> {out_dir} [config {digest}]"
    )
    return EXIT_OK


def cmd_train(args) -> int:
    overrides = _load_json_config(args.config) if args.config else {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.loss is not None:
        overrides["loss"] = args.loss
    encoder_overrides = overrides.pop("encoder", {})
    articles_path = overrides.pop("articles_path", None) or args.articles
    config = TrainConfig.from_dict(overrides)

    triplet_dir = Path(args.triplets)
    train_triplets = load_triplets(triplet_dir / "triplets_train.jsonl")
    val_path = triplet_dir / "triplets_val.jsonl"
    val_triplets = load_triplets(val_path) if val_path.exists() else None

    if args.init_encoder:
        enc = Encoder.load(args.init_encoder)
    else:
        enc = Encoder.create(EncoderConfig.from_dict(encoder_overrides), seed=config.seed)

    articles = None
    if articles_path:
        articles = {a.id: a for a in load_articles(articles_path)}

    result = train(train_triplets, enc, config, val_triplets=val_triplets, articles=articles)

    params = {"command": "train", "train": config.to_dict(), "encoder": result.encoder.config.to_dict()}
    digest = config_hash(params)
    result.encoder.save(args.output)
    _write_meta(Path(args.output), params, digest)

    curve_path = Path(args.curve) if args.curve else Path(args.output).with_suffix(".curve.csv")
    with open(curve_path, "w", encoding="utf-8", newline="") as handle:
        handle.write(f"# config_hash={digest}\n")
        handle.write("step,train_loss,val_loss\n")
        for point in result.curve:
            val = "" if point.val_loss is None else repr(point.val_loss)
            handle.write(f"{point.step},{point.train_loss!r},{val}\n")
    best = "" if result.best_epoch is None else f", best epoch {result.best_epoch}"
    print(
        f"train: {config.loss} loss, {len(result.curve)} steps{best} "
        f"-> {args.output}, curve {curve_path} [config {digest}]"
    )
    return EXIT_OK


def cmd_evaluate(args) -> int:
    enc = Encoder.load(args.encoder)
    examples = load_detection_examples(args.labeled, require_label=True)
    seeds = args.seeds if args.seeds else list(DEFAULT_SEEDS)
    clf_config = ClassifierConfig()
    report = repeated_split_eval(examples, enc, EvalConfig(ratio=args.ratio, classifier=clf_config), seeds)

    params = {
        "command": "evaluate",
        "ratio": args.ratio,
        "seeds": seeds,
        "classifier": clf_config.to_dict(),
        "encoder": enc.identifier,
    }
    digest = config_hash(params)
    payload = report.to_dict()
    payload["config_hash"] = digest
    Path(args.output).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")

    if args.save_classifier:
        from .detection import train_classifier
        from .evaluation import classifier_training_arrays

        F, y = classifier_training_arrays(examples, enc)
        params_out = train_classifier(F, y, ClassifierConfig(seed=seeds[0]))
        params_out.save(args.save_classifier)
        print(f"evaluate: classifier saved -> {args.save_classifier}")

    f1 = report.mean["f1"]
    auc = report.mean["auc"]
    print(
        f"evaluate: {len(examples)} examples, {len(seeds)} seeds: "
        f"F1 {f1:.4f} +/- {report.stderr['f1']:.4f}, AUC {auc:.4f} +/- {report.stderr['auc']:.4f} "
        f"-> {args.output} [config {digest}]"
    )
    return EXIT_OK


def cmd_detect(args) -> int:
    enc = Encoder.load(args.encoder)
    params_clf = ClassifierParams.load(args.classifier)
    examples = load_detection_examples(args.input, require_label=False)

    rows = []
    skipped_identical = 0
    from .corpus import is_identical_quote

    for example in examples:
        if is_identical_quote(example.headline_quote, example.body_quotes):
            skipped_identical += 1  # string match decides these; out of model scope
            continue
        rows.append(prediction_record(example, detect(example, enc, params_clf)))
    count = write_predictions(args.output, rows)

    params = {"command": "detect", "encoder": enc.identifier, "classifier_dim": params_clf.input_dim}
    digest = config_hash(params)
    _write_meta(Path(args.output), params, digest)
    flagged = sum(r["label"] for r in rows)
    print(
        f"detect: {count} predictions ({flagged} flagged contextomized, "
        f"{skipped_identical} identical-quote records skipped) -> {args.output} [config {digest}]"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="quotecse", description="Quote embeddings and contextomized-quote detection")
    parser.add_argument("--version", action="version", version=f"quotecse {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="annotate articles with extracted quotes")
    p.add_argument("--in", dest="input", required=True, help="article JSONL")
    p.add_argument("--out", dest="output", required=True, help="annotated article JSONL")
    p.add_argument("--delimiter", nargs=2, action="append", metavar=("OPEN", "CLOSE"),
                   help="quote mark pair (repeatable; default: double-quote family)")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("mine", help="mine triplets from unlabeled articles")
    p.add_argument("--articles", required=True, help="annotated article JSONL")
    p.add_argument("--encoder", required=True, help="encoder checkpoint (.npz)")
    p.add_argument("--threshold", type=float, default=0.75)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("train", help="contrastive-train an encoder")
    p.add_argument("--triplets", required=True, help="directory from `quotecse mine`")
    p.add_argument("--config", help="JSON training config (TrainConfig keys, optional 'encoder' block)")
    p.add_argument("--init-encoder", help="start from this checkpoint instead of a fresh encoder")
    p.add_argument("--articles", help="article JSONL enabling per-step reassignment")
    p.add_argument("--seed", type=int, help="override config seed")
    p.add_argument("--loss", choices=["simcse", "quotecse", "ablation1", "ablation2"])
    p.add_argument("--out", dest="output", required=True, help="encoder checkpoint to write")
    p.add_argument("--curve", help="loss-curve CSV path (default: alongside checkpoint)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="repeated-split detection evaluation")
    p.add_argument("--labeled", required=True, help="labeled detection JSONL")
    p.add_argument("--encoder", required=True)
    p.add_argument("--seeds", type=int, nargs="+", help="default: 0 10 20 ... 140")
    p.add_argument("--ratio", type=float, default=0.8)
    p.add_argument("--out", dest="output", required=True, help="report JSON")
    p.add_argument("--save-classifier", help="also train+save a classifier checkpoint")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("detect", help="score headline quotes")
    p.add_argument("--in", dest="input", required=True, help="detection JSONL (label optional)")
    p.add_argument("--encoder", required=True)
    p.add_argument("--classifier", required=True)
    p.add_argument("--out", dest="output", required=True, help="prediction JSONL")
    p.set_defaults(func=cmd_detect)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageExit as exc:
        if exc.message:
            print(exc.message, file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataFormatError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
