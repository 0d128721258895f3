"""
Command-line interface.

    jointee train    --train train.jsonl --dev dev.jsonl --out model.ckpt
    jointee eval     --checkpoint model.ckpt --corpus test.jsonl
    jointee predict  --checkpoint model.ckpt --corpus raw.jsonl
    jointee generate --out synthetic.jsonl --sentences 200
    jointee diag     gradcheck | viterbi-oracle
    jointee compare  --train train.jsonl --test test.jsonl

Results go to standard output, logs to standard error.
Exit codes: 0 ok, 2 input/output problem, 3 label schema mismatch,
4 diagnostic failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional, Sequence

from dotenv import load_dotenv

from jointee.errors import (
    CheckpointError,
    ConfigError,
    CorpusFormatError,
    EmbeddingFormatError,
    EvaluationError,
    JointEEError,
    SchemaMismatchError,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_IO = 2
EXIT_SCHEMA = 3
EXIT_DIAGNOSTIC = 4


# ==================================================
# ARGUMENTS
# ==================================================

def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON experiment config with 'model' / 'train' sections")
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--u", type=int, dest="window", help="local context window")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--embedding-dim", type=int, dest="embedding_dim")
    p.add_argument("--hidden-dim", type=int, dest="hidden_dim")
    p.add_argument("--ff-hidden-dim", type=int, dest="ff_hidden_dim")
    p.add_argument("--ablate-external-features", action="store_true",
                   help="no POS/chunk/dependency inputs and no B_ij block")
    p.add_argument("--eq1-literal-indexing", "--literal-pair-indexing", action="store_true",
                   dest="literal_pair_indexing",
                   help="use the entity label at i and the event label at j in argument features")
    p.add_argument("--pretrained", help="word vectors, one 'word v1 ... vd' line per word")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jointee", description="Joint entity and event extraction")
    parser.add_argument("--log-level", help="overrides JOINTEE_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a joint model and write a checkpoint")
    p.add_argument("--train", required=True, dest="train_path")
    p.add_argument("--dev", dest="dev_path")
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int)
    _add_experiment_flags(p)

    p = sub.add_parser("eval", help="score a checkpoint on an annotated corpus")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--workers", type=int)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("predict", help="extract entities and events as corpus records")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", help="write records here instead of standard output")
    p.add_argument("--workers", type=int)

    p = sub.add_parser("generate", help="write a synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--sentences", type=int, default=200)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--ambiguity", type=float, default=0.0)
    p.add_argument("--no-linguistic", action="store_true", help="omit POS / chunk / dependency annotations")

    p = sub.add_parser("diag", help="gradient check or Viterbi oracle")
    p.add_argument("mode", choices=["gradcheck", "viterbi-oracle"])
    p.add_argument("--seed", type=int)
    p.add_argument("--corrupt-param", help=argparse.SUPPRESS)

    p = sub.add_parser("compare", help="joint model vs pipelined baseline on one split")
    p.add_argument("--train", required=True, dest="train_path")
    p.add_argument("--test", required=True, dest="test_path")
    p.add_argument("--dev", dest="dev_path")
    p.add_argument("--workers", type=int)
    p.add_argument("--json", action="store_true")
    _add_experiment_flags(p)
    return parser


def configure_logging(level: Optional[str]) -> None:
    from jointee.config import settings

    logging.basicConfig(
        stream=sys.stderr,
        level=(level or settings.LOG_LEVEL).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def _experiment_config(args: argparse.Namespace):
    from jointee.config import load_experiment_config

    overrides = {
        key: getattr(args, key, None)
        for key in ("seed", "epochs", "patience", "batch_size", "window", "alpha", "beta", "gamma",
                    "embedding_dim", "hidden_dim", "ff_hidden_dim")
    }
    if args.ablate_external_features:
        overrides["use_external_features"] = False
    if args.literal_pair_indexing:
        overrides["literal_pair_indexing"] = True
    return load_experiment_config(args.config, overrides)


def _workers(args: argparse.Namespace) -> int:
    from jointee.config import settings

    return args.workers if getattr(args, "workers", None) else settings.EVAL_WORKERS


# ==================================================
# COMMANDS
# ==================================================

def cmd_train(args: argparse.Namespace) -> int:
    from jointee.checkpoint import save_checkpoint
    from jointee.corpus import load_corpus
    from jointee.training import joint_dev_scorer, train

    config = _experiment_config(args)
    sentences = load_corpus(args.train_path)
    dev = load_corpus(args.dev_path) if args.dev_path else None
    result = train(sentences, config, dev, pretrained=args.pretrained, dev_scorer=joint_dev_scorer(_workers(args)))
    for record in result.epochs:
        line = {"epoch": record.epoch, "mean_loss": round(record.mean_loss, 6)}
        if record.dev_report is not None:
            line.update({
                "dev_score": round(record.dev_score, 6),
                "entity_f1": round(record.dev_report.entity.f1, 6),
                "trigger_f1": round(record.dev_report.trigger_classification.f1, 6),
                "role_f1": round(record.dev_report.role_classification.f1, 6),
            })
        print(json.dumps(line))
    save_checkpoint(args.out, result.model, config)
    print(json.dumps({"checkpoint": str(args.out), "best_epoch": result.best_epoch}))
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    from jointee.checkpoint import load_checkpoint
    from jointee.corpus import load_corpus
    from jointee.evaluation import predict_corpus, render_report, score

    model, _ = load_checkpoint(args.checkpoint)
    sentences = load_corpus(args.corpus, schema=model.schema)
    if not sentences:
        raise EvaluationError(f"{args.corpus}: corpus is empty")
    report = score(predict_corpus(model, sentences, _workers(args)), sentences)
    sys.stdout.write(render_report(report, title=f"Evaluation on {args.corpus}", as_json=args.json))
    if args.json:
        sys.stdout.write("\n")
    return EXIT_OK


def cmd_predict(args: argparse.Namespace) -> int:
    from jointee.checkpoint import load_checkpoint
    from jointee.corpus import load_corpus
    from jointee.evaluation import predict_corpus

    model, _ = load_checkpoint(args.checkpoint)
    sentences = load_corpus(args.corpus)
    extractions = predict_corpus(model, sentences, _workers(args))
    lines = [json.dumps(x.to_sentence(source=s).to_record(), ensure_ascii=False)
             for x, s in zip(extractions, sentences)]
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.writelines(line + "\n" for line in lines)
        logger.info(f"Wrote {len(lines)} predicted records to {args.out}")
    else:
        for line in lines:
            print(line)
    return EXIT_OK


def cmd_generate(args: argparse.Namespace) -> int:
    from jointee.corpus import save_corpus
    from jointee.synthetic import SyntheticCorpusSpec, generate_synthetic_corpus

    corpus = generate_synthetic_corpus(SyntheticCorpusSpec(
        sentences=args.sentences, seed=args.seed, ambiguity=args.ambiguity,
        with_linguistic=not args.no_linguistic,
    ))
    count = save_corpus(args.out, corpus.sentences)
    print(json.dumps({"out": str(args.out), "sentences": count, "templates": dict(sorted(corpus.template_counts.items()))}))
    return EXIT_OK


def cmd_diag(args: argparse.Namespace) -> int:
    from jointee.config import settings
    from jointee.diagnostics import run_gradcheck, run_viterbi_oracle

    seed = args.seed if args.seed is not None else settings.DEFAULT_SEED
    if args.mode == "gradcheck":
        result = run_gradcheck(seed=seed, corrupt_param=args.corrupt_param)
        print(json.dumps({"mode": "gradcheck", "passed": result.passed, "max_error": result.max_error,
                          "failures": result.failures}))
    else:
        result = run_viterbi_oracle(seed=seed)
        print(json.dumps({"mode": "viterbi-oracle", "passed": result.passed,
                          "exact": f"{result.exact_matches}/{result.exact_trials}",
                          "invalid": result.invalid_sequences, "failures": result.failures[:10]}))
    return EXIT_OK if result.passed else EXIT_DIAGNOSTIC


def cmd_compare(args: argparse.Namespace) -> int:
    from jointee.corpus import load_corpus
    from jointee.evaluation import render_comparison
    from jointee.pipeline import compare_joint_and_pipelined

    config = _experiment_config(args)
    sentences = load_corpus(args.train_path)
    test = load_corpus(args.test_path)
    dev = load_corpus(args.dev_path) if args.dev_path else None
    comparison = compare_joint_and_pipelined(sentences, test, config, dev, _workers(args))
    sys.stdout.write(render_comparison(comparison, as_json=args.json))
    if args.json:
        sys.stdout.write("\n")
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "predict": cmd_predict,
    "generate": cmd_generate,
    "diag": cmd_diag,
    "compare": cmd_compare,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except SchemaMismatchError as e:
        logger.error(f"Schema mismatch: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SCHEMA
    except (OSError, CorpusFormatError, EmbeddingFormatError, CheckpointError, ConfigError, EvaluationError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except JointEEError as e:
        # empty corpora, shape contracts and the like: the input cannot be used
        logger.error(f"{args.command} failed: {type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
