"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric error.
Reports go to stdout; the resolved configuration and diagnostics go to
stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import contrastive, evaluate, graph, synthetic, trainer
from .corpus import load_corpus, load_dictionary, load_document
from .encoder import expected_cache_keys, load_cache
from .errors import DataError, NumericError
from .phrases import extract_phrases


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lr0", type=float, default=1e-3)
    p.add_argument("--epochs", type=int, default=60)
    p.add_argument("--layers", type=int, default=3)
    p.add_argument("--heads", type=int, default=4)
    p.add_argument("--dim-in", type=int, default=32)
    p.add_argument("--hash-buckets", type=int, default=512)
    p.add_argument("--beta1", type=float, default=0.9)
    p.add_argument("--beta2", type=float, default=0.999)
    p.add_argument("--eps", type=float, default=1e-8)
    p.add_argument("--weight-decay", type=float, default=0.01)
    p.add_argument("--w-classify", type=float, default=1.0)
    p.add_argument("--w-statement", type=float, default=1.0)
    p.add_argument("--w-aspect-event", type=float, default=1.0)
    p.add_argument("--w-aspect-context", type=float, default=1.0)
    p.add_argument("--no-contrastive", action="store_true", help="disable the contrastive module")
    p.add_argument(
        "--classifier-statement",
        choices=["post_graph", "pre_graph"],
        default="post_graph",
        help="which statement representation feeds the classifier",
    )
    p.add_argument("--grad-clip", type=float, default=0.0)
    p.add_argument("--n-positives", type=int, default=2)
    p.add_argument("--k-negatives", type=int, default=4)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--raw-dot", action="store_true", help="literal dot-product similarity")
    p.add_argument("--no-normalize", action="store_true")


def _add_global_flags(p: argparse.ArgumentParser, top_level: bool) -> None:
    # accepted both before and after the subcommand; the post-subcommand copy
    # must not overwrite an earlier value with its default
    default = {} if top_level else {"default": argparse.SUPPRESS}
    p.add_argument("--seed", type=int, **({"default": 0} if top_level else default))
    p.add_argument("--dim", type=int, **({"default": 32} if top_level else default))
    p.add_argument("--verbose", action="store_true", **({} if top_level else default))


def build_parser() -> _Parser:
    parser = _Parser(prog="gimc", description="Cross-lingual document-level event causality pipeline")
    _add_global_flags(parser, top_level=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest-validate", help="load and validate a corpus directory")
    p.add_argument("corpus", type=Path)
    p.add_argument("--cache", type=Path, help="also check embedding-cache key completeness")

    p = sub.add_parser("extract-phrases", help="print informative phrases of one document")
    p.add_argument("document", type=Path)

    p = sub.add_parser("build-graph", help="print graph statistics of one document")
    p.add_argument("document", type=Path)

    p = sub.add_parser("augment", help="print contrastive anchors with sampled positives/negatives")
    p.add_argument("document", type=Path)
    p.add_argument("--dicts", required=True, help="comma-separated dictionary files")
    p.add_argument("--n-positives", type=int, default=2)
    p.add_argument("--k-negatives", type=int, default=4)

    p = sub.add_parser("gradcheck", help="finite-difference check of the full model")
    p.add_argument("--nodes", type=int, default=30)
    p.add_argument("--eps", type=float, default=1e-4)

    p = sub.add_parser("train", help="train on a corpus directory")
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--dicts", default="", help="comma-separated dictionary files")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--cache", type=Path, help="embedding cache (switches encoder to cache mode)")
    _add_train_flags(p)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a corpus")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--cache", type=Path)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("cross-eval", help="evaluate a checkpoint on several target corpora")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--targets", required=True, help="lang=dir,lang=dir,...")
    p.add_argument("--source-lang", required=True)
    p.add_argument("--cache", type=Path)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("gen-synthetic", help="generate a synthetic fixture corpus")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--languages", default="en")
    p.add_argument("--docs", type=int, default=8)
    p.add_argument("--events", type=int, default=4)
    p.add_argument("--cue-strength", type=float, default=1.0)

    for subparser in sub.choices.values():
        _add_global_flags(subparser, top_level=False)

    return parser


def _train_config(args) -> trainer.TrainConfig:
    return trainer.TrainConfig(
        lr0=args.lr0,
        epochs=args.epochs,
        layers=args.layers,
        heads=args.heads,
        dim=args.dim,
        dim_in=args.dim_in,
        hash_buckets=args.hash_buckets,
        seed=args.seed,
        beta1=args.beta1,
        beta2=args.beta2,
        eps=args.eps,
        weight_decay=args.weight_decay,
        w_classify=args.w_classify,
        w_statement=args.w_statement,
        w_aspect_event=args.w_aspect_event,
        w_aspect_context=args.w_aspect_context,
        use_contrastive=not args.no_contrastive,
        classifier_statement=args.classifier_statement,
        grad_clip=args.grad_clip,
        encoder_mode="cache" if args.cache else "toy",
        contrastive=contrastive.ContrastiveConfig(
            n_positives=args.n_positives,
            k_negatives=args.k_negatives,
            temperature=args.temperature,
            normalize=not args.no_normalize,
            raw_dot=args.raw_dot,
            seed=args.seed,
        ),
    )


def _load_dicts(spec: str) -> list:
    return [load_dictionary(part) for part in spec.split(",") if part]


def _cmd_ingest_validate(args) -> int:
    corpus = load_corpus(args.corpus)
    print(f"validated {len(corpus)} documents")
    if args.cache:
        cache = load_cache(args.cache)
        missing = 0
        from .corpus import candidate_pairs

        for doc in corpus:
            for key in sorted(expected_cache_keys(doc, candidate_pairs(doc))):
                if key not in cache:
                    print(f"missing cache key: {key}")
                    missing += 1
        if missing:
            raise DataError(f"embedding cache is missing {missing} keys")
        print("cache keys complete")
    return 0


def _cmd_extract_phrases(args) -> int:
    doc = load_document(args.document)
    for s, sentence in enumerate(doc.sentences):
        for p in extract_phrases(sentence, sentence_index=s):
            surface = " ".join(t.form for t in sentence[p.start : p.end])
            print(f"{s}\t{p.role}\t[{p.start},{p.end})\t{surface}")
    return 0


def _cmd_build_graph(args) -> int:
    doc = load_document(args.document)
    bundle = trainer.prepare_document(doc)
    print(json.dumps(graph.graph_stats(bundle.topology), indent=1))
    return 0


def _cmd_augment(args) -> int:
    doc = load_document(args.document)
    dicts = _load_dicts(args.dicts)
    bundle = trainer.prepare_document(doc)
    config = contrastive.ContrastiveConfig(
        n_positives=args.n_positives, k_negatives=args.k_negatives, seed=args.seed
    )
    rng = trainer.document_rng(args.seed, doc.id)
    plan = trainer.build_contrastive_plan(bundle, dicts, config, rng)
    out = []
    for aset in plan.anchors:
        pair = bundle.pairs[aset.pair_index]
        entry = {
            "anchor": {"pair": list(pair.ids), "tokens": bundle.statements[aset.pair_index].tokens},
            "positives": [p.tokens for p in aset.positives],
            "negatives": [bundle.statements[i].tokens for i in aset.negative_indices]
            + [s.tokens for s in aset.negative_switched],
        }
        out.append(entry)
    print(json.dumps({"anchors": out, "skipped": plan.skipped}, ensure_ascii=False, indent=1))
    return 0


def _cmd_gradcheck(args) -> int:
    report = trainer.gradcheck_model(seed=args.seed, max_nodes=args.nodes, eps=args.eps)
    worst = max(report.values())
    for name in sorted(report):
        print(f"{name}\t{report[name]:.3e}")
    print(f"max\t{worst:.3e}")
    if not np.isfinite(worst) or worst >= 1e-4:
        raise NumericError(f"gradient check failed: max relative error {worst:.3e}")
    return 0


def _cmd_train(args) -> int:
    corpus = load_corpus(args.corpus)
    dicts = _load_dicts(args.dicts)
    cache = load_cache(args.cache) if args.cache else None
    if cache is not None:
        args.dim_in = cache.dim_in
    config = _train_config(args)
    params, history = trainer.train(corpus, config, dicts, cache, checkpoint_path=args.out)
    final = history[-1]
    print(
        f"trained {config.epochs} epochs on {len(corpus)} documents: "
        f"loss {final['loss']:.4f} train_f1 {final['train_f1']:.1f}"
    )
    print(f"checkpoint written to {args.out}")
    return 0


def _cmd_eval(args) -> int:
    params = trainer.load_checkpoint(args.model)
    cache = load_cache(args.cache) if args.cache else None
    config = trainer.config_from_params(params, encoder_mode="cache" if args.cache else "toy")
    corpus = load_corpus(args.corpus)
    report = evaluate.evaluate(params, corpus, config, cache)
    print(evaluate.emit_report(report, "json" if args.json else "markdown"))
    return 0


def _cmd_cross_eval(args) -> int:
    params = trainer.load_checkpoint(args.model)
    cache = load_cache(args.cache) if args.cache else None
    config = trainer.config_from_params(params, encoder_mode="cache" if args.cache else "toy")
    targets = {}
    for part in args.targets.split(","):
        if "=" not in part:
            raise DataError(f"bad target spec {part!r}, expected lang=dir")
        lang, path = part.split("=", 1)
        targets[lang] = load_corpus(Path(path))
    report = evaluate.run_cross_lingual(params, targets, args.source_lang, config, cache)
    print(evaluate.emit_report(report, "json" if args.json else "markdown"))
    return 0


def _cmd_gen_synthetic(args) -> int:
    spec = synthetic.SyntheticSpec(
        languages=[lang for lang in args.languages.split(",") if lang],
        docs_per_language=args.docs,
        events_per_doc=args.events,
        cue_strength=args.cue_strength,
        seed=args.seed,
    )
    written = synthetic.generate(spec, args.out)
    print(json.dumps(written))
    return 0


_COMMANDS = {
    "ingest-validate": _cmd_ingest_validate,
    "extract-phrases": _cmd_extract_phrases,
    "build-graph": _cmd_build_graph,
    "augment": _cmd_augment,
    "gradcheck": _cmd_gradcheck,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "cross-eval": _cmd_cross_eval,
    "gen-synthetic": _cmd_gen_synthetic,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(name)s: %(message)s",
    )
    resolved = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()}
    print(f"config: {json.dumps(resolved, default=str)}", file=sys.stderr)
    try:
        return _COMMANDS[args.command](args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
