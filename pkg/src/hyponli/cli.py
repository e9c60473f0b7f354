"""Command-line entry point.

Subcommands: stats, train-eval, synth, audit-sample, split. Every run is
deterministic under its --seed: all randomness flows from that one value
through fixed per-component offsets (embeddings seed+1, model init seed+2,
epoch shuffling seed+3, premise perturbation seed+4), so repeated
invocations produce byte-identical artifacts. Outputs are written to a
temp file and promoted atomically. A key=value config file can preset any
flag of a subcommand; explicit flags win. HYPONLI_OUT_DIR sets the default
output directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import corpus, evaluate, model, stats, synth, text, train
from .util import atomic_write_text


def _resolve_scheme(args) -> corpus.LabelScheme:
    if getattr(args, "labels", None):
        names = [n.strip() for n in args.labels.split(",") if n.strip()]
        labels = tuple(corpus.Label(name, i) for i, name in enumerate(names))
        return corpus.LabelScheme(labels, "custom")
    return corpus.SCHEME_PRESETS[args.scheme]


def _parse_tsv_columns(spec: str) -> corpus.ColumnSpec:
    kwargs = {}
    for part in spec.split(","):
        if not part.strip():
            continue
        key, _, value = part.partition("=")
        kwargs[key.strip()] = int(value)
    return corpus.ColumnSpec(**kwargs)


def _read_instances(path, args, scheme):
    if args.format == "tsv":
        columns = _parse_tsv_columns(args.tsv_columns)
        instances, skipped = corpus.read_tsv(path, columns, scheme)
    else:
        field_map = corpus.FIELD_MAP_PRESETS[args.format]
        instances, skipped = corpus.read_jsonl(path, field_map, scheme)
    if getattr(args, "remap_ordinal", False):
        instances = corpus.remap_joci_ordinal(instances)
        scheme = corpus.THREE_WAY
    return instances, skipped, scheme


def _config_lines(args) -> list[str]:
    # out_dir excluded so artifacts do not depend on where they are written
    skip = {"func", "config", "out_dir"}
    lines = []
    for key in sorted(vars(args)):
        if key in skip:
            continue
        lines.append(f"{key}={getattr(args, key)}")
    return lines


def _add_data_flags(parser, roles):
    for role in roles:
        parser.add_argument(f"--{role}", required=True, metavar="PATH",
                            help=f"{role} corpus file")
    parser.add_argument("--format", choices=["native", "snli", "tsv"], default="native",
                        help="input format preset")
    parser.add_argument("--tsv-columns", default="premise=0,hypothesis=1,label=2",
                        help="role=column pairs for --format tsv")
    parser.add_argument("--scheme", choices=sorted(corpus.SCHEME_PRESETS), default="3way",
                        help="label scheme preset")
    parser.add_argument("--labels", default=None,
                        help="comma-separated label names overriding --scheme")
    parser.add_argument("--remap-ordinal", action="store_true",
                        help="map 1-5 ordinal ratings onto the 3-way scheme")


def _add_common_flags(parser):
    parser.add_argument("--seed", type=int, default=0, help="global seed")
    parser.add_argument("--out-dir", default=os.environ.get("HYPONLI_OUT_DIR", "."),
                        help="output directory (env HYPONLI_OUT_DIR)")
    parser.add_argument("--config", default=None, metavar="PATH",
                        help="key=value file presetting flags of this subcommand")


def cmd_stats(args) -> int:
    scheme = _resolve_scheme(args)
    instances, skipped, scheme = _read_instances(args.data, args, scheme)
    counts = stats.count_corpus(instances, scheme=scheme)
    giveaways = stats.giveaway_words(counts, min_freq=args.min_freq, top_k=args.top_k)
    curves = [stats.coverage_curve(counts, label, grid_step=args.grid_step,
                                   per_label=args.per_label_threshold)
              for label in scheme.labels]
    digest = ["# Word statistics digest", ""]
    digest.append(f"- source: {args.data} (split label: {args.split_name})")
    digest.append(f"- sentences: {counts.n_sentences} (skipped at ingest: {skipped})")
    for label in scheme.labels:
        digest.append(f"- {label.name}: {counts.count_l(label)} sentences")
    for label in scheme.labels:
        digest.append("")
        digest.append(f"## Top give-away words: {label.name}")
        digest.append("")
        digest.append("| Word | Score | Freq |")
        digest.append("| --- | --- | --- |")
        for entry in giveaways[label]:
            digest.append(f"| {entry.token} | {entry.score:.2f} | {entry.frequency} |")
    digest.append("")
    digest.append("## Coverage at selected thresholds")
    digest.append("")
    digest.append("| Label | y(0.5) | y(0.75) | y(1.0) |")
    digest.append("| --- | --- | --- | --- |")
    for label in scheme.labels:
        ys = [stats.coverage_count(counts, label, x, per_label=args.per_label_threshold)
              for x in (0.5, 0.75, 1.0)]
        digest.append(f"| {label.name} | {ys[0]} | {ys[1]} | {ys[2]} |")
    digest.append("")
    digest.append("## Run configuration")
    digest.append("")
    digest.extend(f"    {line}" for line in _config_lines(args))

    out = args.out_dir
    atomic_write_text(os.path.join(out, "giveaways.csv"), stats.giveaways_to_csv(giveaways))
    atomic_write_text(os.path.join(out, "coverage.csv"), stats.curves_to_csv(curves))
    atomic_write_text(os.path.join(out, "counts_summary.csv"),
                      stats.counts_summary_csv(counts))
    atomic_write_text(os.path.join(out, "stats_digest.md"), "\n".join(digest) + "\n")
    print(f"stats: {counts.n_sentences} sentences -> {out}")
    return 0


def _build_model(args, scheme, vocab, seed):
    if args.embeddings:
        table = text.load_embeddings(args.embeddings, vocab, args.embedding_dim)
    else:
        table = text.seeded_random_embeddings(vocab, args.embedding_dim, seed + 1)
    config = model.ModelConfig(
        encoder_kind=args.encoder,
        embedding_dim=args.embedding_dim,
        hidden_dim=args.hidden_dim,
        mlp_hidden=args.mlp_hidden,
        n_labels=len(scheme),
        seed=seed + 2,
        finetune_embeddings=args.finetune_embeddings,
    )
    return model.ModelParameters.init(config, table, vocab, scheme)


def cmd_train_eval(args) -> int:
    scheme = _resolve_scheme(args)
    train_insts, _, scheme = _read_instances(args.train, args, scheme)
    dev_insts, _, _ = _read_instances(args.dev, args, scheme)
    test_insts = None
    if args.test:
        test_insts, _, _ = _read_instances(args.test, args, scheme)

    splits = {"train": train_insts, "dev": dev_insts}
    if test_insts:
        splits["test"] = test_insts
    dataset = corpus.Dataset("cli", scheme, splits)
    vocab = text.build_vocabulary(dataset)
    params = _build_model(args, scheme, vocab, args.seed)
    train_config = train.TrainConfig(
        lr0=args.lr0, decay=args.decay, divide_on_decline=args.divide_on_decline,
        lr_floor=args.lr_floor, max_epochs=args.max_epochs,
        batch_size=args.batch_size, seed=args.seed + 3, compare_to=args.compare_to,
    )
    out = args.out_dir
    try:
        best_params, state = train.fit(train_insts, dev_insts, params, train_config)
    except train.TrainAbort as exc:
        dump = os.path.join(out, "train_abort.csv")
        atomic_write_text(dump, exc.state.log_csv())
        print(f"training aborted: {exc}; state dump at {dump}", file=sys.stderr)
        return 1

    maj = corpus.majority_label(train_insts)
    reports = []
    tokenized = {name: [text.tokenize(inst.hypothesis) for inst in insts]
                 for name, insts in splits.items() if name != "train"}
    for name in ("dev", "test"):
        if name not in tokenized:
            continue
        preds = model.predict_batch(tokenized[name], best_params)
        audit = evaluate.premise_invariance_audit(
            best_params, corpus.Dataset(name, scheme, {name: splits[name]}),
            perturbation_seed=args.seed + 4)
        reports.append(evaluate.build_report(name, preds, splits[name], maj,
                                             premise_invariant=audit))

    atomic_write_text(os.path.join(out, "train_log.csv"), state.log_csv())
    ckpt = os.path.join(out, "model.ckpt")
    tmp_ckpt = ckpt + ".tmp"
    model.save_checkpoint(best_params, tmp_ckpt)
    os.replace(tmp_ckpt, ckpt)
    atomic_write_text(os.path.join(out, "report.md"),
                      evaluate.report_markdown(reports, _config_lines(args)))
    atomic_write_text(os.path.join(out, "report.csv"), evaluate.report_csv(reports))
    dev_rep = reports[0]
    print(f"train-eval: dev hyp-only {evaluate.fmt2(dev_rep.hyp_only_acc)} "
          f"vs maj {evaluate.fmt2(dev_rep.maj_acc)} -> {out}")
    return 0


def cmd_synth(args) -> int:
    with open(args.spec_file, encoding="utf-8") as fh:
        spec = synth.spec_from_dict(json.load(fh))
    dataset = synth.generate(spec, args.n)
    instances = dataset.split("train")
    bayes = synth.bayes_accuracy(spec)
    out = args.out_dir
    corpus_path = os.path.join(out, "corpus.jsonl")
    tmp = corpus_path + ".tmp"
    os.makedirs(out, exist_ok=True)
    corpus.write_jsonl(instances, tmp)
    os.replace(tmp, corpus_path)
    meta = {"spec": synth.spec_to_dict(spec), "n": args.n, "bayes_accuracy": bayes}
    atomic_write_text(os.path.join(out, "corpus.meta.json"),
                      json.dumps(meta, indent=2) + "\n")
    print(f"synth: {args.n} instances, bayes accuracy {bayes:.2f} -> {out}")
    return 0


def cmd_audit_sample(args) -> int:
    params = model.load_checkpoint(args.checkpoint)
    instances, _, _ = _read_instances(args.data, args, params.scheme)
    sentences = [text.tokenize(inst.hypothesis) for inst in instances]
    preds = model.predict_batch(sentences, params)
    gold = [inst.label for inst in instances]
    ids = [inst.instance_id for inst in instances]
    sample = evaluate.confusion_sample(preds, gold, ids, args.n_per_cell, args.seed)
    by_id = {inst.instance_id: inst for inst in instances}
    atomic_write_text(os.path.join(args.out_dir, "audit_sample.txt"),
                      evaluate.confusion_sample_text(sample, by_id))
    total = sum(len(v) for v in sample.cells.values())
    print(f"audit-sample: {total} rows across {len(sample.cells)} cells -> {args.out_dir}")
    return 0


def cmd_split(args) -> int:
    scheme = _resolve_scheme(args)
    instances, _, scheme = _read_instances(args.data, args, scheme)
    ratios = tuple(float(r) for r in args.ratios.split(","))
    dataset = corpus.random_split(instances, ratios=ratios, seed=args.seed, scheme=scheme)
    os.makedirs(args.out_dir, exist_ok=True)
    for name in ("train", "dev", "test"):
        path = os.path.join(args.out_dir, f"{name}.jsonl")
        tmp = path + ".tmp"
        corpus.write_jsonl(dataset.split(name), tmp)
        os.replace(tmp, path)
    sizes = ", ".join(f"{name}={len(dataset.split(name))}" for name in ("train", "dev", "test"))
    print(f"split: {sizes} -> {args.out_dir}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hyponli",
        description="Hypothesis-only diagnostics for NLI datasets",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    by_name = {}

    p = subparsers.add_parser("stats", help="give-away words, coverage curves, counts")
    _add_data_flags(p, ["data"])
    _add_common_flags(p)
    p.add_argument("--split-name", default="dev", help="label for the digest")
    p.add_argument("--min-freq", type=int, default=5, help="candidate frequency floor")
    p.add_argument("--top-k", type=int, default=10, help="list length per label")
    p.add_argument("--grid-step", type=float, default=0.01, help="coverage grid step")
    p.add_argument("--per-label-threshold", action="store_true",
                   help="threshold p(label|w) instead of max over labels")
    p.set_defaults(func=cmd_stats)
    by_name["stats"] = p

    p = subparsers.add_parser("train-eval", help="train a hypothesis-only model and report gaps")
    _add_data_flags(p, ["train", "dev"])
    p.add_argument("--test", default=None, metavar="PATH", help="optional test corpus file")
    _add_common_flags(p)
    p.add_argument("--encoder", choices=list(model.ENCODER_KINDS), default="bag")
    p.add_argument("--embeddings", default=None, metavar="PATH",
                   help="word-vector text file (default: seeded random vectors)")
    p.add_argument("--embedding-dim", type=int, default=50)
    p.add_argument("--hidden-dim", type=int, default=64)
    p.add_argument("--mlp-hidden", type=int, default=64)
    p.add_argument("--finetune-embeddings", action="store_true")
    p.add_argument("--lr0", type=float, default=0.1)
    p.add_argument("--decay", type=float, default=0.99)
    p.add_argument("--divide-on-decline", type=float, default=5.0)
    p.add_argument("--lr-floor", type=float, default=1e-5)
    p.add_argument("--max-epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--compare-to", choices=["previous", "best"], default="previous",
                   help="dev-decline reference for lr division")
    p.set_defaults(func=cmd_train_eval)
    by_name["train-eval"] = p

    p = subparsers.add_parser("synth", help="generate a synthetic biased corpus")
    _add_common_flags(p)
    p.add_argument("--spec-file", required=True, metavar="PATH", help="JSON generator spec")
    p.add_argument("--n", type=int, required=True, help="number of instances")
    p.set_defaults(func=cmd_synth)
    by_name["synth"] = p

    p = subparsers.add_parser("audit-sample", help="stratified confusion-cell sample")
    _add_data_flags(p, ["data"])
    _add_common_flags(p)
    p.add_argument("--checkpoint", required=True, metavar="PATH")
    p.add_argument("--n-per-cell", type=int, default=50)
    p.set_defaults(func=cmd_audit_sample)
    by_name["audit-sample"] = p

    p = subparsers.add_parser("split", help="random 80:10:10 split of one corpus file")
    _add_data_flags(p, ["data"])
    _add_common_flags(p)
    p.add_argument("--ratios", default="0.8,0.1,0.1", help="train,dev,test ratios")
    p.set_defaults(func=cmd_split)
    by_name["split"] = p

    return parser, by_name


def _apply_config_file(parser, by_name, argv):
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    sub = by_name[args.command]
    defaults = {}
    with open(args.config, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            defaults[key.strip().replace("-", "_")] = value.strip()
    actions = {action.dest: action for action in sub._actions}
    coerced = {}
    for key, value in defaults.items():
        action = actions.get(key)
        if action is None:
            raise corpus.ConfigError(f"{args.config}: unknown option {key!r}")
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            coerced[key] = value.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            coerced[key] = action.type(value)
        else:
            coerced[key] = value
    sub.set_defaults(**coerced)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser, by_name = build_parser()
    try:
        args = _apply_config_file(parser, by_name, argv)
        return args.func(args)
    except (corpus.IngestError, corpus.ConfigError, text.EmbeddingFormatError,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
