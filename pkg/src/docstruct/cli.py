"""Command-line pipeline chaining every stage of the toolkit.

Each run writes its outputs plus a JSON manifest capturing the full
parameter set, so any output can be regenerated byte-identically from
its manifest. Environment variables may appear in path arguments (they
are expanded); nothing semantic is ever read from the environment.

Exit status: 0 success, 1 data error (one-line reason on stderr),
2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .bundles import BINARY_SUFFIX, TEXT_SUFFIX, load_bundle_dir, save_bundle
from .denoise import (
    DEFAULT_MEAN_SPAN_LENGTHS,
    DEFAULT_NOISE_DENSITY,
    CorruptionSpec,
    corrupt,
    reconstruct,
)
from .errors import DocstructError, IntegrityError, ValidationError
from .graph import read_corpus, write_corpus
from .infusion import (
    DEFAULT_VOCABULARY,
    DESCRIPTORS,
    linearize,
    parse_config,
    read_linearizations,
    write_linearizations,
    write_vocabulary_manifest,
)
from .ingest import (
    DEFAULT_MAX_EDIT_RATIO,
    EvidenceMatchStats,
    PromptAnnotation,
    QaAnnotation,
    filter_by_length,
    insert_abstract_parent,
    parse_comparison_prompts,
    parse_generic_doc,
    parse_qasper,
    read_records,
    read_sidecar,
    write_sidecar,
)
from .metrics import read_predictions, score_prompts, score_qa, write_report
from .probe import (
    TrainSpec,
    eval_probe,
    layer_utilization,
    load_checkpoint,
    save_checkpoint,
    train_probe,
)
from .probegen import TASKS, generate_datasets, read_instances, write_histogram, write_instances
from .seeding import derive_seed
from .stats import correlate_grid
from .tokenize import TOKENIZERS, get_tokenizer
from .toyencode import MODES, toy_encode

_SCHEMA_NOTE = (
    "file schemas: itg corpus v1 (jsonl), linearization v1 (jsonl), "
    "probe instances v1 (jsonl), bundles RB1 text / RBIN binary, "
    "probe-checkpoint 1, run manifest v1 (json)"
)


def _path(value: str) -> Path:
    return Path(os.path.expanduser(os.path.expandvars(value)))


def _fractions(value: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in value.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad fraction list {value!r}")


def _int_list(value: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in value.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {value!r}")


def _jsonable(value):
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, tuple):
        return list(value)
    return value


def _write_manifest(args: argparse.Namespace, outputs: list[Path]) -> Path:
    skip = {"handler", "command", "manifest"}
    manifest = {
        "schema": 1,
        "tool": {"name": "docstruct", "version": __version__},
        "subcommand": args.command,
        "parameters": {
            key: _jsonable(value)
            for key, value in sorted(vars(args).items())
            if key not in skip
        },
        "outputs": [str(p) for p in outputs],
    }
    path = args.manifest if args.manifest else Path(str(outputs[0]) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", "utf-8")
    return path


def _map_jobs(fn, items, jobs: int) -> list:
    """Parallel map that preserves input order regardless of job count."""
    if jobs <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# -- subcommand handlers -----------------------------------------------------------


def _cmd_ingest(args) -> int:
    graphs = []
    seen: set[str] = set()
    annotations: dict[str, list] = {}
    stats = EvidenceMatchStats()
    for record in read_records(args.in_path):
        if args.format == "generic":
            graph = parse_generic_doc(record)
            if args.group_abstract:
                graph = insert_abstract_parent(graph)
            doc_annotations: list = []
        elif args.format == "qasper":
            graph, doc_annotations, doc_stats = parse_qasper(
                record, args.max_edit_ratio
            )
            stats = stats + doc_stats
        else:
            graph, doc_annotations, doc_stats = parse_comparison_prompts(
                record, args.max_edit_ratio
            )
            stats = stats + doc_stats
        if graph.doc_id in seen:
            raise ValidationError(f"duplicate document id {graph.doc_id!r}")
        seen.add(graph.doc_id)
        graphs.append(graph)
        if doc_annotations:
            annotations[graph.doc_id] = doc_annotations

    if args.max_tokens is not None:
        tokenizer = get_tokenizer(args.tokenizer)
        graphs = filter_by_length(graphs, tokenizer, args.max_tokens)
        kept = {g.doc_id for g in graphs}
        annotations = {d: a for d, a in annotations.items() if d in kept}

    write_corpus(graphs, args.out)
    outputs = [args.out]
    if args.annotations_out:
        write_sidecar(annotations, args.annotations_out)
        outputs.append(args.annotations_out)
    _write_manifest(args, outputs)
    print(f"documents={len(graphs)} {stats.summary_line()}")
    return 0


def _cmd_make_probes(args) -> int:
    corpus = read_corpus(args.in_path)
    tasks = TASKS if args.tasks == "all" else tuple(args.tasks.split(","))
    datasets = generate_datasets(corpus, args.seed, tasks, args.splits)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    for task in tasks:
        dataset = datasets[task]
        instances_path = args.out_dir / f"{task}.jsonl"
        counts_path = args.out_dir / f"{task}.counts.json"
        write_instances(dataset, instances_path)
        write_histogram(dataset, counts_path)
        outputs.extend([instances_path, counts_path])
        print(f"task={task} instances={len(dataset.instances)}")
    if not args.manifest:
        args.manifest = args.out_dir / "manifest.json"
    _write_manifest(args, outputs)
    return 0


def _cmd_linearize(args) -> int:
    config = parse_config(args.config)
    tokenizer = get_tokenizer(args.tokenizer)
    corpus = read_corpus(args.in_path)
    lins = _map_jobs(lambda g: linearize(g, config, tokenizer), corpus, args.jobs)
    write_linearizations(lins, args.out)
    outputs = [args.out]
    if args.vocab_out:
        write_vocabulary_manifest(args.vocab_out)
        outputs.append(args.vocab_out)
    _write_manifest(args, outputs)
    print(f"documents={len(lins)} config={config.descriptor}")
    return 0


def _cmd_denoise(args) -> int:
    lins = read_linearizations(args.in_path)
    with open(args.out, "w", encoding="utf-8") as fh:
        for lin in lins:
            spec = CorruptionSpec(
                noise_density=args.density,
                mean_span_lengths=args.mean_lengths,
                seed=derive_seed(args.seed, lin.doc_id, "denoise"),
            )
            corrupted, target = corrupt(lin.tokens, spec)
            if reconstruct(corrupted, target) != list(lin.tokens):
                raise IntegrityError(f"{lin.doc_id}: round trip failed")
            fh.write(
                json.dumps(
                    {"doc": lin.doc_id, "input": corrupted, "target": target},
                    ensure_ascii=False,
                )
                + "\n"
            )
    _write_manifest(args, [args.out])
    print(f"documents={len(lins)}")
    return 0


def _cmd_toy_encode(args) -> int:
    lins = read_linearizations(args.in_path)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    suffix = BINARY_SUFFIX if args.format == "binary" else TEXT_SUFFIX
    for lin in lins:
        if "/" in lin.doc_id or os.sep in lin.doc_id:
            raise ValidationError(f"doc id {lin.doc_id!r} is not filename-safe")

    def encode(lin):
        bundle = toy_encode(lin, args.layers, args.width, args.mode, args.seed)
        path = args.out_dir / f"{lin.doc_id}{suffix}"
        save_bundle(bundle, path)
        return path

    outputs = _map_jobs(encode, lins, args.jobs)
    if not args.manifest:
        args.manifest = args.out_dir / "manifest.json"
    _write_manifest(args, outputs)
    print(f"documents={len(outputs)} mode={args.mode}")
    return 0


def _load_probe_inputs(args):
    dataset = read_instances(args.instances)
    bundles = load_bundle_dir(args.bundles)
    lins = {lin.doc_id: lin for lin in read_linearizations(args.lins)}
    return dataset, bundles, lins


def _cmd_train_probe(args) -> int:
    dataset, bundles, lins = _load_probe_inputs(args)
    spec = TrainSpec(
        learning_rate=args.lr,
        batch_size=args.batch_size,
        max_epochs=args.epochs,
        patience=args.patience,
        weight_decay=args.weight_decay,
        train_scale=not args.no_mix_scale,
        seed=args.seed,
    )
    model, dev_accuracy = train_probe(dataset, bundles, lins, spec)
    save_checkpoint(model, args.out)
    _write_manifest(args, [args.out])
    print(f"task={dataset.task} dev_accuracy={dev_accuracy:.6f}")
    return 0


def _cmd_eval_probe(args) -> int:
    dataset, bundles, lins = _load_probe_inputs(args)
    model = load_checkpoint(args.model)
    accuracy = eval_probe(model, dataset, bundles, lins, split=args.split)
    report = {
        "task": model.task,
        "split": args.split,
        "accuracy": accuracy,
        "layer_utilization": layer_utilization(model).tolist(),
    }
    args.out.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", "utf-8")
    _write_manifest(args, [args.out])
    print(f"task={model.task} split={args.split} accuracy={accuracy:.6f}")
    return 0


def _gold_items(sidecar: dict, task: str) -> dict:
    """Key annotations as (doc, q<i>) or (doc, p<i>) in sidecar order."""
    gold = {}
    for doc_id, annotations in sidecar.items():
        for i, ann in enumerate(annotations):
            if task == "qa":
                if not isinstance(ann, QaAnnotation):
                    raise ValidationError(
                        f"{doc_id}: expected QA annotations, found prompts"
                    )
                key = (doc_id, f"q{i}")
                gold[key] = (
                    ann.reference_answers,
                    [set(e) for e in ann.evidence_node_ids] or [set()],
                )
            else:
                if not isinstance(ann, PromptAnnotation):
                    raise ValidationError(
                        f"{doc_id}: expected prompt annotations, found QA"
                    )
                key = (doc_id, f"p{i}")
                gold[key] = (
                    ann.labels,
                    [set(e) for e in ann.evidence_node_ids] or [set()],
                )
    return gold


def _cmd_eval_downstream(args) -> int:
    sidecar = read_sidecar(args.gold)
    gold = _gold_items(sidecar, args.task)
    records = read_predictions(args.predictions)
    if args.task == "qa":
        report = score_qa(records, gold)
    else:
        report = score_prompts(records, gold)
    table_path = args.table if args.table else Path(str(args.out) + ".txt")
    write_report(report, table_path, args.out)
    _write_manifest(args, [args.out, table_path])
    metrics = " ".join(
        f"{k}={v:.4f}" for k, v in sorted(report.items()) if isinstance(v, float)
    )
    print(f"items={report['count']} {metrics}")
    return 0


def _cmd_correlate(args) -> int:
    probe_scores = json.loads(args.probe_scores.read_text("utf-8"))
    task_scores = json.loads(args.task_scores.read_text("utf-8"))
    r, p = correlate_grid(probe_scores, task_scores)
    shared = sorted(set(probe_scores) & set(task_scores))
    n = sum(len(task_scores[c]) for c in shared)
    out = {"r": r, "p": p, "n": n, "configs": shared}
    args.out.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n", "utf-8")
    _write_manifest(args, [args.out])
    print(f"r={r:.6f} p={p:.6g} n={n}")
    return 0


# -- parser ------------------------------------------------------------------------


def _add_manifest_flag(sub) -> None:
    sub.add_argument(
        "--manifest",
        type=_path,
        default=None,
        help="manifest path (default: alongside the first output)",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="docstruct",
        description="Document-structure probing and infusion pipeline.",
        epilog=_SCHEMA_NOTE,
    )
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("ingest", help="parse raw records into an ITG corpus")
    sub.add_argument("--format", choices=("generic", "qasper", "prompts"), required=True)
    sub.add_argument("--in", dest="in_path", type=_path, required=True)
    sub.add_argument("--out", type=_path, required=True)
    sub.add_argument("--annotations-out", type=_path, default=None)
    sub.add_argument("--max-edit-ratio", type=float, default=DEFAULT_MAX_EDIT_RATIO)
    sub.add_argument("--max-tokens", type=int, default=None)
    sub.add_argument("--tokenizer", choices=sorted(TOKENIZERS), default="simple")
    sub.add_argument(
        "--group-abstract",
        action="store_true",
        help="wrap leading root paragraphs in an abstract node (generic format)",
    )
    _add_manifest_flag(sub)
    sub.set_defaults(handler=_cmd_ingest)

    sub = subs.add_parser("make-probes", help="generate balanced probing datasets")
    sub.add_argument("--in", dest="in_path", type=_path, required=True)
    sub.add_argument("--out-dir", type=_path, required=True)
    sub.add_argument("--tasks", default="all", help='"all" or comma-separated names')
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--splits", type=_fractions, default=(0.6, 0.2, 0.2))
    _add_manifest_flag(sub)
    sub.set_defaults(handler=_cmd_make_probes)

    sub = subs.add_parser("linearize", help="emit token streams with ID tracks")
    sub.add_argument("--config", choices=sorted(DESCRIPTORS), required=True)
    sub.add_argument("--in", dest="in_path", type=_path, required=True)
    sub.add_argument("--out", type=_path, required=True)
    sub.add_argument("--tokenizer", choices=sorted(TOKENIZERS), default="simple")
    sub.add_argument("--vocab-out", type=_path, default=None)
    sub.add_argument("--jobs", type=int, default=1)
    _add_manifest_flag(sub)
    sub.set_defaults(handler=_cmd_linearize)

    sub = subs.add_parser("denoise", help="span-corruption input/target pairs")
    sub.add_argument("--in", dest="in_path", type=_path, required=True)
    sub.add_argument("--out", type=_path, required=True)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--density", type=float, default=DEFAULT_NOISE_DENSITY)
    sub.add_argument("--mean-lengths", type=_int_list, default=DEFAULT_MEAN_SPAN_LENGTHS)
    _add_manifest_flag(sub)
    sub.set_defaults(handler=_cmd_denoise)

    sub = subs.add_parser("toy-encode", help="deterministic toy representations")
    sub.add_argument("--in", dest="in_path", type=_path, required=True)
    sub.add_argument("--out-dir", type=_path, required=True)
    sub.add_argument("--mode", choices=MODES, required=True)
    sub.add_argument("--layers", type=int, default=4)
    sub.add_argument("--width", type=int, default=32)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--format", choices=("text", "binary"), default="binary")
    sub.add_argument("--jobs", type=int, default=1)
    _add_manifest_flag(sub)
    sub.set_defaults(handler=_cmd_toy_encode)

    sub = subs.add_parser("train-probe", help="fit a linear probe over bundles")
    sub.add_argument("--instances", type=_path, required=True)
    sub.add_argument("--bundles", type=_path, required=True)
    sub.add_argument("--lins", type=_path, required=True)
    sub.add_argument("--out", type=_path, required=True)
    sub.add_argument("--lr", type=float, default=1e-3)
    sub.add_argument("--batch-size", type=int, default=4)
    sub.add_argument("--epochs", type=int, default=20)
    sub.add_argument("--patience", type=int, default=10)
    sub.add_argument("--weight-decay", type=float, default=0.01)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument(
        "--no-mix-scale",
        action="store_true",
        help="freeze the scalar-mix scale at 1.0",
    )
    _add_manifest_flag(sub)
    sub.set_defaults(handler=_cmd_train_probe)

    sub = subs.add_parser("eval-probe", help="accuracy of a saved probe on a split")
    sub.add_argument("--model", type=_path, required=True)
    sub.add_argument("--instances", type=_path, required=True)
    sub.add_argument("--bundles", type=_path, required=True)
    sub.add_argument("--lins", type=_path, required=True)
    sub.add_argument("--split", choices=("train", "dev", "test"), default="test")
    sub.add_argument("--out", type=_path, required=True)
    _add_manifest_flag(sub)
    sub.set_defaults(handler=_cmd_eval_probe)

    sub = subs.add_parser("eval-downstream", help="QA / prompt metrics from predictions")
    sub.add_argument("--task", choices=("qa", "prompts"), required=True)
    sub.add_argument("--gold", type=_path, required=True, help="annotation sidecar")
    sub.add_argument("--predictions", type=_path, required=True)
    sub.add_argument("--out", type=_path, required=True, help="JSON summary path")
    sub.add_argument("--table", type=_path, default=None, help="fixed-field table path")
    _add_manifest_flag(sub)
    sub.set_defaults(handler=_cmd_eval_downstream)

    sub = subs.add_parser("correlate", help="probe-vs-downstream Pearson correlation")
    sub.add_argument("--probe-scores", type=_path, required=True)
    sub.add_argument("--task-scores", type=_path, required=True)
    sub.add_argument("--out", type=_path, required=True)
    _add_manifest_flag(sub)
    sub.set_defaults(handler=_cmd_correlate)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.handler(args)
    except (DocstructError, OSError, ValueError, json.JSONDecodeError) as exc:
        reason = " ".join(str(exc).split())
        print(f"error: {type(exc).__name__}: {reason}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
