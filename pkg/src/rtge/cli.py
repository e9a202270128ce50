"""Command-line front door.

Subcommands: preprocess, train, eval, predict, gen-synthetic,
export-embeddings.  Option precedence (lowest to highest): built-in
defaults, key=value config file (--config), TKGE_* environment variables,
command-line flags.  Exit codes: 0 success, 1 runtime/divergence errors,
2 usage or input errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import dataset, model, trainer
from .evaluate import (
    TASKS,
    SyntheticSpec,
    evaluate as run_evaluation,
    export_embeddings_csv,
    metrics_csv,
    write_synthetic,
)
from .errors import (
    DivergenceError,
    EmptyDomainError,
    ParseError,
    RtgeError,
    ValidationError,
    VocabularyError,
)

# name -> (type, default); bool flags take 0/1 in config files and env vars
CONFIG_FIELDS = {
    "d": (int, 128),
    "gamma": (float, 10.0),
    "alpha": (float, 0.1),
    "beta": (float, 0.01),
    "xi": (float, 1.0),
    "psi": (float, 1e-4),
    "kappa": (int, 500),
    "epsilon": (float, 1e-6),
    "m": (int, 5),
    "seed": (int, 0),
    "mode": (str, "RTGE"),
    "min_triples": (int, 300),
    "neg_filter": (str, "bin"),
    "batch_size": (int, 0),
    "filtered": (bool, False),
    "threads": (int, 1),
}


def _coerce(name: str, raw: str):
    typ = CONFIG_FIELDS[name][0]
    if typ is bool:
        return raw.strip().lower() in ("1", "true", "yes")
    return typ(raw)


def resolve_config(args: argparse.Namespace) -> dict:
    """defaults < config file < TKGE_* env vars < explicit CLI flags."""
    cfg = {name: default for name, (_, default) in CONFIG_FIELDS.items()}
    config_path = getattr(args, "config", None)
    if config_path:
        for line_no, line in enumerate(Path(config_path).read_text().splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValidationError(f"{config_path}:{line_no}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in CONFIG_FIELDS:
                raise ValidationError(f"{config_path}:{line_no}: unknown key {key!r}")
            cfg[key] = _coerce(key, value)
    for name in CONFIG_FIELDS:
        env = os.environ.get(f"TKGE_{name.upper()}")
        if env is not None:
            cfg[name] = _coerce(name, env)
    for name in CONFIG_FIELDS:
        val = getattr(args, name, None)
        if val is not None:
            cfg[name] = val
    return cfg


def _hp(cfg: dict) -> model.HyperParams:
    return model.HyperParams(
        d=cfg["d"],
        gamma=cfg["gamma"],
        alpha=cfg["alpha"],
        beta=cfg["beta"],
        xi=cfg["xi"],
        psi=cfg["psi"],
        kappa=cfg["kappa"],
        epsilon=cfg["epsilon"],
        m=cfg["m"],
    )


def _open_dataset(path: str):
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"dataset not found: {path}")
    return p.open("r", encoding="utf-8")


def _load_graph(args, cfg):
    """Build the training graph, sharing the vocabulary with valid/test files."""
    cache = getattr(args, "cache", None)
    if cache and not getattr(args, "train", None):
        with _open_dataset(cache) as f:
            facts, binning, ent, rel = dataset.load_cache(f)
        graph = dataset.materialize(
            facts, binning, len(ent), len(rel), entity_labels=ent, relation_labels=rel
        )
        return graph, {}, {lab: i for i, lab in enumerate(ent)}, {
            lab: i for i, lab in enumerate(rel)
        }

    entity_ids: dict[str, int] = {}
    relation_ids: dict[str, int] = {}
    with _open_dataset(args.train) as f:
        train_facts, _, _ = dataset.parse_facts(f, entity_ids, relation_ids)
    extra = {}
    for split in ("valid", "test"):
        path = getattr(args, split, None)
        if path:
            with _open_dataset(path) as f:
                extra[split], _, _ = dataset.parse_facts(f, entity_ids, relation_ids)
    binning = dataset.compute_binning(train_facts, cfg["min_triples"])
    graph = dataset.materialize(
        train_facts,
        binning,
        len(entity_ids),
        len(relation_ids),
        entity_labels=list(entity_ids),
        relation_labels=list(relation_ids),
    )
    return graph, extra, entity_ids, relation_ids


# ---------------------------------------------------------------------------
# subcommands


def cmd_preprocess(args) -> int:
    cfg = resolve_config(args)
    entity_ids: dict[str, int] = {}
    relation_ids: dict[str, int] = {}
    with _open_dataset(args.train) as f:
        facts, ent, rel = dataset.parse_facts(f, entity_ids, relation_ids)
    binning = dataset.compute_binning(facts, cfg["min_triples"])
    graph = dataset.materialize(facts, binning, len(ent), len(rel))
    print(f"T={binning.num_bins}")
    for t, sub in enumerate(graph.bins):
        left = binning.boundaries[t]
        right = (
            str(binning.boundaries[t + 1]) if t + 1 < binning.num_bins else "inf"
        )
        print(f"bin {t} [{left},{right}) triples={len(sub)}")
    if args.cache:
        with open(args.cache, "w", encoding="utf-8") as out:
            dataset.save_cache(facts, binning, ent, rel, out)
        print(f"cache written to {args.cache}")
    return 0


def cmd_train(args) -> int:
    cfg = resolve_config(args)
    graph, _, _, _ = _load_graph(args, cfg)
    state, report = trainer.fit(
        graph,
        _hp(cfg),
        mode=cfg["mode"],
        seed=cfg["seed"],
        neg_filter=cfg["neg_filter"],
        batch_size=cfg["batch_size"],
    )
    model.save_checkpoint(state, args.checkpoint)
    if args.log_csv:
        with open(args.log_csv, "w", encoding="utf-8") as f:
            f.write("iter,J,task,smooth,penalty\n")
            for i in range(report.iterations):
                f.write(
                    f"{i},{report.objectives[i]},{report.task_losses[i]},"
                    f"{report.smooth_losses[i]},{report.penalty_losses[i]}\n"
                )
    status = "converged" if report.converged else "max-iterations"
    print(
        f"trained mode={cfg['mode']} iterations={report.iterations} ({status}), "
        f"checkpoint written to {args.checkpoint}"
    )
    return 0


def cmd_eval(args) -> int:
    cfg = resolve_config(args)
    graph, extra, _, _ = _load_graph(args, cfg)
    state = model.load_checkpoint(args.checkpoint)
    if state.num_entities != graph.num_entities or state.num_relations != graph.num_relations:
        raise ValidationError(
            "checkpoint/graph mismatch: "
            f"checkpoint has ne={state.num_entities} nr={state.num_relations}, "
            f"graph has ne={graph.num_entities} nr={graph.num_relations}"
        )
    if state.num_bins != graph.num_bins:
        raise ValidationError(
            f"checkpoint has T={state.num_bins}, graph has T={graph.num_bins}"
        )
    test_facts = extra.get("test")
    if not test_facts:
        raise ValidationError("eval needs a nonempty --test file")
    tasks = [t.strip() for t in args.tasks.split(",")] if args.tasks else list(TASKS)
    reports = run_evaluation(state, graph, test_facts, tasks, cfg["filtered"])
    csv_text = metrics_csv(reports)
    sys.stdout.write(csv_text)
    if args.metrics_out:
        Path(args.metrics_out).write_text(csv_text, encoding="utf-8")
    return 0


def cmd_predict(args) -> int:
    cfg = resolve_config(args)
    graph, _, entity_ids, relation_ids = _load_graph(args, cfg)
    state = model.load_checkpoint(args.checkpoint)

    tokens = args.query.split()
    time_token = None
    if tokens and tokens[-1].startswith("@"):
        time_token = tokens.pop()
    if len(tokens) != 3:
        raise ValidationError(f"query needs 3 slot tokens, got {len(tokens)}")
    missing_slots = [i for i, tok in enumerate(tokens) if tok == "?"]
    time_missing = time_token == "@?"
    if len(missing_slots) + (1 if time_missing else 0) != 1:
        raise ValidationError("query must have exactly one '?' slot")

    def eid(tok):
        if tok not in entity_ids:
            raise VocabularyError(f"unknown entity {tok!r}")
        return entity_ids[tok]

    def rid(tok):
        if tok not in relation_ids:
            raise VocabularyError(f"unknown relation {tok!r}")
        return relation_ids[tok]

    if time_missing:
        h, r, t = eid(tokens[0]), rid(tokens[1]), eid(tokens[2])
        losses = model.score_candidates(state, h, r, t, "time")
        labels = [f"bin{b}" for b in range(state.num_bins)]
    else:
        bin_index = 0
        if time_token is not None:
            if not time_token.startswith("@bin"):
                raise ValidationError(f"bad time token {time_token!r}, expected @bin<k> or @?")
            bin_index = int(time_token[4:])
        slot = missing_slots[0]
        if slot == 0:
            r, t = rid(tokens[1]), eid(tokens[2])
            losses = model.score_candidates(state, None, r, t, "head", bin_index)
            labels = graph.entity_labels
        elif slot == 1:
            h, t = eid(tokens[0]), eid(tokens[2])
            losses = model.score_candidates(state, h, None, t, "relation", bin_index)
            labels = graph.relation_labels
        else:
            h, r = eid(tokens[0]), rid(tokens[1])
            losses = model.score_candidates(state, h, r, None, "tail", bin_index)
            labels = graph.entity_labels

    order = np.argsort(losses, kind="stable")[: args.topk]
    for c in order:
        print(f"{labels[int(c)]}\t{losses[int(c)]:.6f}")
    return 0


def cmd_gen_synthetic(args) -> int:
    spec = SyntheticSpec(
        num_entities=args.entities,
        num_relations=args.relations,
        num_bins=args.bins,
        seed=args.seed if args.seed is not None else 0,
        rotation=args.rotation,
        confusable=args.confusable,
    )
    write_synthetic(spec, args.out_dir)
    print(f"wrote train/valid/test.txt to {args.out_dir}")
    return 0


def cmd_export_embeddings(args) -> int:
    state = model.load_checkpoint(args.checkpoint)
    with open(args.out, "w", encoding="utf-8") as f:
        export_embeddings_csv(state, f)
    print(f"embeddings written to {args.out}")
    return 0


# ---------------------------------------------------------------------------


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file")
    for name, (typ, default) in CONFIG_FIELDS.items():
        flag = "--" + name.replace("_", "-")
        if typ is bool:
            p.add_argument(flag, action="store_const", const=True, default=None,
                           help=f"(default {default})")
        else:
            p.add_argument(flag, type=typ, default=None, help=f"(default {default})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rtge")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="bin years and materialize the graph")
    p.add_argument("--train", required=True)
    p.add_argument("--cache", help="write the preprocessed-graph cache here")
    _add_config_flags(p)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="fit a model and write a checkpoint")
    p.add_argument("--train")
    p.add_argument("--cache", help="preprocessed-graph cache (alternative to --train)")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--log-csv", help="per-iteration objective log")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="ranking metrics on a test file")
    p.add_argument("--train", required=True)
    p.add_argument("--valid")
    p.add_argument("--test", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--tasks", help="comma list from head,tail,relation,time")
    p.add_argument("--metrics-out", help="also write the CSV here")
    _add_config_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="top-k candidates for a query")
    p.add_argument("--train", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--topk", type=int, default=10)
    p.add_argument("query", help="e.g. '? livesIn Beijing @bin3' or 'A r B @?'")
    _add_config_flags(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("gen-synthetic", help="write the rotating-pattern toy corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--entities", type=int, default=50)
    p.add_argument("--relations", type=int, default=5)
    p.add_argument("--bins", type=int, default=8)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--rotation", type=int, default=1)
    p.add_argument("--confusable", action="store_true")
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("export-embeddings", help="dump all tables as CSV")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_embeddings)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ValidationError, EmptyDomainError, VocabularyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DivergenceError, RtgeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
