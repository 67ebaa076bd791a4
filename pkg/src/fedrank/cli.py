"""Command-line entry point: ``fedrank <subcommand> ...``.

Exit codes: 0 success, 1 validation/usage error, 2 internal failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from typing import Sequence

from .coordinate_ascent import CAConfig, coordinate_ascent, feature_stats, init_weights_customized, init_weights_uniform
from .core import (
    Dataset,
    FusionModel,
    LinearModel,
    QueryGroup,
    Ranking,
    ValidationError,
    feature_dimension,
    rank_query_linear,
)
from .diversity import nce_at_k
from .formats import (
    EvalReport,
    atomic_write_text,
    dumps_model,
    load_config,
    load_model,
    parse_fusion_dataset,
    parse_record_dataset,
    write_csv_rows,
)
from .fusion import collate, fusion_coordinate_ascent, stochastic_search, trace_rows
from .maxent import closed_form_allocation, verify_case, verify_closed_form
from .relevance import idcg_at_k, ndcg_at_k, s_recall_at_k
from .simplex import SSConfig

log = logging.getLogger("fedrank")

METRIC_RE = re.compile(r"^(ndcg|nce|srecall)@(\d+)$")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def worker_count() -> int:
    """Thread cap from ``FEDRANK_THREADS`` (default 1)."""
    raw = os.environ.get("FEDRANK_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValidationError(f"FEDRANK_THREADS must be an integer, got {raw!r}") from None


def _created_at() -> str | None:
    # wall-clock stamps would break byte-identical model files
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is None:
        return None
    return datetime.fromtimestamp(int(epoch), tz=timezone.utc).isoformat()


def _stamp(model, seed: int):
    meta = {"objective": None, "seed": seed, **dict(model.metadata), "created_at": _created_at()}
    return type(model)(model.weights, meta)


def _config_section(args, section: str) -> dict:
    if not args.config:
        return {}
    data = load_config(args.config)
    if section in data:
        return dict(data[section])
    return {k: v for k, v in data.items() if k not in ("ss", "ca")}


def _ca_config(args, k: int) -> CAConfig:
    values = {**_config_section(args, "ca"), "k": k, "seed": args.seed}
    try:
        return CAConfig(**values)
    except TypeError as exc:
        raise ValidationError(f"bad CA config: {exc}") from None


def _ss_config(args, k: int) -> SSConfig:
    values = {**_config_section(args, "ss"), "k": k, "seed": args.seed}
    return SSConfig.from_mapping(values)


# --- subcommands -----------------------------------------------------------

def cmd_train_record(args) -> int:
    dataset = parse_record_dataset(args.data)
    if not dataset.queries:
        raise ValidationError(f"{args.data}: no usable queries")
    queries = list(dataset)
    dim = feature_dimension(queries)
    if dim < 1:
        raise ValidationError(f"{args.data}: no features")
    init = init_weights_customized(feature_stats(queries, dim)) if args.init == "customized" else init_weights_uniform(dim)
    model, report = coordinate_ascent(queries, init, _ca_config(args, args.k))
    atomic_write_text(args.out, dumps_model(_stamp(model, args.seed)))
    log.info("ndcg@%d %.6f -> %.6f in %d sweeps", args.k, report.initial_objective, report.final_objective, report.sweeps)
    print(f"ndcg@{args.k}: {report.initial_objective:.6f} -> {report.final_objective:.6f} ({report.sweeps} sweeps)")
    if args.trace:
        write_csv_rows(args.trace, ["step", "objective"], enumerate(report.trajectory))
    return 0


def cmd_train_fusion(args) -> int:
    dataset = parse_fusion_dataset(args.data)
    if not dataset.queries:
        raise ValidationError(f"{args.data}: no usable queries")
    queries = list(dataset)
    if args.algo == "ss":
        model, report = stochastic_search(queries, dataset.record_types, _ss_config(args, args.k))
        rows = [(r["iteration"], r["operation"], repr(r["best_loss"])) for r in trace_rows(report.trace)]
        header = ["iteration", "operation", "best_loss"]
    else:
        config = _ca_config(args, args.k)
        normalize = bool(_config_section(args, "ss").get("normalize_scores", False))
        model, report = fusion_coordinate_ascent(queries, dataset.record_types, config, normalize)
        rows = [(i, "coordinate", repr(-v)) for i, v in enumerate(report.trajectory)]
        header = ["iteration", "operation", "best_loss"]
    atomic_write_text(args.out, dumps_model(_stamp(model, args.seed)))
    trace_path = args.trace or f"{args.out}.trace.csv"
    write_csv_rows(trace_path, header, rows)
    print(f"ndcg@{args.k}: {report.initial_objective:.6f} -> {report.final_objective:.6f}")
    return 0


def _load_eval_data(path) -> tuple[Dataset, str]:
    """Sniff the dataset format from its first data line."""
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip() and not line.lstrip().startswith("#"):
                kind = "fusion" if " score:" in line else "record"
                break
        else:
            kind = "record"
    if kind == "fusion":
        return parse_fusion_dataset(path), kind
    return parse_record_dataset(path, binary=False), kind


def _rank(query: QueryGroup, model) -> Ranking:
    if isinstance(model, FusionModel):
        return collate(query, model)
    return rank_query_linear(model, query)


def _parse_metrics(spec: str) -> list[tuple[str, int]]:
    out = []
    for item in spec.split(","):
        m = METRIC_RE.match(item.strip())
        if not m or int(m.group(2)) < 1:
            raise ValidationError(f"unknown metric {item!r}; use ndcg@K, nce@K or srecall@K")
        out.append((m.group(1), int(m.group(2))))
    return out


def evaluate_dataset(
    dataset: Dataset,
    model,
    metrics: Sequence[tuple[str, int]],
    types_universe: str = "global",
    num_types: int | None = None,
) -> EvalReport:
    """Per-query metric rows plus aggregates (NDCG averaged over queries with a relevant document)."""
    names = [f"{m}@{k}" for m, k in metrics]
    global_k = num_types or len(dataset.record_types)

    def row_for(query: QueryGroup) -> dict:
        ranking = _rank(query, model)
        labels = query.labels
        type_of = {d.doc_id: d.record_type for d in query.documents}
        row = {"qid": query.qid, "has_relevant": idcg_at_k(labels.values(), 1) > 0}
        universe = num_types or (
            global_k if types_universe == "global" else len({t.name for t in type_of.values() if t})
        )
        for (metric, k), name in zip(metrics, names):
            if metric == "ndcg":
                row[name] = ndcg_at_k(ranking, labels, k).value
                continue
            if any(t is None for t in type_of.values()):
                raise ValidationError(f"{name} needs record types; query {query.qid!r} has untyped documents")
            if metric == "nce":
                row[name] = nce_at_k([type_of[d] for d in ranking.doc_ids], universe, k).value
            else:
                row[name] = s_recall_at_k(ranking, type_of, universe, k).value
        return row

    threads = worker_count()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(row_for, dataset.queries))
    else:
        rows = [row_for(q) for q in dataset.queries]
    return EvalReport(names, rows, aggregate_rows(rows, names))


def aggregate_rows(rows: Sequence[dict], names: Sequence[str]) -> dict[str, float]:
    agg = {}
    for name in names:
        pool = [r for r in rows if r["has_relevant"]] if name.startswith("ndcg") else list(rows)
        agg[name] = math.fsum(r[name] for r in pool) / len(pool) if pool else 0.0
    return agg


def _default_model(dataset: Dataset, kind: str):
    if kind != "fusion":
        raise ValidationError("--model is required for record-search data")
    return FusionModel({t.name: 1.0 for t in dataset.record_types}, {"objective": None, "baseline": "raw-score"})


def cmd_evaluate(args) -> int:
    dataset, kind = _load_eval_data(args.data)
    if not dataset.queries:
        raise ValidationError(f"{args.data}: no usable queries")
    model = load_model(args.model) if args.model else _default_model(dataset, kind)
    if kind == "fusion" and isinstance(model, LinearModel):
        raise ValidationError("a linear model cannot rank fusion data; use a fusion model")
    report = evaluate_dataset(dataset, model, _parse_metrics(args.metrics), args.types_universe, args.num_types)
    json_path, csv_path = report.write(args.report)
    for name, value in report.aggregate.items():
        print(f"{name}\t{value:.4f}")
    log.info("wrote %s and %s", json_path, csv_path)
    return 0


def cmd_collate(args) -> int:
    dataset = parse_fusion_dataset(args.data)
    model = load_model(args.model)
    if not isinstance(model, FusionModel):
        raise ValidationError("collate needs a fusion model")
    rows = []
    for query in dataset:
        types = {d.doc_id: d for d in query.documents}
        for rank, (doc_id, score) in enumerate(collate(query, model), start=1):
            doc = types[doc_id]
            rows.append((query.qid, rank, doc_id, doc.record_type.name, repr(score), doc.label))
    write_csv_rows(args.out, ["qid", "rank", "doc_id", "record_type", "score", "label"], rows)
    return 0


def cmd_maxent(args) -> int:
    if args.types < 1 or args.positions < 1:
        raise ValidationError("--types and --positions must be >= 1")
    alloc = closed_form_allocation(args.types, args.positions)
    print(f"counts: ({', '.join(map(str, alloc.counts))})")
    print(f"entropy: {alloc.entropy:.3f}")
    if not args.verify:
        return 0
    if args.sweep:
        report = verify_closed_form(args.types, args.positions)
        print(f"verified {len(report.cases)} cases; pruned: {report.pruned_totals()}")
        if not report.ok:
            print(f"MISMATCH at (K, n) = {report.failures}", file=sys.stderr)
            return 2
        return 0
    case = verify_case(args.types, args.positions)
    print(f"branch-and-bound: {case.branch_and_bound:.6f} ({case.nodes} nodes, pruned {dict(case.pruned)})")
    print(f"brute force: {case.brute_force:.6f}")
    if not case.ok:
        print(f"MISMATCH at (K, n) = ({args.types}, {args.positions})", file=sys.stderr)
        return 2
    print("verified")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fedrank", description="Federated learning-to-rank toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train-record", help="coordinate ascent on a record-search dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--init", choices=("customized", "uniform"), default="customized")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config")
    p.add_argument("--trace")
    p.set_defaults(func=cmd_train_record)

    p = sub.add_parser("train-fusion", help="learn per-record-type fusion weights")
    p.add_argument("--data", required=True)
    p.add_argument("--algo", choices=("ss", "ca"), default="ss")
    p.add_argument("--k", type=int, default=100)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config")
    p.add_argument("--trace", help="trace CSV path (default: <out>.trace.csv)")
    p.set_defaults(func=cmd_train_fusion)

    p = sub.add_parser("evaluate", help="NDCG / NCE / S-recall report")
    p.add_argument("--data", required=True)
    p.add_argument("--model", help="model file; fusion data defaults to the raw-score baseline")
    p.add_argument("--metrics", default="ndcg@100,nce@100")
    p.add_argument("--report", required=True)
    p.add_argument("--types-universe", choices=("global", "query"), default="global")
    p.add_argument("--num-types", type=int, help="fixed record-type universe size for NCE and S-recall")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("collate", help="merge shard lists with a fusion model")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_collate)

    p = sub.add_parser("maxent", help="ideal record-type allocation for K types and N positions")
    p.add_argument("--types", type=int, required=True)
    p.add_argument("--positions", type=int, required=True)
    p.add_argument("--verify", action="store_true", help="cross-check with branch-and-bound and enumeration")
    p.add_argument("--sweep", action="store_true", help="with --verify, check every K' <= K, n' <= N")
    p.set_defaults(func=cmd_maxent)
    return parser


def run_cli(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return 0 if exc.code in (0, None) else 1
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if getattr(args, "k", 1) is not None and getattr(args, "k", 1) < 1:
            raise ValidationError("--k must be >= 1")
        return args.func(args)
    except (ValidationError, ValueError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        log.exception("internal failure")
        print(f"internal error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
