"""Command-line front end.

Subcommands: run (consensus on an ensemble CSV), generate (build a base
clustering pool from feature data and draw an ensemble), eval (NMI between
two label files) and audit (link-reliability table against ground truth).

Exit codes: 0 ok, 2 usage, 3 I/O, 4 data validation, 5 numeric failure.
Heavy imports happen inside the handlers so --threads can pin the BLAS
thread count before the numeric stack loads.
"""

from __future__ import annotations

import argparse
import json
import os
import sys


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ptclust",
        description="Consensus clustering over an ensemble of base clusterings.",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="cap the BLAS/OpenMP thread count for this invocation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="compute a consensus clustering")
    run.add_argument("input", help="ensemble CSV (one row per object)")
    run.add_argument("-o", "--output", required=True, help="labels CSV to write")
    run.add_argument(
        "--method",
        default="pta-al",
        choices=["pta-al", "pta-cl", "pta-sl", "ptgp", "eac-al", "eac-cl", "eac-sl"],
    )
    run.add_argument("--k", type=int, required=True, help="target cluster count")
    run.add_argument(
        "--K",
        dest="k_elite",
        default="auto",
        help="elite-neighbor count: integer, 'auto' or 'all'",
    )
    run.add_argument(
        "--T",
        dest="n_steps",
        default="auto",
        help="random-walk length: integer or 'auto'",
    )
    run.add_argument("--seed", type=int, default=0)
    run.add_argument(
        "--cl-semantics",
        default="sum",
        choices=["sum", "min"],
        help="combine rule behind the cl linkage",
    )
    run.add_argument("--cache-dir", default=None, help="trajectory-similarity cache")
    run.add_argument("--dendrogram-out", default=None, help="merge-list CSV to write")
    run.add_argument("--json", action="store_true", help="machine-readable summary")
    run.set_defaults(func=cmd_run)

    gen = sub.add_parser("generate", help="build a pool and draw an ensemble")
    gen.add_argument("input", help="feature CSV (numeric columns)")
    gen.add_argument("-o", "--output", required=True, help="ensemble CSV to write")
    gen.add_argument("--pool-size", type=int, default=200)
    gen.add_argument("-M", "--ensemble-size", type=int, default=10)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument(
        "--truth-column",
        action="store_true",
        help="treat the last CSV column as ground-truth labels (excluded)",
    )
    gen.add_argument(
        "--truth-out", default=None, help="write the ground-truth column here"
    )
    gen.add_argument("--json", action="store_true")
    gen.set_defaults(func=cmd_generate)

    ev = sub.add_parser("eval", help="NMI between two label files")
    ev.add_argument("labels", help="labels CSV, one integer per line")
    ev.add_argument("truth", help="reference labels CSV")
    ev.add_argument("--json", action="store_true")
    ev.set_defaults(func=cmd_eval)

    audit = sub.add_parser("audit", help="link-reliability table by weight")
    audit.add_argument("input", help="ensemble CSV")
    audit.add_argument("truth", help="ground-truth labels CSV")
    audit.add_argument("-o", "--output", default=None, help="CSV path (default stdout)")
    audit.add_argument("--graph-out", default=None, help="dump the similarity graph")
    audit.set_defaults(func=cmd_audit)
    return parser


def cmd_run(args) -> int:
    from . import io as pio
    from .pipeline import run_consensus

    ensemble = pio.read_ensemble_csv(args.input)
    result, summary = run_consensus(
        ensemble,
        method=args.method,
        k=args.k,
        k_elite=args.k_elite,
        n_steps=args.n_steps,
        seed=args.seed,
        cl_semantics=args.cl_semantics,
        cache_dir=args.cache_dir,
    )
    pio.write_labels_csv(args.output, result.object_labels)
    if args.dendrogram_out and result.dendrogram is not None:
        pio.write_dendrogram_csv(args.dendrogram_out, result.dendrogram)
    if args.json:
        print(json.dumps(summary.as_dict()))
    else:
        s = summary

        def fmt(value, spec=""):
            return "-" if value is None else format(value, spec)

        print(
            f"n_objects={s.n_objects} n_clusterings={s.n_clusterings} "
            f"n_microclusters={s.n_microclusters} "
            f"msg_links={fmt(s.msg_links)} keng_links={fmt(s.keng_links)} "
            f"ratio_pl={fmt(s.ratio_pl, '.4f')} "
            f"K={fmt(s.k_elite)} T={fmt(s.n_steps)} "
            f"method={s.method} k={s.k} clusters_found={result.n_clusters_found} "
            f"seconds={s.seconds:.3f}"
        )
    return 0


def cmd_generate(args) -> int:
    from . import io as pio
    from .generators import build_pool, draw_ensemble

    if args.ensemble_size > args.pool_size:
        from .errors import ValidationError

        raise ValidationError(
            f"ensemble size {args.ensemble_size} exceeds pool size {args.pool_size}"
        )
    data = pio.read_dataset_csv(args.input, truth_column=args.truth_column)
    pool = build_pool(data, args.pool_size, seed=args.seed)
    ensemble = draw_ensemble(pool, args.ensemble_size, seed=args.seed)
    pio.write_ensemble_csv(args.output, ensemble.labels)
    meta_path = str(args.output) + ".meta.json"
    pio.write_pool_metadata(
        meta_path,
        pool,
        extra={"ensemble_size": args.ensemble_size, "draw_seed": args.seed},
    )
    if args.truth_out and data.truth is not None:
        pio.write_labels_csv(args.truth_out, data.truth)
    if args.json:
        print(
            json.dumps(
                {
                    "n_objects": data.n_objects,
                    "pool_size": pool.size,
                    "ensemble_size": args.ensemble_size,
                    "output": str(args.output),
                    "metadata": meta_path,
                }
            )
        )
    else:
        print(
            f"pool_size={pool.size} ensemble_size={args.ensemble_size} "
            f"n_objects={data.n_objects} output={args.output}"
        )
    return 0


def cmd_eval(args) -> int:
    from . import io as pio
    from .evaluation import nmi

    labels = pio.read_labels_csv(args.labels)
    truth = pio.read_labels_csv(args.truth)
    score = nmi(labels, truth)
    if args.json:
        print(json.dumps({"nmi": score}))
    else:
        print(f"{score:.6f}")
    return 0


def cmd_audit(args) -> int:
    from . import io as pio
    from .ensemble import build_microclusters, compute_mca
    from .evaluation import link_audit
    from .graph import build_msg

    ensemble = pio.read_ensemble_csv(args.input)
    truth = pio.read_labels_csv(args.truth)
    mcs = build_microclusters(ensemble)
    msg = build_msg(compute_mca(ensemble, mcs), mcs)
    audit = link_audit(msg, mcs, truth, n_clusterings=ensemble.n_clusterings)
    if args.graph_out:
        pio.write_graph_dump(args.graph_out, msg)
    if args.output:
        pio.write_audit_csv(args.output, audit)
    else:
        pio.write_audit_csv(sys.stdout, audit)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None:
        for var in (
            "OMP_NUM_THREADS",
            "OPENBLAS_NUM_THREADS",
            "MKL_NUM_THREADS",
            "NUMEXPR_NUM_THREADS",
        ):
            os.environ[var] = str(args.threads)

    from .errors import NumericError, ValidationError

    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 5
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
