"""Command-line experiments.

Every output file starts with ``# key=value`` lines holding the resolved
configuration and seeds; rerunning with those values reproduces the file.
"""

from __future__ import annotations

import argparse
import csv
import sys

from . import analysis, hermite
from .dataio import LabeledDataset, ParseError, dataset_stats, load_libsvm, unit_norm_scale
from .featuremap import FeatureMapSpec, MapKind, build_map
from .svm import TrainConfig, load_model, primal_objective, save_model, test_error, train_pegasos

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_MISSING_FILE = 3
EXIT_PARSE = 4
EXIT_INVALID = 5


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument groups


def _add_data(p, test=False):
    p.add_argument("--data", required=True, help="training data, LIBSVM format (.gz accepted)")
    if test:
        p.add_argument("--test-data", help="test data; defaults to the training data")
    p.add_argument("--dim", type=int, help="override the input dimensionality")
    p.add_argument("--normalize-unit-norm", action="store_true",
                   help="rescale to unit average squared norm (factor from the training data)")


def _add_map(p, kinds=True):
    if kinds:
        p.add_argument("--map", default="taylor", choices=["taylor", "fourier", "poly"])
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--sigma2", type=float, default=1.0, help="Gaussian bandwidth sigma^2")
    p.add_argument("--num-features", type=int, default=1024, help="Fourier feature count D")
    p.add_argument("--constant", type=float, default=1.0, help="polynomial kernel constant c")
    p.add_argument("--seed", type=int, default=0, help="Fourier sampling and shuffle seed")


def _add_reg(p, train=True):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--C", type=float, help="SVM cost; lambda = 1/(C m)")
    g.add_argument("--lambda", dest="lam", type=float, help="regularization lambda")
    if train:
        p.add_argument("--epochs", type=int, default=100)
        p.add_argument("--no-project", action="store_true", help="skip the 1/sqrt(lambda) ball projection")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kernelfeatures", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="dataset statistics (m, d, mean nonzeros, radius)")
    _add_data(p)

    p = sub.add_parser("train", help="train a linear SVM with Pegasos over a feature map")
    _add_data(p, test=True)
    _add_map(p)
    _add_reg(p)
    p.add_argument("--out", default="model.txt")

    p = sub.add_parser("eval", help="primal objective and test error of a saved model")
    p.add_argument("--model", required=True)
    _add_data(p)

    p = sub.add_parser("approx-error", help="average |K - K~| over random training pairs")
    _add_data(p)
    _add_map(p)
    p.add_argument("--pairs", type=int, default=100_000)
    p.add_argument("--pair-seed", type=int, default=0)
    p.add_argument("--out", default="pairs_err.csv")

    p = sub.add_parser("budget-curve", help="Taylor vs Fourier quality at matched flop budgets")
    _add_data(p, test=True)
    p.add_argument("--maps", default="taylor,fourier")
    p.add_argument("--budgets", required=True, help="comma-separated ascending budgets")
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    _add_reg(p)
    p.add_argument("--no-train", action="store_true", help="kernel error only")
    p.add_argument("--pairs", type=int, default=100_000)
    p.add_argument("--pair-seed", type=int, default=0)
    p.add_argument("--out", default="budget_curve.csv")

    p = sub.add_parser("sandwich", help="check p* <= p~* <= p* + bound with the exact dual solver")
    _add_data(p)
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--sigma2", type=float, default=1.0)
    _add_reg(p, train=False)

    p = sub.add_parser("hermite-verify", help="numerical checks of the Hermite expansion")
    p.add_argument("--max-k", type=int, default=hermite.DEFAULT_MAX_K)
    p.add_argument("--order", type=int, default=hermite.DEFAULT_ORDER)
    p.add_argument("--out", default="hermite_ck.csv")
    return parser


# ---------------------------------------------------------------------------
# helpers


def _load(args) -> tuple[LabeledDataset, LabeledDataset | None, float]:
    train = load_libsvm(args.data, dim=args.dim)
    test = None
    if getattr(args, "test_data", None):
        test = load_libsvm(args.test_data, dim=args.dim)
        dim = max(train.dim, test.dim)
        train, test = train.with_dim(dim), test.with_dim(dim)
    scale = 1.0
    if args.normalize_unit_norm:
        scale = unit_norm_scale(train)
        train = train.scaled(scale)
        test = test.scaled(scale) if test is not None else None
    return train, test, scale


def _spec(args, dim: int) -> FeatureMapSpec:
    return FeatureMapSpec(MapKind.parse(args.map), dim, sigma2=args.sigma2, degree=args.degree,
                          num_features=args.num_features, constant=args.constant, seed=args.seed)


def _lambda(args, m: int) -> float:
    if args.C is None and args.lam is None:
        raise UsageError("one of --C or --lambda is required")
    return 1.0 / (args.C * m) if args.C is not None else args.lam


def _header(args, **extra) -> list[str]:
    items = {k: v for k, v in sorted(vars(args).items()) if v is not None}
    items.update(extra)
    return [f"# {k}={v}" for k, v in items.items()]


def _write_csv(path, header: list[str], columns, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header:
            fh.write(line + "\n")
        writer = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


# ---------------------------------------------------------------------------
# commands


def cmd_stats(args) -> int:
    ds, _, _ = _load(args)
    s = dataset_stats(ds)
    print(f"m={s.m} d={s.d} mean_nnz={s.mean_nnz:.4f} radius={s.radius:.6g}")
    return EXIT_OK


def cmd_train(args) -> int:
    ds, test, scale = _load(args)
    lam = _lambda(args, len(ds))
    spec = _spec(args, ds.dim)
    cfg = TrainConfig(lam=lam, epochs=args.epochs, seed=args.seed, project=not args.no_project)
    model, flops = train_pegasos(ds, spec, cfg)
    objective = primal_objective(ds, spec, model)
    err = test_error(test if test is not None else ds, spec, model)
    save_model(model, spec, args.out, header={"epochs": cfg.epochs, "shuffle_seed": cfg.seed,
                                               "project": cfg.project, "input_scale": repr(scale)})
    print(f"objective={objective:.6f} test_error={err:.4f} "
          f"mean_flops={flops / (cfg.epochs * len(ds)):.1f} model={args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    model, spec = load_model(args.model)
    ds, _, _ = _load(args)
    if ds.dim > spec.input_dim:
        raise ValueError(f"data dim {ds.dim} exceeds the model's input_dim {spec.input_dim}")
    ds = ds.with_dim(spec.input_dim)
    print(f"objective={primal_objective(ds, spec, model):.6f} test_error={test_error(ds, spec, model):.4f}")
    return EXIT_OK


def cmd_approx_error(args) -> int:
    ds, _, _ = _load(args)
    spec = _spec(args, ds.dim)
    sample = analysis.sample_pairs(len(ds), args.pairs, args.pair_seed)
    err = analysis.avg_kernel_error(ds, spec, sample)
    _, flops = analysis.feature_matrix(ds, spec)
    row = {"kind": spec.kind.value,
           "param": spec.num_features if spec.kind is MapKind.FOURIER else spec.degree,
           "num_features": build_map(spec).total_features,
           "flops": float(flops.mean()), "avg_err": err}
    _write_csv(args.out, _header(args), row.keys(), [row])
    print(f"avg_err={err:.6g} flops={row['flops']:.1f} -> {args.out}")
    return EXIT_OK


def cmd_budget_curve(args) -> int:
    ds, test, _ = _load(args)
    try:
        budgets = [float(b) for b in args.budgets.split(",") if b.strip()]
    except ValueError:
        raise UsageError(f"bad --budgets {args.budgets!r}") from None
    kinds = [k.strip() for k in args.maps.split(",") if k.strip()]
    train = None
    if not args.no_train:
        train = TrainConfig(lam=_lambda(args, len(ds)), epochs=args.epochs, seed=args.seed,
                            project=not args.no_project)
    sample = analysis.sample_pairs(len(ds), args.pairs, args.pair_seed)
    rows = analysis.budget_curve(ds, kinds, budgets, args.sigma2, sample=sample, train=train,
                                 test_ds=test, seed=args.seed)
    _write_csv(args.out, _header(args), analysis.BUDGET_COLUMNS, rows)
    for row in rows:
        print(f"{row['kind']:8s} B={row['B']:<10g} param={row['param']:<6d} avg_err={row['avg_err']:.4g} "
              f"objective={row['objective']:.4g} test_err={row['test_err']:.4g} flops={row['flops']:.1f}")
    return EXIT_OK


def cmd_sandwich(args) -> int:
    ds, _, _ = _load(args)
    lam = _lambda(args, len(ds))
    spec = FeatureMapSpec(MapKind.TAYLOR, ds.dim, sigma2=args.sigma2, degree=args.degree)
    rep = analysis.verify_sandwich(ds, spec, lam)
    verdict = "PASS" if rep.holds else "FAIL"
    print(f"p_star={rep.p_star:.8f} p_tilde_star={rep.p_tilde_star:.8f} bound={rep.bound:.8f} sandwich={verdict}")
    return EXIT_OK if rep.holds else EXIT_CHECK_FAILED


def cmd_hermite_verify(args) -> int:
    results, coeffs = hermite.verification_suite(args.max_k, args.order)
    for r in results:
        flag = "PASS" if r.passed else "FAIL"
        note = f"  ({r.note})" if r.note else ""
        print(f"{flag}  {r.name:42s} value={r.value:.3e} threshold={r.threshold:.1e}{note}")
    rows = [{"k": k, "c_k": float(c)} for k, c in enumerate(coeffs.c)]
    _write_csv(args.out, _header(args), ["k", "c_k"], rows)
    # the decay-ratio line is an observation, not a requirement
    required = [r for r in results if "observation" not in r.name]
    return EXIT_OK if all(r.passed for r in required) else EXIT_CHECK_FAILED


COMMANDS = {
    "stats": cmd_stats,
    "train": cmd_train,
    "eval": cmd_eval,
    "approx-error": cmd_approx_error,
    "budget-curve": cmd_budget_curve,
    "sandwich": cmd_sandwich,
    "hermite-verify": cmd_hermite_verify,
}


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except ParseError as exc:
        print(f"error: parse failure: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ValueError, analysis.OracleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
