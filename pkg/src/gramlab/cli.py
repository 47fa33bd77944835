"""Command-line surface: fitting, prediction, kernel estimation, tuning,
unrolling, the toy study, and data generation.

All subcommands are deterministic: identical flags and inputs produce
byte-identical outputs.  Randomized steps draw from --seed (default 0).
Dissimilarities are squared throughout.  Exit codes: 0 success, 1 numerical
failure, 2 usage or input error.
"""

import argparse
import os
import sys

import numpy as np

from . import io
from .classifiers import (
    MarginLoss,
    TrainingSet,
    fit,
    fit_l1,
    load_model,
    probability_from_logit,
    save_model,
)
from .exceptions import NumericalError
from .experiments import generate_swiss_roll, generate_toy, run_figure2
from .kernels import Kernel, eigentruncate, pseudo_attributes, read_matrix, write_matrix
from .rke import RkeProblem, cv2_tune, extend_kernel, fit_kernel, newbie_embed
from .unroll import knn_graph, unroll, unrolled_embedding


def _loss_from_args(args):
    return MarginLoss(args.loss, theta=args.theta)


def _training_set(args):
    if args.gram:
        K = read_matrix(args.gram)
        y = io.read_labels(args.labels, K.shape[0])
        return TrainingSet.from_gram(K, y)
    X = io.read_points(args.points)
    y = io.read_labels(args.labels, X.shape[0])
    return TrainingSet.from_points(X, y, Kernel(args.kernel, args.width))


def _solver_opts(args):
    opts = {}
    if args.max_iter is not None:
        opts["max_iter"] = args.max_iter
    if args.tol is not None:
        opts["tol"] = args.tol
    return opts


def cmd_fit(args):
    ts = _training_set(args)
    if args.l1:
        if args.loss != "squared":
            raise ValueError("--l1 requires --loss squared")
        model = fit_l1(ts, args.mu, **_solver_opts(args))
    else:
        model = fit(ts, _loss_from_args(args), args.mu, max_iter=args.max_iter, tol=args.tol)
    save_model(model, args.out)
    print(f"wrote {args.out} objective={io.fmt(model.objective)}")
    return 0


def cmd_predict(args):
    model = load_model(args.model)
    if args.gram:
        rows = read_matrix(args.gram)
        if rows.ndim != 2 or rows.shape[1] != model.n:
            raise ValueError(f"gram rows must have width {model.n}, got {rows.shape}")
        f = rows @ model.coefficients
    else:
        if model.points is None or model.kernel is None:
            raise ValueError("model has no kernel/points; supply gram rows via --gram")
        X = io.read_points(args.points)
        f = model.kernel.cross(X, model.points) @ model.coefficients
    labels = np.where(f >= 0.0, 1, -1)
    if model.loss.kind == "logistic":
        p = probability_from_logit(f)
        io.write_table(args.out, ["i", "f", "label", "p"],
                       ([i, fi, int(li), pi] for i, (fi, li, pi) in enumerate(zip(f, labels, p))))
    else:
        io.write_table(args.out, ["i", "f", "label"],
                       ([i, fi, int(li)] for i, (fi, li) in enumerate(zip(f, labels))))
    print(f"wrote {args.out} ({len(f)} predictions)")
    return 0


def _write_solution(outdir, sol, trace_fraction):
    os.makedirs(outdir, exist_ok=True)
    write_matrix(os.path.join(outdir, "kernel.txt"), sol.kernel)
    es = eigentruncate(sol.kernel, trace_fraction)
    io.write_spectrum(os.path.join(outdir, "spectrum.csv"), es.values)
    io.write_embedding(os.path.join(outdir, "embedding.csv"), pseudo_attributes(es))
    io.write_residuals(os.path.join(outdir, "residuals.csv"), sol.I, sol.J, sol.d, sol.fitted)


def cmd_rke_fit(args):
    I, J, d = io.read_dissimilarities(args.dissim)
    problem = RkeProblem.from_triples(zip(I, J, d), n=args.n)
    sol = fit_kernel(problem, args.mu, max_iter=args.max_iter or 5000, eps_rel=args.tol or 1e-6)
    _write_solution(args.out, sol, args.trace_frac)
    print(f"wrote {args.out} objective={io.fmt(sol.objective)}")
    return 0


def cmd_newbie(args):
    K = read_matrix(args.kernel)
    pairs = io.read_new_dissimilarities(args.dissim_new)
    emb = newbie_embed(K, pairs, **({"max_iter": args.max_iter} if args.max_iter else {}))
    ext = extend_kernel(K, emb)
    os.makedirs(args.out, exist_ok=True)
    io.write_table(os.path.join(args.out, "newbie.csv"), ["i", "value"],
                   ([i, v] for i, v in enumerate(np.append(emb.col, emb.self_value))))
    write_matrix(os.path.join(args.out, "extended_kernel.txt"), ext)
    line = f"wrote {args.out} loss={io.fmt(emb.loss)} slack={io.fmt(emb.slack)}"
    if args.model:
        model = load_model(args.model)
        f = float(ext[-1, :-1] @ model.coefficients)
        line += f" f={io.fmt(f)}"
    print(line)
    return 0


def _full_matrix_from_triples(I, J, d):
    n = int(max(I.max(), J.max())) + 1
    need = n * (n - 1) // 2
    if len(d) != need:
        raise ValueError(f"need all {need} pairs of {n} objects for a complete matrix, got {len(d)}")
    D = np.zeros((n, n))
    D[I, J] = d
    D[J, I] = d
    return D


def cmd_unroll(args):
    if args.points:
        X = io.read_points(args.points)
        graph = knn_graph(X, args.k, metric="euclidean")
    else:
        I, J, d = io.read_dissimilarities(args.dissim)
        graph = knn_graph(_full_matrix_from_triples(I, J, d), args.k, metric="precomputed")
    sol = unroll(graph, args.mu, max_iter=args.max_iter or 5000,
                 eps_rel=args.tol or 1e-6, trace_cap=args.trace_cap, seed=args.seed)
    os.makedirs(args.out, exist_ok=True)
    write_matrix(os.path.join(args.out, "kernel.txt"), sol.kernel)
    emb = unrolled_embedding(sol, args.dims)
    io.write_embedding(os.path.join(args.out, "embedding.csv"), emb)
    spectrum = np.maximum(np.linalg.eigvalsh(sol.kernel)[::-1], 0.0)
    io.write_spectrum(os.path.join(args.out, "spectrum.csv"), spectrum)
    io.write_residuals(os.path.join(args.out, "residuals.csv"), sol.I, sol.J, sol.d, sol.fitted)
    print(f"wrote {args.out} objective={io.fmt(sol.objective)}")
    return 0


def cmd_cv2(args):
    I, J, d = io.read_dissimilarities(args.dissim)
    problem = RkeProblem.from_triples(zip(I, J, d), n=args.n)
    grid = [float(tok) for tok in args.mu_grid.split(",") if tok.strip()]
    best, curve = cv2_tune(problem, grid, holdout_fraction=args.holdout, seed=args.seed,
                           trace_fraction=args.trace_frac, jobs=args.jobs)
    io.write_table(args.out, ["mu", "error"], curve)
    print(f"wrote {args.out} best_mu={io.fmt(best)}")
    return 0


def cmd_figure2(args):
    ds = generate_toy(n=args.n, seed=args.seed)
    res = run_figure2(ds, kernel=Kernel("gaussian", args.width),
                      mu_svm=args.mu_svm, mu_pl=args.mu_pl)
    io.write_table(args.out, ["x", "target", "svm", "pl"], res.table)
    print(
        f"wrote {args.out} mu_svm={io.fmt(res.mu_svm)} mu_pl={io.fmt(res.mu_pl)} "
        f"gibbs={io.fmt(res.gibbs)}"
    )
    return 0


def cmd_gen(args):
    os.makedirs(args.out, exist_ok=True)
    if args.what == "toy":
        ds = generate_toy(n=args.n, seed=args.seed)
        io.write_points(os.path.join(args.out, "points.csv"), ds.x[:, None])
        io.write_labels(os.path.join(args.out, "labels.csv"), ds.y)
        io.write_table(os.path.join(args.out, "p.csv"), ["i", "p"],
                       ([i, v] for i, v in enumerate(ds.p)))
    else:
        pts, t, h = generate_swiss_roll(args.n, noise=args.noise, seed=args.seed)
        io.write_points(os.path.join(args.out, "points.csv"), pts)
        io.write_table(os.path.join(args.out, "latent.csv"), ["i", "t", "h"],
                       ([i, ti, hi] for i, (ti, hi) in enumerate(zip(t, h))))
    print(f"wrote {args.out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gramlab",
        description="Kernel-methods toolkit: margin classifiers over kernels, "
        "PSD kernel fitting from squared dissimilarities, manifold unrolling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_seed(p):
        p.add_argument("--seed", type=int, default=0, help="seed for any randomized step (default 0)")

    p = sub.add_parser("fit", help="fit a margin classifier")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--gram", help="training Gram matrix (matrix text format)")
    src.add_argument("--points", help="training points CSV")
    p.add_argument("--labels", required=True, help="labels CSV (i,y); unlisted objects are unlabeled")
    p.add_argument("--loss", required=True, choices=["hinge", "logistic", "squared"])
    p.add_argument("--mu", type=float, required=True, help="regularization weight")
    p.add_argument("--theta", type=float, default=1.0, help="hinge steepness")
    p.add_argument("--kernel", choices=["gaussian", "linear"], default="gaussian")
    p.add_argument("--width", type=float, default=1.0, help="gaussian kernel width")
    p.add_argument("--l1", action="store_true", help="sparse coefficient penalty (squared loss only)")
    p.add_argument("--max-iter", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--out", required=True)
    add_seed(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="evaluate a fitted model")
    p.add_argument("--model", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--gram", help="kernel rows to the training objects (matrix text)")
    src.add_argument("--points", help="query points CSV")
    p.add_argument("--out", required=True)
    add_seed(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("rke-fit", help="fit a PSD kernel to dissimilarity triples")
    p.add_argument("--dissim", required=True, help="dissimilarity CSV (i,j,d; d squared)")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--n", type=int, help="object count (default: largest index + 1)")
    p.add_argument("--trace-frac", type=float, default=0.95)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--out", required=True, help="output directory")
    add_seed(p)
    p.set_defaults(func=cmd_rke_fit)

    p = sub.add_parser("newbie", help="embed one new object into a fitted kernel")
    p.add_argument("--kernel", required=True, help="kernel matrix (matrix text)")
    p.add_argument("--dissim-new", required=True, help="CSV (i,d) of squared dissimilarities to training objects")
    p.add_argument("--model", help="optional classifier model to evaluate at the new object")
    p.add_argument("--max-iter", type=int)
    p.add_argument("--out", required=True, help="output directory")
    add_seed(p)
    p.set_defaults(func=cmd_newbie)

    p = sub.add_parser("unroll", help="flatten a manifold from neighbor distances")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--points", help="points CSV")
    src.add_argument("--dissim", help="complete dissimilarity CSV (i,j,d)")
    p.add_argument("--k", type=int, required=True, help="neighbors per vertex")
    p.add_argument("--mu", type=float, required=True, help="trace-reward weight")
    p.add_argument("--dims", type=int, default=2)
    p.add_argument("--trace-cap", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--out", required=True, help="output directory")
    add_seed(p)
    p.set_defaults(func=cmd_unroll)

    p = sub.add_parser("cv2", help="tune mu by pair holdout")
    p.add_argument("--dissim", required=True)
    p.add_argument("--mu-grid", required=True, help="comma-separated mu values")
    p.add_argument("--holdout", type=float, default=0.1)
    p.add_argument("--n", type=int)
    p.add_argument("--trace-frac", type=float, default=0.95)
    p.add_argument("--jobs", type=int, default=1, help="parallel workers across grid points")
    p.add_argument("--out", required=True)
    add_seed(p)
    p.set_defaults(func=cmd_cv2)

    p = sub.add_parser("figure2", help="toy comparison of sign target vs probability estimate")
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--width", type=float, default=0.5)
    p.add_argument("--mu-svm", type=float)
    p.add_argument("--mu-pl", type=float)
    p.add_argument("--out", required=True)
    add_seed(p)
    p.set_defaults(func=cmd_figure2)

    p = sub.add_parser("gen", help="generate synthetic datasets")
    p.add_argument("what", choices=["toy", "swiss-roll"])
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--noise", type=float, default=0.0, help="coordinate noise (swiss-roll only)")
    p.add_argument("--out", required=True, help="output directory")
    add_seed(p)
    p.set_defaults(func=cmd_gen)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"gramlab: numerical failure: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, IndexError, KeyError) as exc:
        print(f"gramlab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
