"""``n2d3`` command line: one subcommand per pipeline stage.

Exit codes are a stable contract: 0 on success, 1 on usage or I/O errors,
2 on numeric failure (transport non-convergence, corollary verification
FAIL). Every error is reported as a single ``n2d3: error: ...`` line on
stderr. ``N2D3_THREADS`` bounds internal parallelism without changing any
output byte.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from n2d3 import degnce, io, synth
from n2d3.disentangle import Region, disentangle
from n2d3.photometric import DEFAULT_EPS, DEFAULT_SIGMA, invariant_map

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2


class UsageError(Exception):
    pass


class NumericFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; 2 is reserved for numeric failure
    def error(self, message):
        raise UsageError(message)


def _positive(kind=float):
    def check(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a valid {kind.__name__}: {text!r}") from None
        if not value > 0:
            raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
        return value
    return check


def _seed(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a valid integer: {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def _add_photometric(p):
    p.add_argument("--sigma", type=_positive(), default=DEFAULT_SIGMA,
                   help="Gaussian derivative scale in pixels (default %(default)s)")
    p.add_argument("--eps", type=_positive(), default=DEFAULT_EPS,
                   help="denominator guard for E (default %(default)s)")


# -- subcommands -----------------------------------------------------------

def cmd_invariant(args) -> int:
    img = io.read_image(args.inp)
    io.write_tensor(invariant_map(img, args.sigma, args.eps), args.out)
    return EXIT_OK


def cmd_disentangle(args) -> int:
    img = io.read_image(args.inp)
    dmap = disentangle(img, args.sigma, args.eps, seed=args.seed, max_iters=args.max_iters, tol=args.tol)
    io.write_disentanglement(dmap, args.out_labels, args.out_palette)
    if args.dump_soft:
        io.write_tensor(dmap.response, args.dump_soft)
    return EXIT_OK


def cmd_synth(args) -> int:
    scene = synth.load_scene(args.scene, mode=args.mode)
    io.write_image(synth.render_rgb(scene), args.out_img)
    io.write_labels(scene.labels, args.out_labels)
    return EXIT_OK


def cmd_verify_corollary1(args) -> int:
    path = args.scene_pair or synth.bundled_scene_path("corollary_pair")
    pair = synth.load_scene_pair(path)
    report = synth.verify_corollary1(pair, args.sigma, args.eps, refine=args.refine)
    io.write_report([("scene_pair", Path(str(path)).name), *report.items()], args.report)
    print(f"{report.status} ratio={report.ratio!r} refinement={report.refinement_status}")
    if not report.passed:
        raise NumericFailure(f"corollary verification failed: status={report.status}, "
                             f"refinement={report.refinement_status}")
    return EXIT_OK


def cmd_reweight(args) -> int:
    block = io.read_tensor(args.block).astype(np.float64)
    if block.ndim != 2 or block.shape[0] != block.shape[1]:
        raise UsageError(f"--block must be a square rank-2 tensor, got shape {block.shape}")
    if block.shape[0] < 2:
        raise UsageError("--block needs K >= 2; a 1x1 block with its diagonal excluded has no plan")
    plan = degnce.ot_reweight(block, args.epsilon, args.max_sweeps, args.tol,
                              emphasize_hard=args.emphasize_hard)
    io.write_tensor(plan.weights, args.out)
    print(f"residual={plan.residual!r} sweeps={plan.sweeps}")
    if not plan.converged:
        raise NumericFailure(f"transport plan did not converge: residual={plan.residual!r}")
    return EXIT_OK


def _read_grids(paths, flag):
    grids = []
    for layer, path in enumerate(paths):
        t = io.read_tensor(path)
        if t.ndim != 3:
            raise UsageError(f"{flag} {path}: feature tensor must be rank 3 (h, w, dim), got rank {t.ndim}")
        grids.append(degnce.FeatureGrid(layer, t))
    return grids


def cmd_nce(args) -> int:
    if len(args.src) != len(args.gen):
        raise UsageError(f"--src has {len(args.src)} layers but --gen has {len(args.gen)}")
    if (args.d_real is None) != (args.d_fake is None):
        raise UsageError("--d-real and --d-fake must be given together")
    src = _read_grids(args.src, "--src")
    gen = _read_grids(args.gen, "--gen")
    labels = io.read_labels(args.labels)
    for layer, (s, g) in enumerate(zip(src, gen)):
        if s.vectors.shape != g.vectors.shape:
            raise UsageError(f"layer {layer}: --src {args.src[layer]} has shape {s.vectors.shape} "
                             f"but --gen {args.gen[layer]} has {g.vectors.shape}")
        gh, gw = s.grid_shape
        if gh > labels.shape[0] or gw > labels.shape[1]:
            raise UsageError(f"layer {layer}: grid {(gh, gw)} is finer than --labels {labels.shape}")

    items = [("tau", args.tau), ("epsilon", args.epsilon), ("seed", args.seed),
             ("max_per_region", args.max_per_region), ("max_sweeps", args.max_sweeps),
             ("tol", args.tol), ("emphasize_hard", args.emphasize_hard), ("layers", len(src))]
    samples, plans, failed = [], [], []
    for s, g in zip(src, gen):
        # every layer draws with the same seed
        ss = degnce.sample_patches(s, g, labels, seed=args.seed, max_per_region=args.max_per_region)
        ps = degnce.compute_plans(ss, args.tau, args.epsilon, args.max_sweeps, args.tol,
                                  emphasize_hard=args.emphasize_hard)
        samples.append(ss)
        plans.append(ps)
        for region, rs in ss.regions.items():
            prefix = f"layer{ss.layer_id}.{Region(region).name.lower()}"
            items.append((f"{prefix}.count", rs.count))
            if region in ps:
                plan = ps[region]
                items += [(f"{prefix}.sweeps", plan.sweeps), (f"{prefix}.residual", plan.residual)]
                if not plan.converged:
                    failed.append(prefix)
    loss = degnce.deg_nce_loss(samples, plans, args.tau)
    if args.d_real is not None:
        loss.with_adversarial(io.read_tensor(args.d_real), io.read_tensor(args.d_fake))
    items += loss.items()
    io.write_report(items, args.report)
    print(f"deg_nce={loss.deg_nce!r}")
    if failed:
        raise NumericFailure(f"transport plan did not converge for {', '.join(failed)}")
    return EXIT_OK


# -- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="n2d3", description="Nighttime degradation disentanglement numerics.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("invariant", help="illumination invariant N as a rank-2 tensor")
    p.add_argument("--in", dest="inp", required=True, help="8-bit RGB PNG or PPM")
    p.add_argument("--out", required=True, help="output tensor file")
    _add_photometric(p)
    p.set_defaults(func=cmd_invariant)

    p = sub.add_parser("disentangle", help="four-region label map and palette render")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out-labels", required=True)
    p.add_argument("--out-palette", required=True)
    _add_photometric(p)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--max-iters", type=_positive(int), default=300)
    p.add_argument("--tol", type=_positive(), default=1e-6)
    p.add_argument("--dump-soft", help="write the light-effect response as a tensor")
    p.set_defaults(func=cmd_disentangle)

    p = sub.add_parser("synth", help="render a scene description and its ground-truth labels")
    p.add_argument("--scene", required=True)
    p.add_argument("--out-img", required=True)
    p.add_argument("--out-labels", required=True)
    p.add_argument("--mode", choices=synth.MODES)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("verify-corollary1", help="check that N ignores material edges")
    p.add_argument("--scene-pair", help="corollary_pair scene file (default: bundled)")
    p.add_argument("--report", required=True)
    p.add_argument("--refine", type=_positive(int))
    _add_photometric(p)
    p.set_defaults(func=cmd_verify_corollary1)

    p = sub.add_parser("reweight", help="entropic transport plan for one similarity block")
    p.add_argument("--block", required=True)
    p.add_argument("--epsilon", type=_positive(), default=degnce.DEFAULT_OT_EPSILON)
    p.add_argument("--out", required=True)
    p.add_argument("--max-sweeps", type=_positive(int), default=degnce.DEFAULT_MAX_SWEEPS)
    p.add_argument("--tol", type=_positive(), default=degnce.DEFAULT_OT_TOL)
    p.add_argument("--emphasize-hard", action="store_true",
                   help="negate the cost so that similar negatives gain weight")
    p.set_defaults(func=cmd_reweight)

    p = sub.add_parser("nce", help="degradation-aware contrastive loss report")
    p.add_argument("--src", nargs="+", required=True, help="source feature tensors, one per layer")
    p.add_argument("--gen", nargs="+", required=True, help="generated feature tensors, one per layer")
    p.add_argument("--labels", required=True)
    p.add_argument("--tau", type=_positive(), default=degnce.DEFAULT_TAU)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--report", required=True)
    p.add_argument("--epsilon", type=_positive(), default=degnce.DEFAULT_OT_EPSILON)
    p.add_argument("--max-per-region", type=_positive(int), default=degnce.DEFAULT_MAX_PER_REGION)
    p.add_argument("--max-sweeps", type=_positive(int), default=degnce.DEFAULT_MAX_SWEEPS)
    p.add_argument("--tol", type=_positive(), default=degnce.DEFAULT_OT_TOL)
    p.add_argument("--emphasize-hard", action="store_true")
    p.add_argument("--d-real", help="discriminator outputs on real images (tensor)")
    p.add_argument("--d-fake", help="discriminator outputs on generated images (tensor)")
    p.set_defaults(func=cmd_nce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except NumericFailure as exc:
        print(f"n2d3: error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, io.FormatError, OSError, ValueError) as exc:
        print(f"n2d3: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
