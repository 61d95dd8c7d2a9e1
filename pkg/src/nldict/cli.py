"""Command-line driver: train a dictionary, denoise an image, evaluate PSNR.

Model files are versioned plain text, one key per line, with angles and
slopes written as 17-significant-digit decimals so a reload reproduces the
packed parameter vector bit for bit::

    format: nldict-model/1
    levels: 4
    angles: 7.8539816339744828e-01 0 ...
    slopes: 1 1 ...
    seed: 0
    epochs: 10
    corpus_hash: <sha256 of the training images>

All commands are deterministic under fixed seeds.
"""

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from .dictionary import CnldParams, forward, pack
from .image import NoiseSpec, add_awgn, extract_patches, load_pgm, psnr, save_pgm
from .sparse import IstaConfig, ista
from .train import TrainConfig, init_udht, train

MODEL_FORMAT = "nldict-model/1"
DEFAULT_SIGMA = 30.0 / 255.0


class CliError(Exception):
    pass


def save_model(path, p, seed=0, epochs=0, corpus_hash="-"):
    angles = " ".join("%.17g" % v for v in p.angles.ravel())
    slopes = " ".join("%.17g" % v for v in p.slopes.ravel())
    text = (f"format: {MODEL_FORMAT}\n"
            f"levels: {p.levels}\n"
            f"angles: {angles}\n"
            f"slopes: {slopes}\n"
            f"seed: {seed}\n"
            f"epochs: {epochs}\n"
            f"corpus_hash: {corpus_hash}\n")
    Path(path).write_text(text)


def load_model(path):
    """Read a model file back into (CnldParams, metadata dict)."""
    meta = {}
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        key, _, value = line.partition(":")
        meta[key.strip()] = value.strip()
    if meta.get("format") != MODEL_FORMAT:
        raise CliError(f"{path}: not a {MODEL_FORMAT} file")
    try:
        levels = int(meta["levels"])
        angles = np.array([float(v) for v in meta["angles"].split()])
        slopes = np.array([float(v) for v in meta["slopes"].split()])
    except (KeyError, ValueError) as exc:
        raise CliError(f"{path}: malformed model file ({exc})")
    if angles.size != 2 * levels or slopes.size != 3 * levels:
        raise CliError(
            f"{path}: expected {2 * levels} angles and {3 * levels} slopes, "
            f"found {angles.size} and {slopes.size}"
        )
    p = CnldParams(angles=angles.reshape(levels, 2),
                   slopes=slopes.reshape(levels, 3))
    return p, meta


def _corpus_hash(paths):
    digest = hashlib.sha256()
    for path in paths:
        digest.update(Path(path).name.encode())
        digest.update(Path(path).read_bytes())
    return digest.hexdigest()


def _list_pgms(directory):
    paths = sorted(Path(directory).glob("*.pgm"))
    if not paths:
        raise CliError(f"no .pgm files found in {directory}")
    return paths


def cmd_train(args):
    paths = _list_pgms(args.images)
    images = [load_pgm(p) for p in paths]
    patches = np.concatenate([
        extract_patches(img, args.patches_per_image, args.patch_size,
                        seed=args.seed + i)
        for i, img in enumerate(images)
    ])
    cfg = TrainConfig(
        epochs=args.epochs,
        minibatch=args.minibatch,
        patches_per_image=args.patches_per_image,
        patch_size=args.patch_size,
        learning_rate=args.lr,
        sparse_mode=args.sparse_mode,
        lam=args.lam,
        k=args.k,
        rng_seed=args.seed,
        sparse_iters=args.sparse_iters,
        noise_sigma=args.train_sigma,
        noise_seed=args.seed,
    )
    p, report = train(patches, cfg, init_udht(args.levels))
    save_model(args.out, p, seed=args.seed, epochs=args.epochs,
               corpus_hash=_corpus_hash(paths))
    report_path = args.report or (args.out + ".report.json")
    Path(report_path).write_text(json.dumps(report.entries, indent=2) + "\n")
    print(f"trained on {patches.shape[0]} patches from {len(paths)} images")
    print(f"epochs={args.epochs} minibatch={args.minibatch}")
    if report.entries:
        print(f"final_mean_loss={report.entries[-1]['mean_loss']:.6e}")
    print(f"model written to {args.out}")
    return 0


def _resolve_model(args):
    if args.udht:
        return init_udht(args.levels)
    if not args.model:
        raise CliError("need --model FILE or --udht")
    p, _ = load_model(args.model)
    return p


def _denoise_image(noisy, p, lam, iters, tol):
    cfg = IstaConfig(lam=lam, step=1.0, max_iters=iters, tol=tol)
    y, _ = ista(noisy, p, cfg)
    return forward(y, p)


def cmd_denoise(args):
    p = _resolve_model(args)
    clean = None
    if args.input:
        noisy = load_pgm(args.input)
        if args.clean:
            clean = load_pgm(args.clean)
    elif args.clean:
        clean = load_pgm(args.clean)
        noisy = add_awgn(clean, NoiseSpec(sigma=args.sigma, seed=args.seed))
    else:
        raise CliError("need --in NOISY.pgm or --clean CLEAN.pgm")
    try:
        out = _denoise_image(noisy, p, args.lam, args.iters, args.tol)
    except ValueError as exc:
        raise CliError(str(exc))
    if args.out:
        save_pgm(out, args.out)
    if clean is not None:
        print(f"psnr_noisy={psnr(clean, noisy):.4f} "
              f"psnr_denoised={psnr(clean, out):.4f}")
    return 0


def cmd_eval(args):
    paths = _list_pgms(args.images)
    models = []
    if args.udht:
        models.append(("udht", init_udht(args.levels)))
    for path in args.model or []:
        models.append((Path(path).stem, load_model(path)[0]))
    if not models:
        raise CliError("need at least one of --udht / --model FILE")
    names = [name for name, _ in models]
    header = ["image", "noisy"] + names
    rows = []
    for i, path in enumerate(paths):
        clean = load_pgm(path)
        noisy = add_awgn(clean, NoiseSpec(sigma=args.sigma, seed=args.seed + i))
        row = [path.name, f"{psnr(clean, noisy):.2f}"]
        for _, p in models:
            out = _denoise_image(noisy, p, args.lam, args.iters, args.tol)
            row.append(f"{psnr(clean, out):.2f}")
        rows.append(row)
    widths = [max(len(r[c]) for r in [header] + rows) for c in range(len(header))]
    for r in [header] + rows:
        print("  ".join(val.ljust(w) for val, w in zip(r, widths)).rstrip())
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nldict",
        description="lattice filter-bank dictionaries for sparse image denoising",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="learn dictionary parameters from images")
    t.add_argument("--images", required=True, help="directory of training PGMs")
    t.add_argument("--out", required=True, help="output model file")
    t.add_argument("--report", default=None, help="report JSON path")
    t.add_argument("--levels", type=int, default=4)
    t.add_argument("--epochs", type=int, default=10)
    t.add_argument("--minibatch", type=int, default=128)
    t.add_argument("--patches-per-image", type=int, default=256)
    t.add_argument("--patch-size", type=int, default=32)
    t.add_argument("--lr", type=float, default=0.01)
    t.add_argument("--lambda", dest="lam", type=float, default=0.1)
    t.add_argument("--sparse-mode", choices=("ista", "iht"), default="ista")
    t.add_argument("--k", type=int, default=0, help="budget for iht mode")
    t.add_argument("--sparse-iters", type=int, default=20)
    t.add_argument("--train-sigma", type=float, default=0.0,
                   help="corrupt training patches with this AWGN sigma")
    t.add_argument("--seed", type=int, default=0)
    t.set_defaults(func=cmd_train)

    d = sub.add_parser("denoise", help="denoise one image with ISTA")
    d.add_argument("--model", default=None, help="trained model file")
    d.add_argument("--udht", action="store_true",
                   help="use the parameter-free Haar baseline")
    d.add_argument("--levels", type=int, default=4)
    d.add_argument("--in", dest="input", default=None, help="noisy input PGM")
    d.add_argument("--clean", default=None,
                   help="clean reference (synthesizes the observation when "
                        "--in is absent)")
    d.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--lambda", dest="lam", type=float, default=0.1 * DEFAULT_SIGMA)
    d.add_argument("--iters", type=int, default=100)
    d.add_argument("--tol", type=float, default=1e-6)
    d.add_argument("--out", default=None, help="output PGM path")
    d.set_defaults(func=cmd_denoise)

    e = sub.add_parser("eval", help="PSNR table over a directory of images")
    e.add_argument("--images", required=True)
    e.add_argument("--model", action="append", default=None)
    e.add_argument("--udht", action="store_true")
    e.add_argument("--levels", type=int, default=4)
    e.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--lambda", dest="lam", type=float, default=0.1 * DEFAULT_SIGMA)
    e.add_argument("--iters", type=int, default=100)
    e.add_argument("--tol", type=float, default=1e-6)
    e.set_defaults(func=cmd_eval)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
