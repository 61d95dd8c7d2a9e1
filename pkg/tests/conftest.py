import time

import numpy as np
import pytest

from nldict.image import save_pgm

SIGMA = 30.0 / 255.0

# criterion-8 training recipe (Table-2 smallest case: 5 images x 256
# patches, 10 epochs, minibatch 128); lambda/lr tuned once during
# development; shared by the acceptance tests through trained_state
TRAIN_RECIPE = [
    "--levels", "4", "--epochs", "10", "--minibatch", "128",
    "--patches-per-image", "256", "--patch-size", "32",
    "--sparse-mode", "ista", "--lambda", "0.15", "--lr", "0.01",
    "--sparse-iters", "15", "--seed", "0",
]


def _gray(img):
    from skimage.color import rgb2gray
    from skimage.util import img_as_float

    img = img_as_float(img)
    if img.ndim == 3:
        img = rgb2gray(img)
    return np.clip(img, 0.0, 1.0)


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    """Natural-image PGM corpus: five training images plus a held-out
    256x256 test image, all from scikit-image's bundled data."""
    import skimage.data as sd

    root = tmp_path_factory.mktemp("corpus")
    train_dir = root / "train"
    train_dir.mkdir()
    sources = {
        "astronaut": _gray(sd.astronaut()),
        "coins": _gray(sd.coins()),
        "moon": _gray(sd.moon()),
        "page": _gray(sd.page()),
        "text": _gray(sd.text()),
    }
    for name, img in sources.items():
        save_pgm(img, train_dir / f"{name}.pgm")
    # held out: the center crop of camera at native resolution
    camera = _gray(sd.camera())[128:384, 128:384]
    clean_path = root / "camera256.pgm"
    save_pgm(camera, clean_path)
    small_dir = root / "small"
    small_dir.mkdir()
    save_pgm(sources["coins"][:64, :64], small_dir / "coins64.pgm")
    save_pgm(sources["moon"][:64, :64], small_dir / "moon64.pgm")
    return {"root": root, "train_dir": train_dir, "clean": clean_path,
            "small_dir": small_dir}


@pytest.fixture(scope="session")
def trained_state(corpus, tmp_path_factory):
    """One full criterion-8 training run through the CLI (a few minutes)."""
    from helpers import run_cli

    out_dir = tmp_path_factory.mktemp("model")
    model_path = out_dir / "cnld.model"
    tic = time.perf_counter()
    code, stdout = run_cli("train", "--images", str(corpus["train_dir"]),
                           "--out", str(model_path), *TRAIN_RECIPE)
    seconds = time.perf_counter() - tic
    assert code == 0, f"training CLI failed:\n{stdout}"
    return {"model_path": model_path, "seconds": seconds, "stdout": stdout,
            "out_dir": out_dir}
