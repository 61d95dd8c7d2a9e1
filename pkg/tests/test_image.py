import numpy as np
import pytest

from nldict.image import (
    NoiseSpec,
    PgmFormatError,
    add_awgn,
    extract_patches,
    load_pgm,
    psnr,
    save_pgm,
)

SIGMA = 30.0 / 255.0


class TestPgm:
    def test_mapping_example(self, tmp_path):
        f = tmp_path / "t.pgm"
        f.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 128, 255, 64]))
        img = load_pgm(f)
        np.testing.assert_allclose(
            img, [[0.0, 128 / 255.0], [1.0, 64 / 255.0]], atol=0
        )

    def test_roundtrip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(80)
        for i in range(5):
            h, w = rng.integers(1, 40, size=2)
            raw = rng.integers(0, 256, size=(h, w), dtype=np.uint8)
            f = tmp_path / f"r{i}.pgm"
            f.write_bytes(b"P5\n%d %d\n255\n" % (w, h) + raw.tobytes())
            original = f.read_bytes()
            g = tmp_path / f"w{i}.pgm"
            save_pgm(load_pgm(f), g)
            assert g.read_bytes() == original

    def test_save_quantizes_and_clamps(self, tmp_path):
        f = tmp_path / "q.pgm"
        save_pgm(np.array([[-0.5, 0.5004], [2.0, 1.0]]), f)
        assert f.read_bytes() == b"P5\n2 2\n255\n" + bytes([0, 128, 255, 255])

    def test_ascii_variant_rejected(self, tmp_path):
        f = tmp_path / "a.pgm"
        f.write_bytes(b"P2\n2 2\n255\n0 1 2 3\n")
        with pytest.raises(PgmFormatError) as err:
            load_pgm(f)
        assert err.value.offset == 0

    def test_bad_maxval(self, tmp_path):
        f = tmp_path / "m.pgm"
        f.write_bytes(b"P5\n2 2\n100\n" + bytes(4))
        with pytest.raises(PgmFormatError) as err:
            load_pgm(f)
        assert "maxval" in str(err.value)

    def test_truncated_payload(self, tmp_path):
        f = tmp_path / "t.pgm"
        f.write_bytes(b"P5\n4 4\n255\n" + bytes(7))
        with pytest.raises(PgmFormatError) as err:
            load_pgm(f)
        assert "truncated" in str(err.value)
        assert err.value.offset == len(b"P5\n4 4\n255\n")

    def test_header_comments_allowed(self, tmp_path):
        f = tmp_path / "c.pgm"
        f.write_bytes(b"P5\n# a comment\n2 1 # inline\n255\n" + bytes([7, 9]))
        img = load_pgm(f)
        np.testing.assert_allclose(img, [[7 / 255.0, 9 / 255.0]])


class TestAwgn:
    def test_zero_sigma_is_identity(self):
        rng = np.random.default_rng(81)
        x = rng.random((16, 16))
        out = add_awgn(x, NoiseSpec(sigma=0.0, seed=3))
        np.testing.assert_array_equal(out, x)

    def test_sample_statistics(self):
        noisy = add_awgn(np.zeros((512, 512)), NoiseSpec(sigma=SIGMA, seed=0))
        assert abs(noisy.mean()) < 1e-3
        assert abs(noisy.std() - SIGMA) < 2e-3

    def test_noisy_psnr_near_theory(self):
        # 10*log10(1/sigma^2) = 18.59 dB at sigma = 30/255
        rng = np.random.default_rng(82)
        x = rng.random((256, 256))
        noisy = add_awgn(x, NoiseSpec(sigma=SIGMA, seed=5))
        assert psnr(x, noisy) == pytest.approx(18.59, abs=0.2)

    def test_deterministic(self):
        x = np.linspace(0, 1, 64).reshape(8, 8)
        a = add_awgn(x, NoiseSpec(sigma=0.2, seed=9))
        b = add_awgn(x, NoiseSpec(sigma=0.2, seed=9))
        np.testing.assert_array_equal(a, b)
        c = add_awgn(x, NoiseSpec(sigma=0.2, seed=10))
        assert np.any(c != a)

    def test_negative_sigma_rejected(self):
        with pytest.raises(ValueError):
            NoiseSpec(sigma=-1.0)


class TestPsnr:
    def test_identical_images(self):
        x = np.random.default_rng(83).random((8, 8))
        assert psnr(x, x) == float("inf")

    def test_closed_forms(self):
        z = np.zeros((10, 10))
        assert psnr(z, np.full((10, 10), 0.5)) == pytest.approx(6.0206, abs=1e-4)
        assert psnr(z, np.full((10, 10), 0.1)) == pytest.approx(20.0, abs=1e-9)

    def test_symmetry(self):
        rng = np.random.default_rng(84)
        a, b = rng.random((2, 12, 12))
        assert psnr(a, b) == psnr(b, a)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            psnr(np.zeros((4, 4)), np.zeros((4, 5)))


class TestPatches:
    def test_deterministic_corners(self):
        rng = np.random.default_rng(85)
        img = rng.random((64, 48))
        a = extract_patches(img, 32, 16, seed=4)
        b = extract_patches(img, 32, 16, seed=4)
        np.testing.assert_array_equal(a, b)
        assert a.shape == (32, 16, 16)

    def test_patch_equals_image_at_full_size(self):
        rng = np.random.default_rng(86)
        img = rng.random((32, 32))
        patches = extract_patches(img, 3, 32, seed=1)
        for p in patches:
            np.testing.assert_array_equal(p, img)

    def test_size_too_large(self):
        with pytest.raises(ValueError):
            extract_patches(np.zeros((16, 16)), 4, 17, seed=0)

    def test_corpus_count(self):
        rng = np.random.default_rng(87)
        images = [rng.random((64, 64)) for _ in range(5)]
        patches = [extract_patches(im, 256, 32, seed=i) for i, im in enumerate(images)]
        assert sum(p.shape[0] for p in patches) == 1280
