import numpy as np
from PIL import Image

from embed_exporter.augment import RATIO_RANGE, SCALE_RANGE, random_resized_crop


def checker(width, height, seed=0):
    rng = np.random.default_rng(seed)
    return Image.fromarray(rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8))


def test_crop_parameters_pinned():
    assert SCALE_RANGE == (0.5, 1.0)
    assert RATIO_RANGE == (3.0 / 4.0, 4.0 / 3.0)


def test_output_size_and_mode():
    img = checker(97, 64)
    for trial in range(20):
        out = random_resized_crop(img, np.random.default_rng(trial), 32)
        assert out.size == (32, 32)
        assert out.mode == "RGB"


def test_seed_determinism():
    img = checker(80, 60, seed=3)
    a = random_resized_crop(img, np.random.default_rng(42), 24)
    b = random_resized_crop(img, np.random.default_rng(42), 24)
    assert a.tobytes() == b.tobytes()
    c = random_resized_crop(img, np.random.default_rng(43), 24)
    assert a.tobytes() != c.tobytes()


def test_full_scale_square_is_plain_resize():
    """scale=(1,1), ratio=(1,1) on a square source pins the crop to the frame."""
    img = checker(50, 50, seed=9)
    out = random_resized_crop(
        img, np.random.default_rng(0), 32, scale=(1.0, 1.0), ratio=(1.0, 1.0)
    )
    want = img.resize((32, 32), Image.Resampling.BILINEAR)
    assert out.tobytes() == want.tobytes()


def test_small_and_odd_sources_survive():
    # center-crop fallback must handle sources near or below the target size
    for w, h in ((5, 3), (1, 1), (2, 9), (31, 7)):
        img = checker(w, h, seed=w * 10 + h)
        for trial in range(10):
            out = random_resized_crop(img, np.random.default_rng(trial), 16)
            assert out.size == (16, 16)


def test_crops_vary_within_bounds_statistically():
    # distinct seeds should hit distinct source rectangles almost always
    img = checker(120, 90, seed=1)
    blobs = {
        random_resized_crop(img, np.random.default_rng(t), 20).tobytes()
        for t in range(30)
    }
    assert len(blobs) > 25
