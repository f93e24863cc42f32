import numpy as np

from bubbleseg.mtnet import AugmentConfig, IDENTITY, augment
from bubbleseg.synth import SynthConfig, generate
from bubbleseg.mtnet.targets import targets_from_annotation


def sample_triple(seed=0):
    img, ann = generate(SynthConfig(width=64, height=64, n_bubbles=(4, 6),
                                    seed=seed))
    y1, y2 = targets_from_annotation(ann)
    return img, y1, y2


def test_identity_draw_unchanged(rng):
    img, y1, y2 = sample_triple()
    out_img, out_y1, out_y2 = augment(img, y1, y2, rng, IDENTITY)
    np.testing.assert_array_equal(out_img, img)
    np.testing.assert_array_equal(out_y1, y1)
    np.testing.assert_array_equal(out_y2, y2)


def test_hflip_involution(rng):
    img, y1, y2 = sample_triple()
    flip_only = AugmentConfig(p_hflip=1.0, p_vflip=0, p_rotate=0, p_scale=0,
                              p_blur=0, p_noise=0, p_brightness=0, p_contrast=0)
    a = augment(img, y1, y2, rng, flip_only)
    b = augment(*a, rng, flip_only)
    np.testing.assert_array_equal(b[0], img)
    np.testing.assert_array_equal(b[1], y1)
    np.testing.assert_array_equal(b[2], y2)


def test_geometry_shared_photometrics_image_only(rng):
    img, y1, y2 = sample_triple(seed=3)
    photometric_only = AugmentConfig(p_hflip=0, p_vflip=0, p_rotate=0, p_scale=0)
    for _ in range(100):
        _, out_y1, out_y2 = augment(img, y1, y2, rng, photometric_only)
        np.testing.assert_array_equal(out_y1, y1)
        np.testing.assert_array_equal(out_y2, y2)


def test_masks_stay_binary_and_shape_preserved(rng):
    img, y1, y2 = sample_triple(seed=4)
    for _ in range(100):
        out_img, out_y1, out_y2 = augment(img, y1, y2, rng)
        assert out_img.shape == img.shape
        assert out_y1.dtype == bool and out_y2.dtype == bool
        assert out_img.min() >= 0.0 and out_img.max() <= 1.0
