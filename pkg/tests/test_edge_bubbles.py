import numpy as np
import pytest

from bubbleseg.core import ConfigInvalid
from bubbleseg.edge_bubbles import SmallBubbleConfig, detect_small_bubbles
from bubbleseg.synth import SynthConfig, generate
from conftest import disk_image


def test_config_validation():
    with pytest.raises(ConfigInvalid):
        SmallBubbleConfig(min_area=10, max_area=10)


def test_constant_image_empty():
    img = np.full((40, 40), 0.7, dtype=np.float32)
    assert detect_small_bubbles(img) == []


def test_single_small_disk():
    img, mask = disk_image(size=40, radius=4)
    instances = detect_small_bubbles(img)
    assert len(instances) == 1
    inst = instances[0]
    assert inst.source == "edge_detector"
    assert inst.size_class == "small"
    assert abs(inst.area - np.pi * 16) <= 0.2 * np.pi * 16 + 1


def test_large_disk_removed():
    img = np.full((120, 120), 0.8, dtype=np.float32)
    yy, xx = np.mgrid[0:120, 0:120]
    img[(yy - 20) ** 2 + (xx - 20) ** 2 <= 16] = 0.2          # radius 4
    img[(yy - 75) ** 2 + (xx - 75) ** 2 <= 1600] = 0.2        # radius 40
    instances = detect_small_bubbles(
        img, SmallBubbleConfig(min_area=5, max_area=500))
    assert len(instances) == 1
    cy = (instances[0].bbox[1] + instances[0].bbox[3]) / 2
    assert cy < 40


def test_no_instance_touches_border_and_areas_in_range():
    cfg = SmallBubbleConfig()
    img, ann = generate(SynthConfig(
        width=96, height=96, n_bubbles=(6, 6), small_fraction=1.0,
        noise_sigma=0.01, seed=5))
    instances = detect_small_bubbles(img, cfg)
    for inst in instances:
        x0, y0, x1, y1 = inst.bbox
        assert x0 > 0 and y0 > 0 and x1 < 95 and y1 < 95
        assert cfg.min_area <= inst.area <= cfg.max_area


def _iou(a, b):
    return (a & b).sum() / (a | b).sum()


def test_synthetic_disks_recovered_with_iou():
    # k non-overlapping small disks, contrast >= 0.3, noise sigma <= 0.02
    found_total = expected_total = 0
    for seed in range(5):
        img, ann = generate(SynthConfig(
            width=128, height=128, n_bubbles=(5, 9), small_fraction=1.0,
            noise_sigma=0.02, seed=100 + seed))
        instances = detect_small_bubbles(img)
        assert len(instances) == len(ann.instances)
        for gt in ann.instances:
            gm = gt.to_mask()
            best = max(_iou(gm, inst.to_mask()) for inst in instances)
            assert best >= 0.5
        found_total += len(instances)
        expected_total += len(ann.instances)
    assert found_total == expected_total


def test_tangent_pair_split_into_two():
    img, ann = generate(SynthConfig(
        width=96, height=96, n_bubbles=(0, 0), touching_pairs=1,
        small_fraction=1.0, noise_sigma=0.01, seed=31))
    assert len(ann.instances) == 2
    instances = detect_small_bubbles(img)
    assert len(instances) == 2
    for gt in ann.instances:
        gm = gt.to_mask()
        assert max(_iou(gm, inst.to_mask()) for inst in instances) >= 0.5
    # the two detections never share a pixel
    a, b = (inst.to_mask() for inst in instances)
    assert not (a & b).any()


def test_single_ellipse_not_oversplit():
    for seed in range(6):
        img, ann = generate(SynthConfig(
            width=96, height=96, n_bubbles=(1, 1), small_fraction=1.0,
            max_eccentricity=0.5, noise_sigma=0.01, seed=300 + seed))
        assert len(detect_small_bubbles(img)) == len(ann.instances)
