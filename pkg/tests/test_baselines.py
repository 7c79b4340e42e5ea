import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cellmix.baselines import RectRegion, apply_to_batch, cutmix, cutout, mixup, random_region
from cellmix.errors import DomainError, StructuralError
from cellmix.rng import Rng

Y0, Y1 = np.array([1.0, 0.0]), np.array([0.0, 1.0])


def test_mixup_half_constant():
    img, lab = mixup(np.zeros((1, 4, 4)), np.ones((1, 4, 4)), Y0, Y1, 0.5)
    assert (img == 0.5).all()
    assert lab.tolist() == [0.5, 0.5]


def test_mixup_endpoints_exact():
    gen = np.random.default_rng(0)
    x1 = gen.standard_normal((3, 5, 5)).astype(np.float32)
    x1[0, 0, 0] = -0.0
    x2 = gen.standard_normal((3, 5, 5)).astype(np.float32)
    img, lab = mixup(x1, x2, Y0, Y1, 1.0)
    assert img.tobytes() == x1.tobytes() and lab.tolist() == Y0.tolist()
    img, lab = mixup(x1, x2, Y0, Y1, 0.0)
    assert img.tobytes() == x2.tobytes() and lab.tolist() == Y1.tolist()


def test_mixup_label_weights():
    _, lab = mixup(np.zeros((1, 2, 2)), np.zeros((1, 2, 2)), Y0, Y1, 0.3)
    np.testing.assert_allclose(lab, [0.3, 0.7], atol=1e-7)


@settings(max_examples=50, deadline=None)
@given(lam=st.floats(0, 1), seed=st.integers(0, 1000))
def test_mixup_envelope(lam, seed):
    gen = np.random.default_rng(seed)
    x1, x2 = gen.random((2, 3, 6, 6), dtype=np.float32)
    img, lab = mixup(x1, x2, Y0, Y1, lam)
    assert (img >= np.minimum(x1, x2)).all() and (img <= np.maximum(x1, x2)).all()
    assert abs(lab.sum() - 1) < 1e-6


def test_mixup_errors():
    with pytest.raises(StructuralError):
        mixup(np.zeros((1, 2, 2)), np.zeros((1, 3, 3)), Y0, Y1, 0.5)
    with pytest.raises(DomainError):
        mixup(np.zeros((1, 2, 2)), np.zeros((1, 2, 2)), Y0, Y1, 1.5)


def test_cutout_cases():
    x = np.ones((2, 4, 4), dtype=np.float32)
    assert (cutout(x, RectRegion(0, 0, 4, 4)) == 0).all()
    one = cutout(x, RectRegion(1, 2, 1, 1))
    assert one[:, 1, 2].tolist() == [0, 0] and one.sum() == 2 * 16 - 2
    half = cutout(np.zeros((1, 4, 4)), RectRegion(0, 0, 2, 2), fill=0.5)
    assert (half[0, :2, :2] == 0.5).all() and half.sum() == 2.0
    assert (x == 1).all()  # input untouched


def test_region_bounds():
    with pytest.raises(DomainError):
        cutout(np.zeros((1, 4, 4)), RectRegion(3, 3, 2, 2))
    with pytest.raises(DomainError):
        cutmix(np.zeros((1, 4, 4)), np.zeros((1, 4, 4)), Y0, Y1, RectRegion(0, 0, 0, 2))


def test_cutmix_cases():
    x1, x2 = np.zeros((1, 4, 4)), np.ones((1, 4, 4))
    img, lab = cutmix(x1, x2, Y0, Y1, RectRegion(0, 0, 4, 4))
    assert (img == 1).all() and lab.tolist() == [0.0, 1.0]
    img, lab = cutmix(x1, x2, Y0, Y1, RectRegion(2, 0, 2, 2))
    np.testing.assert_allclose(lab, [0.75, 0.25])
    _, lab = cutmix(x1, x2, Y0, Y1, RectRegion(0, 0, 1, 1))
    np.testing.assert_allclose(lab[0], 1 - 1 / 16, atol=1e-7)


def test_random_region_valid_and_covers():
    rng = Rng(1)
    seen_h = set()
    for _ in range(2000):
        r = random_region(5, 7, rng)
        r.check(5, 7)
        seen_h.add(r.height)
    assert seen_h == {1, 2, 3, 4, 5}


@pytest.mark.parametrize("method", ["mixup", "cutout", "cutmix"])
def test_apply_to_batch_shapes(method):
    gen = np.random.default_rng(0)
    imgs = gen.random((4, 3, 8, 8), dtype=np.float32)
    onehot = np.eye(2, dtype=np.float32)[[0, 1, 1, 0]]
    out, soft, partners = apply_to_batch(method, imgs, onehot, Rng(2))
    assert out.shape == imgs.shape and soft.shape == onehot.shape
    np.testing.assert_allclose(soft.sum(axis=1), 1.0, atol=1e-6)
    assert sorted(partners) == [0, 1, 2, 3]
