"""Acceptance criteria: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the verdict lines
bypass output capture.
"""

import itertools
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from cellmix.baselines import RectRegion, cutmix, mixup, random_region
from cellmix.cli import main
from cellmix.curriculum import DEFAULT_FIX_RATIOS, DEFAULT_PATCH_SIZES, Policy
from cellmix.rng import Rng
from cellmix.shuffle import (
    FixPositionMask,
    ShuffleMode,
    augment_batch,
    build_provenance,
    draw_fix_mask,
    fixed_count,
    in_place_shuffle,
    soft_labels,
)
from cellmix.sim import AugConfig, SyntheticLearner, run_controller, simulate_training
from cellmix.tensor import ImageBatch, LabelBatch, PatchGrid

SIDE = 384
TOL = 1e-6


@pytest.fixture
def verdict(capsys):
    def report(number, title, ok, detail=""):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] AC{number:02d} {title}" + (f" ({detail})" if detail else ""))
        assert ok, f"AC{number} {title}: {detail}"

    return report


def pixel_mask(grid: PatchGrid, indices) -> np.ndarray:
    """Boolean (H, W) map of the pixels covered by the given patch indices, from coordinates."""
    out = np.zeros((grid.height, grid.width), dtype=bool)
    p = grid.patch_size
    for i in indices:
        y, x = (i // grid.cols) * p, (i % grid.cols) * p
        out[y:y + p, x:x + p] = True
    return out


def patches_by_position(images: np.ndarray, p: int) -> np.ndarray:
    """(n, B) array of opaque byte records, one per patch, built with explicit slicing."""
    B, C, H, W = images.shape
    cols = W // p
    n = (H // p) * cols
    rec = np.empty((n, B), dtype=f"V{C * p * p * 4}")
    for i in range(n):
        y, x = (i // cols) * p, (i % cols) * p
        block = np.ascontiguousarray(images[:, :, y:y + p, x:x + p]).reshape(B, -1)
        rec[i] = block.view(f"V{C * p * p * 4}")[:, 0]
    return rec


@pytest.fixture(scope="module")
def randomized_runs():
    """1000 randomized shuffles; returns failure counts for criteria 1 and 2."""
    rng = Rng(20240101)
    gen = np.random.default_rng(7)
    fixed_failures = conservation_failures = 0
    runs = 1000
    for _ in range(runs):
        B = 1 + rng.below(8)
        p = DEFAULT_PATCH_SIZES[rng.below(len(DEFAULT_PATCH_SIZES))]
        beta = rng.random()
        mode = ShuffleMode.GROUP if rng.below(2) == 0 else ShuffleMode.SPLIT
        batch = ImageBatch(gen.random((B, 1, SIDE, SIDE), dtype=np.float32))
        grid = PatchGrid(SIDE, SIDE, p)
        mask = draw_fix_mask(grid.n, beta, rng)
        out, _ = in_place_shuffle(batch, grid, mask, mode, rng)

        keep = pixel_mask(grid, mask.fixed)
        if not np.array_equal(out.data[:, :, keep].view(np.uint32), batch.data[:, :, keep].view(np.uint32)):
            fixed_failures += 1

        rel = list(mask.relation)
        before = patches_by_position(batch.data, p)[rel]
        after = patches_by_position(out.data, p)[rel]
        if not np.array_equal(np.sort(before, axis=1), np.sort(after, axis=1)):
            conservation_failures += 1
    return runs, fixed_failures, conservation_failures


def test_ac01_fixed_token_preservation(randomized_runs, verdict):
    runs, failures, _ = randomized_runs
    verdict(1, "fixed-position patches byte-identical", failures == 0, f"{runs} runs, {failures} failures")


def test_ac02_per_position_conservation(randomized_runs, verdict):
    runs, _, failures = randomized_runs
    verdict(2, "per-position patch multisets conserved", failures == 0, f"{runs} runs, {failures} failures")


def test_ac03_group_soft_labels(verdict):
    rng = Rng(3)
    gen = np.random.default_rng(3)
    worst, cases = 0.0, 0
    for _ in range(1000):
        B = 2 + rng.below(7)
        cls = 2 + rng.below(4)
        p = (96, 48, 32, 16)[rng.below(4)]
        beta = rng.random()
        batch = ImageBatch(gen.random((B, 1, 96, 96), dtype=np.float32))
        labels = LabelBatch(np.array([rng.below(cls) for _ in range(B)]), cls)
        out = augment_batch(batch, labels, beta, p, ShuffleMode.GROUP, 1.0, rng)
        src = out.provenance.source
        f = Fraction(out.mask.m, out.mask.n)
        rel = list(out.mask.relation)
        for s in range(B):
            donor = int(src[s, rel[0]]) if rel else s
            eq8 = [f * (labels.labels[s] == c) + (1 - f) * (labels.labels[donor] == c) for c in range(cls)]
            recount = [Fraction(int((labels.labels[src[s]] == c).sum()), out.mask.n) for c in range(cls)]
            assert eq8 == recount
            got = out.soft_labels.weights[s].astype(np.float64)
            worst = max(worst, float(np.abs(got - np.array(eq8, dtype=float)).max()))
        cases += 1
    verdict(3, "group soft label = f*y_f + (1-f)*y_r, f = m/n", worst <= TOL, f"{cases} cases, max error {worst:.2e}")


def test_ac04_split_mode_exhaustive(verdict):
    perms = list(itertools.permutations(range(3)))
    instances = mismatches = 0
    for fixed_size in range(5):
        for fixed in itertools.combinations(range(4), fixed_size):
            mask = FixPositionMask(4, fixed_size / 4, fixed)
            r = 4 - fixed_size
            for assignment in itertools.product(range(3), repeat=3):
                labels = LabelBatch(np.array(assignment), 3)
                for combo in itertools.product(perms, repeat=r):
                    prov = build_provenance(mask, 3, "split", combo)
                    got = soft_labels(prov, labels).weights
                    # brute force: walk every output patch and credit its donor's class
                    want = np.zeros((3, 3))
                    for s in range(3):
                        for i in range(4):
                            donor = s if i in fixed else combo[mask.relation.index(i)][s]
                            want[s, assignment[donor]] += 0.25
                    instances += 1
                    if not np.array_equal(got.astype(np.float64), want):
                        mismatches += 1
    verdict(4, "split-mode labels match per-patch counting", mismatches == 0, f"{instances} instances, {mismatches} mismatches")


def test_ac05_mask_arithmetic(verdict):
    bad = []
    for n in (4, 16, 36, 64, 576):
        for tenth in range(11):
            beta = tenth / 10
            exact = math.floor(Fraction(n * tenth, 10) + Fraction(1, 2))
            mask = draw_fix_mask(n, beta, Rng(n * 100 + tenth))
            if not (fixed_count(n, beta) == exact == mask.m == len(set(mask.fixed))):
                bad.append((n, beta))
    gen = np.random.default_rng(5)
    batch = ImageBatch(gen.random((5, 2, 64, 64), dtype=np.float32))
    grid = PatchGrid(64, 64, 16)
    for mode in ShuffleMode:
        out, prov = in_place_shuffle(batch, grid, draw_fix_mask(16, 1.0, Rng(1)), mode, Rng(2))
        if out.data.tobytes() != batch.data.tobytes() or not prov.is_identity():
            bad.append(("beta=1", mode.value))
        mask0 = draw_fix_mask(16, 0.0, Rng(1))
        out, prov = in_place_shuffle(batch, grid, mask0, mode, Rng(2))
        if mask0.fixed or len(mask0.relation) != 16:
            bad.append(("beta=0 mask", mode.value))
        for i in range(16):
            if sorted(prov.source[:, i]) != list(range(5)):
                bad.append(("beta=0 column", mode.value, i))
        if mode is ShuffleMode.GROUP:
            donors = prov.source[:, 0]
            if out.data.tobytes() != batch.data[donors].tobytes():
                bad.append(("beta=0 whole-image swap", mode.value))
    verdict(5, "m = floor(n*beta + 0.5); beta 0/1 boundaries", not bad, f"55 (n, beta) pairs, failures {bad[:3]}")


def test_ac06_golden_traces(verdict):
    hold = run_controller([3, 5, 3, 5, 3], "hold", 4.0).k_sequence
    back = run_controller([3, 5, 3, 5, 3], "back", 4.0).k_sequence
    ok = hold == [1, 1, 2, 2, 3] and back == [1, 0, 1, 0, 1]
    verdict(6, "controller golden traces", ok, f"hold {hold}, back {back}")


POLICIES = ["hold", "back", "linear", "reverse", "random", "loop", "linear-decay", "fixed-patch:48", "fixed-ratio:0.7"]


def test_ac07_schedule_membership(verdict):
    learner = SyntheticLearner(a=8.0, tau=3000.0, sigma=2.0)
    problems = []
    for policy in POLICIES:
        pinned = Policy.parse(policy)
        sizes = {int(pinned.value)} if pinned.kind == "fixed-patch" else set(DEFAULT_PATCH_SIZES)
        ratios = {pinned.value} if pinned.kind == "fixed-ratio" else set(DEFAULT_FIX_RATIOS)
        report = simulate_training(learner, policy, 4.0, 10_000, None, seed=11)
        assert len(report) == 10_000
        for r in report.records:
            clamped_p = DEFAULT_PATCH_SIZES[min(r.k, 6)] if pinned.kind != "fixed-patch" else int(pinned.value)
            clamped_f = DEFAULT_FIX_RATIOS[min(r.k, 4)] if pinned.kind != "fixed-ratio" else pinned.value
            if r.patch_size not in sizes or r.fix_ratio not in ratios or not 0 <= r.k <= 6 \
                    or (r.patch_size, r.fix_ratio) != (clamped_p, clamped_f):
                problems.append((policy, r))
                break
        # a short run with augmentation exercises the full pipeline at each emitted lesson
        aug = AugConfig(batch_size=2, channels=1, side=SIDE, classes=2, trigger_prob=1.0)
        short = simulate_training(SyntheticLearner(8.0, 5.0, 1.0), policy, 4.0, 40, aug, seed=12)
        if not all(r.triggered for r in short.records):
            problems.append((policy, "augmentation"))
    verdict(7, "every emitted (p, f) in the configured schedules", not problems,
            f"{len(POLICIES)} policies x 10000 steps, problems {problems[:2]}")


def test_ac08_cli_determinism(tmp_path, verdict):
    assert main(["gen", "--seed", "7", "--out", str(tmp_path / "in")]) == 0
    files = {}
    for run in ("r1", "r2"):
        assert main(["augment", "--images", str(tmp_path / "in.images.tbf"), "--labels", str(tmp_path / "in.labels.tbf"),
                     "--seed", "99", "--patch-size", "16", "--beta", "0.9", "--mode", "group", "--trigger-prob", "1",
                     "--out", str(tmp_path / run)]) == 0
        assert main(["simulate", "--seed", "5", "--steps", "25", "--sigma", "1.0", "--batch-size", "2",
                     "--out", str(tmp_path / f"{run}.csv"), "--summary", str(tmp_path / f"{run}.json")]) == 0
        files[run] = [
            (tmp_path / f"{run}.{s}").read_bytes()
            for s in ("images.tbf", "soft.tbf", "provenance.tbf", "csv", "json")
        ]
    verdict(8, "augment and simulate byte-identical across runs", files["r1"] == files["r2"], "5 output files compared")


def test_ac09_baselines(verdict):
    rng = Rng(9)
    H, W = 37, 53
    x1 = np.zeros((1, H, W), dtype=np.float32)
    x2 = np.ones((1, H, W), dtype=np.float32)
    y1, y2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    bad = 0
    for _ in range(100):
        region = random_region(H, W, rng)
        img, lab = cutmix(x1, x2, y1, y2, region)
        pasted = int(img.sum())
        if lab[0] != np.float32(1 - Fraction(pasted, H * W)) or lab[1] != np.float32(Fraction(pasted, H * W)):
            bad += 1
    gen = np.random.default_rng(9)
    a, b = gen.standard_normal((2, 3, 16, 16)).astype(np.float32)
    ia, la = mixup(a, b, y1, y2, 1.0)
    ib, lb = mixup(a, b, y1, y2, 0.0)
    passthrough = ia.tobytes() == a.tobytes() and ib.tobytes() == b.tobytes() and la.tolist() == y1.tolist() and lb.tolist() == y2.tolist()
    verdict(9, "CutMix weight = pixel-area ratio; Mixup endpoints exact", bad == 0 and passthrough,
            f"100 regions, {bad} mismatches, mixup passthrough {passthrough}")


def test_ac10_degenerate_identities(verdict):
    gen = np.random.default_rng(10)
    batch = ImageBatch(gen.random((6, 3, 64, 64), dtype=np.float32))
    labels = LabelBatch(np.array([0, 1, 2, 0, 1, 2]), 3)
    single = ImageBatch(batch.data[:1])
    cases = {
        "beta=1": augment_batch(batch, labels, 1.0, 16, "split", 1.0, Rng(1)),
        "B=1": augment_batch(single, LabelBatch(np.array([2]), 3), 0.0, 16, "split", 1.0, Rng(1)),
        "trigger_prob=0": augment_batch(batch, labels, 0.0, 16, "group", 0.0, Rng(1)),
    }
    failed = []
    for name, out in cases.items():
        src = single if name == "B=1" else batch
        lab = LabelBatch(np.array([2]), 3) if name == "B=1" else labels
        if out.images.data.tobytes() != src.data.tobytes() or not out.provenance.is_identity() \
                or out.soft_labels.weights.tolist() != lab.one_hot().tolist():
            failed.append(name)
    verdict(10, "beta=1, B=1, trigger_prob=0 are bit-exact passthroughs", not failed, f"failed: {failed or 'none'}")


def test_ac11_performance(verdict):
    gen = np.random.default_rng(11)
    batch = ImageBatch(gen.random((8, 3, SIDE, SIDE), dtype=np.float32))
    labels = LabelBatch(np.arange(8) % 2, 2)
    rng = Rng(11)
    times = []
    for _ in range(15):
        start = time.perf_counter()
        augment_batch(batch, labels, 0.9, 16, ShuffleMode.GROUP, 1.0, rng)
        times.append(time.perf_counter() - start)
    median_ms = 1000 * float(np.median(times))
    # soft target: reported, never failed
    verdict(11, "8x3x384x384 batch, p=16, group (soft target <= 100 ms)", True,
            f"median {median_ms:.1f} ms, {'within' if median_ms <= 100 else 'OVER'} target")
