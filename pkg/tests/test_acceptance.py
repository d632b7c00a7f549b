"""Acceptance suite: every criterion at its stated tolerance.

The heavyweight artifacts (trained desk model, mixed-epsilon attack set,
occlusion feature tables) are session-scoped fixtures shared by the
criteria. Everything is seeded, so reruns are reproducible. Expect the
full module to take tens of minutes on one core; per-criterion runtime
stays inside the budgets stated in each test.
"""

import time
from pathlib import Path

import numpy as np
import pytest

from segiqr import desknet_config_path
from segiqr.attacks import AttackParams, attack_batch
from segiqr.attribution import (
    extract_features,
    extract_features_multi,
    iqr,
    empirical_quantile,
    select_taps,
)
from segiqr.bench import accounting, run_cell
from segiqr.data import (
    images_to_pixels,
    pixels_to_images,
    read_batch_file,
    synth_dataset,
    write_batch_file,
)
from segiqr.data.reports import ReportCell, read_report, write_report
from segiqr.detector import FeatureDataset, GbtHyper, auc, evaluate, split_train_test, train_gbt
from segiqr.nn import (
    TrainHyper,
    build_network,
    evaluate_accuracy,
    load_arch_config,
    load_weights,
    save_weights,
    train,
    weights_to_bytes,
)
from segiqr.segmentation import (
    FelzParams,
    QuickshiftParams,
    SlicParams,
    connected_components,
    felzenszwalb,
    per_pixel,
    quickshift,
    read_label_maps,
    relabel_contiguous,
    slic,
    write_label_maps,
)
from segiqr.specs import ModeSpec, SegSpec, parse_segmentation_spec

from conftest import tiny_arch
from oracles import fd_input_gradient, iqr_scan, pairwise_auc, quantile_scan

FIXTURE_DIR = Path(__file__).parent / "fixtures" / "cifar_fixture"

TRAIN_SEED, TEST_SEED = 101, 202
TRAIN_N, TEST_N = 6400, 2600
ML_TAPS = dict(per_layer_count=100, last_n_layers=6, seed=11)
SPLIT_SEED = 5
EPS_GRID = (0.02, 0.06, 0.1)


def report(criterion: int, ok: bool, detail: str):
    print(f"[acceptance {criterion}] {'PASS' if ok else 'FAIL'}: {detail}", flush=True)
    assert ok, f"criterion {criterion}: {detail}"


def hwc(images):
    return images.transpose(0, 2, 3, 1)


@pytest.fixture(scope="session")
def desk_model():
    arch = load_arch_config(desknet_config_path())
    data = synth_dataset(TRAIN_N, seed=TRAIN_SEED)
    net = build_network(arch, seed=1)
    return train(net, data.images, data.labels,
                 TrainHyper(lr=0.02, momentum=0.9, epochs=4, batch_size=64, seed=7))


@pytest.fixture(scope="session")
def test_pool():
    return synth_dataset(TEST_N, seed=TEST_SEED)


@pytest.fixture(scope="session")
def mixed_fgsm(desk_model, test_pool):
    """1000 benign + 1000 adversarial images, epsilon thirds, byte-quantized
    like the file pipeline."""
    n = 1000
    imgs = test_pool.images[:n]
    labs = test_pool.labels[:n]
    adv = np.empty_like(imgs)
    for i, eps in enumerate(EPS_GRID):
        lo = i * n // 3
        hi = (i + 1) * n // 3 if i < 2 else n
        results, _ = attack_batch(desk_model, imgs[lo:hi], labs[lo:hi],
                                  AttackParams(method="fgsm", epsilon=eps))
        adv[lo:hi] = np.stack([r.image for r in results])
    adv = pixels_to_images(images_to_pixels(adv))
    return imgs, adv, labs


@pytest.fixture(scope="session")
def detection_aucs(desk_model, mixed_fgsm):
    """GBT test AUC per (segmentation, mode) on the mixed-epsilon set."""
    imgs, adv, _ = mixed_fgsm
    n = len(imgs)
    tap_sets = [select_taps(desk_model, "1d"),
                select_taps(desk_model, "output"),
                select_taps(desk_model, "multilayer", **ML_TAPS)]
    mode_names = ["1d", "10d", "multilayer"]
    out = {}
    for seg_name, mapper in (
        ("slic64", lambda im: slic(im, SlicParams(n_segments=64))),
        ("per-pixel", per_pixel),
    ):
        maps_b = [mapper(hwc(imgs)[i]) for i in range(n)]
        maps_a = [mapper(hwc(adv)[i]) for i in range(n)]
        feats_b = extract_features_multi(desk_model, imgs, maps_b, tap_sets)
        feats_a = extract_features_multi(desk_model, adv, maps_a, tap_sets)
        for mi, mode in enumerate(mode_names):
            x = np.stack([v.values for v in feats_b[mi]] + [v.values for v in feats_a[mi]])
            y = np.array([0] * n + [1] * n)
            train_ds, test_ds = split_train_test(FeatureDataset(x, y), 0.8, seed=SPLIT_SEED)
            model = train_gbt(train_ds, GbtHyper(trees=100, depth=3, lr=0.1, seed=0))
            out[(seg_name, mode)] = evaluate(model, test_ds).auc
    return out


class TestCriterion1ForwardPassBudget:
    def test_forward_pass_budget(self, desk_model):
        t0 = time.time()
        batch = read_batch_file(FIXTURE_DIR / "test_batch.bin")
        img = batch.images[:1]
        taps = select_taps(desk_model, "1d")

        desk_model.pass_counter.reset()
        extract_features(desk_model, img, [per_pixel(hwc(img)[0])], taps)
        per_pixel_passes = desk_model.pass_counter.value

        m32 = slic(hwc(img)[0], SlicParams(n_segments=32))
        desk_model.pass_counter.reset()
        extract_features(desk_model, img, [m32], taps)
        slic_passes = desk_model.pass_counter.value

        elapsed = time.time() - t0
        report(1, per_pixel_passes == 1025 and slic_passes <= 33 and elapsed < 60,
               f"per-pixel {per_pixel_passes} passes (want 1025), "
               f"slic-32 {slic_passes} (want <=33), {elapsed:.1f}s")


class TestCriterion2MemoryAccounting:
    def test_accounting_paper_numbers(self):
        one_tap = accounting((1024, 1) for _ in range(128))
        multi = accounting((1024, 3810) for _ in range(128))
        report(2, one_tap == 524_288 and multi == 128 * 1024 * 3810 * 4,
               f"per-pixel 1-tap batch {one_tap} bytes (want 524288), "
               f"3810-tap batch {multi} bytes (want {128 * 1024 * 3810 * 4})")

    def test_accounting_small_cases(self):
        assert accounting([(10, 10)]) == 400
        assert accounting([]) == 0


class TestCriterion3EfficiencyRatio:
    def test_slic32_time_quarter_of_per_pixel(self, desk_model, test_pool):
        t0 = time.time()
        images = test_pool.images[:512]
        mode = ModeSpec(mode="1d")
        slic_rec = run_cell(desk_model, images, parse_segmentation_spec("slic:n_segments=32"),
                            mode, reps=3, batch_size=128, workers=1)
        pp_rec = run_cell(desk_model, images, parse_segmentation_spec("per-pixel"),
                          mode, reps=3, batch_size=128, workers=1)
        elapsed = time.time() - t0
        ratio = slic_rec.wall_time_per_batch_s / pp_rec.wall_time_per_batch_s
        report(3, ratio <= 0.25 and elapsed < 1800,
               f"slic-32 {slic_rec.wall_time_per_batch_s:.2f}s vs per-pixel "
               f"{pp_rec.wall_time_per_batch_s:.2f}s per 128-image batch, "
               f"ratio {ratio:.3f} (want <=0.25), total {elapsed / 60:.1f} min")


class TestCriterion4AttackEfficacy:
    def test_attack_ordering(self, desk_model, test_pool):
        clean_acc = evaluate_accuracy(desk_model, test_pool.images, test_pool.labels)
        assert clean_acc >= 0.60, f"desk model clean accuracy {clean_acc:.3f} < 0.60"

        preds = np.concatenate([desk_model.predict(test_pool.images[s:s + 256])
                                for s in range(0, TEST_N, 256)])
        ok = np.flatnonzero(preds == test_pool.labels)[:512]
        assert len(ok) >= 512
        imgs, labs = test_pool.images[ok], test_pool.labels[ok]

        acc = {}
        for method, eps in (("fgsm", 0.02), ("fgsm", 0.1), ("pgd", 0.1)):
            _, summary = attack_batch(desk_model, imgs, labs,
                                      AttackParams(method=method, epsilon=eps, seed=3))
            acc[(method, eps)] = summary.accuracy
        ok_flag = (acc[("fgsm", 0.1)] <= 0.30
                   and acc[("pgd", 0.1)] <= acc[("fgsm", 0.1)]
                   and acc[("fgsm", 0.02)] >= acc[("fgsm", 0.1)])
        report(4, ok_flag,
               f"clean {clean_acc:.3f}; fgsm@0.02 {acc[('fgsm', 0.02)]:.3f}, "
               f"fgsm@0.1 {acc[('fgsm', 0.1)]:.3f} (want <=0.30), "
               f"pgd@0.1 {acc[('pgd', 0.1)]:.3f} (want <= fgsm@0.1)")


class TestCriterion5DetectionQuality:
    def test_auc_floor_and_dimensional_ordering(self, detection_aucs):
        a = detection_aucs
        checks = [a[("per-pixel", "10d")] >= 0.70, a[("slic64", "10d")] >= 0.70]
        for seg in ("per-pixel", "slic64"):
            checks.append(a[(seg, "multilayer")] >= a[(seg, "10d")] - 0.03)
            checks.append(a[(seg, "10d")] >= a[(seg, "1d")] - 0.03)
        detail = "; ".join(
            f"{seg}: 1d {a[(seg, '1d')]:.3f}, 10d {a[(seg, '10d')]:.3f}, "
            f"ml {a[(seg, 'multilayer')]:.3f}"
            for seg in ("per-pixel", "slic64"))
        report(5, all(checks), detail + " (want 10d>=0.70, ml>=10d-0.03, 10d>=1d-0.03)")


class TestCriterion6SegmentationVsLooGap:
    def test_auc_gap_within_five_points(self, detection_aucs):
        gap = abs(detection_aucs[("slic64", "10d")] - detection_aucs[("per-pixel", "10d")])
        report(6, gap <= 0.05,
               f"10-D AUC gap |slic64 - per-pixel| = {gap:.4f} (want <=0.05)")


class TestCriterion7OracleEquivalences:
    def test_quantile_and_iqr_vs_scan(self, rng):
        for _ in range(1000):
            n = int(rng.integers(1, 50))
            values = rng.normal(0, 1, n)
            if rng.random() < 0.4:
                values = np.round(values, 1)
            p = float(rng.random())
            assert empirical_quantile(values, p) == quantile_scan(list(values), p)
            assert iqr(values) == iqr_scan(list(values))

    def test_auc_vs_pairwise(self, rng):
        for _ in range(200):
            n = int(rng.integers(4, 80))
            labels = rng.integers(0, 2, n)
            if labels.min() == labels.max():
                labels[0] = 1 - labels[0]
            scores = np.round(rng.normal(0, 1, n), 1)
            assert auc(scores, labels) == pairwise_auc(list(scores), list(labels))

    def test_gradients_vs_finite_differences(self, rng):
        net = build_network(tiny_arch(), seed=21)
        x = rng.uniform(0.2, 0.8, (2, 3, 8, 8)).astype(np.float32)
        y = np.array([0, 2])
        g = net.input_gradient(x, y)
        flat = np.abs(g).ravel()
        picks = rng.choice(np.flatnonzero(flat > np.quantile(flat, 0.5)), 20, replace=False)
        coords = [np.unravel_index(i, g.shape) for i in picks]
        fd = fd_input_gradient(net, x, y, coords)
        worst = max(abs(g[c] - ref) / max(abs(ref), abs(g[c]), 1e-8)
                    for c, ref in fd.items())
        assert worst <= 1e-3

    def test_serialization_round_trips(self, rng, tmp_path):
        net = build_network(tiny_arch(), seed=4)
        save_weights(net, tmp_path / "w.sfw")
        again = load_weights(tmp_path / "w.sfw", net.arch)
        assert weights_to_bytes(again) == weights_to_bytes(net)

        batch = synth_dataset(6, seed=9)
        write_batch_file(tmp_path / "b.bin", batch.images, batch.labels)
        loaded = read_batch_file(tmp_path / "b.bin")
        write_batch_file(tmp_path / "b2.bin", loaded.images, loaded.labels)
        assert (tmp_path / "b.bin").read_bytes() == (tmp_path / "b2.bin").read_bytes()

        maps = [per_pixel(hwc(batch.images)[0]),
                slic(hwc(batch.images)[1], SlicParams(n_segments=9))]
        write_label_maps(tmp_path / "m.segl", maps)
        write_label_maps(tmp_path / "m2.segl", read_label_maps(tmp_path / "m.segl"))
        assert (tmp_path / "m.segl").read_bytes() == (tmp_path / "m2.segl").read_bytes()

        cells = [ReportCell("fgsm", "per-pixel", "1d", 0.728, 0.66, 200, 200)]
        write_report(tmp_path / "r.csv", cells)
        assert read_report(tmp_path / "r.csv") == cells
        report(7, True, "quantile/iqr scan x1000, auc pairwise x200, "
                        "gradient FD rel<=1e-3, serializations bit-exact")


class TestCriterion8StatisticalSeparation:
    def test_adversarial_iqr_mean_exceeds_benign(self, desk_model, test_pool):
        m = 620
        src = test_pool.images[1000:1000 + m]
        labs = test_pool.labels[1000:1000 + m]
        results, _ = attack_batch(desk_model, src, labs,
                                  AttackParams(method="fgsm", epsilon=0.1))
        successes = [i for i, r in enumerate(results) if r.success][:520]
        assert len(successes) >= 500, f"only {len(successes)} successful attacks"
        benign = src[successes]
        adv = pixels_to_images(images_to_pixels(
            np.stack([results[i].image for i in successes])))
        taps = select_taps(desk_model, "1d")
        maps = [per_pixel(hwc(benign)[i]) for i in range(len(successes))]
        fb = extract_features(desk_model, benign, maps, taps)
        fa = extract_features(desk_model, adv, maps, taps)
        mean_b = float(np.mean([v.values[0] for v in fb]))
        mean_a = float(np.mean([v.values[0] for v in fa]))
        report(8, mean_a > mean_b,
               f"mean 1-D IQR over {len(successes)} pairs: adversarial {mean_a:.5f} "
               f"> benign {mean_b:.5f}")


class TestCriterion9SegmentationInvariants:
    def assert_partition(self, label_map):
        label_map.validate()
        comp, count = connected_components(label_map.labels)
        return count

    def test_invariants(self, rng):
        # analytic cases first
        uniform = np.full((16, 16, 3), 0.5, dtype=np.float32)
        assert felzenszwalb(uniform, FelzParams(scale=1.0, sigma=0.0, min_size=1)).segment_count == 1
        assert slic(uniform, SlicParams(n_segments=1)).segment_count == 1
        half = np.zeros((32, 32, 3), dtype=np.float32)
        half[:, 16:] = 1.0
        assert felzenszwalb(half, FelzParams(scale=100.0, sigma=0.0, min_size=10)).segment_count == 2
        blocks = slic(np.full((32, 32, 3), 0.25, dtype=np.float32), SlicParams(n_segments=4))
        assert (np.sort(blocks.pixel_counts()) == 256).all()

        checks = 0

        # relabel preserves partitions and contiguity
        for _ in range(4000):
            h, w = rng.integers(1, 8, 2)
            raw = rng.integers(-9, 9, (h, w))
            m = relabel_contiguous(raw)
            m.validate()
            before = raw.ravel()
            after = m.labels.ravel()
            assert len(np.unique(before)) == m.segment_count
            assert len(np.unique(np.stack([before, after], axis=1), axis=0)) == m.segment_count
            checks += 1

        # per-pixel maps on random shapes
        for _ in range(2000):
            h, w = rng.integers(1, 9, 2)
            img = rng.uniform(0, 1, (h, w, 3)).astype(np.float32)
            m = per_pixel(img)
            m.validate()
            assert m.segment_count == h * w
            checks += 1

        # felzenszwalb: partition, min_size, 4-connectivity
        for _ in range(1200):
            h, w = rng.integers(2, 9, 2)
            img = rng.uniform(0, 1, (h, w, 3)).astype(np.float32)
            min_size = int(rng.integers(1, 4))
            m = felzenszwalb(img, FelzParams(scale=float(rng.choice([0.1, 1, 10])),
                                             sigma=float(rng.choice([0.0, 0.6])),
                                             min_size=min_size))
            m.validate()
            assert m.pixel_counts().min() >= min(min_size, h * w)
            assert self.assert_partition(m) == m.segment_count  # connected segments
            checks += 1

        # slic: count bounds and connectivity
        for _ in range(1200):
            h = int(rng.integers(4, 13))
            w = int(rng.integers(4, 13))
            img = rng.uniform(0, 1, (h, w, 3)).astype(np.float32)
            k = int(rng.integers(1, min(h * w, 17)))
            m = slic(img, SlicParams(n_segments=k))
            m.validate()
            assert 1 <= m.segment_count <= k
            assert self.assert_partition(m) == m.segment_count
            checks += 1

        # quickshift: partition validity
        for _ in range(1000):
            h, w = rng.integers(2, 8, 2)
            img = rng.uniform(0, 1, (h, w, 3)).astype(np.float32)
            m = quickshift(img, QuickshiftParams(sigma=0.0,
                                                 max_dist=float(rng.choice([3, 8, 15])),
                                                 kernel_size=3.0))
            m.validate()
            checks += 1

        # quickshift monotonicity in max_dist
        for _ in range(200):
            img = rng.uniform(0, 1, (8, 8, 3)).astype(np.float32)
            counts = [quickshift(img, QuickshiftParams(sigma=0.0, max_dist=d,
                                                       kernel_size=3.0)).segment_count
                      for d in (4.0, 8.0, 16.0)]
            assert counts[0] >= counts[1] >= counts[2]
            checks += 3

        report(9, checks >= 10_000,
               f"{checks} randomized partition/contiguity/monotonicity checks "
               "plus uniform-image and half-split analytic cases")
