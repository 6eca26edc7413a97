import hashlib

import numpy as np
import pytest
from PIL import Image

from embed_exporter import (
    DatasetLayoutError,
    ExportJob,
    MissingTemplate,
    PaletteEncoder,
    TemplateError,
    export_bundle,
    load_templates_general,
    load_templates_specific,
    read_export,
    scan_image_folder,
    zero_shot_accuracy,
)
from embed_exporter.palette import make_image_folder


def specific_templates(names):
    return {n: [f"a close-up photo of the small flower {n}."] for n in names}


def small_job(ds_root, names, out, views=3, seed=0, general=None, specific=None):
    return ExportJob(
        dataset=ds_root,
        out=out,
        templates_general=general or ["a photo of a {}."],
        templates_specific=specific or specific_templates(names),
        views=views,
        seed=seed,
    )


def test_missing_template_names_the_class(tiny_dataset, tmp_path):
    root, names = tiny_dataset
    specific = specific_templates(names)
    del specific[names[2]]
    job = small_job(root, names, tmp_path / "b", specific=specific)
    with pytest.raises(MissingTemplate, match=names[2]):
        export_bundle(job)


def test_single_view_exports_originals_only(tiny_dataset, tmp_path):
    root, names = tiny_dataset
    summary = export_bundle(small_job(root, names, tmp_path / "b", views=1))
    assert summary.num_views == 1
    _, items = scan_image_folder(root)
    _, _, _, samples = read_export(tmp_path / "b")
    enc = PaletteEncoder()
    for item, (label, views) in zip(items, samples):
        assert label == item.label
        with Image.open(item.path) as img:
            want = enc.encode_image(img.convert("RGB"))
        np.testing.assert_array_equal(views[0], want.astype(np.float32))


def test_duplicate_templates_match_single(tiny_dataset, tmp_path):
    root, names = tiny_dataset
    export_bundle(small_job(root, names, tmp_path / "one",
                            general=["a photo of a {}."]))
    export_bundle(small_job(root, names, tmp_path / "two",
                            general=["a photo of a {}.", "a photo of a {}."]))
    one = (tmp_path / "one" / "text_gen.f32").read_bytes()
    two = (tmp_path / "two" / "text_gen.f32").read_bytes()
    assert one == two


def test_same_seed_means_identical_samples(tiny_dataset, tmp_path):
    root, names = tiny_dataset
    digests = []
    for run in ("r1", "r2"):
        export_bundle(small_job(root, names, tmp_path / run, views=4, seed=9))
        blob = (tmp_path / run / "samples.bin").read_bytes()
        digests.append(hashlib.sha256(blob).hexdigest())
    assert digests[0] == digests[1]

    export_bundle(small_job(root, names, tmp_path / "r3", views=4, seed=10))
    blob = (tmp_path / "r3" / "samples.bin").read_bytes()
    assert hashlib.sha256(blob).hexdigest() != digests[0]


def test_decode_failure_skips_without_shifting_later_samples(tmp_path):
    names = make_image_folder(tmp_path / "clean", num_classes=3, per_class=2, seed=21)
    make_image_folder(tmp_path / "broken", num_classes=3, per_class=2, seed=21)

    _, items = scan_image_folder(tmp_path / "broken")
    victim = 2  # middle of the scan order
    items[victim].path.write_bytes(b"not a png at all")

    export_bundle(small_job(tmp_path / "clean", names, tmp_path / "cb"))
    summary = export_bundle(small_job(tmp_path / "broken", names, tmp_path / "bb"))

    assert summary.skipped == [items[victim].path.name]
    meta, _, _, broken = read_export(tmp_path / "bb")
    _, _, _, clean = read_export(tmp_path / "cb")
    assert meta.num_samples == len(clean) - 1
    assert f"skipped=1:{items[victim].path.name}" in meta.provenance

    # later items keep their per-index rng, so rows match the clean export
    for i, (label, views) in enumerate(broken):
        src = i if i < victim else i + 1
        assert label == clean[src][0]
        np.testing.assert_array_equal(views, clean[src][1])


def test_all_images_unreadable_rejected(tmp_path):
    names = make_image_folder(tmp_path / "ds", num_classes=2, per_class=1, seed=3)
    _, items = scan_image_folder(tmp_path / "ds")
    for item in items:
        item.path.write_bytes(b"junk")
    with pytest.raises(DatasetLayoutError, match="decode"):
        export_bundle(small_job(tmp_path / "ds", names, tmp_path / "b"))


def test_text_rows_are_normalized_then_averaged(tiny_dataset, tmp_path):
    root, names = tiny_dataset
    general = ["a photo of a {}.", "a cropped photo of a {}."]
    export_bundle(small_job(root, names, tmp_path / "b", general=general))
    _, text_gen, _, _ = read_export(tmp_path / "b")
    enc = PaletteEncoder()
    for c, name in enumerate(names):
        embs = [enc.encode_text(t.format(name)) for t in general]
        for e in embs:
            assert np.linalg.norm(e) == pytest.approx(1.0, abs=1e-9)
        want = np.mean(embs, axis=0).astype(np.float32).astype(np.float64)
        np.testing.assert_array_equal(text_gen[c], want)


def test_round_trip_rows_keep_direction(tiny_dataset, tmp_path):
    # float32 storage may nudge norms; direction must survive re-normalization
    root, names = tiny_dataset
    export_bundle(small_job(root, names, tmp_path / "b", views=2))
    _, gen_rt, spe_rt, _ = read_export(tmp_path / "b")

    from embed_exporter.export import export_text

    job = small_job(root, names, tmp_path / "unused")
    gen, spe = export_text(job, PaletteEncoder(), names)
    for original, stored in ((gen, gen_rt), (spe, spe_rt)):
        a = original / np.linalg.norm(original, axis=1, keepdims=True)
        b = stored / np.linalg.norm(stored, axis=1, keepdims=True)
        cos = np.sum(a * b, axis=1)
        np.testing.assert_allclose(cos, 1.0, atol=1e-6)


def test_zero_shot_accuracy_hand_oracle():
    # two orthogonal prototypes; labels chosen so exactly 3 of 4 hit
    text_gen = np.array([[1.0, 0.0], [0.0, 1.0]])
    text_spe = np.array([[1.0, 0.0], [0.0, 1.0]])
    mk = lambda x, y: np.array([[x, y], [9.0, 9.0]])  # row 0 decides
    samples = [
        (0, mk(2.0, 0.1)),
        (0, mk(0.1, 2.0)),  # miss
        (1, mk(0.1, 2.0)),
        (1, mk(0.2, 3.0)),
    ]
    assert zero_shot_accuracy(text_gen, text_spe, samples) == pytest.approx(75.0)


def test_summary_echoes_manifest(tiny_dataset, tmp_path):
    root, names = tiny_dataset
    summary = export_bundle(small_job(root, names, tmp_path / "b", views=2))
    meta, _, _, samples = read_export(tmp_path / "b")
    assert summary.num_samples == meta.num_samples == len(samples)
    assert summary.num_classes == meta.num_classes == len(names)
    assert summary.dim == meta.dim == 64
    assert summary.logit_scale == meta.logit_scale == PaletteEncoder().logit_scale
    assert 0.0 <= summary.zero_shot_accuracy <= 100.0


def test_job_validation():
    with pytest.raises(ValueError, match="views"):
        ExportJob(dataset=".", out=".", templates_general=["x {}"],
                  templates_specific={}, views=0)
    with pytest.raises(ValueError, match="general"):
        ExportJob(dataset=".", out=".", templates_general=[],
                  templates_specific={})


def test_template_loaders(tmp_path):
    gen = tmp_path / "gen.txt"
    gen.write_text("# comment\n\na photo of a {}.\n  a sketch of a {}.  \n")
    assert load_templates_general(gen) == [
        "a photo of a {}.", "a sketch of a {}.",
    ]

    gen.write_text("a photo without a slot\n")
    with pytest.raises(TemplateError, match="slot"):
        load_templates_general(gen)

    gen.write_text("# only comments\n")
    with pytest.raises(TemplateError, match="no templates"):
        load_templates_general(gen)

    spe = tmp_path / "spe.json"
    spe.write_text('{"a": ["one", "two"]}')
    assert load_templates_specific(spe) == {"a": ["one", "two"]}

    spe.write_text('["not", "a", "dict"]')
    with pytest.raises(TemplateError, match="map"):
        load_templates_specific(spe)
