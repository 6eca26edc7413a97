"""Real images end to end: render, export features, adapt over the bytes.

Builds a small fine-grained flower dataset with a global color-temperature
shift, exports it through the palette encoder with the standalone exporter,
then drives the engine CLI over the written bundle. The two programs meet
only at the files, which is the same path real CLIP exports would take.
"""

import json
import subprocess
import tempfile
import time
from pathlib import Path

from embed_exporter import ExportJob, export_bundle
from embed_exporter.palette import make_image_folder


def engine_accuracy(bundle: Path, report: Path, *args: str) -> float:
    subprocess.run(
        ["d2tpt", "run", "--bundle", str(bundle), "--report", str(report), *args],
        check=True, capture_output=True,
    )
    return float(json.loads(report.read_text())["accuracy"])


def main():
    with tempfile.TemporaryDirectory() as td:
        work = Path(td)
        t0 = time.perf_counter()
        names = make_image_folder(
            work / "flowers", num_classes=15, per_class=10, seed=5, warmth=14.0,
        )
        print(f"rendered {15 * 10} images across {len(names)} classes "
              f"(warmth shift 14) in {time.perf_counter() - t0:.1f}s")
        print(f"first classes: {', '.join(names[:3])}, ...")

        t0 = time.perf_counter()
        summary = export_bundle(ExportJob(
            dataset=work / "flowers",
            out=work / "bundle",
            templates_general=["a photo of a {}.", "a bright photo of a {}."],
            templates_specific={
                n: [f"a close-up photo of the small flower {n}."] for n in names
            },
            views=8,
            seed=0,
        ))
        print(f"\nexported {summary.num_samples} samples x {summary.num_views} views, "
              f"dim {summary.dim}, logit scale {summary.logit_scale} "
              f"in {time.perf_counter() - t0:.1f}s")
        print(f"exporter's own zero-shot over the written bytes: "
              f"{summary.zero_shot_accuracy:.2f}%")

        engine_zs = engine_accuracy(
            work / "bundle", work / "zs.json",
            "--mode", "zero-shot", "--aggregate", "first-view",
        )
        print(f"engine re-reads the bytes and agrees:           {engine_zs:.2f}%")

        # the mode table aggregates over confident views instead of view 0,
        # so its zero-shot row sits above the first-view number
        print("\n== engine modes over the export (selected-mean aggregate) ==")
        for mode in ("zero-shot", "tpt-baseline", "d2tpt"):
            acc = engine_accuracy(work / "bundle", work / f"{mode}.json", "--mode", mode)
            print(f"  {mode:<14} {acc:6.2f}%")

        print("\nthe shift moves images off the clean text prototypes while "
              "same-class images stay close,\nso retrieval from the knowledge "
              "base recovers part of what the text alignment lost.")


if __name__ == "__main__":
    main()
