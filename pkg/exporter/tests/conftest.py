from pathlib import Path

import pytest

from embed_exporter.palette import make_image_folder


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory) -> tuple[Path, list[str]]:
    """Five classes, three images each; shared across the suite."""
    root = tmp_path_factory.mktemp("tiny_ds")
    names = make_image_folder(root, num_classes=5, per_class=3, seed=11)
    return root, names
