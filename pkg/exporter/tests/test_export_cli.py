import json
import subprocess
import sys

import pytest

from embed_exporter import cli, read_export


def specific_templates(names):
    return {n: [f"a close-up photo of the small flower {n}."] for n in names}


def write_template_files(tmp_path, names):
    gen = tmp_path / "gen.txt"
    gen.write_text("a photo of a {}.\n")
    spe = tmp_path / "spe.json"
    spe.write_text(json.dumps(specific_templates(names)))
    return gen, spe


def test_cli_export_round_trip(tiny_dataset, tmp_path, capsys):
    root, names = tiny_dataset
    gen, spe = write_template_files(tmp_path, names)
    code = cli.main([
        "--dataset", str(root),
        "--templates-general", str(gen),
        "--templates-specific", str(spe),
        "--out", str(tmp_path / "bundle"),
        "--views", "2",
    ])
    assert code == 0
    out = capsys.readouterr().out
    assert out.startswith("wrote ")
    assert "samples=15" in out and "classes=5" in out and "dim=64" in out

    meta, _, _, samples = read_export(tmp_path / "bundle")
    assert meta.num_samples == len(samples) == 15
    assert meta.num_views == 2


def test_cli_missing_dataset_fails_cleanly(tmp_path, capsys):
    gen, spe = write_template_files(tmp_path, ["flora-h000-p4"])
    code = cli.main([
        "--dataset", str(tmp_path / "missing"),
        "--templates-general", str(gen),
        "--templates-specific", str(spe),
        "--out", str(tmp_path / "bundle"),
    ])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_cli_bad_views_rejected(tiny_dataset, tmp_path):
    root, names = tiny_dataset
    gen, spe = write_template_files(tmp_path, names)
    with pytest.raises(SystemExit) as exc:
        cli.main([
            "--dataset", str(root),
            "--templates-general", str(gen),
            "--templates-specific", str(spe),
            "--out", str(tmp_path / "bundle"),
            "--views", "0",
        ])
    assert exc.value.code == 2


def test_cli_template_error_fails_cleanly(tiny_dataset, tmp_path, capsys):
    root, names = tiny_dataset
    gen, spe = write_template_files(tmp_path, names[:-1])  # drop one class
    code = cli.main([
        "--dataset", str(root),
        "--templates-general", str(gen),
        "--templates-specific", str(spe),
        "--out", str(tmp_path / "bundle"),
    ])
    assert code == 1
    assert names[-1] in capsys.readouterr().err


def test_console_script_subprocess(tiny_dataset, tmp_path):
    root, names = tiny_dataset
    gen, spe = write_template_files(tmp_path, names)
    result = subprocess.run(
        [
            "embed-export",
            "--dataset", str(root),
            "--templates-general", str(gen),
            "--templates-specific", str(spe),
            "--out", str(tmp_path / "bundle"),
            "--views", "2",
            "--seed", "4",
        ],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0, result.stderr
    assert result.stdout.startswith("wrote ")


def test_module_entry_matches_script(tiny_dataset, tmp_path):
    root, names = tiny_dataset
    gen, spe = write_template_files(tmp_path, names)
    code = subprocess.run(
        [
            sys.executable, "-c",
            "import sys; from embed_exporter.cli import main; sys.exit(main(sys.argv[1:]))",
            "--dataset", str(root),
            "--templates-general", str(gen),
            "--templates-specific", str(spe),
            "--out", str(tmp_path / "bundle"),
            "--views", "1",
        ],
        capture_output=True,
    ).returncode
    assert code == 0
