from pathlib import Path

from ddseries.manifest import (
    RunManifest,
    code_version,
    manifest_path,
    write_manifest,
)
from ddseries.parameters import TruncationPolicy


def test_manifest_path():
    assert manifest_path(Path("out/values.csv")) == Path("out/values.csv.manifest.json")


def test_write_manifest(tmp_path: Path):
    out = tmp_path.joinpath("values.csv")
    manifest = RunManifest(
        subcommand="nonvanish",
        parameters={"nmax": 30, "dmax": 5},
        policy=TruncationPolicy(d_cutoff=200),
        seed=7,
        outputs=[str(out)],
        wall_time=1.25,
    )
    path = write_manifest(manifest, out)
    assert path.name == "values.csv.manifest.json"

    loaded = RunManifest.model_validate_json(path.read_text())
    print("\n::test_write_manifest::", loaded)
    assert loaded == manifest
    assert loaded.policy.d_cutoff == 200


def test_code_version():
    version = code_version()
    assert isinstance(version, str)
    assert version
