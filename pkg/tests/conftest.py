import pathlib
import time
from dataclasses import dataclass

import pytest

from launchpulse.config import RunConfig
from launchpulse.fixtures import build_fixture_cache
from launchpulse.pipeline import run_all
from launchpulse.synth import SynthSpec, VerifyReport, generate_corpus, verify_against_manifest

REPO_ROOT = pathlib.Path(__file__).resolve().parent.parent
SHIPPED_FIXTURE_CACHE = REPO_ROOT / "fixtures" / "cache"


@pytest.fixture(scope="session")
def fixture_cache(tmp_path_factory) -> pathlib.Path:
    """Warm fixture cache; prefers the shipped tree, rebuilds if absent."""
    if SHIPPED_FIXTURE_CACHE.exists():
        return SHIPPED_FIXTURE_CACHE
    root = tmp_path_factory.mktemp("fixture-cache")
    build_fixture_cache(root / "cache", root / "scratch")
    return root / "cache"


@dataclass
class ClosedLoop:
    manifest: dict
    data: pathlib.Path
    out: pathlib.Path
    verify: VerifyReport
    elapsed_s: float


@pytest.fixture(scope="session")
def closed_loop(tmp_path_factory) -> ClosedLoop:
    """One 200-repo synthetic corpus run end to end and verified, timed."""
    root = tmp_path_factory.mktemp("closed-loop")
    data, out = root / "data", root / "out"
    started = time.monotonic()
    manifest = generate_corpus(SynthSpec(n_repos=200, seed=42), data)
    cfg = RunConfig(data_dir=data, out_dir=out, cache_dir=root / "cache")
    run_all(cfg, from_stage="align")
    verify = verify_against_manifest(manifest, data, out)
    return ClosedLoop(manifest, data, out, verify, time.monotonic() - started)
