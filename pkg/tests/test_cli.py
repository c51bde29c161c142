import hashlib
import json
import os
import shutil

import pytest

from launchpulse.cli import main
from launchpulse.client import CountingTransport
from launchpulse.config import build_config
from launchpulse.fixtures import (
    FIXTURE_FROM,
    FIXTURE_KEYWORDS,
    FIXTURE_TO,
    RESTRICTED_SLUG,
    fake_api_transport,
    fixture_config,
)
from launchpulse.pipeline import expected_outputs, run_fetch_gh, run_fetch_hn, build_client


def tree_digest(root):
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file():
            h.update(str(p.relative_to(root)).encode())
            h.update(p.read_bytes())
    return h.hexdigest()


def _flags(cache_dir, root, extra=()):
    return [
        "--cache-dir", str(cache_dir),
        "--data-dir", str(root / "data"),
        "--out-dir", str(root / "out"),
        "--from", FIXTURE_FROM.split("T")[0],
        "--to", FIXTURE_TO.split("T")[0],
        "--keywords", ",".join(FIXTURE_KEYWORDS),
        "--offline",
        *extra,
    ]


class TestExitCodes:
    def test_align_before_fetch_exits_2_naming_pairs(self, tmp_path, capsys):
        code = main(["align", "--data-dir", str(tmp_path / "data"), "--out-dir", str(tmp_path / "out")])
        assert code == 2
        err = capsys.readouterr().err
        assert "pairs.jsonl" in err

    def test_report_before_study_exits_2(self, tmp_path, capsys):
        code = main(["report", "--data-dir", str(tmp_path / "d"), "--out-dir", str(tmp_path / "o")])
        assert code == 2

    def test_bad_date_range_exits_1(self, tmp_path, capsys):
        code = main(["fetch-hn", "--from", "2025-01-01", "--to", "2024-01-01",
                     "--data-dir", str(tmp_path / "d")])
        assert code == 1


class TestOfflineRuns:
    def test_all_offline_happy_path(self, fixture_cache, tmp_path, capsys):
        code = main(["all"] + _flags(fixture_cache, tmp_path))
        assert code == 0
        cfg = fixture_config(fixture_cache, tmp_path / "data", tmp_path / "out")
        for path in expected_outputs(cfg):
            assert path.exists(), path
        out = capsys.readouterr().out
        assert "all stages done" in out

    def test_rerun_byte_identical_out_tree(self, fixture_cache, tmp_path):
        assert main(["all"] + _flags(fixture_cache, tmp_path)) == 0
        first = tree_digest(tmp_path / "out")
        shutil.rmtree(tmp_path / "out")
        assert main(["all"] + _flags(fixture_cache, tmp_path)) == 0
        assert tree_digest(tmp_path / "out") == first

    def test_degradation_restricted_repo_recorded(self, fixture_cache, tmp_path):
        assert main(["all"] + _flags(fixture_cache, tmp_path)) == 0
        exclusions = (tmp_path / "data" / "aligned" / "exclusions.csv").read_text()
        assert RESTRICTED_SLUG in exclusions
        assert "restricted" in exclusions
        summary = (tmp_path / "out" / "summary_overview.txt").read_text()
        assert "Total pairs: 16" in summary
        assert "Valid series: 15" in summary
        assert "Show HN" in summary

    def test_offline_zero_network_attempts(self, fixture_cache, tmp_path):
        cfg = fixture_config(fixture_cache, tmp_path / "data", tmp_path / "out")
        client = build_client(cfg)
        counting = client._http._transport
        assert isinstance(counting, CountingTransport)
        run_fetch_hn(cfg, client=client)
        run_fetch_gh(cfg, client=client)
        assert counting.requests == 0

    def test_warm_cache_second_fetch_zero_requests(self, tmp_path):
        cfg = fixture_config(tmp_path / "cache", tmp_path / "data", tmp_path / "out", offline=False)
        counting = CountingTransport(fake_api_transport())
        from launchpulse.client import CachedHTTPClient
        from launchpulse.store import FileCache

        client = CachedHTTPClient(FileCache(cfg.cache_dir), transport=counting)
        run_fetch_hn(cfg, client=client)
        run_fetch_gh(cfg, client=client)
        warm_count = counting.requests
        assert warm_count > 0
        run_fetch_hn(cfg, client=client)
        run_fetch_gh(cfg, client=client)
        assert counting.requests == warm_count


class TestSynthCommand:
    def test_synth_writes_corpus_and_manifest(self, tmp_path):
        spec = tmp_path / "spec.conf"
        spec.write_text("n_repos = 5\nseed = 3\n")
        code = main(["synth", "--spec", str(spec), "--out", str(tmp_path / "corpus"),
                     "--data-dir", str(tmp_path / "corpus")])
        assert code == 0
        manifest = json.loads((tmp_path / "corpus" / "manifest.json").read_text())
        assert manifest["n_repos"] == 5
        assert (tmp_path / "corpus" / "raw" / "pairs.jsonl").exists()

    def test_all_from_stage_align_on_synth_corpus(self, tmp_path):
        spec = tmp_path / "spec.conf"
        spec.write_text("n_repos = 30\nseed = 3\n")
        corpus = tmp_path / "corpus"
        assert main(["synth", "--spec", str(spec), "--out", str(corpus)]) == 0
        code = main(["all", "--from-stage", "align",
                     "--data-dir", str(corpus), "--out-dir", str(tmp_path / "out"),
                     "--cache-dir", str(tmp_path / "cache")])
        assert code == 0
        assert (tmp_path / "out" / "manifest.csv").exists()


class TestConfigPrecedence:
    def test_flag_beats_env_beats_file_beats_default(self, tmp_path, monkeypatch):
        conf = tmp_path / "run.conf"
        conf.write_text("seed = 100\ncache_dir = /from/file\n")
        monkeypatch.setenv("LAUNCHPULSE_CACHE_DIR", "/from/env")
        cfg = build_config(config_path=conf, overrides={})
        assert cfg.seed == 100  # file beats default
        assert str(cfg.cache_dir) == "/from/env"  # env beats file
        cfg = build_config(config_path=conf, overrides={"cache_dir": tmp_path / "flag"})
        assert cfg.cache_dir == tmp_path / "flag"  # flag beats env

    def test_github_token_from_env(self, monkeypatch):
        monkeypatch.setenv("GITHUB_TOKEN", "tok123")
        assert build_config().github_token == "tok123"

    def test_unknown_config_key_rejected(self, tmp_path):
        conf = tmp_path / "run.conf"
        conf.write_text("definitely_bogus = 1\n")
        with pytest.raises(ValueError, match="unknown config key"):
            build_config(config_path=conf)

    def test_defaults(self, monkeypatch):
        monkeypatch.delenv("LAUNCHPULSE_CACHE_DIR", raising=False)
        monkeypatch.delenv("GITHUB_TOKEN", raising=False)
        cfg = build_config()
        assert str(cfg.cache_dir) == "data/cache"
        assert cfg.rate_budget == 30
        assert cfg.keywords == ("LLM", "transformers", "RAG", "agents")


class TestStageIsolation:
    def test_delete_out_and_rerun_from_warm_cache(self, fixture_cache, tmp_path):
        assert main(["all"] + _flags(fixture_cache, tmp_path)) == 0
        digest = tree_digest(tmp_path / "out")
        shutil.rmtree(tmp_path / "out")
        shutil.rmtree(tmp_path / "data")
        assert main(["all"] + _flags(fixture_cache, tmp_path)) == 0
        assert tree_digest(tmp_path / "out") == digest
