"""CLI subcommand behaviour: usage errors, run artifacts, end-to-end flows."""

from __future__ import annotations

import json

import numpy as np
import pytest

from skelanon.cli import main
from skelanon.data import load_store, write_skeleton_file

# Small-but-learnable dataset flags shared by the command tests.
FAST_DATA = [
    "--subjects", "3", "--actions", "2", "--samples-per-pair", "4",
    "--frames", "8", "--noise", "0.0", "--policy", "by_subject",
    "--holdout", "2",
]
FAST = [*FAST_DATA, "--epochs", "1", "--batch-size", "8"]


def run(argv):
    return main(argv)


# ---------------------------------------------------------------- usage errors


def test_no_subcommand_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        run([])
    assert exc.value.code != 0


def test_missing_required_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        run(["audit"])  # --out is required
    assert exc.value.code != 0
    assert "--out" in capsys.readouterr().err


@pytest.mark.parametrize(
    "command", ["ingest", "audit", "pretrain", "anontrain", "apply", "eval", "sweep", "render"]
)
def test_help_lists_flags(command, capsys):
    with pytest.raises(SystemExit) as exc:
        run([command, "--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    assert "--out" in text
    assert "--config" in text


# ---------------------------------------------------------------- environment


def test_output_root_env_var(tmp_path, monkeypatch):
    monkeypatch.setenv("SKELANON_OUTPUT_ROOT", str(tmp_path))
    assert run(["audit", "--out", "audit_run", "--seeds", "1", *FAST]) == 0
    assert (tmp_path / "audit_run" / "audit_report.json").exists()


def test_absolute_out_ignores_root(tmp_path, monkeypatch):
    monkeypatch.setenv("SKELANON_OUTPUT_ROOT", str(tmp_path / "elsewhere"))
    out = tmp_path / "here"
    assert run(["audit", "--out", str(out), "--seeds", "1", *FAST]) == 0
    assert (out / "audit_report.json").exists()


# ---------------------------------------------------------------- run artifacts


def test_resolved_config_snapshot(tmp_path):
    out = tmp_path / "run"
    assert run(["audit", "--out", str(out), "--seeds", "1", *FAST]) == 0
    snapshot = json.loads((out / "resolved_config.json").read_text())
    assert snapshot["command"] == "audit"
    assert snapshot["resolved_options"]["subjects"] == 3
    meta = json.loads((out / "run_meta.json").read_text())
    assert "written_at" in meta
    # Timestamps stay in run_meta.json; the config snapshot is reproducible.
    assert "written_at" not in json.dumps(snapshot)


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("subjects: 4\nactions: 2\n")
    out = tmp_path / "run"
    argv = ["audit", "--out", str(out), "--config", str(cfg), "--seeds", "1",
            "--subjects", "3", "--samples-per-pair", "4", "--frames", "8",
            "--noise", "0.0", "--policy", "by_subject", "--holdout", "2",
            "--epochs", "1", "--batch-size", "8"]
    assert run(argv) == 0
    resolved = json.loads((out / "resolved_config.json").read_text())["resolved_options"]
    assert resolved["subjects"] == 3  # flag beats config file
    assert resolved["actions"] == 2  # config file beats default


# ---------------------------------------------------------------- ingest


def make_skeleton_file(path, t=6, n_bodies=1, joint_count=25, seed=0):
    rng = np.random.default_rng(seed)
    frames = []
    for _ in range(t):
        frames.append(
            [(b + 1, rng.normal(size=(joint_count, 3)).astype(np.float32))
             for b in range(n_bodies)]
        )
    path.write_text(write_skeleton_file(frames))


def test_ingest_round_trip(tmp_path):
    raw = tmp_path / "raw"
    raw.mkdir()
    make_skeleton_file(raw / "S001C001P001R001A001.skeleton")
    make_skeleton_file(raw / "S001C002P002R001A002.skeleton", seed=1)
    out = tmp_path / "ingested"
    assert run(["ingest", "--input", str(raw), "--out", str(out),
                "--target-frames", "8"]) == 0
    samples = load_store(out / "store")
    assert len(samples) == 2
    assert all(s.sequence.coords.shape == (8, 25, 3) for s in samples)
    report = json.loads((out / "ingest_report.json").read_text())
    assert report["ingested"] == 2 and report["errors"] == []


def test_ingest_drops_multi_body(tmp_path):
    raw = tmp_path / "raw"
    raw.mkdir()
    make_skeleton_file(raw / "S001C001P001R001A001.skeleton")
    make_skeleton_file(raw / "S001C001P002R001A002.skeleton", n_bodies=2)
    out = tmp_path / "ingested"
    assert run(["ingest", "--input", str(raw), "--out", str(out)]) == 0
    report = json.loads((out / "ingest_report.json").read_text())
    assert report["ingested"] == 1
    assert report["dropped"].get("multi_body") == 1


def test_ingest_strict_fails_on_malformed(tmp_path):
    raw = tmp_path / "raw"
    raw.mkdir()
    make_skeleton_file(raw / "S001C001P001R001A001.skeleton")
    (raw / "S001C001P002R001A002.skeleton").write_text("not a skeleton file\n")
    out = tmp_path / "ingested"
    assert run(["ingest", "--input", str(raw), "--out", str(out), "--strict"]) == 1
    report = json.loads((out / "ingest_report.json").read_text())
    assert len(report["errors"]) == 1
    # Non-strict mode keeps going and succeeds on the valid file.
    assert run(["ingest", "--input", str(raw), "--out", str(tmp_path / "lax")]) == 0


def test_ingest_missing_input_dir(tmp_path):
    assert run(["ingest", "--input", str(tmp_path / "nope"),
                "--out", str(tmp_path / "out")]) == 2


# ---------------------------------------------------------------- pipeline flow


def test_pretrain_anontrain_apply_eval_render_flow(tmp_path):
    pre_a = tmp_path / "pre_action"
    pre_p = tmp_path / "pre_private"
    assert run(["pretrain", "--label", "action", "--out", str(pre_a), *FAST]) == 0
    assert run(["pretrain", "--label", "private", "--out", str(pre_p), *FAST]) == 0
    assert (pre_a / "action.params").exists()
    history = json.loads((pre_a / "pretrain_history.json").read_text())
    assert set(history) >= {"train_acc", "val_acc", "steps"}

    train = tmp_path / "anontrain"
    assert run(["anontrain", "--out", str(train),
                "--action-params", str(pre_a / "action.params"),
                "--privacy-params", str(pre_p / "private.params"), *FAST]) == 0
    for name in ("anonymizer.params", "privacy.params", "action.params",
                 "trace.jsonl", "config.json"):
        assert (train / name).exists()

    applied = tmp_path / "applied"
    assert run(["apply", "--out", str(applied),
                "--anonymizer-params", str(train / "anonymizer.params"), *FAST_DATA]) == 0
    samples = load_store(applied / "store")
    assert len(samples) == 3 * 2 * 4

    ev = tmp_path / "eval"
    assert run(["eval", "--out", str(ev),
                "--anonymizer-params", str(train / "anonymizer.params"),
                "--action-params", str(pre_a / "action.params"),
                "--privacy-params", str(pre_p / "private.params"), *FAST_DATA]) == 0
    report = json.loads((ev / "eval_report.json").read_text())
    assert 0.0 <= report["selection_metric"] <= 1.0

    raw_store = tmp_path / "raw_store"
    assert run(["apply", "--out", str(tmp_path / "identity_applied"),
                "--anonymizer-params", str(train / "anonymizer.params"), *FAST_DATA]) == 0
    rend = tmp_path / "render"
    assert run(["render", "--out", str(rend),
                "--original-store", str(applied / "store"),
                "--anonymized-store", str(tmp_path / "identity_applied" / "store")]) == 0
    pngs = list(rend.glob("*_pair.png"))
    assert len(pngs) == 1


def test_sweep_command(tmp_path):
    out = tmp_path / "sweep"
    assert run(["sweep", "--out", str(out), "--alphas", "1.0", "--betas", "5,10",
                *FAST]) == 0
    table = json.loads((out / "sweep_table.json").read_text())
    assert len(table["reports"]) == 2
    assert (out / "tradeoff.png").exists()


def test_eval_missing_params_file(tmp_path):
    assert run(["eval", "--out", str(tmp_path / "out"),
                "--anonymizer-params", str(tmp_path / "missing.params"),
                "--action-params", str(tmp_path / "missing.params"),
                "--privacy-params", str(tmp_path / "missing.params"), *FAST_DATA]) == 1
