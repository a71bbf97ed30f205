import json

import pytest

from conftest import SOYBEAN_CSV
from phenoclust import pipeline
from phenoclust.cli import main


@pytest.fixture
def synth_dir(tmp_path):
    out = tmp_path / "data"
    assert main(["synth", "--n", "300", "--m", "4", "--k", "3", "--output", str(out)]) == 0
    return out


def test_synth_writes_table_and_labels(synth_dir):
    assert (synth_dir / "synthetic.csv").read_text().startswith("genotype,t1,t2,t3,t4\n")
    assert len((synth_dir / "labels.csv").read_text().splitlines()) == 301


def test_cluster_writes_artifacts(synth_dir, tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["cluster", "--input", str(synth_dir / "synthetic.csv"), "--sample-size", "100", "--k", "3",
                 "--output", str(out), "--write-similarity"])
    assert code == 0
    names = {p.name for p in out.iterdir()}
    assert {"assignment.csv", "silhouette.json", "silhouette.txt", "estimators.csv", "eigenvalues.csv",
            "manifest.json", "similarity.csv"} <= names
    man = json.loads((out / "manifest.json").read_text())
    assert man["config"]["k"] == 3 and man["config"]["sample_size"] == 100
    assert "silhouette" in capsys.readouterr().out


def test_config_file_and_flag_override(synth_dir, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"input = {synth_dir / 'synthetic.csv'}\nsample_size = 80\nk = 5\nsampler = none\n"
                   "algorithm = hierarchical\n")
    out = tmp_path / "o"
    assert main(["cluster", "--config", str(cfg), "--k", "3", "--output", str(out), "--write-merges"]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["config"]["k"] == 3 and man["config"]["sampler"] == "none"
    assert (out / "merges.csv").exists()


def test_env_output_override(synth_dir, tmp_path, monkeypatch):
    monkeypatch.setenv("PHENOCLUST_OUTPUT", str(tmp_path / "envout"))
    assert main(["cluster", "--input", str(synth_dir / "synthetic.csv"), "--sample-size", "50", "--k", "3"]) == 0
    assert (tmp_path / "envout" / "assignment.csv").exists()


def test_categorical_via_encode_flags(tmp_path):
    path = tmp_path / "soy.csv"
    path.write_text(SOYBEAN_CSV)
    code = main(["cluster", "--input", str(path), "--categorical", "EPV,LS", "--encode", "EPV=Poor,Good,Very Good",
                 "--encode", "LS=Slight,Moderate,Severe", "--sample-size", "4", "--k", "2",
                 "--output", str(tmp_path / "o")])
    assert code == 0


def test_exit_code_config_error(synth_dir, tmp_path, capsys):
    code = main(["cluster", "--input", str(synth_dir / "synthetic.csv"), "--k", "1", "--output", str(tmp_path / "x")])
    assert code == 2
    assert "k must be at least 2" in capsys.readouterr().err
    assert not (tmp_path / "x").exists()


def test_exit_code_data_error(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("id,a,b\nu1,1,2\nu2,1\n")
    assert main(["cluster", "--input", str(bad), "--output", str(tmp_path / "o")]) == 3
    assert not (tmp_path / "o").exists()


def test_exit_code_numerical(synth_dir, tmp_path, monkeypatch):
    import numpy as np

    def boom(*a, **k):
        raise np.linalg.LinAlgError("did not converge")

    monkeypatch.setattr(pipeline, "embed", boom)
    code = main(["cluster", "--input", str(synth_dir / "synthetic.csv"), "--sample-size", "50", "--k", "3",
                 "--output", str(tmp_path / "o")])
    assert code == 4
    assert not (tmp_path / "o").exists()


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["cluster", "--sampler", "random"])
    assert exc.value.code == 2


def test_audit_and_eigs(synth_dir, tmp_path, capsys):
    data = str(synth_dir / "synthetic.csv")
    assert main(["audit", "--input", data, "--sample-size", "60", "--samplers", "pivotal,vq",
                 "--replications", "5", "--output", str(tmp_path / "a")]) == 0
    lines = (tmp_path / "a" / "estimators.csv").read_text().splitlines()
    assert lines[1] == "trait,sampler,actual,ht,hajek,replications"
    assert len(lines) == 2 + 8
    assert main(["eigs", "--input", data, "--sample-size", "60", "--count", "10", "--output", str(tmp_path / "e")]) == 0
    assert len((tmp_path / "e" / "eigenvalues.csv").read_text().splitlines()) == 12
    assert main(["eigs", "--input", data, "--sample-size", "60", "--count", "61", "--output", str(tmp_path / "f")]) == 2


def test_bench_deterministic_across_workers(synth_dir, tmp_path):
    base = ["bench", "--input", str(synth_dir / "synthetic.csv"), "--truth", str(synth_dir / "labels.csv"),
            "--sample-size", "100", "--ks", "3", "--measures", "euclidean,squared_euclidean"]
    assert main(base + ["--output", str(tmp_path / "b1")]) == 0
    assert main(base + ["--output", str(tmp_path / "b2"), "--workers", "4"]) == 0
    for p in (tmp_path / "b1").rglob("*.csv"):
        assert p.read_bytes() == (tmp_path / "b2" / p.relative_to(tmp_path / "b1")).read_bytes()
    rows = (tmp_path / "b1" / "bench.csv").read_text().splitlines()
    assert len(rows) == 2 + 8
    assert all(r.endswith("true") for r in rows[2:] if r.startswith("pivotal,spectral"))


def test_bench_timing_in_manifest(synth_dir, tmp_path):
    assert main(["bench", "--input", str(synth_dir / "synthetic.csv"), "--sample-size", "100", "--ks", "3",
                 "--algorithms", "spectral", "--samplers", "pivotal", "--time-full-hc", "--repeats", "1",
                 "--output", str(tmp_path / "b")]) == 0
    man = json.loads((tmp_path / "b" / "manifest.json").read_text())
    t = man["timing"]["full_hc_vs_sampled"]
    assert t["speedup"] > 0 and t["repeats"] == 1
