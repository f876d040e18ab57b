import json

import numpy as np

from captree import PointCloud, read_trace, read_xyz, write_trace, write_xyz
from captree.cli import main
from captree.synth import gen_cloud

from conftest import random_cloud


def make_cloud_file(tmp_path, n=300, seed=91, name="cloud.xyz"):
    rng = np.random.default_rng(seed)
    cloud = random_cloud(rng, n)
    path = tmp_path / name
    write_xyz(cloud, path)
    return path, cloud


def test_filter_command(tmp_path, capsys):
    src, cloud = make_cloud_file(tmp_path)
    out = tmp_path / "filtered.xyz"
    assert main(["filter", str(src), str(out), "--r-filter", "0.05"]) == 0
    filtered = read_xyz(out)
    assert 0 < len(filtered) < len(cloud)
    assert "filtered" in capsys.readouterr().out


def test_build_and_query_pipeline(tmp_path, capsys):
    src, _ = make_cloud_file(tmp_path)
    tree_path = tmp_path / "tree.capt"
    trace_path = tmp_path / "trace.csv"
    assert main(["build", str(src), str(tree_path)]) == 0
    assert main(["gen", "trace", "--cloud", str(src), "--out", str(trace_path),
                 "--count", "200", "--workload", "mixed"]) == 0
    capsys.readouterr()
    assert main(["query", str(tree_path), str(trace_path), "--check-only"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["n_spheres"] == 200
    assert "query_ns_all" not in report
    # scalar mode and disabled prefilter agree with the default replay
    assert main(["query", str(tree_path), str(trace_path), "--check-only",
                 "--mode", "scalar", "--no-aabb-prefilter"]) == 0


def test_query_reports_timing_json(tmp_path, capsys):
    src, _ = make_cloud_file(tmp_path, n=128)
    tree_path = tmp_path / "tree.capt"
    trace_path = tmp_path / "trace.csv"
    json_path = tmp_path / "report.json"
    main(["build", str(src), str(tree_path)])
    main(["gen", "trace", "--cloud", str(src), "--out", str(trace_path),
          "--count", "64"])
    capsys.readouterr()
    assert main(["query", str(tree_path), str(trace_path),
                 "--repetitions", "1", "--json", str(json_path)]) == 0
    report = json.loads(json_path.read_text())
    assert report["query_ns_all"] > 0


def test_query_detects_corrupted_expected(tmp_path, capsys):
    src, _ = make_cloud_file(tmp_path)
    tree_path = tmp_path / "tree.capt"
    trace_path = tmp_path / "trace.csv"
    main(["build", str(src), str(tree_path)])
    main(["gen", "trace", "--cloud", str(src), "--out", str(trace_path),
          "--count", "40", "--workload", "colliding"])
    records = read_trace(trace_path)
    records[2].expected = False  # lie about a colliding batch
    write_trace(records, trace_path)
    capsys.readouterr()
    assert main(["query", str(tree_path), str(trace_path),
                 "--check-only"]) == 3
    assert "verification failure" in capsys.readouterr().err


def test_exit_codes(tmp_path, capsys):
    # usage error
    assert main(["query"]) == 1
    assert main(["--bogus"]) == 1
    # data errors: missing file, malformed cloud
    assert main(["build", str(tmp_path / "missing.xyz"),
                 str(tmp_path / "t.capt")]) == 2
    bad = tmp_path / "bad.xyz"
    bad.write_text("1 2\n")
    assert main(["build", str(bad), str(tmp_path / "t.capt")]) == 2
    capsys.readouterr()


def test_query_rejects_out_of_band_radius(tmp_path, capsys):
    src, _ = make_cloud_file(tmp_path, n=64)
    tree_path = tmp_path / "tree.capt"
    trace_path = tmp_path / "trace.csv"
    main(["build", str(src), str(tree_path), "--r-min", "0.02"])
    trace_path.write_text("batch,x,y,z,r\n0,0.5,0.5,0.5,0.001\n")
    capsys.readouterr()
    assert main(["query", str(tree_path), str(trace_path),
                 "--check-only"]) == 2


def test_gen_cloud_command(tmp_path, capsys):
    out = tmp_path / "gen.xyz"
    assert main(["gen", "cloud", "--kind", "cube", "--points", "100",
                 "--out", str(out), "--seed", "3"]) == 0
    cloud = read_xyz(out)
    assert len(cloud) == 100
    reference = gen_cloud("cube", 100, seed=3)
    assert np.array_equal(cloud.points, reference.points)
    capsys.readouterr()


def test_dispersion_command(tmp_path, capsys):
    path = tmp_path / "two.xyz"
    write_xyz(PointCloud(np.array([[0, 0, 0], [2, 0, 0]], np.float32)), path)
    assert main(["dispersion", str(path)]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["mean"] == 2.0 and stats["count"] == 2


def test_bench_command(tmp_path, capsys):
    config = {
        "scenes": [{
            "name": "tiny",
            "cloud": {"kind": "cube", "points": 256, "seed": 1},
            "r_filter": [0.0, 0.05],
            "queries": {"count": 64, "workload": "mixed", "seed": 2},
        }],
        "repetitions": 1,
    }
    cfg_path = tmp_path / "bench.json"
    cfg_path.write_text(json.dumps(config))
    out_json = tmp_path / "out.json"
    out_csv = tmp_path / "out.csv"
    assert main(["bench", str(cfg_path), "--out-json", str(out_json),
                 "--out-csv", str(out_csv)]) == 0
    capsys.readouterr()
    reports = json.loads(out_json.read_text())
    assert len(reports) == 2
    assert reports[0]["cloud_size_after"] == 256  # r_filter=0 keeps all
    assert reports[1]["cloud_size_after"] < 256
    for rep in reports:
        assert rep["oracle_checked"] == 64
        assert rep["query_ns_all"] > 0
        assert rep["baseline_ns_all"] > 0
    assert out_csv.read_text().startswith("name,")


def test_bench_empty_config(tmp_path, capsys):
    cfg = tmp_path / "empty.json"
    cfg.write_text("{}")
    assert main(["bench", str(cfg)]) == 0
    assert json.loads(capsys.readouterr().out) == []


def test_bench_bad_config(tmp_path, capsys):
    cfg = tmp_path / "broken.json"
    cfg.write_text("{not json")
    assert main(["bench", str(cfg)]) == 2
    capsys.readouterr()
