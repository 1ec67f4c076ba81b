import json

import numpy as np
import pytest

from physarum_shape import geometry as geo
from physarum_shape.cli import main, parse_seeds
from physarum_shape.outputs import boundary_hausdorff, compare, load_result, read_population_csv
from physarum_shape.params import ConfigError
from physarum_shape.scenarios import preset


@pytest.fixture(scope="module")
def square_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("sq")
    assert main(["run", "--preset", "square-mst", "--seed", "3", "--steps", "150",
                 "--frames-every", "100", "--out", str(out)]) == 0
    return out


def test_run_artefacts(square_run):
    names = {p.name for p in square_run.iterdir()}
    assert {"manifest.json", "population.csv", "blob.pgm", "particles.csv", "nodes.json",
            "hull.json", "mst.json", "metrics.json", "frames"} <= names
    pop = read_population_csv(square_run / "population.csv")
    assert len(pop) == 151 and pop[0] == 1000
    manifest = json.loads((square_run / "manifest.json").read_text())
    assert manifest["status"] == "complete" and manifest["steps_run"] == 150 and manifest["seed"] == 3
    frames = sorted(p.name for p in (square_run / "frames" / "occupancy").iterdir())
    assert frames == ["frame_0000000.pgm", "frame_0000100.pgm", "frame_0000150.pgm"]
    cells = np.loadtxt(square_run / "particles.csv", delimiter=",", skiprows=1)
    assert len(cells) == pop[-1]


def test_manifest_config_reruns_identically(square_run, tmp_path):
    cfg = json.loads((square_run / "manifest.json").read_text())["config"]
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "again"
    assert main(["run", "--config", str(path), "--seed", "3", "--steps", "150", "--out", str(out)]) == 0
    assert (out / "population.csv").read_bytes() == (square_run / "population.csv").read_bytes()


def test_compare_reports(square_run):
    rep = compare(square_run, "mst")
    assert 0 <= rep["mst_coverage"] <= 1 and rep["mst_length"] == pytest.approx(240.0)
    assert rep["nodes_in_emergent_hull"] == 1.0
    assert main(["compare", str(square_run), "--oracle", "convex", "--max-hausdorff", "1000"]) == 0
    saved = json.loads((square_run / "compare_convex.json").read_text())
    assert saved["passed"] is True
    assert main(["compare", str(square_run), "--max-hausdorff", "0"]) == 4
    assert json.loads((square_run / "compare_convex.json").read_text())["failures"]


def test_compare_alpha(square_run):
    rep = compare(square_run, "alpha")
    assert rep["alpha_edges"] == 4 and rep["alpha_radius"] == pytest.approx(80 * 2 ** 0.5)


def test_self_comparison_near_zero(tmp_path):
    # blob equal to the filled hull of the nodes: the emergent hull is the oracle hull
    pts = np.array([[10, 10], [40, 10], [40, 30], [10, 30], [25, 20]])
    blob = geo.rasterise_convex(geo.convex_hull(pts), (50, 60))
    from physarum_shape.lattice import write_pgm
    write_pgm(tmp_path / "blob.pgm", blob * 255.0, 1.0)
    (tmp_path / "nodes.json").write_text(json.dumps({"points": pts.tolist(), "active": [True] * 5}))
    rep = compare(tmp_path, "convex")
    assert rep["hausdorff"] <= 1.0 and rep["hausdorff_boundary"] <= 1.0
    assert rep["node_coverage"] == 1.0 and rep["concavity"] == 0.0


def test_boundary_hausdorff_square():
    a = geo.convex_hull([[0, 0], [10, 0], [10, 10], [0, 10]])
    b = geo.convex_hull([[0, 0], [10, 0], [10, 12], [0, 12]])
    assert boundary_hausdorff(a, b) == pytest.approx(2.0)


def test_seeds_layout(tmp_path):
    assert main(["run", "--preset", "square-mst", "--seeds", "1..2", "--steps", "20", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "seed1" / "population.csv").exists() and (tmp_path / "seed2" / "metrics.json").exists()


def test_sweep_layout(tmp_path):
    assert main(["sweep", "--preset", "square-mst", "--values", "5,25", "--seeds", "4",
                 "--steps", "20", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "gmax5" / "seed4" / "population.csv").exists()
    assert (tmp_path / "gmax25" / "seed4" / "population.csv").exists()
    rows = (tmp_path / "sweep_summary.csv").read_text().splitlines()
    assert rows[0] == "gmax,seed,final_population,concavity" and len(rows) == 3


@pytest.mark.parametrize("argv, code", [
    (["run", "--preset", "square-mst", "--set", "G_w=8", "--steps", "5"], 2),
    (["run", "--preset", "nope"], 2),
    (["run", "--config", "/nonexistent/cfg.json"], 2),
    (["run"], 2),
    (["sweep", "--preset", "hull-band-attract", "--values", "5"], 2),
    (["compare", "/nonexistent/run"], 3),
])
def test_exit_codes(argv, code, tmp_path):
    if argv[0] in ("run", "sweep"):
        argv = argv + ["--out", str(tmp_path)]
    assert main(argv) == code


def test_missing_artefact(tmp_path):
    (tmp_path / "nodes.json").write_text('{"points": [[1, 1], [5, 1], [3, 4]]}')
    assert main(["compare", str(tmp_path)]) == 3
    with pytest.raises(FileNotFoundError):
        load_result(tmp_path)


def test_parse_seeds():
    assert parse_seeds("1..3") == [1, 2, 3]
    assert parse_seeds("4, 9") == [4, 9]
    for bad in ("3..1", "x", ""):
        with pytest.raises(ConfigError):
            parse_seeds(bad)


def test_presets_listing(capsys):
    assert main(["presets"]) == 0
    out = capsys.readouterr().out
    assert all(s in out for s in ("h-mask", "gmax-sweep", "G_max=5,10,20,25,30"))


def test_failed_run_marks_manifest(tmp_path, monkeypatch):
    import physarum_shape.outputs as outputs

    def boom(*a, **k):
        raise RuntimeError("disk on fire")
    monkeypatch.setattr(outputs, "run_scenario", boom)
    with pytest.raises(RuntimeError):
        outputs.execute(preset("square-mst"), 0, tmp_path, steps=5)
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["status"] == "failed" and "disk on fire" in m["error"]
