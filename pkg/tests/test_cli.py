import io
import json
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from conftest import REFERENCE_COUNTS
from polardet import cli, schemas
from polardet.io import read_png, read_raw, write_pgm
from polardet.synth import PolarField, Region, SceneSpec


def run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def scene_file(tmp_path):
    spec = SceneSpec(16, 12, PolarField(100), [
        Region((0, 0, 8, 6), PolarField(200, 1, 0), "car"),
        Region((8, 6, 16, 12), PolarField(300, 0.5, np.pi / 4), "person"),
    ], name="demo", bit_depth=8)
    path = tmp_path / "scene.json"
    path.write_text(json.dumps(spec.to_dict()))
    return path


@pytest.fixture
def raw_frames(tmp_path):
    d = tmp_path / "raw"
    d.mkdir()
    tile = np.array([[200, 100], [100, 0]], np.uint16)
    good = d / "good.pgm"
    write_pgm(good, np.tile(tile, (3, 4)), maxval=255)
    odd = d / "odd.pgm"
    write_pgm(odd, np.zeros((3, 4), np.uint16), maxval=255)
    return good, odd


def test_convert_single_frame(raw_frames, tmp_path, capsys):
    good, _ = raw_frames
    out = tmp_path / "out"
    code, stdout, _ = run(["convert", good, "--out", out, "--combo", "physics", "--json"], capsys)
    assert code == 0
    payload = json.loads(stdout)
    jsonschema.validate(payload, schemas.CONVERT)
    assert sorted(p.rsplit("/", 1)[-1] for p in payload["written"]) == ["good_physics.json", "good_physics.png"]
    px = read_png(out / "good_physics.png")
    assert px.shape == (3, 4, 3)
    assert (px == [100, 128, 255]).all()
    meta = json.loads((out / "good_physics.json").read_text())
    assert meta["bit_depth"] == 8


def test_convert_all_combos_and_channel_order(raw_frames, tmp_path, capsys):
    good, _ = raw_frames
    out = tmp_path / "out"
    code, _, _ = run(["convert", good, "--out", out, "--combo", "all", "--channels", "s0,dop,aop"], capsys)
    assert code == 0
    assert sorted(p.name for p in out.iterdir()) == [
        f"good_{c}.{ext}" for c in ("intensity", "physics", "stokes") for ext in ("json", "png")
    ]
    assert read_png(out / "good_physics.png")[0, 0].tolist() == [100, 255, 128]
    assert read_png(out / "good_stokes.png")[0, 0].tolist() == [100, 228, 128]


def test_convert_empty_input_list(tmp_path, capsys):
    code, stdout, _ = run(["convert", "--out", tmp_path / "o", "--json"], capsys)
    assert code == 0
    assert json.loads(stdout) == {"written": [], "failures": []}


def test_convert_collects_failures(raw_frames, tmp_path, capsys, caplog):
    good, odd = raw_frames
    missing = tmp_path / "nope.pgm"
    out = tmp_path / "out"
    code, stdout, stderr = run(["convert", odd, missing, good, "--out", out, "--json"], capsys)
    assert code == 1
    payload = json.loads(stdout)
    jsonschema.validate(payload, schemas.CONVERT)
    assert [f["input"] for f in payload["failures"]] == [str(odd), str(missing)]
    assert "OddDimensionsError" in payload["failures"][0]["error"]
    assert (out / "good_stokes.png").exists()
    assert "odd.pgm" in caplog.text


def test_convert_is_idempotent_and_parallel_safe(raw_frames, tmp_path, capsys):
    good, _ = raw_frames
    frames = []
    for k in range(6):
        p = tmp_path / f"f{k}.pgm"
        p.write_bytes(good.read_bytes())
        frames.append(p)
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["convert", *frames, "--out", a, "--combo", "all"], capsys)[0] == 0
    assert run(["convert", *frames, "--out", b, "--combo", "all", "--jobs", "4"], capsys)[0] == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for n in names:
        if n.endswith(".png"):
            assert (a / n).read_bytes() == (b / n).read_bytes()


def test_demosaic(raw_frames, tmp_path, capsys):
    good, _ = raw_frames
    out = tmp_path / "planes"
    code, stdout, _ = run(["demosaic", good, "--out", out, "--json"], capsys)
    assert code == 0
    jsonschema.validate(json.loads(stdout), schemas.DEMOSAIC)
    planes = {n: read_png(out / f"good_{n}.png") for n in ("i0", "i45", "i90", "i135")}
    assert {n: int(p[0, 0]) for n, p in planes.items()} == {"i0": 200, "i45": 100, "i90": 0, "i135": 100}
    # a different layout reassigns the same samples
    run(["demosaic", good, "--out", out, "--layout", "90,135,45,0"], capsys)
    assert int(read_png(out / "good_i0.png")[0, 0]) == 0


def test_synth_then_convert(scene_file, tmp_path, capsys):
    out = tmp_path / "synth"
    code, stdout, _ = run(["synth", "--spec", scene_file, "--out", out, "--json"], capsys)
    assert code == 0
    jsonschema.validate(json.loads(stdout), schemas.SYNTH)
    raw = read_raw(out / "demo_raw.pgm")
    assert raw.maxval == 255 and raw.data.shape == (12, 16)
    manifest = json.loads((out / "demo_manifest.json").read_text())
    jsonschema.validate(manifest, schemas.MANIFEST)
    assert run(["validate", out / "demo_manifest.json"], capsys)[0] == 0
    code, _, _ = run(["convert", out / "demo_raw.pgm", "--out", out, "--combo", "stokes"], capsys)
    assert code == 0
    px = read_png(out / "demo_raw_stokes.png")
    assert px[0, 0].tolist() == [100, 228, 128]
    assert px[-1, -1].tolist() == [150, 128, 203]
    assert px[0, -1].tolist() == [50, 128, 128]


def test_synth_seed_override(scene_file, tmp_path, capsys):
    spec = json.loads(scene_file.read_text())
    spec["noise_sigma"] = 4.0
    scene_file.write_text(json.dumps(spec))
    for d, seed in (("a", 1), ("b", 1), ("c", 2)):
        run(["synth", "--spec", scene_file, "--out", tmp_path / d, "--seed", seed], capsys)
    a, b, c = ((tmp_path / d / "demo_raw.pgm").read_bytes() for d in "abc")
    assert a == b != c


def test_subsample_file_and_stdin(tmp_path, capsys, monkeypatch):
    frames = tmp_path / "frames.txt"
    frames.write_text("".join(f"frame_{k:03d}\n" for k in range(100)))
    code, stdout, _ = run(["subsample", frames, "--stride", 25, "--json"], capsys)
    assert code == 0
    payload = json.loads(stdout)
    jsonschema.validate(payload, schemas.SUBSAMPLE)
    assert payload["kept"] == ["frame_000", "frame_025", "frame_050", "frame_075"]
    monkeypatch.setattr(sys, "stdin", io.StringIO(frames.read_text()))
    code, stdout, _ = run(["subsample"], capsys)
    assert stdout.split() == payload["kept"]


def test_stats_on_reference_fixture(reference_files, capsys):
    code, stdout, _ = run(["stats", reference_files["train"], reference_files["test"], "--json"], capsys)
    assert code == 0
    payload = json.loads(stdout)
    jsonschema.validate(payload, schemas.STATS)
    assert payload["counts"] == REFERENCE_COUNTS
    assert payload["insufficient"] == ["bike", "motorbike"]
    code, text, _ = run(["stats", reference_files["train"], reference_files["test"]], capsys)
    assert "car        9265  11687" in text


def test_validate_reports_violations(tmp_path, capsys):
    bad = {
        "split": "test",
        "images": [{"id": "a", "path": "a.pgm", "width": 10, "height": 10}],
        "annotations": [
            {"image_id": "a", "class": "car", "bbox": [5, 5, 2, 8]},
            {"image_id": "zz", "class": "truck", "bbox": [0, 0, 1, 1]},
        ],
    }
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    code, stdout, _ = run(["validate", path, "--json"], capsys)
    assert code == 1
    payload = json.loads(stdout)
    jsonschema.validate(payload, schemas.VALIDATION)
    assert {v["rule"] for v in payload["violations"]} >= {"x_max ≤ x_min", "unknown class", "unresolved image_id"}


def test_eval_perfect_and_outputs(tmp_path, capsys):
    gt = {
        "split": "test",
        "images": [{"id": "a", "path": "a.pgm", "width": 50, "height": 50}],
        "annotations": [
            {"image_id": "a", "class": "car", "bbox": [0, 0, 10, 10]},
            {"image_id": "a", "class": "person", "bbox": [20, 20, 30, 40]},
        ],
    }
    (tmp_path / "gt.json").write_text(json.dumps(gt))
    dets = [dict(a, score=0.9) for a in gt["annotations"]]
    (tmp_path / "d.json").write_text(json.dumps(dets))
    argv = ["eval", "--gt", tmp_path / "gt.json", "--dets", tmp_path / "d.json", "--format", "RGB"]
    code, stdout, _ = run(argv + ["--json", "--out", tmp_path / "r.json", "--csv", tmp_path / "r.csv"], capsys)
    assert code == 0
    report = json.loads(stdout)
    jsonschema.validate(report, schemas.REPORT)
    assert report["map"]["value"] == 1.0
    assert (tmp_path / "r.json").read_text() == stdout
    code, csv_text, _ = run(argv, capsys)
    assert csv_text == (tmp_path / "r.csv").read_text()
    # second run against itself as baseline: ER undefined, flagged
    code, stdout, _ = run(argv + ["--baseline", tmp_path / "r.json", "--json"], capsys)
    assert json.loads(stdout)["error_rate"]["per_class"] == {"car": None, "person": None}


def test_eval_bad_detections_is_data_error(tmp_path, capsys, caplog):
    (tmp_path / "gt.json").write_text(json.dumps({"split": "test", "images": [], "annotations": []}))
    (tmp_path / "d.json").write_text('[\n{"image_id": "a", "score": 2}\n]')
    code, _, stderr = run(["eval", "--gt", tmp_path / "gt.json", "--dets", tmp_path / "d.json"], capsys)
    assert code == 1
    assert "line 2: 2 is greater than the maximum of 1" in caplog.text


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["convert", "x.pgm"],
        ["convert", "--out", "o", "--norm", "loud"],
        ["convert", "--out", "o", "--jobs", "0"],
        ["subsample", "--stride", "0"],
        ["eval", "--gt", "g.json"],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    with pytest.raises(SystemExit) as exit_info:
        cli.main(argv)
    assert exit_info.value.code == 2


def test_bad_layout_is_usage_error(raw_frames, tmp_path, capsys):
    good, _ = raw_frames
    with pytest.raises(SystemExit) as exit_info:
        cli.main(["demosaic", str(good), "--out", str(tmp_path), "--layout", "0,0,45,90"])
    assert exit_info.value.code == 2
    assert "permutation" in capsys.readouterr().err


def test_global_flags_before_or_after_subcommand(tmp_path, capsys):
    frames = tmp_path / "f.txt"
    frames.write_text("a\nb\nc\n")
    before = run(["--json", "subsample", frames, "--stride", 2], capsys)[1]
    after = run(["subsample", frames, "--stride", 2, "--json"], capsys)[1]
    assert before == after and json.loads(before)["kept"] == ["a", "c"]


def test_module_entry_point(tmp_path):
    frames = tmp_path / "f.txt"
    frames.write_text("".join(f"{k}\n" for k in range(100)))
    proc = subprocess.run([sys.executable, "-m", "polardet", "subsample", str(frames), "--json"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["kept"] == ["0", "25", "50", "75"]
