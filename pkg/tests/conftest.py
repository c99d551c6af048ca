import random

import pytest

from polardet.dataset import Annotation, BoundingBox, DatasetManifest, ImageRecord

# labelled objects per split in the reference dataset
REFERENCE_COUNTS = {
    "train": {"car": 11687, "person": 1488, "bike": 4, "motorbike": 21},
    "test": {"car": 9265, "person": 442, "bike": 12, "motorbike": 0},
}
N_IMAGES = {"train": 2221, "test": 509}
IMAGE_W, IMAGE_H = 1224, 1024


def build_reference_manifest(split):
    """Replica manifest whose class counts equal the reference counts for ``split``."""
    images = [ImageRecord(f"{split}_{k:04d}", f"{split}/{k:04d}.pgm", IMAGE_W, IMAGE_H) for k in range(N_IMAGES[split])]
    rng = random.Random(split)
    annotations = []
    for cls, n in REFERENCE_COUNTS[split].items():
        for k in range(n):
            x, y = rng.uniform(0, IMAGE_W - 60), rng.uniform(0, IMAGE_H - 60)
            w, h = rng.uniform(4, 59), rng.uniform(4, 59)
            image = images[(k * 7 + len(cls)) % len(images)]
            annotations.append(Annotation(image.id, BoundingBox(x, y, x + w, y + h), cls))
    return DatasetManifest(split, images, annotations)


@pytest.fixture(scope="session")
def reference_manifests():
    return {s: build_reference_manifest(s) for s in REFERENCE_COUNTS}


@pytest.fixture(scope="session")
def reference_files(tmp_path_factory, reference_manifests):
    root = tmp_path_factory.mktemp("reference")
    paths = {}
    for split, m in reference_manifests.items():
        paths[split] = root / f"{split}.json"
        m.save(paths[split])
    return paths


# -- acceptance summary --------------------------------------------------------

_acceptance = {}


def pytest_runtest_logreport(report):
    marker = getattr(report, "acceptance", None)
    if marker is None:
        return
    if report.when == "call" or report.outcome != "passed":
        prev = _acceptance.get(marker, "PASS")
        _acceptance[marker] = "PASS" if prev == "PASS" and report.outcome == "passed" else "FAIL"


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    m = item.get_closest_marker("acceptance")
    if m is not None:
        report.acceptance = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), status in sorted(_acceptance.items()):
        terminalreporter.write_line(f"[{status}] criterion {number}: {title}")
