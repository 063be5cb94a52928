#!/usr/bin/env python3
"""Smoke test for the ringflow_py extension module.

Builds nothing itself: locates the compiled cdylib under target/ (release
preferred), exposes it as an importable module, and runs a quick solve,
trace, and verification pass on a coarse disk fixture.

Usage:
    cargo build -p ringflow-py --release
    python3 python/smoke_test.py
"""

import importlib.util
import pathlib
import sys
import tempfile


def load_module():
    root = pathlib.Path(__file__).resolve().parent.parent
    candidates = [
        root / "target" / "release" / "libringflow_py.so",
        root / "target" / "debug" / "libringflow_py.so",
        root / "target" / "release" / "ringflow_py.dll",
        root / "target" / "debug" / "ringflow_py.dll",
        root / "target" / "release" / "libringflow_py.dylib",
        root / "target" / "debug" / "libringflow_py.dylib",
    ]
    lib = next((p for p in candidates if p.exists()), None)
    if lib is None:
        sys.exit("build the extension first: cargo build -p ringflow-py --release")
    spec = importlib.util.spec_from_file_location("ringflow_py", lib)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def main():
    rf = load_module()

    ring = rf.disk_ring()
    assert abs(ring.separation() - 1.0) < 1e-12
    assert abs(ring.diameter() - 2.0) < 1e-12
    assert ring.is_stadium()
    ridge = ring.high_ridge()
    assert ridge["kind"] == "point"
    assert abs(ridge["clearance"] - 1.0) < 1e-9

    h = 1.0 / 32.0
    field = rf.solve(ring, h, tol=1e-8)
    # The disk potential is the cone 1 - |x|.
    assert abs(field.sample(0.5, 0.0) - 0.5) < 0.03
    gx, gy = field.sample_gradient(0.5, 0.0)
    assert abs((gx * gx + gy * gy) ** 0.5 - 1.0) < 0.1

    loops = field.level_curve(0.5)
    assert len(loops) == 1
    for (x, y) in loops[0]:
        assert abs((x * x + y * y) ** 0.5 - 0.5) < h

    s = field.trace(0.0, -1.0)
    assert s.termination() == "reached_gamma"
    assert abs(s.arclength() - 1.0) < 3 * h

    # Perpendicular radii do not merge on the disk.
    edges = field.merge_edges([(0.0, -1.0), (1.0, 0.0)])
    assert edges == []

    verdicts = field.verify(contours=10, seed=3)
    failed = [v for v in verdicts if v["status"] == "fail"]
    assert not failed, f"failed verdicts: {failed}"

    with tempfile.TemporaryDirectory() as tmp:
        field_path = str(pathlib.Path(tmp) / "field.txt")
        field.save(field_path)
        reloaded = rf.Field.load(field_path)
        assert reloaded.shape() == field.shape()
        assert reloaded.sample(0.5, 0.0) == field.sample(0.5, 0.0)
        svg_path = str(pathlib.Path(tmp) / "figure.svg")
        field.render(svg_path)
        assert pathlib.Path(svg_path).read_text().startswith("<svg")

    square = rf.Ring.from_json(
        '{"format_version":1,'
        '"outer":{"type":"polygon","vertices":[[-1,-1],[1,-1],[1,1],[-1,1]]},'
        '"inner":{"type":"point","at":[0,0]}}'
    )
    assert not square.is_stadium()

    print("smoke test passed")


if __name__ == "__main__":
    main()
