#!/usr/bin/env python3
"""Smoke test for the tofseg_py extension module.

Build and stage the module first:

    cargo build -p tofseg-py
    cp target/debug/libtofseg_py.so python/tofseg_py.so

then run `python3 python/smoke_test.py`.
"""

import math
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import tofseg_py as ts


def main():
    # fused measure: inverse-square invariance
    assert abs(ts.phi(1.0, 1.0) - math.pi / 4) < 1e-12
    assert abs(ts.phi(2.0, 0.25) - ts.phi(1.0, 1.0)) < 1e-12

    names = ts.scenarios()
    assert "static-two-hands" in names and "crossing-safe" in names

    frames, gt = ts.synth("static-two-hands", seed=1)
    assert len(frames) == 60 and len(gt) == 60
    f0 = frames[0]
    assert f0.width == 204 and f0.height == 204

    # engine and sequential oracle agree exactly
    seg = ts.segment(f0, workers=4)
    oracle = ts.segment_oracle(f0)
    assert seg.canonical_labels() == oracle.canonical_labels()

    regions = seg.regions()
    assert len(regions) == 2, [r.pixel_count for r in regions]
    assert all(r.pixel_count >= 200 for r in regions)

    score = ts.score_segmentation(seg, gt, frame=0)
    assert score["cluster_count"] == 2
    assert score["object1"]["iou"] == 1.0
    assert score["object2"]["iou"] == 1.0

    with tempfile.TemporaryDirectory() as d:
        n = ts.synth_to_dir("static-two-hands", 1, d)
        assert n == 60
        reloaded = ts.load_frames(os.path.join(d, "seq.ris"))
        assert len(reloaded) == 60

        log_path = os.path.join(d, "track.log")
        records = ts.track(frames, workers=2, log_path=log_path)
        assert len(records) == 60
        assert records[-1]["phase"] == "tracking"
        assert records[-1]["hand1"]["visible"] and records[-1]["hand2"]["visible"]

        result = ts.evaluate(log_path, d)
        assert result["init_success"] is True
        assert result["id_swaps"] == 0
        assert result["lost_frames"] == 0

    print("smoke test passed")


if __name__ == "__main__":
    main()
