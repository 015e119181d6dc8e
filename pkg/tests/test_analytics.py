"""Series report arithmetic, volume oracle, serialization."""

import json

import numpy as np
import pytest

from lungct.analytics import (
    SliceDetection,
    build_report,
    report_to_dict,
    report_to_json,
    report_to_text,
)


def _detection(slice_index, area, confidence=0.8, center=(100, 100)):
    return SliceDetection(slice_index=slice_index, area_px=area, center=center,
                          confidence=confidence)


def test_volume_and_max_area():
    detections = [_detection(0, 1000), _detection(1, 1200), _detection(2, 1100)]
    report = build_report("P1", detections, thickness_mm=5, spacing_mm=(1, 1))
    assert report.volume_px_mm == 16500
    assert report.max_area_px == 1200
    assert report.max_area_slice == 1


def test_empty_report():
    report = build_report("P1", [], thickness_mm=5, spacing_mm=(1, 1))
    assert report.max_area_px == 0
    assert report.max_area_slice is None
    assert report.volume_px_mm == 0
    assert report.volume_mm3 == 0
    assert report.mean_confidence == 0.0
    assert "No tumour found" in report_to_text(report)


def test_volume_mm3_with_spacing():
    detections = [_detection(0, 1200), _detection(1, 1500)]
    report = build_report("P1", detections, thickness_mm=4, spacing_mm=(0.7, 0.7))
    assert report.volume_mm3 == pytest.approx(2700 * 0.49 * 4)  # 5292.0


def test_max_area_tie_goes_to_lowest_slice():
    detections = [_detection(5, 900), _detection(2, 900)]
    report = build_report("P1", detections, thickness_mm=3, spacing_mm=(1, 1))
    assert report.max_area_slice == 2


def test_volume_additivity():
    a = [_detection(i, 100 + i) for i in range(4)]
    b = [_detection(10 + i, 300 + i) for i in range(3)]
    whole = build_report("P", a + b, 2.5, (0.9, 0.8))
    part_a = build_report("P", a, 2.5, (0.9, 0.8))
    part_b = build_report("P", b, 2.5, (0.9, 0.8))
    assert whole.volume_px_mm == part_a.volume_px_mm + part_b.volume_px_mm
    assert whole.volume_mm3 == pytest.approx(part_a.volume_mm3 + part_b.volume_mm3)


def test_adding_detection_never_decreases_max():
    detections = []
    last = 0
    rng = np.random.default_rng(0)
    for i in range(20):
        detections.append(_detection(i, int(rng.integers(1, 3000))))
        report = build_report("P", detections, 5, (1, 1))
        assert report.max_area_px >= last
        last = report.max_area_px


def test_sphere_phantom_volume_close_to_analytic():
    radius, thickness, spacing = 20, 3.0, 0.7
    detections = []
    analytic = 0.0
    ys, xs = np.ogrid[-64:64, -64:64]
    for depth in range(-radius + 1, radius):
        r2 = radius * radius - depth * depth
        area = int(np.count_nonzero(xs * xs + ys * ys <= r2))
        detections.append(_detection(depth + radius, area))
        analytic += np.pi * r2 * spacing * spacing * thickness
    report = build_report("P", detections, thickness, (spacing, spacing))
    assert abs(report.volume_mm3 - analytic) / analytic < 0.10


def test_detection_validation():
    with pytest.raises(ValueError):
        _detection(0, 0)
    with pytest.raises(ValueError):
        _detection(0, 10, confidence=1.5)


def test_report_thickness_validation():
    with pytest.raises(ValueError):
        build_report("P", [], 0, (1, 1))


def test_json_is_stable_and_complete():
    detections = [_detection(3, 1500, confidence=0.9, center=(346, 200))]
    report = build_report("P42", detections, 5, (0.8, 0.8))
    text = report_to_json(report)
    parsed = json.loads(text)
    assert parsed["patient_id"] == "P42"
    assert parsed["positives"][0]["slice_index"] == 3
    assert parsed["positives"][0]["center"] == [346, 200]
    assert "finished_at" not in parsed  # no volatile fields in the report itself
    assert report_to_json(report) == text  # deterministic rendering


def test_text_report_mentions_key_figures():
    detections = [_detection(3, 1500, confidence=0.9)]
    report = build_report("P42", detections, 5, (1, 1))
    text = report_to_text(report)
    assert "P42" in text
    assert "slice 3" in text
    assert "1500" in text
    assert "90.0%" in text


def test_report_dict_survives_multiple_positives_per_slice():
    detections = [_detection(7, 800), _detection(7, 300)]
    report = build_report("P", detections, 5, (1, 1))
    assert len(report.positives) == 2
    assert report.volume_px_mm == (800 + 300) * 5
    assert report_to_dict(report)["max_area_slice"] == 7
