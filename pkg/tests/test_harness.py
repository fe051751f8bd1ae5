import dataclasses
import re

import numpy as np
import pytest

from transportability.data import Method
from transportability.errors import ConfigError, InsufficientReplications, ReplicationFailed
from transportability.harness import (
    METHOD_ORDER,
    MethodSummary,
    ReplicationSummary,
    config_to_json,
    parse_config,
    quantile,
    replication_stream,
    run_replications,
    run_single,
)
from transportability.plot import box_stats, render_boxplot_svg
from transportability.simulation import SimulationConfig


def test_quantiles_type7():
    v = list(range(1, 101))
    assert quantile(v, 0.25) == 25.75
    assert quantile(v, 0.5) == 50.5
    assert quantile(v, 0.75) == 75.25


def test_quantile_hand_interpolation():
    # h = (n-1) q; interpolate between sorted[floor h] and sorted[floor h + 1]
    v = [7.0, 1.0, 4.0, 10.0]
    assert quantile(v, 0.25) == 1 + 0.75 * 3
    assert quantile(v, 0.9) == pytest.approx(7 + 0.7 * 3, abs=1e-12)


def test_method_summary_statistics():
    s = MethodSummary.from_estimates([15.0, 17.0, 19.0], 16.7)
    assert s.median == 17.0
    assert s.bias == pytest.approx(0.3)
    assert s.rmse == pytest.approx(np.sqrt(((15 - 16.7) ** 2 + 0.3**2 + 2.3**2) / 3))
    assert s.q25 <= s.median <= s.q75


def test_single_replication_matches_direct_call():
    cfg = SimulationConfig()
    summary = run_replications(cfg, 1, 77)
    _, values, _ = run_single(cfg.calibrated(), replication_stream(77, 0))
    for m in METHOD_ORDER:
        assert summary[m].estimates == (values[m],)


def test_parallel_matches_serial():
    cfg = SimulationConfig()
    serial = run_replications(cfg, 12, 5, workers=1)
    parallel = run_replications(cfg, 12, 5, workers=3)
    assert serial.to_json() == parallel.to_json()


def test_summary_invariants():
    s = run_replications(SimulationConfig(), 20, 9)
    for m in METHOD_ORDER:
        ms = s[m]
        assert len(ms.estimates) == 20
        assert all(np.isfinite(ms.estimates))
        assert ms.q25 <= ms.median <= ms.q75
    assert s.true_tau == 16.7
    assert len(s.trial_sizes) == 20


def test_failed_replications_are_redrawn():
    # with a tiny population some draws have an empty arm; those slots are re-drawn
    cfg = dataclasses.replace(SimulationConfig(), population_size=90)
    s = run_replications(cfg, 30, 3)
    assert s.replications == 30
    assert s.retries
    assert all(len(s[m].estimates) == 30 for m in METHOD_ORDER)


def test_replication_failure_after_bounded_retries():
    cfg = dataclasses.replace(SimulationConfig(), population_size=3)
    with pytest.raises(ReplicationFailed):
        run_replications(cfg, 1, 0)


def test_parse_config():
    cfg = parse_config("""
        # comment line
        population_size = 500   # trailing comment
        noise_sd = 4.5
        calibration_population = full
    """)
    assert cfg.population_size == 500
    assert cfg.noise_sd == 4.5
    assert cfg.calibration_population == "full"


@pytest.mark.parametrize("text", [
    "bogus_key = 1",
    "noise_sd = 1\nnoise_sd = 2",
    "noise_sd 3",
    "noise_sd = abc",
    "noise_sd = -1",
])
def test_parse_config_rejects(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_config_json_round_trip():
    cfg = SimulationConfig(noise_sd=7.0)
    text = "\n".join(f"{k} = {v}" for k, v in config_to_json(cfg).items())
    assert parse_config(text) == cfg


def _summary(vectors, tau=16.7):
    per = {m: MethodSummary.from_estimates(v, tau) for m, v in zip(METHOD_ORDER, vectors)}
    return ReplicationSummary(per, tau, len(vectors[0]), 0, SimulationConfig())


def test_box_stats_whiskers():
    b = box_stats([1, 2, 3, 4, 5, 6, 7, 8, 9, 100])
    assert b.outliers == (100.0,)
    assert b.whisker_high == 9
    assert b.whisker_low == 1


def test_svg_requires_five_replications():
    with pytest.raises(InsufficientReplications):
        render_boxplot_svg(_summary([[1.0, 2, 3, 4]] * 4))


def _boxes(svg):
    return re.findall(r'<g class="box" data-method="(\w+)">(.*?)</g>', svg, flags=re.S)


def _strip_x(fragment):
    return re.sub(r'\b(x|x1|x2|cx|d)="[^"]*"', "", fragment)


def test_svg_identical_vectors_give_identical_boxes():
    v = [10.0, 12, 15, 16, 18, 21, 30]
    svg = render_boxplot_svg(_summary([v] * 4))
    boxes = _boxes(svg)
    assert [m for m, _ in boxes] == [m.value for m in METHOD_ORDER]
    assert len({_strip_x(body) for _, body in boxes}) == 1
    assert 'class="reference"' in svg


def test_svg_deterministic_and_wellformed():
    import xml.etree.ElementTree as ET

    s = run_replications(SimulationConfig(), 8, 21)
    a, b = render_boxplot_svg(s), render_boxplot_svg(s)
    assert a == b
    ET.fromstring(a)


def _y_of(svg, pattern):
    return float(re.search(pattern, svg).group(1))


def test_svg_reference_inside_gformula_box():
    s = run_replications(SimulationConfig(), 50, 2026, workers=4)
    svg = render_boxplot_svg(s)
    ref_y = _y_of(svg, r'class="reference" x1="[^"]*" y1="([^"]*)"')
    body = dict(_boxes(svg))[Method.GFORMULA.value]
    rect = re.search(r'<rect x="[^"]*" y="([^"]*)" width="[^"]*" height="([^"]*)"', body)
    top, height = float(rect.group(1)), float(rect.group(2))
    assert top <= ref_y <= top + height


def test_svg_pins_far_outliers_to_edge():
    v = [10.0, 12, 15, 16, 18, 21, 22]
    wild = v[:-1] + [-900.0]
    svg = render_boxplot_svg(_summary([v, v, wild, v]))
    body = dict(_boxes(svg))["ipsw"]
    assert 'class="offscale"' in body
    assert "-900.0" in body
    assert "offscale" not in dict(_boxes(svg))["naive"]
