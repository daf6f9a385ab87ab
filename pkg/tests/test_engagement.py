import math

import numpy as np
import pytest

from samez.engagement import (TRACE_HEADER, EngagementQuery, QueryValidationError, Termination,
                              engage, run_engagement, setup_engagement, write_trace)
from samez.params import FT, KT, NM, SAM_A, SAM_B
from samez.simcore import MissileState, TargetTrack


def test_setup_head_on_and_tail():
    m, t = setup_engagement(EngagementQuery(0, 400, 180), 10 * NM, SAM_A)
    assert t.position[2] == 0.0 and m.position[2] == 0.0
    assert t.velocity[0] == pytest.approx(-400 * KT) and abs(t.velocity[1]) < 1e-9
    m, t = setup_engagement(EngagementQuery(1000, 400, 0), 10 * NM, SAM_A)
    assert t.velocity[0] == pytest.approx(400 * KT)
    assert t.position[2] == pytest.approx(1000 * FT)
    assert np.linalg.norm(t.velocity) == pytest.approx(400 * KT)


@pytest.mark.parametrize("aspect", [0.0, 37.0, 90.0, 151.0, 180.0])
def test_setup_aspect_angle(aspect):
    _, t = setup_engagement(EngagementQuery(5000, 300, aspect), 20 * NM, SAM_B)
    to_launcher = -t.position[:2] / np.linalg.norm(t.position[:2])
    heading = t.velocity[:2] / np.linalg.norm(t.velocity[:2])
    angle = math.degrees(math.acos(np.clip(heading @ to_launcher, -1, 1)))
    assert angle == pytest.approx(180.0 - aspect, abs=1e-9)


def test_missile_ejected_along_los():
    m, t = setup_engagement(EngagementQuery(20000, 300, 90), 10 * NM, SAM_A)
    u = t.position / np.linalg.norm(t.position)
    assert np.allclose(m.velocity, 30.0 * u)
    assert m.mass == SAM_A.launch_mass and m.time == 0.0


def test_validation_lists_offending_fields():
    with pytest.raises(QueryValidationError) as ei:
        setup_engagement(EngagementQuery(50000, 100, 90), 10 * NM, SAM_A)
    assert len(ei.value.fields) == 2
    assert "elevation_ft" in str(ei.value) and "speed_kt" in str(ei.value)
    with pytest.raises(QueryValidationError):
        setup_engagement(EngagementQuery(0, 300, 90), 0.0, SAM_A)
    assert EngagementQuery(-5000, 200, 0).in_box()
    assert not EngagementQuery(0, 300, 180.01).in_box()


def test_immediate_hit():
    m = MissileState(np.zeros(3), np.array([30.0, 0, 0]), SAM_A.launch_mass, 0.0)
    t = TargetTrack(np.array([10.0, 0, 0]), np.array([-100.0, 0, 0]))
    o = run_engagement(m, t, SAM_A)
    assert o.hit and o.time_of_flight == 0.0 and o.miss_distance == 10.0


@pytest.mark.parametrize("params", [SAM_A, SAM_B])
def test_far_beyond_reach_is_a_kinematic_miss(params):
    q = EngagementQuery(10000, 450, 180)
    o = engage(q, 10 * params.scan_max_nm * NM, params, 0.02)
    assert not o.hit
    assert o.termination_reason in (Termination.MinSpeed, Termination.MaxTime)
    assert o.time_of_flight <= params.max_flight_time + 1e-9


def test_hit_miss_distance_and_determinism():
    q = EngagementQuery(10000, 450, 120)
    a = engage(q, 5 * NM, SAM_A)
    b = engage(q, 5 * NM, SAM_A)
    assert a == b
    assert a.hit and a.miss_distance <= SAM_A.hit_radius
    assert a.termination_reason == Termination.HitRadius


@pytest.mark.parametrize("q, r", [((0, 600, 30), 12.0), ((40000, 300, 170), 33.0),
                                  ((10000, 450, 120), 5.0)])
def test_miss_distance_bounded_by_sampled_ranges(q, r):
    m, t = setup_engagement(EngagementQuery(*q), r * NM, SAM_A)
    o, rows = run_engagement(m, t, SAM_A, 0.02, trace=True)
    ranges = [math.dist(x[1:4], x[4:7]) for x in rows]
    assert o.miss_distance <= min(ranges) + 1e-9
    assert o.hit == (o.miss_distance <= SAM_A.hit_radius)


@pytest.mark.parametrize("params, cases, start_nm", [
    (SAM_A, [(0, 450), (30000, 300)], 5.0),
    (SAM_B, [(10000, 850), (45000, 600)], 10.0),
])
def test_head_on_single_transition_beyond_boost(params, cases, start_nm):
    for alt, spd in cases:
        q = EngagementQuery(alt, spd, 180)
        rs = np.arange(start_nm, params.scan_max_nm, 1.0)
        hits = [engage(q, r * NM, params, 0.02).hit for r in rs]
        flips = sum(1 for a, b in zip(hits, hits[1:]) if a != b)
        assert hits[0] and flips == 1


def test_trace_csv(tmp_path):
    m, t = setup_engagement(EngagementQuery(0, 300, 90), 20 * NM, SAM_A)
    _, rows = run_engagement(m, t, SAM_A, 0.05, trace=True)
    p = tmp_path / "trace.csv"
    write_trace(p, rows)
    lines = p.read_text().splitlines()
    assert lines[0] == ",".join(TRACE_HEADER)
    assert len(lines) == len(rows) + 1
    assert lines[1].split(",")[7] == "Loft"
