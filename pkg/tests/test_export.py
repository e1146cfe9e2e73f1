import json
import xml.etree.ElementTree as ET

import pytest

from bbreach import benchmarks
from bbreach.export import (
    dumps_summary,
    flowpipe_csv,
    read_flowpipe_csv,
    summary,
    svg_projection,
)
from bbreach.policy import read_policy
from bbreach.reach import reach, reach_parallel
from bbreach.system import read_spec

SVG = "{http://www.w3.org/2000/svg}"


@pytest.fixture(scope="module")
def b2_run():
    spec = read_spec(benchmarks.spec_path("b2"))
    pol = read_policy(benchmarks.policy_path("b2"))
    results, verdict = reach_parallel(spec, pol, partitions=2, workers=1)
    return spec, results, verdict


def test_csv_round_trips_exactly(b2_run):
    spec, results, _ = b2_run
    pipe = results[0].pipe
    text = flowpipe_csv(pipe)
    assert text.splitlines()[0] == "step,kind,box_index,l1,u1,l2,u2"
    back = read_flowpipe_csv(text)
    for t, boxes in enumerate(pipe.steps):
        assert back["step"][t] == boxes
    for t, tubes in enumerate(pipe.tubes[1:], start=1):
        assert back["tube"][t] == tubes


def test_csv_non_empty_up_to_goal_step(b2_run):
    _, results, verdict = b2_run
    for r in results:
        back = read_flowpipe_csv(flowpipe_csv(r.pipe))
        for t in range(r.verdict.goal_step + 1):
            assert back["step"][t]


def test_svg_has_one_rect_per_csv_row(b2_run):
    spec, results, _ = b2_run
    pipes = [r.pipe for r in results]
    root = ET.fromstring(svg_projection(pipes, spec))
    rects = root.findall(f"{SVG}rect")
    n_box = sum(1 for r in rects if r.get("class", "").split()[0] == "box")
    rows = sum(len(flowpipe_csv(p).splitlines()) - 1 for p in pipes)
    assert n_box == rows
    assert sum(r.get("class") == "goal" for r in rects) == 1
    assert sum(r.get("class") == "unsafe" for r in rects) == len(spec.unsafe)
    goal = next(r for r in rects if r.get("class") == "goal")
    assert goal.get("fill") == "#1f4fd8"


def test_svg_timeline_for_one_dimension():
    spec = read_spec(benchmarks.spec_path("toy1d"))
    pipe = reach(spec, read_policy(benchmarks.policy_path("toy1d")))
    root = ET.fromstring(svg_projection([pipe], spec, (0, 0)))
    assert "step" in root.find(f"{SVG}title").text
    rows = len(flowpipe_csv(pipe).splitlines()) - 1
    assert sum(r.get("class", "").startswith("box") for r in root.findall(f"{SVG}rect")) == rows


def test_summary_document(b2_run):
    _, results, verdict = b2_run
    doc = json.loads(dumps_summary(summary(results, verdict)))
    assert doc["verdict"] == "Verified"
    assert doc["goal_step"] == verdict.goal_step
    assert len(doc["partitions"]) == 2
    assert doc["boxes_per_step"][0] == 2
    assert all(a >= b for a, b in zip(doc["successors_per_step"], doc["boxes_per_step"]))
