"""Smoke test for the roomsmith_py extension.

Build and install first:

    pip install --no-build-isolation ./crates/python
"""

import json
import pathlib
import sys

import roomsmith_py as rs

ROOT = pathlib.Path(__file__).resolve().parent.parent


def main() -> int:
    doc = (ROOT / "fixtures" / "graphs" / "study.json").read_text()

    graph_json, report_json = rs.correct_graph(doc)
    report = json.loads(report_json)
    assert report["remaining"] == [], report["remaining"]
    assert json.loads(rs.detect_violations(graph_json)) == []

    layout_json = rs.solve_layout(graph_json, seed=5)
    layout = json.loads(layout_json)
    assert layout["status"] == "solved", layout["status"]
    nodes = {o["new_object_id"] for o in json.loads(graph_json)["objects"]}
    assert set(layout["placements"]) == nodes
    assert rs.solve_layout(graph_json, seed=5) == layout_json

    svg = rs.floor_plan(graph_json, layout_json)
    assert svg.startswith("<svg") or svg.startswith("<?xml"), svg[:40]

    wide = json.loads(doc)
    wide["objects"][0]["size_in_meters"]["Length"] = 9.0
    try:
        rs.solve_layout(json.dumps(wide))
    except rs.Unsatisfiable as e:
        assert "failing_level" in json.loads(str(e))
    else:
        raise AssertionError("a 9 m object fit in a 4 m room")

    scores = rs.bradley_terry(["A", "B"], [[0.0, 75.0], [25.0, 0.0]])
    assert abs(scores[0] / sum(scores) - 0.75) < 1e-9, scores

    try:
        rs.solve_layout("{")
    except ValueError:
        pass
    else:
        raise AssertionError("malformed JSON was accepted")

    print(f"roomsmith_py {rs.__version__}: ok, {len(layout['placements'])} objects placed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
