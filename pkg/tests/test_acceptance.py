"""Acceptance suite: every learning-efficiency criterion at its pinned
tolerance, plus the cross-cutting property checks, one printed line each.

Run with ``pytest tests/test_acceptance.py -v -s`` or through the CLI
(``harness run --category ...``), which applies the same thresholds.
"""

import json
import subprocess
import sys

import numpy as np
import pytest

from groundling.harness import (
    check_criteria,
    run_combined,
    run_move_right_exhaustive,
    run_nouns,
    run_prepositions,
    run_scenario,
    run_verbs,
)

SEED = 42


@pytest.fixture(scope="module")
def reports():
    out = {
        "nouns": run_nouns(SEED),
        "prepositions": run_prepositions(SEED),
        "verbs": run_verbs(SEED),
        "move_right": run_move_right_exhaustive(SEED + 991),
        "combined": run_combined(SEED),
    }
    return out


@pytest.fixture(scope="module")
def checks(reports):
    return {c["criterion"]: c for c in check_criteria(reports)}


def expect(checks, name):
    check = checks[name]
    print(f"{'PASS' if check['passed'] else 'FAIL'} - {name} | {check['detail']}")
    assert check["passed"], check["detail"]


class TestLearningEfficiency:
    def test_color_learning(self, checks):
        expect(checks, "color: converges with <= 1.5 examples/color in < 10 s")

    def test_size_learning(self, checks):
        expect(checks, "size: <= 2.5 examples/size")

    def test_shape_learning(self, checks):
        expect(checks, "shape: converges, > 3x color examples, accuracy >= 95%")

    def test_difficulty_ordering(self, checks):
        expect(checks, "difficulty ordering shape > size >= color")

    def test_prepositions(self, checks):
        expect(checks, "prepositions: >= 93% of 144 with <= 5 examples/prep")

    def test_near_vs_behind(self, checks):
        expect(checks, "near needs more examples than behind; behind needs one")

    def test_verbs(self, checks):
        expect(checks, "verbs: <= 2 examples/template, all instantiations correct")

    def test_superfluous_actions_excluded(self, checks):
        expect(checks, "superfluous actions never compiled into rules")

    def test_move_right_64_instantiations(self, checks):
        expect(checks, "move-right-of: <= 2 teaching examples cover all 64 instantiations")

    def test_combined_first_command(self, checks):
        expect(checks, "combined: first command triggers >= 10 agent asks")

    def test_combined_convergence(self, checks):
        expect(checks, "combined: last three commands need exactly one utterance")

    def test_reactivity(self, checks):
        expect(checks, "reactivity: every internal response under 1.1 s")


class TestPropertySuites:
    """The cross-cutting invariants also gate acceptance; the detailed
    versions live in the per-module test files."""

    def test_spatial_primitive_oracle_equivalence(self):
        from test_spatial import TestExtractPrimitives

        TestExtractPrimitives().test_matches_interval_oracle_on_random_pairs()
        print("PASS - spatial primitives match the interval oracle on 200 random pairs")

    def test_composition_round_trip(self):
        from test_spatial import TestEvaluate

        TestEvaluate().test_round_trip_after_single_example()
        print("PASS - composition round-trip: learn then evaluate is true")

    def test_classifier_vote_oracle_equivalence(self):
        from test_perception import TestClassify

        TestClassify().test_matches_oracle_on_random_instances()
        print("PASS - classifier matches the brute-force weighted vote oracle")

    def test_action_model_equivalence(self):
        from test_agent import TestActionModelFidelity

        TestActionModelFidelity().test_model_matches_world_on_fuzzed_pairs()
        print("PASS - action model equals the world on 1000 fuzzed pairs")

    def test_save_load_identity(self):
        from conftest import build_scene
        from groundling.agent import Agent
        from test_agent import run_store_teaching

        agent = Agent(
            build_scene(
                [
                    {"color": "orange", "shape": "triangle", "size": "small", "pose": [0.5, 0.5]},
                    {"color": "blue", "shape": "square", "size": "small", "pose": [0.86, 0.14]},
                ],
                seed=7,
            ),
            seed=1,
        )
        run_store_teaching(agent)
        doc = agent.save_state(include_episodes=True)
        clone = Agent.load_state(json.loads(json.dumps(doc)), agent.scene)
        assert clone.save_state(include_episodes=True) == doc
        print("PASS - save/load round-trip is the identity")

    def test_store_scenario_transcript(self):
        from importlib import resources

        script = json.loads(
            resources.files("groundling.scenarios")
            .joinpath("store_teaching.json")
            .read_text()
        )
        result = run_scenario(script)
        assert result["ok"]
        print("PASS - scripted store-teaching transcript assertions hold")

    def test_projection_offset_exact(self):
        from test_spatial import TestProject

        TestProject().test_exact_offset_for_left_of()
        print("PASS - projection offset is exactly (x - 1.7, y, z)")


class TestCliSurface:
    def test_full_primary_suite_runs_via_cli(self, tmp_path):
        report_path = tmp_path / "report.json"
        result = subprocess.run(
            [
                sys.executable, "-m", "groundling.cli",
                "run", "--category", "nouns", "--seed", str(SEED),
                "--report", str(report_path),
            ],
            capture_output=True,
            text=True,
            timeout=300,
        )
        assert result.returncode == 0, result.stdout + result.stderr
        report = json.loads(report_path.read_text())
        assert report["category"] == "nouns"
        assert all(c["passed"] for c in report["criteria"])
        print("PASS - the evaluation suite runs through the CLI")

    def test_scenario_runs_via_cli(self):
        result = subprocess.run(
            [sys.executable, "-m", "groundling.cli", "scenario", "store-teaching"],
            capture_output=True,
            text=True,
            timeout=120,
        )
        assert result.returncode == 0, result.stdout + result.stderr
        assert "PASS" in result.stdout
