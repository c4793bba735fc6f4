"""End-to-end agent behavior: the interaction cycle, grounding, learners,
rule compilation, and query answering."""

import json
import time

import numpy as np
import pytest

from conftest import agent_moves, build_scene, teach_vocabulary

from groundling.agent import (
    ActionModel,
    Agent,
    LearnedRule,
    compile_rules_from_span,
)
from groundling.dialog import Purpose
from groundling.world import (
    ActionUnavailable,
    PickUp,
    PlacementBlocked,
    PointTo,
    PutDown,
    SceneSpec,
    WorldError,
    apply_action,
    generate_scene,
)

STORE_SCRIPT = [
    ("Store the orange object.", None),
    ("Color.", None),
    ("The orange object is in the pantry.", None),
    ("This is in the dishwasher.", "o2"),
    ("Pick up the orange object.", None),
    ("This one.", "o1"),
    ("Put the orange object in the pantry.", None),
]


def run_store_teaching(agent):
    replies = []
    for text, click in STORE_SCRIPT:
        replies.append(agent.submit_utterance(text, click=click))
    return replies


class TestStoreScenario:
    def test_dialog_walkthrough(self, store_agent):
        agent = store_agent
        texts, _ = agent_moves(agent, "Store the orange object.")
        assert texts == ["Is orange a color, size, or shape?"]
        assert agent.stack.ids() == ["A1", "O11"]

        texts, _ = agent_moves(agent, "Color.")
        assert texts == ["What is the goal of store?"]
        assert agent.stack.ids() == ["A1", "G12"]

        texts, _ = agent_moves(agent, "The orange object is in the pantry.")
        assert texts == ["I do not know what in means. Please show me an example."]
        # the canonical three-deep stack snapshot
        assert agent.stack.ids() == ["A1", "G12", "P121"]

        texts, _ = agent_moves(agent, "This is in the dishwasher.", click="o2")
        assert texts == ["Okay.", "What action should I take next?"]
        assert agent.stack.ids() == ["A1", "A13"]

        texts, _ = agent_moves(agent, "Pick up the orange object.")
        assert texts == ["Which one is the orange object?"]
        assert agent.stack.ids() == ["A1", "A13", "R131"]

        _, actions = agent_moves(agent, "This one.", click="o1")
        assert actions == [PickUp("o1")]

        texts, actions = agent_moves(agent, "Put the orange object in the pantry.")
        assert len(actions) == 1 and isinstance(actions[0], PutDown)
        assert "Done." in texts
        assert agent.stack.ids() == []

        # final world state: the orange object rests inside the pantry region
        pose = agent.scene.objects["o1"].pose
        assert agent.scene.locations["pantry"].contains_xy(pose[0], pose[1])

    def test_learning_event_sequence(self, store_agent):
        run_store_teaching(store_agent)
        kinds = [
            e.payload["learning_kind"]
            for e in store_agent.transcript
            if e.kind == "learning"
        ]
        assert kinds == ["word-map", "prep-learn", "goal-learn", "percept-train", "rule-learn"]

    def test_compiled_rules_shape(self, store_agent):
        run_store_teaching(store_agent)
        rules = {r.action: r.conditions for r in store_agent.rules}
        assert rules[("pick-up", "slot:direct_object")] == (("goal-unmet",), ("arm-empty",))
        assert rules[("put-down", "goal-projection")] == (
            ("goal-unmet",), ("arm-holding", "slot:direct_object"),
        )

    def test_episode_span_contains_exactly_the_instructed_actions(self, store_agent):
        run_store_teaching(store_agent)
        receipt = next(
            e.episode_index
            for e in store_agent.transcript
            if e.kind == "dialog" and e.payload.get("text") == "Store the orange object."
        )
        span = store_agent.epmem.span(receipt, len(store_agent.epmem) - 1)
        selected = [
            ep.snapshot["selected_action"]["type"]
            for ep in span
            if ep.snapshot["selected_action"] is not None
        ]
        assert selected == ["pick-up", "put-down"]


class TestRuleGeneralization:
    def taught_agent(self):
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
        return agent

    def fresh_instance(self, doc, seed, hold=None):
        scene = build_scene(
            [
                {"color": "orange", "shape": "circle", "size": "small", "pose": [0.35, 0.30]},
                {"color": "blue", "shape": "square", "size": "small", "pose": [0.60, 0.55]},
            ],
            seed=seed,
        )
        if hold:
            scene = apply_action(scene, PickUp(hold))
        agent = Agent.load_state(json.loads(json.dumps(doc)), scene)
        teach_vocabulary(agent, properties=("color",))
        return agent

    @staticmethod
    def bfs_oracle(holding, primary, at_goal):
        """Minimal primitive actions to reach the goal over the abstract
        pick/place state space."""
        start = (holding, at_goal)
        frontier = [(start, 0)]
        seen = {start}
        while frontier:
            (hold, goal), depth = frontier.pop(0)
            if goal:
                return depth
            moves = []
            if hold is None:
                moves.append((primary, goal))
            else:
                moves.append((None, goal or hold == primary))
                moves.append((None, goal))
            for state in moves:
                if state not in seen:
                    seen.add(state)
                    frontier.append((state, depth + 1))
        raise AssertionError("goal unreachable")

    def test_all_arm_initializations_execute_optimally(self):
        doc = self.taught_agent().save_state()
        for seed, hold in ((21, None), (22, "o1"), (23, "o2")):
            agent = self.fresh_instance(doc, seed, hold=hold)
            actions = []
            moves = agent.submit_utterance("Store the orange object.")
            actions += [m.action for m in moves if m.kind == "external"]
            if hold == "o2":
                # rules cannot fire while holding a non-slot object
                assert any(
                    m.kind == "utterance" and m.template == "ask_next_action" for m in moves
                )
                moves = agent.submit_utterance("Put down the blue object.")
                actions += [m.action for m in moves if m.kind == "external"]
            pose = agent.scene.objects["o1"].pose
            assert agent.scene.locations["pantry"].contains_xy(pose[0], pose[1]), (seed, hold)
            optimal = self.bfs_oracle(hold, "o1", at_goal=False)
            assert len(actions) == optimal, (hold, actions)

    def test_goal_already_true_is_vacuous(self):
        doc = self.taught_agent().save_state()
        scene = build_scene(
            [
                {"color": "orange", "shape": "circle", "size": "small", "pose": [0.86, 0.86]},
                {"color": "blue", "shape": "square", "size": "small", "pose": [0.3, 0.3]},
            ],
            seed=29,
        )
        agent = Agent.load_state(json.loads(json.dumps(doc)), scene)
        teach_vocabulary(agent, properties=("color",))
        moves = agent.submit_utterance("Store the orange object.")
        assert [m for m in moves if m.kind == "external"] == []
        assert any(m.kind == "utterance" and m.text == "Done." for m in moves)

    def test_superfluous_point_to_yields_no_rule(self, store_agent):
        agent = store_agent
        for text, click in STORE_SCRIPT[:5]:
            agent.submit_utterance(text, click=click)
        agent.submit_utterance("This one.", click="o1")
        # inject a pointless demonstration step before the real one
        agent.submit_utterance("Point to this.", click="o2")
        agent.submit_utterance("Put the orange object in the pantry.")
        assert len(agent.rules) == 2
        assert all(r.action[0] != "point-to" for r in agent.rules)


class TestActionModelFidelity:
    def test_model_matches_world_on_fuzzed_pairs(self):
        rng = np.random.default_rng(97)
        scene0 = generate_scene(SceneSpec(objects=[{} for _ in range(5)], seed=13))
        ids = sorted(scene0.objects)
        model = ActionModel(
            bboxes={o.id: o.bbox for o in scene0.objects.values()},
            graspable={o.id: o.graspable for o in scene0.objects.values()},
            workspace=scene0.workspace,
        )
        scene = scene0
        checked = 0
        while checked < 1000:
            kind = rng.integers(3)
            if kind == 0:
                action = PickUp(ids[rng.integers(len(ids))])
            elif kind == 1:
                action = PutDown(float(rng.uniform(0, 1)), float(rng.uniform(0, 1)))
            else:
                action = PointTo(ids[rng.integers(len(ids))])
            state = (scene.arm.holding, {o.id: o.pose for o in scene.objects.values()})
            world_error = model_error = None
            try:
                next_scene = apply_action(scene, action)
            except WorldError as exc:
                world_error = type(exc)
            try:
                next_state = model.apply(state, action)
            except WorldError as exc:
                model_error = type(exc)
            assert world_error == model_error, (action, world_error, model_error)
            if world_error is None:
                assert next_state[0] == next_scene.arm.holding
                for oid in ids:
                    assert next_state[1][oid] == pytest.approx(next_scene.objects[oid].pose)
                scene = next_scene
            checked += 1


class TestResolution:
    def make_agent(self):
        agent = Agent(
            build_scene(
                [
                    {"color": "red", "shape": "triangle", "size": "large", "pose": [0.4, 0.4]},
                    {"color": "red", "shape": "triangle", "size": "large", "pose": [0.86, 0.86]},
                    {"color": "blue", "shape": "circle", "size": "small", "pose": [0.6, 0.2]},
                ],
                seed=3,
            ),
            seed=5,
        )
        teach_vocabulary(agent)
        agent.submit_utterance("This is in the pantry.", click="o2")
        return agent

    def test_gestural_resolution(self):
        agent = self.make_agent()
        _, actions = agent_moves(agent, "Point to this.", click="o3")
        assert actions == [PointTo("o3")]

    def test_descriptive_unique_resolution(self):
        agent = self.make_agent()
        _, actions = agent_moves(agent, "Point to the blue circle.")
        assert actions == [PointTo("o3")]

    def test_spatial_reference_disambiguates(self):
        agent = self.make_agent()
        _, actions = agent_moves(agent, "Point to the triangle in the pantry.")
        assert actions == [PointTo("o2")]

    def test_ambiguous_reference_asks_which(self):
        agent = self.make_agent()
        texts, _ = agent_moves(agent, "Point to the red triangle.")
        assert texts == ["Which one is the red triangle?"]
        _, actions = agent_moves(agent, "The one in the pantry.")
        assert actions == [PointTo("o2")]


class TestQueries:
    def make_agent(self):
        agent = Agent(
            build_scene(
                [
                    {"color": "red", "shape": "square", "size": "small", "pose": [0.3, 0.5]},
                    {"color": "blue", "shape": "circle", "size": "small", "pose": [0.7, 0.5]},
                ],
                seed=11,
            ),
            seed=2,
        )
        teach_vocabulary(agent)
        return agent

    def teach_right_of(self, agent):
        # blue circle is right of the red square in the current arrangement
        agent.submit_utterance("The blue object is right of the red object.")

    def test_attribute_query_answered(self):
        agent = self.make_agent()
        texts, _ = agent_moves(agent, "What color is this?", click="o1")
        assert texts == ["It is red."]

    def test_attribute_query_untrained_is_unknown(self):
        agent = Agent(
            build_scene([{"color": "red", "shape": "square", "size": "small"}], seed=4),
            seed=4,
        )
        texts, _ = agent_moves(agent, "What color is this?", click="o1")
        assert texts == ["I do not know."]

    def test_spatial_yes_no(self):
        agent = self.make_agent()
        self.teach_right_of(agent)
        texts, _ = agent_moves(agent, "Is the blue object right of the red object?")
        assert texts == ["Yes."]
        texts, _ = agent_moves(agent, "Is the red object right of the blue object?")
        assert texts == ["No."]

    def test_spatial_query_unknown_prep(self):
        agent = self.make_agent()
        texts, _ = agent_moves(agent, "Is the blue object above the red object?")
        assert texts == ["I do not know."]

    def test_spatial_listing(self):
        agent = self.make_agent()
        self.teach_right_of(agent)
        texts, _ = agent_moves(agent, "What is right of the red square?")
        assert texts == ["the small blue circle."]

    def test_spatial_listing_empty(self):
        agent = self.make_agent()
        self.teach_right_of(agent)
        texts, _ = agent_moves(agent, "What is right of the blue circle?")
        assert texts == ["Nothing."]


class TestAgentProperties:
    def test_impasse_completeness_never_silent(self):
        rng = np.random.default_rng(59)
        vocabulary = [
            "Store the orange object.", "Pick up the red triangle.",
            "What color is this?", "This is orange.", "The square is left of the circle.",
            "Is the blue object near the red object?", "yes", "no", "never mind",
            "blarg the fizzle", "color", "The one in the pantry.", "What is in the pantry?",
        ]
        agent = Agent(
            build_scene([{} for _ in range(4)], seed=31), seed=7
        )
        ids = sorted(agent.scene.objects)
        for _ in range(60):
            text = vocabulary[rng.integers(len(vocabulary))]
            click = ids[rng.integers(len(ids))] if rng.uniform() < 0.5 else None
            moves = agent.submit_utterance(text, click=click)
            assert moves, f"silent failure on {text!r}"

    def test_reactivity_under_budget(self, store_agent):
        worst = 0.0
        for text, click in STORE_SCRIPT:
            start = time.perf_counter()
            store_agent.submit_utterance(text, click=click)
            worst = max(worst, time.perf_counter() - start)
        assert worst < 1.1

    def test_incrementality_no_reasking(self):
        agent = Agent(
            build_scene(
                [
                    {"color": "red", "shape": "square", "size": "small", "pose": [0.3, 0.5]},
                    {"color": "red", "shape": "circle", "size": "small", "pose": [0.7, 0.5]},
                ],
                seed=17,
            ),
            seed=9,
        )
        agent.submit_utterance("Point to the red square.")
        agent.submit_utterance("Color.")
        agent.submit_utterance("This one.", click="o1")
        agent.submit_utterance("Shape.")          # square property
        agent.submit_utterance("This one.", click="o1")
        agent.submit_utterance("Point to the red circle.")
        agent.submit_utterance("Shape.")          # circle property; red is not re-asked
        agent.submit_utterance("This one.", click="o2")
        asked_words = [
            e.payload["text"]
            for e in agent.transcript
            if e.kind == "dialog" and e.payload.get("template") == "ask_property"
        ]
        assert sum("red" in t for t in asked_words) == 1

    def test_learning_events_only_inside_licensed_segments(self, store_agent):
        run_store_teaching(store_agent)
        licensed = {
            "word-map": {"O"},
            "percept-train": {"O", "R"},
            "prep-learn": {"P"},
            "goal-learn": {"G"},
            "rule-learn": {"A"},
        }
        for event in store_agent.transcript:
            if event.kind == "learning":
                kind = event.payload["learning_kind"]
                assert event.segment_id[0] in licensed[kind], event


class TestSaveLoad:
    def test_round_trip_identity(self, store_agent):
        run_store_teaching(store_agent)
        doc = store_agent.save_state(include_episodes=True)
        clone = Agent.load_state(json.loads(json.dumps(doc)), store_agent.scene)
        assert clone.save_state(include_episodes=True) == doc

    def test_identical_responses_after_reload(self):
        spec = SceneSpec(
            objects=[
                {"color": "red", "shape": "square", "size": "small", "pose": [0.3, 0.5]},
                {"color": "blue", "shape": "circle", "size": "small", "pose": [0.7, 0.5]},
            ],
            seed=23,
        )
        agent = Agent(generate_scene(spec), seed=3)
        teach_vocabulary(agent)
        doc = agent.save_state()
        clone = Agent.load_state(json.loads(json.dumps(doc)), generate_scene(spec))
        probes = [
            ("What color is this?", "o2"),
            ("What shape is this?", "o1"),
            ("Point to the blue circle.", None),
        ]
        # replay the same probes against a fresh identical scene
        fresh = Agent.load_state(json.loads(json.dumps(doc)), generate_scene(spec))
        for text, click in probes:
            a = [(m.kind, m.text, m.action) for m in clone.submit_utterance(text, click=click)]
            b = [(m.kind, m.text, m.action) for m in fresh.submit_utterance(text, click=click)]
            assert a == b
