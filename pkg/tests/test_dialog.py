"""Segment stack discipline, event categorization, and the move policy."""

import pytest

from groundling.dialog import (
    AgentMove,
    AgentView,
    InteractionStack,
    Originator,
    PopUnachieved,
    Purpose,
    Status,
    categorize,
    next_move,
)
from groundling.language import WordClass, base_lexicon, parse


def lex():
    lexicon = base_lexicon()
    for word in ("orange", "red", "triangle", "square"):
        lexicon.register(word, WordClass.NOUN_ADJ)
    lexicon.register("in", WordClass.PREPOSITION)
    return lexicon


def passive_view(goal_met=False, action=None):
    return AgentView(goal_met=lambda seg: goal_met, ready_action=lambda seg: action)


class TestStack:
    def test_segment_ids_follow_tree_position(self):
        stack = InteractionStack()
        a1 = stack.push(Purpose.LEARN_VERB, Originator.AGENT)
        assert a1.id == "A1"
        o11 = stack.push(Purpose.LEARN_WORD_PROPERTY, Originator.AGENT, {"word": "orange"})
        assert o11.id == "O11"
        o11.status = Status.ACHIEVED
        stack.pop_achieved()
        g12 = stack.push(Purpose.ACQUIRE_GOAL, Originator.AGENT, {"verb": "store"})
        assert g12.id == "G12"
        p121 = stack.push(Purpose.LEARN_PREP, Originator.AGENT, {"word": "in"})
        assert p121.id == "P121"
        assert stack.ids() == ["A1", "G12", "P121"]

    def test_pop_returns_focus_to_parent(self):
        stack = InteractionStack()
        stack.push(Purpose.LEARN_VERB, Originator.AGENT)
        g = stack.push(Purpose.ACQUIRE_GOAL, Originator.AGENT, {"verb": "x"})
        p = stack.push(Purpose.LEARN_PREP, Originator.AGENT, {"word": "in"})
        p.status = Status.ACHIEVED
        stack.pop_achieved()
        assert stack.top() is g

    def test_pop_unachieved_rejected(self):
        stack = InteractionStack()
        stack.push(Purpose.LEARN_VERB, Originator.AGENT)
        with pytest.raises(PopUnachieved):
            stack.pop_achieved()

    def test_either_participant_can_push(self):
        stack = InteractionStack()
        stack.push(Purpose.TEACH_WORD_EXAMPLES, Originator.INSTRUCTOR, {"word": "red"})
        q = stack.push(Purpose.ANSWER_QUERY, Originator.INSTRUCTOR, {})
        assert stack.top() is q
        assert [s.originator for s in stack.open_segments()] == [
            Originator.INSTRUCTOR, Originator.INSTRUCTOR,
        ]


class TestCategorize:
    def test_goal_context_reinterprets_descriptive(self):
        stack = InteractionStack()
        stack.push(Purpose.LEARN_VERB, Originator.AGENT)
        stack.push(Purpose.ACQUIRE_GOAL, Originator.AGENT, {"verb": "store"})
        result = parse("The orange object is in the garbage", lex())
        assert categorize(result, stack) == "goal-description"

    def test_same_sentence_plain_outside_context(self):
        stack = InteractionStack()
        result = parse("The orange object is in the garbage", lex())
        assert categorize(result, stack) == "descriptive-sentence"

    def test_command_category(self):
        stack = InteractionStack()
        result = parse("Pick up the red triangle", lex())
        assert categorize(result, stack) == "verb-command"

    def test_command_inside_action_acquisition(self):
        stack = InteractionStack()
        stack.push(Purpose.ACQUIRE_ACTIONS, Originator.AGENT, {"verb": "store"})
        result = parse("Pick up the red triangle", lex())
        assert categorize(result, stack) == "instructed-action"

    def test_prep_example_inside_prep_learning(self):
        stack = InteractionStack()
        stack.push(Purpose.LEARN_PREP, Originator.AGENT, {"word": "in"})
        result = parse("The red square is in the garbage", lex())
        assert categorize(result, stack) == "prep-example"


class TestPolicy:
    def test_word_property_asks_then_waits(self):
        stack = InteractionStack()
        stack.push(Purpose.LEARN_WORD_PROPERTY, Originator.AGENT, {"word": "orange"})
        move = next_move(stack, passive_view())
        assert move.kind == "utterance" and move.template == "ask_property"
        stack.top().context["asked"] = True
        assert next_move(stack, passive_view()).kind == "wait"

    def test_execute_command_prefers_external_action(self):
        stack = InteractionStack()
        stack.push(Purpose.EXECUTE_COMMAND, Originator.INSTRUCTOR, {})
        move = next_move(stack, passive_view(action="PICK"))
        assert move.kind == "external" and move.action == "PICK"

    def test_execute_command_completion(self):
        stack = InteractionStack()
        stack.push(Purpose.EXECUTE_COMMAND, Originator.INSTRUCTOR, {})
        move = next_move(stack, passive_view(goal_met=True))
        assert move.kind == "internal" and move.note == "command-complete"

    def test_empty_stack_waits_for_task(self):
        move = next_move(InteractionStack(), passive_view())
        assert move.kind == "utterance" and move.template == "ask_next_task"

    def test_acquire_actions_asks(self):
        stack = InteractionStack()
        stack.push(Purpose.ACQUIRE_ACTIONS, Originator.AGENT, {"verb": "store"})
        move = next_move(stack, passive_view())
        assert move.template == "ask_next_action"

    def test_policy_total_over_all_purposes(self):
        for purpose in Purpose:
            stack = InteractionStack()
            stack.push(purpose, Originator.AGENT,
                       {"word": "w", "verb": "v", "np_text": "the thing"})
            move = next_move(stack, passive_view())
            assert isinstance(move, AgentMove)
            for flag in ("asked",):
                stack.top().context[flag] = True
            move = next_move(stack, passive_view())
            assert isinstance(move, AgentMove)
