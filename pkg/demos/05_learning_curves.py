"""Run the evaluation protocols and print the learning-efficiency numbers:
examples per concept, recognition accuracy, and the combined interaction
curve that collapses to a single utterance per command."""

from groundling.harness import run_combined, run_nouns, run_prepositions, run_verbs

SEED = 42

nouns = run_nouns(SEED, runs=3)
print("nouns/adjectives (examples to converge, final accuracy):")
for prop, data in nouns["by_property"].items():
    print(f"  {prop:6s}: {data['avg_examples']:.2f} examples/word, "
          f"accuracy {data['final_accuracy']:.1%}")

preps = run_prepositions(SEED, runs=3)
print(f"\nprepositions: {preps['avg_examples']:.2f} examples/prep, "
      f"accuracy {preps['final_accuracy']:.1%} over 144 arrangements")
run = preps["run_reports"][0]
for prep, count in run["examples_per_prep"].items():
    print(f"  {prep:12s}: {count} example(s)")

verbs = run_verbs(SEED, runs=3)
print(f"\nverbs: {verbs['avg_examples']:.2f} examples/template, "
      f"instantiation tests "
      f"{'all correct' if verbs['all_instantiations_correct'] else 'FAILING'}")

combined = run_combined(SEED, runs=1)
print("\ncombined curve (instructor utterances per command):")
curve = combined["run_reports"][0]["curve"]
for i, point in enumerate(curve):
    bar = "#" * point["instructor_utterances"]
    print(f"  {i + 1:2d} {bar} {point['instructor_utterances']}")
