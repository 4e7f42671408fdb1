"""Small end-to-end policy experiment.

Generates a handful of short synthetic instances, simulates three
schedule-creation-day policies, and prints the comparison table with the
best configurations starred.

Run:  python3 demos/demo_policy_experiment.py   (takes about a minute)
"""

import dataclasses

from radsched import ConfigResults, GeneratorConfig, PolicyConfig, SolveBudget
from radsched.datagen import generate_instance
from radsched.simulate import run_simulation
from radsched.stats import CRITERIA, compare_all, render_table

N_INSTANCES = 8
BUDGET = SolveBudget(total_seconds=None, node_limit=300)

POLICIES = (
    PolicyConfig.from_counts(scd_urgent=5, scd_routine=5),
    PolicyConfig.from_counts(scd_urgent=2, scd_routine=1),
    PolicyConfig.from_counts(scd_urgent=2, scd_routine=1, mnda_routine=7),
)


def main():
    # Run the fleet contended: with slack capacity every patient simply
    # starts at their release date and the policies cannot differ.
    config = dataclasses.replace(GeneratorConfig(), span_months=4,
                                 warmup_months=1)
    instances = [generate_instance(config, 7, i) for i in range(N_INSTANCES)]
    print(f"generated {N_INSTANCES} instances, "
          f"{sum(len(i.patients) for i in instances)} patients total")

    configs = []
    for policy in POLICIES:
        aggs = []
        for instance in instances:
            outcome = run_simulation(instance, policy, BUDGET)
            aggs.append(outcome.aggregates())
        configs.append(ConfigResults(
            label=policy.label(),
            instance_ids=tuple(i.id for i in instances),
            values={
                "breach": tuple(a.breach_pct for a in aggs),
                "jmax": tuple(a.jmax_pct for a in aggs),
                "jgood": tuple(a.jgood_pct for a in aggs),
                "waiting": tuple(a.waiting for a in aggs),
            }))
        print(f"simulated {policy.label()}")

    marks = {c: compare_all(configs, c, replications=200).marked
             for c in CRITERIA}
    print()
    print(render_table(configs, marks))
    print("* = not significantly beaten on that criterion")


if __name__ == "__main__":
    main()
