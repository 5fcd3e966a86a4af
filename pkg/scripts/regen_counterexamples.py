#!/usr/bin/env python3
"""Rederive the frozen counterexample constants from the fixture tables.

The fixtures in causalspaces.harness hard-code their numeric tables; the
test suite asserts the headline numbers printed here. Run this after any
deliberate fixture change and update the frozen values in the tests.
"""

from causalspaces import harness


def main() -> None:
    print("composition (coupled pair, hard do on X3 then also X1):")
    for name, w in [
        ("counterexample", harness.composition_counterexample()),
        ("control", harness.composition_control()),
    ]:
        print(
            f"  {name}: direct={w.direct!r} extended={w.extended!r} "
            f"discrepancy={w.discrepancy!r}"
        )
    print("  discrepancy by pair coupling:")
    for c in (0.5, 0.6, 0.7, 0.82, 0.9, 1.0):
        print(f"    {c}: {harness._composition_witness(c).discrepancy!r}")

    print("reversibility (doubly stochastic cross-kernels, uniform pair):")
    for name, w in [
        ("counterexample", harness.reversibility_counterexample()),
        ("control", harness.reversibility_control()),
    ]:
        print(
            f"  {name}: premise_error={w.premise_error!r} observed={w.observed!r} "
            f"claimed={w.claimed!r} violation={w.violation!r}"
        )

    ic = harness.ice_cream_shark()
    mi = harness.mutual_information(ic.observational, 0b01, 0b10)
    print(f"ice cream / sharks mutual information (nats): {mi!r}")

    print("dormant instances: classifications")
    from causalspaces.effects import classify_effect

    for i, (cs, u, ev) in enumerate(harness.dormant_instances()):
        print(f"  {i}: {classify_effect(cs, u, ev).value}")


if __name__ == "__main__":
    main()
