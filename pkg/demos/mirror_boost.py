"""Boosted estimation on a noisy 2D mirror benchmark.

A mirror circuit composes a random forward half with its exact inverse, so
the ideal expectation of the first-qubit Z observable is exactly 1.  Under
depolarizing noise the raw measurement sags well below that, and a
truncated classical expansion misses most of the coefficient mass.  The
boosted estimator runs the truncated path set on the same noisy backend,
calibrates the noise attenuation eta from those reference circuits, and
folds the rescaled residual back in.
"""

from quepp import (
    ExecutionPlan,
    ExperimentSpec,
    NoiseModel,
    TrajectorySimulator,
    TruncationPolicy,
    generate_experiment,
    run_quepp,
)


def main():
    spec = ExperimentSpec(family="mirror2d", num_qubits=10, layers=8,
                          rotation_angle=0.6283185307179586, rng_seed=11,
                          p_rx=0.35)
    circuit = generate_experiment(spec)
    observable = spec.resolved_observable()
    print(f"mirror2d: {circuit.num_qubits} qubits, "
          f"{circuit.num_rotations} rotations, ideal value 1.0")

    noise = NoiseModel.depolarizing(lambda2=5e-3, lambda1=2e-4, readout=1e-2)
    backend = TrajectorySimulator(noise)
    plan = ExecutionPlan(num_twirls=100, shots_per_twirl=200, rng_seed=5)

    print(f"\n  {'K_T':>3} {'cpt only':>9} {'raw noisy':>9} "
          f"{'boosted':>8} {'std err':>8} {'eta':>7}")
    for k_t in (1, 2, 3):
        result = run_quepp(circuit, observable, backend, plan,
                           policy=TruncationPolicy.order(k_t))
        print(f"  {k_t:3d} {result.classical_part:9.4f} "
              f"{result.noisy_target.mean:9.4f} {result.boosted:8.4f} "
              f"{result.boosted_std_error:8.4f} {result.eta.value:7.4f}")

    print("\n  the truncated classical sum alone is far from 1; the raw")
    print("  noisy value sags by the circuit's total attenuation; the")
    print("  boosted combination recovers the ideal value within shot noise.")


if __name__ == "__main__":
    main()
