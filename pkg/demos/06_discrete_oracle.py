"""Exhaustive search agrees with the threshold rule on small instances.

On a discrete instance (two buyers, a handful of types and qualities)
every conceivable deterministic allocation can be enumerated and priced
through the virtual-value objective.  The dynamic-programming oracle
does exactly that and returns its best allocation; the threshold
mechanism's discrete revenue matches the oracle's maximum to machine
precision, and the oracle's winning regions are the familiar cutoffs.
"""

import numpy as np

import qsell


def ramp_instance(n_types, n_quality):
    t = (np.arange(n_types) + 0.5) / n_types
    q = (np.arange(n_quality) + 0.5) / n_quality
    return qsell.DiscreteInstance(
        type_grids=(t, t.copy()),
        type_probs=(np.full(n_types, 1 / n_types), np.full(n_types, 1 / n_types)),
        quality_vals=q,
        quality_probs=np.full(n_quality, 1 / n_quality),
        alpha_vals=np.ones(n_quality),
        reserve_vals=q.copy(),
    )


def main():
    for shape in [(5, 3), (9, 5), (13, 7)]:
        dinst = ramp_instance(*shape)
        threshold = qsell.discrete_threshold_revenue(dinst)
        best, alloc = qsell.brute_force_oracle(dinst)
        print(f"2 buyers x {shape[0]} types x {shape[1]} qualities: "
              f"threshold {threshold:.10f}  oracle {best:.10f}  "
              f"gap {abs(threshold - best):.1e}")

    dinst = ramp_instance(5, 3)
    _, alloc = qsell.brute_force_oracle(dinst)
    t = dinst.type_grids[0]
    q = dinst.quality_vals
    print("\noracle allocation for the 5x3 instance "
          "(buyer 1 cutoff vs rival's type):")
    header = "  quality | " + "  ".join(f"rival {x:.1f}" for x in dinst.type_grids[1])
    print(header)
    for iq, qv in enumerate(q):
        cells = []
        for k2 in range(t.size):
            c = alloc.cutoffs[0][iq, k2]
            cells.append(f"  t>={t[c]:.1f} " if c < t.size else "  never ")
        print(f"    {qv:.2f}  |" + "".join(cells))

    print("\nhigher quality means a higher retained value here, so the "
          "seller demands\nstronger types before releasing better items.")

    # a two-point toy: virtual values by hand are -1/4 and 3/4
    toy = qsell.discrete_virtual_values(
        np.array([0.25, 0.75]), np.array([0.5, 0.5])
    )
    print(f"\ntwo-point sanity check, virtual values: {toy.round(4).tolist()} "
          "(expected [-0.25, 0.75])")


if __name__ == "__main__":
    main()
