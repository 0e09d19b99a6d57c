"""Smoke test for the flowsched extension module.

Build and install with `maturin develop -m crates/py/Cargo.toml`, or copy the
built shared library next to this script as flowsched.so, then run
`python python/smoke.py`.
"""

import math
import pathlib

import flowsched

ROOT = pathlib.Path(__file__).resolve().parent.parent

TWO_LINKS = """
seed = 1
vertices = ["u", "v"]
edges = [
  { from = "u", to = "v", coefficients = [1.0, 0.0, 0.0] },
  { from = "u", to = "v", coefficients = [1.0, 0.0, 0.0] },
]
commodities = [{ source = "u", dest = "v" }, { source = "u", dest = "v" }]
"""


def main():
    inst = flowsched.Instance.from_toml(TWO_LINKS)
    assert (inst.num_vertices, inst.num_edges, inst.num_commodities) == (2, 2, 2)
    assert inst.expected_edge_cost(0, 2) == 4.0

    eq = flowsched.run_known(inst)
    assert eq.is_nash and eq.cost == 2.0
    assert sorted(p[0] for p in eq.paths) == [0, 1]
    assert flowsched.price_of_anarchy(inst) == 1.0
    assert flowsched.poa_upper_bound(inst) == 9.0
    assert flowsched.convergence_bound(inst) == 1

    explore, bf, exploit = flowsched.schedule_counts(5.0, 3, 2, 100_000)
    assert explore + bf + exploit == 100_000
    starts = flowsched.exploration_starts(5.0, 3, 2, 100_000)
    assert starts[0] == (1, 0) and len(starts) * 3 >= explore

    curve = flowsched.regret_curve(inst, 5.0, 10_000, 7)
    assert curve[-1][0] == 10_000
    assert all(a[1] <= b[1] for a, b in zip(curve, curve[1:]))
    t, regret, ratio = curve[-1]
    assert math.isclose(ratio, regret / math.log(t))

    noisy = flowsched.Instance.load(str(ROOT / "scenarios" / "desk_noisy.toml"))
    b = flowsched.g_bound(noisy, noisy.seed, periods_per_source=2_000)
    assert b.d == 2 and b.g_star > 0

    try:
        flowsched.Instance.from_toml("vertices = [1")
    except ValueError:
        pass
    else:
        raise AssertionError("bad TOML accepted")

    print("flowsched smoke test ok:", inst, f"G* = {b.g_star:.1f}")


if __name__ == "__main__":
    main()
