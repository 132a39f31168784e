"""Fidelity of small trees under imperfect pi pulses, per pulse type and placement.

Prints, for each shape, the fidelity at a few lambda values for single-type
and all-type pulse errors, then the cost of each individual error slot of the
pulse map (one slot noisy at a time) for {2,2}.
"""
import argparse
import math

from treecluster import noisy_sim as ns
from treecluster.protocol import TreeShape


def sweep(shapes, lams):
    for b in shapes:
        shape = TreeShape(b)
        print(f"\n{shape}")
        print("config  " + "  ".join(f"lam={x:<6g}" for x in lams))
        for c in ns.SWEEP_CONFIGS:
            vals = [ns.tree_fidelity(shape, ns.config_params(c, x)) for x in lams]
            print(f"{c:7s} " + "  ".join(f"{v:10.4f}" for v in vals))


def slot_costs(lam):
    shape = TreeShape((2, 2))
    p = ns.NoiseParams(lam, lam, lam)
    slots = {
        "before first CNOT": ns.PulseMap(e_mid=(), e_after=(), cz_3pi_events=0, cz_pi=()),
        "between CNOTs": ns.PulseMap(e_before=(), e_after=(), cz_3pi_events=0, cz_pi=()),
        "after X": ns.PulseMap(e_before=(), e_mid=(), cz_3pi_events=0, cz_pi=()),
        "CZ pulses": ns.PulseMap(e_before=(), e_mid=(), e_after=()),
    }
    print(f"\n{shape}, all pulse types at lambda={lam}, one slot noisy at a time")
    for name, pm in slots.items():
        print(f"{name:18s} {ns.tree_fidelity(shape, p, pm):.4f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lambdas", default="0.005,0.01,0.02")
    args = ap.parse_args()
    lams = [float(x) for x in args.lambdas.split(",")]
    sweep([(2, 2), (3, 1), (2, 3), (3, 2)], lams)
    slot_costs(0.01)
    shape = TreeShape((2, 2))
    print(f"\n{shape}, dephasing only")
    for tc in (10.0, 100.0, 1000.0, math.inf):
        print(f"t_coh/t_ph={tc:<8g} {ns.tree_fidelity(shape, ns.NoiseParams(t_coh=tc)):.4f}")


if __name__ == "__main__":
    main()
