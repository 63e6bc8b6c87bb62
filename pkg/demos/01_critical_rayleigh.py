"""Marginal stability curves and the critical Rayleigh number.

Walks from the frictionless textbook limit to the damped channel: the
closed-form marginal curve, the discrete wavenumber ladder, and the
eigensolver cross-check with the exchange-of-stability diagnostics.
"""

import numpy as np

from walkercell import NondimParams, critical_rayleigh, marginal_rayleigh, verify_pes
from walkercell.linstab import (CLASSICAL_ALPHA, CLASSICAL_RAYLEIGH,
                                continuous_minimum, crossing_rayleigh,
                                marginal_curve)

BASE = NondimParams(prandtl=1.0, rayleigh=1.0, r0=1.0, delta0=1.0, delta1=1.0)


def main():
    # frictionless limit: the closed form must reproduce 27 pi^4 / 4
    a = np.linspace(0.5, 6.0, 2001)
    curve = marginal_curve(a)
    i = int(np.argmin(curve))
    print("frictionless marginal minimum")
    print(f"  grid scan : R = {curve[i]:.6f} at alpha = {a[i]:.4f}")
    print(f"  closed    : R = {CLASSICAL_RAYLEIGH:.6f} at alpha = {CLASSICAL_ALPHA:.4f}")

    # damped channel: wavenumbers are quantized by the periodic geometry
    print("\ndamped channel, unit radius, unit drag")
    print("  k   R_marginal      eigensolver crossing")
    for k in range(1, 6):
        rm = marginal_rayleigh(BASE, k)
        rx = crossing_rayleigh(BASE, k)
        print(f"  {k}   {rm:14.6f}  {rx:14.6f}")
    a_cont, r_cont = continuous_minimum(BASE)
    print(f"  continuous envelope minimum: R = {r_cont:.6f} at alpha = {a_cont:.4f}")

    cp = critical_rayleigh(BASE)
    print(f"\ncritical point: Rc = {cp.Rc:.10f}, kc = {cp.kc}, "
          f"multiplicity = {cp.multiplicity}")
    print(f"  nearest rival k = {cp.rival_k}, relative gap = {cp.rival_gap:.3%}")

    rep = verify_pes(BASE)
    print("\nexchange of stability at the crossing")
    print(f"  marginal eigenvalues : {rep.n_marginal}")
    print(f"  next decay rate      : {rep.third_rate:.4f}")
    print(f"  crossing slope dr/dR : {rep.slope:.3e}")
    print(f"  bisected crossing    : {rep.crossing:.10f}")


if __name__ == "__main__":
    main()
