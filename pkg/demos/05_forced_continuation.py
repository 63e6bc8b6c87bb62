"""Forced basic states, spectrum splitting, and branch continuation.

A zonally varying wall-temperature profile replaces the uniform bottom
heating. The resulting steady basic state breaks the translation
symmetry, so the double eigenvalue at criticality splits, the critical
Rayleigh number shifts by an amount of the order of the forcing, and
the forced equilibrium can be continued in R. A scalar fold problem and
a synthetic Hopf crossing exercise the detectors on known answers.
"""

import warnings

import numpy as np

from walkercell import (Grid, NondimParams, arclength_continue, basic_state,
                        continue_branch, cosine_forcing, critical_rayleigh,
                        critical_rayleigh_forced, eigen_spectrum,
                        periodic_amplitude_fit, perturbed_spectrum)
from walkercell.continuation import hopf_from_spectrum
from walkercell.transition import default_grid

BASE = NondimParams(prandtl=1.0, rayleigh=1.0, r0=1.0, delta0=1.0, delta1=1.0)


def forced_spectrum_demo():
    cp = critical_rayleigh(BASE)
    grid = default_grid(BASE, cp.kc)
    p0 = BASE.replace(rayleigh=0.97 * cp.Rc)

    ev0 = eigen_spectrum(p0, nev=3)
    print("unforced spectrum at 0.97 Rc (translation symmetry pairs modes)")
    print("  " + ", ".join(f"{e.beta.real:+.4f} (x{e.multiplicity})"
                           for e in ev0))

    # perturbative regime: the split is quadratic in the forcing size
    f = cosine_forcing(grid, 0.002, k=1)
    bs = basic_state(p0, f)
    ev = perturbed_spectrum(p0, bs, nev=3)
    print(f"\nweak k = 1 wall profile (measured size {bs.epsilon:.4f})")
    print(f"  leading pair: {ev[0].real:+.8f}, {ev[1].real:+.8f}")
    print(f"  split {abs(ev[0].real - ev[1].real):.2e}")
    Rce = critical_rayleigh_forced(p0, bs, 0.9 * cp.Rc, 1.2 * cp.Rc)
    print(f"  frozen-state crossing {Rce:.4f} vs unforced {cp.Rc:.4f} "
          f"({abs(Rce - cp.Rc) / cp.Rc:.2e} relative shift)")

    # strong forcing at Rc itself: the state is no longer perturbatively
    # small and the solver says so
    pc = BASE.replace(rayleigh=cp.Rc)
    with warnings.catch_warnings(record=True) as wrec:
        warnings.simplefilter("always")
        f = cosine_forcing(grid, 0.1, k=1)
        bs = basic_state(pc, f)
    print(f"\nstrong profile at Rc (measured size {bs.epsilon:.4f})")
    if wrec:
        print(f"  note: {wrec[0].message}")
    ev = perturbed_spectrum(pc, bs, nev=3)
    print(f"  leading pair: {ev[0].real:+.6f}, {ev[1].real:+.6f}"
          f"  (split {abs(ev[0].real - ev[1].real):.4f})")
    Rce = critical_rayleigh_forced(pc, bs, 0.9 * cp.Rc, 1.2 * cp.Rc)
    print(f"  frozen-state crossing {Rce:.4f} "
          f"({abs(Rce - cp.Rc) / cp.Rc:.2%} above the unforced value)")


def branch_demo():
    g = Grid(1.0, 8, 6)
    f = cosine_forcing(g, 0.05, k=1)
    br = continue_branch(BASE, f, R_start=100.0, R_end=400.0, ds=20.0, grid=g)
    amps = br.column("amplitude")
    print(f"\nforced equilibrium branch: {len(br.points)} points, "
          f"stopped because '{br.stopped}'")
    print(f"  amplitude grows {amps[0]:.4f} -> {amps[-1]:.4f}; "
          f"folds: {len(br.folds)}, Hopf points: {len(br.hopf)}")


def fold_oracle_demo():
    # F = R u + 2 u^2 - u^3 has a fold at (u, R) = (1, -1)
    def Ffun(u, R):
        return np.array([R * u[0] + 2 * u[0] ** 2 - u[0] ** 3])

    def Jfun(u, R):
        return np.array([[R + 4 * u[0] - 3 * u[0] ** 2]]), np.array([u[0]])

    br = arclength_continue(Ffun, Jfun, np.array([2.0]), 0.0, -2.0, ds=0.1)
    fp = br.folds[0]
    print(f"\nscalar fold located at u = {fp.u[0]:.8f}, R = {fp.R:.8f} "
          f"(exact 1, -1)")
    print(f"  stability index flips {fp.index_before} -> {fp.index_after}")


def hopf_oracle_demo():
    # eigenvalue pair (mu - 0.3) + 2i crosses the axis at mu = 0.3
    hp = hopf_from_spectrum(lambda mu: complex(mu - 0.3, 2.0), (0.0, 1.0))
    print(f"\nsynthetic Hopf crossing at mu = {hp.R:.8f}, "
          f"frequency {hp.frequency:.6f}")

    mus = np.linspace(0.01, 0.2, 24)
    fit = periodic_amplitude_fit(mus, 3.0 * np.sqrt(mus))
    print(f"orbit amplitude fit: exponent {fit.exponent:.4f}, "
          f"prefactor {fit.prefactor:.4f} (square-root law)")


def main():
    forced_spectrum_demo()
    branch_demo()
    fold_oracle_demo()
    hopf_oracle_demo()


if __name__ == "__main__":
    main()
