"""Print the headline numbers of the simulator next to their reference values.

    python scripts/reproduce_predictions.py            # analytic only
    python scripts/reproduce_predictions.py --sampled  # also Monte Carlo
"""
from __future__ import annotations

import argparse
import math

from eprsim import control, measure, source
from eprsim.qcore import phase_distance, rotation
from eprsim.noise import FieldNoiseSpec, load_calibration, predicted_S, t2_estimate


def row(name, value, reference, note=""):
    shown = f"{value:>12.3e}" if 0 < abs(value) < 1e-3 else f"{value:>12.6f}"
    print(f"{name:<34} {shown}   ref {reference:<10} {note}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sampled", action="store_true")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()

    chsh = measure.CHSHSettings()
    row("CHSH S, ideal singlet", measure.chsh_S(chsh, source.SINGLET).value, "2.828427")
    cal = load_calibration("chsh_calibrated")
    row("CHSH S, calibrated noise", predicted_S(cal), "2.45")
    row("T2' at 5 Hz/mG, 1 mG", t2_estimate(FieldNoiseSpec(5.0, 1.0)), "0.2 s")
    row("T2' at 5 Hz/mG, 0.1 mG", t2_estimate(FieldNoiseSpec(5.0, 0.1)), "2 s")
    w = measure.wigner_test(0.0, 2 * math.pi / 3, math.pi / 3, source.SINGLET)
    row("Wigner P++(a,b)", w.p_ab.value, "0.375")
    row("Wigner P++(a,c) + P++(c,b)", w.p_ac.value + w.p_cb.value, "0.25")
    deg = load_calibration("fringes_degraded")
    grid = [k * math.pi / 4 for k in range(9)]
    fs = measure.fringe_scan(grid, grid, source.prepare_path_state(source.PreparationConfig(singlet_fidelity=deg.singlet_fidelity)), noise=deg)
    row("fringe visibility, degraded", fs.visibility, "0.80")
    spec = source.DissociationSpec(mean_momentum=10.0, momentum_spread=0.02)
    cv = source.prepare_cv_state(spec, 1e-3, marginal_position_std=300.0)
    epr = measure.epr_infer(cv, sigma_img=1.0)
    row("EPR product (hbar)", epr.product, "0.187", "(< 0.5)")
    epr1 = measure.epr_infer(cv, sigma_img=1.0, t_tof=1.0)
    row("EPR product, 1 s time of flight", epr1.product, "-", f"(tof systematic {epr1.tof_systematic:.4f})")

    worst = 0.0
    for theta in [k * math.pi / 50 for k in range(-100, 101)]:
        for gen in (control.scheme1_sequence, control.scheme2_sequence):
            s = gen(theta, [0], 2)
            model = control.SiteModel(static_shift=10e3, aux_shift=2.5e3)
            worst = max(worst, phase_distance(control.composite_unitary(s, 0, model), rotation("x", theta)))
    row("max gate distance, both schemes", worst, "< 1e-10")
    rep = control.crosstalk_report(control.scheme1_sequence(math.pi / 2, [0], 2), control.DEFAULT_RABI, control.DEFAULT_SHIFT)
    row("leakage per addressed pulse", rep.leakage_per_pulse, "(O/2D)^2")

    if args.sampled:
        print()
        r = measure.chsh_S(chsh, source.SINGLET, 10**6, seed=args.seed, workers=args.workers)
        row("CHSH S, ideal, 1e6 shots", r.value, "2.828427", f"+/- {r.std_error:.4f}")
        state = source.prepare_singlet(source.PreparationConfig(singlet_fidelity=cal.singlet_fidelity))
        r = measure.chsh_S(chsh, state, 10**6, noise=cal, seed=args.seed, workers=args.workers)
        row("CHSH S, calibrated, 1e6 shots", r.value, "2.45", f"+/- {r.std_error:.4f}")
        w = measure.wigner_test(0.0, 2 * math.pi / 3, math.pi / 3, source.SINGLET, 10**5, args.seed, args.workers)
        row("Wigner margin, 1e5 shots", w.margin, "0.125", f"({w.n_sigma:.1f} sigma)")
        e = measure.epr_infer(cv, 1.0, shots=10**5, seed=args.seed, workers=args.workers)
        row("EPR product, 1e5 shots", e.product, "0.187", f"+/- {e.product_std_error:.4f}")


if __name__ == "__main__":
    main()
