"""Quick end-to-end check of the extension module."""

import json
import math
import os
import tempfile

import lle_bloch as lb


def main():
    w = lb.PeriodicWave.solve(1.0, 0.01)
    assert abs(w.period - 2 * math.pi) < 1e-14
    assert w.residual_norm <= 1e-10, w
    back = lb.PeriodicWave.from_json(w.to_json())
    assert back.coeffs == w.coeffs
    print(w)

    v = lb.check_stability(w, grid=101)
    assert v.stable and v.theta > 0, v.violations
    c = lb.critical_curve(w, v)
    assert c.d > 0 and abs(c.a) <= 1e-6
    print(v, c)

    norms = lb.decompose(w, c, 4, 10.0)
    assert norms["closure_residual"] <= 1e-8
    print("decomposition norms at N=4, t=10:", {k: f"{x:.3e}" for k, x in norms.items()})

    unstable = lb.check_stability(lb.PeriodicWave.constant(1.0, 2.0), grid=51)
    assert not unstable.stable
    assert any(cond == "i" for cond, _, _ in unstable.violations)

    s = lb.sum_plain(16, 2 * math.pi, 1.0, 4.0)
    i = lb.integral_plain(2 * math.pi, 1.0, 4.0)
    assert 0 < s < i
    plain, weighted = lb.sharpness_gap(2 * math.pi, 1.0, 16, 4.0)
    assert plain > weighted > 0

    try:
        lb.PeriodicWave.solve(1.5, 0.01)
    except ValueError as e:
        print("rejected:", e)
    else:
        raise AssertionError("alpha > 1 should be rejected")

    with tempfile.TemporaryDirectory() as tmp:
        cfg = os.path.join(tmp, "run.toml")
        with open(cfg, "w") as f:
            f.write(
                f'output_dir = {json.dumps(os.path.join(tmp, "run"))}\n'
                'wave_kind = "constant"\nM = 8\n'
                "[params]\nalpha = 1.0\nF = 2.0\n"
                "[xi_grid]\nn = 51\nrefine = 4\n"
                "[sharpness]\nd = 1.0\nN_list = [4, 8]\nt_list = [1.0]\n"
            )
        ran, skipped, na = lb.run_pipeline(cfg)
        assert "report" in ran and "sweep" in na
        ran, skipped, na = lb.run_pipeline(cfg)
        assert ran == [] and "solve" in skipped

    print("smoke test passed")


if __name__ == "__main__":
    main()
