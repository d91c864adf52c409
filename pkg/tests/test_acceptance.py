"""Acceptance gate: twelve headline checks, one PASS/FAIL line each.

Each test prints its verdict with the key measured numbers and elapsed
time before asserting, so the summary table is complete even when a
criterion fails.  Budgets are asserted alongside the numeric claims.
"""

import json
import time
from dataclasses import replace

import numpy as np
import pytest

import edgeofchaos as eoc
from edgeofchaos import HyperParams, NetworkArchitecture
from edgeofchaos.cli import main as cli_main
from edgeofchaos.criticality import fit_exponential, trajectory
from edgeofchaos.trainer import _halved


def report(capsys, num, ok, detail, t0):
    elapsed = time.perf_counter() - t0
    with capsys.disabled():
        print(f"\nACCEPTANCE {num:02d} {'PASS' if ok else 'FAIL'} — {detail} "
              f"({elapsed:.1f}s)")
    return elapsed


def test_criterion_01_critical_point(capsys, tanh_act):
    t0 = time.perf_counter()
    swc = eoc.critical_sigma_w(0.3, tanh_act)
    ok = abs(swc - 1.39) < 0.02
    elapsed = report(capsys, 1, ok, f"critical_sigma_w(0.3) = {swc:.6f} "
                     f"(target 1.39±0.02)", t0)
    assert ok, swc
    assert elapsed < 1.0


def test_criterion_02_zero_bias_critical_point(capsys, tanh_act):
    t0 = time.perf_counter()
    swc = eoc.critical_sigma_w(0.0, tanh_act)
    ok = abs(swc - 1.0) < 1e-6
    elapsed = report(capsys, 2, ok, f"critical_sigma_w(0) = {swc!r} "
                     f"(target 1 ± 1e-6)", t0)
    assert ok, swc
    assert elapsed < 1.0


def test_criterion_03_linear_closed_form(capsys):
    t0 = time.perf_counter()
    linear = eoc.get_activation("linear")
    worst = 0.0
    for sw in (0.2, 0.4, 0.6, 0.8, 0.9):
        for sb in (0.1, 0.5):
            res = eoc.q_fixed_point(HyperParams(sw, sb), linear)
            exact = sb**2 / (1.0 - sw**2)
            worst = max(worst, abs(res.value - exact))
    ok = worst < 1e-8
    elapsed = report(capsys, 3, ok, f"linear q* max |error| = {worst:.2e} "
                     f"over 10 points (target < 1e-8)", t0)
    assert ok, worst
    assert elapsed < 1.0


def test_criterion_04_depth_scale_identity(capsys, tanh_act):
    t0 = time.perf_counter()
    worst = 0.0
    for sw in np.linspace(0.5, 1.15, 5):
        for sb in np.linspace(0.1, 0.5, 5):
            hp = HyperParams(sw, sb)
            scales = eoc.depth_scales(hp, tanh_act)
            assert scales.chi1 < 1.0, (sw, sb)
            worst = max(worst, abs(scales.zeta_c * np.log(scales.chi1) + 1.0))
    swc = eoc.critical_sigma_w(0.3, tanh_act, tol=1e-12)
    at_crit = eoc.depth_scales(HyperParams(swc, 0.3), tanh_act)
    ok = worst < 1e-10 and np.isinf(at_crit.zeta_c)
    elapsed = report(capsys, 4, ok, f"max |ζ_c·log χ1 + 1| = {worst:.2e} on 5×5 "
                     f"grid; ζ_c at criticality = {at_crit.zeta_c}", t0)
    assert ok, (worst, at_crit)
    assert elapsed < 5.0


def test_criterion_05_critical_exponents(capsys, tanh_act):
    t0 = time.perf_counter()
    targets = {2.0: 0.213, 3.0: 0.406, 4.0: 0.545, 5.0: 0.653, 6.0: 0.743}
    entries = eoc.exponent_table(sorted(targets), tanh_act)
    alphas = {e.sigma_b: e.fit.alpha for e in entries}
    worst = max(abs(alphas[sb] - a) for sb, a in targets.items())

    pow_rss = sum(e.fit.rss for e in entries)
    exp_rss = 0.0
    for e in entries:
        traj = trajectory(
            HyperParams(e.sigma_w_critical, e.sigma_b), tanh_act,
            c0=0.9, num_layers=40,
        )
        exp_rss += fit_exponential(traj, l_min=1).rss
    ratio = exp_rss / pow_rss

    ok = worst < 0.05 and ratio >= 10.0
    elapsed = report(
        capsys, 5, ok,
        "α = (" + ", ".join(f"{alphas[sb]:.3f}" for sb in sorted(targets)) + ") "
        f"max dev {worst:.3f} (< 0.05); exp/pow RSS ratio {ratio:.1f} (≥ 10)", t0,
    )
    assert ok, (alphas, ratio)
    assert elapsed < 60.0


def test_criterion_06_power_law_fitter_exact(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(100):
        amp = rng.uniform(0.1, 2.0)
        alpha = rng.uniform(0.1, 1.2)
        offset = rng.uniform(0.0, 0.5)
        layers = np.arange(1, rng.integers(25, 61))
        dev = amp / layers**alpha + offset
        traj = eoc.Trajectory(
            layers=layers, deviations=dev, params=HyperParams(1.0, 0.3), c0=0.9
        )
        fit = eoc.fit_power_law(traj)
        worst = max(
            worst, abs(fit.alpha - alpha), abs(fit.amplitude - amp),
            abs(fit.offset - offset),
        )
    ok = worst < 1e-5
    elapsed = report(capsys, 6, ok, f"noiseless recovery max param error = "
                     f"{worst:.2e} over 100 cases (target < 1e-5)", t0)
    assert ok, worst
    assert elapsed < 10.0


def test_criterion_07_mean_field_vs_monte_carlo(capsys, tanh_act):
    t0 = time.perf_counter()
    n = 10_000
    hp = HyperParams(1.39, 0.3)
    x = np.random.default_rng(12345).standard_normal(n)
    x /= np.sqrt(np.mean(x * x))           # q⁰ = 1 exactly
    arch = NetworkArchitecture(layer_widths=(n,) * 11, activation=tanh_act)
    empirical = eoc.empirical_q_trajectory(x, arch, hp, seed=0)

    theory = [hp.sigma_w**2 * 1.0 + hp.sigma_b**2]   # first layer is linear in x
    for _ in range(9):
        theory.append(eoc.q_map_step(theory[-1], hp, tanh_act))
    dev = float(np.max(np.abs(empirical - np.array(theory))))
    tol = 5.0 / np.sqrt(n)
    ok = dev < tol
    elapsed = report(capsys, 7, ok, f"width-10⁴ max |q_emp − q_map| = {dev:.4f} "
                     f"(target < {tol}) over 10 layers", t0)
    assert ok, dev
    assert elapsed < 60.0


def test_criterion_08_input_output_correlations(capsys, tanh_act, mnist12k):
    t0 = time.perf_counter()
    arch = NetworkArchitecture(
        layer_widths=(784,) + (50,) * 10, activation=tanh_act
    )
    results = eoc.propagate_experiment(
        mnist12k.inputs[:100], arch, eoc.PHASE_PRESETS, seed=0, num_seeds=5
    )
    got_in = results["critical"]["input"].mean_correlation
    got = {p: results[p]["mean_correlation"] for p in eoc.PHASE_PRESETS}
    checks = [
        ("input", got_in, 0.414, 0.03),
        ("ordered", got["ordered"], 0.99, 0.03),
        ("disordered", got["disordered"], 0.041, 0.05),
        ("critical", got["critical"], 0.50, 0.08),
    ]
    bad = [f"{name} {val:.3f}∉{target}±{tol}"
           for name, val, target, tol in checks if abs(val - target) > tol]
    ok = not bad
    elapsed = report(
        capsys, 8, ok,
        f"⟨c⟩ input {got_in:.3f}, ordered {got['ordered']:.3f}, "
        f"disordered {got['disordered']:.3f}, critical {got['critical']:.3f}"
        + ("" if ok else "; out of band: " + "; ".join(bad)), t0,
    )
    assert ok, bad
    assert elapsed < 30.0


def test_criterion_09_subsample_invariance(capsys, tanh_act, mnist12k):
    t0 = time.perf_counter()
    arch = NetworkArchitecture(
        layer_widths=(784,) + (50,) * 10, activation=tanh_act
    )
    res = eoc.resize_experiment(
        mnist12k.inputs[:1000], 0.5, arch, eoc.PHASE_PRESETS["critical"], seed=0
    )
    vals = tuple(
        res[k].mean_correlation
        for k in ("input_full", "input_subsample", "output_full", "output_subsample")
    )
    diff = abs(vals[2] - vals[3])
    targets = (0.40, 0.39, 0.72, 0.72)
    worst = max(abs(v - t) for v, t in zip(vals, targets))
    ok = diff < 0.02 and worst < 0.05
    elapsed = report(
        capsys, 9, ok,
        "⟨c⟩ = (" + ", ".join(f"{v:.3f}" for v in vals) + ") vs (0.40, 0.39, "
        f"0.72, 0.72), |output full−half| = {diff:.4f} (< 0.02)", t0,
    )
    assert ok, (vals, diff)
    assert elapsed < 120.0


def test_criterion_10_training_phase_separation(capsys, mnist12k):
    t0 = time.perf_counter()
    data = eoc.desk_split(mnist12k, 10_000, 2_000)
    base = eoc.TrainConfig(
        arch=eoc.default_arch(), hp=eoc.TRAINING_PHASES["critical"],
        epochs=20, train_size=10_000,
    )

    def mean_final(hp, variant=None):
        finals = []
        for seed in (0, 1, 2):
            cfg = replace(base, hp=hp, seed=seed)
            if variant is not None:
                cfg = _halved(cfg, variant)
            finals.append(eoc.train(cfg, *data).final)
        return float(np.mean(finals))

    baseline = {p: mean_final(hp) for p, hp in eoc.TRAINING_PHASES.items()}
    ordering_ok = (
        baseline["critical"] >= baseline["ordered"] >= baseline["chaotic"]
    )

    degr = {}
    for variant in ("half-data", "half-width", "half-batch"):
        degr[variant] = {
            p: baseline[p] - mean_final(eoc.TRAINING_PHASES[p], variant)
            for p in ("critical", "ordered")
        }
    clause = {
        v: d["critical"] < 0.02 and d["critical"] < d["ordered"]
        for v, d in degr.items()
    }
    ok = ordering_ok and all(clause.values())
    detail = (
        f"final acc crit/ord/cha = {baseline['critical']:.4f}/"
        f"{baseline['ordered']:.4f}/{baseline['chaotic']:.4f} "
        f"(ordering {'ok' if ordering_ok else 'VIOLATED'}); degradation "
        "crit vs ord: " + ", ".join(
            f"{v} {d['critical']:.4f} vs {d['ordered']:.4f}"
            f"{'' if clause[v] else ' ✗'}" for v, d in degr.items()
        )
    )
    elapsed = report(capsys, 10, ok, detail, t0)
    assert ok, (baseline, degr)
    assert elapsed < 900.0


def test_criterion_11_gradient_checks(capsys, tanh_act):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = 0.0

    for _ in range(3):     # backprop on the training loss
        arch = NetworkArchitecture(layer_widths=(6, 5, 4), activation=tanh_act)
        for loss in eoc.LOSSES:
            cfg = eoc.TrainConfig(
                arch=arch, hp=HyperParams(1.3, 0.3), loss=loss,
                batch_size=5, train_size=5,
            )
            params = [
                (rng.normal(size=(6, 5)) * 0.5, rng.normal(size=5) * 0.3),
                (rng.normal(size=(5, 4)) * 0.5, rng.normal(size=4) * 0.3),
            ]
            x = rng.normal(size=(5, 6))
            y = rng.integers(0, 4, size=5)
            grads = eoc.gradient(cfg, params, (x, y))

            from edgeofchaos.trainer import _forward_full, _loss_and_output_grad

            def loss_at(p):
                hs = _forward_full(p, tanh_act, x)
                return _loss_and_output_grad(hs[-1], y, loss)[0]

            eps = 1e-6
            for li in range(2):
                for slot in range(2):
                    arr = params[li][slot]
                    take = min(6, arr.size)
                    for flat in rng.choice(arr.size, size=take, replace=False):
                        bump = np.zeros(arr.size)
                        bump[flat] = eps
                        bump = bump.reshape(arr.shape)
                        pp = [list(pair) for pair in params]
                        pp[li][slot] = arr + bump
                        up = loss_at(pp)
                        pp[li][slot] = arr - bump
                        down = loss_at(pp)
                        fd = (up - down) / (2 * eps)
                        rel = abs(grads[li][slot].flat[flat] - fd) / max(
                            abs(fd), 1e-8
                        )
                        worst = max(worst, rel)

    for k in range(3):     # input-output jacobian
        arch = NetworkArchitecture(layer_widths=(5, 4, 3), activation=tanh_act)
        net = eoc.init_network(arch, HyperParams(1.4, 0.2), seed=k)
        x = rng.normal(size=5)
        jac = eoc.jacobian(net, x)
        eps = 1e-6
        for j in range(5):
            dx = np.zeros(5)
            dx[j] = eps
            _, up = eoc.forward(net, (x + dx)[None, :])
            _, dn = eoc.forward(net, (x - dx)[None, :])
            fd = (up[-1][0] - dn[-1][0]) / (2 * eps)
            rel = np.max(np.abs(jac[:, j] - fd) / np.maximum(np.abs(fd), 1e-8))
            worst = max(worst, float(rel))

    ok = worst < 1e-5
    elapsed = report(capsys, 11, ok, f"backprop+jacobian max relative FD error "
                     f"= {worst:.2e} (target < 1e-5)", t0)
    assert ok, worst
    assert elapsed < 10.0


def test_criterion_12_cli_determinism(capsys, tmp_path):
    t0 = time.perf_counter()
    stdout_cmds = {
        "fixed-point": ["fixed-point", "--sigma-w", "1.39", "--sigma-b", "0.3"],
        "depth-scales": ["depth-scales", "--sigma-w", "1.0", "--sigma-b", "0.3"],
    }
    file_cmds = {
        "phase-diagram": ["phase-diagram", "--steps", "5"],
        "exponents": ["exponents", "--sigma-b-list", "2,3", "--num-layers", "30"],
        "propagate": ["propagate", "--examples", "20", "--layers", "3",
                      "--width", "30", "--num-seeds", "2"],
        "train": ["train", "--epochs", "1", "--train-size", "500",
                  "--val-size", "200", "--width", "16", "--depth", "2"],
    }
    mismatches = []
    for name, argv in stdout_cmds.items():
        outs = []
        for _ in range(2):
            rc = cli_main(argv)
            assert rc == 0, (name, rc)
            outs.append(capsys.readouterr().out)
        if outs[0] != outs[1]:
            mismatches.append(name)
    for name, argv in file_cmds.items():
        dirs = [tmp_path / f"{name}-{k}" for k in range(2)]
        for d in dirs:
            rc = cli_main(argv + ["--out-dir", str(d)])
            assert rc == 0, (name, rc)
        files = sorted(
            p.name for p in dirs[0].iterdir() if "manifest" not in p.name
        )
        assert files, name
        for fname in files:
            if (dirs[0] / fname).read_bytes() != (dirs[1] / fname).read_bytes():
                mismatches.append(f"{name}/{fname}")
    ok = not mismatches
    elapsed = report(capsys, 12, ok, "all six subcommands byte-identical "
                     "across two runs" if ok else
                     f"non-reproducible: {mismatches}", t0)
    assert ok, mismatches
    assert elapsed < 300.0
