"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The learning experiments (criteria 9 and 10) are marked ``slow``; they run
by default and take roughly 1.5 h and 0.5 h on one CPU. Set HSAC_ACCEPT_DIR
to keep their run directories.
"""

import itertools
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

from hsac import dynamics as dyn
from hsac.dynamics import AircraftParams, ControlRates, UcavState
from hsac.env import CombatEnv, RewardConfig, ScenarioConfig, classify, homotopy_reward
from hsac.geometry import OBS_DIM, RelativeGeometry, observe
from hsac.harness import RunConfig, evaluate, load_metrics, train
from hsac.homotopy import HomotopySchedule, fit_slope
from hsac.nn import PolicyOutput, backward, forward, init_mlp, squashed_backward, squashed_from_noise
from hsac.plotting import moving_average

from .oracles import criterion_oracle, envelope_oracle, euler_step_oracle, ols_slope_oracle, state_derivative_oracle
from .test_sac import fd, random_batch, rel_err, small_learner, td_chain_run

ROOT = Path(__file__).resolve().parents[1]
RESULTS: list[str] = []


def report(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'} | {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def run_dir(tmp_path_factory, name: str) -> Path:
    base = os.environ.get("HSAC_ACCEPT_DIR")
    if base:
        path = Path(base) / name
        path.mkdir(parents=True, exist_ok=True)
        return path
    return tmp_path_factory.mktemp(name)


def admissible_states(rng, n, p=AircraftParams()):
    lo = [-20_000, -20_000, -p.h_max, p.v_min, -math.pi / 2 + 1e-3, -math.pi, p.alpha_min, -math.pi]
    hi = [20_000, 20_000, -p.h_min, p.v_max, math.pi / 2 - 1e-3, math.pi, p.alpha_max, math.pi]
    return [UcavState(*row) for row in rng.uniform(lo, hi, size=(n, 8)).tolist()]


# ---------------------------------------------------------------- 1


def test_c01_dynamics_oracle():
    p = AircraftParams()
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = 0.0
    for s in admissible_states(rng, 10_000, p):
        a = ControlRates(*rng.uniform(-0.2, 0.2, 2))
        d = dyn.state_derivative(s, p)
        got = np.array([d.dx, d.dy, d.dz, d.dv, d.dgamma, d.dchi])
        exp = np.array(state_derivative_oracle(s.as_tuple(), p))
        worst = max(worst, float(np.max(np.abs(got - exp) / np.maximum(np.abs(exp), 1e-300))))
        got = np.array(dyn.step(s, a, p).as_tuple())
        exp = np.array(euler_step_oracle(s.as_tuple(), (a.alpha_dot, a.mu_dot), p))
        worst = max(worst, float(np.max(np.abs(got - exp) / np.maximum(np.abs(exp), 1e-300))))
    elapsed = time.perf_counter() - t0
    report(1, worst <= 1e-12 and elapsed < 5.0, f"max rel err {worst:.2e}, {elapsed:.2f} s")


# ---------------------------------------------------------------- 2


def _position_after(state, rates, dt, horizon=1.0):
    p = AircraftParams(dt=dt)
    s = state
    for _ in range(round(horizon / dt)):
        s = dyn.step(s, rates, p)
    return np.array(s.position)


def test_c02_order_of_accuracy():
    t0 = time.perf_counter()
    dt = 0.1
    ratios = []
    cases = [
        (UcavState(0, 0, -5000, 150.0, gamma=0.1, chi=0.3, alpha=0.08, mu=0.6), ControlRates()),
        (UcavState(0, 0, -5000, 220.0, gamma=-0.2, chi=-1.0, alpha=0.05, mu=-1.0), ControlRates()),
        (UcavState(0, 0, -5000, 120.0, gamma=0.3, chi=2.0, alpha=0.12, mu=0.3), ControlRates()),
    ]
    for s, a in cases:
        ref = _position_after(s, a, dt / 64)
        e1 = np.linalg.norm(_position_after(s, a, dt) - ref)
        e2 = np.linalg.norm(_position_after(s, a, dt / 2) - ref)
        ratios.append(e1 / e2)
    elapsed = time.perf_counter() - t0
    ok = all(1.8 <= r <= 2.2 for r in ratios) and elapsed < 10
    report(2, ok, "ratios " + ", ".join(f"{r:.3f}" for r in ratios) + f", {elapsed:.2f} s")


# ---------------------------------------------------------------- 3


def test_c03_truth_table():
    p, cfg = AircraftParams(), RewardConfig()
    ok_state, bad_state = UcavState(0, 0, -5000, 150.0), UcavState(0, 0, -5000, 450.0)
    values = (-61.0, -60.0, -59.0, 59.0, 60.0, 61.0)
    dists = (150.0, 199.0, 200.0, 1000.0, 3000.0, 3001.0)
    cases = mismatches = 0
    for own_ata, own_aa, opp_ata, opp_aa in itertools.product(values, repeat=4):
        for d, own_bad, opp_bad in itertools.product(dists, (False, True), (False, True)):
            own, opp = (bad_state if own_bad else ok_state), (bad_state if opp_bad else ok_state)
            g_own = RelativeGeometry(math.radians(own_ata), math.radians(own_aa), 0, 0, 0, 0, d)
            g_opp = RelativeGeometry(math.radians(opp_ata), math.radians(opp_aa), 0, 0, 0, 0, d)
            env_own = envelope_oracle(own_aa, own_ata, d)
            env_opp = envelope_oracle(opp_aa, opp_ata, d)
            mismatches += classify(own, opp, g_own, g_opp, p, cfg).value != criterion_oracle(own_bad, env_own, env_opp)
            cases += 1
    report(3, cases >= 320 and mismatches == 0, f"{cases} cases, {mismatches} mismatches")


# ---------------------------------------------------------------- 4


def test_c04_gradient_suite():
    t0 = time.perf_counter()
    worst = {}

    def note(key, err):
        worst[key] = max(worst.get(key, 0.0), err)

    for seed in range(10):
        rng = np.random.default_rng(seed)
        # forward nets
        net = init_mlp([5, 16, 16, 3], rng)
        x, up = rng.normal(size=(4, 5)), rng.normal(size=(4, 3))
        grads, _ = backward(net, x, up)
        num = fd(lambda: float(np.sum(up * forward(net, x))), net.buffer)
        note("net", rel_err(np.concatenate([g.ravel() for g in grads]), num))
        # squashed-Gaussian log-prob w.r.t. mean and log-std
        mean, ls, eps = rng.normal(size=(3, 2)), rng.uniform(-1, 0.5, (3, 2)), rng.normal(size=(3, 2))
        g_lp = rng.normal(size=3)

        def lp(m, s):
            return float(np.sum(g_lp * squashed_from_noise(PolicyOutput(m, s, s), eps)[1]))

        out = PolicyOutput(mean, ls, ls)
        a, _ = squashed_from_noise(out, eps)
        gm, gs = squashed_backward(out, eps, a, np.zeros_like(a), g_lp)
        num_m, num_s = np.zeros_like(mean), np.zeros_like(ls)
        for idx in np.ndindex(mean.shape):
            for arr, numer in ((mean, num_m), (ls, num_s)):
                old = arr[idx]
                arr[idx] = old + 1e-6
                hi = lp(mean, ls)
                arr[idx] = old - 1e-6
                lo = lp(mean, ls)
                arr[idx] = old
                numer[idx] = (hi - lo) / 2e-6
        note("logp", max(rel_err(gm, num_m), rel_err(gs, num_s)))
        # J_Q, J_pi, J_alpha
        lr = small_learner(seed, init_alpha=0.3)
        b, n1, n2 = random_batch(rng), rng.normal(size=(8, 2)), rng.normal(size=(8, 2))
        _, g1, g2 = lr.critic_loss(b, n1)
        for k, (c, g) in enumerate(((lr.critic1, g1), (lr.critic2, g2))):
            num = fd(lambda: lr.critic_loss(b, n1)[0][k], c.buffer)
            note("J_Q", rel_err(np.concatenate([x.ravel() for x in g]), num))
        _, ga, logp = lr.actor_loss(b, n2)
        num = fd(lambda: lr.actor_loss(b, n2)[0], lr.actor.buffer)
        note("J_pi", rel_err(np.concatenate([x.ravel() for x in ga]), num))
        _, g_alpha = lr.temperature_loss(logp)
        num = fd(lambda: lr.temperature_loss(logp)[0], lr.log_alpha_arr)
        note("J_alpha", rel_err(g_alpha, num))
    elapsed = time.perf_counter() - t0
    ok = all(v < 1e-4 for v in worst.values()) and elapsed < 60
    report(4, ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f", {elapsed:.1f} s")


# ---------------------------------------------------------------- 5


def test_c05_homotopy_linearity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    gamma = 0.996
    env = CombatEnv(scenario=ScenarioConfig(max_steps=100, red_controller="policy"))
    worst = 0.0
    for _ in range(100):
        env.reset(rng)
        r, rx = [], []
        done = False
        while not done:
            rec = env.step(ControlRates(*rng.uniform(-0.1, 0.1, 2)), ControlRates(*rng.uniform(-1, 1, 2)), 0.0)
            r.append(rec.blue.sparse)
            rx.append(rec.blue.extra)
            done = rec.done
        disc = gamma ** np.arange(len(r))
        for q in rng.uniform(0, 1, 10):
            blended = float(np.sum(disc * np.array([homotopy_reward(a, b, q) for a, b in zip(r, rx)])))
            split = q * float(np.sum(disc * (np.array(r) + np.array(rx)))) + (1 - q) * float(np.sum(disc * np.array(r)))
            worst = max(worst, abs(blended - split) / max(abs(split), 1e-300))
    elapsed = time.perf_counter() - t0
    report(5, worst <= 1e-9 and elapsed < 10, f"max rel err {worst:.1e} over 1000 (episode, q) pairs, {elapsed:.2f} s")


# ---------------------------------------------------------------- 6


def test_c06_scheduler_contract():
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    s = HomotopySchedule(big_n=100, big_m=100, epsilon=1e-5)
    qs, advances, since, refill_ok = [s.q], 0, 0, True
    t = 0
    while s.q > 0 and t < 100_000:
        s.record(1.0 + 50.0 * math.exp(-t / 30.0) + 1e-7 * rng.standard_normal())
        since += 1
        t += 1
        if s.maybe_advance():
            advances += 1
            refill_ok &= since >= 100
            since = 0
        qs.append(s.q)
    monotone = all(b <= a for a, b in zip(qs, qs[1:]))
    elapsed = time.perf_counter() - t0
    ok = advances == 100 and s.q == 0.0 and qs[0] == 1.0 and monotone and refill_ok and elapsed < 5
    report(6, ok, f"{advances} advances, final q {s.q}, monotone {monotone}, refill {refill_ok}, {elapsed:.2f} s")


# ---------------------------------------------------------------- 7


def test_c07_ols_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        y = rng.normal(size=int(rng.integers(2, 500))) * rng.uniform(0.01, 100) + rng.uniform(-50, 50)
        ref = ols_slope_oracle(y)
        worst = max(worst, abs(fit_slope(y) - ref) / max(abs(ref), 1e-12))
    elapsed = time.perf_counter() - t0
    report(7, worst <= 1e-10 and elapsed < 5, f"max rel err {worst:.1e}, {elapsed:.2f} s")


# ---------------------------------------------------------------- 8


def test_c08_tabular_td():
    t0 = time.perf_counter()
    updates = 20_000
    q, ref = td_chain_run(seed=0, updates=updates)
    err = float(np.max(np.abs(q - ref)))
    elapsed = time.perf_counter() - t0
    report(8, err < 1e-2 and elapsed < 120, f"Q {q.round(4).tolist()} vs {ref.round(4).tolist()}, err {err:.1e}, {updates} updates, {elapsed:.1f} s")


# ---------------------------------------------------------------- 9


@pytest.mark.slow
def test_c09_learning_trend(tmp_path_factory):
    base = RunConfig.from_yaml(ROOT / "configs" / "attack_horizontal.yaml")
    adv = ScenarioConfig.table4("advantageous", max_steps=base.scenario.max_steps)
    t0 = time.process_time()
    passes, lines = 0, []
    for seed in range(3):
        out = run_dir(tmp_path_factory, f"c09_seed{seed}")
        ckpt = train(base.with_overrides(seed=seed, out_dir=str(out)))
        evals = [r["eval_return"] for r in load_metrics(out / "metrics.jsonl") if "eval_return" in r]
        first, last = float(np.mean(evals[:10])), float(np.mean(evals[-10:]))
        win = evaluate(ckpt, adv, 200, seed).win_rate
        ok = last > first and win >= 0.6
        passes += ok
        lines.append(f"seed {seed}: eval {first:.2f} -> {last:.2f}, adv win {win:.0%} {'ok' if ok else 'x'}")
    cpu = time.process_time() - t0
    report(9, passes >= 2 and cpu <= 7200, "; ".join(lines) + f"; cpu {cpu / 60:.0f} min")


# ---------------------------------------------------------------- 10


@pytest.mark.slow
def test_c10_self_play_symmetry(tmp_path_factory):
    base = RunConfig.from_yaml(ROOT / "configs" / "self_play.yaml")
    t0 = time.process_time()
    passes, lines = 0, []
    for seed in range(3):
        out = run_dir(tmp_path_factory, f"c10_seed{seed}")
        train(base.with_overrides(seed=seed, out_dir=str(out)))
        rows = load_metrics(out / "metrics.jsonl")
        gap = np.array([abs(r["sparse_return_blue"] - r["sparse_return_red"]) for r in rows])
        ma = moving_average(gap, 50)  # ma[i] covers episodes i+1 .. i+50
        early = float(np.mean(ma[: 100 - 50 + 1]))
        late = float(np.mean(ma[len(gap) - 100 :]))
        ok = late < early
        passes += ok
        lines.append(f"seed {seed}: gap {early:.2f} -> {late:.2f} {'ok' if ok else 'x'}")
    cpu = time.process_time() - t0
    report(10, passes >= 2 and cpu <= 3600, "; ".join(lines) + f"; cpu {cpu / 60:.0f} min")


# ---------------------------------------------------------------- 11


def test_c11_observation_hygiene():
    p = AircraftParams()
    rng = np.random.default_rng(11)
    a, b = admissible_states(rng, 100_000, p), admissible_states(rng, 100_000, p)
    t0 = time.perf_counter()
    obs = np.array([observe(x, y, p) for x, y in zip(a, b)])
    elapsed = time.perf_counter() - t0
    v_span = p.v_max - p.v_min
    angles = obs[:, [0, 1, 2, 3, 4, 7]]
    ok = (
        obs.shape == (100_000, OBS_DIM)
        and np.all(np.isfinite(obs))
        and np.all((angles > -0.5) & (angles <= 0.5))
        and np.all(obs[:, 5] > 0)
        and np.all((obs[:, [6, 8]] >= p.v_min / v_span) & (obs[:, [6, 8]] <= p.v_max / v_span))
        and np.all(np.abs(obs[:, 9]) <= max(abs(p.alpha_min), p.alpha_max) / (p.alpha_max - p.alpha_min))
        and np.all((obs[:, 10] >= p.h_min / (p.h_max - p.h_min)) & (obs[:, 10] <= p.h_max / (p.h_max - p.h_min)))
    )
    report(11, bool(ok) and elapsed < 5, f"100000 pairs, {elapsed:.2f} s")


# ---------------------------------------------------------------- 12


def test_c12_reproducibility(tmp_path):
    base = RunConfig.from_yaml(ROOT / "configs" / "attack_horizontal.yaml").with_overrides(
        episodes=20, eval_interval=5, eval_episodes=1
    )
    base = base.with_overrides(scenario=ScenarioConfig.from_dict({**base.scenario.to_dict(), "max_steps": 100}))
    paths = []
    for name in ("a", "b"):
        paths.append(train(base.with_overrides(seed=3, out_dir=str(tmp_path / name))))
    same_log = (tmp_path / "a/metrics.jsonl").read_bytes() == (tmp_path / "b/metrics.jsonl").read_bytes()
    updates = sum(1 for _ in open(tmp_path / "a/updates.jsonl"))
    adv = ScenarioConfig.table4("advantageous", max_steps=200)
    same_eval = evaluate(paths[0], adv, 5, 1) == evaluate(paths[1], adv, 5, 1) == evaluate(paths[0], adv, 5, 1)
    report(12, same_log and same_eval and updates > 0, f"metrics identical {same_log}, eval identical {same_eval}")
