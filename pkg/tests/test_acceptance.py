"""Acceptance criteria 1-10 on the planted-band fixture (configs/fixture.json).

Each test prints and records one PASS/FAIL line; the terminal summary lists
all of them together.
"""

import math
import time

import numpy as np
import pytest

from conftest import FIXTURE_CONFIG, PLANTED_BAND, band_iou
from focalzone import pipeline
from focalzone.classifier import ClassifierConfig, WASLSTMNet, evaluate_zone_accuracy
from focalzone.env import Action, EnvParams, FocalState, is_valid, step
from focalzone.metrics import pearson, t_two_sided_p
from focalzone.nn import DenseLayer, LSTMCell, grad_check, softmax_cross_entropy
from focalzone.reward import exp_reward, fit_ar, silhouette

SEEDS = range(10)
pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def base():
    return pipeline.RunConfig.load(FIXTURE_CONFIG)


@pytest.fixture(scope="module")
def train_runs(base):
    runs = {}
    for s in SEEDS:
        t0 = time.perf_counter()
        res = pipeline.train(base.with_seed(s))
        runs[s] = (res, time.perf_counter() - t0)
    return runs


@pytest.fixture(scope="module")
def studies(base):
    return {s: pipeline.reward_study(base.with_seed(s), 8) for s in SEEDS}


def test_criterion_01_planted_band_recovery(train_runs, verdict):
    ious = {s: band_iou(res.summary["zone"]) for s, (res, _) in train_runs.items()}
    slowest = max(t for _, t in train_runs.values())
    hits = sum(v >= 0.5 for v in ious.values())
    ok = hits >= 7 and slowest < 180 and all(r.summary["reward_evaluations"] == 2500 for r, _ in train_runs.values())
    verdict(1, ok, f"IoU>=0.5 in {hits}/10 seeds (need 7); IoUs {[round(v, 3) for v in ious.values()]}; "
                   f"slowest run {slowest:.1f}s (limit 180s)")


def test_criterion_02_classifier_at_planted_zone(base, verdict):
    accs = []
    for s in SEEDS:
        cfg = base.with_seed(s)
        data = pipeline.prepare(cfg)
        tr, te = data.train, data.test
        rs = cfg.expander(data.dataset.K).fit(tr.X)
        accs.append(evaluate_zone_accuracy(rs.transform(tr.X), tr.y, rs.transform(te.X), te.y,
                                           PLANTED_BAND, cfg.classifier, s))
    verdict(2, min(accs) >= 0.90, f"test accuracy at planted zone {PLANTED_BAND}: min {min(accs):.3f}, "
                                  f"mean {np.mean(accs):.3f} over 10 seeds (need every seed >= 0.90)")


def test_criterion_03_surrogate_fidelity(studies, verdict):
    rs = [None if st.correlation is None else st.correlation.r for st in studies.values()]
    hits = sum(r is not None and r >= 0.5 for r in rs)
    verdict(3, hits >= 7, f"Pearson r>=0.5 in {hits}/10 seeds (need 7); r = "
                          f"{[None if r is None else round(r, 3) for r in rs]}")


def test_criterion_04_surrogate_speedup(studies, base, verdict):
    speedups = [st.speedup for st in studies.values()]
    assert base.probe_iterations == 300
    verdict(4, min(speedups) >= 10, f"sum(time_F)/sum(time_G) at probe budget 300: min {min(speedups):.0f}x, "
                                    f"median {np.median(speedups):.0f}x (need >= 10x)")


def test_criterion_05_reward_spot_values(verdict):
    norm = math.e ** 2 - 1
    cases = [((1.0, 0.1, 16, 64), math.exp(2) / norm - 0.025, 1.131518),
             ((-1.0, 0.0, 16, 64), 1 / norm, 0.156518),
             ((0.0, 0.1, 32, 64), math.e / norm - 0.05, 0.375459)]
    errs, prefix_ok = [], True
    for args, direct, quoted in cases:
        got = exp_reward(*args).reward
        errs.append(abs(got - direct))
        prefix_ok &= abs(got - quoted) < 1e-6
    verdict(5, max(errs) <= 1e-12 and prefix_ok,
            f"max |reward - direct| = {max(errs):.1e} (tol 1e-12); quoted 6-digit values matched: {prefix_ok}")


def _dense_softmax(params, batch):
    X, y = batch
    layer = DenseLayer(params["W"], params["b"], "sigmoid")
    out = DenseLayer(params["V"], params["c"])
    h, c1 = layer.forward(X)
    logits, c2 = out.forward(h)
    loss, d = softmax_cross_entropy(logits, y)
    dh, g2 = out.backward(d, c2)
    _, g1 = layer.backward(dh, c1)
    return loss, {"W": g1["W"], "b": g1["b"], "V": g2["W"], "c": g2["b"]}


def _lstm_step(params, batch):
    x, h0, c0, wh, wc = batch
    cell = LSTMCell(params["W"], params["b"], 0.3)
    h, c, cache = cell.step(x, h0, c0)
    *_, grads = cell.step_backward(wh, wc, cache)
    return float(wh @ h + wc @ c), grads


def test_criterion_06_gradient_checks(verdict):
    rng = np.random.default_rng(0)
    a = grad_check(_dense_softmax, {"W": rng.normal(size=(5, 4)), "b": rng.normal(size=5),
                                    "V": rng.normal(size=(3, 5)), "c": rng.normal(size=3)},
                   (rng.normal(size=(6, 4)), rng.integers(0, 3, 6)), max_coords=10_000)
    H = 4
    b = grad_check(_lstm_step, {"W": rng.normal(size=(4 * H, 3 + H)) * 0.5, "b": rng.normal(size=4 * H) * 0.1},
                   tuple(rng.normal(size=n) for n in (3, H, H, H, H)), max_coords=10_000)
    net = WASLSTMNet.init(3, ClassifierConfig(hidden=5, fc_width=4), rng)
    Z, y = rng.normal(size=(3, 12)), np.array([0, 2, 1])
    c = grad_check(lambda p, _: net.loss_and_grad(Z, y, 0.01), net.params(), max_coords=10_000)
    errs = [a.max_rel_error, b.max_rel_error, c.max_rel_error]
    verdict(6, max(errs) < 1e-4, f"max rel. error (a) dense+softmax {errs[0]:.1e}, (b) LSTM step {errs[1]:.1e}, "
                                 f"(c) full WAS-LSTM {errs[2]:.1e} over {c.n_checked} coords (tol 1e-4)")


def _silhouette_oracle(P, labels):
    n = len(P)
    total = 0.0
    for i in range(n):
        own = [j for j in range(n) if labels[j] == labels[i] and j != i]
        if not own:
            continue
        a = sum(math.dist(P[i], P[j]) for j in own) / len(own)
        b = min(sum(math.dist(P[i], P[j]) for j in range(n) if labels[j] == c) / labels.count(c)
                for c in set(labels) if c != labels[i])
        total += 0.0 if max(a, b) == 0 else (b - a) / max(a, b)
    return total / n


def test_criterion_07_oracles(verdict):
    rng = np.random.default_rng(7)
    sil_err = 0.0
    for _ in range(20):
        n, d, c = int(rng.integers(5, 40)), int(rng.integers(1, 6)), int(rng.integers(2, 5))
        labels = np.r_[np.arange(c), rng.integers(0, c, n - c)]
        P = rng.normal(size=(n, d)) + labels[:, None] * rng.random()
        sil_err = max(sil_err, abs(silhouette(P, labels) - _silhouette_oracle(P.tolist(), labels.tolist())))
    # random starts: a start on an invariant subspace of the recurrence would leave
    # the coefficients unidentifiable
    noiseless_err = 0.0
    for _ in range(5):
        phi_k = rng.uniform(-0.4, 0.4, 3)
        c = rng.normal()
        x = np.zeros(60)
        x[:3] = rng.normal(size=3)
        for t in range(3, 60):
            x[t] = phi_k @ x[t - 3:t][::-1] + c
        m = fit_ar(x, 3)
        noiseless_err = max(noiseless_err, np.max(np.abs(m.coefficients - phi_k)), abs(m.intercept - c))
    phi = np.array([0.5, -0.3, 0.15])
    e = rng.normal(size=10_000)
    noisy = np.zeros(10_000)
    for t in range(3, noisy.size):
        noisy[t] = phi @ noisy[t - 3:t][::-1] + e[t]
    noisy_err = float(np.max(np.abs(fit_ar(noisy, 3).coefficients - phi)))
    ok = sil_err <= 1e-12 and noiseless_err <= 1e-9 and noisy_err <= 0.05
    verdict(7, ok, f"silhouette max err {sil_err:.1e} (tol 1e-12) over 20 instances; noiseless AR err "
                   f"{noiseless_err:.1e} (tol 1e-9); noisy AR max |phi err| {noisy_err:.3f} (tol 0.05)")


def test_criterion_08_mdp_fuzz(verdict):
    rng = np.random.default_rng(8)
    bad = length_changed = 0
    for _ in range(100_000):
        Kp = int(rng.integers(12, 300))
        params = EnvParams(Kp, int(rng.integers(1, Kp + 1)), int(rng.integers(1, 12)), int(rng.integers(1, 12)))
        L = int(rng.integers(params.L_min, Kp + 1))
        start = int(rng.integers(0, Kp - L + 1))
        s = FocalState(start, start + L)
        a = Action(int(rng.integers(0, 4)))
        t = step(s, a, params)
        bad += not is_valid(t, params)
        if a in (Action.LEFT_SHIFT, Action.RIGHT_SHIFT):
            length_changed += t.length != s.length
    verdict(8, bad == 0 and length_changed == 0,
            f"10^5 random (state, action) pairs: {bad} invalid results, {length_changed} shifts changed length")


def _series_with_r(r, n=8):
    x = np.arange(n, dtype=float)
    x -= x.mean()
    x /= np.linalg.norm(x)
    z = np.cos(np.arange(n) * 1.3)
    z -= z.mean()
    z -= (z @ x) * x
    z /= np.linalg.norm(z)
    return x, r * x + math.sqrt(1 - r * r) * z


def test_criterion_09_statistics_cross_check(verdict):
    x, y = _series_with_r(0.8258)
    rep = pearson(x, y)
    table_p = t_two_sided_p(3.707, 6)
    ok = abs(rep.r - 0.8258) < 1e-12 and abs(rep.p_two_sided - 0.0115) <= 0.001 and abs(table_p - 0.010) <= 5e-4
    verdict(9, ok, f"r={rep.r:.4f}, n=8 -> t={rep.t_stat:.4f}, p={rep.p_two_sided:.5f} (target 0.0115 +- 0.001); "
                   f"t=3.707, df=6 -> p={table_p:.5f} (table 0.010)")


def test_criterion_10_determinism_and_budget(base, tmp_path, verdict):
    a = pipeline.cmd_train(base, tmp_path / "a")
    pipeline.cmd_train(base, tmp_path / "b")
    same = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
               for f in ("model.json", "history.csv", "summary.json"))
    n_eval = a.summary["reward_evaluations"]
    rows = len((tmp_path / "a" / "history.csv").read_text().splitlines()) - 1
    verdict(10, same and n_eval == 2500 and rows == 2500,
            f"byte-identical artifacts across two runs: {same}; reward evaluations {n_eval}, history rows {rows} (need 2500)")
