"""Acceptance criteria 1-11, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v`` (the summary is printed at the end
of the session) or directly with ``python3 tests/test_acceptance.py``.
"""
import functools
import json
import os
import sys
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from fronts import QuadraticFront, knee_oracle, pairwise_nondominated  # noqa: E402
from test_mo_optim import grid_oracle  # noqa: E402
from test_net import numeric_grad, random_batch  # noqa: E402

from paretoprune import net  # noqa: E402
from paretoprune.data import load_idx  # noqa: E402
from paretoprune.mo_optim import solve_subproblem  # noqa: E402
from paretoprune.objectives import ObjectivePoint, penalty_to_weight, weighted_sum  # noqa: E402
from paretoprune.optim import SGD, lr_sigmoid_drop, lr_time_decay  # noqa: E402
from paretoprune.pareto import (  # noqa: E402
    SearchBudget,
    bisection_search,
    filter_nondominated,
    lambda_equalizing,
    stochastic_dichotomic_search,
)
from paretoprune.pruning import Pruner, PruningPolicy, nonzero_per_layer, prune  # noqa: E402
from paretoprune.runner import cmd_train  # noqa: E402
from paretoprune.config import ExperimentConfig  # noqa: E402
from paretoprune.training import TrainConfig, train  # noqa: E402

DESK = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data", "mnist-desk")
DESK_LAYERS = (784, 64, 32, 10)
LAM_STAR = 3e-4
SEEDS = (0, 1, 2)

RESULTS = {}


def record(n, ok, detail, elapsed, limit):
    ok = bool(ok) and elapsed < limit
    RESULTS[n] = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}  [{elapsed:.2f}s < {limit:g}s]"
    print(RESULTS[n])
    return ok


def summary_lines():
    return [RESULTS[k] for k in sorted(RESULTS)]


@functools.lru_cache(maxsize=None)
def desk_data():
    train_set = load_idx(os.path.join(DESK, "train-images-idx3-ubyte.gz"),
                         os.path.join(DESK, "train-labels-idx1-ubyte.gz"), name="train")
    test_set = load_idx(os.path.join(DESK, "t10k-images-idx3-ubyte.gz"),
                        os.path.join(DESK, "t10k-labels-idx1-ubyte.gz"), name="test")
    return train_set, test_set


@functools.lru_cache(maxsize=None)
def desk_run(optimizer, lam, strategy, seed):
    spec = net.NetworkSpec(DESK_LAYERS)
    cfg = TrainConfig(spec, optimizer=optimizer, hyper={"lr": 1e-3}, lam=lam,
                      pruning=PruningPolicy(strategy, 1e-3), epochs=10, batch_size=32, seed=seed)
    t0 = time.perf_counter()
    result = train(cfg, *desk_data())
    return result, time.perf_counter() - t0


def zero_fraction(result):
    spec = net.NetworkSpec(DESK_LAYERS)
    mask = spec.weight_mask()
    return 1.0 - np.count_nonzero(result.weights[mask]) / mask.sum()


def test_c01_gradient_correctness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(20):
        while True:
            sizes = tuple(int(s) for s in rng.integers(1, 7, size=int(rng.integers(2, 5))))
            sizes = sizes[:-1] + (max(sizes[-1], 2),)
            spec = net.NetworkSpec(sizes, include_bias=bool(rng.integers(0, 2)))
            if spec.n_params <= 100:
                break
        w = rng.standard_normal(spec.n_params)
        X, Y = random_batch(rng, spec, int(rng.integers(1, 9)))
        _, g = net.loss_and_grad(spec, w, X, Y)
        num = numeric_grad(spec, w, X, Y, h=1e-5)
        rel = np.abs(g - num) / np.maximum(np.maximum(np.abs(g), np.abs(num)), 1e-6)
        worst = max(worst, float(rel.max()))
    assert record(1, worst < 1e-4, f"max rel err {worst:.2e} over 20 nets", time.perf_counter() - t0, 10)


def test_c02_subproblem_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    d_lam = gap = 0.0
    certified = True
    for _ in range(100):
        # unit-scale gradients: the grid itself is only accurate to |g2 - g1|^2 h^2 / 4
        n = int(rng.integers(1, 51))
        g1 = rng.standard_normal(n) * rng.uniform(0.1, 1.5) / np.sqrt(n)
        g2 = rng.standard_normal(n) * rng.uniform(0.1, 1.5) / np.sqrt(n)
        lam, g = solve_subproblem(g1, g2)
        lam_grid, f_grid = grid_oracle(g1, g2)
        d_lam = max(d_lam, abs(lam - lam_grid))
        gap = max(gap, abs(g @ g - f_grid))
        certified &= bool(g1 @ g >= g @ g - 1e-9 and g2 @ g >= g @ g - 1e-9)
    ok = d_lam < 1e-4 and gap < 1e-8 and certified
    assert record(2, ok, f"|dlam| {d_lam:.1e}, gap {gap:.1e}, certificate {certified}", time.perf_counter() - t0, 5)


def test_c03_nondominance_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(303)
    mismatches = 0
    for trial in range(50):
        vals = rng.random((1000, 2))
        if trial % 5 == 0:
            vals = np.round(vals * 20) / 20  # force ties and duplicates
        points = [ObjectivePoint(float(e), float(o), {"i": i}) for i, (e, o) in enumerate(vals)]
        got = sorted(p.meta["i"] for p in filter_nondominated(points))
        mismatches += got != sorted(pairwise_nondominated([tuple(v) for v in vals]))
    assert record(3, mismatches == 0, f"{mismatches}/50 mismatching sets", time.perf_counter() - t0, 5)


def test_c04_lambda_equalizing():
    t0 = time.perf_counter()
    rng = np.random.default_rng(404)
    worst, inside, n = 0.0, True, 0
    while n < 1000:
        a, b = rng.random(2) * 10, rng.random(2) * 10
        if not ((a[0] < b[0] and a[1] > b[1]) or (a[0] > b[0] and a[1] < b[1])):
            continue
        p, q = ObjectivePoint(*a), ObjectivePoint(*b)
        lam = lambda_equalizing(p, q)
        inside &= 0.0 < lam < 1.0
        sp, sq = weighted_sum(*p.values, lam), weighted_sum(*q.values, lam)
        worst = max(worst, abs(sp - sq) / max(abs(sp), abs(sq)))
        n += 1
    ok = worst < 1e-9 and inside
    assert record(4, ok, f"max rel diff {worst:.1e}, all in (0,1): {inside}", time.perf_counter() - t0, 1)


def test_c05_pruning_properties():
    t0 = time.perf_counter()
    rng = np.random.default_rng(505)
    spec = net.NetworkSpec((20, 10, 5))
    mask = spec.weight_mask()
    checks = {}

    w = rng.uniform(-0.01, 0.01, spec.n_params)
    once, _ = prune(w, PruningPolicy("batchwise", 1e-3), spec)
    twice, _ = prune(once, PruningPolicy("batchwise", 1e-3), spec)
    checks["idempotent"] = np.array_equal(once, twice)

    taus = [1e-4, 1e-3, 3e-3, 1e-2]
    counts = [sum(nonzero_per_layer(spec, prune(w, PruningPolicy("batchwise", t), spec)[0])) for t in taus]
    checks["monotone"] = counts == sorted(counts, reverse=True)

    pruner = Pruner(spec, PruningPolicy("batchwise", 1e-3))
    v = w.copy()
    ok = True
    for _ in range(20):
        before = np.count_nonzero(v[mask])
        pruner.apply(v)
        ok &= np.count_nonzero(v[mask]) <= before
        v += rng.normal(0, 5e-4, v.size)
    checks["l0 non-increase"] = ok

    flat = net.NetworkSpec((3, 1), include_bias=False)
    pr = Pruner(flat, PruningPolicy("batchwise", 1e-3))
    u = np.array([0.0004, 0.5, -0.7])
    pr.apply(u)
    zeroed = u[0] == 0.0
    SGD(3).step(u, np.array([-0.05, 0.0, 0.0]), 0.1)
    rep = pr.apply(u)
    checks["regrowth"] = zeroed and abs(u[0]) > 1e-3 and rep.regrown_since_last == 1

    failed = [k for k, v in checks.items() if not v]
    assert record(5, not failed, "all properties hold" if not failed else f"failed: {failed}",
                  time.perf_counter() - t0, 1)


@pytest.mark.slow
def test_c06_desk_itp_reproduction():
    rows = [desk_run("adam", LAM_STAR, "batchwise", s) for s in SEEDS]
    elapsed = sum(t for _, t in rows)
    accs = [r.summary["acc_test"] for r, _ in rows]
    zeros = [zero_fraction(r) for r, _ in rows]
    passing = sum(a >= 0.90 and z >= 0.80 for a, z in zip(accs, zeros))
    detail = "acc " + "/".join(f"{a:.3f}" for a in accs) + ", zero frac " + "/".join(f"{z:.4f}" for z in zeros)
    assert record(6, passing >= 2, f"{detail}; {passing}/3 seeds pass", elapsed, 300)


@pytest.mark.slow
def test_c07_collapse():
    spec = net.NetworkSpec(DESK_LAYERS)
    mask = spec.weight_mask()
    rows = [desk_run("adam", 0.05, "batchwise", s) for s in SEEDS]
    elapsed = sum(t for _, t in rows)
    collapsed = [not np.any(r.weights[mask]) for r, _ in rows]
    accs = [r.summary["acc_test"] for r, _ in rows]
    ok = all(collapsed) and all(0.05 <= a <= 0.20 for a in accs)
    detail = f"collapsed {collapsed}, acc " + "/".join(f"{a:.4f}" for a in accs)
    assert record(7, ok, detail, elapsed, 300)


@pytest.mark.slow
def test_c08_ordering():
    elapsed = 0.0
    order_ok, mo_ok = 0, 0
    notes = []
    for s in SEEDS:
        l0 = {}
        for strat in ("batchwise", "epochwise", "after_training"):
            r, t = desk_run("adam", LAM_STAR, strat, s)
            elapsed += t
            l0[strat] = int(np.count_nonzero(r.weights[net.NetworkSpec(DESK_LAYERS).weight_mask()]))
        order_ok += l0["batchwise"] <= l0["epochwise"] <= l0["after_training"]
        base, tb = desk_run("adam", LAM_STAR, "batchwise", s)
        mo, tm = desk_run("madam", 0.0, "batchwise", s)
        elapsed += tm
        mean_lam = float(np.mean(mo.lambda_history))
        mo_ok += (mo.summary["acc_train"] >= base.summary["acc_train"]
                  and mo.summary["omega_l1"] > base.summary["omega_l1"]
                  and mean_lam < penalty_to_weight(LAM_STAR))
        notes.append(f"s{s}: l0 {l0['batchwise']}/{l0['epochwise']}/{l0['after_training']}, "
                     f"mean lam {mean_lam:.2e}")
    ok = order_ok >= 2 and mo_ok >= 2
    assert record(8, ok, f"(a) {order_ok}/3 (b) {mo_ok}/3; " + "; ".join(notes), elapsed, 1200)


def test_c09_schedules():
    t0 = time.perf_counter()
    kmax, ts, te = 120, 0.001, 0.0001
    mid = lr_sigmoid_drop(0.75 * kmax, kmax, ts, te)
    rel = abs(mid - (ts + te) / 2) / ((ts + te) / 2)
    rates = [lr_sigmoid_drop(k, kmax, ts, te) for k in range(1, kmax + 1)]
    monotone = all(a >= b for a, b in zip(rates, rates[1:]))
    exact = lr_time_decay(0.1, 0.01, 100) == 0.05
    ok = rel <= 1e-15 and monotone and exact
    assert record(9, ok, f"mid rel err {rel:.1e}, monotone {monotone}, time decay exact {exact}",
                  time.perf_counter() - t0, 1)


def test_c10_knee_search():
    t0 = time.perf_counter()
    lo, hi = 0.0, 0.9
    front = QuadraticFront(1.0, 3.0)
    truth = knee_oracle(front, lo, hi)
    res = bisection_search(front, lo, hi, 6)
    a, b = res.interval
    bis_ok = b - a <= (hi - lo) / 2**6 * (1 + 1e-12) and a <= truth <= b
    sto = stochastic_dichotomic_search(QuadraticFront(1.0, 3.0), lo, hi, SearchBudget(levels=3, seed=0))
    err = abs(sto.knee.lam - truth)
    sto_ok = err <= 0.1 * truth
    detail = f"truth {truth:.5f}, interval [{a:.5f}, {b:.5f}], stochastic knee {sto.knee.lam:.5f}"
    assert record(10, bis_ok and sto_ok, detail, time.perf_counter() - t0, 5)


@pytest.mark.slow
def test_c11_determinism(tmp_path):
    t0 = time.perf_counter()
    data = {
        "dataset": {"kind": "idx",
                    "train_images": os.path.join(DESK, "train-images-idx3-ubyte.gz"),
                    "train_labels": os.path.join(DESK, "train-labels-idx1-ubyte.gz"),
                    "test_images": os.path.join(DESK, "t10k-images-idx3-ubyte.gz"),
                    "test_labels": os.path.join(DESK, "t10k-labels-idx1-ubyte.gz")},
        "network": {"layers": list(DESK_LAYERS)},
        "optimizer": {"kind": "adam", "lr": 1e-3},
        "lam": LAM_STAR,
        "pruning": {"strategy": "batchwise", "tau": 1e-3},
        "epochs": 3,
        "batch_size": 32,
    }
    cfg = ExperimentConfig(json.loads(json.dumps(data)))
    cmd_train(cfg, tmp_path / "a")
    cmd_train(ExperimentConfig(json.loads(json.dumps(data))), tmp_path / "b")
    same = (tmp_path / "a" / "metrics.csv").read_bytes() == (tmp_path / "b" / "metrics.csv").read_bytes()
    assert record(11, same, f"metrics.csv byte-identical: {same}", time.perf_counter() - t0, 300)


if __name__ == "__main__":
    code = pytest.main([__file__, "-q", "-p", "no:cacheprovider"])
    print("\n".join(summary_lines()))
    sys.exit(code)
