"""Acceptance criteria, one test each.

Every test prints a single ``PASS``/``FAIL`` line with the measured numbers
(collected again in the terminal summary) and then asserts.

Run alone with ``pytest tests/test_acceptance.py -m acceptance``.
"""

import json
import time

import numpy as np
import pytest

import oracles
from conftest import ACCEPTANCE_LINES
from spsg import cli, io
from spsg import evaluation as E
from spsg import features as F
from spsg import model as M
from spsg import segment as G
from spsg import solver as S
from spsg import superpixels as SP
from spsg.synthetic import random_instance, random_weights, two_region_image

pytestmark = pytest.mark.acceptance


def report(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_01_solver_matches_subgradient_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst_obj = worst_rel = 0.0
    for k in range(20):
        gamma = (0.0, 1.0)[k % 2]
        inst = random_instance(rng, 5, 8, gamma=gamma)
        inst = inst.with_lambda(0.3 * S.lambda_max(inst))
        sol = S.solve(inst)
        U_ref, f_ref = oracles.projected_subgradient(inst.cost, inst.L.toarray(), gamma, inst.lam)
        worst_obj = max(worst_obj, abs(sol.objective - f_ref) / abs(f_ref))
        worst_rel = max(worst_rel, np.linalg.norm(sol.U - U_ref) / np.linalg.norm(U_ref))
    dt = time.perf_counter() - t0
    ok = worst_obj <= 0.01 and worst_rel <= 2e-2 and dt < 60
    report(1, "solver vs 1e6-step subgradient oracle", ok,
           f"max objective gap {worst_obj:.2e} (<=1e-2), max relative error {worst_rel:.2e} "
           f"(<=2e-2), {dt:.1f}s (<60s)")


def test_02_convergence_for_wide_mu_range():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = []
    for k in range(3):
        inst = random_instance(rng, 10, 50, gamma=(0.0, 0.1, 1.0)[k])
        inst = inst.with_lambda(0.3 * S.lambda_max(inst))
        for mu in (0.1, 1.0, 10.0):
            sol = S.solve(inst, S.SolverParams(mu=mu, tol=1e-4, max_iters=2000))
            worst.append((sol.converged, sol.iterations, mu))
    dt = time.perf_counter() - t0
    ok = all(c for c, _, _ in worst) and dt < 30
    its = max(i for _, i, _ in worst)
    report(2, "combined residual < 1e-4 within 2000 iterations, mu in {0.1, 1, 10}", ok,
           f"{sum(c for c, _, _ in worst)}/{len(worst)} runs converged, "
           f"max iterations {its}, {dt:.1f}s (<30s)")


def test_03_single_word_at_and_beyond_lambda_max():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    counts = []
    for k in range(10):
        inst = random_instance(rng, 6, 12, gamma=(0.0, 0.01, 0.1, 1.0, 10.0)[k % 5])
        lm = S.lambda_max(inst)
        for alpha in (1.0, 1.1):
            counts.append(len(S.solve(inst.with_lambda(alpha * lm)).selected))
    dt = time.perf_counter() - t0
    ok = all(c == 1 for c in counts) and dt < 20
    report(3, "exactly one selected word for alpha in {1.0, 1.1}", ok,
           f"selected counts {sorted(set(counts))} over {len(counts)} solves, {dt:.1f}s (<20s)")


def test_04_shared_factorization_equals_per_row_solves():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(10):
        l, n = int(rng.integers(1, 8)), int(rng.integers(2, 21))
        gamma, mu, lam = rng.uniform(0, 10), rng.uniform(0.1, 10), rng.uniform(0, 2)
        L = M.laplacian(random_weights(rng, n))
        st = S.SolverState.initial(l, n)
        st.U_hat, st.V_hat = rng.random((l, n)), rng.random((l, n))
        st.Lambda1, st.Lambda2 = rng.standard_normal((l, n)), rng.standard_normal((l, n))
        U, V = S.primal_update(st, S.build_kkt(L, gamma, mu, n), lam, n)
        B = np.zeros((2 * n, 2 * n))
        B[:n, :n] = 2 * gamma * L.toarray() + mu * np.eye(n)
        B[n:, n:] = mu * np.eye(n)
        A = oracles.consecutive_constraints(n)
        for j in range(l):
            b = np.concatenate([lam / n - mu * st.U_hat[j] + st.Lambda1[j],
                                lam / n - mu * st.V_hat[j] + st.Lambda2[j]])
            y = oracles.dense_row_qp(B, A, b)
            worst = max(worst, np.max(np.abs(np.concatenate([U[j], V[j]]) - y)))
    dt = time.perf_counter() - t0
    report(4, "shared KKT back-solves equal per-row dense solves", worst <= 1e-8 and dt < 5,
           f"max deviation {worst:.2e} (<=1e-8), {dt:.2f}s (<5s)")


def test_05_feasibility_after_every_iteration():
    t0 = time.perf_counter()
    inst = random_instance(np.random.default_rng(5), 8, 30, gamma=1.0, lam=0.05)
    worst = {"colsum": 0.0, "uhat": 0.0, "vhat": 0.0, "rows": 0.0}

    def check(st):
        worst["colsum"] = max(worst["colsum"], np.max(np.abs(st.U_hat.sum(axis=0) - 1)))
        worst["uhat"] = max(worst["uhat"], -st.U_hat.min())
        worst["vhat"] = max(worst["vhat"], -st.V_hat.min())
        worst["rows"] = max(worst["rows"], np.max(np.ptp(st.U + st.V, axis=1)))

    sol = S.solve(inst, callback=check)
    dt = time.perf_counter() - t0
    ok = (worst["colsum"] <= 1e-9 and worst["uhat"] <= 0 and worst["vhat"] <= 0
          and worst["rows"] <= 1e-8 and dt < 5)
    report(5, "feasibility invariants every iteration", ok,
           f"{sol.iterations} iterations; column-sum error {worst['colsum']:.1e} (<=1e-9), "
           f"min U_hat {-worst['uhat']:.1e}, min V_hat {-worst['vhat']:.1e} (>=0), "
           f"U+V row spread {worst['rows']:.1e} (<=1e-8), {dt:.2f}s (<5s)")


def grid_search_projection(v, levels=34):
    """Pattern search over a shrinking lattice on the simplex.

    Starts at the best point of a coarse lattice and repeatedly tries every
    pairwise mass transfer of size ``h``, halving ``h`` when none improves.
    """
    pts = oracles.simplex_grid(v.size, 8)
    z = pts[np.argmin(np.sum((pts - v) ** 2, axis=1))].copy()
    pairs = [(i, j) for i in range(v.size) for j in range(v.size) if i != j]
    src = np.array([p[0] for p in pairs])
    dst = np.array([p[1] for p in pairs])
    h = 1.0 / 8
    for _ in range(levels):
        while True:
            amount = np.minimum(h, z[src])
            cand = np.repeat(z[None, :], len(pairs), axis=0)
            cand[np.arange(len(pairs)), src] -= amount
            cand[np.arange(len(pairs)), dst] += amount
            f = np.sum((cand - v) ** 2, axis=1)
            k = int(np.argmin(f))
            if f[k] >= np.sum((z - v) ** 2):
                break
            z = cand[k]
        h /= 2
    return z


def test_06_projection_and_laplacian_oracles():
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    V = rng.standard_normal((5, 1000)) * rng.uniform(0.1, 3, 1000)
    P = S.project_simplex_columns(V)
    worst_proj = max(np.linalg.norm(P[:, i] - grid_search_projection(V[:, i])) for i in range(1000))
    feasible = P.min() >= 0 and np.allclose(P.sum(axis=0), 1, atol=1e-12)
    worst_lap = 0.0
    for _ in range(20):
        n = int(rng.integers(2, 40))
        W = random_weights(rng, n, extra_edges=int(rng.integers(0, 2 * n)))
        L = M.laplacian(W)
        U = rng.random((int(rng.integers(1, 6)), n))
        worst_lap = max(worst_lap, abs(np.trace(U @ L @ U.T)
                                       - oracles.laplacian_quadratic_by_pairs(U, W.toarray())))
    dt = time.perf_counter() - t0
    ok = worst_proj <= 1e-6 and feasible and worst_lap <= 1e-9 and dt < 10
    report(6, "simplex projection vs grid search, Laplacian identity", ok,
           f"max projection distance {worst_proj:.1e} (<=1e-6), feasible={feasible}, "
           f"max Laplacian identity error {worst_lap:.1e} (<=1e-9), {dt:.1f}s (<10s)")


def test_07_metrics_equal_brute_force():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    exact_cov = exact_pri = True
    worst_voi = 0.0
    for _ in range(150):
        N = int(rng.integers(1, 101))
        a, b = rng.integers(0, rng.integers(1, 7), N), rng.integers(0, rng.integers(1, 7), N)
        exact_cov &= E.covering(a, b) == oracles.covering_brute(a, b)
        exact_pri &= E.pri(a, b) == oracles.pri_brute(a, b)
        worst_voi = max(worst_voi, abs(E.voi(a, b) - oracles.voi_brute(a, b)))
    same = rng.integers(0, 5, (10, 10))
    ideal = (E.covering(same, 3 * same + 1), E.pri(same, 3 * same + 1), E.voi(same, 3 * same + 1))
    ois_ok = True
    for _ in range(200):
        k, m = int(rng.integers(1, 8)), int(rng.integers(1, 10))
        table = {str(i): rng.random(k) for i in range(m)}
        r = E.ods_ois(table)
        ois_ok &= r["ois"] >= r["ods"]
    dt = time.perf_counter() - t0
    ok = exact_cov and exact_pri and worst_voi <= 1e-12 and ideal == (1.0, 1.0, 0.0) and ois_ok and dt < 5
    report(7, "Cov/PRI/VoI vs brute force, ideal values, OIS >= ODS", ok,
           f"Cov exact={exact_cov}, PRI exact={exact_pri}, VoI max diff {worst_voi:.1e} "
           f"(<=1e-12, float logs), identical maps -> {ideal}, OIS>=ODS={ois_ok}, {dt:.2f}s (<5s)")


def test_08_two_region_end_to_end():
    t0 = time.perf_counter()
    img, gt = two_region_image(64, seed=0)
    spmap = SP.grid_slic(img, 30)
    graph = SP.build_adjacency(spmap, img)
    X = F.image_features(img, spmap.labels)
    D = M.learn_dictionary(X, 20).D
    inst = M.build_instance(X, D, graph, SP.sizes(spmap))
    family = G.sweep(inst, spmap, graph, M.default_alpha_grid())
    dt = time.perf_counter() - t0
    hits = [(e.alpha, E.covering(e.labels, gt)) for e in family.entries if e.K == 2]
    best = max((c for _, c in hits), default=0.0)
    ok = best >= 0.90 and dt < 10
    report(8, "two-region 64x64 image, K=2 entry with Cov>=0.90", ok,
           f"n={spmap.n} superpixels, {len(hits)}/{len(family.entries)} entries with K=2, "
           f"best Cov {best:.3f} (>=0.90), {dt:.1f}s (<10s)")


def test_09_solver_speed():
    rng = np.random.default_rng(9)
    img = np.clip(two_region_image(96, seed=1)[0] + 0.1 * rng.standard_normal((96, 96, 3)), 0, 1)
    spmap = SP.grid_slic(img, 40)
    graph = SP.build_adjacency(spmap, img)
    X = F.image_features(img, spmap.labels)
    pipeline_inst = M.build_instance(X, M.learn_dictionary(X, 20).D, graph, SP.sizes(spmap))
    cases = {"image": pipeline_inst,
             "random": random_instance(rng, 20, 40, gamma=M.DEFAULT_GAMMA)}
    times, its = {}, {}
    for name, inst in cases.items():
        lam = 0.5 * S.lambda_max(inst)
        t = time.perf_counter()
        sol = S.solve(inst.with_lambda(lam))
        times[name] = time.perf_counter() - t
        its[name] = sol.iterations
    ok = max(times.values()) < 2.0
    detail = ", ".join(f"{k} (n={cases[k].shape[1]}, l=20): {times[k]:.3f}s in {its[k]} iterations"
                       for k in cases)
    report(9, "solver stage n~40, l=20 under 2s", ok, detail + " (<2s each)")


def test_10_eval_table_format(tmp_path, capsys):
    rng = np.random.default_rng(10)
    for name in ("100007", "100039"):
        gt = np.zeros((12, 16), dtype=int)
        gt[:, 8:] = 1
        d = tmp_path / "gt" / name
        d.mkdir(parents=True)
        for k in range(3):
            g = gt.copy()
            g[rng.integers(0, 12), :] = 2 + k
            io.write_label_png(d / f"{name}_{k}.png", g)
        p = tmp_path / "pred" / name
        p.mkdir(parents=True)
        entries = []
        for a, alpha in enumerate((0.25, 0.5, 0.75)):
            lab = gt.copy() if a else np.zeros_like(gt)
            f = f"alpha_{a:03d}.png"
            io.write_label_png(p / f, lab)
            entries.append({"alpha": alpha, "file": f})
        (p / "index.json").write_text(json.dumps({"entries": entries}))
    code = cli.main(["eval", "--pred-dir", str(tmp_path / "pred"), "--gt-dir", str(tmp_path / "gt"),
                     "--report", str(tmp_path / "r.json")])
    out = capsys.readouterr().out.splitlines()
    ok = (code == 0 and out[0].split() == ["Cov", "PRI", "VoI"]
          and out[1].split() == ["ODS", "OIS"] * 3 and len(out[2].split()) == 7
          and all(len(v.split(".")[1]) == 2 for v in out[2].split()[1:]))
    report(10, "eval prints ODS/OIS Cov/PRI/VoI table", ok, " | ".join(s.strip() for s in out[:3]))


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
