"""Fast release-gate checks runnable from the CLI (--selftest).

Each check is a pure function returning (passed, detail); the suite covers
the invariants most likely to break under refactoring: basis values and
derivatives, analytic gradients, the canonical gd/vi identity, the
potential-gradient identity, the alignment metric, and exact recovery at a
noiseless optimum.
"""

from __future__ import annotations

import itertools

import numpy as np

from .basis import make_shifted_legendre
from .links import get_link, get_loss, potential, vi_residual
from .metrics import index_error
from .model import ModelParams, batch_eta, grad_eta_alpha, predict_eta
from .optim import FitConfig, fit, standard_init
from .synth import make_dataset, truth_table1


def _legendre_recurrence(k: int, t: np.ndarray) -> np.ndarray:
    p_prev, p = np.ones_like(t), t.copy()
    if k == 0:
        return p_prev
    for i in range(2, k + 1):
        p_prev, p = p, ((2 * i - 1) * t * p - (i - 1) * p_prev) / i
    return p


def check_basis_recurrence() -> tuple[bool, str]:
    basis = make_shifted_legendre(3)
    t = np.linspace(-1.5, 1.5, 1000)
    worst = 0.0
    for k in range(1, 4):
        oracle = _legendre_recurrence(k, t) - _legendre_recurrence(k, np.zeros(1))[0]
        worst = max(worst, float(np.max(np.abs(basis.eval(k, t) - oracle))))
    return worst < 1e-12, f"max abs deviation {worst:.2e}"


def check_basis_derivative() -> tuple[bool, str]:
    basis = make_shifted_legendre(3)
    t = np.linspace(-1.5, 1.5, 1000)
    h = 1e-5
    worst = 0.0
    for k in range(1, 4):
        fd = (basis.eval(k, t + h) - basis.eval(k, t - h)) / (2 * h)
        exact = basis.deriv(k, t)
        worst = max(worst, float(np.max(np.abs(fd - exact) / np.maximum(1.0, np.abs(exact)))))
    return worst < 1e-6, f"max relative deviation {worst:.2e}"


def check_model_gradients() -> tuple[bool, str]:
    basis = make_shifted_legendre(3)
    rng = np.random.default_rng(11)
    h = 1e-5
    worst = 0.0
    for _ in range(20):
        d, m = rng.integers(2, 6), rng.integers(1, 4)
        alpha = rng.standard_normal((d, m))
        alpha /= np.linalg.norm(alpha, axis=0)
        params = ModelParams(alpha, rng.standard_normal((m, 3)))
        x = rng.standard_normal(d) * 0.5
        for (i, j) in itertools.product(range(d), range(m)):
            bumped = params.alpha.copy()
            bumped[i, j] += h
            up = predict_eta(ModelParams(bumped, params.beta), basis, x)
            bumped[i, j] -= 2 * h
            down = predict_eta(ModelParams(bumped, params.beta), basis, x)
            fd = (up - down) / (2 * h)
            exact = grad_eta_alpha(params, basis, x)[i, j]
            worst = max(worst, abs(fd - exact) / max(1.0, abs(exact)))
    return worst < 1e-6, f"max relative deviation {worst:.2e}"


def check_canonical_identity() -> tuple[bool, str]:
    basis = make_shifted_legendre(3)
    link = get_link("log")
    truth = truth_table1()
    data = make_dataset("poisson", link, truth, 200, seed=5, basis=basis)
    init = standard_init(4, 2, 3)
    worst = 0.0
    runs = {}
    for algorithm in ("gd", "vi"):
        cfg = FitConfig(algorithm=algorithm, iterations=50, step_alpha=1.0,
                        step_beta=1.0, record_params=True)
        loss = get_loss("poisson") if algorithm == "gd" else None
        _, trace = fit(data, basis, link, loss, init, cfg)
        runs[algorithm] = trace.params_history
    for p_gd, p_vi in zip(runs["gd"], runs["vi"]):
        worst = max(worst,
                    float(np.max(np.abs(p_gd.alpha - p_vi.alpha))),
                    float(np.max(np.abs(p_gd.beta - p_vi.beta))))
    return worst < 1e-12, f"max iterate gap {worst:.2e}"


def check_potential_gradient() -> tuple[bool, str]:
    rng = np.random.default_rng(3)
    h = 1e-6
    worst = 0.0
    for name in ("identity", "log", "inverse-softplus"):
        link = get_link(name)
        y = rng.poisson(2.0, size=12).astype(float)
        eta = rng.normal(0.0, 1.5, size=12)
        n = len(y)
        expected = vi_residual(link, y, eta) / n
        for i in range(n):
            up, down = eta.copy(), eta.copy()
            up[i] += h
            down[i] -= h
            fd = (potential(link, y, up) - potential(link, y, down)) / (2 * h)
            worst = max(worst, abs(fd - expected[i]) / max(1.0, abs(expected[i])))
    return worst < 1e-5, f"max relative deviation {worst:.2e}"


def check_alignment_metric() -> tuple[bool, str]:
    rng = np.random.default_rng(17)
    worst = 0.0
    for _ in range(20):
        d, m = 5, int(rng.integers(1, 5))
        a = rng.standard_normal((d, m))
        a /= np.linalg.norm(a, axis=0)
        b = rng.standard_normal((d, m))
        b /= np.linalg.norm(b, axis=0)
        fast = index_error(a, b)[0]
        best = np.inf
        for perm in itertools.permutations(range(m)):
            for signs in itertools.product((1.0, -1.0), repeat=m):
                total = sum(float(np.sum((signs[l] * a[:, perm[l]] - b[:, l]) ** 2))
                            for l in range(m))
                best = min(best, total / m)
        worst = max(worst, abs(fast - best))
    return worst == 0.0, f"max assignment-vs-enumeration gap {worst:.2e}"


def check_exact_recovery() -> tuple[bool, str]:
    basis = make_shifted_legendre(3)
    link = get_link("identity")
    truth = truth_table1()
    data = make_dataset("gaussian", link, truth, 300, seed=9, variance=0.0, basis=basis)
    cfg = FitConfig(algorithm="gd", iterations=1, step_alpha=0.1, step_beta=0.1)
    _, trace = fit(data, basis, link, get_loss("gaussian"), truth.params(), cfg)
    residual0 = float(trace.residual[0])
    gap = float(np.max(np.abs(batch_eta(truth.params(), basis, data.X) - data.y)))
    ok = residual0 < 1e-10 and gap == 0.0
    return ok, f"initial residual {residual0:.2e}, data gap {gap:.2e}"


CHECKS = [
    ("basis matches recurrence", check_basis_recurrence),
    ("basis derivative matches finite differences", check_basis_derivative),
    ("model alpha-gradient matches finite differences", check_model_gradients),
    ("gd and vi coincide for canonical pair", check_canonical_identity),
    ("potential gradient equals raw residual", check_potential_gradient),
    ("index error assignment equals enumeration", check_alignment_metric),
    ("noiseless init-at-truth is stationary", check_exact_recovery),
]


def selftest(verbose: bool = True) -> bool:
    """Run all checks; print a pass/fail table; True when everything passed."""
    all_ok = True
    for name, check in CHECKS:
        ok, detail = check()
        all_ok &= ok
        if verbose:
            print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    if verbose:
        print("selftest:", "all checks passed" if all_ok else "FAILURES above")
    return all_ok
