import itertools
import math

import numpy as np
import pytest

from framescale import (
    DerivativeVanished,
    Frame,
    IterationCapExceeded,
    NDProblem,
    PreconditionViolated,
    ProxyContext,
    approx_small_eigen_sum,
    compute_update,
    det_local_opt,
    leverage_scores,
    newton_dinkelbach,
    numerical_rank,
)
from framescale.update import nd_iteration_cap

from conftest import gapped_instance, mu_spectrum, random_frame, random_scaling, whitened


class TestNewtonDinkelbach:
    def test_log_example(self):
        prob = NDProblem(f=math.log, f_prime=lambda a: 1.0 / a,
                         alpha0=1.0, b_low=0.5, b_high=1.0, max_iters=10)
        res = newton_dinkelbach(prob)
        assert res.alpha == pytest.approx(2.0)
        assert res.n_iters == 1

    def test_early_exit(self):
        prob = NDProblem(f=math.log, f_prime=lambda a: 1.0 / a,
                         alpha0=2.0, b_low=0.5, b_high=1.0, max_iters=10)
        res = newton_dinkelbach(prob)
        assert res.alpha == 2.0 and res.n_iters == 0

    def test_scalar_proxy_example(self):
        # h(a) = a/(a+1), gamma = 0.2: one step from 1 lands at 1.8
        f = lambda a: a / (a + 1.0)
        fp = lambda a: 1.0 / (a + 1.0) ** 2
        prob = NDProblem(f=f, f_prime=fp, alpha0=1.0,
                         b_low=0.54, b_high=0.7, max_iters=10)
        res = newton_dinkelbach(prob)
        assert res.alpha == pytest.approx(1.8)
        assert res.value == pytest.approx(9.0 / 14.0)
        assert res.n_iters == 1

    def test_band_and_monotonicity(self, rng):
        for _ in range(40):
            frame, z, T = gapped_instance(rng, int(rng.integers(3, 6)), int(rng.integers(6, 12)))
            ctx = ProxyContext(frame, z, T)
            h1 = ctx.h(1.0)
            mu = mu_spectrum(frame.matrix, z, T)
            limit = float(np.sum(mu > 1e-9))
            gamma = min(0.8 * (limit - h1), 1.0)
            if gamma <= 1e-3:
                continue
            prob = NDProblem(f=ctx.h, f_prime=ctx.h_prime, alpha0=1.0,
                             b_low=h1 + gamma / 5.0, b_high=h1 + gamma,
                             max_iters=200)
            res = newton_dinkelbach(prob)
            assert h1 + gamma / 5.0 <= res.value <= h1 + gamma + 1e-9
            alphas = np.array(res.iterates)
            assert np.all(np.diff(alphas) > 0.0)
            values = np.array([ctx.h(a) for a in alphas])
            assert np.all(np.diff(values) > -1e-12)
            # derivative contracts by at least 1/5 per non-terminating step
            derivs = np.array([ctx.h_prime(a) for a in alphas])
            for t in range(1, len(derivs) - 1):
                assert derivs[t] <= derivs[t - 1] / 5.0 + 1e-15

    def test_derivative_vanished(self):
        f = lambda a: 1.0 - 1.0 / a  # sup f = 1 < b_low
        fp = lambda a: 1.0 / a**2
        prob = NDProblem(f=f, f_prime=fp, alpha0=1.0,
                         b_low=2.0, b_high=3.0, max_iters=100)
        with pytest.raises(DerivativeVanished):
            newton_dinkelbach(prob)

    def test_iteration_cap(self):
        prob = NDProblem(f=math.log, f_prime=lambda a: 1.0 / a,
                         alpha0=1.0, b_low=20.0, b_high=21.0, max_iters=3)
        with pytest.raises(IterationCapExceeded):
            newton_dinkelbach(prob)

    def test_rejects_bad_band(self):
        with pytest.raises(ValueError):
            NDProblem(f=math.log, f_prime=lambda a: 1.0 / a,
                      alpha0=1.0, b_low=1.0, b_high=0.5, max_iters=5)
        with pytest.raises(ValueError):
            NDProblem(f=math.log, f_prime=lambda a: 1.0 / a,
                      alpha0=100.0, b_low=0.5, b_high=1.0, max_iters=5)


class TestComputeUpdate:
    def test_scalar_example(self):
        frame = Frame(np.array([[1.0, 1.0]]))
        upd = compute_update(frame, np.ones(2), [0], 0.2)
        assert upd.alpha == pytest.approx(1.8)
        assert upd.nd_iters == 1
        assert not upd.seeded

    def test_band_on_random_instances(self, rng):
        count = 0
        while count < 200:
            d = int(rng.integers(2, 6))
            n = int(rng.integers(d + 1, 14))
            frame = random_frame(rng, d, n)
            z = random_scaling(rng, n)
            T = rng.permutation(n)[: int(rng.integers(1, n))]
            ctx = ProxyContext(frame, z, T)
            h1 = ctx.h(1.0)
            limit = numerical_rank(frame.columns(T))
            gamma = min(1.0, 0.7 * (limit - h1))
            if gamma <= 1e-6:
                continue
            count += 1
            upd = compute_update(frame, z, np.sort(T), gamma)
            assert upd.alpha >= 1.0
            assert gamma / 5.0 - 1e-9 <= upd.h_gain <= gamma + 1e-9

    def test_steep_branch_single_newton_iteration(self, rng):
        seen = 0
        while seen < 50:
            d = int(rng.integers(2, 5))
            n = int(rng.integers(d + 1, 12))
            frame = random_frame(rng, d, n)
            z = random_scaling(rng, n)
            T = rng.permutation(n)[: int(rng.integers(1, n))]
            ctx = ProxyContext(frame, z, T)
            hp1 = ctx.h_prime(1.0)
            limit = numerical_rank(frame.columns(T))
            room = limit - ctx.h(1.0)
            gamma = min(1.0, 4.0 * hp1, 0.9 * room)
            if gamma <= 1e-6 or hp1 < gamma / 4.0:
                continue
            seen += 1
            upd = compute_update(frame, z, np.sort(T), gamma)
            assert upd.nd_iters == 1
            assert not upd.seeded

    def test_seeded_branch_iteration_bound(self, rng):
        seen = 0
        while seen < 60:
            d = int(rng.integers(3, 6))
            n = int(rng.integers(d + 2, 12))
            frame, z, T = gapped_instance(rng, d, n)
            ctx = ProxyContext(frame, z, T)
            hp1 = ctx.h_prime(1.0)
            limit = numerical_rank(frame.columns(T))
            room = limit - ctx.h(1.0)
            gamma = min(1.0, 0.8 * room)
            if gamma <= 4.0 * hp1 or gamma <= 1e-4:
                continue
            seen += 1
            upd = compute_update(frame, z, T, gamma)
            assert upd.seeded
            assert gamma / 5.0 - 1e-9 <= upd.h_gain <= gamma + 1e-9
            assert upd.nd_iters <= nd_iteration_cap(n, d)

    def test_rejects_bad_gamma(self, rng):
        frame = random_frame(rng, 2, 5)
        with pytest.raises(ValueError):
            compute_update(frame, np.ones(5), [0], 0.0)
        with pytest.raises(ValueError):
            compute_update(frame, np.ones(5), [0], 1.5)


class TestApproxSmallEigenSum:
    def test_p_equals_rank_edge(self):
        frame = Frame(np.eye(2))
        est = approx_small_eigen_sum(frame, np.ones(2), [0])
        assert est.mu_tilde == 0.0 and est.p == 1 and est.D.size == 0

    def test_p_zero_edge(self):
        frame = Frame(np.array([[1.0, 1.0]]))
        est = approx_small_eigen_sum(frame, np.array([0.1, 1.0]), [0])
        assert est.p == 0
        assert est.mu_tilde == pytest.approx(0.1 / 1.1, abs=1e-12)

    def test_precondition_enforced(self, rng):
        # A balanced split has sum mu(1-mu) well above 1/4.
        frame = random_frame(rng, 4, 12)
        with pytest.raises(PreconditionViolated):
            approx_small_eigen_sum(frame, np.ones(12), np.arange(6))

    def test_sandwich_against_eigen_oracle(self, rng):
        checked = 0
        while checked < 200:
            d = int(rng.integers(2, 7))
            n = int(rng.integers(d + 1, 13))
            frame, z, T = gapped_instance(rng, d, n)
            mu = mu_spectrum(frame.matrix, z, T)
            if float(np.sum(mu * (1 - mu))) >= 0.25:
                continue
            checked += 1
            est = approx_small_eigen_sum(frame, z, T)
            mu_s = float(np.sum(mu[mu < 0.5]))
            p_true = int(np.sum(mu >= 0.5))
            assert est.p == p_true
            bound = (1.0 + 8.0 * n * d * d) * mu_s
            assert mu_s - 1e-9 <= est.mu_tilde <= bound + 1e-9


def brute_force_best_subset(kernel, p):
    best, best_det = None, -np.inf
    for combo in itertools.combinations(range(kernel.shape[0]), p):
        sub = kernel[np.ix_(combo, combo)]
        det = np.linalg.det(sub)
        if det > best_det:
            best, best_det = combo, det
    return best, best_det


class TestDetLocalOpt:
    @staticmethod
    def kernel_of(frame, z, T):
        V = whitened(frame.matrix, z)
        vt = V[:, T]
        return vt.T @ vt

    def test_p1_is_max_leverage(self, rng):
        for _ in range(10):
            frame = random_frame(rng, 3, 8)
            z = random_scaling(rng, 8)
            T = np.sort(rng.permutation(8)[:5])
            kernel = self.kernel_of(frame, z, T)
            if np.trace(kernel) < 0.5:
                continue
            D = det_local_opt(frame, z, T, 1)
            lev = leverage_scores(frame, z)
            assert D[0] == T[int(np.argmax(lev[T]))]

    def test_symmetric_tie_breaks_lexicographic(self):
        frame = Frame(np.eye(3))
        D = det_local_opt(frame, np.ones(3), [0, 1, 2], 2)
        assert list(D) == [0, 1]

    def test_two_local_optimality_exhaustive(self, rng):
        checked = 0
        while checked < 40:
            d = int(rng.integers(3, 6))
            n = int(rng.integers(d + 2, 13))
            frame, z, T = gapped_instance(rng, d, n)
            kernel = self.kernel_of(frame, z, T)
            trace = float(np.trace(kernel))
            p = int(np.floor(trace + 0.5))
            rank = numerical_rank(frame.columns(T))
            if not (0 < p < rank and trace >= p - 0.5 and len(T) <= 10):
                continue
            checked += 1
            D = det_local_opt(frame, z, T, p)
            pos = {int(t): i for i, t in enumerate(T)}
            sel = [pos[int(j)] for j in D]
            base = np.linalg.det(kernel[np.ix_(sel, sel)])
            for i in sel:
                for j in range(len(T)):
                    if j in sel:
                        continue
                    cand = sorted(set(sel) - {i} | {j})
                    det = np.linalg.det(kernel[np.ix_(cand, cand)])
                    assert det <= 2.0 * base * (1.0 + 1e-9)

    def test_sigma_p_lower_bound(self, rng):
        # sigma_p(V_D)^2 >= 1/(4 n p) at a 2-approximate local optimum
        checked = 0
        while checked < 40:
            d = int(rng.integers(3, 6))
            n = int(rng.integers(d + 2, 13))
            frame, z, T = gapped_instance(rng, d, n)
            kernel = self.kernel_of(frame, z, T)
            trace = float(np.trace(kernel))
            p = int(np.floor(trace + 0.5))
            rank = numerical_rank(frame.columns(T))
            if not (0 < p < rank and trace >= p - 0.5):
                continue
            checked += 1
            D = det_local_opt(frame, z, T, p)
            V = whitened(frame.matrix, z)
            svals = np.linalg.svd(V[:, D], compute_uv=False)
            assert svals[p - 1] ** 2 >= 1.0 / (4.0 * n * p) - 1e-12

    def test_ky_fan_upper_bound(self, rng):
        checked = 0
        while checked < 40:
            d = int(rng.integers(3, 6))
            n = int(rng.integers(d + 2, 13))
            frame, z, T = gapped_instance(rng, d, n)
            kernel = self.kernel_of(frame, z, T)
            trace = float(np.trace(kernel))
            p = int(np.floor(trace + 0.5))
            rank = numerical_rank(frame.columns(T))
            if not (0 < p < rank and trace >= p - 0.5):
                continue
            checked += 1
            D = det_local_opt(frame, z, T, p)
            V = whitened(frame.matrix, z)
            vd = V[:, D]
            proj = vd @ np.linalg.solve(vd.T @ vd, vd.T)
            vt = V[:, T]
            mu = mu_spectrum(frame.matrix, z, T)
            assert np.trace(proj @ (vt @ vt.T)) <= np.sum(mu[:p]) + 1e-9

    def test_precondition_rejected(self, rng):
        frame = random_frame(rng, 3, 8)
        z = np.ones(8)
        T = np.arange(5)
        with pytest.raises(PreconditionViolated):
            det_local_opt(frame, z, T, 0)
        with pytest.raises(PreconditionViolated):
            det_local_opt(frame, z, T, 3)  # p == rank

    def test_swap_count_bound(self, rng):
        from framescale.update import _det_local_opt_kernel

        checked = 0
        while checked < 30:
            d = int(rng.integers(3, 6))
            n = int(rng.integers(d + 2, 13))
            frame, z, T = gapped_instance(rng, d, n)
            kernel = self.kernel_of(frame, z, T)
            trace = float(np.trace(kernel))
            p = int(np.floor(trace + 0.5))
            rank = numerical_rank(frame.columns(T))
            if not (0 < p < rank and trace >= p - 0.5):
                continue
            checked += 1
            _, swaps = _det_local_opt_kernel(kernel, p)
            bound = math.ceil(math.log2(2 * p * math.comb(len(T), p))) + 1
            assert swaps <= bound
