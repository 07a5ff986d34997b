"""Gibbs blocks against dense closed-form oracles, plus chain mechanics."""

import numpy as np
import pytest
from scipy import stats

from netreg import (
    ChainConfig,
    ChainError,
    Hyperparameters,
    InvalidParameterError,
    MuTau2Prior,
    NumericalError,
    compute_w,
    load_chain,
    merge_chains,
    run_chain,
    run_chains,
    save_chain,
    sweep,
)
from netreg.gibbs import (
    delta_conditional,
    edge_positions,
    gamma_conditional,
    lambda_conditional,
    m_conditional,
    mu_conditional,
    pi_conditional,
    s_conditional,
    tau2_conditional,
    theta2_conditional,
    u_conditional,
    update_gamma,
    update_mu,
)
import netreg.gibbs as gibbs_mod
from netreg.data import upper_indices

from conftest import random_design, random_state


class TestEdgePositions:
    def test_rows_map_to_touching_edges(self):
        V = 5
        iu, ju = upper_indices(V)
        pos = edge_positions(V)
        for k in range(V):
            touched = {j for j, (a, b) in enumerate(zip(iu, ju)) if k in (a, b)}
            assert set(pos[k]) == touched
            # ordered by the other endpoint ascending
            others = [ju[j] if iu[j] == k else iu[j] for j in pos[k]]
            assert others == sorted(others)


class TestMuConditional:
    def test_flat_prior_formula(self, small_problem):
        design, hyper, state = small_problem
        mean, var = mu_conditional(state, design)
        resid = design.y - design.X @ state.gamma
        assert mean == pytest.approx(float(resid.mean()), rel=1e-12)
        assert var == pytest.approx(state.tau2 / design.n, rel=1e-12)

    def test_proper_prior_formula(self, small_problem):
        design, hyper, state = small_problem
        prior = MuTau2Prior(mean=1.5, var=0.7, shape=4.0, scale=3.0)
        mean, var = mu_conditional(state, design, prior)
        resid = design.y - design.X @ state.gamma
        prec = 1.0 / 0.7 + design.n / state.tau2
        want = (1.5 / 0.7 + resid.sum() / state.tau2) / prec
        assert mean == pytest.approx(want, rel=1e-12)
        assert var == pytest.approx(1.0 / prec, rel=1e-12)

    def test_draw_moments(self, small_problem):
        design, hyper, state = small_problem
        rng = np.random.default_rng(3)
        mean, var = mu_conditional(state, design)
        draws = np.array([update_mu(state.copy(), design, rng) for _ in range(20_000)])
        assert draws.mean() == pytest.approx(mean, abs=4 * np.sqrt(var / 20_000))
        assert draws.var(ddof=1) == pytest.approx(var, rel=0.05)


class TestGammaConditional:
    def test_matches_dense_solve(self, rng):
        for _ in range(10):
            V = int(rng.integers(3, 7))
            n = int(rng.integers(3, 12))
            design = random_design(rng, V, n)
            state = random_state(rng, V, 2)
            mean, chol_q = gamma_conditional(state, design)
            w = compute_w(state.U, state.lam)
            d_inv = np.diag(1.0 / state.s)
            Q = design.X.T @ design.X + d_inv
            rhs = design.X.T @ (design.y - state.mu) + d_inv @ w
            assert np.allclose(mean, np.linalg.solve(Q, rhs), atol=1e-9)
            assert np.allclose(chol_q @ chol_q.T, Q, atol=1e-9)

    def test_ols_limit_when_prior_released(self, rng):
        # s -> inf turns the conditional mean into unpenalized least squares
        V, n = 4, 30
        design = random_design(rng, V, n)
        state = random_state(rng, V, 2)
        state.s = np.full(state.s.size, 1e12)
        mean, _ = gamma_conditional(state, design)
        ols, *_ = np.linalg.lstsq(design.X, design.y - state.mu, rcond=None)
        assert np.allclose(mean, ols, atol=1e-6)

    def test_draw_covariance(self, rng):
        V, n = 3, 8
        design = random_design(rng, V, n)
        state = random_state(rng, V, 2)
        mean, chol_q = gamma_conditional(state, design)
        Q = chol_q @ chol_q.T
        cov = state.tau2 * np.linalg.inv(Q)
        draws = np.empty((30_000, mean.size))
        sampler = np.random.default_rng(4)
        for i in range(draws.shape[0]):
            st = state.copy()
            update_gamma(st, design, sampler)
            draws[i] = st.gamma
        assert np.allclose(draws.mean(axis=0), mean, atol=0.02)
        assert np.allclose(np.cov(draws.T), cov, atol=0.03)


class TestTau2Conditional:
    def test_formula(self, small_problem):
        design, hyper, state = small_problem
        shape, scale = tau2_conditional(state, design)
        w = compute_w(state.U, state.lam)
        resid = design.y - state.mu - design.X @ state.gamma
        quad = resid @ resid + np.sum((state.gamma - w) ** 2 / state.s)
        assert shape == pytest.approx((design.n + state.gamma.size) / 2.0)
        assert scale == pytest.approx(quad / 2.0, rel=1e-12)

    def test_proper_prior_adds_terms(self, small_problem):
        design, hyper, state = small_problem
        prior = MuTau2Prior(shape=5.0, scale=4.0)
        s0, c0 = tau2_conditional(state, design)
        s1, c1 = tau2_conditional(state, design, prior)
        assert s1 == pytest.approx(s0 + 5.0)
        assert c1 == pytest.approx(c0 + 4.0)

    def test_debug_offset_shifts_shape_only(self, small_problem):
        design, hyper, state = small_problem
        s0, c0 = tau2_conditional(state, design)
        s1, c1 = tau2_conditional(state, design, debug_shape_offset=1.0)
        assert s1 == pytest.approx(s0 + 1.0)
        assert c1 == pytest.approx(c0)


class TestScaleConditionals:
    def test_s_gig_parameters(self, small_problem):
        design, hyper, state = small_problem
        p, chi, psi = s_conditional(state)
        w = compute_w(state.U, state.lam)
        assert p == 0.5
        assert psi == state.theta2
        assert np.allclose(chi, (state.gamma - w) ** 2 / state.tau2)

    def test_theta2_gamma_parameters(self, small_problem):
        design, hyper, state = small_problem
        shape, rate = theta2_conditional(state, hyper)
        assert shape == pytest.approx(hyper.zeta + state.s.size)
        assert rate == pytest.approx(hyper.iota + state.s.sum() / 2.0)


class TestUConditional:
    def dense_reference(self, state, k):
        """Spike/slab weights and slab moments via full-size dense algebra."""
        pos = edge_positions(state.n_nodes)[k]
        gam_k = state.gamma[pos]
        h = state.tau2 * state.s[pos]
        ustar = np.delete(state.U, k, axis=0) * state.lam
        H = np.diag(h)
        log_spike = stats.multivariate_normal.logpdf(gam_k, np.zeros(h.size), H)
        cov_slab = H + ustar @ state.M @ ustar.T
        log_slab = stats.multivariate_normal.logpdf(gam_k, np.zeros(h.size), cov_slab)
        num0 = np.log(1.0 - state.delta) + log_spike
        num1 = np.log(state.delta) + log_slab
        p_spike = np.exp(num0 - np.logaddexp(num0, num1))
        prec = ustar.T @ np.diag(1.0 / h) @ ustar + np.linalg.inv(state.M)
        mean = np.linalg.solve(prec, ustar.T @ (gam_k / h))
        return p_spike, mean, prec

    def test_matches_dense_reference(self, rng):
        for _ in range(25):
            V = int(rng.integers(4, 8))
            R = int(rng.integers(1, 4))
            state = random_state(rng, V, R)
            k = int(rng.integers(V))
            cond = u_conditional(state, k)
            p_spike, mean, prec = self.dense_reference(state, k)
            assert np.exp(cond.log_spike_prob) == pytest.approx(p_spike, abs=1e-9)
            assert np.allclose(cond.mean, mean, atol=1e-9)
            assert np.allclose(cond.chol_prec @ cond.chol_prec.T, prec, atol=1e-9)

    def test_probabilities_normalize(self, rng):
        state = random_state(rng, 6, 2)
        cond = u_conditional(state, 3)
        total = np.exp(cond.log_spike_prob) + np.exp(cond.log_slab_prob)
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_tight_data_favors_slab(self, rng):
        # strong, consistent edge signal should make exclusion very unlikely
        V, R = 6, 2
        state = random_state(rng, V, R)
        state.lam = np.ones(R, dtype=np.int8)
        state.U = np.ones((V, R))
        state.xi = np.ones(V, dtype=np.int8)
        state.gamma = compute_w(state.U, state.lam)
        state.s = np.full(state.s.size, 1e-4)
        state.tau2 = 1e-4
        cond = u_conditional(state, 0)
        assert np.exp(cond.log_slab_prob) > 0.999


class TestDiscreteConditionals:
    def test_delta_beta_counts(self, small_problem):
        design, hyper, state = small_problem
        a, b = delta_conditional(state, hyper)
        n_active = int(state.xi.sum())
        assert a == pytest.approx(hyper.a_delta + n_active)
        assert b == pytest.approx(hyper.b_delta + state.n_nodes - n_active)

    def test_m_scale_and_dof(self, small_problem):
        design, hyper, state = small_problem
        scale, dof = m_conditional(state, hyper)
        active = state.xi == 1
        outer = sum(np.outer(state.U[k], state.U[k]) for k in np.where(active)[0])
        assert np.allclose(scale, hyper.S + outer, atol=1e-12)
        assert dof == pytest.approx(hyper.nu + active.sum())

    def test_lambda_probability_matches_density_ratio(self, rng):
        for _ in range(10):
            V, R = 5, 3
            state = random_state(rng, V, R)
            r = int(rng.integers(R))
            p = lambda_conditional(state, r)
            sd = np.sqrt(state.tau2 * state.s)
            lam1, lam0 = state.lam.copy(), state.lam.copy()
            lam1[r], lam0[r] = 1, 0
            l1 = stats.norm.logpdf(state.gamma, compute_w(state.U, lam1), sd).sum()
            l0 = stats.norm.logpdf(state.gamma, compute_w(state.U, lam0), sd).sum()
            num1 = np.log(state.pi[r]) + l1
            num0 = np.log(1 - state.pi[r]) + l0
            want = np.exp(num1 - np.logaddexp(num0, num1))
            assert p == pytest.approx(want, abs=1e-10)

    def test_lambda_ignores_current_value(self, rng):
        state = random_state(rng, 5, 2)
        state.lam[0] = 0
        p0 = lambda_conditional(state, 0)
        state.lam[0] = 1
        assert lambda_conditional(state, 0) == pytest.approx(p0, abs=1e-12)

    def test_pi_beta_counts(self, small_problem):
        design, hyper, state = small_problem
        for r in range(hyper.R):
            a, b = pi_conditional(state, hyper, r)
            assert a == pytest.approx(1.0 + state.lam[r])
            assert b == pytest.approx(hyper.rank_penalty[r] + 1.0 - state.lam[r])


class TestSweep:
    def test_preserves_structure(self, small_problem):
        design, hyper, state = small_problem
        rng = np.random.default_rng(5)
        from netreg.model import validate_state

        for _ in range(50):
            sweep(state, design, hyper, rng)
            validate_state(state, design.n_nodes, hyper.R)

    def test_reproducible_given_rng_state(self, small_problem):
        design, hyper, state = small_problem
        a = state.copy()
        b = state.copy()
        sweep(a, design, hyper, np.random.default_rng(42))
        sweep(b, design, hyper, np.random.default_rng(42))
        assert np.array_equal(a.gamma, b.gamma)
        assert np.array_equal(a.U, b.U)
        assert a.tau2 == b.tau2


class TestChainConfig:
    def test_sample_count(self):
        cfg = ChainConfig(iterations=100, burn_in=40, thin=10, seed=1)
        assert cfg.n_samples == 6

    def test_validation(self):
        with pytest.raises(InvalidParameterError):
            ChainConfig(iterations=0)
        with pytest.raises(InvalidParameterError):
            ChainConfig(iterations=10, burn_in=10)
        with pytest.raises(InvalidParameterError):
            ChainConfig(iterations=10, burn_in=0, thin=0)
        with pytest.raises(InvalidParameterError):
            ChainConfig(seed=-1)


@pytest.fixture(scope="module")
def tiny_chain():
    rng = np.random.default_rng(80)
    design = random_design(rng, 4, 10)
    hyper = Hyperparameters(R=2)
    cfg = ChainConfig(iterations=200, burn_in=100, thin=5, seed=7)
    return design, hyper, cfg, run_chain(design, hyper, cfg)


class TestRunChain:
    def test_recorded_iterations(self, tiny_chain):
        design, hyper, cfg, samples = tiny_chain
        assert samples.n_samples == cfg.n_samples == 20
        assert list(samples.iters) == list(range(105, 201, 5))

    def test_shapes(self, tiny_chain):
        design, hyper, cfg, samples = tiny_chain
        assert samples.gamma.shape == (20, design.q)
        assert samples.xi.shape == (20, design.n_nodes)
        assert samples.lam.shape == (20, hyper.R)
        assert set(np.unique(samples.xi)) <= {0, 1}
        assert np.all(samples.tau2 > 0)
        assert np.all((samples.r_eff >= 0) & (samples.r_eff <= hyper.R))

    def test_diagnostics_present(self, tiny_chain):
        *_, samples = tiny_chain
        assert set(samples.diagnostics) >= {"mu", "tau2", "delta", "theta2", "reff", "gamma"}
        assert samples.diagnostics["mu"]["ess"] > 0

    def test_same_seed_same_chain(self, tiny_chain):
        design, hyper, cfg, samples = tiny_chain
        again = run_chain(design, hyper, cfg)
        assert np.array_equal(again.gamma, samples.gamma)
        assert np.array_equal(again.tau2, samples.tau2)

    def test_different_streams_differ(self, tiny_chain):
        design, hyper, cfg, samples = tiny_chain
        other = run_chain(design, hyper, cfg, stream_id=1)
        assert not np.array_equal(other.gamma, samples.gamma)

    def test_record_extras(self, tiny_chain):
        design, hyper, cfg, _ = tiny_chain
        samples = run_chain(design, hyper, cfg, record_extras=True)
        assert samples.extras["U"].shape == (20, design.n_nodes, hyper.R)
        assert samples.extras["M"].shape == (20, hyper.R, hyper.R)
        assert samples.extras["s"].shape == (20, design.q)

    def test_chain_error_carries_partial(self, tiny_chain, monkeypatch):
        design, hyper, cfg, _ = tiny_chain
        calls = {"n": 0}
        real = gibbs_mod.update_theta2

        def failing(state, hyper_, rng):
            calls["n"] += 1
            if calls["n"] > 130:
                raise NumericalError("synthetic failure", context="theta2")
            return real(state, hyper_, rng)

        monkeypatch.setattr(gibbs_mod, "update_theta2", failing)
        with pytest.raises(ChainError) as excinfo:
            run_chain(design, hyper, cfg)
        err = excinfo.value
        assert err.iteration == 131
        assert "theta2" in err.block
        # sweeps 105..130 were past burn-in: 6 draws kept before the failure
        assert err.partial.n_samples == 6
        assert list(err.partial.iters) == [105, 110, 115, 120, 125, 130]


class TestMultiChain:
    def test_run_chains_streams(self):
        rng = np.random.default_rng(81)
        design = random_design(rng, 4, 10)
        hyper = Hyperparameters(R=2)
        cfg = ChainConfig(iterations=60, burn_in=20, thin=4, seed=9, n_chains=2)
        chains = run_chains(design, hyper, cfg)
        assert len(chains) == 2
        assert not np.array_equal(chains[0].gamma, chains[1].gamma)
        merged = merge_chains(chains)
        assert merged.n_samples == chains[0].n_samples + chains[1].n_samples
        assert np.array_equal(merged.gamma[: chains[0].n_samples], chains[0].gamma)

    def test_merge_rejects_mismatched(self):
        rng = np.random.default_rng(82)
        hyper = Hyperparameters(R=2)
        cfg = ChainConfig(iterations=30, burn_in=10, thin=2, seed=9)
        a = run_chain(random_design(rng, 4, 8), hyper, cfg)
        b = run_chain(random_design(rng, 5, 8), hyper, cfg)
        with pytest.raises(InvalidParameterError):
            merge_chains([a, b])


class TestPersistence:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(83)
        design = random_design(rng, 4, 10)
        hyper = Hyperparameters(R=2)
        cfg = ChainConfig(iterations=80, burn_in=40, thin=4, seed=11)
        samples = run_chain(design, hyper, cfg)
        save_chain(samples, tmp_path / "chain")
        back = load_chain(tmp_path / "chain")
        assert np.array_equal(back.iters, samples.iters)
        assert np.array_equal(back.mu, samples.mu)
        assert np.array_equal(back.tau2, samples.tau2)
        assert np.array_equal(back.gamma, samples.gamma)
        assert np.array_equal(back.xi, samples.xi)
        assert np.array_equal(back.lam, samples.lam)
        assert np.array_equal(back.edge_index, samples.edge_index)
        assert back.n_nodes == samples.n_nodes and back.rank == samples.rank

    def test_save_is_byte_stable(self, tmp_path):
        rng = np.random.default_rng(84)
        design = random_design(rng, 3, 8)
        hyper = Hyperparameters(R=2)
        cfg = ChainConfig(iterations=40, burn_in=20, thin=2, seed=12)
        samples = run_chain(design, hyper, cfg)
        save_chain(samples, tmp_path / "a")
        save_chain(samples, tmp_path / "b")
        for name in ("scalars.csv", "gamma.csv", "xi.csv", "lambda.csv", "diagnostics.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


class TestPosteriorBehavior:
    def test_two_chains_agree_on_node_selection(self):
        # moderate-size recovery problem; independent chains should land on
        # the same posterior node-inclusion profile
        from netreg import SimConfig, simulate_study, standardize, build_design
        from netreg.analysis import summarize

        study = simulate_study(
            SimConfig(scheme="sim1", n_nodes=10, n_train=50, n_pred=0),
            np.random.default_rng(900),
        )
        std, _ = standardize(study.train)
        design = build_design(std)
        hyper = Hyperparameters(R=4)
        cfg = ChainConfig(iterations=3000, burn_in=1500, thin=5, seed=31, n_chains=2)
        chains = run_chains(design, hyper, cfg)
        prob_a = chains[0].xi.mean(axis=0)
        prob_b = chains[1].xi.mean(axis=0)
        assert np.max(np.abs(prob_a - prob_b)) < 0.1
