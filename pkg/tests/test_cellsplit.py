import math

import numpy as np
import pytest

from nextgsim import cellsplit
from nextgsim.errors import ConfigurationError
from nextgsim.seeding import seeded_stream


def scenario(d_scale=1.0, beta=4.0, l_side=800.0, p0=1.0, alpha=1.0, **kw):
    return cellsplit.ScalingScenario(d_scale=d_scale, beta=beta, l_side=l_side,
                                     p0=p0, alpha=alpha, **kw)


class TestPerBsPower:
    def test_identity(self):
        assert cellsplit.per_bs_power(1.0, 1.0, 3.7, 1.0) == 1.0

    def test_direct_arithmetic(self):
        assert cellsplit.per_bs_power(2.0, 0.5, 4.0, 1.0) == pytest.approx(0.125, rel=1e-15)

    def test_log_domain_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            p0, d, beta, a = rng.uniform(0.1, 5.0, 4)
            expected = math.exp(math.log(p0) + beta * math.log(d) + math.log(a))
            assert cellsplit.per_bs_power(p0, d, beta, a) == pytest.approx(expected, rel=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            cellsplit.per_bs_power(0.0, 1.0, 4.0, 1.0)
        with pytest.raises(ValueError):
            cellsplit.per_bs_power(1.0, 1.0, 4.0, -1.0)


class TestTotalTxPower:
    def test_all_unity(self):
        s = scenario(d_scale=1.0, l_side=100.0, d0=100.0)  # L/d0 = 1
        assert cellsplit.total_tx_power(s) == 1.0

    def test_beta_two_is_scale_free(self):
        values = [cellsplit.total_tx_power(scenario(d_scale=d, beta=2.0)) for d in (1.0, 0.5, 0.25)]
        assert values[0] == values[1] == values[2]

    def test_closed_form_matches_summation_16x16(self):
        rng = np.random.default_rng(1)
        alpha = rng.uniform(0.5, 1.5, 256)
        s = scenario(d_scale=1.0, l_side=1600.0, alpha=alpha)
        total = sum(cellsplit.per_bs_power(s.p0, s.d_scale, s.beta, a) for a in alpha)
        assert cellsplit.total_tx_power(s) == pytest.approx(total, rel=1e-9)

    def test_monotonicity_in_d(self):
        for beta, sign in ((4.0, 1), (1.5, -1)):
            values = [cellsplit.total_tx_power(scenario(d_scale=d, beta=beta))
                      for d in (0.25, 0.5, 1.0)]
            diffs = np.diff(values) * sign
            assert (diffs > 0).all()

    def test_grid_must_fit(self):
        with pytest.raises(ConfigurationError):
            scenario(d_scale=0.3)  # 800 / 30 is not an integer


class TestSimulation:
    def test_single_link_analytic(self):
        # one station, user at a known distance: capacity is the exact
        # noise-limited Shannon formula
        s = scenario(d_scale=1.0, l_side=100.0, noise_power=1e-10)
        bs = s.bs_positions()[0]
        r = 30.0
        caps = cellsplit.user_capacities(s, [[bs[0] + r, bs[1]]])
        expected = math.log2(1.0 + 1.0 * r**-4.0 / 1e-10)
        assert caps[0] == pytest.approx(expected, rel=1e-12)

    def test_huge_noise_kills_capacity(self):
        s = scenario(d_scale=1.0, l_side=100.0, noise_power=1e30)
        caps = cellsplit.user_capacities(s, [[40.0, 55.0]])
        assert caps[0] == pytest.approx(0.0, abs=1e-12)

    def test_scale_invariance_of_means(self):
        # with P ~ D^beta every received power is independent of D, so the
        # capacity means at two densities agree within overlapping CIs
        est1 = cellsplit.simulate_cell_capacity(scenario(1.0, l_side=1600.0), 256, 20, seed=2)
        est2 = cellsplit.simulate_cell_capacity(scenario(0.5, l_side=1600.0), 256, 20, seed=2)
        assert abs(est1.mean - est2.mean) <= est1.ci95 + est2.ci95

    def test_sinr_quantile_invariance(self):
        rng = seeded_stream(17, "test-sinr-users")
        users = rng.uniform(0, 1600.0, size=(20000, 2))
        q1 = np.percentile(cellsplit.user_sinr(scenario(1.0, l_side=1600.0), users), [5, 50, 95])
        q2 = np.percentile(cellsplit.user_sinr(scenario(0.5, l_side=1600.0), users), [5, 50, 95])
        assert np.all(np.abs(q2 / q1 - 1.0) < 0.02)

    def test_validates_arguments(self):
        with pytest.raises(ValueError):
            cellsplit.simulate_cell_capacity(scenario(), 0, 1, seed=0)


class TestAse:
    def test_density_one_equals_capacity(self):
        result = cellsplit.ase(scenario(1.0), n_users=64, n_trials=4, seed=0)
        assert result.density == 1.0
        assert result.ase == result.mean_cell_capacity

    def test_linear_gain_and_power_drop(self):
        results = [cellsplit.ase(scenario(d, l_side=1600.0), n_users=256, n_trials=20, seed=3)
                   for d in (1.0, 0.5, 0.25)]
        per_density = [r.ase / r.density for r in results]
        for value in per_density[1:]:
            assert value == pytest.approx(per_density[0], rel=0.05)
        powers = [r.total_power for r in results]
        assert powers[0] > powers[1] > powers[2]

    def test_loglog_slope_is_one(self):
        results = [cellsplit.ase(scenario(d, l_side=1600.0), n_users=256, n_trials=20, seed=4)
                   for d in (1.0, 0.5, 0.25)]
        slope = np.polyfit(np.log([r.density for r in results]),
                           np.log([r.ase for r in results]), 1)[0]
        assert 0.97 <= slope <= 1.03
