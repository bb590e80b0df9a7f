import math
from collections import deque

import numpy as np
import pytest

from nextgsim import pon
from nextgsim.errors import ConfigurationError


def tiny_config(**kw):
    """1000-byte frames (64 Mb/s upstream), no framing overhead, SI = 4."""
    defaults = dict(upstream_capacity=64e6, framing_overhead=0, per_grant_overhead=10,
                    sim_duration=0.01)
    defaults.update(kw)
    return pon.PonConfig(**defaults)


def onu(onu_id, assured_rate, backlog=0, group_id=0):
    state = pon.OnuState(onu_id=onu_id, assured_rate=assured_rate, group_id=group_id)
    state.backlog = backlog
    return state


class TestGiantAllocate:
    def test_min_rule(self):
        # assured allows 5000 bytes per cycle, backlog only 1000
        cfg = tiny_config(upstream_capacity=640e6)   # 10000-byte frames
        states = [onu(0, assured_rate=80e6, backlog=1000)]  # 5000 B per SI
        grants = pon.giant_allocate(states, cfg, 0)
        assert [(g.onu_id, g.bytes) for g in grants] == [(0, 1000)]

    def test_zero_backlog_zero_grants(self):
        cfg = tiny_config()
        states = [onu(0, 100e6), onu(1, 100e6)]
        assert pon.giant_allocate(states, cfg, 0) == []

    def test_oversubscribed_hand_enumeration(self):
        # Hand enumeration, 1000-byte frame, overhead 10, onu_id order:
        #   onu0: overhead 10, grant min(5000 backlog, 4000 quota, 990) = 990
        #   onu1: remaining 0, nothing
        cfg = tiny_config()
        states = [onu(0, 64e6, backlog=5000), onu(1, 64e6, backlog=5000)]
        grants = pon.giant_allocate(states, cfg, 0)
        assert [(g.onu_id, g.bytes) for g in grants] == [(0, 990)]
        # Next frame in the same cycle: onu0 quota now 4000 - 990 = 3010
        grants = pon.giant_allocate(states, cfg, 1)
        assert [(g.onu_id, g.bytes) for g in grants] == [(0, 990)]

    def test_best_effort_round_robin_shares(self):
        # no assured rates: everything goes through phase 2 with the quantum
        cfg = tiny_config(be_quantum=300)
        states = [onu(0, 0.0, backlog=5000), onu(1, 0.0, backlog=5000)]
        grants = pon.giant_allocate(states, cfg, 0)
        # 1000 - 2*10 overhead = 980 by 300-byte quanta: onu0 300, onu1 300,
        # onu0 300, onu1 80 (capacity exhausted)
        assert [(g.onu_id, g.bytes) for g in grants] == [(0, 600), (1, 380)]

    def test_conservation_and_work_conservation(self):
        cfg = tiny_config()
        states = [onu(i, 16e6, backlog=4000) for i in range(4)]
        grants = pon.giant_allocate(states, cfg, 0)
        used = sum(g.bytes for g in grants) + cfg.per_grant_overhead * len(grants)
        assert used <= cfg.frame_capacity
        # backlog >= capacity, so the frame must be filled completely
        assert used == cfg.frame_capacity


class TestGroupedAllocate:
    def test_idle_member_donates_before_best_effort(self):
        # group {0, 1}: 0 idle, 1 wants more than its own assured; ONU 2 is
        # outside the group and also hungry.  Frame: 4000 B, overhead 10.
        cfg = tiny_config(upstream_capacity=256e6, be_quantum=10000)
        states = [onu(0, 16e6, backlog=0, group_id=1),       # 1000 B/cycle unused
                  onu(1, 16e6, backlog=50000, group_id=1),   # 1000 B/cycle own
                  onu(2, 16e6, backlog=50000, group_id=0)]
        grants = {g.onu_id: g.bytes for g in pon.ggiant_allocate(states, cfg, 0)}
        # ONU 1: own assured 1000 + donated 1000 before ONU 2 takes best effort
        assert grants[1] >= 2000
        # remaining capacity split by best effort: a single quantum each
        assert grants[1] + grants[2] + 2 * 10 == cfg.frame_capacity

    def test_singleton_groups_identical_to_giant(self):
        cfg = tiny_config()
        rng = np.random.default_rng(0)
        arrivals = rng.integers(0, 3000, size=(300, 3))

        def trace(grouped, gids):
            states = [onu(i, 30e6, group_id=g) for i, g in enumerate(gids)]
            st = pon.SchedulerState()
            out = []
            alloc = pon.ggiant_allocate if grouped else pon.giant_allocate
            for f in range(300):
                for s, extra in zip(states, arrivals[f]):
                    s.backlog += int(extra)
                grants = alloc(states, cfg, f, st)
                for g in grants:
                    states[g.onu_id].backlog -= g.bytes
                out.append([(g.onu_id, g.bytes) for g in grants])
            return out

        assert trace(False, [0, 0, 0]) == trace(True, [1, 2, 3])

    def test_fully_backlogged_group_equals_giant(self):
        # ample capacity: both budgets are exhausted in phase 1, the group
        # pool is zero and phase 1b has nothing to move
        cfg = tiny_config(upstream_capacity=640e6)
        states_a = [onu(0, 32e6, backlog=9000, group_id=1),
                    onu(1, 32e6, backlog=9000, group_id=1)]
        states_b = [onu(0, 32e6, backlog=9000), onu(1, 32e6, backlog=9000)]
        ga = pon.ggiant_allocate(states_a, cfg, 0)
        gb = pon.giant_allocate(states_b, cfg, 0)
        assert [(g.onu_id, g.bytes) for g in ga] == [(g.onu_id, g.bytes) for g in gb]


class TestDrainQueue:
    def test_fifo_order_and_partial_packets(self):
        q = deque([[0.1, 500], [0.2, 500], [0.3, 500]])
        assert pon.drain_queue(q, 700) == [0.1]
        assert q[0] == [0.2, 300]
        assert pon.drain_queue(q, 800) == [0.2, 0.3]
        assert not q

    def test_departures_follow_arrivals(self):
        rng = np.random.default_rng(1)
        times = np.cumsum(rng.uniform(0, 1, 50))
        q = deque([[t, 100] for t in times])
        completed = []
        while q:
            completed.extend(pon.drain_queue(q, int(rng.integers(50, 400))))
        assert completed == sorted(completed)
        assert len(completed) == 50


class TestRunSim:
    def test_light_load_served_equals_offered(self):
        cfg = pon.PonConfig(sim_duration=0.5)
        traffic = [pon.OnuTraffic(onu_id=0, assured_rate=100e6, offered_rate=50e6)]
        stats = pon.run_sim(traffic, "giant", cfg, seed=1)
        o = stats.per_onu[0]
        assert o.served_bytes == o.offered_bytes
        assert o.mean_delay < 10 * cfg.frame_period
        assert stats.stable

    def test_zero_rate_reports_empty(self):
        cfg = pon.PonConfig(sim_duration=0.05)
        stats = pon.run_sim([pon.OnuTraffic(onu_id=0, assured_rate=1e8, offered_rate=0.0)],
                            "giant", cfg, seed=0)
        o = stats.per_onu[0]
        assert o.n_packets == 0 and math.isnan(o.mean_delay)
        assert o.offered_bytes == 0

    def test_overload_flags_unstable(self):
        cfg = pon.PonConfig(sim_duration=0.2)
        traffic = [pon.OnuTraffic(onu_id=0, assured_rate=1e8, offered_rate=3.0e9)]
        assert not pon.run_sim(traffic, "giant", cfg, seed=1).stable

    def test_assured_guarantee_under_contention(self):
        # an ONU at 90% of its assured rate keeps served == offered even when
        # the rest of the PON is overloaded
        cfg = pon.PonConfig(sim_duration=0.5)
        traffic = [pon.OnuTraffic(onu_id=0, assured_rate=200e6, offered_rate=180e6)]
        traffic += [pon.OnuTraffic(onu_id=i, assured_rate=200e6, offered_rate=700e6)
                    for i in range(1, 5)]
        stats = pon.run_sim(traffic, "giant", cfg, seed=2)
        o = stats.per_onu[0]
        assert o.served_bytes == o.offered_bytes
        assert o.mean_delay < 20 * cfg.frame_period

    def test_mean_below_p95(self):
        cfg = pon.PonConfig(sim_duration=0.3)
        traffic = [pon.OnuTraffic(onu_id=i, assured_rate=300e6, offered_rate=r)
                   for i, r in enumerate((100e6, 400e6, 900e6))]
        stats = pon.run_sim(traffic, "giant", cfg, seed=4)
        for o in stats.per_onu.values():
            if o.n_packets:
                assert o.mean_delay <= o.p95_delay
        assert stats.mean_delay <= stats.p95_delay

    def test_unknown_algorithm(self):
        with pytest.raises(ValueError):
            pon.run_sim([], "fifo", pon.PonConfig(), seed=0)

    def test_invalid_traffic(self):
        with pytest.raises(ValueError):
            pon.OnuTraffic(onu_id=0, assured_rate=1e8, offered_rate=-1.0)
        with pytest.raises(ValueError):
            pon.run_sim([pon.OnuTraffic(onu_id=0, assured_rate=1e8, offered_rate=1e6),
                         pon.OnuTraffic(onu_id=0, assured_rate=1e8, offered_rate=1e6)],
                        "giant", pon.PonConfig(sim_duration=0.01), seed=0)

    def test_config_validation(self):
        with pytest.raises(ConfigurationError):
            pon.PonConfig(service_interval=0)
        with pytest.raises(ConfigurationError):
            pon.PonConfig(framing_overhead=10**9)


class TestHotOnuExperiment:
    def test_low_load_flat_across_group_sizes(self):
        cfg = pon.PonConfig(sim_duration=0.3)
        rows = pon.hot_onu_experiment([1, 4], [0.5], cfg, seed=3)
        d = {r["group_size_N"]: r["mean_delay_ms"] for r in rows}
        assert d[4] == pytest.approx(d[1], rel=0.1)
        assert all(r["mean_delay_ms"] < 0.5 for r in rows)

    def test_group_pool_cuts_delay_above_assured(self):
        cfg = pon.PonConfig(sim_duration=0.5)
        rows = pon.hot_onu_experiment([1, 2, 4], [2.5], cfg, seed=3)
        d = {r["group_size_N"]: r for r in rows}
        ci = lambda n: d[n]["ci95_ms"]
        assert d[2]["mean_delay_ms"] <= d[1]["mean_delay_ms"] + ci(1) + ci(2)
        assert d[4]["mean_delay_ms"] <= d[2]["mean_delay_ms"] + ci(2) + ci(4)
        assert d[4]["mean_delay_ms"] < d[1]["mean_delay_ms"]

    def test_heterogeneous_traffic_gains_more(self):
        # same group total load, concentrated on one ONU vs spread evenly:
        # grouping must help the concentrated case more
        cfg = pon.PonConfig(sim_duration=0.5)

        def group_delay(traffic):
            stats = pon.run_sim(traffic, "ggiant", cfg, seed=5)
            weighted = sum(stats.per_onu[i].mean_delay * stats.per_onu[i].n_packets
                           for i in range(4))
            return weighted / sum(stats.per_onu[i].n_packets for i in range(4))

        hot, members = 2.4, 0.1
        even = (hot + 3 * members) / 4
        het = {n: group_delay(pon.hot_onu_topology(n, hot, member_load_fraction=members))
               for n in (1, 4)}
        hom = {n: group_delay(pon.hot_onu_topology(n, even, member_load_fraction=even))
               for n in (1, 4)}
        assert het[1] / het[4] > hom[1] / hom[4]

    def test_group_size_bounded_by_population(self):
        with pytest.raises(ValueError):
            pon.hot_onu_topology(6, 1.0, n_members=3)
