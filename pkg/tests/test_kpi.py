import numpy as np
import pytest

from mec_depend.ctmc import VmState, build_generator, steady_state
from mec_depend.kpi import (
    UndefinedKpiError,
    blocking_mass,
    build_models,
    cra,
    effective_admission_rate,
    evaluate,
    forced_termination_rate,
    mean_occupied,
    solve_steady,
    tec,
    ter,
)

from conftest import table2_params


def solved(m, lam, mu, delta, gamma, **kw):
    model = build_generator(m, lam, mu, delta, gamma, **kw)
    return steady_state(model), model


class TestBlockingMass:
    def test_vanishing_load(self):
        ss, model = solved(3, 1e-9, 1.0, 0.0, 1.0)
        assert blocking_mass(ss, model) <= 1e-6

    def test_m1_erlang(self):
        lam, mu = 0.7, 1.1
        ss, model = solved(1, lam, mu, 0.0, 1.0)
        a = lam / mu
        assert blocking_mass(ss, model) == pytest.approx(a / (1 + a), rel=1e-12)

    def test_absorbing_failures_block_everything(self):
        ss, model = solved(4, 2.0, 1.0, 0.3, 0.0)
        assert blocking_mass(ss, model) == pytest.approx(1.0, abs=1e-9)


class TestCra:
    def test_degenerate_mixture(self):
        ss_m, m_m = solved(2, 1.0, 1.0, 0.1, 1.0)
        ss_l, m_l = solved(1, 0.1, 0.5, 0.1, 1.0)
        assert cra(ss_m, m_m, ss_l, m_l, 1.0) == pytest.approx(
            1.0 - blocking_mass(ss_m, m_m), rel=1e-14)

    def test_no_blocking_gives_one(self):
        ss_m, m_m = solved(2, 0.0, 1.0, 0.0, 1.0)
        ss_l, m_l = solved(1, 0.0, 1.0, 0.0, 1.0)
        assert cra(ss_m, m_m, ss_l, m_l, 0.6) == 1.0


class TestTec:
    def test_zero_arrivals(self):
        ss_m, m_m = solved(3, 0.0, 1.0, 0.1, 1.0)
        ss_l, m_l = solved(1, 0.0, 0.5, 0.1, 1.0)
        assert tec(ss_m, m_m, ss_l, m_l, 0.5, 1.0, 0.5) == 0.0

    def test_reference_operating_points(self):
        # reference operating points, 3% tolerance
        from mec_depend.vm_optimizer import tec_at
        assert tec_at(table2_params(deg_factor=0.1), 0.83, 13) == pytest.approx(
            6.076, rel=0.03)
        assert tec_at(table2_params(deg_factor=0.3), 0.83, 4) == pytest.approx(
            3.264, rel=0.03)


class TestForcedTermination:
    def test_no_failures(self):
        ss, model = solved(3, 2.0, 1.0, 0.0, 1.0)
        assert forced_termination_rate(ss, model, 0.0) == 0.0

    def test_m1_single_qualifying_state(self):
        delta = 0.2
        ss, model = solved(1, 0.8, 1.0, delta, 1.0)
        expected = delta * ss.probabilities[model.index[VmState(0, 1, 0)]]
        assert forced_termination_rate(ss, model, delta) == pytest.approx(
            expected, rel=1e-12)

    def test_bound(self):
        delta = 0.3
        ss, model = solved(4, 3.0, 1.0, delta, 0.8)
        qualifying = sum(
            t for t, s in zip(ss.probabilities, model.states)
            if s.x_o > 0 and s.x_i == 0)
        f = forced_termination_rate(ss, model, delta)
        assert f <= delta * model.m_v * qualifying + 1e-15


class TestEffectiveAdmission:
    def test_no_blocking(self):
        ss, model = solved(3, 1e-9, 1.0, 0.0, 1.0)
        assert effective_admission_rate(ss, model, 1e-9) == pytest.approx(
            1e-9, rel=1e-5)

    def test_zero_arrivals(self):
        ss, model = solved(2, 0.0, 1.0, 0.1, 1.0)
        assert effective_admission_rate(ss, model, 0.0) == 0.0

    def test_m1_flow_balance(self):
        # loss system: admitted flow equals served flow
        lam, mu = 0.7, 1.1
        ss, model = solved(1, lam, mu, 0.0, 1.0)
        a = lam / mu
        adm = effective_admission_rate(ss, model, lam)
        assert adm == pytest.approx(lam / (1 + a), rel=1e-12)
        assert adm == pytest.approx(mu * a / (1 + a), rel=1e-12)


class TestTer:
    def test_no_failures_exactly_one(self):
        for gamma in np.arange(0.0, 5.1, 0.5):
            r = evaluate(table2_params(delta_fail=0.0, gamma_repair=float(gamma)))
            assert r.ter == 1.0

    def test_full_offload_weight(self):
        rep = evaluate(table2_params(), osp=1.0)
        assert rep.ter == pytest.approx(rep.mec.retainability, rel=1e-14)

    def test_monotone_in_repair_rate(self):
        vals = [evaluate(table2_params(gamma_repair=float(g))).ter
                for g in np.arange(0.25, 5.1, 0.25)]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))

    def test_undefined_when_weighted_system_has_no_admissions(self):
        with pytest.raises(UndefinedKpiError):
            ter(0.5, 0.0, 0.0, 0.0, 1.0)

    def test_zero_weight_system_skipped(self):
        assert ter(1.0, 0.1, 1.0, 0.0, 0.0) == pytest.approx(0.9, rel=1e-12)


class TestEvaluate:
    def test_report_fields_table2(self, table2):
        rep = evaluate(table2, osp=0.83)
        assert 0.0 <= rep.cra <= 1.0
        assert 0.0 <= rep.ter <= 1.0
        assert rep.tec >= 0.0
        assert rep.mec.lambda_v == pytest.approx(7.968, rel=1e-12)
        assert rep.loc.lambda_v == pytest.approx(0.0255, rel=1e-12)

    def test_default_osp_is_analytical(self, table2):
        from mec_depend.coverage import osp_analytical
        rep = evaluate(table2)
        assert rep.osp == osp_analytical(table2).osp

    def test_throughput_never_exceeds_admissions(self):
        # stationary task flow: service throughput <= admitted rate
        # (equality for the task-preserving handover variant)
        rng = np.random.default_rng(7)
        for _ in range(8):
            lam_a, mu_o, mu_l, d, g = np.exp(
                rng.uniform(np.log(0.02), np.log(8.0), 5))
            p = table2_params(
                lambda_a=float(lam_a), mu_o=float(mu_o), mu_loc=float(mu_l),
                delta_fail=float(d), gamma_repair=float(g),
                m_mec=int(rng.integers(1, 7)))
            rep, details = evaluate(p, return_details=True)
            for name in ("mec", "loc"):
                model, ss = details[name]
                served = model.mu_v * mean_occupied(ss, model)
                adm = effective_admission_rate(ss, model, model.lambda_v)
                assert served <= adm + 1e-9
                assert served == pytest.approx(adm - forced_termination_rate(
                    ss, model, model.delta), abs=1e-9)

    def test_kpi_bounds_fuzz(self):
        rng = np.random.default_rng(123)
        for _ in range(12):
            lam_a, mu_o, mu_l, d, g = np.exp(
                rng.uniform(np.log(0.01), np.log(10.0), 5))
            p = table2_params(
                lambda_a=float(lam_a), mu_o=float(mu_o), mu_loc=float(mu_l),
                delta_fail=float(d), gamma_repair=float(g),
                m_mec=int(rng.integers(1, 9)),
                p_a_override=float(rng.uniform(0.0, 1.0)))
            rep = evaluate(p)
            assert 0.0 <= rep.cra <= 1.0
            assert 0.0 <= rep.ter <= 1.0
            assert rep.tec >= 0.0
            assert rep.mec.admission_rate <= rep.mec.lambda_v + 1e-12
            assert rep.mec.forced_termination_rate <= \
                p.delta_fail * p.m_mec + 1e-12

    def test_ter_decreasing_in_arrival_rate(self):
        # heavier per-device load degrades retainability at every threshold
        for theta in (-20.0, -10.0, 0.0, 5.0):
            vals = [
                evaluate(table2_params(lambda_a=la, theta_db=theta)).ter
                for la in (0.01, 0.05, 0.1)
            ]
            assert vals[0] > vals[1] > vals[2]

    def test_reducible_fallback_delta_gamma_zero(self):
        rep = evaluate(table2_params(delta_fail=0.0, gamma_repair=0.0))
        assert rep.ter == 1.0
        assert 0.0 < rep.cra < 1.0

    def test_tec_unimodal_in_m_over_full_range(self):
        # single interior peak underpins the hill climb's stopping rule
        from mec_depend.vm_optimizer import exhaustive_scan
        curve = [c for _, c in exhaustive_scan(table2_params(), 0.83, m_max=60)]
        diffs = np.diff(curve)
        signs = np.sign(diffs[diffs != 0.0])
        flips = int(np.sum(signs[:-1] != signs[1:]))
        assert flips <= 1


class TestSolveSteady:
    def test_restriction_used_when_reducible(self):
        model = build_generator(4, 2.0, 1.0, 0.0, 0.0)
        ss, sub = solve_steady(model)
        assert sub.n_states == 5  # x_f = 0 level only
        assert abs(ss.probabilities.sum() - 1.0) <= 1e-10

    def test_build_models_scales(self, table2):
        mec, loc = build_models(table2, 0.83)
        assert mec.m_v == 5 and loc.m_v == 1
        assert mec.lambda_v == pytest.approx(7.968, rel=1e-12)
        assert loc.mu_v == 0.1
