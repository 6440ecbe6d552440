import pytest

from mec_depend.vm_optimizer import exhaustive_scan, optimal_vm_count, tec_at

from conftest import table2_params


class TestOptimalVmCount:
    def test_huge_degradation_stops_at_one(self):
        res = optimal_vm_count(table2_params(deg_factor=5.0), 0.83)
        assert res.m_star == 1
        assert len(res.trace) == 2  # evaluated m=1 and the rejected m=2

    @pytest.mark.parametrize("d", [0.1, 0.2, 0.3])
    def test_matches_exhaustive_argmax(self, d):
        p = table2_params(deg_factor=d)
        res = optimal_vm_count(p, 0.83)
        curve = exhaustive_scan(p, 0.83, m_max=res.m_star + 10)
        best_m = max(curve, key=lambda mc: mc[1])[0]
        assert res.m_star == best_m

    def test_trace_structure(self):
        res = optimal_vm_count(table2_params(deg_factor=0.2), 0.83)
        values = [c for _, c in res.trace]
        # strictly increasing until the final rejected step
        assert all(a < b for a, b in zip(values[:-1], values[1:-1]))
        assert values[-1] <= values[-2]
        assert res.c_star == max(values)
        assert res.trace[-1][0] == res.m_star + 1

    def test_never_looks_past_rejection(self):
        res = optimal_vm_count(table2_params(deg_factor=0.3), 0.83)
        assert len(res.trace) == res.m_star + 1

    def test_tie_handling_saturating_curve(self):
        # d = 0: no degradation, TEC saturates; relative ties must stop the
        # climb instead of walking to the cap
        res = optimal_vm_count(table2_params(deg_factor=0.0), 0.83, m_max=200)
        assert res.m_star < 150
        # saturation level: all offered MEC load served
        assert res.c_star == pytest.approx(0.83 * 7.968, rel=0.01)

    def test_cap_raises(self):
        with pytest.raises(RuntimeError, match="m_max"):
            optimal_vm_count(table2_params(deg_factor=0.0), 0.83, m_max=3)


class TestExhaustiveScan:
    def test_values_and_shape(self):
        curve = exhaustive_scan(table2_params(), 0.83, m_max=15)
        assert [m for m, _ in curve] == list(range(1, 16))
        assert all(c > 0 for _, c in curve)

    def test_reference_curve_endpoints(self):
        # reference TEC values at the d = 0.1 curve endpoints, 3% tolerance
        assert tec_at(table2_params(), 0.83, 2) == pytest.approx(2.882, rel=0.03)
        assert tec_at(table2_params(), 0.83, 60) == pytest.approx(0.482, rel=0.03)

    def test_tec_at_matches_scan(self):
        p = table2_params(deg_factor=0.2)
        curve = dict(exhaustive_scan(p, 0.83, m_max=8))
        for m in (1, 4, 8):
            assert tec_at(p, 0.83, m) == curve[m]

    def test_m_max_validation(self):
        with pytest.raises(ValueError):
            exhaustive_scan(table2_params(), 0.83, m_max=0)

    def test_monotone_decreasing_curve_for_large_d(self):
        curve = [c for _, c in exhaustive_scan(table2_params(deg_factor=5.0),
                                               0.83, m_max=6)]
        assert all(a > b for a, b in zip(curve, curve[1:]))
