import pytest

from rspower import DomainError, big_o_table, flop_report, flops_apa, flops_apar
from rspower.complexity import (
    QUOTED_ES_CANDIDATES_12_STREAMS,
    dot_product_flops,
    measure_iteration_costs,
    squared_norm_flops,
)


class TestPolynomials:
    def test_reference_values(self):
        assert flops_apa(4) == 1630
        assert flops_apar(4) == 1660
        assert flops_apa(1) == 46
        assert flops_apar(1) == 55

    def test_difference_is_error_term_cost(self):
        # The robust gradient adds one err-var term costing 7 n + 2.
        for n in range(1, 13):
            assert flops_apar(n) - flops_apa(n) == 7 * n + 2

    def test_primitives(self):
        assert dot_product_flops(3) == 22
        assert squared_norm_flops(3) == 19
        for n in (1, 5, 16):
            assert dot_product_flops(n) == 8 * n - 2
            assert squared_norm_flops(n) == 7 * n - 2

    def test_robust_always_costlier(self):
        assert all(flops_apar(n) > flops_apa(n) for n in range(1, 65))

    def test_invalid_size(self):
        with pytest.raises(DomainError):
            flops_apa(0)


class TestBigOTable:
    def test_rows(self):
        table = dict(big_o_table())
        assert table["RS-APA"] == "O(I_a N_t (M+1)^2)"
        assert table["RS-APA-R"] == "O(I_a N_t (M+1)^2)"
        assert table["SDMA-ES"] == "O(N_t I_o^2 M^3)"
        assert table["RS-ES"] == "O(N_t I_o^2 (M+1)^3)"
        assert table["WMMSE"] == "O(I_w N_t M^3)"
        assert table["CF"] == "O(N_t^3)"
        assert len(table) == 6

    def test_quoted_search_size_documented(self):
        assert QUOTED_ES_CANDIDATES_12_STREAMS == 5_005_000


class TestFlopReport:
    def test_totals(self):
        rep = flop_report("APA", 4, iterations=30)
        assert rep.total == 30 * 1630
        rep_r = flop_report("APA-R", 4, iterations=30)
        assert rep_r.total == 30 * 1660

    def test_unknown_algorithm(self):
        with pytest.raises(DomainError):
            flop_report("WMMSE", 4)


class TestCachedIterationCost:
    def test_cached_iteration_much_cheaper(self):
        # After the first iteration the coupling products are cached and
        # an update only touches length n + 1 vectors.
        first, cached = measure_iteration_costs(16)
        assert cached < 0.25 * first

    def test_cached_cost_size_independent(self):
        _, c16 = measure_iteration_costs(16, reps=100, batches=5)
        _, c64 = measure_iteration_costs(64, reps=100, batches=5)
        assert c64 < 5.0 * c16  # same O(1)-ish numpy cost, generous margin
