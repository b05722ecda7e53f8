import math

import numpy as np
import pytest

from shardsim.circuit import build_ghz, build_qft, build_random_circuit
from shardsim.engine import EngineConfig
from shardsim.ket import DenseKet
from shardsim.validate import (
    MinSdrpResult,
    default_p_grid,
    dense_reference,
    derive_seed,
    dft_direct,
    dft_oracle,
    exact_fidelity,
    min_sdrp_search,
    rmse,
    sdrp_depth_heatmap,
    sdrp_sweep,
)

from conftest import random_state

SQ2 = 1 / math.sqrt(2)


class TestDftOracle:
    def test_single_qubit_case(self):
        assert np.allclose(dft_oracle([1, 0]), [SQ2, SQ2], atol=1e-15)

    def test_one_hot_flat_spectrum(self):
        assert np.allclose(dft_oracle([1, 0, 0, 0]), [0.5] * 4, atol=1e-15)

    def test_radix2_matches_direct_sum(self, rng):
        x = random_state(6, rng)
        assert np.max(np.abs(dft_oracle(x) - dft_direct(x))) < 1e-10

    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValueError):
            dft_oracle([1, 0, 0])

    def test_norm_preserved(self, rng):
        for n in (1, 4, 9):
            x = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
            assert abs(np.linalg.norm(dft_oracle(x)) - np.linalg.norm(x)) < 1e-10

    def test_positive_exponent_convention(self):
        # x = e_1: y_j = w^j / sqrt(N) with w = +i for N = 4
        y = dft_oracle([0, 1, 0, 0])
        assert np.allclose(y, [0.5, 0.5j, -0.5, -0.5j], atol=1e-12)


class TestDenseReference:
    def test_ghz2(self):
        assert np.allclose(dense_reference(build_ghz(2)).amps,
                           [SQ2, 0, 0, SQ2], atol=1e-12)

    def test_qft5_flat(self):
        amps = dense_reference(build_qft(5)).amps
        assert np.allclose(amps, 1 / math.sqrt(32), atol=1e-12)

    def test_qft8_on_random_state_matches_oracle(self, rng):
        x = random_state(8, rng)
        got = dense_reference(build_qft(8), initial=DenseKet(8, x.copy()))
        assert np.max(np.abs(got.amps - dft_oracle(x))) < 1e-9

    def test_qft_dft_equivalence_sweep(self, rng):
        for n in range(2, 11):
            qft = build_qft(n)
            for _ in range(50):
                x = random_state(n, rng)
                got = dense_reference(qft, initial=DenseKet(n, x.copy()))
                assert np.max(np.abs(got.amps - dft_oracle(x))) < 1e-9

    def test_measurement_needs_rng(self):
        from shardsim.circuit import Circuit, h, measure
        c = Circuit(1, (h(0), measure(0)))
        with pytest.raises(ValueError):
            dense_reference(c)
        dense_reference(c, rng=np.random.default_rng(0))


class TestExactFidelity:
    def test_no_rounding_is_exact(self):
        c = build_random_circuit(6, 4, seed=8)
        f_exact, f_model = exact_fidelity(c, EngineConfig())
        assert f_exact > 1 - 1e-9
        assert f_model == 1.0

    def test_bell_at_p1(self):
        f_exact, f_model = exact_fidelity(build_ghz(2), EngineConfig(sdrp=1.0))
        assert abs(f_exact - 0.5) < 1e-9
        assert abs(f_model - 0.5) < 1e-12

    def test_model_tracks_exact_on_random_ensemble(self):
        diffs = []
        for i in range(10):
            c = build_random_circuit(6, 6, seed=derive_seed(31, i))
            f_exact, f_model = exact_fidelity(c, EngineConfig(sdrp=0.5, rng_seed=i))
            diffs.append(abs(f_exact - f_model))
        diffs.sort()
        assert diffs[len(diffs) // 2] < 0.15  # typical, not guaranteed per-instance


class TestRmse:
    def test_perfect_predictor(self):
        assert rmse([(1.0, 1.0), (0.5, 0.5)]) == 0.0

    def test_single_residual(self):
        assert abs(rmse([(1.0, 0.9)]) - 0.1) < 1e-12

    def test_two_residuals(self):
        assert abs(rmse([(0.8, 0.6), (0.4, 0.5)]) - math.sqrt(0.025)) < 1e-12

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            rmse([])


class TestSweep:
    def test_record_count_and_grid(self):
        grid = [0.0, 0.5, 1.0]
        recs = sdrp_sweep(4, 2, 3, p_grid=grid, base_seed=5)
        assert len(recs) == 9
        assert sorted({r.p for r in recs}) == grid

    def test_default_grid_has_41_points(self):
        g = default_p_grid()
        assert len(g) == 41 and g[0] == 0.0 and g[-1] == 1.0

    def test_p0_rows_have_unit_model(self):
        recs = sdrp_sweep(5, 3, 4, p_grid=[0.0], base_seed=1)
        assert all(r.f_model == 1.0 for r in recs)
        assert all(r.f_exact > 1 - 1e-9 for r in recs)

    def test_deterministic_apart_from_wall_time(self):
        a = sdrp_sweep(5, 4, 3, p_grid=[0.0, 0.4, 0.8], base_seed=99)
        b = sdrp_sweep(5, 4, 3, p_grid=[0.0, 0.4, 0.8], base_seed=99)

        def strip(r):  # drop only the wall_ms column
            f = r.csv_row().split(",")
            return ",".join(f[:6] + f[7:])

        assert [strip(r) for r in a] == [strip(r) for r in b]

    def test_csv_row_schema(self):
        rec = sdrp_sweep(4, 2, 1, p_grid=[0.5], base_seed=0)[0]
        fields = rec.csv_row().split(",")
        assert len(fields) == 8
        assert int(fields[0]) == 4 and int(fields[1]) == 2

    def test_parallel_pool_matches_serial(self):
        grid = [0.0, 0.5]
        serial = sdrp_sweep(5, 3, 4, p_grid=grid, base_seed=21)
        pooled = sdrp_sweep(5, 3, 4, p_grid=grid, base_seed=21, threads=2)

        def strip(r):
            f = r.csv_row().split(",")
            return ",".join(f[:6] + f[7:])

        assert [strip(r) for r in serial] == [strip(r) for r in pooled]

    def test_budget_failure_recorded_not_fatal(self):
        recs = sdrp_sweep(12, 6, 1, p_grid=[0.0], base_seed=3,
                          mem_budget=64, with_exact=False)
        assert len(recs) == 1
        assert recs[0].error == "mem_budget"
        assert recs[0].f_model is None


class TestMinSdrp:
    def test_small_width_reaches_zero(self):
        res = min_sdrp_search(4, 3, seed=11, mem_budget=1 << 20)
        assert res == MinSdrpResult(True, 0.0, 1.0, res.peak_amplitudes)

    def test_constrained_width_stops_early(self):
        res = min_sdrp_search(20, 8, seed=11, mem_budget=1 << 16)
        assert res.feasible
        assert res.p_min > 0.0
        assert res.f_model < 1.0

    def test_rejects_bad_step(self):
        with pytest.raises(ValueError):
            min_sdrp_search(4, 2, 0, 1 << 20, p_step=0.0)

    def test_infeasible_result(self):
        res = min_sdrp_search(12, 8, seed=3, mem_budget=2)
        assert res == MinSdrpResult(False, None, None)


class TestHeatmap:
    def test_shape_and_failures(self):
        cells = sdrp_depth_heatmap(10, depths=[2, 6], p_grid=[0.2, 1.0],
                                   n_circuits=2, base_seed=9, mem_budget=1 << 6)
        assert len(cells) == 4
        for c in cells:
            assert c.completed + c.failed == 2
        # tiny budget: deep low-p cells fail while p=1 shallow cells survive
        assert any(c.failed for c in cells)


def test_derive_seed_is_stable():
    assert derive_seed(5, 1) == derive_seed(5, 1)
    assert derive_seed(5, 1) != derive_seed(5, 2)
    assert 0 <= derive_seed(123, 7) < (1 << 64)
