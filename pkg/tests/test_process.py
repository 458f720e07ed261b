"""Cost surrogate, candidate generation, voltage model, offset estimation."""

import numpy as np
import pytest

from sprayopt import gp, process
from sprayopt.errors import InvalidArgumentError
from sprayopt.process import (ControllableInputs, CostConfig, DomainBounds,
                              InputVector, default_bounds)


def mk(primary=45.0, secondary=9.0, current=550.0, carrier=3.5, feed=40.0,
       standoff=120.0):
    return ControllableInputs(primary, secondary, current, carrier, feed,
                              standoff)


class TestStressIndex:
    def test_normalization_at_reference_point(self):
        cfg = CostConfig(w_current=55.0, w_primary=25.0, w_secondary=20.0,
                         current_ref=550.0, primary_ref=45.0, secondary_ref=9.0)
        x = mk(primary=45.0, secondary=9.0, current=550.0)
        assert process.stress_index(x, cfg) == pytest.approx(100.0)

    def test_strictly_increasing_in_current(self):
        cfg = CostConfig()
        lo = process.stress_index(mk(current=500.0), cfg)
        hi = process.stress_index(mk(current=500.1), cfg)
        assert hi > lo

    def test_strictly_decreasing_in_gas_flows(self):
        cfg = CostConfig()
        assert process.stress_index(mk(primary=50.0), cfg) < \
            process.stress_index(mk(primary=49.0), cfg)
        assert process.stress_index(mk(secondary=10.0), cfg) < \
            process.stress_index(mk(secondary=9.0), cfg)

    def test_grid_minimum_matches_exhaustive_scan(self):
        bounds = default_bounds()
        cfg = CostConfig()
        cands = process.generate_candidates(bounds, 20000, seed=0)
        per_point = np.array([process.stress_index(c, cfg) for c in cands])
        batch = process.stress_index_batch(
            process.controllables_to_array(cands), cfg)
        np.testing.assert_allclose(batch, per_point, rtol=0, atol=1e-12)
        assert batch.min() == per_point.min()
        assert int(np.argmin(batch)) == int(np.argmin(per_point))

    def test_out_of_bounds_rejected(self):
        bounds = default_bounds()
        with pytest.raises(InvalidArgumentError):
            process.stress_index(mk(current=10000.0), CostConfig(), bounds)

    def test_pure_function(self):
        cfg = CostConfig()
        x = mk()
        assert process.stress_index(x, cfg) == process.stress_index(x, cfg)


class TestGenerateCandidates:
    def test_single_point_is_midpoint(self):
        bounds = default_bounds()
        (c,) = process.generate_candidates(bounds, count=1)
        mid = (bounds.lows + bounds.highs) / 2.0
        np.testing.assert_allclose(c.as_array(), mid)

    def test_containment_and_uniqueness(self):
        bounds = default_bounds()
        cands = process.generate_candidates(bounds, 20000, seed=3)
        X = process.controllables_to_array(cands)
        assert X.shape == (20000, 6)
        assert np.all(X >= bounds.lows) and np.all(X <= bounds.highs)
        assert len({tuple(r) for r in X}) == 20000

    def test_low_discrepancy_projection_gaps(self):
        bounds = default_bounds()
        cands = process.generate_candidates(bounds, 1024, seed=0)
        X = process.controllables_to_array(cands)
        for d in range(6):
            xs = np.sort(X[:, d])
            span = bounds.highs[d] - bounds.lows[d]
            gaps = np.diff(np.concatenate([[bounds.lows[d]], xs,
                                           [bounds.highs[d]]]))
            assert gaps.max() < 4.0 / 1024.0 * span

    def test_seed_reproducibility(self):
        bounds = default_bounds()
        a = process.generate_candidates(bounds, 512, seed=11)
        b = process.generate_candidates(bounds, 512, seed=11)
        assert all(x.as_array().tobytes() == y.as_array().tobytes()
                   for x, y in zip(a, b))

    def test_levels_scheme(self):
        bounds = default_bounds()
        cands = process.generate_candidates(bounds, scheme="levels",
                                            levels=[2, 3, 2, 2, 2, 2])
        assert len(cands) == 2 * 3 * 2 * 2 * 2 * 2
        X = process.controllables_to_array(cands)
        assert np.all(X >= bounds.lows) and np.all(X <= bounds.highs)

    def test_invalid_arguments(self):
        with pytest.raises(InvalidArgumentError):
            process.generate_candidates(default_bounds(), count=0)
        with pytest.raises(InvalidArgumentError):
            process.generate_candidates(default_bounds(), scheme="nope")


def synthetic_voltage(X6):
    return 60.0 + 0.05 * X6[:, 2] - 0.3 * X6[:, 1]


class TestVoltageModel:
    def setup_method(self):
        self.bounds = default_bounds()
        self.rng = np.random.default_rng(99)

    def _design(self, n):
        X = self.bounds.lows + self.rng.random((n, 6)) * (
            self.bounds.highs - self.bounds.lows)
        return [ControllableInputs.from_array(r) for r in X]

    def test_constant_voltage_recovery(self):
        cands = self._design(12)
        model = process.fit_voltage_model(
            [(c, "A") for c in cands], [65.0] * 12, self.bounds, seed=0)
        q = self._design(5)
        pred = model.predict_batch(q, "A")
        np.testing.assert_allclose(pred, 65.0, atol=2.0)

    def test_near_interpolation_at_training_input(self):
        cands = self._design(20)
        volts = synthetic_voltage(process.controllables_to_array(cands))
        model = process.fit_voltage_model([(c, "A") for c in cands], volts,
                                          self.bounds, seed=1)
        for c, v in zip(cands[:5], volts[:5]):
            assert abs(model.predict(c, "A") - v) < 1.0

    def test_holdout_rmse_on_synthetic_function(self):
        cands = self._design(70)
        volts = synthetic_voltage(process.controllables_to_array(cands))
        train, test = cands[:50], cands[50:]
        model = process.fit_voltage_model(
            [(c, "A") for c in train], volts[:50], self.bounds, seed=2)
        pred = model.predict_batch(test, "A")
        rmse = float(np.sqrt(np.mean((pred - volts[50:]) ** 2)))
        assert rmse < 0.5, f"holdout RMSE {rmse:.3f} V"

    def test_minimum_entries(self):
        with pytest.raises(InvalidArgumentError):
            process.fit_voltage_model([(mk(), "A")], [60.0], self.bounds)


class TestEstimateOffset:
    def _model(self):
        rng = np.random.default_rng(5)
        bounds = default_bounds()
        X = bounds.lows + rng.random((30, 6)) * (bounds.highs - bounds.lows)
        cands = [ControllableInputs.from_array(r) for r in X]
        volts = synthetic_voltage(X)
        return cands, volts, process.fit_voltage_model(
            [(c, "A") for c in cands], volts, bounds, seed=5)

    def test_zero_when_prediction_matches(self):
        cands, volts, model = self._model()
        v_hat = model.predict(cands[0], "A")
        assert process.estimate_offset(model, cands[0], "A", v_hat) == 0.0

    def test_recovers_injected_offsets_noiselessly(self):
        cands, volts, model = self._model()
        for true_offset in (-3.0, 0.0, 2.0):
            v_b = volts[3] + true_offset
            got = process.estimate_offset(model, cands[3], "A", v_b)
            assert got == pytest.approx(true_offset, abs=0.1)

    def test_noisy_ignition_with_averaging(self):
        cands, volts, model = self._model()
        rng = np.random.default_rng(77)
        hits = 0
        for _ in range(100):
            readings = volts[7] - 3.0 + rng.normal(0.0, 0.2, size=5)
            got = process.estimate_offset(model, cands[7], "A", readings)
            if abs(got - (-3.0)) <= 0.3:
                hits += 1
        assert hits >= 95

    def test_linear_in_measured_voltage(self):
        cands, volts, model = self._model()
        base = process.estimate_offset(model, cands[2], "A", 60.0)
        shifted = process.estimate_offset(model, cands[2], "A", 61.5)
        assert shifted - base == pytest.approx(1.5, abs=1e-12)


class TestExpandCandidates:
    def _model(self):
        rng = np.random.default_rng(15)
        bounds = default_bounds()
        X = bounds.lows + rng.random((25, 6)) * (bounds.highs - bounds.lows)
        cands = [ControllableInputs.from_array(r) for r in X]
        volts = synthetic_voltage(X)
        return bounds, process.fit_voltage_model(
            [(c, "A") for c in cands], volts, bounds, seed=6)

    def test_zero_offset_equals_raw_predictions(self):
        bounds, model = self._model()
        cands = process.generate_candidates(bounds, 50, seed=1)
        expanded = process.expand_candidates(cands, "A", model, 0.0)
        raw = model.predict_batch(cands, "A")
        for e, v in zip(expanded, raw):
            assert e.voltage == pytest.approx(v)
            assert e.powder == "A"

    def test_offset_is_exact_additive_shift(self):
        bounds, model = self._model()
        cands = process.generate_candidates(bounds, 50, seed=2)
        e0 = process.expand_candidates(cands, "A", model, 0.0)
        e2 = process.expand_candidates(cands, "A", model, 2.0)
        for a, b in zip(e0, e2):
            assert b.voltage - a.voltage == pytest.approx(2.0, abs=1e-9)
            assert a.controllable == b.controllable

    def test_full_grid_expansion_preserves_cardinality(self):
        bounds, model = self._model()
        cands = process.generate_candidates(bounds, 20000, seed=0)
        expanded = process.expand_candidates(cands, "B", model, 1.0)
        assert len(expanded) == 20000
        assert all(e.controllable == c for e, c in zip(expanded, cands))


class TestCandidateCsv:
    def test_round_trip_preserves_values_exactly(self):
        cands = process.generate_candidates(default_bounds(), 64, seed=4)
        text = process.candidates_to_csv(cands)
        header = text.split("\n", 1)[0]
        assert header == ",".join(process.CONTROLLABLE_FIELDS)
        back = process.candidates_from_csv(text)
        assert back == cands


class TestConfigDocs:
    def test_bounds_round_trip(self):
        b = default_bounds()
        back = process.bounds_from_json(process.bounds_to_json(b))
        np.testing.assert_allclose(back.lows, b.lows)
        np.testing.assert_allclose(back.highs, b.highs)
        assert back.voltage_low == b.voltage_low

    def test_cost_round_trip(self):
        cfg = CostConfig(w_current=40.0)
        back = CostConfig.from_dict(cfg.to_dict())
        assert back == cfg

    def test_input_vector_flatten_round_trip(self):
        x = InputVector(mk(), "B", 63.5)
        back = InputVector.from_flat(x.flatten())
        assert back == x
