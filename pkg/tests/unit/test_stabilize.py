"""Unit tests for subpuf.stabilize."""
import numpy as np
import pytest

from subpuf.chip.sim import evaluate_array, nominal_response
from subpuf.core.config import StabilizeSettings
from subpuf.core.exceptions import (
    ArtifactNotFoundError,
    ContractError,
    DimensionError,
    SerializationError,
)
from subpuf.device.params import Environment
from subpuf.stabilize.apply import (
    RECONFIGURED_ONE,
    RECONFIGURED_ZERO,
    STABLE_ONE,
    STABLE_ZERO,
    UNSTABLE,
    StabilityLedger,
    apply_stabilization,
    predicted_reconfigured_probability,
    stabilized_sweep,
    table_probabilities,
)
from subpuf.stabilize.enroll import (
    compare_maps,
    derive_mask,
    enroll_rmap_evb,
    enroll_rmap_temperature_oracle,
)
from subpuf.stabilize.golden import GoldenKey, collect_golden, tmv, tmv_error_probability
from subpuf.stabilize.maps import Mask, RMap, decode_runs, encode_runs
from subpuf.stabilize.pipeline import enroll_chip


@pytest.fixture
def golden(small_chip, nominal_env, noise):
    return collect_golden(small_chip, nominal_env, noise, 21)


def _golden(bits, ones=None, votes=5, reconfigure=None) -> GoldenKey:
    bits = np.asarray(bits, dtype=np.uint8)
    if ones is None:
        ones = bits.astype(np.int64) * votes
    return GoldenKey(
        bits=bits, collected_at=Environment(), votes=votes, ones=np.asarray(ones),
        reconfigure=reconfigure,
    )


class TestTemporalMajority:
    """Test suite for TMV-k voting."""

    def test_flat_sequence(self):
        """Test a flat sequence of k bits returns one bit."""
        assert tmv([1, 0, 1], 3) == 1
        assert tmv([0, 0, 1, 1, 0], 5) == 0

    def test_element_wise(self):
        """Test the vote is taken per element along the first axis."""
        samples = np.array([[1, 0], [1, 1], [0, 0]])
        assert tmv(samples, 3).tolist() == [1, 0]

    def test_even_k_rejected(self):
        """Test an even k raises ContractError."""
        with pytest.raises(ContractError):
            tmv([1, 0], 2)

    def test_count_mismatch(self):
        """Test k must match the number of samples."""
        with pytest.raises(ContractError):
            tmv([1, 0, 1], 5)

    @pytest.mark.parametrize(
        "p, k, expected",
        [(0.3, 11, 0.078225), (0.5, 11, 0.5), (0.2, 1, 0.2), (0.1, 3, 0.028)],
    )
    def test_error_probability(self, p, k, expected):
        """Test P(Bin(k, p) > k/2) against hand-computed values."""
        assert tmv_error_probability(p, k) == pytest.approx(expected, abs=1e-5)

    def test_error_probability_falls_with_k(self):
        """Test a larger vote lowers the error for p < 0.5."""
        assert tmv_error_probability(0.2, 11) < tmv_error_probability(0.2, 5)


class TestGoldenKey:
    """Test suite for golden-key collection."""

    def test_tally_matches_bits(self, golden):
        """Test the key is the majority of its own tally."""
        np.testing.assert_array_equal(golden.bits, (2 * golden.ones > golden.votes).astype(np.uint8))
        assert golden.reconfigure is None

    def test_agrees_with_nominal_response(self, golden, small_chip, nominal_env):
        """Test the voted key matches the noise-free response on almost every cell."""
        nominal = nominal_response(small_chip, nominal_env)
        assert np.mean(golden.bits != nominal) < 0.02

    def test_dissent(self):
        """Test dissent is the minority share of votes."""
        key = _golden([[1, 0]], ones=[[4, 2]], votes=5)
        np.testing.assert_allclose(key.dissent, [[0.2, 0.4]])
        assert key.unstable(0.3).tolist() == [[False, True]]

    def test_even_votes_rejected(self, small_chip, nominal_env, noise):
        """Test an even vote count raises ContractError."""
        with pytest.raises(ContractError):
            collect_golden(small_chip, nominal_env, noise, 10)

    def test_minimum_votes(self, small_chip, nominal_env, noise):
        """Test a single vote is not a golden key."""
        with pytest.raises(ContractError):
            collect_golden(small_chip, nominal_env, noise, 1)


class TestMapFormat:
    """Test suite for the R-MAP and mask text format."""

    def test_runs_start_with_unset(self):
        """Test a leading set flag produces a zero-length first run."""
        assert encode_runs(np.array([True, True, False])) == [0, 2, 1]
        assert encode_runs(np.array([False, True, True, False])) == [1, 2, 1]

    def test_decode_runs(self):
        """Test runs expand to alternating unset/set flags."""
        assert decode_runs([0, 2, 1], 3).tolist() == [True, True, False]

    def test_runs_must_cover(self):
        """Test runs that do not sum to the size are rejected."""
        with pytest.raises(SerializationError):
            decode_runs([1, 1], 3)

    def test_rmap_text(self):
        """Test the header carries identity, shape, provenance and count."""
        flags = np.zeros((2, 4), dtype=bool)
        flags[1, 1] = True
        text = RMap(chip_id="chip-000001", reconfigure=flags, provenance="evb").dumps()
        lines = text.splitlines()
        assert lines[0] == "SUBPUF-MAP 1"
        assert "provenance: evb" in lines
        assert "count: 1" in lines
        assert lines[-1] == "5 1 2"

    def test_rmap_reload(self):
        """Test a saved map reloads with flags, provenance and extra header."""
        flags = np.eye(3, dtype=bool)
        rmap = RMap(chip_id="c", reconfigure=flags, provenance="temp_oracle", header={"votes": "11"})
        loaded = RMap.loads(rmap.dumps())
        np.testing.assert_array_equal(loaded.reconfigure, flags)
        assert loaded.provenance == "temp_oracle"
        assert loaded.header == {"votes": "11"}

    def test_count_mismatch_is_corruption(self):
        """Test an edited count line is detected."""
        text = RMap(chip_id="c", reconfigure=np.eye(2, dtype=bool)).dumps()
        with pytest.raises(SerializationError):
            RMap.loads(text.replace("count: 2", "count: 3"))

    def test_wrong_kind(self):
        """Test a mask file does not load as an R-MAP."""
        text = Mask.empty("c", (2, 2)).dumps()
        with pytest.raises(SerializationError):
            RMap.loads(text)

    def test_bad_magic(self):
        """Test an unrelated file is rejected."""
        with pytest.raises(SerializationError):
            Mask.loads("hello\ndata:\n4\n")

    def test_unknown_provenance(self):
        """Test provenance is restricted to known methods."""
        with pytest.raises(SerializationError):
            RMap(chip_id="c", reconfigure=np.zeros((1, 1)), provenance="guess")

    def test_missing_file(self, tmp_path):
        """Test loading an absent map raises ArtifactNotFoundError."""
        with pytest.raises(ArtifactNotFoundError):
            Mask.load(tmp_path / "absent.mask")

    def test_union(self):
        """Test union ORs the flags."""
        a = RMap(chip_id="c", reconfigure=np.array([[True, False]]))
        assert a.union(np.array([[False, True]])).count == 2


class TestEnrollment:
    """Test suite for R-MAP enrollment and mask derivation."""

    def test_evb_flags_are_subset_of_cells(self, small_chip, golden, noise):
        """Test body-bias enrollment returns a map of the chip's shape."""
        rmap = enroll_rmap_evb(small_chip, golden, [-0.4, 0.4], noise, 5)
        assert rmap.shape == small_chip.geometry.shape
        assert rmap.provenance == "evb"
        assert rmap.header["vpw_sweep"] == "-0.4,0.4"
        assert 0 <= rmap.fraction < 0.5

    def test_nominal_screen_adds_dissenting_cells(self, small_chip, golden, noise):
        """Test the screen flags every cell that dissented during collection."""
        rmap = enroll_rmap_evb(small_chip, golden, [0.0], noise, 5, nominal_screen=True)
        assert np.all(rmap.reconfigure[golden.unstable()])

    def test_vpw_limit(self, small_chip, golden, noise):
        """Test body bias beyond 0.4 V raises ContractError."""
        with pytest.raises(ContractError):
            enroll_rmap_evb(small_chip, golden, [0.5], noise, 5)

    def test_empty_sweep(self, small_chip, golden, noise):
        """Test an empty VPW sweep raises ContractError."""
        with pytest.raises(ContractError):
            enroll_rmap_evb(small_chip, golden, [], noise, 5)

    def test_oracle_includes_nominal_disagreement(self, small_chip, golden, noise):
        """Test the oracle map records its temperatures."""
        rmap = enroll_rmap_temperature_oracle(small_chip, golden, [218.15, 398.15], noise, 5)
        assert rmap.provenance == "temp_oracle"
        assert rmap.header["temperatures_K"] == "218.15,398.15"

    def test_mask_only_covers_reconfigured_cells(self, small_chip, golden, noise, nominal_env):
        """Test discarded cells are a subset of the reconfigured ones."""
        rmap = enroll_rmap_evb(small_chip, golden, [-0.4, 0.4], noise, 5)
        golden_r = collect_golden(small_chip, nominal_env, noise, 21, rmap=rmap)
        mask = derive_mask(golden_r, rmap)
        assert not np.any(mask.discard & ~rmap.reconfigure)

    def test_mask_needs_reconfigured_golden(self, golden):
        """Test a golden key collected without the map is refused."""
        rmap = RMap.empty("c", golden.bits.shape)
        with pytest.raises(ContractError):
            derive_mask(golden, rmap)

    def test_enroll_chip(self, small_chip, nominal_env, noise):
        """Test the pipeline produces all four artifacts."""
        settings = StabilizeSettings(golden_votes=21, enroll_votes=5, vpw_sweep=[-0.4, 0.4])
        result = enroll_chip(small_chip, nominal_env, noise, settings, method="evb")
        assert result.rmap.chip_id == small_chip.chip_id
        assert result.golden_reconfigured.reconfigure is not None
        assert result.mask.shape == small_chip.geometry.shape

    def test_unknown_method(self, small_chip, nominal_env, noise):
        """Test an unknown method raises ContractError."""
        with pytest.raises(ContractError):
            enroll_chip(small_chip, nominal_env, noise, StabilizeSettings(), method="guess")


class TestCompareMaps:
    """Test suite for map precision and recall."""

    def test_precision_recall(self):
        """Test overlap statistics of two small maps."""
        candidate = RMap(chip_id="c", reconfigure=np.array([[True, True, False, False]]))
        reference = RMap(chip_id="c", reconfigure=np.array([[True, False, True, True]]))
        result = compare_maps(candidate, reference)
        assert (result.flagged, result.reference, result.overlap) == (2, 3, 1)
        assert result.precision == pytest.approx(0.5)
        assert result.recall == pytest.approx(1 / 3)

    def test_empty_candidate(self):
        """Test precision is undefined when nothing is flagged."""
        empty = RMap.empty("c", (1, 4))
        assert compare_maps(empty, empty).precision is None

    def test_shape_mismatch(self):
        """Test maps of different shape raise DimensionError."""
        with pytest.raises(DimensionError):
            compare_maps(RMap.empty("c", (1, 4)), RMap.empty("c", (2, 2)))


class TestApplyStabilization:
    """Test suite for stabilized readout."""

    def test_k1_empty_maps_is_raw(self, small_chip, nominal_env, noise):
        """Test TMV-1 without maps reproduces the raw readouts."""
        raw = evaluate_array(small_chip, nominal_env, None, noise, 4)
        out = apply_stabilization(small_chip, None, None, nominal_env, noise, 1, n_outputs=4)
        for j, r in enumerate(raw):
            np.testing.assert_array_equal(out.bits[j], r.bits)

    def test_output_shape(self, small_chip, nominal_env, noise):
        """Test n_outputs matrices are produced."""
        out = apply_stabilization(small_chip, None, None, nominal_env, noise, 5, n_outputs=3)
        assert out.bits.shape == (3, 8, 16)
        assert out.n_outputs == 3

    def test_even_k_rejected(self, small_chip, nominal_env, noise):
        """Test an even TMV count raises ContractError."""
        with pytest.raises(ContractError):
            apply_stabilization(small_chip, None, None, nominal_env, noise, 4)

    def test_mask_shape_checked(self, small_chip, nominal_env, noise):
        """Test a mis-shaped mask raises DimensionError."""
        with pytest.raises(DimensionError):
            apply_stabilization(
                small_chip, None, np.zeros((2, 2), dtype=bool), nominal_env, noise, 1
            )

    def test_tmv_lowers_flips(self, small_chip, nominal_env, noise, golden):
        """Test TMV-11 flips no more often than single reads at a hot corner."""
        hot = [nominal_env.with_(temperature=398.15)]
        raw = stabilized_sweep(small_chip, hot, None, None, golden.bits, noise, 1, 11)
        voted = stabilized_sweep(small_chip, hot, None, None, golden.bits, noise, 11, 11)
        assert voted[0].unstable_fraction <= raw[0].unstable_fraction

    def test_sweep_empty_grid(self, small_chip, noise, golden):
        """Test an empty grid raises ContractError."""
        with pytest.raises(ContractError):
            stabilized_sweep(small_chip, [], None, None, golden.bits, noise, 1, 1)


class TestStabilityLedger:
    """Test suite for the per-cell class bookkeeping."""

    def test_classes(self):
        """Test each cell lands in exactly one class."""
        golden = _golden([[0, 1, 0, 1, 1]])
        rmap = RMap(chip_id="c", reconfigure=np.array([[False, False, True, True, True]]))
        golden_r = _golden([[0, 1, 0, 1, 0]], reconfigure=rmap.reconfigure)
        mask = Mask(chip_id="c", discard=np.array([[False, False, False, False, True]]))
        ledger = StabilityLedger.from_maps(golden, rmap, golden_r, mask)
        assert ledger.classes.tolist() == [
            [STABLE_ZERO, STABLE_ONE, RECONFIGURED_ZERO, RECONFIGURED_ONE, UNSTABLE]
        ]
        assert ledger.p_o == pytest.approx(0.6)
        assert ledger.p_r == pytest.approx(1 / 3)
        assert sum(ledger.counts().values()) == 5

    def test_key_arrays(self):
        """Test plain key arrays classify like golden keys."""
        rmap = RMap(chip_id="c", reconfigure=np.array([[False, True, True]]))
        mask = Mask(chip_id="c", discard=np.array([[False, False, True]]))
        from_keys = StabilityLedger.from_maps(
            np.array([[1, 0, 0]]), rmap, np.array([[1, 1, 0]]), mask
        )
        from_golden = StabilityLedger.from_maps(
            _golden([[1, 0, 0]]), rmap, _golden([[1, 1, 0]]), mask
        )
        assert from_keys.classes.tolist() == from_golden.classes.tolist()
        assert from_keys.classes.tolist() == [[STABLE_ONE, RECONFIGURED_ONE, UNSTABLE]]

    def test_pooled(self):
        """Test pooling counts every chip's cells and recomputes P_O and P_R."""
        first = StabilityLedger.from_maps(
            _golden([[0, 1, 0, 1, 1]]),
            RMap(chip_id="a", reconfigure=np.array([[False, False, True, True, True]])),
            _golden([[0, 1, 0, 1, 0]]),
            Mask(chip_id="a", discard=np.array([[False, False, False, False, True]])),
        )
        second = StabilityLedger.from_maps(
            _golden([[0, 1, 1, 0, 0]]), RMap(chip_id="b", reconfigure=np.zeros((1, 5), dtype=bool))
        )
        pooled = StabilityLedger.pooled([first, second])
        assert pooled.p_o == pytest.approx(0.3)
        assert pooled.p_r == pytest.approx(1 / 3)
        assert pooled.counts()["stable_0"] == 4
        assert pooled.empirical()["unstable"] == pytest.approx(0.1)
        assert pooled.expected()["unstable"] == pytest.approx(0.1)

    def test_pooled_needs_ledgers(self):
        """Test pooling nothing raises ContractError."""
        with pytest.raises(ContractError):
            StabilityLedger.pooled([])

    def test_table_probabilities_sum_to_one(self):
        """Test the five class shares sum to one."""
        probs = table_probabilities(0.1, 0.2)
        assert sum(probs.values()) == pytest.approx(1.0)
        assert probs["unstable"] == pytest.approx(0.02)
        assert probs["reconfigured_0"] == pytest.approx(0.04)

    def test_table_rejects_bad_probability(self):
        """Test a probability outside [0, 1] raises ContractError."""
        with pytest.raises(ContractError):
            table_probabilities(1.5, 0.1)

    def test_predicted_reconfigured_probability(self, noise):
        """Test the first-order estimate scales with P_O and saturates at 1."""
        small = predicted_reconfigured_probability(0.01, noise)
        assert small == pytest.approx(np.sqrt(2 / 1.5) * 40 / 30 * 0.01)
        assert predicted_reconfigured_probability(1.0, noise) == 1.0
