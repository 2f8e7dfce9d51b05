"""Unit tests for subpuf.chip."""
import io

import numpy as np
import pytest
from pydantic import ValidationError

from subpuf.cell.noise import NoiseModel
from subpuf.chip.geometry import ArrayGeometry
from subpuf.chip.io import (
    SWEEP_CSV_COLUMNS,
    bits_to_hex,
    hex_to_bits,
    load_chip,
    pack_bits,
    read_bits,
    write_bits,
    write_chip,
    write_sweep_csv,
)
from subpuf.chip.sim import (
    chip_id_for,
    environment_sweep,
    evaluate_array,
    generate_chip,
    majority,
    nominal_response,
    rail_voltages,
)
from subpuf.core.exceptions import (
    ArtifactNotFoundError,
    ContractError,
    ConvergenceError,
    DimensionError,
    SerializationError,
)
from subpuf.device.params import MismatchModel


class TestArrayGeometry:
    """Test suite for the array layout."""

    def test_reference_layout(self):
        """Test the 32 x 128 array has one regulator per column."""
        g = ArrayGeometry()
        assert g.n_cells == 4096
        assert g.n_regulators == 128

    def test_regulator_index(self):
        """Test every cell maps to the regulator of its column block."""
        g = ArrayGeometry(rows=4, cols=3, cells_per_regulator=2)
        index = g.regulator_index()
        assert index.shape == (4, 3)
        assert index[0].tolist() == [0, 1, 2]
        assert index[1].tolist() == [0, 1, 2]
        assert index[2].tolist() == [3, 4, 5]
        assert g.n_regulators == 6

    def test_regulator_must_divide_rows(self):
        """Test a column block that does not tile the rows is rejected."""
        with pytest.raises(ValidationError):
            ArrayGeometry(rows=10, cols=4, cells_per_regulator=4)


class TestGenerateChip:
    """Test suite for die sampling."""

    def test_same_seed_same_chip(self, small_geometry, process, mismatch_model):
        """Test a chip is a pure function of its seed."""
        a = generate_chip(5, small_geometry, process, mismatch_model)
        b = generate_chip(5, small_geometry, process, mismatch_model)
        np.testing.assert_array_equal(a.cells.nmos[0].static, b.cells.nmos[0].static)
        assert a.global_vth_shift == b.global_vth_shift
        assert [r.native_offset for r in a.regulators] == [r.native_offset for r in b.regulators]

    def test_different_seeds_differ(self, small_geometry, process, mismatch_model):
        """Test distinct seeds give distinct dies."""
        a = generate_chip(5, small_geometry, process, mismatch_model)
        b = generate_chip(6, small_geometry, process, mismatch_model)
        assert not np.array_equal(a.cells.nmos[0].static, b.cells.nmos[0].static)

    def test_chip_id(self, small_chip):
        """Test ids are derived from the seed."""
        assert small_chip.chip_id == chip_id_for(3) == "chip-000003"

    def test_one_regulator_per_block(self, small_chip, small_geometry):
        """Test regulator count follows the geometry."""
        assert len(small_chip.regulators) == small_geometry.n_regulators
        assert small_chip.cells.size == small_geometry.n_cells

    def test_zero_mismatch_has_no_global_shift(self, small_geometry, process):
        """Test a zero model gives an exactly nominal die."""
        chip = generate_chip(1, small_geometry, process, MismatchModel.zero())
        assert chip.global_vth_shift == 0.0
        assert all(r.native_offset == 0.0 for r in chip.regulators)


class TestRailVoltages:
    """Test suite for per-cell virtual supplies."""

    def test_shape_and_sharing(self, small_chip, nominal_env):
        """Test cells on one regulator share a rail."""
        rails = rail_voltages(small_chip, nominal_env)
        assert rails.shape == small_chip.geometry.shape
        assert np.all(rails[:, 0] == rails[0, 0])
        assert np.all((rails > 0.4) & (rails < 0.75))

    def test_unregulated_sits_on_supply(self, small_chip, nominal_env):
        """Test regulated=False feeds every cell from V_DD."""
        rails = rail_voltages(small_chip, nominal_env, regulated=False)
        assert np.all(rails == nominal_env.supply_vdd)

    def test_failure_names_column(self, small_chip, nominal_env):
        """Test a non-converging regulator is reported with its column."""
        with pytest.raises(ConvergenceError) as exc_info:
            rail_voltages(small_chip, nominal_env.with_(supply_vdd=0.0))
        assert exc_info.value.details["column"] == 0


class TestEvaluateArray:
    """Test suite for noisy array readouts."""

    def test_deterministic(self, small_chip, nominal_env, noise):
        """Test readouts are reproducible from the chip seed."""
        a = evaluate_array(small_chip, nominal_env, None, noise, 3)
        b = evaluate_array(small_chip, nominal_env, None, noise, 3)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.bits, y.bits)

    def test_independent_of_threads(self, small_chip, nominal_env, noise):
        """Test worker count does not change any readout."""
        serial = evaluate_array(small_chip, nominal_env, None, noise, 6, threads=1)
        pooled = evaluate_array(small_chip, nominal_env, None, noise, 6, threads=3)
        for x, y in zip(serial, pooled):
            assert x.eval_index == y.eval_index
            np.testing.assert_array_equal(x.bits, y.bits)

    def test_silent_noise_matches_nominal(self, small_chip, nominal_env):
        """Test without noise every readout is the nominal response."""
        readouts = evaluate_array(small_chip, nominal_env, None, NoiseModel.silent(), 2)
        nominal = nominal_response(small_chip, nominal_env)
        for r in readouts:
            np.testing.assert_array_equal(r.bits, nominal)

    def test_mostly_stable(self, small_chip, nominal_env, noise):
        """Test the large majority of cells agree between two reads."""
        a, b = evaluate_array(small_chip, nominal_env, None, noise, 2)
        assert np.mean(a.bits != b.bits) < 0.1

    def test_rmap_shape_checked(self, small_chip, nominal_env, noise):
        """Test a mis-shaped reconfiguration map raises DimensionError."""
        with pytest.raises(DimensionError):
            evaluate_array(small_chip, nominal_env, np.zeros((2, 2), dtype=bool), noise, 1)

    def test_reconfigured_cells_flagged(self, small_chip, nominal_env, noise):
        """Test the readout carries the topology it was evaluated in."""
        flags = np.zeros(small_chip.geometry.shape, dtype=bool)
        flags[0, :4] = True
        (readout,) = evaluate_array(small_chip, nominal_env, flags, noise, 1)
        np.testing.assert_array_equal(readout.reconfigure, flags)

    def test_needs_an_evaluation(self, small_chip, nominal_env, noise):
        """Test n_evals < 1 raises ContractError."""
        with pytest.raises(ContractError):
            evaluate_array(small_chip, nominal_env, None, noise, 0)


class TestMajority:
    """Test suite for majority voting."""

    def test_majority_bits(self, small_chip, nominal_env, noise):
        """Test majority of odd reads returns a bit matrix."""
        readouts = evaluate_array(small_chip, nominal_env, None, noise, 5)
        key = majority(readouts)
        assert key.shape == small_chip.geometry.shape
        assert set(np.unique(key)) <= {0, 1}

    def test_even_count_rejected(self, small_chip, nominal_env, noise):
        """Test an even number of reads raises ContractError."""
        readouts = evaluate_array(small_chip, nominal_env, None, noise, 2)
        with pytest.raises(ContractError):
            majority(readouts)


class TestEnvironmentSweep:
    """Test suite for sweep aggregation."""

    def test_points_follow_grid(self, small_chip, nominal_env, noise):
        """Test one point per grid entry with BER in [0, 0.5]."""
        golden = nominal_response(small_chip, nominal_env)
        grid = [nominal_env, nominal_env.with_(temperature=350.0)]
        points = environment_sweep(small_chip, grid, None, noise, 3, golden)
        assert [p.env for p in points] == grid
        assert all(0.0 <= p.ber <= 0.5 for p in points)
        assert all(p.unstable_fraction >= p.ber for p in points)

    def test_empty_grid(self, small_chip, noise):
        """Test an empty grid raises ContractError."""
        with pytest.raises(ContractError):
            environment_sweep(small_chip, [], None, noise, 3, np.zeros((8, 16), dtype=np.uint8))

    def test_csv_header_only_when_empty(self):
        """Test an empty sweep writes just the header."""
        buffer = io.StringIO()
        write_sweep_csv(buffer, [])
        assert buffer.getvalue() == ",".join(SWEEP_CSV_COLUMNS) + "\n"


class TestBitIO:
    """Test suite for bit-matrix export."""

    def test_msb_first_packing(self):
        """Test the first cell is the most significant bit."""
        bits = np.array([[1, 0, 0, 0], [0, 0, 0, 1]], dtype=np.uint8)
        assert pack_bits(bits) == bytes([0b10000001])
        assert bits_to_hex(bits) == "81"

    def test_padding_is_zero(self):
        """Test a partial last byte is zero-padded."""
        assert pack_bits(np.array([1, 1, 1], dtype=np.uint8)) == bytes([0b11100000])

    def test_hex_round_trip(self, small_chip, nominal_env):
        """Test hex text recovers the matrix."""
        bits = nominal_response(small_chip, nominal_env)
        np.testing.assert_array_equal(hex_to_bits(bits_to_hex(bits), bits.shape), bits)

    def test_invalid_hex(self):
        """Test non-hex text raises SerializationError."""
        with pytest.raises(SerializationError):
            hex_to_bits("zz", (1, 8))

    def test_files_written_side_by_side(self, tmp_path, small_chip, nominal_env):
        """Test .bin and .hex are both written and .bin reads back."""
        bits = nominal_response(small_chip, nominal_env)
        write_bits(tmp_path / "key", bits)
        assert (tmp_path / "key.hex").read_text().strip() == bits_to_hex(bits)
        np.testing.assert_array_equal(read_bits(tmp_path / "key", bits.shape), bits)

    def test_missing_file(self, tmp_path):
        """Test reading an absent matrix raises ArtifactNotFoundError."""
        with pytest.raises(ArtifactNotFoundError):
            read_bits(tmp_path / "absent", (2, 2))


class TestChipFiles:
    """Test suite for chip descriptors."""

    def test_regenerates_same_chip(self, tmp_path, small_chip, process, mismatch_model, nominal_env):
        """Test loading a descriptor regenerates the same die."""
        path = tmp_path / "chip.json"
        write_chip(path, small_chip, nominal_response(small_chip, nominal_env))
        loaded = load_chip(path, process, mismatch_model)
        assert loaded.chip_id == small_chip.chip_id
        np.testing.assert_array_equal(loaded.cells.pmos[2].static, small_chip.cells.pmos[2].static)

    def test_parameter_hash_guard(self, tmp_path, small_chip, process, nominal_env):
        """Test a descriptor written under other parameters is refused."""
        path = tmp_path / "chip.json"
        write_chip(path, small_chip, nominal_response(small_chip, nominal_env))
        with pytest.raises(SerializationError):
            load_chip(path, process, MismatchModel(pelgrom_avt=5.0e-9))

    def test_corrupt_descriptor(self, tmp_path, process, mismatch_model):
        """Test malformed JSON raises SerializationError."""
        path = tmp_path / "chip.json"
        path.write_text("{not json")
        with pytest.raises(SerializationError):
            load_chip(path, process, mismatch_model)

    def test_missing_descriptor(self, tmp_path, process, mismatch_model):
        """Test an absent file raises ArtifactNotFoundError."""
        with pytest.raises(ArtifactNotFoundError):
            load_chip(tmp_path / "nope.json", process, mismatch_model)
