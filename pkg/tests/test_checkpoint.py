import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blowlab.checkpoint import MAGIC, CheckpointError, dumps, loads, read_checkpoint, write_checkpoint
from blowlab.spectral import Grid, SpectralField, random_smooth, taylor_green


class TestRoundTrip:
    @settings(max_examples=20, deadline=None)
    @given(n=st.sampled_from([8, 10, 16, 18]), seed=st.integers(0, 10**6))
    def test_bit_exact(self, n, seed):
        f = random_smooth(Grid(n), seed, 0.3)
        g = loads(dumps(f))
        assert g.grid == f.grid
        np.testing.assert_array_equal(g.coeffs, f.coeffs)

    def test_file(self, tmp_path):
        f = taylor_green(Grid(16), 0.7)
        write_checkpoint(tmp_path / "a.bin", f)
        np.testing.assert_array_equal(read_checkpoint(tmp_path / "a.bin").coeffs, f.coeffs)

    def test_zero_field(self):
        z = SpectralField.zeros(Grid(8))
        np.testing.assert_array_equal(loads(dumps(z)).coeffs, z.coeffs)


class TestLayout:
    def test_header_and_size(self):
        f = taylor_green(Grid(8), 1.0)
        data = dumps(f)
        magic, n, count = struct.unpack_from("<8sIQ", data)
        assert magic == MAGIC and n == 8
        # half of the 5^3 cube minus the zero mode
        assert count == (5**3 - 1) // 2
        assert len(data) == 20 + count * (12 + 48)

    def test_first_record(self):
        f = SpectralField.from_modes(Grid(8), {(0, 0, 1): (1 + 2j, -3j, 0)})
        data = dumps(f)
        xi = struct.unpack_from("<3i", data, 20)
        c = struct.unpack_from("<6d", data, 32)
        assert xi == (0, 0, 1)
        assert c == (1.0, 2.0, 0.0, -3.0, 0.0, 0.0)


class TestCorruption:
    def test_bad_magic(self):
        data = bytearray(dumps(taylor_green(Grid(8), 1.0)))
        data[0:1] = b"X"
        with pytest.raises(CheckpointError, match="magic"):
            loads(bytes(data))

    def test_truncated(self):
        data = dumps(taylor_green(Grid(8), 1.0))
        with pytest.raises(CheckpointError):
            loads(data[:-7])
        with pytest.raises(CheckpointError):
            loads(data[:10])

    def test_bad_grid(self):
        data = struct.pack("<8sIQ", MAGIC, 7, 0)
        with pytest.raises(CheckpointError):
            loads(data)

    def test_mode_outside_cutoff(self):
        rec = struct.pack("<3i6d", 5, 0, 0, 0, 0, 1, 0, 0, 0)
        with pytest.raises(CheckpointError, match="cutoff"):
            loads(struct.pack("<8sIQ", MAGIC, 8, 1) + rec)
