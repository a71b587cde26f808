import struct

import numpy as np
import pytest

from fracbouss import spectral as sp
from fracbouss.checkpoint import HEADER, MAGIC, read_checkpoint, write_checkpoint
from fracbouss.solver import InitSpec, PhysParams, make_initial_data


@pytest.fixture
def state():
    return make_initial_data(InitSpec(seed=3, amp_theta=0.2, amp_u=0.1), sp.Grid(32))


def test_round_trip_complex128(tmp_path, state):
    prm = PhysParams(alpha=0.9, epsilon=0.07, mu_profile="tanh_saturating")
    path = tmp_path / "s.chk"
    write_checkpoint(path, state, prm, seed=42)
    back, bprm, seed = read_checkpoint(path)
    assert seed == 42 and bprm == prm and back.t == state.t
    assert back.grid == state.grid
    for a, b in zip(state.arrays(), back.arrays()):
        assert np.array_equal(a, b)
    assert path.stat().st_size == HEADER.size + 3 * 32 * 17 * 16


def test_round_trip_complex64(tmp_path, state):
    path = tmp_path / "s.chk"
    write_checkpoint(path, state, PhysParams(), itemsize=8)
    back, _, _ = read_checkpoint(path)
    for a, b in zip(state.arrays(), back.arrays()):
        assert np.abs(a - b).max() <= 1e-7 * np.abs(a).max()
    with pytest.raises(ValueError):
        write_checkpoint(path, state, PhysParams(), itemsize=4)


def test_header_layout(tmp_path, state):
    path = tmp_path / "s.chk"
    write_checkpoint(path, state, PhysParams(alpha=0.8, epsilon=0.05), seed=7)
    raw = path.read_bytes()
    assert raw[:5] == MAGIC
    n, L, alpha, eps, t, seed, mu_id, itemsize = struct.unpack_from("<IddddqBB", raw, 5)
    assert (n, alpha, eps, t, seed, mu_id, itemsize) == (32, 0.8, 0.05, 0.0, 7, 0, 16)
    assert L == pytest.approx(32 * np.pi)
    first = np.frombuffer(raw, "<c16", count=1, offset=HEADER.size)[0]
    assert first == state.theta.coeffs[0, 0]


def test_corrupt_files(tmp_path, state):
    path = tmp_path / "s.chk"
    write_checkpoint(path, state, PhysParams())
    raw = path.read_bytes()
    (tmp_path / "magic.chk").write_bytes(b"XXXXX" + raw[5:])
    (tmp_path / "short.chk").write_bytes(raw[:-8])
    (tmp_path / "head.chk").write_bytes(raw[:10])
    for name in ("magic.chk", "short.chk", "head.chk"):
        with pytest.raises(ValueError):
            read_checkpoint(tmp_path / name)
