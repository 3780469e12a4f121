import json

import numpy as np
import pytest

from dyncoh import channels as ch
from dyncoh import superchannels as sc
from dyncoh.channel_io import (UnknownChannelSpec, decode_matrix, encode_matrix, load_superchannel,
                               parse_channel, save_channel, save_superchannel)
from dyncoh.channels import SystemDim

SPECS = ["identity:2", "identity:3", "dephasing:2", "depolarizing:0.5:2", "depolarizing:0.25:3",
         "partial-dephasing:0.3:2", "replace-plus:2", "replace-plus:3"]


def test_named_specs():
    assert ch.channels_close(parse_channel("identity:2"), ch.identity(2))
    assert ch.channels_close(parse_channel("depolarizing:0.5:2"), ch.depolarizing(0.5, 2))
    assert ch.channels_close(parse_channel(" partial-dephasing:0.3:3 "), ch.partial_dephasing(0.3, 3))
    assert ch.channels_close(parse_channel("replace-plus:2"), ch.replace_plus(2))


@pytest.mark.parametrize("spec", SPECS)
def test_round_trip(tmp_path, spec):
    N = parse_channel(spec)
    path = tmp_path / "chan.json"
    save_channel(N, path)
    assert np.array_equal(parse_channel(f"choi-file:{path}").J, N.J)
    assert np.array_equal(parse_channel(str(path)).J, N.J)


def test_matrix_encoding_round_trip(rng):
    m = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    assert np.array_equal(decode_matrix(encode_matrix(m)), m)
    assert np.array_equal(decode_matrix([[1, 2], [3, 4]]), np.array([[1, 2], [3, 4]], dtype=complex))


def test_unitary_file(tmp_path):
    H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    path = tmp_path / "h.json"
    path.write_text(json.dumps({"type": "unitary", "unitary": encode_matrix(H)}))
    assert ch.channels_close(parse_channel(f"unitary-file:{path}"), ch.unitary(H))


def test_named_type_in_file(tmp_path):
    path = tmp_path / "dep.json"
    path.write_text(json.dumps({"type": "depolarizing", "lambda": 0.5, "d": 2}))
    assert ch.channels_close(parse_channel(str(path)), ch.depolarizing(0.5, 2))


def test_unknown_keys_rejected(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"type": "identity", "d": 2, "colour": "blue"}))
    with pytest.raises(UnknownChannelSpec, match="colour"):
        parse_channel(str(path))


def test_wrong_file_kind_rejected(tmp_path):
    path = tmp_path / "c.json"
    save_channel(ch.identity(2), path)
    with pytest.raises(UnknownChannelSpec):
        parse_channel(f"unitary-file:{path}")


@pytest.mark.parametrize("spec", ["teleport:2", "identity", "identity:x", "identity:0", "depolarizing:2",
                                  "depolarizing:1.5:2", "choi-file:/no/such/file.json", ""])
def test_bad_specs(spec):
    with pytest.raises(UnknownChannelSpec):
        parse_channel(spec)


def test_invalid_json(tmp_path):
    path = tmp_path / "x.json"
    path.write_text("{not json")
    with pytest.raises(UnknownChannelSpec):
        parse_channel(f"choi-file:{path}")


def test_non_channel_choi_rejected(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"type": "choi", "d_in": 2, "d_out": 2, "choi": encode_matrix(np.eye(4))}))
    with pytest.raises(UnknownChannelSpec):
        parse_channel(str(path))


def test_superchannel_round_trip(tmp_path, rng):
    theta = sc.random_superchannel(SystemDim(2, 2), SystemDim(1, 2), rng)
    path = tmp_path / "s.json"
    save_superchannel(theta, path)
    back = load_superchannel(path)
    assert back.dims == theta.dims
    assert np.array_equal(back.J, theta.J)


def test_superchannel_file_checks(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"type": "superchannel", "dims": [2, 2], "choi": []}))
    with pytest.raises(UnknownChannelSpec):
        load_superchannel(path)
    path.write_text(json.dumps({"type": "choi"}))
    with pytest.raises(UnknownChannelSpec):
        load_superchannel(path)
