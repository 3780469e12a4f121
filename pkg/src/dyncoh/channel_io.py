"""Channel specs: the inline grammar and the JSON file format.

Inline forms::

    identity:d  dephasing:d  depolarizing:LAMBDA:d  partial-dephasing:LAMBDA:d
    replace-plus:d  choi-file:PATH  unitary-file:PATH

A bare path to an existing file is read as a JSON channel file. Files hold
one object with a ``type`` key and the fields that type needs; complex
entries are written as ``[re, im]`` pairs::

    {"type": "depolarizing", "lambda": 0.5, "d": 2}
    {"type": "choi", "d_in": 2, "d_out": 2, "choi": [[[1, 0], ...], ...]}
    {"type": "unitary", "unitary": [[[0.7071, 0], ...], ...]}
"""

import json
from pathlib import Path

import numpy as np

from . import channels as ch
from .channels import ChannelChoi
from .superchannels import SuperchannelChoi, validate_superchannel

FILE_KEYS = {"type", "d", "d_in", "d_out", "lambda", "choi", "unitary"}
NAMED = ("identity", "dephasing", "depolarizing", "partial-dephasing", "replace-plus")


class UnknownChannelSpec(ValueError):
    pass


def encode_matrix(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def decode_matrix(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 3 and arr.shape[-1] == 2:
        return arr[..., 0] + 1j * arr[..., 1]
    if arr.ndim == 2:
        return arr.astype(complex)
    raise UnknownChannelSpec("matrix must be a 2-D list of numbers or [re, im] pairs")


def _int(text, what):
    try:
        v = int(text)
    except (TypeError, ValueError):
        raise UnknownChannelSpec(f"{what} must be an integer, got {text!r}") from None
    if v < 1:
        raise UnknownChannelSpec(f"{what} must be positive, got {v}")
    return v


def _float(text, what):
    try:
        return float(text)
    except (TypeError, ValueError):
        raise UnknownChannelSpec(f"{what} must be a number, got {text!r}") from None


def _named(kind: str, lam, d) -> ChannelChoi:
    if kind == "identity":
        return ch.identity(d)
    if kind == "dephasing":
        return ch.dephasing(d)
    if kind == "depolarizing":
        return ch.depolarizing(lam, d)
    if kind == "partial-dephasing":
        return ch.partial_dephasing(lam, d)
    return ch.replace_plus(d)


def channel_from_dict(obj: dict) -> ChannelChoi:
    if not isinstance(obj, dict):
        raise UnknownChannelSpec("channel file must hold a JSON object")
    extra = set(obj) - FILE_KEYS
    if extra:
        raise UnknownChannelSpec(f"unknown keys in channel file: {', '.join(sorted(extra))}")
    kind = obj.get("type")
    if kind in NAMED:
        d = _int(obj.get("d"), "d")
        lam = None
        if kind in ("depolarizing", "partial-dephasing"):
            lam = _float(obj.get("lambda"), "lambda")
        return _named(kind, lam, d)
    if kind == "choi":
        if "choi" not in obj:
            raise UnknownChannelSpec("choi channel needs a 'choi' matrix")
        J = decode_matrix(obj["choi"])
        spec = ch.ChannelSpec("choi", d=obj.get("d"), matrix=J, d_in=obj.get("d_in"), d_out=obj.get("d_out"))
        return ch.make_channel(spec)
    if kind == "unitary":
        if "unitary" not in obj:
            raise UnknownChannelSpec("unitary channel needs a 'unitary' matrix")
        return ch.unitary(decode_matrix(obj["unitary"]))
    raise UnknownChannelSpec(f"unknown channel type {kind!r}")


def load_channel_file(path, expect: str | None = None) -> ChannelChoi:
    p = Path(path)
    if not p.is_file():
        raise UnknownChannelSpec(f"no such channel file: {path}")
    try:
        obj = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UnknownChannelSpec(f"{path}: not valid JSON ({exc.msg})") from None
    if expect is not None and isinstance(obj, dict) and obj.get("type") != expect:
        raise UnknownChannelSpec(f"{path}: expected a {expect!r} channel file")
    return channel_from_dict(obj)


def parse_channel(text: str) -> ChannelChoi:
    """Build a channel from an inline spec string or a JSON file path."""
    try:
        return _parse(text.strip())
    except UnknownChannelSpec:
        raise
    except ValueError as exc:
        raise UnknownChannelSpec(f"{text}: {exc}") from None


def _parse(text: str) -> ChannelChoi:
    kind, _, rest = text.partition(":")
    if kind == "choi-file":
        return load_channel_file(rest, "choi")
    if kind == "unitary-file":
        return load_channel_file(rest, "unitary")
    if kind in NAMED:
        parts = rest.split(":") if rest else []
        if kind in ("depolarizing", "partial-dephasing"):
            if len(parts) != 2:
                raise UnknownChannelSpec(f"{kind} needs LAMBDA:d, got {text!r}")
            return _named(kind, _float(parts[0], "lambda"), _int(parts[1], "d"))
        if len(parts) != 1:
            raise UnknownChannelSpec(f"{kind} needs a dimension, got {text!r}")
        return _named(kind, None, _int(parts[0], "d"))
    if Path(text).is_file():
        return load_channel_file(text)
    raise UnknownChannelSpec(f"unknown channel spec {text!r}")


def channel_to_dict(N: ChannelChoi) -> dict:
    return {"type": "choi", "d_in": N.d_in, "d_out": N.d_out, "choi": encode_matrix(N.J)}


def save_channel(N: ChannelChoi, path) -> None:
    Path(path).write_text(json.dumps(channel_to_dict(N)) + "\n", encoding="utf-8")


def superchannel_to_dict(theta: SuperchannelChoi) -> dict:
    return {"type": "superchannel", "dims": list(theta.dims), "choi": encode_matrix(theta.J)}


def load_superchannel(path) -> SuperchannelChoi:
    p = Path(path)
    if not p.is_file():
        raise UnknownChannelSpec(f"no such superchannel file: {path}")
    try:
        obj = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UnknownChannelSpec(f"{path}: not valid JSON ({exc.msg})") from None
    if not isinstance(obj, dict) or obj.get("type") != "superchannel":
        raise UnknownChannelSpec(f"{path}: expected a superchannel file")
    extra = set(obj) - {"type", "dims", "choi"}
    if extra:
        raise UnknownChannelSpec(f"unknown keys in superchannel file: {', '.join(sorted(extra))}")
    dims = obj.get("dims")
    if not (isinstance(dims, list) and len(dims) == 4):
        raise UnknownChannelSpec("superchannel file needs dims [a0, a1, b0, b1]")
    a0, a1, b0, b1 = (_int(x, "dims entry") for x in dims)
    return validate_superchannel(decode_matrix(obj["choi"]), ch.SystemDim(a0, a1), ch.SystemDim(b0, b1))


def save_superchannel(theta: SuperchannelChoi, path) -> None:
    Path(path).write_text(json.dumps(superchannel_to_dict(theta)) + "\n", encoding="utf-8")
