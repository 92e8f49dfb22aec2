"""Binary and text storage of grid fields (forms, gauge maps, Higgs fields).

Binary layout, all integers and floats little-endian::

    offset  size  field
    0       4     magic b"AGFD"
    4       2     format version (uint16, currently 1)
    6       1     kind: 0 form, 1 gauge map, 2 Higgs field
    7       1     group: 0 U1, 1 SU2
    8       1     form degree (0 for non-forms)
    9       1     chart: 0 sigma, 1 sigma_hat
    10      2     reserved (zero)
    12      4     n_r (uint32)
    16      4     n_theta (uint32)
    20      4     n_phi (uint32)
    24      4     number of components (uint32; 1 for non-forms)
    28      4     values per node and component (uint32)
    32      ...   payload: float64 values

The payload is the array of shape ``(components, n_r, n_theta, n_phi, values)``
in C order: each component array is stored node-major (``phi`` fastest),
with the per-node values contiguous.

The text format carries the same header as ``key value`` lines followed by
one line per node and component holding the values as ``float.hex``
strings, so both formats round-trip bit for bit.
"""

from __future__ import annotations

import struct

import numpy as np

from . import lie
from .forms import LieForm
from .gauge import GaugeMap
from .geometry import CHARTS, Grid
from .higgs import HiggsField

MAGIC = b"AGFD"
VERSION = 1
TEXT_MAGIC = b"AGFD-TEXT"
_HEADER = struct.Struct("<4sHBBBBH5I")
_KINDS = ("form", "gauge", "higgs")
_GROUPS = (lie.U1, lie.SU2)


class FormatError(ValueError):
    pass


def _describe(obj):
    if isinstance(obj, LieForm):
        return "form", obj.group_tag, obj.degree, obj.chart, obj.grid, obj.data
    if isinstance(obj, GaugeMap):
        return "gauge", obj.group_tag, 0, obj.grid.chart, obj.grid, obj.data[None]
    if isinstance(obj, HiggsField):
        return "higgs", obj.group_tag, 0, obj.grid.chart, obj.grid, obj.data[None]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _assemble(kind, tag, degree, chart, shape, data):
    grid = Grid(*shape, chart=chart)
    if kind == "form":
        return LieForm(degree, chart, tag, grid, data)
    if kind == "gauge":
        return GaugeMap(tag, grid, data[0])
    return HiggsField(tag, grid, data[0])


def dumps(obj) -> bytes:
    kind, tag, degree, chart, grid, data = _describe(obj)
    data = np.ascontiguousarray(data, dtype="<f8")
    header = _HEADER.pack(
        MAGIC,
        VERSION,
        _KINDS.index(kind),
        _GROUPS.index(tag),
        degree,
        CHARTS.index(chart),
        0,
        grid.n_r,
        grid.n_theta,
        grid.n_phi,
        data.shape[0],
        data.shape[-1],
    )
    return header + data.tobytes(order="C")


def loads(blob: bytes):
    if len(blob) < _HEADER.size:
        raise FormatError("truncated header")
    magic, version, kind, group, degree, chart, _, n_r, n_t, n_p, ncomp, nval = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    try:
        kind_s, tag, chart_s = _KINDS[kind], _GROUPS[group], CHARTS[chart]
    except IndexError as exc:
        raise FormatError("bad enumeration value in header") from exc
    shape = (ncomp, n_r, n_t, n_p, nval)
    count = int(np.prod(shape))
    payload = blob[_HEADER.size :]
    if len(payload) != 8 * count:
        raise FormatError(f"payload has {len(payload)} bytes, expected {8 * count}")
    data = np.frombuffer(payload, dtype="<f8").reshape(shape).astype(float)
    return _assemble(kind_s, tag, degree, chart_s, (n_r, n_t, n_p), data)


def dumps_text(obj) -> str:
    kind, tag, degree, chart, grid, data = _describe(obj)
    lines = [
        "AGFD-TEXT 1",
        f"kind {kind}",
        f"group {tag}",
        f"degree {degree}",
        f"chart {chart}",
        f"grid {grid.n_r} {grid.n_theta} {grid.n_phi}",
        f"components {data.shape[0]}",
        f"values {data.shape[-1]}",
        "data",
    ]
    flat = np.asarray(data, dtype=float).reshape(-1, data.shape[-1])
    lines.extend(" ".join(float(v).hex() for v in row) for row in flat)
    return "\n".join(lines) + "\n"


def loads_text(text: str):
    lines = text.splitlines()
    if not lines or lines[0].strip() != "AGFD-TEXT 1":
        raise FormatError("missing 'AGFD-TEXT 1' header line")
    head = {}
    i = 1
    while i < len(lines) and lines[i].strip() != "data":
        key, _, value = lines[i].strip().partition(" ")
        head[key] = value
        i += 1
    try:
        n_r, n_t, n_p = (int(v) for v in head["grid"].split())
        ncomp, nval = int(head["components"]), int(head["values"])
        kind, tag, chart, degree = head["kind"], head["group"], head["chart"], int(head["degree"])
    except (KeyError, ValueError) as exc:
        raise FormatError(f"incomplete text header: {exc}") from exc
    rows = lines[i + 1 :]
    expected = ncomp * n_r * n_t * n_p
    if len(rows) != expected:
        raise FormatError(f"expected {expected} data lines, found {len(rows)}")
    try:
        values = [[float.fromhex(tok) for tok in row.split()] for row in rows]
    except ValueError as exc:
        raise FormatError(f"bad float literal: {exc}") from exc
    data = np.array(values, dtype=float).reshape(ncomp, n_r, n_t, n_p, nval)
    return _assemble(kind, tag, degree, chart, (n_r, n_t, n_p), data)


def save(obj, path, text=None):
    """Write ``obj``; the text format is used for ``.txt`` paths unless ``text`` says otherwise."""
    path = str(path)
    as_text = path.endswith(".txt") if text is None else text
    if as_text:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(dumps_text(obj))
    else:
        with open(path, "wb") as fh:
            fh.write(dumps(obj))


def load(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    # the text header also begins with the magic bytes
    if blob.startswith(TEXT_MAGIC):
        return loads_text(blob.decode("ascii"))
    return loads(blob)
