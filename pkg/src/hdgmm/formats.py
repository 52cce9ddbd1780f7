"""Binary file formats and chunked reading.

Four little-endian formats share a 4-byte magic and a u16 version:

``HDGF`` dictionary
    N u64, M u32, P u32, P label names (u16 length + UTF-8), sample width u8,
    then N*M signal samples (row-major, f4 or f8) and N*P labels (row-major f8).
``HDGM`` model
    K u32, M u32, d u32, then per component: weight f8, mean M*f8,
    signal variances d*f8, noise variance f8, basis M*d f8 column-major.
``HDGC`` compressed dataset
    coordinate width u8, N u64, an embedded ``HDGM`` block, then N records of
    (cluster id u16, d coordinates at the declared width).
``HDGK`` online checkpoint
    step index u64, records seen u64, an embedded ``HDGM`` block, then the
    running statistics s0 (K f8), s1 (K*M f8), S2 (K*M*M f8).
"""
import io
import os
import struct

import numpy as np

from .em_online import OnlineState, SuffStats
from .errors import FormatError
from .matching import Dictionary
from .model import Component, HdGmmModel
from .reduction import CompressedDataset

FORMAT_VERSION = 1
DICT_MAGIC = b"HDGF"
MODEL_MAGIC = b"HDGM"
COMPRESSED_MAGIC = b"HDGC"
CHECKPOINT_MAGIC = b"HDGK"
READ_ORTHO_TOL = 1e-8

_DTYPES = {4: np.dtype("<f4"), 8: np.dtype("<f8")}
_F8 = np.dtype("<f8")


def _width_dtype(width):
    try:
        return _DTYPES[int(width)]
    except KeyError:
        raise FormatError(f"unsupported sample width {width}") from None


class _Cursor:
    """Sequential reader over a bytes-like buffer with truncation checks."""

    def __init__(self, buf, offset=0, what="file"):
        self.buf = buf
        self.pos = offset
        self.what = what

    def take(self, n):
        if self.pos + n > len(self.buf):
            raise FormatError(
                f"truncated {self.what}: needed {self.pos + n} bytes, have {len(self.buf)}"
            )
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt):
        size = struct.calcsize(fmt)
        return struct.unpack(fmt, self.take(size))

    def array(self, dtype, count):
        dtype = np.dtype(dtype)
        return np.frombuffer(self.take(dtype.itemsize * count), dtype=dtype, count=count)


def _check_magic(cur, magic):
    got = bytes(cur.take(4))
    if got != magic:
        raise FormatError(f"bad magic {got!r}, expected {magic!r}")
    (version,) = cur.unpack("<H")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported format version {version}")


def _write_atomic(path, payload):
    tmp = f"{path}.tmp-{os.getpid()}"
    with open(tmp, "wb") as f:
        f.write(payload)
    os.replace(tmp, path)


# -- dictionaries -----------------------------------------------------------

def _dict_header(N, M, names, width):
    parts = [DICT_MAGIC, struct.pack("<HQII", FORMAT_VERSION, N, M, len(names))]
    for name in names:
        raw = name.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise ValueError(f"label name too long: {name[:20]!r}...")
        parts.append(struct.pack("<H", len(raw)) + raw)
    parts.append(struct.pack("<B", width))
    return b"".join(parts)


def dictionary_bytes(dictionary, sample_width=8):
    dtype = _width_dtype(sample_width)
    if not (np.all(np.isfinite(dictionary.signals)) and np.all(np.isfinite(dictionary.labels))):
        raise ValueError("refusing to write non-finite values")
    header = _dict_header(dictionary.N, dictionary.M, dictionary.label_names, sample_width)
    return (
        header
        + np.ascontiguousarray(dictionary.signals, dtype=dtype).tobytes()
        + np.ascontiguousarray(dictionary.labels, dtype=_F8).tobytes()
    )


def dictionary_file_size(N, M, label_names, sample_width=8):
    return len(_dict_header(N, M, label_names, sample_width)) + N * M * sample_width + N * len(label_names) * 8


def write_dictionary(path, dictionary, sample_width=8):
    _write_atomic(path, dictionary_bytes(dictionary, sample_width))


def _read_dict_header(f, total_size):
    head = f.read(4 + 2 + 8 + 4 + 4)
    cur = _Cursor(head, what="dictionary header")
    _check_magic(cur, DICT_MAGIC)
    N, M, P = cur.unpack("<QII")
    names = []
    for _ in range(P):
        raw = f.read(2)
        if len(raw) < 2:
            raise FormatError("truncated dictionary header")
        (n,) = struct.unpack("<H", raw)
        name = f.read(n)
        if len(name) < n:
            raise FormatError("truncated dictionary header")
        names.append(name.decode("utf-8"))
    raw = f.read(1)
    if len(raw) < 1:
        raise FormatError("truncated dictionary header")
    width = raw[0]
    dtype = _width_dtype(width)
    header_len = f.tell()
    expected = header_len + N * M * dtype.itemsize + N * P * 8
    if total_size < expected:
        raise FormatError(f"truncated dictionary: {total_size} bytes, header declares {expected}")
    if total_size > expected:
        raise FormatError(f"dictionary has {total_size - expected} trailing bytes")
    return {"N": N, "M": M, "P": P, "label_names": tuple(names), "sample_width": width,
            "header_bytes": header_len, "file_bytes": expected}


def read_dictionary(path):
    size = os.path.getsize(path)
    with open(path, "rb") as f:
        h = _read_dict_header(f, size)
        dtype = _width_dtype(h["sample_width"])
        N, M, P = h["N"], h["M"], h["P"]
        signals = np.frombuffer(f.read(N * M * dtype.itemsize), dtype=dtype).reshape(N, M)
        labels = np.frombuffer(f.read(N * P * 8), dtype=_F8).reshape(N, P)
    return Dictionary(signals.astype(np.float64), labels.astype(np.float64), h["label_names"])


class ChunkReader:
    """Streams a dictionary file in chunks of at most ``chunk_size`` records.

    Iterating yields float64 signal blocks of shape (n, M), or
    ``(signals, labels)`` pairs when ``with_labels`` is set. Only one chunk is
    held in memory at a time; iteration can be restarted.
    """

    def __init__(self, path, chunk_size, with_labels=False):
        if chunk_size < 1:
            raise ValueError("chunk_size must be >= 1")
        self.path = path
        self.chunk_size = int(chunk_size)
        self.with_labels = with_labels
        with open(path, "rb") as f:
            self.header = _read_dict_header(f, os.path.getsize(path))
        self._dtype = _width_dtype(self.header["sample_width"])

    @property
    def N(self):
        return self.header["N"]

    @property
    def M(self):
        return self.header["M"]

    def __len__(self):
        return -(-self.N // self.chunk_size)

    def __iter__(self):
        h = self.header
        N, M, P = h["N"], h["M"], h["P"]
        row_bytes = M * self._dtype.itemsize
        label_start = h["header_bytes"] + N * row_bytes
        with open(self.path, "rb") as f:
            for start in range(0, N, self.chunk_size):
                n = min(self.chunk_size, N - start)
                f.seek(h["header_bytes"] + start * row_bytes)
                sig = np.frombuffer(f.read(n * row_bytes), dtype=self._dtype)
                sig = sig.reshape(n, M).astype(np.float64)
                if not self.with_labels:
                    yield sig
                    continue
                f.seek(label_start + start * P * 8)
                lab = np.frombuffer(f.read(n * P * 8), dtype=_F8).reshape(n, P).copy()
                yield sig, lab


def open_chunked(path, chunk_size, with_labels=False):
    return ChunkReader(path, chunk_size, with_labels)


# -- models -----------------------------------------------------------------

def model_bytes(model):
    out = io.BytesIO()
    out.write(MODEL_MAGIC)
    out.write(struct.pack("<HIII", FORMAT_VERSION, model.K, model.M, model.d))
    for c in model.components:
        out.write(struct.pack("<d", c.weight))
        out.write(np.asarray(c.mean, dtype=_F8).tobytes())
        out.write(np.asarray(c.signal_variances, dtype=_F8).tobytes())
        out.write(struct.pack("<d", c.noise_variance))
        out.write(np.asarray(c.basis, dtype=_F8).tobytes(order="F"))
    return out.getvalue()


def model_file_size(K, M, d):
    return 4 + 2 + 12 + K * (8 * (1 + M + d + 1 + M * d))


def _parse_model(cur):
    _check_magic(cur, MODEL_MAGIC)
    K, M, d = cur.unpack("<III")
    if K < 1 or not 1 <= d <= M - 1:
        raise FormatError(f"invalid model dimensions K={K}, M={M}, d={d}")
    comps = []
    for k in range(K):
        (w,) = cur.unpack("<d")
        mean = cur.array(_F8, M).copy()
        a = cur.array(_F8, d).copy()
        (b,) = cur.unpack("<d")
        W = cur.array(_F8, M * d).reshape(d, M).T.copy()
        err = np.linalg.norm(W.T @ W - np.eye(d))
        if not err <= READ_ORTHO_TOL:
            raise FormatError(f"component {k}: basis not orthonormal (error {err:.3g})")
        try:
            comps.append(Component(w, mean, a, b, W))
        except ValueError as exc:
            raise FormatError(f"component {k}: {exc}") from None
    try:
        return HdGmmModel(tuple(comps))
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def _read_all(path):
    with open(path, "rb") as f:
        return f.read()


def _expect_end(cur):
    if cur.pos != len(cur.buf):
        raise FormatError(f"{len(cur.buf) - cur.pos} trailing bytes in {cur.what}")


def write_model(path, model):
    _write_atomic(path, model_bytes(model))


def read_model(path):
    cur = _Cursor(_read_all(path), what="model file")
    model = _parse_model(cur)
    _expect_end(cur)
    return model


# -- compressed datasets ----------------------------------------------------

def _record_dtype(d, width):
    return np.dtype([("cluster", "<u2"), ("coords", _width_dtype(width), (d,))])


def compressed_bytes(cds, coord_width=8):
    if cds.model.K > 0xFFFF:
        raise ValueError("cluster ids must fit in 16 bits")
    rec = np.empty(cds.count, dtype=_record_dtype(cds.model.d, coord_width))
    rec["cluster"] = cds.cluster_ids
    rec["coords"] = cds.coords
    return (
        COMPRESSED_MAGIC
        + struct.pack("<HBQ", FORMAT_VERSION, coord_width, cds.count)
        + model_bytes(cds.model)
        + rec.tobytes()
    )


def compressed_file_size(N, K, M, d, coord_width=8):
    return 4 + 2 + 1 + 8 + model_file_size(K, M, d) + N * (2 + d * coord_width)


def write_compressed(path, cds, coord_width=8):
    _write_atomic(path, compressed_bytes(cds, coord_width))


def read_compressed(path):
    cur = _Cursor(_read_all(path), what="compressed file")
    _check_magic(cur, COMPRESSED_MAGIC)
    width, N = cur.unpack("<BQ")
    _width_dtype(width)
    model = _parse_model(cur)
    rec = cur.array(_record_dtype(model.d, width), N)
    _expect_end(cur)
    ids = rec["cluster"].astype(np.int64)
    if N and ids.max() >= model.K:
        raise FormatError("cluster id out of range")
    return CompressedDataset(model, ids, rec["coords"].astype(np.float64))


# -- checkpoints ------------------------------------------------------------

def checkpoint_bytes(model, stats, records):
    return b"".join([
        CHECKPOINT_MAGIC,
        struct.pack("<HQQ", FORMAT_VERSION, stats.t, records),
        model_bytes(model),
        np.asarray(stats.s0, dtype=_F8).tobytes(),
        np.asarray(stats.s1, dtype=_F8).tobytes(),
        np.asarray(stats.S2, dtype=_F8).tobytes(),
    ])


def write_checkpoint(path, model, stats, records=0):
    _write_atomic(path, checkpoint_bytes(model, stats, records))


def read_checkpoint(path):
    cur = _Cursor(_read_all(path), what="checkpoint")
    _check_magic(cur, CHECKPOINT_MAGIC)
    t, records = cur.unpack("<QQ")
    model = _parse_model(cur)
    K, M = model.K, model.M
    s0 = cur.array(_F8, K).copy()
    s1 = cur.array(_F8, K * M).reshape(K, M).copy()
    S2 = cur.array(_F8, K * M * M).reshape(K, M, M).copy()
    _expect_end(cur)
    return OnlineState(model, SuffStats(s0, s1, S2, int(t)), int(records))


# -- inspection -------------------------------------------------------------

def info(path):
    """Validate any of the four formats and return its header fields."""
    size = os.path.getsize(path)
    with open(path, "rb") as f:
        magic = f.read(4)
    if magic == DICT_MAGIC:
        with open(path, "rb") as f:
            h = _read_dict_header(f, size)
        h["label_names"] = list(h["label_names"])
        return {"format": "dictionary", "magic": magic.decode(), "version": FORMAT_VERSION, **h}
    if magic == MODEL_MAGIC:
        m = read_model(path)
        return {"format": "model", "magic": magic.decode(), "version": FORMAT_VERSION,
                "K": m.K, "M": m.M, "d": m.d, "weights": m.weights.tolist(), "file_bytes": size}
    if magic == COMPRESSED_MAGIC:
        c = read_compressed(path)
        with open(path, "rb") as f:
            f.seek(6)
            (width,) = struct.unpack("<B", f.read(1))
        return {"format": "compressed", "magic": magic.decode(), "version": FORMAT_VERSION,
                "N": c.count, "K": c.model.K, "M": c.model.M, "d": c.model.d,
                "coord_width": width, "file_bytes": size}
    if magic == CHECKPOINT_MAGIC:
        s = read_checkpoint(path)
        return {"format": "checkpoint", "magic": magic.decode(), "version": FORMAT_VERSION,
                "K": s.model.K, "M": s.model.M, "d": s.model.d, "t": s.stats.t,
                "records": s.records, "file_bytes": size}
    raise FormatError(f"unknown magic {magic!r}")
