"""On-disk formats.

Binary truth table (``.tt``)::

    magic  b"OBTT"
    n      uint32 little-endian
    m      uint32 little-endian
    body   2**n outputs of m bits each, row-major by input value, each output
           most significant bit first, packed into bytes MSB first and
           zero-padded to a whole byte

Hex truth table (``.tthex``): a first line ``obfx-tt <n> <m>`` followed by
the packed body as lowercase hex, 64 characters per line.

Streaming programs are JSON::

    {"states": 3, "initial": 0, "n": 4,
     "sigma0": [[...], ...], "sigma1": [[...], ...],
     "output": ["00", "01", "10"]}
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .core import TruthTableFunction
from .streaming import StreamingProgram

MAGIC = b"OBTT"
HEX_HEADER = "obfx-tt"


class FormatError(ValueError):
    pass


def _pack_body(f: TruthTableFunction) -> bytes:
    shifts = np.arange(f.m - 1, -1, -1, dtype=np.int64)
    bits = ((f.table[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
    return np.packbits(bits.reshape(-1)).tobytes()


def _unpack_body(body: bytes, n: int, m: int) -> TruthTableFunction:
    nbits = (1 << n) * m
    if len(body) != (nbits + 7) // 8:
        raise FormatError(f"body has {len(body)} bytes, expected {(nbits + 7) // 8}")
    bits = np.unpackbits(np.frombuffer(body, dtype=np.uint8))
    if bits[nbits:].any():
        raise FormatError("non-zero padding bits")
    bits = bits[:nbits].reshape(1 << n, m).astype(np.int64)
    weights = 1 << np.arange(m - 1, -1, -1, dtype=np.int64)
    return TruthTableFunction(n, m, bits @ weights)


def table_to_bytes(f: TruthTableFunction) -> bytes:
    return MAGIC + struct.pack("<II", f.n, f.m) + _pack_body(f)


def table_from_bytes(data: bytes) -> TruthTableFunction:
    if len(data) < 12 or data[:4] != MAGIC:
        raise FormatError("not a binary truth table (bad magic)")
    n, m = struct.unpack("<II", data[4:12])
    if not 1 <= n <= 30 or not 1 <= m <= 63:
        raise FormatError(f"unsupported dimensions n={n}, m={m}")
    return _unpack_body(data[12:], n, m)


def table_to_hex(f: TruthTableFunction) -> str:
    body = _pack_body(f).hex()
    lines = [f"{HEX_HEADER} {f.n} {f.m}"]
    lines += [body[i:i + 64] for i in range(0, len(body), 64)] or [""]
    return "\n".join(lines) + "\n"


def table_from_hex(text: str) -> TruthTableFunction:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise FormatError("empty hex truth table")
    head = lines[0].split()
    if len(head) != 3 or head[0] != HEX_HEADER:
        raise FormatError(f"bad header line {lines[0]!r}")
    n, m = int(head[1]), int(head[2])
    try:
        body = bytes.fromhex("".join(lines[1:]))
    except ValueError as exc:
        raise FormatError(str(exc)) from exc
    return _unpack_body(body, n, m)


def read_table(path) -> TruthTableFunction:
    data = Path(path).read_bytes()
    if data[:4] == MAGIC:
        return table_from_bytes(data)
    return table_from_hex(data.decode("ascii"))


def write_table(f: TruthTableFunction, path, hex_text: bool | None = None):
    path = Path(path)
    if hex_text is None:
        hex_text = path.suffix in (".tthex", ".hex", ".txt")
    if hex_text:
        path.write_text(table_to_hex(f))
    else:
        path.write_bytes(table_to_bytes(f))


def program_to_json(p: StreamingProgram) -> dict:
    return {
        "states": p.states,
        "initial": p.initial,
        "n": p.n,
        "sigma0": p.sigma0.tolist(),
        "sigma1": p.sigma1.tolist(),
        "output": [format(o, f"0{p.m}b") for o in p.output],
    }


def program_from_json(obj: dict) -> StreamingProgram:
    try:
        outputs = obj["output"]
        widths = {len(o) for o in outputs}
        if len(widths) != 1:
            raise FormatError("output strings must share one length")
        m = widths.pop()
        p = StreamingProgram(
            states=int(obj["states"]),
            initial=int(obj["initial"]),
            sigma0=obj["sigma0"],
            sigma1=obj["sigma1"],
            output=tuple(int(o, 2) for o in outputs),
            m=m,
        )
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed program: {exc}") from exc
    if "n" in obj and int(obj["n"]) != p.n:
        raise FormatError(f"n={obj['n']} but transition tables have {p.n} rows")
    return p


def read_program(path) -> StreamingProgram:
    return program_from_json(json.loads(Path(path).read_text()))


def write_program(p: StreamingProgram, path):
    Path(path).write_text(dump_json(program_to_json(p)))


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
