import json
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from obfx.core import TruthTableFunction
from obfx.formats import (
    MAGIC,
    FormatError,
    dump_json,
    program_from_json,
    program_to_json,
    read_program,
    read_table,
    table_from_bytes,
    table_from_hex,
    table_to_bytes,
    table_to_hex,
    write_program,
    write_table,
)
from obfx.streaming import fp_chord_program, random_forgetless_program


@st.composite
def tables(draw):
    n = draw(st.integers(1, 8))
    m = draw(st.integers(1, 9))
    vals = draw(st.lists(st.integers(0, (1 << m) - 1), min_size=1 << n, max_size=1 << n))
    return TruthTableFunction(n, m, vals)


@given(tables())
@settings(max_examples=80)
def test_binary_round_trip(f):
    assert table_from_bytes(table_to_bytes(f)) == f


@given(tables())
@settings(max_examples=80)
def test_hex_round_trip(f):
    assert table_from_hex(table_to_hex(f)) == f


def test_binary_layout():
    f = TruthTableFunction(2, 3, [0b101, 0b000, 0b111, 0b001])
    data = table_to_bytes(f)
    assert data[:4] == MAGIC
    assert struct.unpack("<II", data[4:12]) == (2, 3)
    # 101 000 111 001 -> 10100011 1001(0000)
    assert data[12:] == bytes([0b10100011, 0b10010000])


def test_hex_layout():
    f = TruthTableFunction(3, 1, [0, 1, 1, 0, 1, 0, 0, 1])
    assert table_to_hex(f) == "obfx-tt 3 1\n69\n"


@pytest.mark.parametrize(
    "data",
    [b"", b"XXXX" + bytes(8), MAGIC + struct.pack("<II", 2, 1), MAGIC + struct.pack("<II", 2, 1) + b"\x0f"],
)
def test_binary_rejects_malformed(data):
    with pytest.raises(FormatError):
        table_from_bytes(data)


@pytest.mark.parametrize("text", ["", "tt 2 1\n00\n", "obfx-tt 2 1\nzz\n", "obfx-tt 2 1\n0000\n"])
def test_hex_rejects_malformed(text):
    with pytest.raises(FormatError):
        table_from_hex(text)


def test_file_round_trip(tmp_path):
    f = TruthTableFunction(4, 2, np.arange(16) % 4)
    write_table(f, tmp_path / "a.tt")
    write_table(f, tmp_path / "a.tthex")
    assert (tmp_path / "a.tt").read_bytes()[:4] == MAGIC
    assert (tmp_path / "a.tthex").read_text().startswith("obfx-tt")
    assert read_table(tmp_path / "a.tt") == f == read_table(tmp_path / "a.tthex")


def test_program_round_trip(tmp_path):
    p = fp_chord_program(5, 7)
    obj = program_to_json(p)
    assert obj["output"][3] == "011" and obj["n"] == 5
    assert program_from_json(obj) == p
    write_program(p, tmp_path / "p.json")
    assert read_program(tmp_path / "p.json") == p
    q = random_forgetless_program(6, 5, 2, np.random.default_rng(0))
    assert program_from_json(json.loads(dump_json(program_to_json(q)))) == q


def test_program_rejects_malformed():
    obj = program_to_json(fp_chord_program(3, 5))
    bad = dict(obj, output=["0", "01", "10", "11", "00"])
    with pytest.raises(FormatError):
        program_from_json(bad)
    with pytest.raises(FormatError):
        program_from_json(dict(obj, n=4))
    with pytest.raises(FormatError):
        program_from_json({"states": 2})
    with pytest.raises(ValueError):
        program_from_json(dict(obj, sigma0=[[0, 1, 2, 3, 9]] * 3))


def test_dump_json_is_canonical():
    assert dump_json({"b": 1, "a": [1, 2]}) == '{\n  "a": [\n    1,\n    2\n  ],\n  "b": 1\n}\n'
