import numpy as np
import pytest
from hypothesis import given, strategies as st

from litterbot import protocol as proto

from oracles import frame_oracle, xor_fold

commands = st.one_of(
    st.builds(proto.Move, st.sampled_from(proto.DIRECTIONS), st.integers(0, 255)),
    st.just(proto.Stop()),
    st.builds(proto.ArmTo, *[st.integers(proto.COORD_MIN, proto.COORD_MAX)] * 3),
    st.builds(proto.Grip, st.sampled_from(proto.GRIP_ACTIONS)),
    st.just(proto.Home()),
)


def test_stop_frame():
    assert xor_fold(b"STP") == 0x57
    assert proto.encode(proto.Stop()) == b"STP*57\n"


@pytest.mark.parametrize("cmd,payload", [
    (proto.Move("F", 200), "MOV F 200"),
    (proto.Move("CC", 0), "MOV CC 0"),
    (proto.ArmTo(-120, 300, 60), "ARM -120 300 60"),
    (proto.Grip("O"), "GRP O"),
    (proto.Home(), "HOM"),
])
def test_frames_match_byte_fold_oracle(cmd, payload):
    assert proto.encode(cmd) == frame_oracle(payload)


def test_ack_frames():
    assert proto.encode_ack(proto.Ok()) == frame_oracle("OK")
    assert proto.encode_ack(proto.Err(5)) == frame_oracle("ERR 5")
    assert proto.decode_ack(frame_oracle("ERR 42")) == proto.Err(42)
    with pytest.raises(proto.ProtocolError) as e:
        proto.decode_ack(frame_oracle("OK 1"))
    assert e.value.code == proto.MALFORMED
    with pytest.raises(proto.ProtocolError) as e:
        proto.decode_ack(frame_oracle("YES"))
    assert e.value.code == proto.UNKNOWN_VERB


@given(commands)
def test_round_trip(cmd):
    line = proto.encode(cmd)
    assert proto.decode(line) == cmd
    assert len(line) <= proto.MAX_LINE and line.count(b"\n") == 1


@pytest.mark.parametrize("line,code", [
    (b"STP*00\n", proto.BAD_CHECKSUM),
    (b"STP*57", proto.MALFORMED),
    (b"STP*57\n\n", proto.MALFORMED),
    (b"STP*57\r\n", proto.MALFORMED),
    (b"STP*5a\n", proto.MALFORMED),
    (b"*00\n", proto.MALFORMED),
    (frame_oracle("XYZ"), proto.UNKNOWN_VERB),
    (frame_oracle("MOV F"), proto.MALFORMED),
    (frame_oracle("MOV F 256"), proto.OUT_OF_RANGE),
    (frame_oracle("MOV U 10"), proto.OUT_OF_RANGE),
    (frame_oracle("MOV F 010"), proto.MALFORMED),
    (frame_oracle("MOV F +10"), proto.MALFORMED),
    (frame_oracle("MOV  F 10"), proto.MALFORMED),
    (frame_oracle("ARM 0 -0 0"), proto.MALFORMED),
    (frame_oracle("ARM 0 0 40000"), proto.OUT_OF_RANGE),
    (frame_oracle("GRP X"), proto.OUT_OF_RANGE),
    (frame_oracle("STP 1"), proto.MALFORMED),
    (frame_oracle("M" * 70), proto.MALFORMED),
])
def test_decode_errors(line, code):
    with pytest.raises(proto.ProtocolError) as e:
        proto.decode(line)
    assert e.value.code == code


@pytest.mark.parametrize("build", [
    lambda: proto.Move("F", 256), lambda: proto.Move("X", 1), lambda: proto.Move("F", 1.0),
    lambda: proto.Move("F", True), lambda: proto.ArmTo(0, 0, 40000), lambda: proto.Grip("Q"),
    lambda: proto.Err(0), lambda: proto.Err(100),
])
def test_invalid_commands_rejected(build):
    with pytest.raises(proto.ProtocolError):
        build()


def test_encode_rejects_non_command():
    with pytest.raises(TypeError):
        proto.encode("STP")


def test_arm_to_cm_conversion():
    a = proto.ArmTo.from_cm(-12.04, 30.06, 6.0)
    assert a == proto.ArmTo(-120, 301, 60)
    assert a.to_cm() == (-12.0, 30.1, 6.0)


@given(commands, st.integers(0, 7), st.data())
def test_single_bit_flip_detected(cmd, bit, data):
    line = bytearray(proto.encode(cmd))
    i = data.draw(st.integers(0, len(line) - 1))
    line[i] ^= 1 << bit
    with pytest.raises(proto.ProtocolError):
        proto.decode(bytes(line))


@given(st.binary(max_size=100))
def test_decode_arbitrary_bytes_only_protocol_errors(data):
    try:
        proto.decode(data)
    except proto.ProtocolError as e:
        assert 1 <= e.code <= 5


@given(st.lists(commands, min_size=1, max_size=20), st.data())
def test_splitter_chunking_invariance(cmds, data):
    stream = b"".join(proto.encode(c) for c in cmds)
    cuts = sorted(data.draw(st.lists(st.integers(0, len(stream)), max_size=20)))
    sp = proto.FrameSplitter()
    lines = []
    prev = 0
    for c in cuts + [len(stream)]:
        lines += sp.feed(stream[prev:c])
        prev = c
    assert [proto.decode(x) for x in lines] == cmds
    assert sp.pending == b""


def test_splitter_overflow_reports_and_resyncs():
    sp = proto.FrameSplitter()
    out = sp.feed(b"X" * 100 + b"\n" + proto.encode(proto.Home()))
    assert out == [proto.Err(proto.MALFORMED), proto.encode(proto.Home())]


def test_loopback_chunks_and_corruption():
    rng = np.random.default_rng(4)
    pipe = proto.LoopbackPipe(rng, max_chunk=3)
    pipe.write(b"hello world\n")
    chunks = pipe.read()
    assert b"".join(chunks) == b"hello world\n"
    assert all(1 <= len(c) <= 3 for c in chunks)
    assert pipe.read() == []
    noisy = proto.LoopbackPipe(rng, corrupt_prob=1.0)
    noisy.write(b"\x00" * 16)
    out = b"".join(noisy.read())
    assert all(bin(b).count("1") == 1 for b in out)
    with pytest.raises(ValueError):
        proto.LoopbackPipe(max_chunk=4)
