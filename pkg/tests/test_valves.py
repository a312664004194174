import math
import socket
import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pneuhand import modbus
from pneuhand.valves import (
    ModbusProtocolError,
    ValveClient,
    ValveDynamics,
    ValveServer,
    ValveTerminal,
    ValveTransportError,
    clamp_pressure,
    serve_valves,
    step_dynamics,
)


@pytest.fixture
def manual_server():
    server = ValveServer(port=0, tick_hz=None)
    server.start()
    yield server
    server.stop()


@pytest.fixture
def client(manual_server):
    c = ValveClient("127.0.0.1", manual_server.port)
    yield c
    c.close()


class TestFraming:
    def test_round_trip(self):
        frame = modbus.encode_frame(7, 1, b"\x03\x00\x00\x00\x10")
        consumed, tid, unit, pdu = modbus.decode_frame(frame)
        assert (consumed, tid, unit) == (len(frame), 7, 1)
        assert pdu == b"\x03\x00\x00\x00\x10"

    def test_incomplete_returns_none(self):
        frame = modbus.encode_frame(7, 1, b"\x03\x00\x00\x00\x10")
        assert modbus.decode_frame(frame[:-1]) is None
        assert modbus.decode_frame(b"") is None

    def test_bad_protocol_id_raises(self):
        bad = struct.pack(">HHHB", 1, 5, 6, 1) + b"\x03\x00\x00\x00\x10"
        with pytest.raises(modbus.FrameError):
            modbus.decode_frame(bad)

    def test_header_length_matches_pdu(self):
        pdu = b"\x03\x02\x00\x64"
        frame = modbus.encode_frame(1, 1, pdu)
        _, _, length, _ = modbus.MBAP.unpack_from(frame)
        assert length == len(pdu) + 1


class TestTerminalPdu:
    def test_write_single_then_read_holding(self):
        t = ValveTerminal()
        t.apply_pdu(modbus.write_single_pdu(3, 400))
        resp = t.apply_pdu(modbus.read_request_pdu(modbus.READ_HOLDING, 3, 1))
        assert struct.unpack(">BBH", resp) == (0x03, 2, 400)

    def test_write_clamps_at_hardware_ceiling(self):
        t = ValveTerminal()
        resp = t.apply_pdu(modbus.write_single_pdu(3, 3000))
        assert struct.unpack(">BHH", resp) == (0x06, 3, 2500)
        resp = t.apply_pdu(modbus.read_request_pdu(modbus.READ_HOLDING, 3, 1))
        assert struct.unpack(">BBH", resp)[2] == 2500

    def test_read_past_last_register_is_illegal_address(self):
        t = ValveTerminal()
        resp = t.apply_pdu(modbus.read_request_pdu(modbus.READ_HOLDING, 16, 1))
        assert resp == bytes([0x83, modbus.EXC_ILLEGAL_ADDRESS])

    def test_unknown_function_is_illegal_function(self):
        t = ValveTerminal()
        resp = t.apply_pdu(b"\x01\x00\x00\x00\x01")
        assert resp == bytes([0x81, modbus.EXC_ILLEGAL_FUNCTION])

    def test_zero_count_is_illegal_value(self):
        t = ValveTerminal()
        resp = t.apply_pdu(modbus.read_request_pdu(modbus.READ_HOLDING, 0, 0))
        assert resp == bytes([0x83, modbus.EXC_ILLEGAL_VALUE])

    def test_truncated_pdu_is_illegal_value(self):
        t = ValveTerminal()
        resp = t.apply_pdu(b"\x10\x00\x00\x00\x02\x04\x00")
        assert resp == bytes([0x90, modbus.EXC_ILLEGAL_VALUE])

    def test_write_multiple_bad_byte_count_is_illegal_value(self):
        t = ValveTerminal()
        pdu = struct.pack(">BHHB", 0x10, 0, 2, 3) + b"\x00\x01\x00"
        resp = t.apply_pdu(pdu)
        assert resp == bytes([0x90, modbus.EXC_ILLEGAL_VALUE])

    def test_write_multiple_past_end_is_illegal_address(self):
        t = ValveTerminal()
        resp = t.apply_pdu(modbus.write_multiple_pdu(10, [100] * 7))
        assert resp == bytes([0x90, modbus.EXC_ILLEGAL_ADDRESS])

    @given(
        st.lists(
            st.tuples(st.integers(0, 15), st.integers(0, 5000)),
            min_size=1,
            max_size=200,
        )
    )
    @settings(max_examples=50)
    def test_holding_registers_are_bit_exact(self, writes):
        t = ValveTerminal()
        model = [0] * 16
        for addr, value in writes:
            t.apply_pdu(modbus.write_single_pdu(addr, value))
            model[addr] = clamp_pressure(value)
        resp = t.apply_pdu(modbus.read_request_pdu(modbus.READ_HOLDING, 0, 16))
        assert list(struct.unpack_from(">16H", resp, 2)) == model


class TestDynamics:
    def test_equilibrium_is_fixed_point(self):
        state = ValveDynamics.at_rest()
        out = step_dynamics(state, 0.5)
        assert np.all(out.actual_mbar == 0)

    def test_rise_matches_closed_form(self):
        state = ValveDynamics(np.full(16, 400.0), np.zeros(16), tau_s=0.075)
        out = step_dynamics(state, 0.075)
        assert out.actual_mbar[0] == pytest.approx(252.85, abs=0.01)
        assert out.actual_mbar[0] == pytest.approx(400 * (1 - math.exp(-1)), rel=1e-9)

    def test_decay_beats_paper_deflation_bound(self):
        # 0.3 s of venting leaves e^-4 = 1.83% of the charge
        state = ValveDynamics(np.zeros(16), np.full(16, 400.0), tau_s=0.075)
        out = step_dynamics(state, 0.3)
        assert out.actual_mbar[0] == pytest.approx(7.33, abs=0.01)
        assert out.actual_mbar[0] < 0.02 * 400

    @given(
        st.floats(0, 2500),
        st.floats(0, 2500),
        st.floats(0.001, 2.0),
        st.floats(0.001, 1.0),
    )
    def test_never_overshoots(self, commanded, actual, dt, tau):
        state = ValveDynamics(np.full(16, commanded), np.full(16, actual), tau)
        out = step_dynamics(state, dt)
        lo, hi = min(actual, commanded), max(actual, commanded)
        assert lo - 1e-9 <= out.actual_mbar[0] <= hi + 1e-9

    @given(st.floats(1, 2400), st.floats(0.01, 1.0), st.floats(0.01, 0.5))
    def test_composition_consistency(self, commanded, dt, tau):
        state = ValveDynamics(np.full(16, commanded), np.zeros(16), tau)
        twice = step_dynamics(step_dynamics(state, dt), dt)
        once = step_dynamics(state, 2 * dt)
        assert twice.actual_mbar[0] == pytest.approx(once.actual_mbar[0], rel=1e-9)


class TestServerWire:
    def test_write_read_round_trip(self, client):
        client.write_single(3, 400)
        assert client.read_commanded(3, 1) == [400]

    def test_clamped_write_over_wire(self, client):
        assert client.write_single(3, 3000) == 2500
        assert client.read_commanded(3, 1) == [2500]

    def test_out_of_range_read_raises_protocol_error(self, client):
        with pytest.raises(ModbusProtocolError) as exc:
            client.read_commanded(16, 1)
        assert exc.value.code == modbus.EXC_ILLEGAL_ADDRESS

    def test_fresh_server_actuals_are_zero(self, client):
        assert client.read_actual() == [0] * 16

    def test_write_pressures_rounds_to_nearest(self, client):
        vec = np.zeros(16)
        vec[1] = 330.9
        client.write_pressures(vec)
        assert client.read_commanded(1, 1) == [331]

    def test_actuals_converge_after_manual_settling(self, manual_server, client):
        client.write_single(0, 400)
        manual_server.advance(20 * 0.075)
        assert client.read_actual(0, 1)[0] == pytest.approx(400, abs=1)

    def test_clamped_write_settles_at_ceiling(self, manual_server, client):
        client.write_single(5, 3000)
        manual_server.advance(2.0)
        assert client.read_actual(5, 1)[0] == pytest.approx(2500, abs=1)

    def test_connection_refused_is_transport_error(self):
        with pytest.raises(ValveTransportError, match="reconnect"):
            ValveClient("127.0.0.1", 1)  # nothing listens there

    def test_malformed_frame_closes_connection(self, manual_server):
        with socket.create_connection(("127.0.0.1", manual_server.port), timeout=2) as raw:
            raw.sendall(struct.pack(">HHHB", 1, 9, 6, 1) + b"\x03\x00\x00\x00\x01")
            assert raw.recv(1024) == b""

    def test_response_mbap_length_matches_pdu(self, manual_server):
        # frame-level harness: every response header length == len(pdu) + 1
        requests = [
            modbus.read_request_pdu(modbus.READ_HOLDING, 0, 16),
            modbus.read_request_pdu(modbus.READ_INPUT, 2, 5),
            modbus.write_single_pdu(0, 123),
            modbus.write_multiple_pdu(0, [1, 2, 3]),
            modbus.read_request_pdu(modbus.READ_HOLDING, 99, 1),
            b"\x2b\x00",
        ]
        with socket.create_connection(("127.0.0.1", manual_server.port), timeout=2) as raw:
            for tid, pdu in enumerate(requests):
                raw.sendall(modbus.encode_frame(tid, 1, pdu))
                buf = b""
                while modbus.decode_frame(buf) is None:
                    buf += raw.recv(4096)
                consumed, rtid, _, rpdu = modbus.decode_frame(buf)
                _, _, length, _ = modbus.MBAP.unpack_from(buf)
                assert rtid == tid
                assert length == len(rpdu) + 1
                assert consumed == len(buf)

    def test_randomized_wire_sequences_bit_exact(self, client):
        rng = np.random.default_rng(42)
        model = [0] * 16
        for _ in range(1000):
            op = rng.integers(0, 3)
            if op == 0:
                addr = int(rng.integers(0, 16))
                value = int(rng.integers(0, 5001))
                client.write_single(addr, value)
                model[addr] = clamp_pressure(value)
            elif op == 1:
                start = int(rng.integers(0, 16))
                count = int(rng.integers(1, 17 - start))
                values = rng.integers(0, 5001, size=count)
                vec = list(model)
                for i, v in enumerate(values):
                    vec[start + i] = clamp_pressure(int(v))
                full = np.array(vec, dtype=float)
                client.write_pressures(full)
                model = vec
            else:
                start = int(rng.integers(0, 16))
                count = int(rng.integers(1, 17 - start))
                assert client.read_commanded(start, count) == model[start : start + count]
        assert client.read_commanded() == model

    def test_serve_valves_helper_and_context(self):
        with serve_valves(port=0, tick_hz=None) as server:
            with ValveClient("127.0.0.1", server.port) as c:
                c.write_single(0, 10)
                assert c.read_commanded(0, 1) == [10]
