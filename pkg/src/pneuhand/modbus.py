"""Minimal Modbus/TCP framing: MBAP header codec, PDU builders, exceptions.

Only what the valve terminal speaks: function codes 0x03 (read holding),
0x04 (read input), 0x06 (write single), 0x10 (write multiple). Register
values are big-endian unsigned 16-bit per Modbus convention.
"""
from __future__ import annotations

import struct

MBAP = struct.Struct(">HHHB")  # transaction id, protocol id, length, unit id
MBAP_SIZE = MBAP.size
MAX_PDU = 253

READ_HOLDING = 0x03
READ_INPUT = 0x04
WRITE_SINGLE = 0x06
WRITE_MULTIPLE = 0x10

EXC_ILLEGAL_FUNCTION = 0x01
EXC_ILLEGAL_ADDRESS = 0x02
EXC_ILLEGAL_VALUE = 0x03


class FrameError(Exception):
    """Stream-level framing failure; the connection cannot be resynced."""


def encode_frame(transaction_id: int, unit_id: int, pdu: bytes) -> bytes:
    if not 0 < len(pdu) <= MAX_PDU:
        raise FrameError(f"PDU length {len(pdu)} outside 1..{MAX_PDU}")
    return MBAP.pack(transaction_id & 0xFFFF, 0, len(pdu) + 1, unit_id & 0xFF) + pdu


def decode_frame(buf: bytes) -> tuple[int, int, int, bytes] | None:
    """Decode one frame from the front of buf.

    Returns (consumed, transaction_id, unit_id, pdu), or None if the
    buffer does not yet hold a complete frame. Raises FrameError when the
    header is unusable (wrong protocol id or impossible length).
    """
    if len(buf) < MBAP_SIZE:
        return None
    transaction_id, protocol_id, length, unit_id = MBAP.unpack_from(buf)
    if protocol_id != 0:
        raise FrameError(f"protocol id {protocol_id} is not Modbus (0)")
    if not 2 <= length <= MAX_PDU + 1:
        raise FrameError(f"MBAP length {length} outside 2..{MAX_PDU + 1}")
    total = MBAP_SIZE - 1 + length
    if len(buf) < total:
        return None
    pdu = bytes(buf[MBAP_SIZE:total])
    return total, transaction_id, unit_id, pdu


def exception_pdu(function: int, code: int) -> bytes:
    return bytes([function | 0x80, code])


def is_exception(pdu: bytes) -> bool:
    return len(pdu) >= 1 and bool(pdu[0] & 0x80)


def read_request_pdu(function: int, address: int, count: int) -> bytes:
    return struct.pack(">BHH", function, address, count)


def write_single_pdu(address: int, value: int) -> bytes:
    return struct.pack(">BHH", WRITE_SINGLE, address, value)


def write_multiple_pdu(address: int, values: list[int]) -> bytes:
    payload = struct.pack(">BHHB", WRITE_MULTIPLE, address, len(values), 2 * len(values))
    return payload + struct.pack(f">{len(values)}H", *values)
