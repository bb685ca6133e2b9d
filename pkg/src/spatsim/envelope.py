"""Parsing of raw RSU capture lines (newline-delimited JSON envelopes).

Each line wraps one over-the-air message: transport metadata under
"msg-wave"/"dot3" plus the hex-encoded UPER payload. All operations are
pure; batch decoding parallelizes per line with order restored by seqno.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import NamedTuple

from .codec import BSM_MESSAGE_ID, MAP_MESSAGE_ID, SPAT_MESSAGE_ID
from .errors import (
    BadHex,
    MalformedRecord,
    MissingPayload,
    PayloadTooShort,
    UnsupportedEncoding,
)

_HEX_DIGITS = set("0123456789abcdefABCDEF")


@dataclass(frozen=True)
class SecurityFlags:
    cert: bool = False
    crypt: bool = False
    prof: bool = False
    sign: bool = False


@dataclass(frozen=True)
class RawEnvelope:
    channel: str
    dest: str
    priority: int
    psid: str
    encoding: str
    payload: bytes
    seqno: int
    pkgno: int
    security: SecurityFlags
    # elements in the same record that were not the chosen UPER payload
    ignored_elements: int = 0


class MessageFamily(enum.Enum):
    SPAT = "spat"
    MAP = "map"
    BSM = "bsm"
    UNKNOWN = "unknown"


class MessageKind(NamedTuple):
    family: MessageFamily
    msg_id: int

    @property
    def is_spat(self) -> bool:
        return self.family is MessageFamily.SPAT


_FAMILY_BY_ID = {
    SPAT_MESSAGE_ID: MessageFamily.SPAT,
    MAP_MESSAGE_ID: MessageFamily.MAP,
    BSM_MESSAGE_ID: MessageFamily.BSM,
}


def _decode_hex_payload(text: str) -> bytes:
    if not text:
        raise MissingPayload("payload string is empty")
    if len(text) % 2 or not set(text) <= _HEX_DIGITS:
        raise BadHex(f"payload is not a hex string of even length: {text[:32]!r}")
    if len(text) < 4:
        raise BadHex("payload shorter than 2 bytes")
    return bytes.fromhex(text)


def _require_int(value, what: str, lo: int = 0, hi: int | None = None) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise MalformedRecord(f"{what} is not an integer: {value!r}")
    if value < lo or (hi is not None and value > hi):
        raise MalformedRecord(f"{what} {value} out of range")
    return value


def parse_envelope(record: str) -> RawEnvelope:
    """Parse one capture line into a RawEnvelope.

    The first "msg-wave" element whose encoding is UPER wins; other
    elements are counted in ignored_elements. Unknown keys are ignored for
    forward compatibility. Missing priority defaults to 0, missing
    security flags to false.
    """
    try:
        obj = json.loads(record)
    except (json.JSONDecodeError, TypeError) as exc:
        raise MalformedRecord(f"line is not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise MalformedRecord("record is not a JSON object")
    elements = obj.get("msg-wave")
    if not isinstance(elements, list) or not elements:
        raise MalformedRecord('record has no "msg-wave" element list')

    chosen = None
    ignored = 0
    encodings_seen = []
    for el in elements:
        if not isinstance(el, dict):
            ignored += 1
            continue
        encoding = el.get("encoding")
        if chosen is None and encoding == "UPER":
            chosen = el
        else:
            encodings_seen.append(encoding)
            ignored += 1
    if chosen is None:
        raise UnsupportedEncoding(
            f"no UPER element in record (saw encodings {encodings_seen!r})"
        )

    if "payload" not in chosen:
        raise MissingPayload('chosen element has no "payload" key')
    payload_text = chosen["payload"]
    if not isinstance(payload_text, str):
        raise MalformedRecord("payload is not a string")
    payload = _decode_hex_payload(payload_text)

    dot3 = chosen.get("dot3", {})
    if not isinstance(dot3, dict):
        raise MalformedRecord('"dot3" is not an object')
    dest = dot3.get("dest", "000000000000")
    if not isinstance(dest, str) or len(dest) != 12 or not set(dest) <= _HEX_DIGITS:
        raise MalformedRecord(f"dest is not 12 hex characters: {dest!r}")
    sec = dot3.get("security", {})
    if not isinstance(sec, dict):
        raise MalformedRecord('"security" is not an object')

    return RawEnvelope(
        channel=str(dot3.get("chan", "")),
        dest=dest,
        priority=_require_int(dot3.get("priority", 0), "priority", 0, 7),
        psid=str(dot3.get("psid", "")),
        encoding="UPER",
        payload=payload,
        seqno=_require_int(obj.get("seqno", 0), "seqno"),
        pkgno=_require_int(obj.get("pkgno", 0), "pkgno"),
        security=SecurityFlags(
            cert=bool(sec.get("cert", False)),
            crypt=bool(sec.get("crypt", False)),
            prof=bool(sec.get("prof", False)),
            sign=bool(sec.get("sign", False)),
        ),
        ignored_elements=ignored,
    )


def classify_payload(payload: bytes) -> MessageKind:
    """Classify by the frame identifier; never fails on garbage content."""
    if len(payload) < 2:
        raise PayloadTooShort(f"{len(payload)} bytes; need at least 2")
    msg_id = (payload[0] & 0x7F) << 8 | payload[1]
    return MessageKind(_FAMILY_BY_ID.get(msg_id, MessageFamily.UNKNOWN), msg_id)


def format_record(
    payload: bytes,
    *,
    channel: str = "SCH1",
    dest: str = "ffffffffffff",
    priority: int = 3,
    psid: str = "8002",
    seqno: int = 0,
    pkgno: int = 0,
    security: SecurityFlags | None = None,
) -> str:
    """Render one capture line in the production shape; inverse of parse_envelope."""
    sec = security or SecurityFlags(cert=True)
    record = {
        "msg-wave": [
            {
                "dot3": {
                    "chan": channel,
                    "dest": dest,
                    "ll": 3,
                    "priority": priority,
                    "psid": psid,
                    "security": {
                        "cert": sec.cert,
                        "crypt": sec.crypt,
                        "prof": sec.prof,
                        "sign": sec.sign,
                    },
                    "slot": "CONTINUOUS",
                    "xtension": 0,
                },
                "encoding": "UPER",
                "payload": payload.hex(),
            }
        ],
        "seqno": seqno,
        "pkgno": pkgno,
    }
    return json.dumps(record, separators=(",", ":"))
