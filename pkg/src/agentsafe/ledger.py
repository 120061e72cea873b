"""Tamper-evident, signed, append-only provenance ledger.

Chain construction, per record:

    payload_hash = sha256(canonical payload text)
    record_hash  = sha256("{seq}|{ts}|{session_id}|{kind}|{payload_hash}|{prev_hash}")
    sig          = Ed25519(private_key, raw record_hash bytes)

seq starts at 0 and increases by exactly 1; the genesis prev_hash is 64
zeros. Persistence is one JSON-Lines file: a header line carrying the
public key, then one canonical-JSON record per line, flushed before the
append returns. Appends are serialized through one lock, so the chain
order is the order callers observed.
"""

from __future__ import annotations

import functools
import io
import json
import threading
from dataclasses import dataclass
from typing import Any, Iterable

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric import ed25519

from . import jsoncanon
from .clock import Clock, SystemClock, rfc3339_ms
from .errors import CanonicalizationError, SealedSession, ValidationError

GENESIS_HASH = "0" * 64

RECORD_KINDS = frozenset(
    {
        "session-open",
        "goal",
        "plan",
        "plan-step",
        "tool-call-request",
        "decision",
        "escalation-opened",
        "escalation-decided",
        "containment",
        "guardian-alert",
        "drift-alert",
        "observation",
        "reflection",
        "fallback",
        "quarantine",
        "session-close",
    }
)

_RECORD_FIELDS = ("seq", "ts", "session_id", "kind", "payload", "payload_hash", "prev_hash", "record_hash", "sig")


@dataclass(frozen=True)
class ProvenanceRecord:
    seq: int
    ts: str
    session_id: str
    kind: str
    payload: str  # canonical JSON text
    payload_hash: str
    prev_hash: str
    record_hash: str
    sig: str

    def payload_obj(self) -> Any:
        return json.loads(self.payload)

    def to_line(self) -> str:
        return jsoncanon.dumps(
            {
                "seq": self.seq,
                "ts": self.ts,
                "session_id": self.session_id,
                "kind": self.kind,
                "payload": self.payload_obj(),
                "payload_hash": self.payload_hash,
                "prev_hash": self.prev_hash,
                "record_hash": self.record_hash,
                "sig": self.sig,
            }
        )


def record_preimage(seq: int, ts: str, session_id: str, kind: str, payload_hash: str, prev_hash: str) -> str:
    return f"{seq}|{ts}|{session_id}|{kind}|{payload_hash}|{prev_hash}"


class LedgerKey:
    """Single Ed25519 keypair per ledger; no rotation."""

    def __init__(self, private_key: ed25519.Ed25519PrivateKey):
        self._private = private_key
        self.public_hex = private_key.public_key().public_bytes_raw().hex()

    @classmethod
    def generate(cls, seed: bytes | None = None) -> "LedgerKey":
        if seed is None:
            return cls(ed25519.Ed25519PrivateKey.generate())
        if len(seed) != 32:
            raise ValueError("Ed25519 seed must be exactly 32 bytes")
        return cls(ed25519.Ed25519PrivateKey.from_private_bytes(seed))

    @classmethod
    def load(cls, path: str) -> "LedgerKey":
        with open(path, "r", encoding="utf-8") as fh:
            seed = bytes.fromhex(fh.read().strip())
        return cls.generate(seed)

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self._private.private_bytes_raw().hex() + "\n")

    def sign(self, record_hash: str) -> str:
        return self._private.sign(bytes.fromhex(record_hash)).hex()


@functools.lru_cache(maxsize=1 << 17)
def _signature_valid(pubkey_hex: str, record_hash: str, sig_hex: str) -> bool:
    # Pure function of its inputs; memoized because verification workloads
    # (tamper sweeps, repeated audits) re-check mostly identical streams.
    try:
        public = ed25519.Ed25519PublicKey.from_public_bytes(bytes.fromhex(pubkey_hex))
        public.verify(bytes.fromhex(sig_hex), bytes.fromhex(record_hash))
        return True
    except (InvalidSignature, ValueError):
        return False


class Ledger:
    """Single-writer append-only ledger, optionally file-backed."""

    def __init__(
        self,
        key: LedgerKey,
        ledger_id: str = "ledger",
        path: str | None = None,
        clock: Clock | None = None,
    ):
        self.key = key
        self.ledger_id = ledger_id
        self.clock = clock or SystemClock()
        self._records: list[ProvenanceRecord] = []
        self._sealed: set[str] = set()
        self._lock = threading.Lock()
        self._fh: io.TextIOWrapper | None = None
        if path is not None:
            self._fh = open(path, "a", encoding="utf-8")
            if self._fh.tell() == 0:
                self._fh.write(jsoncanon.dumps(self.header()) + "\n")
                self._fh.flush()

    def header(self) -> dict:
        return {"ledger_id": self.ledger_id, "pubkey": self.key.public_hex, "alg": "ed25519", "hash": "sha256"}

    def __len__(self) -> int:
        return len(self._records)

    def append(self, kind: str, session_id: str, payload: Any) -> ProvenanceRecord:
        """Append one record; persisted and flushed before returning."""
        if kind not in RECORD_KINDS:
            raise ValidationError(f"unknown record kind {kind!r}", offender=kind)
        if isinstance(payload, str):
            try:
                obj = json.loads(payload)
            except json.JSONDecodeError as exc:
                raise CanonicalizationError(f"payload is not JSON: {exc}") from exc
            if jsoncanon.dumps(obj) != payload:
                raise CanonicalizationError("payload text is not in canonical form")
            payload_text = payload
        else:
            payload_text = jsoncanon.dumps(payload)
        with self._lock:
            if session_id in self._sealed:
                raise SealedSession(f"session {session_id!r} ledger stream is sealed")
            seq = len(self._records)
            ts = rfc3339_ms(self.clock.now_ms())
            prev_hash = self._records[-1].record_hash if self._records else GENESIS_HASH
            payload_hash = jsoncanon.sha256_hex(payload_text)
            record_hash = jsoncanon.sha256_hex(record_preimage(seq, ts, session_id, kind, payload_hash, prev_hash))
            record = ProvenanceRecord(
                seq=seq,
                ts=ts,
                session_id=session_id,
                kind=kind,
                payload=payload_text,
                payload_hash=payload_hash,
                prev_hash=prev_hash,
                record_hash=record_hash,
                sig=self.key.sign(record_hash),
            )
            self._records.append(record)
            if self._fh is not None:
                self._fh.write(record.to_line() + "\n")
                self._fh.flush()
            return record

    def seal_session(self, session_id: str) -> None:
        with self._lock:
            self._sealed.add(session_id)

    def is_sealed(self, session_id: str) -> bool:
        return session_id in self._sealed

    def records(self) -> list[ProvenanceRecord]:
        """Consistent snapshot of all completed appends."""
        with self._lock:
            return list(self._records)

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


# --- verification -------------------------------------------------------


@dataclass(frozen=True)
class VerificationReport:
    valid: bool
    first_bad_seq: int | None = None
    failure: str | None = None  # hash-mismatch | broken-link | bad-signature | seq-gap
    records_checked: int = 0

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "first_bad_seq": self.first_bad_seq,
            "failure": self.failure,
            "records_checked": self.records_checked,
        }


def load_ledger_file(path: str) -> tuple[dict, list[dict]]:
    """Read header + raw record objects from a ledger file."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line for line in fh.read().split("\n") if line]
    if not lines:
        raise ValidationError("ledger file is empty (missing header)")
    header = json.loads(lines[0])
    for key in ("ledger_id", "pubkey", "alg", "hash"):
        if key not in header:
            raise ValidationError(f"ledger header missing {key!r}")
    return header, [json.loads(line) for line in lines[1:]]


def _claimed_seq(raw: dict, fallback: int) -> int:
    seq = raw.get("seq")
    return seq if isinstance(seq, int) else fallback


def verify_records(pubkey_hex: str, raw_records: Iterable[dict]) -> VerificationReport:
    """Recompute every hash, link, signature, and sequence check.

    Stops at the first failing record; ``first_bad_seq`` is that record's
    claimed sequence number.
    """
    expected_seq = 0
    prev_hash = GENESIS_HASH
    checked = 0
    for raw in raw_records:
        claimed = _claimed_seq(raw, expected_seq)

        def fail(kind: str) -> VerificationReport:
            return VerificationReport(valid=False, first_bad_seq=claimed, failure=kind, records_checked=checked)

        if not isinstance(raw, dict) or any(k not in raw for k in _RECORD_FIELDS):
            return fail("hash-mismatch")
        if not isinstance(raw.get("seq"), int) or raw["seq"] != expected_seq:
            return fail("seq-gap")
        try:
            payload_text = jsoncanon.dumps(raw["payload"])
        except CanonicalizationError:
            return fail("hash-mismatch")
        if jsoncanon.sha256_hex(payload_text) != raw["payload_hash"]:
            return fail("hash-mismatch")
        preimage = record_preimage(
            raw["seq"], raw["ts"], raw["session_id"], raw["kind"], raw["payload_hash"], raw["prev_hash"]
        )
        if jsoncanon.sha256_hex(preimage) != raw["record_hash"]:
            return fail("hash-mismatch")
        if raw["prev_hash"] != prev_hash:
            return fail("broken-link")
        if not _signature_valid(pubkey_hex, raw["record_hash"], raw["sig"]):
            return fail("bad-signature")
        prev_hash = raw["record_hash"]
        expected_seq += 1
        checked += 1
    return VerificationReport(valid=True, records_checked=checked)


def verify_chain(source: "str | Ledger | tuple[dict, list[dict]]") -> VerificationReport:
    """Verify a ledger given a file path, a live Ledger, or (header, records)."""
    if isinstance(source, Ledger):
        raw = [json.loads(r.to_line()) for r in source.records()]
        return verify_records(source.key.public_hex, raw)
    if isinstance(source, tuple):
        header, raw = source
        return verify_records(header["pubkey"], raw)
    header, raw = load_ledger_file(source)
    return verify_records(header["pubkey"], raw)


def records_from_file(path: str) -> list[ProvenanceRecord]:
    """Parse a ledger file into typed records (no verification)."""
    _, raw = load_ledger_file(path)
    return [
        ProvenanceRecord(
            seq=r["seq"],
            ts=r["ts"],
            session_id=r["session_id"],
            kind=r["kind"],
            payload=jsoncanon.dumps(r["payload"]),
            payload_hash=r["payload_hash"],
            prev_hash=r["prev_hash"],
            record_hash=r["record_hash"],
            sig=r["sig"],
        )
        for r in raw
    ]
