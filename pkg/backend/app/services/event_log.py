"""
Append-only event log plus periodic snapshot of the slice inventory.

Log records are framed as [u32 length][u32 CRC-32][JSON payload], little endian.
A record whose frame or payload was cut short by a crash (torn tail) is dropped
and the file truncated to the last complete record; a complete record that fails
its checksum or does not parse halts recovery with CorruptLog.

After a snapshot is written the log is emptied. Recovery loads the snapshot and
replays the records whose sequence number is larger than the snapshot's.
"""

import json
import logging
import os
import struct
import zlib
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field

from app.core.errors import CorruptLog
from app.models.catalog import NfDescriptor
from app.models.requests import SliceEvent
from app.models.slice import SliceInstance

logger = logging.getLogger(__name__)

HEADER = struct.Struct("<II")
LOG_NAME = "events.log"
SNAPSHOT_NAME = "snapshot.json"


class RecoveredState(BaseModel):
    """What the orchestrator needs to rebuild itself"""
    seq: int = 0
    instances: Dict[str, SliceInstance] = Field(default_factory=dict)
    catalog: Optional[List[NfDescriptor]] = None
    events: List[SliceEvent] = Field(default_factory=list)


def encode_record(record: Dict[str, Any]) -> bytes:
    payload = json.dumps(record, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return HEADER.pack(len(payload), zlib.crc32(payload)) + payload


def decode_records(data: bytes) -> Tuple[List[Dict[str, Any]], int]:
    """
    Parse framed records.

    Returns:
        (records, length of the complete prefix in bytes)

    Raises:
        CorruptLog: a complete record fails its checksum or is not JSON
    """
    records = []
    offset = 0
    index = 0
    while offset < len(data):
        if offset + HEADER.size > len(data):
            break
        length, crc = HEADER.unpack_from(data, offset)
        start = offset + HEADER.size
        end = start + length
        if end > len(data):
            break
        payload = data[start:end]
        if zlib.crc32(payload) != crc:
            raise CorruptLog(index, "checksum mismatch")
        try:
            records.append(json.loads(payload.decode("utf-8")))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise CorruptLog(index, f"payload is not JSON ({e})")
        offset = end
        index += 1
    return records, offset


class EventLog:
    """
    Durable store of instance upserts, catalog edits and slice events.

    Args:
        data_dir: directory holding the log and snapshot files
        snapshot_interval: records appended between two snapshots
    """

    def __init__(self, data_dir: Path, snapshot_interval: int = 50):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.log_path = self.data_dir / LOG_NAME
        self.snapshot_path = self.data_dir / SNAPSHOT_NAME
        self.snapshot_interval = max(1, snapshot_interval)
        self.seq = 0
        self._since_snapshot = 0

    # ------------------------------------------------------------------
    # Writing
    # ------------------------------------------------------------------

    def append(self, record_type: str, body: Dict[str, Any]) -> int:
        """Write one record durably; returns its sequence number"""
        self.seq += 1
        record = {"seq": self.seq, "type": record_type, **body}
        with open(self.log_path, "ab") as f:
            f.write(encode_record(record))
            f.flush()
            os.fsync(f.fileno())
        self._since_snapshot += 1
        return self.seq

    def append_instance(self, instance: SliceInstance) -> int:
        return self.append("instance", {"instance": instance.model_dump(mode="json")})

    def append_event(self, event: SliceEvent) -> int:
        return self.append("event", {"event": event.model_dump(mode="json")})

    def append_catalog(self, catalog: List[NfDescriptor]) -> int:
        return self.append("catalog", {"catalog": [nf.model_dump(mode="json") for nf in catalog]})

    def snapshot_due(self) -> bool:
        return self._since_snapshot >= self.snapshot_interval

    def write_snapshot(self, state: RecoveredState) -> None:
        """Atomically replace the snapshot, then empty the log"""
        state = state.model_copy(update={"seq": self.seq})
        tmp = self.snapshot_path.with_suffix(".json.tmp")
        with open(tmp, "w", encoding="utf-8") as f:
            f.write(state.model_dump_json())
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, self.snapshot_path)
        # records up to state.seq are covered by the snapshot
        with open(self.log_path, "wb") as f:
            f.flush()
            os.fsync(f.fileno())
        self._since_snapshot = 0
        logger.info("snapshot written seq=%d instances=%d", self.seq, len(state.instances))

    # ------------------------------------------------------------------
    # Recovery
    # ------------------------------------------------------------------

    def recover(self, event_history: int = 1000) -> RecoveredState:
        """
        Snapshot plus replay of newer log records.

        Raises:
            CorruptLog: with the index of the offending record
        """
        state = RecoveredState()
        if self.snapshot_path.exists():
            try:
                state = RecoveredState.model_validate_json(self.snapshot_path.read_text(encoding="utf-8"))
            except ValueError as e:
                raise CorruptLog(-1, f"snapshot unreadable ({e})")

        data = self.log_path.read_bytes() if self.log_path.exists() else b""
        records, complete = decode_records(data)
        if complete < len(data):
            logger.warning("truncating torn log tail: %d trailing bytes dropped", len(data) - complete)
            with open(self.log_path, "r+b") as f:
                f.truncate(complete)
                f.flush()
                os.fsync(f.fileno())

        last_seq = state.seq
        for index, record in enumerate(records):
            seq = record.get("seq", 0)
            if seq <= state.seq:
                continue
            try:
                self._apply(state, record)
            except (KeyError, ValueError) as e:
                raise CorruptLog(index, f"record does not validate ({e})")
            last_seq = max(last_seq, seq)

        state.seq = last_seq
        if len(state.events) > event_history:
            state.events = state.events[-event_history:]
        self.seq = last_seq
        self._since_snapshot = len(records)
        logger.info(
            "recovered seq=%d instances=%d replayed=%d", state.seq, len(state.instances), len(records)
        )
        return state

    @staticmethod
    def _apply(state: RecoveredState, record: Dict[str, Any]) -> None:
        kind = record.get("type")
        if kind == "instance":
            instance = SliceInstance.model_validate(record["instance"])
            state.instances[instance.slice_id] = instance
        elif kind == "event":
            state.events.append(SliceEvent.model_validate(record["event"]))
        elif kind == "catalog":
            state.catalog = [NfDescriptor.model_validate(nf) for nf in record["catalog"]]
        else:
            raise ValueError(f"unknown record type {kind!r}")
