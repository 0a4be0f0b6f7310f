"""Embedded document store with change feeds, CAS writes, and snapshots.

All persisted platform state (accounts, products, orders, payment intents,
vault entries) lives here as JSON-representable documents keyed by
``(collection, id)``.  Guarantees, all enforced under one process-wide lock:

* per-document revisions increase strictly, and survive deletes, so a watcher
  always sees events for one id in revision order;
* ``put(expected_revision=...)`` is a compare-and-swap: under N racing
  writers with the same expected revision exactly one wins;
* ``snapshot`` / ``restore`` round-trip the full logical state.

Persistence is optional: when constructed with a path (or ``STORE_PATH`` in
the environment) every write is appended as one NDJSON record
``{collection, id, revision, body, kind}`` and replayed on startup.  Revision
high-water marks for deleted ids are process-local after a compaction.
"""

from __future__ import annotations

import json
import os
import queue
import threading
import uuid
from dataclasses import dataclass
from typing import Any, Callable, Iterator, Optional

from .errors import NotFound, RevisionConflict, UnknownSnapshot

Key = tuple[str, str]


@dataclass(frozen=True)
class Document:
    collection: str
    id: str
    revision: int
    body: dict


@dataclass(frozen=True)
class ChangeEvent:
    collection: str
    id: str
    revision: int
    kind: str  # created | updated | deleted


_CLOSED = object()  # watcher sentinel


class Watcher:
    """A live stream of ChangeEvents for one collection.

    Iterate it, or pull with ``next_event(timeout)``.  The stream ends
    cleanly when the watcher (or the whole store) is closed.
    """

    def __init__(self, collection: str, on_close: Callable[["Watcher"], None]):
        self.collection = collection
        self._queue: queue.Queue = queue.Queue()
        self._on_close = on_close
        self._closed = False

    def _publish(self, event: ChangeEvent) -> None:
        if not self._closed:
            self._queue.put(event)

    def next_event(self, timeout: Optional[float] = None) -> Optional[ChangeEvent]:
        """Next event, or None if the stream closed / timed out."""
        try:
            item = self._queue.get(timeout=timeout)
        except queue.Empty:
            return None
        if item is _CLOSED:
            return None
        return item

    def __iter__(self) -> Iterator[ChangeEvent]:
        while True:
            event = self.next_event()
            if event is None:
                return
            yield event

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            self._queue.put(_CLOSED)
            self._on_close(self)


def _normalize_body(body: Any) -> dict:
    """Validate JSON-representability and return a detached copy."""
    if not isinstance(body, dict):
        raise TypeError("document body must be a mapping")
    try:
        return json.loads(json.dumps(body))
    except (TypeError, ValueError) as exc:
        raise TypeError(f"document body is not JSON-representable: {exc}") from None


def _detached(doc: Document) -> Document:
    """Copy a document so callers cannot mutate stored state in place."""
    return Document(doc.collection, doc.id, doc.revision, json.loads(json.dumps(doc.body)))


class DocumentStore:
    """In-process document store; safe for concurrent callers."""

    def __init__(self, path: Optional[str] = None):
        self._path = path if path is not None else os.environ.get("STORE_PATH")
        self._lock = threading.RLock()
        self._docs: dict[Key, Document] = {}
        self._marks: dict[Key, int] = {}  # revision high-water, survives delete
        self._watchers: dict[str, list[Watcher]] = {}
        self._snapshots: dict[str, tuple[dict[Key, Document], dict[Key, int]]] = {}
        self._log_file = None
        self.closed = False
        if self._path:
            self._replay(self._path)
            self._log_file = open(self._path, "a", encoding="utf-8")

    # -- persistence --------------------------------------------------------

    def _replay(self, path: str) -> None:
        if not os.path.exists(path):
            return
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                key = (rec["collection"], rec["id"])
                self._marks[key] = max(self._marks.get(key, 0), rec["revision"])
                if rec["kind"] == "deleted":
                    self._docs.pop(key, None)
                else:
                    self._docs[key] = Document(
                        rec["collection"], rec["id"], rec["revision"], rec["body"]
                    )

    def _append_record(self, doc_key: Key, revision: int, body: Optional[dict], kind: str) -> None:
        if self._log_file is None:
            return
        rec = {
            "collection": doc_key[0],
            "id": doc_key[1],
            "revision": revision,
            "body": body,
            "kind": kind,
        }
        self._log_file.write(json.dumps(rec, separators=(",", ":")) + "\n")
        self._log_file.flush()

    def _rewrite_log(self) -> None:
        if self._log_file is None:
            return
        self._log_file.close()
        with open(self._path, "w", encoding="utf-8") as fh:
            for doc in self._docs.values():
                rec = {
                    "collection": doc.collection,
                    "id": doc.id,
                    "revision": doc.revision,
                    "body": doc.body,
                    "kind": "updated",
                }
                fh.write(json.dumps(rec, separators=(",", ":")) + "\n")
        self._log_file = open(self._path, "a", encoding="utf-8")

    # -- core operations ------------------------------------------------------

    def put(
        self,
        collection: str,
        doc_id: str,
        body: dict,
        expected_revision: Optional[int] = None,
    ) -> Document:
        """Write a document; CAS when expected_revision is given.

        ``expected_revision=0`` asserts the document does not exist yet.
        Raises RevisionConflict on mismatch; nothing is written then.
        """
        body = _normalize_body(body)
        key = (collection, doc_id)
        with self._lock:
            current = self._docs.get(key)
            current_rev = current.revision if current else 0
            if expected_revision is not None and expected_revision != current_rev:
                raise RevisionConflict(
                    f"{collection}/{doc_id}: expected revision "
                    f"{expected_revision}, stored {current_rev}",
                    expected=expected_revision,
                    stored=current_rev,
                )
            revision = self._marks.get(key, 0) + 1
            doc = Document(collection, doc_id, revision, body)
            self._docs[key] = doc
            self._marks[key] = revision
            kind = "updated" if current else "created"
            self._append_record(key, revision, body, kind)
            self._emit(ChangeEvent(collection, doc_id, revision, kind))
            return doc

    def get(self, collection: str, doc_id: str) -> Document:
        with self._lock:
            doc = self._docs.get((collection, doc_id))
        if doc is None:
            raise NotFound(f"{collection}/{doc_id}")
        return _detached(doc)

    def exists(self, collection: str, doc_id: str) -> bool:
        with self._lock:
            return (collection, doc_id) in self._docs

    def delete(self, collection: str, doc_id: str, expected_revision: Optional[int] = None) -> None:
        key = (collection, doc_id)
        with self._lock:
            current = self._docs.get(key)
            if current is None:
                raise NotFound(f"{collection}/{doc_id}")
            if expected_revision is not None and expected_revision != current.revision:
                raise RevisionConflict(
                    f"{collection}/{doc_id}: expected revision "
                    f"{expected_revision}, stored {current.revision}",
                    expected=expected_revision,
                    stored=current.revision,
                )
            revision = self._marks[key] + 1
            del self._docs[key]
            self._marks[key] = revision
            self._append_record(key, revision, None, "deleted")
            self._emit(ChangeEvent(collection, doc_id, revision, "deleted"))

    def list(self, collection: str) -> list[Document]:
        """All documents of a collection, ordered by id."""
        with self._lock:
            docs = [d for (coll, _), d in self._docs.items() if coll == collection]
        return sorted((_detached(d) for d in docs), key=lambda d: d.id)

    def dump(self) -> list[Document]:
        """Every live document (for scans and invariant checks)."""
        with self._lock:
            docs = list(self._docs.values())
        return [_detached(d) for d in docs]

    # -- change feed ---------------------------------------------------------

    def watch(self, collection: str) -> Watcher:
        watcher = Watcher(collection, self._drop_watcher)
        with self._lock:
            self._watchers.setdefault(collection, []).append(watcher)
        return watcher

    def _drop_watcher(self, watcher: Watcher) -> None:
        with self._lock:
            peers = self._watchers.get(watcher.collection, [])
            if watcher in peers:
                peers.remove(watcher)

    def _emit(self, event: ChangeEvent) -> None:
        for watcher in self._watchers.get(event.collection, []):
            watcher._publish(event)

    # -- snapshots -------------------------------------------------------------

    def snapshot(self) -> str:
        with self._lock:
            handle = uuid.uuid4().hex
            self._snapshots[handle] = (dict(self._docs), dict(self._marks))
            return handle

    def restore(self, handle: str) -> None:
        with self._lock:
            if handle not in self._snapshots:
                raise UnknownSnapshot(handle)
            docs, marks = self._snapshots[handle]
            self._docs = dict(docs)
            self._marks = dict(marks)
            self._rewrite_log()

    # -- lifecycle ---------------------------------------------------------------

    def ping(self) -> bool:
        if self.closed:
            return False
        with self._lock:
            return True

    def close(self) -> None:
        with self._lock:
            if self.closed:
                return
            self.closed = True
            watchers = [w for peers in self._watchers.values() for w in peers]
        for watcher in watchers:
            watcher.close()
        if self._log_file is not None:
            self._log_file.close()
            self._log_file = None
