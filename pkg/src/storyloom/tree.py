"""Branching narrative tree.

One cursor per tree marks the active leaf; the active path is the
root-to-cursor chain. Branching creates a parallel path that inherits the
root-to-fork prefix. Sentence ids are never reused within a session.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .errors import (
    AnchorOffActivePath,
    EmptyContent,
    EmptyTree,
    LastPath,
    UnknownSentence,
    WouldOrphanForest,
)


@dataclass
class Sentence:
    sentence_id: str
    content: str
    author: str = "user"  # user | captured | system
    created_at: float = 0.0
    view_ids: set = field(default_factory=set)
    timeline_node_id: int | None = None
    revision: int = 0


@dataclass
class _Node:
    sentence: Sentence
    parent_id: str | None = None
    child_ids: list = field(default_factory=list)


class NarrativeTree:
    def __init__(self):
        self.nodes: dict[str, _Node] = {}
        self.root_id: str | None = None
        self.cursor_id: str | None = None
        self._next_id = 1
        self.pending_events: list[dict] = []
        # ids of deleted sentences; provenance (timeline nodes) outlives edits
        self.tombstones: set[str] = set()

    # --- helpers ------------------------------------------------------

    def _fresh_id(self) -> str:
        sid = f"s{self._next_id}"
        self._next_id += 1
        return sid

    def _node(self, sentence_id: str) -> _Node:
        if sentence_id not in self.nodes:
            raise UnknownSentence(sentence_id)
        return self.nodes[sentence_id]

    def _emit(self, kind: str, sentence_id: str):
        self.pending_events.append({"kind": kind, "sentence_id": sentence_id})

    def __contains__(self, sentence_id: str) -> bool:
        return sentence_id in self.nodes

    def __len__(self) -> int:
        return len(self.nodes)

    def sentence(self, sentence_id: str) -> Sentence:
        return self._node(sentence_id).sentence

    def known_id(self, sentence_id: str) -> bool:
        """Live or tombstoned; provenance references stay resolvable."""
        return sentence_id in self.nodes or sentence_id in self.tombstones

    # --- mutations ----------------------------------------------------

    def append(self, content: str, author: str = "user", created_at: float | None = None) -> Sentence:
        content = content.strip()
        if not content:
            raise EmptyContent()
        sid = self._fresh_id()
        sentence = Sentence(
            sentence_id=sid,
            content=content,
            author=author,
            created_at=time.time() if created_at is None else created_at,
        )
        node = _Node(sentence=sentence)
        if self.root_id is None:
            self.root_id = sid
        else:
            cursor = self._node(self.cursor_id)
            node.parent_id = self.cursor_id
            cursor.child_ids.append(sid)
        self.nodes[sid] = node
        self.cursor_id = sid
        self._emit("appended", sid)
        return sentence

    def insert_after(self, anchor: str, content: str, author: str = "user",
                     created_at: float | None = None) -> Sentence:
        content = content.strip()
        if not content:
            raise EmptyContent()
        anchor_node = self._node(anchor)
        path_ids = [s.sentence_id for s in self.active_path()]
        if anchor not in path_ids:
            raise AnchorOffActivePath(anchor)
        if anchor == self.cursor_id:
            return self.append(content, author=author, created_at=created_at)

        next_id = path_ids[path_ids.index(anchor) + 1]
        sid = self._fresh_id()
        sentence = Sentence(
            sentence_id=sid,
            content=content,
            author=author,
            created_at=time.time() if created_at is None else created_at,
        )
        # splice on the active edge only; sibling branches keep the anchor
        pos = anchor_node.child_ids.index(next_id)
        anchor_node.child_ids[pos] = sid
        self.nodes[sid] = _Node(sentence=sentence, parent_id=anchor, child_ids=[next_id])
        self.nodes[next_id].parent_id = sid
        self._emit("inserted", sid)
        return sentence

    def update(self, sentence_id: str, content: str) -> Sentence:
        content = content.strip()
        if not content:
            raise EmptyContent()
        sentence = self._node(sentence_id).sentence
        sentence.content = content
        sentence.revision += 1
        self._emit("updated", sentence_id)
        return sentence

    def delete_sentence(self, sentence_id: str) -> None:
        node = self._node(sentence_id)
        if sentence_id == self.root_id:
            if len(node.child_ids) > 1:
                raise WouldOrphanForest(sentence_id)
            child = node.child_ids[0] if node.child_ids else None
            del self.nodes[sentence_id]
            self.tombstones.add(sentence_id)
            self.root_id = child
            if child is not None:
                self.nodes[child].parent_id = None
            if self.cursor_id == sentence_id:
                self.cursor_id = child
            if self.root_id is None:
                self.cursor_id = None
            self._emit("deleted", sentence_id)
            return

        parent = self.nodes[node.parent_id]
        pos = parent.child_ids.index(sentence_id)
        parent.child_ids[pos:pos + 1] = node.child_ids
        for cid in node.child_ids:
            self.nodes[cid].parent_id = node.parent_id
        del self.nodes[sentence_id]
        self.tombstones.add(sentence_id)
        if self.cursor_id == sentence_id:
            self.cursor_id = node.parent_id
        self._emit("deleted", sentence_id)

    def create_branch(self, from_id: str) -> Sentence:
        """Start a parallel path at ``from_id``.

        The cursor moves to the fork point, so the new branch's active path is
        exactly the root-to-fork prefix; the next append grows the new branch.
        Returns the fork-point sentence.
        """
        node = self._node(from_id)
        self.cursor_id = from_id
        self._emit("branched", from_id)
        return node.sentence

    def delete_branch(self, fork_child: str) -> None:
        node = self._node(fork_child)
        subtree = set(self._subtree_ids(fork_child))
        surviving_leaves = [
            sid for sid, n in self.nodes.items()
            if not n.child_ids and sid not in subtree
        ]
        # a lone root with the whole tree below it has no surviving leaf either
        if not surviving_leaves or fork_child == self.root_id:
            raise LastPath(fork_child)

        parent = self.nodes[node.parent_id]
        parent.child_ids.remove(fork_child)
        for sid in subtree:
            del self.nodes[sid]
            self.tombstones.add(sid)
        if self.cursor_id in subtree:
            self.cursor_id = self._first_leaf_under(node.parent_id)
        self._emit("branch_deleted", fork_child)

    # --- reads --------------------------------------------------------

    def _subtree_ids(self, root: str) -> list:
        out = []
        stack = [root]
        while stack:
            sid = stack.pop()
            out.append(sid)
            stack.extend(reversed(self.nodes[sid].child_ids))
        return out

    def _first_leaf_under(self, start: str) -> str:
        sid = start
        while self.nodes[sid].child_ids:
            sid = self.nodes[sid].child_ids[0]
        return sid

    def active_path(self) -> list[Sentence]:
        if self.root_id is None:
            raise EmptyTree()
        chain = []
        sid = self.cursor_id
        while sid is not None:
            node = self.nodes[sid]
            chain.append(node.sentence)
            sid = node.parent_id
        chain.reverse()
        return chain

    def to_linear_text(self) -> str:
        return " ".join(s.content for s in self.active_path())

    def path_to(self, sentence_id: str) -> list[Sentence]:
        self._node(sentence_id)
        chain = []
        sid = sentence_id
        while sid is not None:
            node = self.nodes[sid]
            chain.append(node.sentence)
            sid = node.parent_id
        chain.reverse()
        return chain

    def leaves(self) -> list[str]:
        return [sid for sid, n in self.nodes.items() if not n.child_ids]

    def all_paths(self) -> list[list[Sentence]]:
        return [self.path_to(leaf) for leaf in sorted(self.leaves())]

    def drain_events(self) -> list[dict]:
        events, self.pending_events = self.pending_events, []
        return events

    # --- snapshot -----------------------------------------------------

    def snapshot(self) -> dict:
        return {
            "nodes": [
                {
                    "sentence_id": sid,
                    "parent_id": n.parent_id,
                    "child_ids": list(n.child_ids),
                    "content": n.sentence.content,
                    "author": n.sentence.author,
                    "created_at": n.sentence.created_at,
                    "view_ids": sorted(n.sentence.view_ids),
                    "timeline_node_id": n.sentence.timeline_node_id,
                    "revision": n.sentence.revision,
                }
                for sid, n in sorted(self.nodes.items())
            ],
            "root_id": self.root_id,
            "cursor_id": self.cursor_id,
            "next_id": self._next_id,
            "tombstones": sorted(self.tombstones),
        }

    @classmethod
    def from_snapshot(cls, data: dict) -> "NarrativeTree":
        tree = cls()
        tree.root_id = data["root_id"]
        tree.cursor_id = data["cursor_id"]
        tree._next_id = data.get("next_id", 1)
        tree.tombstones = set(data.get("tombstones", []))
        for entry in data["nodes"]:
            sentence = Sentence(
                sentence_id=entry["sentence_id"],
                content=entry["content"],
                author=entry["author"],
                created_at=entry["created_at"],
                view_ids=set(entry.get("view_ids", [])),
                timeline_node_id=entry.get("timeline_node_id"),
                revision=entry.get("revision", 0),
            )
            tree.nodes[entry["sentence_id"]] = _Node(
                sentence=sentence,
                parent_id=entry["parent_id"],
                child_ids=list(entry["child_ids"]),
            )
        return tree
