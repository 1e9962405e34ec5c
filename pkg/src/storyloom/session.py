"""Session orchestration: one object tying every engine module together.

All state changes flow through ``dispatch``, which appends to an append-only
event log before returning. Replaying that log against a fresh session
reproduces the state bit for bit (in deterministic gateway modes), which is
what snapshot persistence and the round-trip tests rely on.
"""

from __future__ import annotations

import hashlib
import json
import time
import uuid
from threading import RLock

from . import capture as capture_mod
from .alignment import LinkTable, SemanticAligner, ViewResolver, ViewStore
from .catalog import Catalog
from .errors import StoryloomError, UnknownSentence
from .gateway import GatewayConfig, LlmGateway
from .inquiry import InquiryBoard
from .query import QueryEngine
from .story import StoryCompiler, stub_story_responder
from .timeline import InsightTimeline
from .tree import NarrativeTree
from .views import ViewLibrary


class Session:
    def __init__(self, session_id: str | None = None, gateway: LlmGateway | None = None):
        self.session_id = session_id or uuid.uuid4().hex[:12]
        self.created_at = time.time()
        self.gateway = gateway or LlmGateway(GatewayConfig.from_env())
        if self.gateway.config.stub_mode:
            self.gateway.responders.setdefault("story", stub_story_responder)

        self.catalog = Catalog()
        self.engine = QueryEngine(self.catalog)
        self.views = ViewLibrary(self.catalog, self.gateway)
        self.aligner = SemanticAligner(self.catalog, self.gateway)
        self.tree = NarrativeTree()
        self.view_store = ViewStore()
        self.link_table = LinkTable(
            sentence_exists=self.tree.known_id,
            view_exists=lambda vid: vid in self.view_store)
        self.resolver = ViewResolver(self.aligner, self.engine,
                                     self.link_table, self.view_store)
        self.recorder = capture_mod.InteractionRecorder(
            view_exists=lambda vid: vid in self.view_store)
        self.capture_service = capture_mod.CaptureService(self.recorder, self.gateway)
        self.timeline = InsightTimeline(aligner=self.aligner, gateway=self.gateway,
                                        catalog=self.catalog)
        self.inquiry = InquiryBoard(aligner=self.aligner, gateway=self.gateway)
        self.story_compiler = StoryCompiler(self.gateway)

        self.event_log: list[dict] = []
        self.current_branch = "main"
        self.branch_of: dict[str, str] = {}
        self._branch_count = 0
        self._lock = RLock()  # single-writer per session

        self._handlers = {
            "ingest_dataset": self._apply_ingest,
            "append_sentence": self._apply_append,
            "insert_sentence": self._apply_insert,
            "update_sentence": self._apply_update,
            "delete_sentence": self._apply_delete,
            "create_branch": self._apply_create_branch,
            "delete_branch": self._apply_delete_branch,
            "show_view": self._apply_show_view,
            "record_event": self._apply_record_event,
            "accept_capture": self._apply_accept_capture,
        }

    # --- event sourcing ----------------------------------------------------

    def dispatch(self, operation: str, payload: dict, actor: str = "user"):
        with self._lock:
            event = {
                "timestamp": payload.get("timestamp", time.time()),
                "actor": actor,
                "operation": operation,
                "payload": dict(payload),
            }
            event["payload"]["timestamp"] = event["timestamp"]
            result = self._handlers[operation](event)
            self.event_log.append(event)
            return result

    def _use_llm(self, payload: dict) -> bool:
        return payload.get("mode") != "fallback"

    # --- handlers ------------------------------------------------------------

    def _apply_ingest(self, event) -> dict:
        payload = event["payload"]
        schema = self.catalog.ingest_table(
            payload["csv_text"].encode("utf-8"),
            name=payload["name"],
            category_tags=payload.get("category_tags", ()))
        self.aligner.invalidate_vocabulary()
        self.rebuild_index()
        return schema.to_json()

    def rebuild_index(self) -> int:
        from .propositions import PropositionSpace
        space = PropositionSpace(self.catalog, self.engine)
        instances, templates = [], []
        for name in self.catalog.table_names():
            schema = self.catalog.schema(name)
            instances.extend(space.all_instances(schema))
            templates.extend(self.views.adapt_templates(schema))
        return self.aligner.build_index(instances, templates)

    def _classify(self, sentence, previous, use_llm: bool):
        node = self.timeline.classify(sentence, previous,
                                      branch_id=self.current_branch,
                                      use_llm=use_llm)
        sentence.timeline_node_id = node.node_id
        return node

    def _refresh_inquiry(self, use_llm: bool):
        sentences = self.tree.active_path() if len(self.tree) else []
        self.inquiry.rebuild(sentences, use_llm=use_llm)

    def _apply_append(self, event) -> dict:
        payload = event["payload"]
        previous = self.tree.active_path()[-1] if len(self.tree) else None
        sentence = self.tree.append(payload["content"],
                                    author=payload.get("author", "user"),
                                    created_at=event["timestamp"])
        self.branch_of[sentence.sentence_id] = self.current_branch
        use_llm = self._use_llm(payload)
        self._classify(sentence, previous, use_llm)
        self._refresh_inquiry(use_llm)
        return self._sentence_json(sentence)

    def _apply_insert(self, event) -> dict:
        payload = event["payload"]
        anchor = self.tree.sentence(payload["anchor"])
        sentence = self.tree.insert_after(payload["anchor"], payload["content"],
                                          author=payload.get("author", "user"),
                                          created_at=event["timestamp"])
        self.branch_of[sentence.sentence_id] = self.branch_of.get(
            anchor.sentence_id, self.current_branch)
        use_llm = self._use_llm(payload)
        self._classify(sentence, anchor, use_llm)
        self._refresh_inquiry(use_llm)
        return self._sentence_json(sentence)

    def _apply_update(self, event) -> dict:
        payload = event["payload"]
        sentence = self.tree.update(payload["sentence_id"], payload["content"])
        path = self.tree.path_to(sentence.sentence_id)
        previous = path[-2] if len(path) > 1 else None
        use_llm = self._use_llm(payload)
        self._classify(sentence, previous, use_llm)
        self._refresh_inquiry(use_llm)
        return self._sentence_json(sentence)

    def _apply_delete(self, event) -> dict:
        payload = event["payload"]
        self.tree.delete_sentence(payload["sentence_id"])
        self._refresh_inquiry(self._use_llm(payload))
        return {"deleted": payload["sentence_id"]}

    def _apply_create_branch(self, event) -> dict:
        payload = event["payload"]
        fork = self.tree.create_branch(payload["from_id"])
        self._branch_count += 1
        branch_id = f"b{self._branch_count}"
        if fork.timeline_node_id is not None:
            self.timeline.record_fork(fork.timeline_node_id, branch_id)
        self.current_branch = branch_id
        return {"branch_id": branch_id, "fork_point": fork.sentence_id}

    def _apply_delete_branch(self, event) -> dict:
        payload = event["payload"]
        self.tree.delete_branch(payload["fork_child"])
        self.current_branch = self.branch_of.get(self.tree.cursor_id, "main")
        self._refresh_inquiry(self._use_llm(payload))
        return {"deleted_branch_at": payload["fork_child"],
                "cursor": self.tree.cursor_id}

    def _apply_show_view(self, event) -> dict:
        payload = event["payload"]
        sentence = self.tree.sentence(payload["sentence_id"])
        result = self.resolver.show_view(sentence)
        return result.to_json()

    def _apply_record_event(self, event) -> dict:
        wire = event["payload"]["event"]
        self.recorder.record_event(capture_mod.InteractionEvent.from_wire(wire))
        return {"recorded": len(self.recorder)}

    def _apply_accept_capture(self, event) -> dict:
        payload = event["payload"]
        suggestion = capture_mod.CaptureSuggestion(
            narrative_suggestion=payload["suggestion"]["narrative_suggestion"],
            source_element_id=payload["suggestion"].get("source_elementId", ""),
            source_view_title=payload["suggestion"].get("source_view_title", ""),
            explanation=payload["suggestion"].get("explanation", ""))
        use_llm = self._use_llm(payload)
        sentence = capture_mod.accept_suggestion(
            suggestion, self.tree, self.link_table,
            classify=lambda cur, prev: self._classify(cur, prev, use_llm),
            created_at=event["timestamp"])
        self.branch_of[sentence.sentence_id] = self.current_branch
        self._refresh_inquiry(use_llm)
        return self._sentence_json(sentence)

    # --- reads ---------------------------------------------------------------

    def _sentence_json(self, sentence) -> dict:
        return {
            "sentence_id": sentence.sentence_id,
            "content": sentence.content,
            "author": sentence.author,
            "created_at": sentence.created_at,
            "view_ids": sorted(sentence.view_ids),
            "timeline_node_id": sentence.timeline_node_id,
            "revision": sentence.revision,
        }

    def capture(self, use_llm: bool = True) -> dict:
        current = ""
        context = ""
        if len(self.tree):
            path = self.tree.active_path()
            current = path[-1].content
            context = " ".join(s.content for s in path)
        suggestion = self.capture_service.capture(current, context, use_llm=use_llm)
        return suggestion.to_wire()

    def active_path_json(self) -> list:
        if not len(self.tree):
            return []
        return [self._sentence_json(s) for s in self.tree.active_path()]

    def tree_json(self) -> dict:
        snap = self.tree.snapshot()
        snap["branch_of"] = dict(self.branch_of)
        snap["current_branch"] = self.current_branch
        return snap

    def compile_story(self):
        return self.story_compiler.compile(self.tree, self.timeline,
                                           ibis=self.inquiry.graph,
                                           links=self.link_table)

    # --- snapshot / replay ---------------------------------------------------

    def snapshot(self) -> dict:
        return {
            "session_id": self.session_id,
            "created_at": self.created_at,
            "tree": self.tree_json(),
            "active_path": self.active_path_json(),
            "views": self.view_store.to_json(),
            "links": self.link_table.to_json(),
            "timeline": self.timeline.export(),
            "inquiry": self.inquiry.board(),
            "datasets": [self.catalog.schema(n).to_json()
                         for n in self.catalog.table_names()],
            "interaction_log": self.recorder.to_json(),
            "event_log": [dict(e) for e in self.event_log],
        }

    def state_hash(self) -> str:
        snap = self.snapshot()
        snap.pop("event_log")
        snap.pop("created_at")
        blob = json.dumps(snap, sort_keys=True, default=str)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    @classmethod
    def replay(cls, event_log: list, session_id: str | None = None,
               gateway: LlmGateway | None = None) -> "Session":
        session = cls(session_id=session_id, gateway=gateway)
        for event in event_log:
            session.dispatch(event["operation"], dict(event["payload"]),
                             actor=event.get("actor", "user"))
        return session

    @classmethod
    def from_snapshot(cls, snap: dict, gateway: LlmGateway | None = None) -> "Session":
        return cls.replay(snap["event_log"], session_id=snap.get("session_id"),
                          gateway=gateway)
