"""Inquiry board: issue extraction, status tracking, and IBIS enrichment.

The board is recomputed from the active narrative path on every mutation.
Fallback extraction is a deterministic surrogate for the prompt's judgment:
question markers detect issues, tag overlap plus numeric or superlative
evidence resolves them, abandonment stalls them.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .errors import GatewayError, MalformedLLMOutput, StoryloomError
from .prompts import (ARGUMENT_BASES, CONFIDENCES, INQUIRY_ISSUES_SCHEMA,
                      INQUIRY_LABELS_SCHEMA, ISSUE_STATUSES, LINK_TYPES,
                      render_prompt)

QUESTION_MARKERS = ("whether", "should check", "need to find", "it seems")
SUPERLATIVES = ("highest", "lowest", "most", "least", "best", "worst",
                "cheapest", "largest", "smallest")
_NUMERAL_RE = re.compile(r"\d")
RECENCY_WINDOW = 3  # issues among the last N sentences are never stalled


@dataclass
class Issue:
    qid: str
    title: str
    status: str
    sentence_refs: list

    def to_json(self) -> dict:
        return {"qid": self.qid, "title": self.title, "status": self.status,
                "sentenceRefs": list(self.sentence_refs)}


@dataclass
class IssueEnrichment:
    qid: str
    position_suggested_by: dict | None = None
    argument_suggested_by: dict | None = None
    links: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"qid": self.qid,
                "position_suggested_by": self.position_suggested_by,
                "argument_suggested_by": self.argument_suggested_by,
                "links": list(self.links)}


@dataclass
class IbisGraph:
    issues: dict = field(default_factory=dict)
    enrichments: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"issues": [i.to_json() for i in self.issues.values()],
                "enrichments": [e.to_json() for e in self.enrichments.values()]}


def _is_question(content: str) -> bool:
    lower = content.lower()
    return content.strip().endswith("?") or any(m in lower for m in QUESTION_MARKERS)


def _as_question_title(content: str) -> str:
    content = content.strip()
    if content.endswith("?"):
        return content
    return "Is it true that " + content.rstrip(".").lower() + "?"


class InquiryBoard:
    def __init__(self, aligner=None, gateway=None):
        self.aligner = aligner
        self.gateway = gateway
        self.graph = IbisGraph()

    def _tags_for(self, text: str) -> frozenset:
        """Content tags: geo + topic + time (intent excluded, it is not content)."""
        if self.aligner is None:
            return frozenset()
        tags = self.aligner.normalize_tags(text)
        return frozenset({f"geo:{v}" for v in tags.geo}
                         | {f"topic:{v}" for v in tags.topic}
                         | {f"time:{v}" for v in tags.time})

    # --- extraction ------------------------------------------------------

    def extract_issues(self, sentences, use_llm: bool = True) -> list[Issue]:
        """Issues from the ordered active-path sentence list."""
        if use_llm and self.gateway is not None:
            try:
                return self._extract_llm(sentences)
            except GatewayError:
                pass
        return self._extract_rules(sentences)

    def _extract_llm(self, sentences) -> list[Issue]:
        payload = [{"sentence_id": s.sentence_id, "content": s.content}
                   for s in sentences]
        prompt = render_prompt("inquiry_issues",
                               sentence_list=json.dumps(payload, indent=2))
        parsed = self.gateway.chat("lightweight", prompt, INQUIRY_ISSUES_SCHEMA,
                                   schema_id="inquiry_issues",
                                   context={"sentences": payload})
        known_ids = {s.sentence_id for s in sentences}
        issues = []
        seen_qids = set()
        for raw in parsed:
            refs = [r for r in raw["sentenceRefs"] if r in known_ids]
            if not refs or raw["qid"] in seen_qids:
                raise MalformedLLMOutput("bad issue refs or duplicate qid")
            seen_qids.add(raw["qid"])
            issues.append(Issue(raw["qid"], raw["title"], raw["status"], refs))
        return issues

    def _extract_rules(self, sentences) -> list[Issue]:
        tag_cache = [self._tags_for(s.content) for s in sentences]
        issues = []
        counter = 1
        for i, sentence in enumerate(sentences):
            if not _is_question(sentence.content):
                continue
            issue_tags = tag_cache[i]
            resolved = False
            any_later_overlap = False
            for j in range(i + 1, len(sentences)):
                shared = len(issue_tags & tag_cache[j])
                if shared >= 1:
                    any_later_overlap = True
                later = sentences[j].content
                lower = later.lower()
                evidential = (_NUMERAL_RE.search(later)
                              or any(w in lower for w in SUPERLATIVES))
                if shared >= 2 and evidential and not _is_question(later):
                    resolved = True
                    break
            if resolved:
                status = "resolved"
            else:
                recent = i >= len(sentences) - RECENCY_WINDOW
                status = "open" if recent or any_later_overlap else "stalled"
            issues.append(Issue(qid=f"iss_{counter}",
                                title=_as_question_title(sentence.content),
                                status=status,
                                sentence_refs=[sentence.sentence_id]))
            counter += 1
        return issues

    # --- enrichment -------------------------------------------------------

    def enrich(self, issues, sentences, use_llm: bool = True) -> list[IssueEnrichment]:
        if use_llm and self.gateway is not None and issues:
            try:
                return self._enrich_llm(issues, sentences)
            except GatewayError:
                pass
        return [IssueEnrichment(qid=i.qid) for i in issues]

    def _enrich_llm(self, issues, sentences) -> list[IssueEnrichment]:
        payload = {
            "issues": [i.to_json() for i in issues],
            "sentences": [{"sentence_id": s.sentence_id, "content": s.content}
                          for s in sentences],
        }
        prompt = render_prompt(
            "inquiry_labels",
            issue_list=json.dumps(payload["issues"], indent=2),
            sentence_list=json.dumps(payload["sentences"], indent=2))
        parsed = self.gateway.chat("lightweight", prompt, INQUIRY_LABELS_SCHEMA,
                                   schema_id="inquiry_labels", context=payload)
        return validate_enrichments(parsed, [i.qid for i in issues])

    # --- board -------------------------------------------------------------

    def rebuild(self, sentences, use_llm: bool = True) -> IbisGraph:
        """Atomic recompute: readers see the old or the new graph, not a mix."""
        issues = self.extract_issues(sentences, use_llm=use_llm) if sentences else []
        enrichments = self.enrich(issues, sentences, use_llm=use_llm)
        graph = IbisGraph(
            issues={i.qid: i for i in issues},
            enrichments={e.qid: e for e in enrichments},
        )
        self.graph = graph
        return graph

    def board(self, status: str | None = None) -> dict:
        if status is not None and status not in ISSUE_STATUSES:
            raise StoryloomError(f"unknown status filter: {status}")
        groups = {s: [] for s in ISSUE_STATUSES}
        for issue in self.graph.issues.values():
            entry = issue.to_json()
            enrichment = self.graph.enrichments.get(issue.qid)
            if enrichment is not None:
                entry.update(enrichment.to_json())
            groups[issue.status].append(entry)
        if status is not None:
            return {status: groups[status]}
        return groups


def validate_enrichments(parsed, known_qids) -> list[IssueEnrichment]:
    """Referential and enum checks over model output; failures raise."""
    known = set(known_qids)
    out = []
    for raw in parsed:
        qid = raw["qid"]
        if qid not in known:
            raise MalformedLLMOutput(f"enrichment for unknown qid {qid}")
        position = raw.get("position_suggested_by")
        if position is not None and position.get("confidence") not in CONFIDENCES:
            raise MalformedLLMOutput("bad position confidence")
        argument = raw.get("argument_suggested_by")
        if argument is not None and argument.get("basis") not in ARGUMENT_BASES:
            raise MalformedLLMOutput("bad argument basis")
        links = []
        for link in raw.get("links", ()):
            if link["qid"] == qid:
                raise MalformedLLMOutput("self-link rejected")
            if link["qid"] not in known:
                raise MalformedLLMOutput(f"link to unknown qid {link['qid']}")
            if link["type"] not in LINK_TYPES:
                raise MalformedLLMOutput(f"bad link type {link['type']}")
            links.append({"qid": link["qid"], "type": link["type"],
                          "explanation": link.get("explanation", "")})
        out.append(IssueEnrichment(qid=qid, position_suggested_by=position,
                                   argument_suggested_by=argument, links=links))
    return out
