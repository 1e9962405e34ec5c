"""Interaction capture: dashboard events in, candidate narrative sentences out.

Events are kept in a per-session ring buffer; the synthesis window is always
the five most recent events (oldest first). The deterministic fallback never
invents numbers: every numeral in a fallback suggestion is quoted verbatim
from buffered chart data.
"""

from __future__ import annotations

import json
import re
from collections import deque
from dataclasses import dataclass, field

from .errors import GatewayError, NullSuggestion, UnknownView
from .prompts import CAPTURE_SCHEMA, render_prompt

BUFFER_CAPACITY = 50  # full session history for replay
WINDOW_SIZE = 5  # prompt contract window

_NUMERAL_RE = re.compile(r"\d+(?:\.\d+)?")

_FALLBACK_EXPLANATION = (
    "Captured from the most recent interaction revealing concrete values in the inspected view."
)


@dataclass
class InteractionEvent:
    element_id: str
    element_name: str
    element_type: str  # chart | map | table
    action: str
    dashboard_config: dict
    chart_data: object
    timestamp: float

    def to_wire(self) -> dict:
        return {
            "elementId": self.element_id,
            "elementName": self.element_name,
            "elementType": self.element_type,
            "action": self.action,
            "dashboardConfig": self.dashboard_config,
            "chartData": self.chart_data,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_wire(cls, data: dict) -> "InteractionEvent":
        return cls(
            element_id=data["elementId"],
            element_name=data.get("elementName", ""),
            element_type=data.get("elementType", "chart"),
            action=data.get("action", ""),
            dashboard_config=data.get("dashboardConfig", {}),
            chart_data=data.get("chartData"),
            timestamp=data.get("timestamp", 0.0),
        )


@dataclass
class CaptureSuggestion:
    narrative_suggestion: str | None
    source_element_id: str = ""
    source_view_title: str = ""
    explanation: str = ""

    def to_wire(self) -> dict:
        return {
            "narrative_suggestion": self.narrative_suggestion,
            "source_elementId": self.source_element_id,
            "source_view_title": self.source_view_title,
            "explanation": self.explanation,
        }


def _first_label_and_value(chart_data):
    """Pull (label, numeric value) out of an event's revealed data."""
    if isinstance(chart_data, dict):
        label = next((v for v in chart_data.values() if isinstance(v, str)), None)
        if label is None:
            label = next(iter(chart_data), None)
        value = next((v for v in chart_data.values()
                      if isinstance(v, (int, float)) and not isinstance(v, bool)), None)
        return label, value
    if isinstance(chart_data, list):
        for item in chart_data:
            label, value = _first_label_and_value(item)
            if value is not None:
                return label, value
    return None, None


def _has_numbers(chart_data) -> bool:
    return bool(_NUMERAL_RE.search(json.dumps(chart_data, default=str)))


class InteractionRecorder:
    def __init__(self, view_exists=None):
        self._buffer: deque = deque(maxlen=BUFFER_CAPACITY)
        self._view_exists = view_exists

    def record_event(self, event: InteractionEvent) -> None:
        if self._view_exists is not None and not self._view_exists(event.element_id):
            raise UnknownView(event.element_id)
        self._buffer.append(event)

    def window(self) -> list[InteractionEvent]:
        """Last min(5, recorded) events, oldest first."""
        return list(self._buffer)[-WINDOW_SIZE:]

    def history(self) -> list[InteractionEvent]:
        return list(self._buffer)

    def __len__(self) -> int:
        return len(self._buffer)

    def to_json(self) -> list:
        return [e.to_wire() for e in self._buffer]

    def load_json(self, events: list) -> None:
        self._buffer.clear()
        for e in events:
            self._buffer.append(InteractionEvent.from_wire(e))


class CaptureService:
    def __init__(self, recorder: InteractionRecorder, gateway=None):
        self.recorder = recorder
        self.gateway = gateway

    def capture(self, current_sentence: str, narrative_context: str,
                use_llm: bool = True) -> CaptureSuggestion:
        window = self.recorder.window()
        if not window:
            return CaptureSuggestion(narrative_suggestion=None)

        if use_llm and self.gateway is not None:
            try:
                return self._capture_llm(current_sentence, narrative_context, window)
            except GatewayError:
                pass
        return self.fallback(window)

    def _capture_llm(self, current_sentence, narrative_context, window) -> CaptureSuggestion:
        payload = {
            "narrative_context": narrative_context,
            "current_sentence": current_sentence,
            "interaction_log": [e.to_wire() for e in window],
        }
        prompt = render_prompt("capture", input_json=json.dumps(payload, indent=2))
        parsed = self.gateway.chat("lightweight", prompt, CAPTURE_SCHEMA,
                                   schema_id="capture", context=payload)
        suggestion = CaptureSuggestion(
            narrative_suggestion=parsed["narrative_suggestion"],
            source_element_id=parsed["source_elementId"],
            source_view_title=parsed["source_view_title"],
            explanation=parsed["explanation"],
        )
        if suggestion.narrative_suggestion is not None:
            words = len(suggestion.explanation.split())
            if not 10 <= words <= 20:
                return self.fallback(window)
        return suggestion

    def fallback(self, window=None) -> CaptureSuggestion:
        """Template suggestion from the freshest numeric event (indexes 4, 3, ...)."""
        window = self.recorder.window() if window is None else window
        for event in reversed(window):
            if not _has_numbers(event.chart_data):
                continue
            label, value = _first_label_and_value(event.chart_data)
            if value is None:
                continue
            title = event.dashboard_config.get("title") or event.element_name or event.element_id
            value_text = json.dumps(value)
            subject = f"{label} shows {value_text}" if label else f"the data shows {value_text}"
            return CaptureSuggestion(
                narrative_suggestion=f"In {title}, {subject}.",
                source_element_id=event.element_id,
                source_view_title=title,
                explanation=_FALLBACK_EXPLANATION,
            )
        return CaptureSuggestion(narrative_suggestion=None)


def numerals_in(text: str) -> list[str]:
    return _NUMERAL_RE.findall(text)


def suggestion_numbers_grounded(suggestion: CaptureSuggestion, events) -> bool:
    """Every numeral in the suggestion appears verbatim in some event's chart data."""
    if suggestion.narrative_suggestion is None:
        return True
    blobs = [json.dumps(e.chart_data, default=str) for e in events]
    return all(any(num in blob for blob in blobs)
               for num in numerals_in(suggestion.narrative_suggestion))


def accept_suggestion(suggestion: CaptureSuggestion, tree, links, classify,
                      created_at=None):
    """Append the suggestion as a captured sentence, link evidence, classify drift."""
    if suggestion.narrative_suggestion is None:
        raise NullSuggestion()
    path = tree.active_path() if len(tree) else []
    previous = path[-1] if path else None
    sentence = tree.append(suggestion.narrative_suggestion, author="captured",
                           created_at=created_at)
    if suggestion.source_element_id:
        try:
            links.link(sentence.sentence_id, suggestion.source_element_id)
            sentence.view_ids.add(suggestion.source_element_id)
        except Exception:
            pass  # source view may have been created outside the store
    node = classify(sentence, previous)
    sentence.timeline_node_id = node.node_id
    return sentence
