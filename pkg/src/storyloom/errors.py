"""Exception hierarchy shared across the engine.

Every error carries a stable machine-readable ``code`` so the HTTP layer can
map it without string matching.
"""

from __future__ import annotations


class StoryloomError(Exception):
    """Base class; ``code`` defaults to the class name."""

    http_status = 422

    def __init__(self, message: str = ""):
        super().__init__(message or self.__class__.__name__)
        self.code = self.__class__.__name__


# --- catalog ---------------------------------------------------------------

class EmptyTable(StoryloomError):
    pass


class DuplicateTable(StoryloomError):
    http_status = 409


class MalformedRow(StoryloomError):
    pass


class UnknownTable(StoryloomError):
    http_status = 404


# --- query engine ----------------------------------------------------------

class UnknownColumn(StoryloomError):
    pass


class TypeMismatch(StoryloomError):
    pass


class MissingBinding(StoryloomError):
    pass


class ConstraintViolation(StoryloomError):
    http_status = 409


# --- narrative tree --------------------------------------------------------

class EmptyContent(StoryloomError):
    pass


class UnknownSentence(StoryloomError):
    http_status = 404


class AnchorOffActivePath(StoryloomError):
    http_status = 409


class WouldOrphanForest(StoryloomError):
    http_status = 409


class LastPath(StoryloomError):
    http_status = 409


class EmptyTree(StoryloomError):
    http_status = 409


# --- propositions / views --------------------------------------------------

class NoMeasureColumns(StoryloomError):
    pass


class FormatMismatch(StoryloomError):
    pass


class TooManyViews(StoryloomError):
    pass


class EmptyViews(StoryloomError):
    pass


# --- alignment -------------------------------------------------------------

class IndexNotBuilt(StoryloomError):
    http_status = 409


class EmbeddingDimensionMismatch(StoryloomError):
    pass


class NoMatch(StoryloomError):
    http_status = 404


class UnknownId(StoryloomError):
    http_status = 404


# --- capture / timeline ----------------------------------------------------

class UnknownView(StoryloomError):
    http_status = 404


class NullSuggestion(StoryloomError):
    pass


class UnknownNode(StoryloomError):
    http_status = 404


# --- story -----------------------------------------------------------------

class NoGroundedContent(StoryloomError):
    http_status = 409


class StoryValidationFailed(StoryloomError):
    def __init__(self, violations):
        super().__init__("story validation failed: %s" % "; ".join(map(str, violations)))
        self.violations = list(violations)


# --- gateway ---------------------------------------------------------------

class GatewayError(StoryloomError):
    http_status = 502


class ProviderUnavailable(GatewayError):
    pass


class SchemaValidationExhausted(GatewayError):
    pass


class MalformedLLMOutput(GatewayError):
    pass


# --- service ---------------------------------------------------------------

class UnknownResource(StoryloomError):
    http_status = 404
