import pytest

from storyloom.alignment import AlignmentConfig, SemanticAligner

# one-line verdicts recorded by the acceptance tests, echoed to the terminal
# at the end of the run regardless of output capture
VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    for line in VERDICTS:
        terminalreporter.write_line(line)
from storyloom.catalog import Catalog
from storyloom.cli import demo_csv_text
from storyloom.gateway import GatewayConfig, LlmGateway
from storyloom.propositions import PropositionSpace
from storyloom.query import QueryEngine
from storyloom.session import Session
from storyloom.views import ViewLibrary


@pytest.fixture(scope="session")
def demo_csv() -> str:
    return demo_csv_text()


@pytest.fixture
def stub_gateway() -> LlmGateway:
    return LlmGateway(GatewayConfig(stub_mode=True))


@pytest.fixture
def catalog(demo_csv) -> Catalog:
    cat = Catalog()
    cat.ingest_table(demo_csv.encode("utf-8"), name="travel",
                     category_tags=("travel",))
    return cat


@pytest.fixture
def engine(catalog) -> QueryEngine:
    return QueryEngine(catalog)


@pytest.fixture
def space(catalog, engine) -> PropositionSpace:
    return PropositionSpace(catalog, engine)


def build_aligner(catalog, gateway, embed_mode=True) -> SemanticAligner:
    aligner = SemanticAligner(catalog, gateway,
                              AlignmentConfig(embed_mode=embed_mode))
    engine = QueryEngine(catalog)
    space = PropositionSpace(catalog, engine)
    library = ViewLibrary(catalog, gateway)
    instances, templates = [], []
    for name in catalog.table_names():
        schema = catalog.schema(name)
        instances.extend(space.all_instances(schema))
        templates.extend(library.adapt_templates(schema))
    aligner.build_index(instances, templates)
    return aligner


@pytest.fixture(scope="session")
def indexed_aligner(demo_csv):
    cat = Catalog()
    cat.ingest_table(demo_csv.encode("utf-8"), name="travel",
                     category_tags=("travel",))
    return build_aligner(cat, LlmGateway(GatewayConfig(stub_mode=True)))


@pytest.fixture(scope="session")
def fallback_aligner(demo_csv):
    cat = Catalog()
    cat.ingest_table(demo_csv.encode("utf-8"), name="travel",
                     category_tags=("travel",))
    return build_aligner(cat, LlmGateway(GatewayConfig(stub_mode=True)),
                         embed_mode=False)


@pytest.fixture
def session(demo_csv) -> Session:
    s = Session(gateway=LlmGateway(GatewayConfig(stub_mode=True)))
    s.dispatch("ingest_dataset", {"name": "travel", "csv_text": demo_csv,
                                  "category_tags": ["travel"]})
    return s
