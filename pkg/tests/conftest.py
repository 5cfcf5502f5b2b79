import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from pmchat import kernels
from pmchat.eventlog import ColumnMapping, LogMetadata, parse_csv
from pmchat.store import DataStore

REPO_ROOT = Path(__file__).resolve().parents[1]
FIXTURES = REPO_ROOT / "fixtures"

L1_MAPPING = ColumnMapping(
    case_id="Case ID",
    activity="Activity",
    timestamp="Complete Timestamp",
    resource="Resource",
)

L1_METADATA = LogMetadata(
    sector="Public Sector",
    economic_activity="Municipality",
    process_name="Issuance Of Municipal License",
    organization="Metropolitan Licensing Office",
)


@pytest.fixture(scope="session")
def l1_csv_text() -> str:
    return (FIXTURES / "logs" / "l1.csv").read_text("utf-8")


@pytest.fixture()
def l1_parse_result(l1_csv_text):
    return parse_csv(l1_csv_text, L1_MAPPING, L1_METADATA)


@pytest.fixture()
def l1_log(l1_parse_result):
    return l1_parse_result.log


@pytest.fixture()
def store(tmp_path) -> DataStore:
    return DataStore(tmp_path / "data")


@pytest.fixture(params=sorted(kernels.available_backends()))
def kernel_backend(request):
    """Run the decorated test once per available kernel backend."""
    previous = kernels.active_backend()
    kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend(previous)
