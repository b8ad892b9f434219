"""
🧪 Fixtures compartidas de la suite

Los datos de tests/fixtures/ reproducen un caso real de soborno y fraude
con su deliberación completa (tribunal Zhou / Zhang / Su, pena de
referencia 58 meses).
"""

import json
from pathlib import Path
from typing import List

import pytest

from src.bench_engine import AgentProfile, load_agent_pool
from src.config import EngineConfig
from src.dataset import Case, load_cases
from src.llm_backend import ChatMessage, CompletionRequest

FIXTURES = Path(__file__).parent / "fixtures"

REFERENCE_GOLD = 58
REFERENCE_CALLS = 15


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def reference_case() -> Case:
    return load_cases(FIXTURES / "reference_case.jsonl")[0]


@pytest.fixture
def fixture_cases() -> List[Case]:
    return load_cases(FIXTURES / "cases.jsonl")


@pytest.fixture
def bench_pool() -> List[AgentProfile]:
    return load_agent_pool(FIXTURES / "agent_pool.jsonl")


@pytest.fixture
def reference_script() -> List[str]:
    with open(FIXTURES / "reference_script.json", "r", encoding="utf-8") as f:
        return json.load(f)


@pytest.fixture
def engine_config() -> EngineConfig:
    return EngineConfig(
        bench_size=3,
        max_rounds=3,
        parse_retries=1,
        seed=42,
        composition={"judge": 1, "lay_judge": 1},
        model="scripted",
    )


@pytest.fixture
def simple_request() -> CompletionRequest:
    return CompletionRequest(
        model="gpt-4",
        messages=(ChatMessage(role="user", content="刑期是多少？"),),
    )


@pytest.fixture(autouse=True)
def _no_real_api_key(monkeypatch):
    # ningún test debe llegar a un endpoint real
    monkeypatch.delenv("OPENAI_API_KEY", raising=False)
    for name in (
        "AGENTSBENCH_MODEL", "AGENTSBENCH_BASE_URL", "AGENTSBENCH_MAX_ROUNDS",
        "AGENTSBENCH_BENCH_SIZE", "AGENTSBENCH_SEED", "AGENTSBENCH_WORKERS",
        "AGENTSBENCH_MEMORY_ENABLED", "AGENTSBENCH_MAX_DIFF", "AGENTSBENCH_LOG_LEVEL",
    ):
        monkeypatch.delenv(name, raising=False)
