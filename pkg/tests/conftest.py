from pathlib import Path
from typing import Callable

import pytest

from mixop.bo.forms import FormContext, build_context
from mixop.bo.mesh import build_space


@pytest.fixture(scope="module")
def ctx_p2() -> FormContext:
    return build_context(build_space(32, 2.0, 0.5))


@pytest.fixture(scope="module")
def ctx_p3() -> FormContext:
    return build_context(build_space(32, 3.0, 0.5))


@pytest.fixture
def write_config(tmp_path: Path) -> Callable[[str], Path]:
    """Write a TOML problem file into ``tmp_path`` and return its path."""

    def _write(text: str, name: str = "problem.toml") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write
