import pytest

from typoline.synthetic import make_plan


@pytest.fixture
def write_file(tmp_path):
    """Write a UTF-8 file under tmp_path and return its path"""
    def _write(name, text):
        path = tmp_path / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        return path
    return _write


@pytest.fixture(scope="session")
def plan():
    return make_plan()
