"""
File helpers: atomic writes, verse-ID lists and file-name conventions.
"""
import os
import tempfile
import unicodedata
from pathlib import Path
from typing import Iterable, List, Union

from typoline.errors import DuplicateVerseId, InvalidVerseId
from typoline.models import is_iso_code, is_verse_id

PathLike = Union[str, Path]


def read_text(path: PathLike) -> str:
    """Read a UTF-8 document, normalized to NFC"""
    return unicodedata.normalize("NFC", Path(path).read_text(encoding="utf-8"))


def write_text_atomic(path: PathLike, text: str) -> None:
    """
    Write a UTF-8 document via a temporary file and a rename.

    Args:
        path (PathLike): Destination file
        text (str): Document content
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def language_from_path(path: PathLike) -> str:
    """
    Derive the ISO code from a '<iso>.txt' / '<iso>.tagged.txt' file name.

    Returns:
        str: The ISO code, or 'und' when the name does not start with one
    """
    stem = Path(path).name.split(".", 1)[0]
    return stem if is_iso_code(stem) else "und"


def parse_id_list(text: str) -> List[str]:
    """
    Parse one verse ID per line ('#' comments and blank lines skipped).

    Raises:
        InvalidVerseId: On a line that is not an 8-digit ID
        DuplicateVerseId: On a repeated ID
    """
    ids = []
    seen = set()
    for line_number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if not is_verse_id(line):
            raise InvalidVerseId(line)
        if line in seen:
            raise DuplicateVerseId(line, line_number)
        seen.add(line)
        ids.append(line)
    return ids


def serialize_id_list(ids: Iterable[str]) -> str:
    return "".join(f"{verse_id}\n" for verse_id in ids)
