"""Locale tables: key/value files holding every generated surface string."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .errors import MissingLocaleKeyError


class LocaleTable:
    """Immutable string table with dotted keys like ``pattern.a.pitch``."""

    def __init__(self, entries: dict[str, str], name: str = "<inline>"):
        self._entries = dict(entries)
        self.name = name

    def get(self, key: str) -> str:
        try:
            return self._entries[key]
        except KeyError:
            raise MissingLocaleKeyError(key) from None

    def has(self, key: str) -> bool:
        return key in self._entries

    def keys(self) -> list[str]:
        return sorted(self._entries)

    def __repr__(self) -> str:
        return f"LocaleTable({self.name!r}, {len(self._entries)} keys)"


def parse_locale_text(text: str, name: str = "<inline>") -> LocaleTable:
    entries: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            continue
        entries[key.strip()] = value.strip()
    return LocaleTable(entries, name)


def load_locale(spec: str | Path = "en") -> LocaleTable:
    """Load a locale by shipped name (``en``, ``ja``) or by file path."""
    spec = str(spec)
    packaged = resources.files("sentext").joinpath("locales").joinpath(f"{spec}.txt")
    if "/" not in spec and "\\" not in spec and packaged.is_file():
        return parse_locale_text(packaged.read_text(encoding="utf-8"), spec)
    path = Path(spec)
    return parse_locale_text(path.read_text(encoding="utf-8"), path.name)
