"""Wordlist and synonym-file loading for statement keyword rules.

A wordlist file is newline-delimited, one word per line, ``#`` comments and
blank lines ignored. A synonyms file maps ``word:synonym1,synonym2`` per
line; loading a wordlist through a synonym map expands every listed word
with its synonyms, so a keyword rule matches any of them (a flat stand-in
for knowledge-base enrichment of statement text).
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .errors import ConfigError

STATEMENT_WORDS = "statement_words"
CATEGORY_WORDS = "category_words"
DEFAULT_WORDLIST_NAMES = (STATEMENT_WORDS, CATEGORY_WORDS)


def _read_lines(text: str) -> list[str]:
    lines = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip().lower()
        if line:
            lines.append(line)
    return lines


def parse_wordlist(text: str) -> frozenset[str]:
    return frozenset(_read_lines(text))


def parse_synonyms(text: str) -> dict[str, frozenset[str]]:
    mapping: dict[str, frozenset[str]] = {}
    for line in _read_lines(text):
        if ":" not in line:
            raise ConfigError(f"synonym line must be 'word:syn1,syn2': {line!r}")
        word, _, rest = line.partition(":")
        synonyms = frozenset(s.strip() for s in rest.split(",") if s.strip())
        mapping[word.strip()] = synonyms
    return mapping


def expand_with_synonyms(
    words: frozenset[str], synonyms: dict[str, frozenset[str]]
) -> frozenset[str]:
    expanded = set(words)
    for word in words:
        expanded |= synonyms.get(word, frozenset())
    return frozenset(expanded)


def load_wordlist(path: str | Path, synonyms_path: str | Path | None = None) -> frozenset[str]:
    words = parse_wordlist(Path(path).read_text(encoding="utf-8"))
    if synonyms_path is not None:
        synonyms = parse_synonyms(Path(synonyms_path).read_text(encoding="utf-8"))
        words = expand_with_synonyms(words, synonyms)
    return words


def _packaged(name: str) -> str:
    return resources.files("amlpipe.data").joinpath(name).read_text(encoding="utf-8")


def default_wordlists() -> dict[str, frozenset[str]]:
    """The packaged statement/category wordlists, synonym-expanded."""
    synonyms = parse_synonyms(_packaged("synonyms.txt"))
    return {
        STATEMENT_WORDS: expand_with_synonyms(
            parse_wordlist(_packaged("statement_words.txt")), synonyms
        ),
        CATEGORY_WORDS: expand_with_synonyms(
            parse_wordlist(_packaged("category_words.txt")), synonyms
        ),
    }
