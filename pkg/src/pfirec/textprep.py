"""Markdown stripping and token normalization.

Every text that enters a Jaccard or embedding comparison goes through
``extract_plain_text`` followed by ``normalize``, so both sides of any
similarity are preprocessed identically.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import FrozenSet, Iterable, Optional

__all__ = [
    "TokenSet",
    "extract_plain_text",
    "normalize",
    "porter_stem",
    "load_stopwords",
    "default_stopwords",
]

_FENCED_CODE = re.compile(r"(```|~~~).*?\1", re.DOTALL)
_INLINE_CODE = re.compile(r"`[^`\n]*`")
_IMAGE = re.compile(r"!\[[^\]]*\]\([^)]*\)")
_LINK = re.compile(r"\[([^\]]*)\]\(\s*[^)]*\)")
_REF_LINK = re.compile(r"\[([^\]]*)\]\[[^\]]*\]")
_BARE_URL = re.compile(r"(?:https?|ftp)://[^\s)\]>]+", re.IGNORECASE)
_HTML_TAG = re.compile(r"</?[A-Za-z][^>\n]*>")
_LIST_MARKER = re.compile(r"^\s*(?:[-+*]+|\d+[.)])\s+", re.MULTILINE)
_MD_MARKERS = re.compile(r"[`*_~#>|\\]")
_WS = re.compile(r"\s+")
_WORD = re.compile(r"[a-z0-9]+")

_MIN_TOKEN_LEN = 2


@dataclass(frozen=True)
class TokenSet:
    """Deduplicated normalized tokens plus the pre-dedup token count."""

    tokens: FrozenSet[str]
    token_count_raw: int

    def __len__(self) -> int:
        return len(self.tokens)


def extract_plain_text(markdown: str) -> str:
    """Strip a markdown document down to plain prose.

    Fenced and inline code spans are removed, images are removed entirely,
    links keep only their anchor text, bare URLs are dropped, and leftover
    markdown markers are stripped. Unmatched code fences are treated as
    literal text (their backticks still get stripped as markers).
    """
    text = markdown.replace("\r\n", "\n")
    text = _FENCED_CODE.sub(" ", text)
    text = _IMAGE.sub(" ", text)
    text = _LINK.sub(r" \1 ", text)
    text = _REF_LINK.sub(r" \1 ", text)
    text = _INLINE_CODE.sub(" ", text)
    text = _BARE_URL.sub(" ", text)
    text = _HTML_TAG.sub(" ", text)
    text = _LIST_MARKER.sub(" ", text)
    text = _MD_MARKERS.sub(" ", text)
    return _WS.sub(" ", text).strip()


def load_stopwords(path: str | Path) -> FrozenSet[str]:
    """Load a one-word-per-line stop-word file ('#' lines are comments)."""
    words = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        word = line.strip().lower()
        if word and not word.startswith("#"):
            words.add(word)
    return frozenset(words)


def default_stopwords() -> FrozenSet[str]:
    """The stop-word list bundled with the package."""
    global _DEFAULT_STOPWORDS
    if _DEFAULT_STOPWORDS is None:
        ref = resources.files("pfirec.data").joinpath("stopwords.txt")
        words = set()
        for line in ref.read_text(encoding="utf-8").splitlines():
            word = line.strip().lower()
            if word and not word.startswith("#"):
                words.add(word)
        _DEFAULT_STOPWORDS = frozenset(words)
    return _DEFAULT_STOPWORDS


_DEFAULT_STOPWORDS: Optional[FrozenSet[str]] = None


def normalize(text: str, stopwords: Optional[Iterable[str]] = None) -> TokenSet:
    """Lowercase, split on non-alphanumerics, stem, and drop stop words.

    Tokens shorter than 2 characters are dropped. The stop-word filter
    runs both before and after stemming so no stemmed form can collide
    with a stop word. ``token_count_raw`` counts surviving tokens before
    deduplication.
    """
    stop = frozenset(stopwords) if stopwords is not None else default_stopwords()
    kept = []
    for word in _WORD.findall(text.lower()):
        if len(word) < _MIN_TOKEN_LEN or word in stop:
            continue
        stemmed = porter_stem(word)
        if len(stemmed) < _MIN_TOKEN_LEN or stemmed in stop:
            continue
        kept.append(stemmed)
    return TokenSet(tokens=frozenset(kept), token_count_raw=len(kept))


# ---------------------------------------------------------------------------
# Porter stemmer
# ---------------------------------------------------------------------------

_VOWELS = "aeiou"


def _is_consonant(word: str, i: int) -> bool:
    ch = word[i]
    if ch in _VOWELS:
        return False
    if ch == "y":
        return i == 0 or not _is_consonant(word, i - 1)
    return True


def _measure(stem: str) -> int:
    """Number of VC sequences in [C](VC)^m[V]."""
    m = 0
    prev_vowel = False
    for i in range(len(stem)):
        vowel = not _is_consonant(stem, i)
        if prev_vowel and not vowel:
            m += 1
        prev_vowel = vowel
    return m


def _contains_vowel(stem: str) -> bool:
    return any(not _is_consonant(stem, i) for i in range(len(stem)))


def _ends_double_consonant(word: str) -> bool:
    return (
        len(word) >= 2
        and word[-1] == word[-2]
        and _is_consonant(word, len(word) - 1)
    )


def _ends_cvc(word: str) -> bool:
    if len(word) < 3:
        return False
    return (
        _is_consonant(word, len(word) - 3)
        and not _is_consonant(word, len(word) - 2)
        and _is_consonant(word, len(word) - 1)
        and word[-1] not in "wxy"
    )


_STEP2_RULES = (
    ("ational", "ate"), ("tional", "tion"), ("enci", "ence"), ("anci", "ance"),
    ("izer", "ize"), ("abli", "able"), ("alli", "al"), ("entli", "ent"),
    ("eli", "e"), ("ousli", "ous"), ("ization", "ize"), ("ation", "ate"),
    ("ator", "ate"), ("alism", "al"), ("iveness", "ive"), ("fulness", "ful"),
    ("ousness", "ous"), ("aliti", "al"), ("iviti", "ive"), ("biliti", "ble"),
)

_STEP3_RULES = (
    ("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
    ("ical", "ic"), ("ful", ""), ("ness", ""),
)

_STEP4_SUFFIXES = (
    "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement",
    "ment", "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
)


def _porter_once(word: str) -> str:
    if len(word) <= 2:
        return word

    # Step 1a
    if word.endswith("sses"):
        word = word[:-2]
    elif word.endswith("ies"):
        word = word[:-2]
    elif word.endswith("ss"):
        pass
    elif word.endswith("s"):
        word = word[:-1]

    # Step 1b
    if word.endswith("eed"):
        if _measure(word[:-3]) > 0:
            word = word[:-1]
    else:
        fired = False
        if word.endswith("ed") and _contains_vowel(word[:-2]):
            word = word[:-2]
            fired = True
        elif word.endswith("ing") and _contains_vowel(word[:-3]):
            word = word[:-3]
            fired = True
        if fired:
            if word.endswith(("at", "bl", "iz")):
                word += "e"
            elif _ends_double_consonant(word) and word[-1] not in "lsz":
                word = word[:-1]
            elif _measure(word) == 1 and _ends_cvc(word):
                word += "e"

    # Step 1c
    if word.endswith("y") and _contains_vowel(word[:-1]):
        word = word[:-1] + "i"

    # Step 2
    for suffix, repl in _STEP2_RULES:
        if word.endswith(suffix):
            stem = word[: -len(suffix)]
            if _measure(stem) > 0:
                word = stem + repl
            break

    # Step 3
    for suffix, repl in _STEP3_RULES:
        if word.endswith(suffix):
            stem = word[: -len(suffix)]
            if _measure(stem) > 0:
                word = stem + repl
            break

    # Step 4
    for suffix in _STEP4_SUFFIXES:
        if word.endswith(suffix):
            stem = word[: -len(suffix)]
            if _measure(stem) > 1:
                if suffix == "ion" and (not stem or stem[-1] not in "st"):
                    break
                word = stem
            break

    # Step 5a
    if word.endswith("e"):
        stem = word[:-1]
        m = _measure(stem)
        if m > 1 or (m == 1 and not _ends_cvc(stem)):
            word = stem

    # Step 5b
    if _measure(word) > 1 and _ends_double_consonant(word) and word[-1] == "l":
        word = word[:-1]

    return word


@lru_cache(maxsize=1 << 20)
def porter_stem(word: str, _max_passes: int = 5) -> str:
    """Porter suffix stripping, iterated to a fixpoint.

    A single Porter pass is not idempotent for every word; re-stemming
    until stable keeps normalize() idempotent on its own output.
    """
    for _ in range(_max_passes):
        stemmed = _porter_once(word)
        if stemmed == word:
            return word
        word = stemmed
    return word
