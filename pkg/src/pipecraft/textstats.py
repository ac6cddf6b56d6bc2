"""Text-level quality metrics shared by cleaning filters, the screener, and scoring."""
from __future__ import annotations

import html
import re
import unicodedata

# Alphabet treated as ordinary content: letters in any script, decimal digits,
# whitespace, and common sentence punctuation. Everything else is "special".
ALLOWED_PUNCTUATION = set(".,!?;:'\"()-")

_TAG_RE = re.compile(r"<!--.*?-->|</?[A-Za-z][^<>]*>", re.DOTALL)
_WS_RUN_RE = re.compile(r"\s+")
_MAX_CLEAN_PASSES = 8

_CJK_RANGES = (
    (0x3040, 0x30FF),    # hiragana, katakana
    (0x3400, 0x4DBF),    # CJK extension A
    (0x4E00, 0x9FFF),    # CJK unified
    (0xAC00, 0xD7AF),    # hangul syllables
    (0xF900, 0xFAFF),    # CJK compatibility
    (0x20000, 0x2EBEF),  # CJK extensions B..F
)


def is_cjk(ch: str) -> bool:
    code = ord(ch)
    return any(lo <= code <= hi for lo, hi in _CJK_RANGES)


def _clean_once(text: str) -> str:
    text = html.unescape(text)
    text = _TAG_RE.sub(" ", text)
    text = "".join(ch for ch in text if unicodedata.category(ch) != "Cc")
    text = _WS_RUN_RE.sub(" ", text)
    return text.strip()


def clean_text(text: str) -> str:
    """Remove markup tags, entity escapes, and control characters; collapse
    whitespace runs. Iterates to a fixed point so the result is idempotent
    even when unescaping exposes new markup."""
    for _ in range(_MAX_CLEAN_PASSES):
        cleaned = _clean_once(text)
        if cleaned == text:
            return cleaned
        text = cleaned
    return text


def is_allowed_char(ch: str) -> bool:
    """True for letters in any script, decimal digits, whitespace, and the
    allowed punctuation set."""
    if ch.isspace() or ch in ALLOWED_PUNCTUATION:
        return True
    category = unicodedata.category(ch)
    return category.startswith("L") or category == "Nd"


def special_char_ratio(text: str) -> float:
    """Fraction of characters outside the allowed alphabet; empty text -> 0."""
    if not text:
        return 0.0
    special = sum(1 for ch in text if not is_allowed_char(ch))
    return special / len(text)


def tokenize(text: str) -> list[str]:
    """Whitespace-split tokens, with every CJK codepoint its own token."""
    tokens: list[str] = []
    for chunk in text.split():
        buf = ""
        for ch in chunk:
            if is_cjk(ch):
                if buf:
                    tokens.append(buf)
                    buf = ""
                tokens.append(ch)
            else:
                buf += ch
        if buf:
            tokens.append(buf)
    return tokens


def token_count(text: str) -> int:
    return len(tokenize(text))


def ngram_repetition_ratio(text: str, n: int) -> float:
    """1 - (distinct word n-grams / total word n-grams); short texts -> 0."""
    if n < 1:
        raise ValueError("n must be >= 1")
    tokens = tokenize(text)
    total = len(tokens) - n + 1
    if total < 1:
        return 0.0
    grams = {tuple(tokens[i : i + n]) for i in range(total)}
    return 1.0 - len(grams) / total


def length_adequacy(text: str, floor_tokens: int) -> float:
    """Bounded score in [0, 1]: ramps linearly up to ``floor_tokens`` tokens."""
    floor_tokens = max(1, floor_tokens)
    return min(1.0, token_count(text) / floor_tokens)
