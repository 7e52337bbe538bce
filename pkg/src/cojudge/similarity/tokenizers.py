"""Language-aware code tokenization with keyword tagging.

Two grammar profiles ship by default: "cpp" (shared by C and C++ inputs;
C is deliberately lexed under the C++ profile) and "python". Unknown
languages fall back to a generic whitespace/punctuation split with no
keyword information, and the result is flagged so downstream scores can be
marked degraded.
"""

from __future__ import annotations

import io
import keyword as _python_keyword
import re
import tokenize as _py_tokenize
from dataclasses import dataclass

CPP_KEYWORDS = frozenset(
    """
    alignas alignof and and_eq asm auto bitand bitor bool break case catch
    char char16_t char32_t char8_t class co_await co_return co_yield compl
    concept const const_cast consteval constexpr constinit continue decltype
    default delete do double dynamic_cast else enum explicit export extern
    false float for friend goto if inline int long mutable namespace new
    noexcept not not_eq nullptr operator or or_eq private protected public
    register reinterpret_cast requires restrict return short signed sizeof
    static static_assert static_cast struct switch template this thread_local
    throw true try typedef typeid typename union unsigned using virtual void
    volatile wchar_t while xor xor_eq
    """.split()
)

PYTHON_KEYWORDS = frozenset(_python_keyword.kwlist) | frozenset(
    getattr(_python_keyword, "softkwlist", ())
)

GRAMMAR_PROFILES = ("cpp", "python")


@dataclass(frozen=True)
class Token:
    text: str
    is_keyword: bool = False


@dataclass(frozen=True)
class TokenizedCode:
    tokens: tuple[Token, ...]
    grammar: str | None
    fallback: bool

    def __len__(self) -> int:
        return len(self.tokens)


def resolve_grammar(language: str | None) -> str | None:
    """Map a free-form language token (e.g. "C++17", "GNU C", "Python3") to
    a grammar profile, or None when no profile covers it."""
    if not language:
        return None
    norm = re.sub(r"[^a-z0-9+]", "", language.lower())
    if "python" in norm or norm in ("py", "py3", "py2"):
        return "python"
    if "c++" in norm or "cpp" in norm or "cxx" in norm:
        return "cpp"
    if norm == "c" or norm.startswith(("c89", "c99", "c11", "c17", "gnuc", "ansic")):
        return "cpp"
    return None


_C_COMMENT_RE = re.compile(r"//[^\n]*|/\*.*?\*/", re.DOTALL)

_C_TOKEN_RE = re.compile(
    r"""
    "(?:\\.|[^"\\])*"            # string literal
    | '(?:\\.|[^'\\])*'          # char literal
    | 0[xXbB][0-9a-fA-F]+[uUlL]* # hex / binary number
    | (?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?[fFuUlL]*   # numeric literal
    | [A-Za-z_]\w*               # identifier / keyword
    | <<=|>>=|\.\.\.|->\*|::|->|\+\+|--|<<|>>|<=|>=|==|!=|&&|\|\||\+=|-=|\*=|/=|%=|&=|\|=|\^=|\#\#
    | \S                         # any remaining single symbol
    """,
    re.VERBOSE,
)

_FALLBACK_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


def _lex_cpp(code: str) -> list[Token]:
    stripped = _C_COMMENT_RE.sub(" ", code)
    return [
        Token(text=t, is_keyword=t in CPP_KEYWORDS)
        for t in _C_TOKEN_RE.findall(stripped)
    ]


def _lex_python(code: str) -> list[Token]:
    skip = {
        _py_tokenize.COMMENT,
        _py_tokenize.NL,
        _py_tokenize.NEWLINE,
        _py_tokenize.INDENT,
        _py_tokenize.DEDENT,
        _py_tokenize.ENCODING,
        _py_tokenize.ENDMARKER,
    }
    try:
        raw = list(_py_tokenize.generate_tokens(io.StringIO(code).readline))
    except (_py_tokenize.TokenError, IndentationError, SyntaxError):
        # Not tokenizable as Python; a plain lexical split still gives
        # usable n-grams and keeps keyword tagging.
        return [
            Token(text=t, is_keyword=t in PYTHON_KEYWORDS)
            for t in _FALLBACK_TOKEN_RE.findall(code)
        ]
    return [
        Token(text=t.string, is_keyword=t.string in PYTHON_KEYWORDS)
        for t in raw
        if t.type not in skip and t.string.strip()
    ]


def tokenize_code(code: str, grammar: str | None) -> TokenizedCode:
    """Lex code under a grammar profile.

    With an unknown or missing grammar the generic fallback split is used
    and the result carries ``fallback=True``.
    """
    if grammar == "cpp":
        return TokenizedCode(tuple(_lex_cpp(code)), "cpp", False)
    if grammar == "python":
        return TokenizedCode(tuple(_lex_python(code)), "python", False)
    tokens = tuple(Token(text=t) for t in _FALLBACK_TOKEN_RE.findall(code))
    return TokenizedCode(tokens, None, True)
