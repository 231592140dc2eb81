"""Lexing, normalization, and detokenization of LaTeX math source.

The token stream is deliberately flat: groups and environments are checked
for balance but never parsed into a tree.  The canonical text produced by
``detokenize(normalize(tokenize(s)))`` is what deduplication keys and
edit-distance scoring operate on, so the rules here are conservative --
they only rewrite forms that render identically (whitespace, redundant
braces, a small alias table).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Mapping


class TokenKind(Enum):
    COMMAND = "command"
    CHAR = "char"
    GROUP_OPEN = "group_open"
    GROUP_CLOSE = "group_close"
    SUPERSCRIPT = "superscript"
    SUBSCRIPT = "subscript"
    ALIGNMENT = "alignment"
    LINE_BREAK = "line_break"
    ENV_BEGIN = "env_begin"
    ENV_END = "env_end"
    WHITESPACE = "whitespace"


@dataclass(frozen=True)
class Token:
    """One lexical unit.

    ``text`` holds the command name without its backslash, the literal
    character for CHAR, or the environment name for ENV_BEGIN/ENV_END.
    """

    kind: TokenKind
    text: str

    @classmethod
    def command(cls, name: str) -> "Token":
        return cls(TokenKind.COMMAND, name)

    @classmethod
    def char(cls, ch: str) -> "Token":
        return cls(TokenKind.CHAR, ch)

    @classmethod
    def env_begin(cls, name: str) -> "Token":
        return cls(TokenKind.ENV_BEGIN, name)

    @classmethod
    def env_end(cls, name: str) -> "Token":
        return cls(TokenKind.ENV_END, name)


GROUP_OPEN = Token(TokenKind.GROUP_OPEN, "{")
GROUP_CLOSE = Token(TokenKind.GROUP_CLOSE, "}")
SUPERSCRIPT = Token(TokenKind.SUPERSCRIPT, "^")
SUBSCRIPT = Token(TokenKind.SUBSCRIPT, "_")
ALIGNMENT = Token(TokenKind.ALIGNMENT, "&")
LINE_BREAK = Token(TokenKind.LINE_BREAK, "\\\\")
WHITESPACE = Token(TokenKind.WHITESPACE, " ")


class LexErrorKind(Enum):
    UNBALANCED_GROUP = "unbalanced_group"
    UNTERMINATED_COMMAND = "unterminated_command"
    MISMATCHED_ENVIRONMENT = "mismatched_environment"


class LexError(Exception):
    """Lexing failure; ``offset`` indexes into the source string."""

    def __init__(self, kind: LexErrorKind, offset: int, message: str):
        super().__init__(f"{kind.value} at offset {offset}: {message}")
        self.kind = kind
        self.offset = offset


def source_hash(src: str) -> int:
    """Stable 64-bit hash of a raw source string."""
    digest = hashlib.blake2b(src.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


@dataclass(frozen=True)
class TokenSeq:
    tokens: tuple[Token, ...]
    source_hash: int

    def __iter__(self) -> Iterator[Token]:
        return iter(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def token_equals(self, other: "TokenSeq") -> bool:
        return self.tokens == other.tokens

    def validate(self) -> None:
        """Check group balance and LIFO environment nesting."""
        depth = 0
        envs: list[str] = []
        for tok in self.tokens:
            if tok.kind is TokenKind.GROUP_OPEN:
                depth += 1
            elif tok.kind is TokenKind.GROUP_CLOSE:
                depth -= 1
                if depth < 0:
                    raise ValueError("unbalanced group close")
            elif tok.kind is TokenKind.ENV_BEGIN:
                envs.append(tok.text)
            elif tok.kind is TokenKind.ENV_END:
                if not envs or envs.pop() != tok.text:
                    raise ValueError(f"mismatched environment {tok.text!r}")
        if depth != 0:
            raise ValueError("unbalanced group open")
        if envs:
            raise ValueError(f"unclosed environment {envs[-1]!r}")


_ASCII_LETTERS = frozenset("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ")
_ENV_NAME_CHARS = _ASCII_LETTERS | frozenset("0123456789*")


def _is_ascii_letter(ch: str) -> bool:
    return ch in _ASCII_LETTERS


def tokenize(src: str, *, keep_whitespace: bool = False) -> TokenSeq:
    """Lex LaTeX math source into a flat, balance-checked token stream.

    Comments (``%`` to end of line) are skipped.  Whitespace is dropped by
    default, matching TeX math mode; with ``keep_whitespace`` each run
    becomes a single WHITESPACE token, except runs directly after a control
    word, which TeX consumes.

    Raises LexError on unbalanced groups, a trailing backslash, or
    mismatched/malformed environments.
    """
    tokens: list[Token] = []
    group_stack: list[int] = []
    env_stack: list[tuple[str, int]] = []
    n = len(src)
    i = 0
    eat_ws = False  # currently inside post-control-word whitespace
    while i < n:
        ch = src[i]
        if ch == "%":
            while i < n and src[i] != "\n":
                i += 1
            continue
        if ch.isspace():
            j = i
            while j < n and src[j].isspace():
                j += 1
            if keep_whitespace and not eat_ws:
                tokens.append(WHITESPACE)
            i = j
            continue
        eat_ws = False
        if ch == "\\":
            if i + 1 >= n:
                raise LexError(
                    LexErrorKind.UNTERMINATED_COMMAND, i, "lone backslash at end of input"
                )
            nxt = src[i + 1]
            if nxt == "\\":
                tokens.append(LINE_BREAK)
                i += 2
                continue
            if _is_ascii_letter(nxt):
                j = i + 1
                while j < n and _is_ascii_letter(src[j]):
                    j += 1
                name = src[i + 1 : j]
                if name in ("begin", "end"):
                    env_name, j = _scan_env_name(src, j, i)
                    if name == "begin":
                        env_stack.append((env_name, i))
                        tokens.append(Token.env_begin(env_name))
                    else:
                        if not env_stack or env_stack[-1][0] != env_name:
                            raise LexError(
                                LexErrorKind.MISMATCHED_ENVIRONMENT,
                                i,
                                f"\\end{{{env_name}}} does not close the current environment",
                            )
                        env_stack.pop()
                        tokens.append(Token.env_end(env_name))
                else:
                    tokens.append(Token.command(name))
                eat_ws = True
                i = j
                continue
            tokens.append(Token.command(nxt))
            i += 2
            continue
        if ch == "{":
            group_stack.append(i)
            tokens.append(GROUP_OPEN)
        elif ch == "}":
            if not group_stack:
                raise LexError(LexErrorKind.UNBALANCED_GROUP, i, "unmatched '}'")
            group_stack.pop()
            tokens.append(GROUP_CLOSE)
        elif ch == "^":
            tokens.append(SUPERSCRIPT)
        elif ch == "_":
            tokens.append(SUBSCRIPT)
        elif ch == "&":
            tokens.append(ALIGNMENT)
        else:
            tokens.append(Token.char(ch))
        i += 1
    if group_stack:
        raise LexError(LexErrorKind.UNBALANCED_GROUP, group_stack[-1], "unmatched '{'")
    if env_stack:
        name, offset = env_stack[-1]
        raise LexError(
            LexErrorKind.MISMATCHED_ENVIRONMENT, offset, f"unclosed environment {name!r}"
        )
    return TokenSeq(tuple(tokens), source_hash(src))


def _scan_env_name(src: str, j: int, cmd_offset: int) -> tuple[str, int]:
    """Parse ``{name}`` after \\begin or \\end; returns (name, next index)."""
    n = len(src)
    while j < n and src[j].isspace():
        j += 1
    if j >= n or src[j] != "{":
        raise LexError(
            LexErrorKind.MISMATCHED_ENVIRONMENT, cmd_offset, "expected '{name}'"
        )
    j += 1
    start = j
    while j < n and src[j] in _ENV_NAME_CHARS:
        j += 1
    name = src[start:j]
    if not name or j >= n or src[j] != "}":
        raise LexError(
            LexErrorKind.MISMATCHED_ENVIRONMENT, cmd_offset, "malformed environment name"
        )
    return name, j + 1


def detokenize(seq: TokenSeq) -> str:
    """Render a token stream back to source text.

    Inserts the minimal separators needed so the output retokenizes to the
    same stream: a space between a letter-named command and a following
    ASCII letter.
    """
    parts: list[str] = []
    prev: Token | None = None
    for tok in seq.tokens:
        if (
            prev is not None
            and prev.kind is TokenKind.COMMAND
            and _is_ascii_letter(prev.text[0])
            and tok.kind is TokenKind.CHAR
            and _is_ascii_letter(tok.text)
        ):
            parts.append(" ")
        parts.append(_render_token(tok))
        prev = tok
    return "".join(parts)


def _render_token(tok: Token) -> str:
    kind = tok.kind
    if kind is TokenKind.COMMAND:
        return "\\" + tok.text
    if kind is TokenKind.ENV_BEGIN:
        return "\\begin{" + tok.text + "}"
    if kind is TokenKind.ENV_END:
        return "\\end{" + tok.text + "}"
    if kind is TokenKind.LINE_BREAK:
        return "\\\\"
    return tok.text  # CHAR, group/script/alignment markers, whitespace


DEFAULT_ALIASES: Mapping[str, str] = {
    "dfrac": "frac",
    "tfrac": "frac",
    "le": "leq",
    "ge": "geq",
}

# Commands whose vertical extent makes \left/\right sizing meaningful.
_TALL_COMMANDS = frozenset(
    {
        "frac", "cfrac", "binom", "sqrt", "sum", "prod", "coprod", "int",
        "oint", "iint", "iiint", "bigcup", "bigcap", "stackrel", "overline",
        "underline", "overbrace", "underbrace", "substack", "over", "atop",
    }
)


@dataclass(frozen=True)
class NormalizeConfig:
    """Knobs for :func:`normalize`.

    ``plain_delimiters`` turns on the rewrite of \\left( ... \\right) pairs
    to bare delimiters when the enclosed content has no tall construct; it
    is off by default because sizing commands are harmless to keep.
    """

    aliases: Mapping[str, str] = None  # type: ignore[assignment]
    strip_inline_delimiters: bool = True
    plain_delimiters: bool = False

    def __post_init__(self):
        if self.aliases is None:
            object.__setattr__(self, "aliases", DEFAULT_ALIASES)


DEFAULT_NORMALIZE = NormalizeConfig()


def normalize(seq: TokenSeq, config: NormalizeConfig | None = None) -> TokenSeq:
    """Rewrite a token stream to its canonical form.

    Applied rules: drop whitespace tokens; alias commands (\\dfrac to
    \\frac etc.) and strip \\( \\) delimiter commands; brace bare
    single-token script arguments; strip redundant singleton groups that
    are not script or command arguments; optionally flatten trivial
    \\left/\\right pairs.  The result is a fixed point of the rewrite.
    """
    cfg = config or DEFAULT_NORMALIZE
    toks = list(seq.tokens)
    for _ in range(len(toks) + 2):
        new = _normalize_once(toks, cfg)
        if new == toks:
            break
        toks = new
    return TokenSeq(tuple(toks), seq.source_hash)


def _normalize_once(toks: list[Token], cfg: NormalizeConfig) -> list[Token]:
    out: list[Token] = []
    for tok in toks:
        if tok.kind is TokenKind.WHITESPACE:
            continue
        if tok.kind is TokenKind.COMMAND:
            if cfg.strip_inline_delimiters and tok.text in ("(", ")"):
                continue
            alias = cfg.aliases.get(tok.text)
            if alias is not None:
                tok = Token.command(alias)
        out.append(tok)
    out = _brace_script_arguments(out)
    out = _strip_singleton_groups(out)
    if cfg.plain_delimiters:
        out = _flatten_short_delimiters(out)
    return out


def _brace_script_arguments(toks: list[Token]) -> list[Token]:
    out: list[Token] = []
    i = 0
    n = len(toks)
    while i < n:
        tok = toks[i]
        out.append(tok)
        if (
            tok.kind in (TokenKind.SUPERSCRIPT, TokenKind.SUBSCRIPT)
            and i + 1 < n
            and toks[i + 1].kind in (TokenKind.CHAR, TokenKind.COMMAND)
        ):
            out.append(GROUP_OPEN)
            out.append(toks[i + 1])
            out.append(GROUP_CLOSE)
            i += 2
            continue
        i += 1
    return out


def _strip_singleton_groups(toks: list[Token]) -> list[Token]:
    match: dict[int, int] = {}
    stack: list[int] = []
    for i, tok in enumerate(toks):
        if tok.kind is TokenKind.GROUP_OPEN:
            stack.append(i)
        elif tok.kind is TokenKind.GROUP_CLOSE:
            match[stack.pop()] = i

    # A group is protected when it serves as an argument: directly after a
    # command/script/env-begin token, or chained after a previous argument
    # group of the same command (second argument of \frac and friends).
    protected: set[int] = set()
    chain_close: set[int] = set()
    for i in sorted(match):
        prev = toks[i - 1] if i > 0 else None
        if prev is None:
            continue
        if prev.kind in (TokenKind.COMMAND, TokenKind.ENV_BEGIN):
            protected.add(i)
            chain_close.add(match[i])
        elif prev.kind in (TokenKind.SUPERSCRIPT, TokenKind.SUBSCRIPT):
            protected.add(i)
        elif prev.kind is TokenKind.GROUP_CLOSE and (i - 1) in chain_close:
            protected.add(i)
            chain_close.add(match[i])

    drop: set[int] = set()
    for i, j in match.items():
        if j == i + 2 and i not in protected and toks[i + 1].kind in (
            TokenKind.CHAR,
            TokenKind.COMMAND,
        ):
            drop.add(i)
            drop.add(j)
    if not drop:
        return toks
    return [tok for k, tok in enumerate(toks) if k not in drop]


def _flatten_short_delimiters(toks: list[Token]) -> list[Token]:
    n = len(toks)
    drop: set[int] = set()
    i = 0
    while i < n:
        tok = toks[i]
        if tok.kind is TokenKind.COMMAND and tok.text == "left" and i + 1 < n:
            right = _matching_right(toks, i)
            if right is not None and not _has_tall_construct(toks, i + 2, right):
                drop.add(i)
                drop.add(right)
                if toks[i + 1].kind is TokenKind.CHAR and toks[i + 1].text == ".":
                    drop.add(i + 1)
                if right + 1 < n and toks[right + 1].kind is TokenKind.CHAR and toks[
                    right + 1
                ].text == ".":
                    drop.add(right + 1)
        i += 1
    if not drop:
        return toks
    return [tok for k, tok in enumerate(toks) if k not in drop]


def _matching_right(toks: list[Token], left_idx: int) -> int | None:
    depth = 0
    for j in range(left_idx, len(toks)):
        tok = toks[j]
        if tok.kind is TokenKind.COMMAND and tok.text == "left":
            depth += 1
        elif tok.kind is TokenKind.COMMAND and tok.text == "right":
            depth -= 1
            if depth == 0:
                return j
    return None


def _has_tall_construct(toks: list[Token], start: int, end: int) -> bool:
    for tok in toks[start:end]:
        if tok.kind in (TokenKind.ENV_BEGIN, TokenKind.LINE_BREAK):
            return True
        if tok.kind is TokenKind.COMMAND and (
            tok.text in _TALL_COMMANDS or tok.text == "left"
        ):
            return True
    return False
