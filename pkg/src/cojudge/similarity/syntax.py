"""Node-type-labeled syntax trees and the subtree containment score.

Python code is parsed with the stdlib ``ast`` module. C and C++ code go
through a compact structural parser: bracket nesting plus statement
segmentation, with statements labeled by their leading keyword. Identifier
and literal text never enters the tree (identifiers collapse to "id",
numbers to "num", strings to "str"), so the score measures structure, not
naming.

The score is the fraction of the reference tree's internal subtrees that
occur, by structural equality, anywhere in the candidate tree. A reference
with no internal subtrees (empty or unparseable code) scores 1.0 by the
vacuous-match convention.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass

from cojudge.similarity.tokenizers import GRAMMAR_PROFILES, Token, _lex_cpp


class NoGrammar(LookupError):
    """No syntax grammar is available for the requested profile."""


@dataclass(frozen=True)
class SyntaxNode:
    label: str
    children: tuple["SyntaxNode", ...] = ()


_EMPTY_TREE = SyntaxNode("empty")


def parse_code(code: str, grammar: str | None) -> SyntaxNode:
    if grammar == "python":
        return _parse_python(code)
    if grammar == "cpp":
        return _parse_cpp(code)
    raise NoGrammar(f"no syntax grammar for profile {grammar!r}")


def _parse_python(code: str) -> SyntaxNode:
    try:
        tree = ast.parse(code)
    except (SyntaxError, ValueError):
        return _EMPTY_TREE
    return _from_ast(tree)


def _from_ast(node: ast.AST) -> SyntaxNode:
    children = tuple(_from_ast(c) for c in ast.iter_child_nodes(node))
    return SyntaxNode(label=type(node).__name__, children=children)


def _leaf(token: Token) -> SyntaxNode:
    if token.is_keyword:
        return SyntaxNode(token.text)
    text = token.text
    if text[0].isalpha() or text[0] == "_":
        return SyntaxNode("id")
    if text[0].isdigit() or (text[0] == "." and len(text) > 1 and text[1].isdigit()):
        return SyntaxNode("num")
    if text[0] in ("'", '"'):
        return SyntaxNode("str")
    return SyntaxNode(text)


_OPENERS = {"{": "block", "(": "parens", "[": "brackets"}
_CLOSERS = {"}": "{", ")": "(", "]": "["}


def _parse_cpp(code: str) -> SyntaxNode:
    tokens = _lex_cpp(code)
    pos = 0

    def parse_group(kind: str, closer: str | None) -> SyntaxNode:
        nonlocal pos
        items: list[SyntaxNode] = []
        stmt: list[SyntaxNode] = []
        head_keyword: str | None = None

        def close_stmt() -> None:
            nonlocal head_keyword
            if stmt:
                label = f"stmt_{head_keyword}" if head_keyword else "stmt"
                items.append(SyntaxNode(label, tuple(stmt)))
                stmt.clear()
            head_keyword = None

        while pos < len(tokens):
            tok = tokens[pos]
            if closer is not None and tok.text in _CLOSERS and _CLOSERS[tok.text] == closer:
                pos += 1
                break
            if tok.text in _OPENERS:
                opener = tok.text
                pos += 1
                stmt.append(parse_group(_OPENERS[opener], opener))
                if opener == "{":
                    # A brace group ends the enclosing statement (function
                    # bodies, control-flow bodies, initializer lists).
                    close_stmt()
                continue
            if tok.text in _CLOSERS:
                # Stray closer: drop it rather than failing the parse.
                pos += 1
                continue
            if tok.text == ";":
                pos += 1
                close_stmt()
                continue
            if not stmt and tok.is_keyword:
                head_keyword = tok.text
            stmt.append(_leaf(tok))
            pos += 1
        close_stmt()
        return SyntaxNode(kind, tuple(items))

    return parse_group("translation_unit", None)


def _signature(node: SyntaxNode) -> tuple:
    return (node.label, tuple(_signature(c) for c in node.children))


def _internal_subtrees(node: SyntaxNode, out: list[tuple]) -> None:
    if node.children:
        out.append(_signature(node))
        for c in node.children:
            _internal_subtrees(c, out)


def syntax_match(candidate: str, reference: str, grammar: str | None) -> float:
    """Fraction of the reference's internal subtrees present in the candidate."""
    if grammar not in GRAMMAR_PROFILES:
        raise NoGrammar(f"no syntax grammar for profile {grammar!r}")
    cand_tree = parse_code(candidate, grammar)
    ref_tree = parse_code(reference, grammar)
    ref_subtrees: list[tuple] = []
    _internal_subtrees(ref_tree, ref_subtrees)
    if not ref_subtrees:
        return 1.0
    cand_subtrees: list[tuple] = []
    _internal_subtrees(cand_tree, cand_subtrees)
    cand_set = set(cand_subtrees)
    matched = sum(1 for sig in ref_subtrees if sig in cand_set)
    return matched / len(ref_subtrees)
