"""Atom encodings shared by all constructions.

Derived elements are plain strings so every construction serializes stably:
tuples are ``(a,b,c)``, tagged elements ``L:a``, quotient classes ``q:a`` and
sets of atoms ``{a,b}``.

Atoms must have balanced brackets and no comma outside them, otherwise two
different tuples could share an encoding.
"""
from typing import Iterable, List, Optional, Sequence, Tuple

from src.errors import ValueOutOfDomain

_OPEN = "([{"
_CLOSE = ")]}"


def atom_problem(atom: str) -> Optional[str]:
    """Why ``atom`` cannot sit inside a tuple or set encoding, or None."""
    depth = 0
    for ch in atom:
        if ch in _OPEN:
            depth += 1
        elif ch in _CLOSE:
            depth -= 1
            if depth < 0:
                return "unbalanced brackets"
        elif ch == "," and depth == 0:
            return "a comma outside brackets"
    return "unbalanced brackets" if depth else None


def check_atom(atom: str) -> str:
    """Validator for user-supplied atoms; raises ValueError so schemas can report it."""
    if atom == "":
        raise ValueError("atoms must not be empty")
    problem = atom_problem(atom)
    if problem:
        raise ValueError(f"atom {atom!r} has {problem}")
    return atom


def _check_parts(parts: Sequence[str], what: str) -> None:
    if len(parts) == 1 and parts[0] == "":
        raise ValueOutOfDomain(f"a {what} of just the empty atom collides with the empty {what}")
    for p in parts:
        problem = atom_problem(p)
        if problem:
            raise ValueOutOfDomain(f"cannot encode {p!r} inside a {what}: it has {problem}")


def encode_tuple(parts: Sequence[str]) -> str:
    _check_parts(parts, "tuple")
    return "(" + ",".join(parts) + ")"


def split_top_level(text: str, sep: str = ",") -> List[str]:
    """Split on ``sep`` at bracket depth zero."""
    parts: List[str] = []
    depth = 0
    current: List[str] = []
    for ch in text:
        if ch in _OPEN:
            depth += 1
        elif ch in _CLOSE:
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(current))
            current = []
        else:
            current.append(ch)
    parts.append("".join(current))
    return parts


def decode_tuple(atom: str) -> Tuple[str, ...]:
    if not (atom.startswith("(") and atom.endswith(")")):
        raise ValueError(f"not a tuple atom: {atom!r}")
    body = atom[1:-1]
    if body == "":
        return ()
    return tuple(split_top_level(body))


def tag(prefix: str, atom: str) -> str:
    return f"{prefix}:{atom}"


def untag(atom: str) -> Tuple[str, str]:
    prefix, _, rest = atom.partition(":")
    return prefix, rest


def encode_set(atoms: Iterable[str]) -> str:
    parts = sorted(atoms)
    _check_parts(parts, "set")
    return "{" + ",".join(parts) + "}"


def decode_set(atom: str) -> Tuple[str, ...]:
    if not (atom.startswith("{") and atom.endswith("}")):
        raise ValueError(f"not a set atom: {atom!r}")
    body = atom[1:-1]
    return () if body == "" else tuple(split_top_level(body))
