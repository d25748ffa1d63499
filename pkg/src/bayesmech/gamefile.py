"""Line-oriented text format for games, with positioned diagnostics.

A game file has the sections ``agents``, ``types <agent>``, ``outcomes``,
``prior``, ``utilities <agent>``, ``scf``, and ``mechanism`` (which nests
``format``, ``strategies <agent>``, and ``outcome``). Inline sections list
labels after the colon; block sections hold one ``left : right`` entry per
line. ``#`` starts a comment. Numbers are exact rationals written as
``p/q`` (integer over positive integer) or bare integers; floating point
never appears. Labels are whitespace-free and may not collide with the
section keywords.

Example::

    agents: 1 2
    types 1: L H
    ...
    prior:
      L L : 1/4

Every failure is reported as a :class:`Diagnostic` with 1-based line and
column positions; :func:`parse_game_file` raises :class:`GameFileError`
carrying all of them and never returns partially constructed objects.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .errors import GameFileError
from .game import (
    Format,
    GameSpec,
    Mechanism,
    SocialChoiceFunction,
    validate_game,
    validate_mechanism,
    validate_scf,
)

_KEYWORDS = {
    "agents",
    "types",
    "outcomes",
    "prior",
    "utilities",
    "scf",
    "mechanism",
    "format",
    "strategies",
    "outcome",
}

_RATIONAL_RE = re.compile(r"^[+-]?[0-9]+(?:/([0-9]+))?$")


def format_rational(value: Fraction) -> str:
    """Canonical text for an exact rational: ``p/q`` or a bare integer."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def parse_rational(text: str) -> Fraction:
    """Parse ``p/q`` or a bare integer; raises ValueError with the reason."""
    match = _RATIONAL_RE.match(text)
    if not match:
        raise ValueError(f"{text!r} is not an integer or p/q rational")
    if match.group(1) is not None and int(match.group(1)) == 0:
        raise ValueError(f"{text!r} has a zero denominator")
    numerator, _, denominator = text.partition("/")
    if denominator:
        return Fraction(int(numerator), int(denominator))
    return Fraction(int(numerator))


@dataclass(frozen=True)
class Diagnostic:
    line: int
    column: int
    token: str
    message: str

    def __str__(self) -> str:
        return f"line {self.line}, col {self.column}: {self.message} (at {self.token!r})"


@dataclass(frozen=True)
class Token:
    text: str
    line: int
    column: int


@dataclass(frozen=True)
class ParsedGame:
    spec: GameSpec
    scf: SocialChoiceFunction
    mechanism: Mechanism


def _tokenize(text: str) -> list[list[Token]]:
    lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        tokens = []
        col = 0
        while col < len(line):
            ch = line[col]
            if ch.isspace():
                col += 1
                continue
            if ch == ":":
                tokens.append(Token(":", lineno, col + 1))
                col += 1
                continue
            start = col
            while col < len(line) and not line[col].isspace() and line[col] != ":":
                col += 1
            tokens.append(Token(line[start:col], lineno, start + 1))
        if tokens:
            lines.append(tokens)
    return lines


@dataclass
class _Entry:
    left: list[Token]
    right: list[Token]


@dataclass
class _Section:
    header: Token
    labels: list[Token]  # inline values, for list-valued sections
    entries: list[_Entry]  # block entries


class _Parser:
    def __init__(self, text: str):
        self.lines = _tokenize(text)
        self.diagnostics: list[Diagnostic] = []
        self.sections: dict[str, _Section] = {}
        # keyed sections, in declaration order
        self.types: dict[str, _Section] = {}
        self.utilities: dict[str, _Section] = {}
        self.strategies: dict[str, _Section] = {}
        self.seen_mechanism = False

    def fail(self, token: Token, message: str) -> None:
        self.diagnostics.append(
            Diagnostic(token.line, token.column, token.text, message)
        )

    # -- pass 1: structure -------------------------------------------------

    def collect(self) -> None:
        current: _Section | None = None
        for tokens in self.lines:
            head = tokens[0]
            if head.text in _KEYWORDS:
                current = self._header(tokens)
            elif current is None:
                self.fail(head, "entry line appears outside any section")
            else:
                entry = self._split_entry(tokens)
                if entry is not None:
                    current.entries.append(entry)
        if not self.lines:
            self.diagnostics.append(Diagnostic(1, 1, "<eof>", "empty game file"))

    def _split_entry(self, tokens: list[Token]) -> _Entry | None:
        colons = [k for k, t in enumerate(tokens) if t.text == ":"]
        if len(colons) != 1:
            self.fail(tokens[0], "entry must contain exactly one ':'")
            return None
        k = colons[0]
        left, right = tokens[:k], tokens[k + 1 :]
        if not left or not right:
            self.fail(tokens[k], "entry needs labels on both sides of ':'")
            return None
        return _Entry(left, right)

    def _header(self, tokens: list[Token]) -> _Section | None:
        head = tokens[0]
        keyword = head.text
        keyed = keyword in ("types", "utilities", "strategies")
        cursor = 1
        key = None
        if keyed:
            if cursor >= len(tokens) or tokens[cursor].text == ":":
                self.fail(head, f"{keyword!r} needs an agent label before ':'")
                return None
            key = tokens[cursor].text
            cursor += 1
        if cursor >= len(tokens) or tokens[cursor].text != ":":
            self.fail(head, f"{keyword!r} header must be followed by ':'")
            return None
        rest = tokens[cursor + 1 :]
        section = _Section(header=head, labels=list(rest), entries=[])

        if keyword in ("format", "strategies", "outcome") and not self.seen_mechanism:
            self.fail(head, f"{keyword!r} must appear inside the mechanism section")
            return None
        if keyword == "mechanism":
            self.seen_mechanism = True

        store: dict[str, _Section]
        store_key: str
        if keyed:
            store = {
                "types": self.types,
                "utilities": self.utilities,
                "strategies": self.strategies,
            }[keyword]
            store_key = key
        else:
            store = self.sections
            store_key = keyword
        if store_key in store:
            self.fail(head, f"duplicate section {keyword!r}"
                      + (f" for agent {key!r}" if keyed else ""))
            return None
        store[store_key] = section

        if keyword in ("prior", "scf", "outcome", "mechanism", "utilities") and rest:
            self.fail(rest[0], f"{keyword!r} takes no inline values")
        return section

    # -- pass 2: resolution -------------------------------------------------

    def resolve(self) -> ParsedGame | None:
        missing = [
            kw
            for kw in ("agents", "outcomes", "prior", "scf", "mechanism", "format",
                       "outcome")
            if kw not in self.sections
        ]
        for kw in missing:
            self.diagnostics.append(
                Diagnostic(1, 1, kw, f"missing required section {kw!r}")
            )
        if missing:
            return None

        agents = self._label_list(self.sections["agents"], "agent")
        outcomes = self._label_list(self.sections["outcomes"], "outcome")
        if agents is None or outcomes is None:
            return None

        type_spaces = []
        for agent in agents:
            section = self.types.get(agent)
            if section is None:
                self.fail(
                    self.sections["agents"].header,
                    f"missing 'types {agent}:' section",
                )
                type_spaces.append(())
                continue
            labels = self._label_list(section, "type")
            type_spaces.append(tuple(labels) if labels else ())
        for extra in self.types:
            if extra not in agents:
                self.fail(self.types[extra].header, f"types for unknown agent {extra!r}")
        if any(not ts for ts in type_spaces):
            return None

        strategy_sets = []
        for agent in agents:
            section = self.strategies.get(agent)
            if section is None:
                self.fail(
                    self.sections["mechanism"].header,
                    f"missing 'strategies {agent}:' section",
                )
                strategy_sets.append(())
                continue
            labels = self._label_list(section, "strategy")
            strategy_sets.append(tuple(labels) if labels else ())
        for extra in self.strategies:
            if extra not in agents:
                self.fail(
                    self.strategies[extra].header,
                    f"strategies for unknown agent {extra!r}",
                )
        if any(not ss for ss in strategy_sets):
            return None

        format_section = self.sections["format"]
        mech_format = None
        if len(format_section.labels) != 1:
            self.fail(format_section.header, "format needs exactly one value")
        else:
            token = format_section.labels[0]
            if token.text not in (Format.MESSAGE.value, Format.ACTION.value):
                self.fail(token, "format must be 'message' or 'action'")
            else:
                mech_format = Format(token.text)

        prior = self._profile_map(
            self.sections["prior"], agents, type_spaces, rational=True
        )
        scf_map = self._profile_map(
            self.sections["scf"], agents, type_spaces, outcomes=outcomes
        )
        outcome_table = self._profile_map(
            self.sections["outcome"], agents, strategy_sets, outcomes=outcomes
        )

        utilities = []
        for i, agent in enumerate(agents):
            section = self.utilities.get(agent)
            if section is None:
                self.fail(
                    self.sections["agents"].header,
                    f"missing 'utilities {agent}:' section",
                )
                utilities.append({})
                continue
            utilities.append(
                self._utility_map(section, outcomes, type_spaces[i])
            )
        for extra in self.utilities:
            if extra not in agents:
                self.fail(
                    self.utilities[extra].header,
                    f"utilities for unknown agent {extra!r}",
                )

        if self.diagnostics or mech_format is None:
            return None
        spec = GameSpec(
            agents=tuple(agents),
            type_spaces=tuple(type_spaces),
            outcomes=tuple(outcomes),
            prior=prior,
            utilities=tuple(utilities),
        )
        scf = SocialChoiceFunction(scf_map)
        mechanism = Mechanism(
            format=mech_format,
            strategy_sets=tuple(strategy_sets),
            outcome_table=outcome_table,
        )
        return ParsedGame(spec=spec, scf=scf, mechanism=mechanism)

    def _label_list(self, section: _Section, kind: str) -> list[str] | None:
        if not section.labels:
            self.fail(section.header, f"section lists no {kind} labels")
            return None
        labels = []
        for token in section.labels:
            if token.text in _KEYWORDS:
                self.fail(token, f"label collides with reserved keyword {token.text!r}")
            elif token.text in labels:
                self.fail(token, f"duplicate {kind} label {token.text!r}")
            else:
                labels.append(token.text)
        for entry in section.entries:
            self.fail(entry.left[0], "this section takes inline labels, not entries")
        return labels if labels else None

    def _profile_map(
        self,
        section: _Section,
        agents: list[str],
        spaces: list[tuple[str, ...]],
        rational: bool = False,
        outcomes: list[str] | None = None,
    ) -> dict:
        mapping: dict = {}
        for entry in section.entries:
            if len(entry.left) != len(agents):
                self.fail(
                    entry.left[0],
                    f"profile needs {len(agents)} labels, got {len(entry.left)}",
                )
                continue
            profile = []
            bad = False
            for i, token in enumerate(entry.left):
                if token.text not in spaces[i]:
                    self.fail(
                        token,
                        f"unknown label {token.text!r} for agent {agents[i]!r}",
                    )
                    bad = True
                profile.append(token.text)
            if len(entry.right) != 1:
                self.fail(entry.right[0], "entry needs exactly one value after ':'")
                continue
            value_token = entry.right[0]
            if rational:
                try:
                    value = parse_rational(value_token.text)
                except ValueError as exc:
                    self.fail(value_token, str(exc))
                    continue
            else:
                value = value_token.text
                if outcomes is not None and value not in outcomes:
                    self.fail(value_token, f"unknown outcome {value!r}")
                    continue
            if bad:
                continue
            key = tuple(profile)
            if key in mapping:
                self.fail(entry.left[0], f"duplicate entry for profile {key!r}")
                continue
            mapping[key] = value
        return mapping

    def _utility_map(
        self, section: _Section, outcomes: list[str], types: tuple[str, ...]
    ) -> dict:
        mapping: dict = {}
        for entry in section.entries:
            if len(entry.left) != 2:
                self.fail(
                    entry.left[0],
                    f"utility entry needs 'outcome type', got {len(entry.left)} labels",
                )
                continue
            outcome_token, type_token = entry.left
            bad = False
            if outcome_token.text not in outcomes:
                self.fail(outcome_token, f"unknown outcome {outcome_token.text!r}")
                bad = True
            if type_token.text not in types:
                self.fail(type_token, f"unknown type {type_token.text!r}")
                bad = True
            if len(entry.right) != 1:
                self.fail(entry.right[0], "entry needs exactly one value after ':'")
                continue
            try:
                value = parse_rational(entry.right[0].text)
            except ValueError as exc:
                self.fail(entry.right[0], str(exc))
                continue
            if bad:
                continue
            key = (outcome_token.text, type_token.text)
            if key in mapping:
                self.fail(outcome_token, f"duplicate utility entry for {key!r}")
                continue
            mapping[key] = value
        return mapping

    # -- pass 3: semantic validation ----------------------------------------

    def validate(self, parsed: ParsedGame) -> None:
        anchors = {
            "game": self.sections["agents"].header,
            "scf": self.sections["scf"].header,
            "mechanism": self.sections["mechanism"].header,
        }
        for entry in validate_game(parsed.spec).entries:
            self.fail(anchors["game"], entry)
        for entry in validate_scf(parsed.spec, parsed.scf).entries:
            self.fail(anchors["scf"], entry)
        for entry in validate_mechanism(parsed.spec, parsed.mechanism).entries:
            self.fail(anchors["mechanism"], entry)


def parse_game_file(text: str) -> ParsedGame:
    """Parse and fully validate a game file.

    Raises :class:`GameFileError` carrying every diagnostic found; on
    success the returned objects satisfy all invariants.
    """
    parser = _Parser(text)
    parser.collect()
    parsed = parser.resolve() if not parser.diagnostics else None
    if parsed is not None:
        parser.validate(parsed)
    if parser.diagnostics:
        raise GameFileError(parser.diagnostics)
    assert parsed is not None
    return parsed


def serialize_game_file(
    spec: GameSpec, scf: SocialChoiceFunction, mech: Mechanism
) -> str:
    """Canonical text for a game; ``parse_game_file`` round-trips it exactly."""
    out = []
    out.append("agents: " + " ".join(spec.agents))
    for agent, types in zip(spec.agents, spec.type_spaces):
        out.append(f"types {agent}: " + " ".join(types))
    out.append("outcomes: " + " ".join(spec.outcomes))
    out.append("prior:")
    for profile in spec.type_profiles():
        out.append(
            "  " + " ".join(profile) + " : " + format_rational(spec.prior_of(profile))
        )
    for i, agent in enumerate(spec.agents):
        out.append(f"utilities {agent}:")
        for outcome in spec.outcomes:
            for type_label in spec.type_spaces[i]:
                value = spec.utilities[i][(outcome, type_label)]
                out.append(f"  {outcome} {type_label} : " + format_rational(value))
    out.append("scf:")
    for profile in spec.type_profiles():
        out.append("  " + " ".join(profile) + " : " + scf.outcome_for(profile))
    out.append("mechanism:")
    out.append(f"  format: {mech.format.value}")
    for agent, strategies in zip(spec.agents, mech.strategy_sets):
        out.append(f"  strategies {agent}: " + " ".join(strategies))
    out.append("  outcome:")
    for point in mech.strategy_profiles():
        out.append("    " + " ".join(point) + " : " + mech.outcome_of(point))
    return "\n".join(out) + "\n"


def parse_deception_file(text: str, spec: GameSpec) -> tuple[dict[str, str], ...]:
    """Parse per-agent deception maps written as ``deception <agent>:`` blocks.

    Entries are ``true_type : reported_type`` lines. Every agent needs a
    total, fixed-point-free map; violations raise :class:`GameFileError`
    with positions.
    """
    diagnostics: list[Diagnostic] = []
    blocks: dict[str, tuple[Token, list[_Entry]]] = {}
    current: list[_Entry] | None = None
    lines = _tokenize(text)
    for tokens in lines:
        head = tokens[0]
        if head.text == "deception":
            if len(tokens) < 3 or tokens[2].text != ":" or tokens[1].text == ":":
                diagnostics.append(
                    Diagnostic(head.line, head.column, head.text,
                               "expected 'deception <agent>:'")
                )
                current = None
                continue
            agent = tokens[1].text
            if agent in blocks:
                diagnostics.append(
                    Diagnostic(tokens[1].line, tokens[1].column, agent,
                               f"duplicate deception block for agent {agent!r}")
                )
                current = None
                continue
            if agent not in spec.agents:
                diagnostics.append(
                    Diagnostic(tokens[1].line, tokens[1].column, agent,
                               f"unknown agent {agent!r}")
                )
                current = None
                continue
            entries: list[_Entry] = []
            blocks[agent] = (head, entries)
            current = entries
        elif current is None:
            diagnostics.append(
                Diagnostic(head.line, head.column, head.text,
                           "entry line appears outside any deception block")
            )
        else:
            colons = [k for k, t in enumerate(tokens) if t.text == ":"]
            if len(colons) != 1 or colons[0] != 1 or len(tokens) != 3:
                diagnostics.append(
                    Diagnostic(head.line, head.column, head.text,
                               "expected 'true_type : reported_type'")
                )
                continue
            current.append(_Entry([tokens[0]], [tokens[2]]))
    if not lines:
        diagnostics.append(Diagnostic(1, 1, "<eof>", "empty deception file"))

    maps: list[dict[str, str]] = []
    for i, agent in enumerate(spec.agents):
        types = spec.type_spaces[i]
        if agent not in blocks:
            diagnostics.append(
                Diagnostic(1, 1, agent, f"missing deception block for agent {agent!r}")
            )
            maps.append({})
            continue
        header, entries = blocks[agent]
        mapping: dict[str, str] = {}
        for entry in entries:
            src, dst = entry.left[0], entry.right[0]
            if src.text not in types:
                diagnostics.append(
                    Diagnostic(src.line, src.column, src.text,
                               f"unknown type {src.text!r} for agent {agent!r}")
                )
                continue
            if dst.text not in types:
                diagnostics.append(
                    Diagnostic(dst.line, dst.column, dst.text,
                               f"unknown type {dst.text!r} for agent {agent!r}")
                )
                continue
            if src.text in mapping:
                diagnostics.append(
                    Diagnostic(src.line, src.column, src.text,
                               f"duplicate deception entry for type {src.text!r}")
                )
                continue
            if src.text == dst.text:
                diagnostics.append(
                    Diagnostic(dst.line, dst.column, dst.text,
                               f"deception for agent {agent!r} has a fixed point "
                               f"at type {src.text!r}")
                )
                continue
            mapping[src.text] = dst.text
        for type_label in types:
            if type_label not in mapping:
                diagnostics.append(
                    Diagnostic(header.line, header.column, agent,
                               f"deception for agent {agent!r} is missing type "
                               f"{type_label!r}")
                )
        maps.append(mapping)
    if diagnostics:
        raise GameFileError(diagnostics)
    return tuple(maps)
