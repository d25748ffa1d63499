"""Finite Bayesian environments: agents, types, priors, outcomes, utilities.

Every probability and payoff is an exact ``fractions.Fraction`` and every
comparison in the toolkit is exact, so equilibrium ties survive instead of
being corrupted by rounding. Joint priors may be correlated; independence
is never assumed. All values are immutable after construction (mapping
fields are copied and never mutated afterwards) and safe to share across
workers.

Label order is declaration order: iteration over type profiles, outcomes,
and strategies is deterministic and lexicographic in the declared indices.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import product
from typing import Iterator, Mapping

from .errors import InvalidInputError

# A full type profile: one type label per agent, in agent order.
TypeProfile = tuple[str, ...]


class Format(str, Enum):
    """Strategy format of a mechanism: pure information vs. performed action."""

    MESSAGE = "message"
    ACTION = "action"


@dataclass(frozen=True)
class GameSpec:
    """A finite Bayesian environment.

    ``prior`` maps full type profiles to probabilities; ``utilities[i]``
    maps ``(outcome, own_type)`` pairs to agent ``i``'s payoff.
    """

    agents: tuple[str, ...]
    type_spaces: tuple[tuple[str, ...], ...]
    outcomes: tuple[str, ...]
    prior: Mapping[TypeProfile, Fraction]
    utilities: tuple[Mapping[tuple[str, str], Fraction], ...]

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(
            self, "type_spaces", tuple(tuple(ts) for ts in self.type_spaces)
        )
        object.__setattr__(self, "outcomes", tuple(self.outcomes))
        object.__setattr__(
            self,
            "prior",
            {tuple(k): Fraction(v) for k, v in self.prior.items()},
        )
        object.__setattr__(
            self,
            "utilities",
            tuple(
                {(o, t): Fraction(v) for (o, t), v in table.items()}
                for table in self.utilities
            ),
        )

    # -- iteration helpers ------------------------------------------------

    def type_profiles(self) -> Iterator[TypeProfile]:
        """All full type profiles, lexicographic in declared type order."""
        return product(*self.type_spaces)

    def opponent_profiles(self, agent: int) -> Iterator[tuple[str, ...]]:
        """Type profiles of everyone but ``agent``, in agent order."""
        spaces = [ts for j, ts in enumerate(self.type_spaces) if j != agent]
        return product(*spaces)

    def insert_own_type(
        self, agent: int, own: str, opponents: tuple[str, ...]
    ) -> TypeProfile:
        """Rebuild a full profile from an opponent profile plus own type."""
        return opponents[:agent] + (own,) + opponents[agent:]

    def prior_of(self, profile: TypeProfile) -> Fraction:
        return self.prior.get(tuple(profile), Fraction(0))

    # -- probabilistic queries --------------------------------------------

    def check_agent(self, agent: int) -> None:
        if not isinstance(agent, int) or not 0 <= agent < len(self.agents):
            raise InvalidInputError(f"unknown agent index {agent!r}")

    def check_type(self, agent: int, type_label: str) -> None:
        self.check_agent(agent)
        if type_label not in self.type_spaces[agent]:
            raise InvalidInputError(
                f"unknown type {type_label!r} for agent {self.agents[agent]!r}"
            )

    def marginal(self, agent: int, type_label: str) -> Fraction:
        """Total prior mass on profiles where ``agent`` has ``type_label``."""
        self.check_type(agent, type_label)
        total = Fraction(0)
        for opponents in self.opponent_profiles(agent):
            total += self.prior_of(self.insert_own_type(agent, type_label, opponents))
        return total

    def conditional(self, agent: int, type_label: str) -> dict[tuple[str, ...], Fraction]:
        """Distribution over opponent type profiles given own type.

        Requires positive marginal mass on ``type_label``; a well-formed
        spec guarantees this (see :func:`validate_game`).
        """
        mass = self.marginal(agent, type_label)
        if mass <= 0:
            raise InvalidInputError(
                f"agent {self.agents[agent]!r} type {type_label!r} has zero "
                f"marginal probability; conditional expectation is undefined"
            )
        return {
            opponents: self.prior_of(self.insert_own_type(agent, type_label, opponents))
            / mass
            for opponents in self.opponent_profiles(agent)
        }


@dataclass(frozen=True)
class SocialChoiceFunction:
    """A collective choice for every full type profile."""

    assignment: Mapping[TypeProfile, str]

    def __post_init__(self):
        object.__setattr__(
            self, "assignment", {tuple(k): v for k, v in self.assignment.items()}
        )

    def outcome_for(self, profile: TypeProfile) -> str:
        try:
            return self.assignment[tuple(profile)]
        except KeyError:
            raise InvalidInputError(f"social choice undefined at profile {profile!r}")


@dataclass(frozen=True)
class Mechanism:
    """Per-agent strategy sets plus an outcome rule over strategy profiles."""

    format: Format
    strategy_sets: tuple[tuple[str, ...], ...]
    outcome_table: Mapping[tuple[str, ...], str]

    def __post_init__(self):
        object.__setattr__(self, "format", Format(self.format))
        object.__setattr__(
            self, "strategy_sets", tuple(tuple(ss) for ss in self.strategy_sets)
        )
        object.__setattr__(
            self, "outcome_table", {tuple(k): v for k, v in self.outcome_table.items()}
        )

    def strategy_profiles(self) -> Iterator[tuple[str, ...]]:
        return product(*self.strategy_sets)

    def outcome_of(self, point: tuple[str, ...]) -> str:
        try:
            return self.outcome_table[tuple(point)]
        except KeyError:
            raise InvalidInputError(f"outcome table undefined at {point!r}")


@dataclass(frozen=True)
class StrategyProfile:
    """One strategy function per agent: a total map own type -> strategy."""

    assignments: tuple[Mapping[str, str], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "assignments", tuple(dict(a) for a in self.assignments)
        )

    def strategy_for(self, agent: int, type_label: str) -> str:
        try:
            return self.assignments[agent][type_label]
        except (IndexError, KeyError):
            raise InvalidInputError(
                f"profile has no strategy for agent index {agent} at type {type_label!r}"
            )

    def point(self, profile: TypeProfile) -> tuple[str, ...]:
        """The strategy tuple played when the realized types are ``profile``."""
        return tuple(
            self.strategy_for(i, type_label) for i, type_label in enumerate(profile)
        )


@dataclass(frozen=True)
class ValidationReport:
    """Human-readable invariant violations; empty means well formed."""

    entries: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.entries


def _duplicates(labels) -> list[str]:
    seen, dups = set(), []
    for label in labels:
        if label in seen and label not in dups:
            dups.append(label)
        seen.add(label)
    return dups


def validate_game(spec: GameSpec) -> ValidationReport:
    """Check every GameSpec invariant; violations become report entries."""
    entries: list[str] = []
    n = len(spec.agents)
    if n == 0:
        entries.append("no agents declared")
        return ValidationReport(tuple(entries))
    for label in _duplicates(spec.agents):
        entries.append(f"duplicate agent label {label!r}")
    if len(spec.type_spaces) != n:
        entries.append(
            f"{len(spec.type_spaces)} type spaces declared for {n} agents"
        )
        return ValidationReport(tuple(entries))
    for i, types in enumerate(spec.type_spaces):
        if not types:
            entries.append(f"agent {spec.agents[i]!r} has an empty type space")
        for label in _duplicates(types):
            entries.append(f"agent {spec.agents[i]!r} has duplicate type {label!r}")
    if not spec.outcomes:
        entries.append("no outcomes declared")
    for label in _duplicates(spec.outcomes):
        entries.append(f"duplicate outcome label {label!r}")
    if any(not types for types in spec.type_spaces) or not spec.outcomes:
        return ValidationReport(tuple(entries))

    all_profiles = set(spec.type_profiles())
    for profile in spec.prior:
        if profile not in all_profiles:
            entries.append(f"prior entry for unknown type profile {profile!r}")
    for profile in spec.type_profiles():
        if profile not in spec.prior:
            entries.append(f"prior missing an entry for type profile {profile!r}")
    for profile, p in spec.prior.items():
        if p < 0:
            entries.append(f"prior of {profile!r} is negative ({p})")
    mass = sum(spec.prior.values(), Fraction(0))
    if mass != 1:
        entries.append(f"prior mass {mass} != 1")
    for i in range(n):
        for type_label in spec.type_spaces[i]:
            if spec.marginal(i, type_label) == 0:
                entries.append(
                    f"agent {spec.agents[i]!r} type {type_label!r} has marginal "
                    f"probability 0"
                )

    if len(spec.utilities) != n:
        entries.append(f"{len(spec.utilities)} utility tables declared for {n} agents")
        return ValidationReport(tuple(entries))
    for i, table in enumerate(spec.utilities):
        agent = spec.agents[i]
        needed = {(o, t) for o in spec.outcomes for t in spec.type_spaces[i]}
        for key in table:
            if key not in needed:
                entries.append(
                    f"agent {agent!r} utility entry for unknown pair {key!r}"
                )
        for key in sorted(needed - set(table)):
            entries.append(
                f"agent {agent!r} utility missing an entry for (outcome, type) {key!r}"
            )
    return ValidationReport(tuple(entries))


def validate_mechanism(spec: GameSpec, mech: Mechanism) -> ValidationReport:
    """Check Mechanism invariants against the environment's labels."""
    entries: list[str] = []
    n = len(spec.agents)
    if len(mech.strategy_sets) != n:
        entries.append(
            f"{len(mech.strategy_sets)} strategy sets declared for {n} agents"
        )
        return ValidationReport(tuple(entries))
    for i, strategies in enumerate(mech.strategy_sets):
        if not strategies:
            entries.append(f"agent {spec.agents[i]!r} has an empty strategy set")
        for label in _duplicates(strategies):
            entries.append(
                f"agent {spec.agents[i]!r} has duplicate strategy {label!r}"
            )
    if any(not ss for ss in mech.strategy_sets):
        return ValidationReport(tuple(entries))
    all_points = set(mech.strategy_profiles())
    for point in mech.outcome_table:
        if point not in all_points:
            entries.append(f"outcome table entry for unknown strategy profile {point!r}")
    for point in mech.strategy_profiles():
        if point not in mech.outcome_table:
            entries.append(
                f"outcome table missing an entry for strategy profile {point!r}"
            )
    for point, outcome in mech.outcome_table.items():
        if outcome not in spec.outcomes:
            entries.append(
                f"outcome table maps {point!r} to unknown outcome {outcome!r}"
            )
    return ValidationReport(tuple(entries))


def validate_scf(spec: GameSpec, scf: SocialChoiceFunction) -> ValidationReport:
    """Check that a social choice function is total with known outcomes."""
    entries: list[str] = []
    all_profiles = set(spec.type_profiles())
    for profile in scf.assignment:
        if profile not in all_profiles:
            entries.append(f"scf entry for unknown type profile {profile!r}")
    for profile in spec.type_profiles():
        if profile not in scf.assignment:
            entries.append(f"scf missing an entry for type profile {profile!r}")
    for profile, outcome in scf.assignment.items():
        if outcome not in spec.outcomes:
            entries.append(f"scf maps {profile!r} to unknown outcome {outcome!r}")
    return ValidationReport(tuple(entries))
