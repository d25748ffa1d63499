"""Direct mechanisms built by composing an outcome rule with an equilibrium.

The stored outcome map is always the composition ``outcome_table(s*(reports))``
computed from the source mechanism and its equilibrium; it is never replaced
by an externally supplied social choice table, even when the two agree
pointwise. Truthfulness of the one-stage direct game is checked by reusing
the equilibrium engine with the type sets as strategy sets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .equilibrium import (
    BneVerdict,
    enumerate_bne,
    DEFAULT_CAP,
    implements,
    is_bne,
)
from .errors import ConstructionError, FormatError, InvalidInputError
from .game import (
    Format,
    GameSpec,
    Mechanism,
    SocialChoiceFunction,
    StrategyProfile,
    TypeProfile,
)

TruthfulnessVerdict = BneVerdict

MESSAGE_PRIVACY_NOTE = (
    "truth-telling in the one-stage direct game is compared on outcome "
    "utilities alone; report-privacy preferences apply only to action-format "
    "multistage checks"
)


@dataclass(frozen=True)
class DirectMechanism:
    """Type sets as strategy sets plus the composed outcome map."""

    source_mech: Mechanism
    equilibrium: StrategyProfile
    compound_outcome: Mapping[TypeProfile, str]

    def __post_init__(self):
        object.__setattr__(
            self,
            "compound_outcome",
            {tuple(k): v for k, v in self.compound_outcome.items()},
        )

    def as_game_mechanism(self, spec: GameSpec) -> Mechanism:
        """The one-stage direct game: agents report types, the composed map decides."""
        return Mechanism(
            format=Format.MESSAGE,
            strategy_sets=spec.type_spaces,
            outcome_table=dict(self.compound_outcome),
        )


def build_direct(
    spec: GameSpec, mech: Mechanism, equilibrium: StrategyProfile
) -> DirectMechanism:
    """Compose the outcome rule with an equilibrium into a direct mechanism.

    The profile must be a BNE of ``(spec, mech)``; otherwise the composed
    map has no implementation claim and construction fails with the
    profitable-deviation witness attached.
    """
    verdict = is_bne(spec, mech, equilibrium)
    if not verdict.holds:
        w = verdict.witness
        raise ConstructionError(
            f"profile is not an equilibrium: agent {w.agent_label!r} at type "
            f"{w.type_label!r} gains by deviating to {w.deviation!r} "
            f"({w.prescribed_eu} -> {w.deviation_eu})",
            witness=w,
        )
    compound = {
        tp: mech.outcome_of(equilibrium.point(tp)) for tp in spec.type_profiles()
    }
    return DirectMechanism(
        source_mech=mech, equilibrium=equilibrium, compound_outcome=compound
    )


def direct_game_outcome(dm: DirectMechanism, reports: TypeProfile) -> str:
    """Outcome of the direct game at a profile of reported types."""
    key = tuple(reports)
    try:
        return dm.compound_outcome[key]
    except KeyError:
        raise InvalidInputError(f"unknown report profile {key!r}")


def identity_profile(spec: GameSpec) -> StrategyProfile:
    """The truth-telling strategy profile of a direct game."""
    return StrategyProfile(
        tuple({t: t for t in types} for types in spec.type_spaces)
    )


def check_truthful(spec: GameSpec, dm: DirectMechanism) -> TruthfulnessVerdict:
    """Is truth-telling a BNE of the one-stage direct game?

    Negative verdicts carry the lexicographically first profitable
    misreport (agent, type, report) with both exact expected utilities.
    """
    return is_bne(spec, dm.as_game_mechanism(spec), identity_profile(spec))


@dataclass(frozen=True)
class MessageRevelationReport:
    """Truthfulness of every implementing equilibrium of a message mechanism."""

    scf: SocialChoiceFunction
    total_equilibria: int
    implementing_equilibria: tuple[StrategyProfile, ...]
    truthfulness: tuple[TruthfulnessVerdict, ...]
    verdict: str  # HOLDS | FAILS | VACUOUS
    notes: tuple[str, ...]


def check_revelation_message(
    spec: GameSpec,
    mech: Mechanism,
    scf: SocialChoiceFunction,
    cap: int = DEFAULT_CAP,
) -> MessageRevelationReport:
    """For each implementing equilibrium, build the direct mechanism and
    check that truth-telling is an equilibrium of its one-stage game."""
    if mech.format is not Format.MESSAGE:
        raise FormatError(
            f"expected a message-format mechanism, got {mech.format.value!r}"
        )
    equilibria = enumerate_bne(spec, mech, cap=cap)
    implementing = tuple(
        e for e in equilibria if implements(spec, mech, e, scf).holds
    )
    truthfulness = tuple(
        check_truthful(spec, build_direct(spec, mech, e)) for e in implementing
    )
    if not implementing:
        verdict = "VACUOUS"
    elif all(v.holds for v in truthfulness):
        verdict = "HOLDS"
    else:
        verdict = "FAILS"
    return MessageRevelationReport(
        scf=scf,
        total_equilibria=len(equilibria),
        implementing_equilibria=implementing,
        truthfulness=truthfulness,
        verdict=verdict,
        notes=(MESSAGE_PRIVACY_NOTE,),
    )
