"""The multistage direct game: report, suggestion, action, outcome.

An action-format direct mechanism cannot execute strategies on the agents'
behalf: it can only suggest the equilibrium action for the reported type,
observe what each agent actually performs, and apply the source outcome
rule to the performed actions. Outcomes therefore never depend on honesty
or obedience flags; the designer has no punishment channel.

Privacy-lexicographic preferences rank deviations first by exact expected
outcome utility and, on exact ties, prefer the lower report exposure
(0 for a false report, 1 for a true one). The comparison is an ordered
pair, never an epsilon-weighted scalar. This binary-exposure model is one
formalization of an informal privacy preference and is flagged as such in
every report.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Mapping

from .direct import DirectMechanism, build_direct
from .equilibrium import DEFAULT_CAP, enumerate_bne, implements
from .errors import DeceptionError, FormatError, InvalidInputError
from .game import (
    Format,
    GameSpec,
    Mechanism,
    SocialChoiceFunction,
    StrategyProfile,
    TypeProfile,
)


class PreferenceModel(str, Enum):
    STANDARD = "standard"
    PRIVACY_LEXICOGRAPHIC = "privacy_lexicographic"


PRIVACY_MODEL_NOTE = (
    "privacy model: binary exposure on reports (1 if the report equals the "
    "true type, else 0), compared lexicographically after exact expected "
    "utility; this is one formalization of an informal privacy preference"
)


def exposure(true_type: str, report: str) -> int:
    """1 when the report reveals the true type, 0 when it hides it."""
    return 1 if report == true_type else 0


@dataclass(frozen=True)
class MultistageStrategy:
    """Per agent: true type -> (reported type, performed action)."""

    choices: tuple[Mapping[str, tuple[str, str]], ...]

    def __post_init__(self):
        object.__setattr__(
            self,
            "choices",
            tuple({t: (r, a) for t, (r, a) in c.items()} for c in self.choices),
        )

    def choice_for(self, agent: int, true_type: str) -> tuple[str, str]:
        try:
            return self.choices[agent][true_type]
        except (IndexError, KeyError):
            raise InvalidInputError(
                f"multistage strategy has no choice for agent index {agent} "
                f"at type {true_type!r}"
            )


@dataclass(frozen=True)
class Suggestion:
    """The mechanism's described action for one agent's reported type."""

    agent: int
    described_action: str


@dataclass(frozen=True)
class PlayTrace:
    """One deterministic play of the multistage game."""

    true_types: TypeProfile
    reports: TypeProfile
    suggestions: tuple[Suggestion, ...]
    actions: tuple[str, ...]
    outcome: str
    honesty_flags: tuple[bool, ...]
    obedience_flags: tuple[bool, ...]


def _require_action_format(dm: DirectMechanism) -> None:
    if dm.source_mech.format is not Format.ACTION:
        raise FormatError(
            "the multistage direct game needs an action-format source "
            f"mechanism, got {dm.source_mech.format.value!r}"
        )


def play_multistage(
    dm: DirectMechanism, strat: MultistageStrategy, true_types: TypeProfile
) -> PlayTrace:
    """Run report -> suggestion -> action -> outcome once.

    The outcome is the source outcome rule applied to the performed
    actions only; suggestions and flags never enter it.
    """
    _require_action_format(dm)
    true_types = tuple(true_types)
    if true_types not in dm.compound_outcome:
        raise InvalidInputError(f"unknown type profile {true_types!r}")
    n = len(true_types)
    reports = tuple(strat.choice_for(i, true_types[i])[0] for i in range(n))
    suggestions = tuple(
        Suggestion(agent=i, described_action=dm.equilibrium.strategy_for(i, reports[i]))
        for i in range(n)
    )
    actions = tuple(strat.choice_for(i, true_types[i])[1] for i in range(n))
    outcome = dm.source_mech.outcome_of(actions)
    honesty = tuple(reports[i] == true_types[i] for i in range(n))
    obedience = tuple(
        actions[i] == suggestions[i].described_action for i in range(n)
    )
    return PlayTrace(
        true_types=true_types,
        reports=reports,
        suggestions=suggestions,
        actions=actions,
        outcome=outcome,
        honesty_flags=honesty,
        obedience_flags=obedience,
    )


def honest_obedient(dm: DirectMechanism) -> MultistageStrategy:
    """Report the true type and perform the suggested equilibrium action."""
    _require_action_format(dm)
    return MultistageStrategy(
        tuple(
            {t: (t, assignment[t]) for t in assignment}
            for assignment in dm.equilibrium.assignments
        )
    )


def dishonest_disobedient(
    dm: DirectMechanism, deceptions: tuple[Mapping[str, str], ...]
) -> MultistageStrategy:
    """Report a false type but perform the true type's equilibrium action.

    Every agent's deception must be a total, fixed-point-free self-map of
    his type space; an agent with a single type has no false report.
    """
    _require_action_format(dm)
    if len(deceptions) != len(dm.equilibrium.assignments):
        raise DeceptionError(
            f"{len(deceptions)} deception maps supplied for "
            f"{len(dm.equilibrium.assignments)} agents"
        )
    choices = []
    for i, assignment in enumerate(dm.equilibrium.assignments):
        types = list(assignment)
        if len(types) < 2:
            raise DeceptionError(
                f"agent index {i} has a single type {types[0]!r}; no false "
                f"report exists"
            )
        deception = deceptions[i]
        per_type = {}
        for t in types:
            if t not in deception:
                raise DeceptionError(
                    f"deception for agent index {i} is missing type {t!r}"
                )
            false_report = deception[t]
            if false_report not in assignment:
                raise DeceptionError(
                    f"deception for agent index {i} maps {t!r} to unknown "
                    f"type {false_report!r}"
                )
            if false_report == t:
                raise DeceptionError(
                    f"deception for agent index {i} has a fixed point at "
                    f"type {t!r}"
                )
            per_type[t] = (false_report, assignment[t])
        choices.append(per_type)
    return MultistageStrategy(tuple(choices))


def cyclic_deceptions(spec: GameSpec) -> tuple[dict[str, str], ...]:
    """The canonical deception profile: each type reports its successor.

    Fixed-point-free whenever every agent has at least two types; raises
    :class:`DeceptionError` naming the first agent that does not.
    """
    maps = []
    for i, types in enumerate(spec.type_spaces):
        if len(types) < 2:
            raise DeceptionError(
                f"agent {spec.agents[i]!r} has a single type {types[0]!r}; "
                f"no fixed-point-free deception exists"
            )
        maps.append({t: types[(k + 1) % len(types)] for k, t in enumerate(types)})
    return tuple(maps)


@dataclass(frozen=True)
class MultistageWitness:
    """A profitable (report, action) deviation in the multistage game."""

    agent: int
    agent_label: str
    type_label: str
    deviation_report: str
    deviation_action: str
    prescribed_eu: Fraction
    deviation_eu: Fraction
    prescribed_exposure: int
    deviation_exposure: int


@dataclass(frozen=True)
class MultistageVerdict:
    holds: bool
    witness: MultistageWitness | None = None

    def __bool__(self) -> bool:
        return self.holds


def is_bne_multistage(
    spec: GameSpec,
    dm: DirectMechanism,
    strat: MultistageStrategy,
    prefs: PreferenceModel,
) -> MultistageVerdict:
    """Interim equilibrium check over all (report, action) deviation pairs.

    Deviations range over the full report x action grid, including
    honest-but-disobedient and dishonest-but-obedient combinations. Under
    standard preferences a deviation is profitable iff its expected utility
    is strictly larger; under privacy-lexicographic preferences also when
    the utilities tie exactly and the deviation's exposure is strictly
    lower. The witness is the lexicographically first profitable deviation
    in (agent, type, report, action) declaration order.
    """
    _require_action_format(dm)
    prefs = PreferenceModel(prefs)
    actions_sets = dm.source_mech.strategy_sets
    for i, agent in enumerate(spec.agents):
        for true_type in spec.type_spaces[i]:
            conditional = spec.conditional(i, true_type)
            utilities = spec.utilities[i]
            eu_by_action: dict[str, Fraction] = {}
            for action in actions_sets[i]:
                total = Fraction(0)
                for opponents, weight in conditional.items():
                    point: list[str] = [action] * len(spec.agents)
                    for j, opp_type in enumerate(opponents):
                        actual = j if j < i else j + 1
                        point[actual] = strat.choice_for(actual, opp_type)[1]
                    total += weight * utilities[
                        (dm.source_mech.outcome_of(tuple(point)), true_type)
                    ]
                eu_by_action[action] = total
            prescribed_report, prescribed_action = strat.choice_for(i, true_type)
            prescribed_eu = eu_by_action[prescribed_action]
            prescribed_exposure = exposure(true_type, prescribed_report)
            for report in spec.type_spaces[i]:
                for action in actions_sets[i]:
                    dev_eu = eu_by_action[action]
                    dev_exposure = exposure(true_type, report)
                    profitable = dev_eu > prescribed_eu
                    if prefs is PreferenceModel.PRIVACY_LEXICOGRAPHIC:
                        profitable = profitable or (
                            dev_eu == prescribed_eu
                            and dev_exposure < prescribed_exposure
                        )
                    if profitable:
                        return MultistageVerdict(
                            False,
                            MultistageWitness(
                                agent=i,
                                agent_label=agent,
                                type_label=true_type,
                                deviation_report=report,
                                deviation_action=action,
                                prescribed_eu=prescribed_eu,
                                deviation_eu=dev_eu,
                                prescribed_exposure=prescribed_exposure,
                                deviation_exposure=dev_exposure,
                            ),
                        )
    return MultistageVerdict(True, None)


@dataclass(frozen=True)
class UnilateralViolation:
    """A lone deviator changed the outcome, which Case 2 forbids."""

    agent_label: str
    true_types: TypeProfile
    expected_outcome: str
    actual_outcome: str


@dataclass(frozen=True)
class EquilibriumCaseReport:
    """Multistage findings for one implementing equilibrium."""

    equilibrium_index: int
    equilibrium: StrategyProfile
    honest_obedient_standard: MultistageVerdict
    honest_obedient: MultistageVerdict
    dishonest_disobedient: MultistageVerdict | None
    dishonest_implements_scf: bool | None
    dishonest_mismatch: TypeProfile | None
    unilateral_invariant: bool
    unilateral_violation: UnilateralViolation | None
    injective_action_agents: tuple[str, ...]

    @property
    def exhibits_failure(self) -> bool:
        """Honest-obedient rejected while dishonest-disobedient implements."""
        return (
            not self.honest_obedient.holds
            and self.dishonest_disobedient is not None
            and self.dishonest_disobedient.holds
            and bool(self.dishonest_implements_scf)
        )


@dataclass(frozen=True)
class ActionRevelationReport:
    """Per-equilibrium multistage evidence plus an overall verdict.

    ``verdict`` is FAILS when every implementing equilibrium rejects
    honest-obedient while dishonest-disobedient is an equilibrium that
    implements the target; VACUOUS when nothing implements the target;
    INAPPLICABLE when no full fixed-point-free deception profile exists;
    HOLDS otherwise.
    """

    preference_model: PreferenceModel
    deceptions: tuple[dict[str, str], ...] | None
    total_equilibria: int
    records: tuple[EquilibriumCaseReport, ...]
    verdict: str  # HOLDS | FAILS | VACUOUS | INAPPLICABLE
    detail: str
    notes: tuple[str, ...]


def _unilateral_case2(
    spec: GameSpec,
    dm: DirectMechanism,
    deceptions: tuple[Mapping[str, str], ...] | None,
) -> tuple[bool, UnilateralViolation | None]:
    """Deviating alone to (false report, true action) must not move the outcome."""
    honest = honest_obedient(dm)
    for i in range(len(spec.agents)):
        if len(spec.type_spaces[i]) < 2:
            continue
        if deceptions is not None:
            deception = deceptions[i]
        else:
            types = spec.type_spaces[i]
            deception = {t: types[(k + 1) % len(types)] for k, t in enumerate(types)}
        choices = list(dict(c) for c in honest.choices)
        choices[i] = {
            t: (deception[t], dm.equilibrium.strategy_for(i, t))
            for t in spec.type_spaces[i]
        }
        lone = MultistageStrategy(tuple(choices))
        for true_types in spec.type_profiles():
            expected = dm.source_mech.outcome_of(dm.equilibrium.point(true_types))
            actual = play_multistage(dm, lone, true_types).outcome
            if actual != expected:
                return False, UnilateralViolation(
                    agent_label=spec.agents[i],
                    true_types=true_types,
                    expected_outcome=expected,
                    actual_outcome=actual,
                )
    return True, None


def check_revelation_action(
    spec: GameSpec,
    mech: Mechanism,
    scf: SocialChoiceFunction,
    cap: int = DEFAULT_CAP,
    prefs: PreferenceModel = PreferenceModel.PRIVACY_LEXICOGRAPHIC,
    deceptions: tuple[Mapping[str, str], ...] | None = None,
) -> ActionRevelationReport:
    """Run the honest-obedient vs. dishonest-disobedient comparison.

    For every implementing equilibrium: (a) honest-obedient under standard
    preferences, (b) honest-obedient under ``prefs``, (c) the
    dishonest-disobedient profile for the chosen deception under ``prefs``,
    (d) whether that profile's induced type -> outcome map equals ``scf``
    everywhere, and (e) whether any lone deviator to (false report, true
    action) can move the outcome. The default deception is the cyclic
    successor map on each agent's declared type order.
    """
    if mech.format is not Format.ACTION:
        raise FormatError(
            f"expected an action-format mechanism, got {mech.format.value!r}"
        )
    prefs = PreferenceModel(prefs)
    equilibria = enumerate_bne(spec, mech, cap=cap)
    implementing = [e for e in equilibria if implements(spec, mech, e, scf).holds]

    deception_note: str | None = None
    if deceptions is None:
        try:
            deceptions = cyclic_deceptions(spec)
        except DeceptionError as exc:
            deceptions = None
            deception_note = f"no full deception profile exists: {exc}"
    else:
        deceptions = tuple(dict(d) for d in deceptions)

    records = []
    for index, equilibrium in enumerate(implementing):
        dm = build_direct(spec, mech, equilibrium)
        honest = honest_obedient(dm)
        verdict_standard = is_bne_multistage(
            spec, dm, honest, PreferenceModel.STANDARD
        )
        verdict_prefs = is_bne_multistage(spec, dm, honest, prefs)
        dd_verdict = None
        dd_implements: bool | None = None
        dd_mismatch: TypeProfile | None = None
        if deceptions is not None:
            dishonest = dishonest_disobedient(dm, deceptions)
            dd_verdict = is_bne_multistage(spec, dm, dishonest, prefs)
            dd_implements = True
            for true_types in spec.type_profiles():
                outcome = play_multistage(dm, dishonest, true_types).outcome
                if outcome != scf.outcome_for(true_types):
                    dd_implements = False
                    dd_mismatch = true_types
                    break
        invariant, violation = _unilateral_case2(spec, dm, deceptions)
        injective = tuple(
            spec.agents[i]
            for i, assignment in enumerate(equilibrium.assignments)
            if len(set(assignment.values())) == len(assignment)
        )
        records.append(
            EquilibriumCaseReport(
                equilibrium_index=index,
                equilibrium=equilibrium,
                honest_obedient_standard=verdict_standard,
                honest_obedient=verdict_prefs,
                dishonest_disobedient=dd_verdict,
                dishonest_implements_scf=dd_implements,
                dishonest_mismatch=dd_mismatch,
                unilateral_invariant=invariant,
                unilateral_violation=violation,
                injective_action_agents=injective,
            )
        )

    notes = []
    if prefs is PreferenceModel.PRIVACY_LEXICOGRAPHIC:
        notes.append(PRIVACY_MODEL_NOTE)
    if deception_note:
        notes.append(deception_note)
    for record in records:
        for agent in record.injective_action_agents:
            notes.append(
                f"equilibrium {record.equilibrium_index + 1}: agent {agent!r} "
                f"plays a different action for every type; the performed "
                f"action itself can reveal the type to an observer"
            )

    if not implementing:
        verdict = "VACUOUS"
        detail = "no equilibrium implements the target social choice function"
    elif deceptions is None:
        verdict = "INAPPLICABLE"
        detail = (
            "no full deception profile exists (some agent has a single "
            "type), so the dishonest-disobedient comparison cannot be run"
        )
    elif all(r.exhibits_failure for r in records):
        verdict = "FAILS"
        detail = (
            "for every implementing equilibrium, honest-obedient is not an "
            "equilibrium of the multistage direct game while "
            "dishonest-disobedient is one and implements the target"
        )
    else:
        verdict = "HOLDS"
        if all(r.honest_obedient.holds for r in records):
            if prefs is PreferenceModel.STANDARD:
                detail = (
                    "honest-obedient is an equilibrium of the multistage "
                    "direct game under standard preferences for every "
                    "implementing equilibrium"
                )
            else:
                detail = (
                    "honest-obedient is an equilibrium of the multistage "
                    "direct game for every implementing equilibrium"
                )
        else:
            detail = (
                "results are mixed across implementing equilibria; see the "
                "per-equilibrium records"
            )
    return ActionRevelationReport(
        preference_model=prefs,
        deceptions=deceptions,
        total_equilibria=len(equilibria),
        records=tuple(records),
        verdict=verdict,
        detail=detail,
        notes=tuple(notes),
    )
