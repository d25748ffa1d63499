"""Interim expected utilities and exhaustive pure-strategy BNE search.

``is_bne`` and ``interim_expected_utility`` evaluate profiles directly with
exact rational arithmetic. ``enumerate_bne`` scans the whole profile space
with an equivalent integer-scaled evaluation: within one (agent, type) the
conditional weights and the agent's utilities are rescaled by positive
constants, which preserves every exact comparison, so the two paths always
agree. The scan is partitioned by the first agent's assignment prefix and
merged in canonical order, so output is identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from .errors import InvalidInputError, SearchSpaceError
from .game import (
    GameSpec,
    Mechanism,
    SocialChoiceFunction,
    StrategyProfile,
    TypeProfile,
)

DEFAULT_CAP = 10_000_000


@dataclass(frozen=True)
class DeviationWitness:
    """A profitable one-stage deviation: who, at which type, to what."""

    agent: int
    agent_label: str
    type_label: str
    deviation: str
    prescribed_eu: Fraction
    deviation_eu: Fraction


@dataclass(frozen=True)
class BneVerdict:
    holds: bool
    witness: DeviationWitness | None = None

    def __bool__(self) -> bool:
        return self.holds


@dataclass(frozen=True)
class ImplementsVerdict:
    """Whether a profile is a BNE that induces exactly the target choices."""

    holds: bool
    bne_witness: DeviationWitness | None = None
    mismatch_profile: TypeProfile | None = None
    mechanism_outcome: str | None = None
    scf_outcome: str | None = None

    def __bool__(self) -> bool:
        return self.holds


def check_profile(spec: GameSpec, mech: Mechanism, profile: StrategyProfile) -> None:
    """Reject profiles that are not total type -> strategy maps for ``mech``."""
    if len(profile.assignments) != len(spec.agents):
        raise InvalidInputError(
            f"profile covers {len(profile.assignments)} agents, "
            f"expected {len(spec.agents)}"
        )
    for i, assignment in enumerate(profile.assignments):
        agent = spec.agents[i]
        if set(assignment) != set(spec.type_spaces[i]):
            raise InvalidInputError(
                f"profile for agent {agent!r} must map exactly the types "
                f"{list(spec.type_spaces[i])}, got {sorted(assignment)}"
            )
        for type_label, strategy in assignment.items():
            if strategy not in mech.strategy_sets[i]:
                raise InvalidInputError(
                    f"profile maps agent {agent!r} type {type_label!r} to "
                    f"unknown strategy {strategy!r}"
                )


def interim_expected_utility(
    spec: GameSpec,
    mech: Mechanism,
    profile: StrategyProfile,
    agent: int,
    type_label: str,
    deviation: str | None = None,
) -> Fraction:
    """Expected utility of ``agent`` at ``type_label``, conditioning on the type.

    Opponents follow ``profile``; the agent plays ``deviation`` if given,
    otherwise the profile's prescribed strategy.
    """
    check_profile(spec, mech, profile)
    spec.check_type(agent, type_label)
    own = deviation if deviation is not None else profile.strategy_for(agent, type_label)
    if own not in mech.strategy_sets[agent]:
        raise InvalidInputError(
            f"unknown strategy {own!r} for agent {spec.agents[agent]!r}"
        )
    total = Fraction(0)
    for opponents, weight in spec.conditional(agent, type_label).items():
        point: list[str] = [own] * len(spec.agents)
        for j, opp_type in enumerate(opponents):
            actual = j if j < agent else j + 1
            point[actual] = profile.strategy_for(actual, opp_type)
        outcome = mech.outcome_of(tuple(point))
        total += weight * spec.utilities[agent][(outcome, type_label)]
    return total


def is_bne(spec: GameSpec, mech: Mechanism, profile: StrategyProfile) -> BneVerdict:
    """Check the weak-inequality equilibrium condition at every agent and type.

    Negative verdicts carry the lexicographically first profitable
    deviation in (agent, type, strategy) declaration order.
    """
    check_profile(spec, mech, profile)
    for i, agent in enumerate(spec.agents):
        for type_label in spec.type_spaces[i]:
            prescribed = interim_expected_utility(spec, mech, profile, i, type_label)
            for strategy in mech.strategy_sets[i]:
                dev = interim_expected_utility(
                    spec, mech, profile, i, type_label, deviation=strategy
                )
                if dev > prescribed:
                    return BneVerdict(
                        False,
                        DeviationWitness(
                            agent=i,
                            agent_label=agent,
                            type_label=type_label,
                            deviation=strategy,
                            prescribed_eu=prescribed,
                            deviation_eu=dev,
                        ),
                    )
    return BneVerdict(True, None)


def implements(
    spec: GameSpec,
    mech: Mechanism,
    profile: StrategyProfile,
    scf: SocialChoiceFunction,
) -> ImplementsVerdict:
    """True iff ``profile`` is a BNE whose induced outcomes equal ``scf``."""
    verdict = is_bne(spec, mech, profile)
    if not verdict.holds:
        return ImplementsVerdict(False, bne_witness=verdict.witness)
    for type_profile in spec.type_profiles():
        got = mech.outcome_of(profile.point(type_profile))
        want = scf.outcome_for(type_profile)
        if got != want:
            return ImplementsVerdict(
                False,
                mismatch_profile=type_profile,
                mechanism_outcome=got,
                scf_outcome=want,
            )
    return ImplementsVerdict(True)


def derive_scf(
    spec: GameSpec, mech: Mechanism, profile: StrategyProfile
) -> SocialChoiceFunction:
    """The social choice function induced by composing the outcome rule with ``profile``."""
    check_profile(spec, mech, profile)
    return SocialChoiceFunction(
        {tp: mech.outcome_of(profile.point(tp)) for tp in spec.type_profiles()}
    )


# -- exhaustive enumeration ----------------------------------------------


class _Compiled:
    """Integer-scaled tables for the exhaustive scan.

    Prior weights are scaled by the lcm of their denominators and each
    agent's utilities by the lcm of that agent's denominators; both factors
    are positive and constant within any one (agent, type) comparison, so
    best-response sets are exactly those of the rational computation.
    """

    def __init__(self, spec: GameSpec, mech: Mechanism):
        n = len(spec.agents)
        self.n = n
        self.spec = spec
        self.mech = mech
        self.type_counts = [len(ts) for ts in spec.type_spaces]
        self.strat_counts = [len(ss) for ss in mech.strategy_sets]

        self.strides = [0] * n
        acc = 1
        for j in reversed(range(n)):
            self.strides[j] = acc
            acc *= self.strat_counts[j]
        table = [0] * acc
        filled = 0
        outcome_index = {o: k for k, o in enumerate(spec.outcomes)}
        strategy_index = [
            {s: k for k, s in enumerate(ss)} for ss in mech.strategy_sets
        ]
        for point, outcome in mech.outcome_table.items():
            if len(point) != n:
                raise InvalidInputError(f"outcome table key {point!r} has wrong arity")
            try:
                flat = sum(
                    strategy_index[j][point[j]] * self.strides[j] for j in range(n)
                )
                table[flat] = outcome_index[outcome]
            except KeyError as exc:
                raise InvalidInputError(
                    f"outcome table references unknown label {exc.args[0]!r}"
                )
            filled += 1
        if filled != acc:
            raise InvalidInputError(
                f"outcome table has {filled} entries, expected {acc}"
            )
        self.table = table

        prior_scale = math.lcm(*(p.denominator for p in spec.prior.values())) if spec.prior else 1
        prior_int: dict[tuple[int, ...], int] = {}
        for idx_profile, label_profile in zip(
            product(*(range(t) for t in self.type_counts)), spec.type_profiles()
        ):
            scaled = spec.prior_of(label_profile) * prior_scale
            prior_int[idx_profile] = scaled.numerator  # exact: denominator divides lcm

        self.opp_type_profiles: list[list[tuple[int, ...]]] = []
        self.weights: list[list[list[int]]] = []
        for i in range(n):
            opp = list(
                product(*(range(t) for j, t in enumerate(self.type_counts) if j != i))
            )
            self.opp_type_profiles.append(opp)
            rows = []
            for t in range(self.type_counts[i]):
                row = [prior_int[o[:i] + (t,) + o[i:]] for o in opp]
                if sum(row) == 0:
                    raise InvalidInputError(
                        f"agent {spec.agents[i]!r} type "
                        f"{spec.type_spaces[i][t]!r} has zero marginal "
                        f"probability; conditional expectation is undefined"
                    )
                rows.append(row)
            self.weights.append(rows)

        self.util: list[list[list[int]]] = []
        for i in range(n):
            scale = math.lcm(*(v.denominator for v in spec.utilities[i].values())) if spec.utilities[i] else 1
            grid = [
                [0] * self.type_counts[i] for _ in range(len(spec.outcomes))
            ]
            for (outcome, type_label), value in spec.utilities[i].items():
                if outcome not in outcome_index or type_label not in spec.type_spaces[i]:
                    raise InvalidInputError(
                        f"utility entry {(outcome, type_label)!r} for agent "
                        f"{spec.agents[i]!r} references unknown labels"
                    )
                scaled = value * scale
                grid[outcome_index[outcome]][
                    spec.type_spaces[i].index(type_label)
                ] = scaled.numerator
            self.util.append(grid)

        self.assignment_counts = [
            self.strat_counts[i] ** self.type_counts[i] for i in range(n)
        ]
        self.assignments = [
            list(product(range(self.strat_counts[i]), repeat=self.type_counts[i]))
            for i in range(n)
        ]
        self._mask_memo: dict[tuple[int, tuple[int, ...]], tuple[int, ...]] = {}

    def best_response_masks(
        self, i: int, others_key: tuple[int, ...]
    ) -> tuple[int, ...]:
        """Per-type bitmasks of EU-maximal strategies for agent ``i``.

        ``others_key`` holds the other agents' assignment indices in agent
        order; results are memoized on it.
        """
        cached = self._mask_memo.get((i, others_key))
        if cached is not None:
            return cached
        other_agents = [j for j in range(self.n) if j != i]
        others = [self.assignments[j][k] for j, k in zip(other_agents, others_key)]
        parts = []
        for opp in self.opp_type_profiles[i]:
            part = 0
            for jj, j in enumerate(other_agents):
                part += others[jj][opp[jj]] * self.strides[j]
            parts.append(part)
        table = self.table
        util = self.util[i]
        stride = self.strides[i]
        masks = []
        for t in range(self.type_counts[i]):
            weights = self.weights[i][t]
            best = None
            mask = 0
            for s in range(self.strat_counts[i]):
                offset = s * stride
                eu = 0
                for k, w in enumerate(weights):
                    if w:
                        eu += w * util[table[parts[k] + offset]][t]
                if best is None or eu > best:
                    best = eu
                    mask = 1 << s
                elif eu == best:
                    mask |= 1 << s
            masks.append(mask)
        result = tuple(masks)
        self._mask_memo[(i, others_key)] = result
        return result

    def scan(self, first_lo: int, first_hi: int) -> list[tuple[int, ...]]:
        """All BNE combos with the first agent's assignment index in [lo, hi)."""
        n = self.n
        results: list[tuple[int, ...]] = []
        if n == 1:
            masks = self.best_response_masks(0, ())
            for a0 in range(first_lo, first_hi):
                choice = self.assignments[0][a0]
                if all(masks[t] >> choice[t] & 1 for t in range(len(choice))):
                    results.append((a0,))
            return results

        last = n - 1
        strat_last = self.strat_counts[last]
        prefix_ranges = [range(first_lo, first_hi)] + [
            range(self.assignment_counts[j]) for j in range(1, last)
        ]
        for prefix in product(*prefix_ranges):
            masks_last = self.best_response_masks(last, prefix)
            per_type = [
                [s for s in range(strat_last) if mask >> s & 1]
                for mask in masks_last
            ]
            if not all(per_type):
                continue
            for choice in product(*per_type):
                a_last = 0
                for s in choice:
                    a_last = a_last * strat_last + s
                ok = True
                for j in range(last):
                    others_key = prefix[:j] + prefix[j + 1 :] + (a_last,)
                    masks_j = self.best_response_masks(j, others_key)
                    own = self.assignments[j][prefix[j]]
                    if not all(
                        masks_j[t] >> own[t] & 1 for t in range(len(own))
                    ):
                        ok = False
                        break
                if ok:
                    results.append(prefix + (a_last,))
        return results

    def to_profile(self, combo: tuple[int, ...]) -> StrategyProfile:
        assignments = []
        for i, idx in enumerate(combo):
            choice = self.assignments[i][idx]
            assignments.append(
                {
                    self.spec.type_spaces[i][t]: self.mech.strategy_sets[i][choice[t]]
                    for t in range(self.type_counts[i])
                }
            )
        return StrategyProfile(tuple(assignments))


def search_space_size(spec: GameSpec, mech: Mechanism) -> int:
    """Number of candidate strategy-function profiles."""
    size = 1
    for types, strategies in zip(spec.type_spaces, mech.strategy_sets):
        size *= len(strategies) ** len(types)
    return size


def _scan_range(args) -> list[tuple[int, ...]]:
    spec, mech, lo, hi = args
    return _Compiled(spec, mech).scan(lo, hi)


def enumerate_bne(
    spec: GameSpec,
    mech: Mechanism,
    cap: int = DEFAULT_CAP,
    workers: int = 1,
) -> list[StrategyProfile]:
    """All pure-strategy BNE, in lexicographic order of the profile encoding.

    Raises :class:`SearchSpaceError` when the candidate space exceeds
    ``cap``. ``workers`` > 1 splits the first agent's assignment range
    across processes; partitions are merged in order, so results are
    identical for every worker count.
    """
    size = search_space_size(spec, mech)
    if size > cap:
        raise SearchSpaceError(size, cap)
    compiled = _Compiled(spec, mech)
    first_count = compiled.assignment_counts[0] if compiled.n else 0
    if workers <= 1 or first_count < 2:
        combos = compiled.scan(0, first_count)
    else:
        chunks = min(workers, first_count)
        bounds = [first_count * k // chunks for k in range(chunks + 1)]
        jobs = [
            (spec, mech, bounds[k], bounds[k + 1])
            for k in range(chunks)
            if bounds[k] < bounds[k + 1]
        ]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            combos = [combo for part in pool.map(_scan_range, jobs) for combo in part]
    return [compiled.to_profile(combo) for combo in combos]
