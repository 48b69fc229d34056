"""Person linkage: collapsing facility submissions onto deduplicated people.

The exact path keys on the 16-digit civil id. The fallback is an exact match
on (normalized name, date of birth, sex) — never similarity scoring — and an
ambiguous fallback key parks the event for human review instead of guessing.

Linkage is resolved batch-at-a-time so the resulting partition is a pure
function of {existing persons} ∪ {batch rows}, independent of row order:

  * rows sharing a civil id always join, and join the existing person
    holding that id;
  * a civil-id group may adopt an existing id-less person through a fuzzy
    key, but only when that key points at exactly one such person and at no
    second civil id anywhere in the context;
  * an id-less row joins through its fuzzy key only when the key is carried
    by exactly one identity; a key spanning two identities links nothing
    and parks the id-less rows that rely on it.

These rules keep one-person-per-civil-id absolute: two distinct civil ids
can never be bridged by a shared name/dob/sex, and two existing persons can
never be merged by a batch.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class MergeOutcome:
    person_key: str
    created_new: bool
    fields_updated: tuple[str, ...]
    conflicts: tuple[tuple[str, str, str], ...]  # (field, kept, discarded)


class UnionFind:
    """Path-halving union-find over arbitrary hashable nodes."""

    def __init__(self):
        self.parent: dict = {}

    def find(self, x):
        parent = self.parent
        if x not in parent:
            parent[x] = x
            return x
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb


@dataclass
class BatchLinkage:
    """Result of resolving one batch against the store context.

    ``groups`` holds row positions (batch-local) per resolved group; each
    group carries at most one existing person. ``parked`` rows matched an
    ambiguous fuzzy key and await review; their candidates reference either
    existing persons (``("p", idx)``) or other groups of this batch
    (``("g", group_no)``).
    """

    groups: list[list[int]] = field(default_factory=list)
    group_person: list[int | None] = field(default_factory=list)  # existing person idx
    parked: dict[int, list[tuple[str, int]]] = field(default_factory=dict)


def resolve_batch(
    niks: list[int],
    fuzzy_keys: list[tuple[int, int] | None],
    nik_to_person,
    fuzzy_to_persons,
    person_has_nik=lambda person: True,
    adoption_blocked=lambda nik, person: False,
) -> BatchLinkage:
    """Partition batch rows (by position) against the existing store.

    ``niks``: civil id per row (0 = none). ``fuzzy_keys``: hashed fallback
    key per row or None. ``nik_to_person(nik) -> person | None``,
    ``fuzzy_to_persons(key) -> list[person]`` and ``person_has_nik`` consult
    the live store.
    """
    n = len(niks)
    uf = UnionFind()

    # Pass 1: civil-id edges.
    nik_rows: dict[int, list[int]] = {}
    for i in range(n):
        if niks[i]:
            nik_rows.setdefault(niks[i], []).append(i)
    nik_person: dict[int, int] = {}
    for nik, rows in nik_rows.items():
        first = rows[0]
        for other in rows[1:]:
            uf.union(("r", other), ("r", first))
        person = nik_to_person(nik)
        if person is not None:
            nik_person[nik] = person
            uf.union(("r", first), ("p", person))

    fuzzy_rows: dict[tuple[int, int], list[int]] = {}
    for i in range(n):
        if fuzzy_keys[i] is not None:
            fuzzy_rows.setdefault(fuzzy_keys[i], []).append(i)

    key_persons = {key: sorted(set(fuzzy_to_persons(key))) for key in fuzzy_rows}

    # Pass 2: a civil-id group may adopt exactly one id-less existing person.
    adoptions: dict[int, set[int]] = {}   # nik -> candidate persons
    adopters: dict[int, set[int]] = {}    # person -> candidate niks
    for key, rows in fuzzy_rows.items():
        persons = key_persons[key]
        key_niks = sorted({niks[i] for i in rows if niks[i]})
        if len(persons) != 1 or len(key_niks) != 1:
            continue
        person = persons[0]
        if person_has_nik(person) or nik_person.get(key_niks[0]) is not None:
            continue
        if adoption_blocked(key_niks[0], person):
            continue  # administratively unlinked pair never re-links itself
        adoptions.setdefault(key_niks[0], set()).add(person)
        adopters.setdefault(person, set()).add(key_niks[0])
    for nik, persons in adoptions.items():
        if len(persons) != 1:
            continue  # one group pointing at two persons: adopt neither
        person = next(iter(persons))
        if len(adopters[person]) != 1:
            continue  # two civil ids pointing at one person: adopt neither
        nik_person[nik] = person
        uf.union(("r", nik_rows[nik][0]), ("p", person))

    # Pass 3: fuzzy edges for id-less rows. Identities never merge in this
    # pass (edges only attach id-less rows), so ambiguity counts are
    # order-free.
    person_nodes: set = {("p", p) for p in nik_person.values()}
    parked_raw: dict[int, list] = {}
    for key, rows in fuzzy_rows.items():
        idless = [i for i in rows if not niks[i]]
        candidates: dict = {}
        for person in key_persons[key]:
            node = ("p", person)
            person_nodes.add(node)
            candidates[uf.find(node)] = node
        for i in rows:
            if niks[i]:
                rep = uf.find(("r", i))
                candidates.setdefault(rep, ("r", i))
        if not idless:
            continue
        if len(candidates) == 0:
            for other in idless[1:]:
                uf.union(("r", other), ("r", idless[0]))
        elif len(candidates) == 1:
            target = next(iter(candidates.values()))
            for i in idless:
                uf.union(("r", i), target)
        else:
            for i in idless:
                parked_raw[i] = list(candidates.values())

    rep_person: dict = {}
    for node in person_nodes:
        rep_person[uf.find(node)] = node[1]

    groups_by_rep: dict = {}
    for i in range(n):
        if i in parked_raw:
            continue
        rep = uf.find(("r", i))
        groups_by_rep.setdefault(rep, []).append(i)

    out = BatchLinkage()
    rep_group: dict = {}
    for rep, rows in sorted(groups_by_rep.items(), key=lambda kv: kv[1][0]):
        rep_group[rep] = len(out.groups)
        out.groups.append(rows)
        out.group_person.append(rep_person.get(rep))
    for i, nodes in parked_raw.items():
        resolved = []
        for node in nodes:
            rep = uf.find(node)
            if rep in rep_person:
                resolved.append(("p", rep_person[rep]))
            elif rep in rep_group:
                resolved.append(("g", rep_group[rep]))
        out.parked[i] = sorted(set(resolved))
    return out


def dedup_batch(
    niks: list[int],
    fuzzy_keys: list[tuple[int, int] | None],
) -> list[list[int]]:
    """Context-free partition of a batch into person groups (row positions).

    Parked (ambiguous-key) rows come back as singleton groups.
    """
    link = resolve_batch(niks, fuzzy_keys, lambda nik: None, lambda key: [])
    groups = [sorted(g) for g in link.groups]
    groups.extend([i] for i in link.parked)
    return sorted(groups)


# Field-merge precedence: non-empty beats empty; later report date wins;
# ties break by source id then by the value itself, so merges are
# deterministic whatever the arrival order.

def pick_value(
    candidates: list[tuple[object, int, str]],
) -> tuple[object | None, list[tuple[object, int, str]]]:
    """candidates: (value, report_ord, source); empties must be pre-filtered.
    Returns (winner, losers-with-different-values)."""
    if not candidates:
        return None, []
    ranked = sorted(candidates, key=lambda c: (c[1], c[2], str(c[0])))
    winner = ranked[-1][0]
    losers = [c for c in ranked[:-1] if c[0] != winner]
    return winner, losers
