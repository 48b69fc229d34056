"""Linkage partition against a brute-force union-find oracle."""

import random

from epiwatch.linkage import dedup_batch, pick_value, resolve_batch


# --- oracle ------------------------------------------------------------------

def oracle_partition(niks, fuzzy_keys):
    """Brute-force connected components under: same civil id, or same fuzzy
    key when that key spans at most one distinct civil id. Ambiguous-key
    id-less rows stay singletons."""
    n = len(niks)
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    by_nik = {}
    for i in range(n):
        if niks[i]:
            by_nik.setdefault(niks[i], []).append(i)
    for rows in by_nik.values():
        for other in rows[1:]:
            union(rows[0], other)

    by_key = {}
    for i in range(n):
        if fuzzy_keys[i] is not None:
            by_key.setdefault(fuzzy_keys[i], []).append(i)
    ambiguous_rows = set()
    for key, rows in by_key.items():
        distinct_niks = {niks[i] for i in rows if niks[i]}
        if len(distinct_niks) <= 1:
            anchor = rows[0]
            for other in rows[1:]:
                union(anchor, other)
        else:
            for i in rows:
                if not niks[i]:
                    ambiguous_rows.add(i)

    groups = {}
    for i in range(n):
        if i in ambiguous_rows:
            continue
        groups.setdefault(find(i), []).append(i)
    out = [sorted(g) for g in groups.values()]
    out.extend([[i] for i in sorted(ambiguous_rows)])
    return sorted(out)


def synth_batch(rng, n_rows, n_identities):
    """Rows drawn over a pool of identities; some rows omit the civil id,
    and a slice of identities deliberately share a fuzzy key."""
    identities = []
    for i in range(n_identities):
        nik = 10 ** 15 + i
        if rng.random() < 0.15:
            key = (777, rng.randrange(3))  # collision-prone pool
        else:
            key = (1000 + i, i)
        identities.append((nik, key))
    niks, keys = [], []
    for _ in range(n_rows):
        nik, key = identities[rng.randrange(n_identities)]
        drop_nik = rng.random() < 0.25
        drop_key = rng.random() < 0.2
        if drop_nik and drop_key:
            drop_key = False
        niks.append(0 if drop_nik else nik)
        keys.append(None if drop_key else key)
    return niks, keys


class TestDedupBatchOracle:
    def test_randomized_batches_match_oracle(self):
        rng = random.Random(20210301)
        for trial in range(60):
            n_rows = rng.randint(1, 400)
            n_identities = max(1, int(n_rows * rng.uniform(0.3, 1.0)))
            niks, keys = synth_batch(rng, n_rows, n_identities)
            assert dedup_batch(niks, keys) == oracle_partition(niks, keys), trial

    def test_partition_order_insensitive(self):
        rng = random.Random(99)
        niks, keys = synth_batch(rng, 120, 40)
        base = dedup_batch(niks, keys)
        for _ in range(5):
            perm = list(range(len(niks)))
            rng.shuffle(perm)
            permuted = dedup_batch([niks[i] for i in perm], [keys[i] for i in perm])
            # map row positions back through the permutation
            restored = sorted(sorted(perm[i] for i in g) for g in permuted)
            assert restored == base

    def test_all_distinct_niks(self):
        niks = [10 ** 15 + i for i in range(50)]
        keys = [(i, i) for i in range(50)]
        assert dedup_batch(niks, keys) == [[i] for i in range(50)]

    def test_ten_thousand_rows_exact_group_count(self):
        rng = random.Random(6200)
        n_identities = 6200
        niks, keys = [], []
        seen = set()
        # every identity appears at least once; remaining rows are repeats
        order = list(range(n_identities)) + [
            rng.randrange(n_identities) for _ in range(10_000 - n_identities)]
        rng.shuffle(order)
        for ident in order:
            niks.append(10 ** 15 + ident)
            keys.append((2000 + ident, ident))
            seen.add(ident)
        groups = dedup_batch(niks, keys)
        assert len(groups) == 6200
        assert groups == oracle_partition(niks, keys)

    def test_nik_pair_plus_fuzzy_row_one_group(self):
        # same person: two rows via civil id, third via the fallback key only
        niks = [555, 555, 0]
        keys = [(9, 9), (9, 9), (9, 9)]
        assert dedup_batch(niks, keys) == [[0, 1, 2]]

    def test_ambiguous_fuzzy_key_parks(self):
        niks = [111, 222, 0]
        keys = [(9, 9), (9, 9), (9, 9)]
        assert dedup_batch(niks, keys) == [[0], [1], [2]]


class TestResolveBatchAgainstStore:
    def test_fuzzy_match_against_existing_person(self):
        link = resolve_batch(
            [0], [(9, 9)],
            nik_to_person=lambda nik: None,
            fuzzy_to_persons=lambda key: [42] if key == (9, 9) else [],
            person_has_nik=lambda p: False,
        )
        assert link.groups == [[0]]
        assert link.group_person == [42]
        assert not link.parked

    def test_fuzzy_match_two_existing_persons_parks(self):
        link = resolve_batch(
            [0], [(9, 9)],
            nik_to_person=lambda nik: None,
            fuzzy_to_persons=lambda key: [41, 42],
            person_has_nik=lambda p: False,
        )
        assert not link.groups
        assert link.parked == {0: [("p", 41), ("p", 42)]}

    def test_nik_row_adopts_idless_person(self):
        link = resolve_batch(
            [555], [(9, 9)],
            nik_to_person=lambda nik: None,
            fuzzy_to_persons=lambda key: [42],
            person_has_nik=lambda p: False,
        )
        assert link.group_person == [42]

    def test_nik_row_never_bridges_to_nik_bearing_person(self):
        link = resolve_batch(
            [555], [(9, 9)],
            nik_to_person=lambda nik: None,
            fuzzy_to_persons=lambda key: [42],
            person_has_nik=lambda p: True,
        )
        assert link.group_person == [None]  # new person, no adoption

    def test_two_niks_cannot_adopt_same_person(self):
        link = resolve_batch(
            [555, 777], [(9, 9), (9, 9)],
            nik_to_person=lambda nik: None,
            fuzzy_to_persons=lambda key: [42],
            person_has_nik=lambda p: False,
        )
        assert link.group_person == [None, None]

    def test_exact_nik_match_wins(self):
        link = resolve_batch(
            [555], [None],
            nik_to_person=lambda nik: 7 if nik == 555 else None,
            fuzzy_to_persons=lambda key: [],
        )
        assert link.group_person == [7]


class TestMergePrecedence:
    def test_later_report_wins(self):
        winner, losers = pick_value([("A", 100, "src1"), ("B", 101, "src2")])
        assert winner == "B"
        assert losers == [("A", 100, "src1")]

    def test_tie_breaks_by_source_then_value(self):
        winner, _ = pick_value([("A", 100, "src1"), ("B", 100, "src2")])
        assert winner == "B"
        winner, _ = pick_value([("A", 100, "src1"), ("B", 100, "src1")])
        assert winner == "B"

    def test_single_candidate(self):
        winner, losers = pick_value([("A", 100, "src1")])
        assert winner == "A" and not losers

    def test_equal_values_no_conflict(self):
        winner, losers = pick_value([("A", 100, "src1"), ("A", 101, "src2")])
        assert winner == "A" and not losers

    def test_order_free(self):
        rng = random.Random(5)
        candidates = [(f"V{i % 4}", rng.randrange(5), f"s{rng.randrange(3)}") for i in range(8)]
        base = pick_value(list(candidates))
        for _ in range(10):
            rng.shuffle(candidates)
            assert pick_value(list(candidates)) == base
