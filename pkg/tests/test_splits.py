import itertools

import pytest
from hypothesis import given, settings, strategies as st

from lexent.datasets import RelationInstance
from lexent.errors import SplitError
from lexent.splits import (
    LEX, OOD, RAND, Fold, SplitSpec, dump_folds, load_folds, make_folds, part_vocabulary,
    split_lexical, split_out_of_domain, split_random,
)
from synth import make_world


def dummy(n):
    return [RelationInstance(f"x{i}", f"y{i}", "hyper") for i in range(n)]


def assert_disjoint_parts(fold):
    parts = [set(fold.train), set(fold.validation), set(fold.test), set(fold.discarded)]
    for a, b in itertools.combinations(parts, 2):
        assert not a & b


class TestSpec:
    def test_ratios_must_sum_to_one(self):
        with pytest.raises(SplitError):
            SplitSpec(RAND, 0, (0.7, 0.1, 0.25))

    def test_unknown_protocol(self):
        with pytest.raises(SplitError):
            SplitSpec("XVAL")

    def test_case_insensitive(self):
        assert SplitSpec("lex").protocol == LEX


class TestRandom:
    def test_sizes_100(self):
        f = split_random(dummy(100), SplitSpec(RAND, 3))
        assert (len(f.train), len(f.validation), len(f.test)) == (70, 5, 25)
        assert sorted(f.train + f.validation + f.test) == list(range(100))

    def test_sizes_bless_count(self):
        f = split_random(dummy(26554), SplitSpec(RAND, 0))
        # floor(0.25 n) = 6638, floor(0.05 n) = 1327, remainder 18589
        assert (len(f.test), len(f.validation), len(f.train)) == (6638, 1327, 18589)

    def test_deterministic(self):
        a = split_random(dummy(50), SplitSpec(RAND, 9))
        b = split_random(dummy(50), SplitSpec(RAND, 9))
        c = split_random(dummy(50), SplitSpec(RAND, 10))
        assert a == b and a != c

    def test_too_small(self):
        with pytest.raises(SplitError):
            split_random(dummy(2), SplitSpec(RAND))

    def test_wrong_protocol(self):
        with pytest.raises(SplitError):
            split_random(dummy(10), SplitSpec(LEX))


class TestLexical:
    TOY = [RelationInstance(a, b, "hyper") for a, b in ("ab", "cd", "ef", "gh")]

    @pytest.mark.parametrize("seed", range(20))
    def test_disjoint_pair_toy(self, seed):
        # four instances cannot give a 5% validation part, so the toy uses balanced ratios
        f = split_lexical(self.TOY, SplitSpec(LEX, seed, (0.5, 0.25, 0.25)))
        assert f.discarded == []
        assert (len(f.train), len(f.validation), len(f.test)) == (2, 1, 1)
        vocabs = [part_vocabulary(self.TOY, p) for p in (f.train, f.validation, f.test)]
        for a, b in itertools.combinations(vocabs, 2):
            assert not a & b

    def test_toy_default_ratios_leave_validation_empty(self):
        with pytest.raises(SplitError, match="validation"):
            split_lexical(self.TOY, SplitSpec(LEX, 0))

    def test_zero_ratio_bucket_allowed_empty(self):
        f = split_lexical(self.TOY, SplitSpec(LEX, 0, (0.75, 0.0, 0.25)))
        assert f.validation == [] and f.discarded == []

    def test_brute_force_bucket_membership(self):
        data, _ = make_world(n_domains=5, concepts_per_domain=4)
        f = split_lexical(data, SplitSpec(LEX, 1))
        assert_disjoint_parts(f)
        assert len(f.train) + len(f.validation) + len(f.test) + len(f.discarded) == len(data)
        vocab = [part_vocabulary(data, p) for p in (f.train, f.validation, f.test)]
        for i, inst in enumerate(data):
            homes = [k for k, v in enumerate(vocab) if inst.x in v and inst.y in v]
            if i in f.discarded:
                assert homes == []
            else:
                assert len(homes) == 1

    def test_deterministic(self):
        data, _ = make_world()
        assert split_lexical(data, SplitSpec(LEX, 4)) == split_lexical(data, SplitSpec(LEX, 4))

    def test_empty_part_raises(self):
        data = [RelationInstance("a", "b", "hyper")]
        with pytest.raises(SplitError, match="seed"):
            split_lexical(data, SplitSpec(LEX, 0))

    def test_train_gets_the_largest_share(self):
        data, _ = make_world(n_domains=6, concepts_per_domain=5)
        f = split_lexical(data, SplitSpec(LEX, 0))
        assert len(f.train) > len(f.test) > len(f.validation) > 0


class TestOutOfDomain:
    def test_one_fold_per_domain(self):
        data, _ = make_world(n_domains=5)
        folds = split_out_of_domain(data, SplitSpec(OOD, 0))
        assert [f.held_out_domain for f in folds] == [f"dom{i}" for i in range(5)]
        for f in folds:
            assert_disjoint_parts(f)
            train_dom = {data[i].domain for i in f.train}
            val_dom = {data[i].domain for i in f.validation}
            assert f.held_out_domain not in train_dom | val_dom
            assert val_dom == {f.validation_domain}
            assert f.validation_domain not in train_dom
            assert {data[i].domain for i in f.test} == {f.held_out_domain}
            assert len(f.train) + len(f.validation) + len(f.test) == len(data)

    def test_three_domains_train_is_one_domain(self):
        data, _ = make_world(n_domains=3)
        for f in split_out_of_domain(data, SplitSpec(OOD, 5)):
            assert len({data[i].domain for i in f.train}) == 1

    def test_two_domains_rejected(self):
        data, _ = make_world(n_domains=2)
        with pytest.raises(SplitError):
            split_out_of_domain(data, SplitSpec(OOD))

    def test_no_domains_rejected(self):
        with pytest.raises(SplitError):
            split_out_of_domain(dummy(10), SplitSpec(OOD))


def test_fold_file_roundtrip(tmp_path):
    data, _ = make_world()
    spec = SplitSpec(OOD, 3)
    folds = make_folds(data, spec)
    dump_folds(spec, folds, tmp_path / "f.json")
    spec2, folds2 = load_folds(tmp_path / "f.json")
    assert spec2 == spec and folds2 == folds
    assert isinstance(folds2[0], Fold)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 400), st.integers(0, 2**64 - 1))
def test_random_partition_property(n, seed):
    f = split_random(dummy(n), SplitSpec(RAND, seed))
    assert sorted(f.train + f.validation + f.test) == list(range(n))
    assert len(f.test) == (25 * n) // 100
