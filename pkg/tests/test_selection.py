"""Entropy-ranked view selection and pseudo-label extraction."""

import math

import numpy as np
import pytest

from d2tpt.numerics import logit_entropies
from d2tpt.selection import pseudo_label, select_confident


def test_ceiling_rule_64_views(rng):
    logits = rng.standard_normal((64, 10))
    block = select_confident(logits, 0.1)
    assert block.selected_count == 7  # ceil(6.4)
    assert block.mask.sum() == 7


def test_single_row_always_selected(rng):
    logits = rng.standard_normal((1, 5))
    for rho in (0.01, 0.5, 1.0):
        block = select_confident(logits, rho)
        assert block.selected_count == 1
        assert block.mask[0]


def test_matches_full_sort_oracle():
    for seed in range(25):
        g = np.random.default_rng(seed)
        n = int(g.integers(2, 20))
        logits = g.standard_normal((n, 4)) * 3.0
        rho = float(g.uniform(0.05, 1.0))
        block = select_confident(logits, rho)
        m = math.ceil(rho * n)
        ents = logit_entropies(logits)
        want = set(np.argsort(ents, kind="stable")[:m])
        assert set(np.flatnonzero(block.mask)) == want
        assert block.selected_count == m
        # every selected entropy <= every unselected entropy
        if m < n:
            assert ents[block.mask].max() <= ents[~block.mask].min() + 1e-15


def test_tie_break_by_row_index():
    logits = np.tile(np.array([[2.0, 1.0, 0.0]]), (6, 1))  # identical entropies
    block = select_confident(logits, 0.5)
    assert list(np.flatnonzero(block.mask)) == [0, 1, 2]


def test_threshold_is_mth_smallest(rng):
    logits = rng.standard_normal((10, 4)) * 5.0
    block = select_confident(logits, 0.3)
    ents = np.sort(logit_entropies(logits))
    assert abs(block.threshold - ents[2]) < 1e-15  # ceil(3.0) = 3 rows


def test_rho_out_of_range(rng):
    logits = rng.standard_normal((4, 3))
    for rho in (0.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            select_confident(logits, rho)


def _block_from_rows(rows):
    return select_confident(np.asarray(rows, dtype=float), 1.0)


def test_pseudo_label_unanimous():
    rows = np.zeros((4, 3))
    rows[:, 2] = 5.0
    out = pseudo_label(_block_from_rows(rows))
    assert out.label == 2
    assert out.support == 4


def test_pseudo_label_tie_broken_by_min_entropy():
    # classes 0 and 1 both get two votes; class 1's best vote is sharper
    rows = np.array([
        [3.0, 0.0, 0.0],
        [2.9, 0.0, 0.0],
        [0.0, 8.0, 0.0],
        [0.0, 2.95, 0.0],
    ])
    out = pseudo_label(_block_from_rows(rows))
    ents = logit_entropies(rows)
    assert out.label == 1
    assert abs(out.min_entropy - ents[2]) < 1e-15
    assert out.support == 2


def test_pseudo_label_singleton(rng):
    rows = rng.standard_normal((1, 6))
    out = pseudo_label(_block_from_rows(rows))
    assert out.label == int(np.argmax(rows[0]))
    assert abs(out.min_entropy - logit_entropies(rows)[0]) < 1e-15
    assert out.support == 1


def test_pseudo_label_min_entropy_bound():
    for seed in range(20):
        g = np.random.default_rng(seed)
        rows = g.standard_normal((8, 5)) * 2.0
        block = select_confident(rows, 0.5)
        out = pseudo_label(block)
        ents = logit_entropies(rows)
        votes = np.argmax(rows, axis=1)
        for i in np.flatnonzero(block.mask):
            if votes[i] == out.label:
                assert out.min_entropy <= ents[i] + 1e-15


def test_selected_multiset_permutation_invariant(rng):
    logits = rng.standard_normal((12, 4)) * 2.0
    perm = rng.permutation(12)
    a = select_confident(logits, 0.4)
    b = select_confident(logits[perm], 0.4)
    ents_a = np.sort(logit_entropies(logits)[a.mask])
    ents_b = np.sort(logit_entropies(logits[perm])[b.mask])
    assert np.allclose(ents_a, ents_b, atol=1e-15)
