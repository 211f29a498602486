import itertools

import numpy as np
import pytest

from app.services.assign import (
    Assignment,
    greedy_assign,
    is_stable,
    nearest_tiebreak,
    read_assignment,
    shuffle_order,
    write_assignment,
)
from app.services.codes import codebook
from app.utils.exceptions import EmptyPoolError, ShapeMismatchError, SizeMismatchError


def brute_force_optimum(latents, book):
    """Minimum total squared distance over every bijection."""
    costs = ((latents[:, None, :] - book[None, :, :]) ** 2).sum(axis=2)
    n = len(latents)
    return min(sum(costs[i, perm[i]] for i in range(n)) for perm in itertools.permutations(range(n)))


class TestNearest:
    def test_ties_go_to_lowest_index(self):
        book = np.array([[1.0, 1.0], [-1.0, 1.0], [1.0, -1.0]])
        assert nearest_tiebreak(np.zeros(2), book) == 0

    def test_skips_taken_codes(self):
        book = np.array([[1.0, 1.0], [-1.0, -1.0]])
        assert nearest_tiebreak(np.array([1.0, 1.0]), book, np.array([False, True])) == 1

    def test_empty_pool(self):
        with pytest.raises(EmptyPoolError):
            nearest_tiebreak(np.zeros(2), np.ones((2, 2)), np.array([False, False]))


class TestGreedyAssign:
    def test_first_visited_takes_its_nearest(self):
        latents = np.array([[0.9, 0.9], [0.8, 1.0]])
        book = np.array([[1.0, 1.0], [-1.0, -1.0]])
        result = greedy_assign(latents, book, [1, 0])
        np.testing.assert_array_equal(result.codes, [1, 0])
        assert result.distances_sq[1] == pytest.approx(0.04)

    def test_order_changes_the_map(self):
        latents = np.array([[0.9, 0.9], [0.8, 1.0]])
        book = np.array([[1.0, 1.0], [-1.0, -1.0]])
        a = greedy_assign(latents, book, [0, 1])
        b = greedy_assign(latents, book, [1, 0])
        assert not a.same_map(b)

    @pytest.mark.parametrize("order,expected_codes,expected_d2", [
        ([0, 1], [0, 1], [0.65, 1.25]),
        ([1, 0], [1, 0], [1.45, 0.85]),
    ])
    def test_worked_two_code_example(self, order, expected_codes, expected_d2):
        book = np.array([[1.0, 1.0], [1.0, -1.0]])
        latents = np.array([[0.9, 0.2], [0.8, 0.1]])
        result = greedy_assign(latents, book, order)
        np.testing.assert_array_equal(result.codes, expected_codes)
        np.testing.assert_allclose(result.distances_sq, expected_d2)

    def test_single_sample_takes_the_single_code(self):
        result = greedy_assign(np.array([[0.3, -0.2]]), np.array([[-1.0, 1.0]]), [0])
        np.testing.assert_array_equal(result.codes, [0])

    @pytest.mark.parametrize("seed", range(200))
    def test_bijection_no_better_than_optimum(self, seed, tiny_layout):
        rng = np.random.default_rng(seed)
        count = int(rng.integers(1, 7))
        book = codebook(1, 1, count, tiny_layout)
        latents = rng.normal(size=book.shape)
        result = greedy_assign(latents, book, shuffle_order(count, rng))
        assert sorted(result.codes.tolist()) == list(range(count))
        assert result.total_loss >= brute_force_optimum(latents, book) - 1e-9

    @pytest.mark.parametrize("seed", range(20))
    def test_exact_when_latents_are_permuted_codes(self, seed, tiny_layout):
        rng = np.random.default_rng(seed)
        count = int(rng.integers(1, 7))
        book = codebook(1, 1, count, tiny_layout)
        perm = rng.permutation(count)
        result = greedy_assign(book[perm], book, shuffle_order(count, rng))
        np.testing.assert_array_equal(result.codes, perm)
        assert result.total_loss == 0.0

    def test_size_mismatch(self):
        with pytest.raises(SizeMismatchError):
            greedy_assign(np.zeros((2, 3)), np.zeros((3, 3)), [0, 1])

    def test_width_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            greedy_assign(np.zeros((2, 3)), np.zeros((2, 4)), [0, 1])

    def test_order_must_be_permutation(self):
        with pytest.raises(SizeMismatchError):
            greedy_assign(np.zeros((2, 3)), np.ones((2, 3)), [0, 0])


class TestShuffleOrder:
    def test_single_sample_is_identity(self):
        np.testing.assert_array_equal(shuffle_order(1, np.random.default_rng(3)), [0])

    def test_same_seed_same_permutation(self):
        a = shuffle_order(12, np.random.default_rng(21))
        b = shuffle_order(12, np.random.default_rng(21))
        np.testing.assert_array_equal(a, b)

    def test_five_from_seed_zero(self):
        order = shuffle_order(5, np.random.default_rng(0))
        assert sorted(order.tolist()) == [0, 1, 2, 3, 4]
        np.testing.assert_array_equal(order, np.random.default_rng(0).permutation(5))


class TestStability:
    @staticmethod
    def _map(*codes):
        return Assignment(codes=np.array(codes), distances_sq=np.zeros(len(codes)))

    def test_needs_full_window(self):
        assert not is_stable([self._map(0, 1), self._map(0, 1)], window=3)

    def test_identical_window(self):
        history = [self._map(1, 0), self._map(0, 1), self._map(0, 1), self._map(0, 1)]
        assert is_stable(history, window=3)

    def test_recent_change(self):
        history = [self._map(0, 1), self._map(0, 1), self._map(1, 0)]
        assert not is_stable(history, window=3)


class TestPersistence:
    def test_csv_round_trip(self, tmp_path):
        result = Assignment(codes=np.array([2, 0, 1]), distances_sq=np.array([0.5, 0.25, 1.0 / 3.0]))
        path = tmp_path / "assignments" / "batch2.csv"
        write_assignment(path, result, first_index=11)
        lines = path.read_text().splitlines()
        assert lines[0] == "global_index,code_index,distance_sq"
        assert lines[1].startswith("11,2,")
        restored = read_assignment(path)
        assert restored.same_map(result)
        np.testing.assert_array_equal(restored.distances_sq, result.distances_sq)
