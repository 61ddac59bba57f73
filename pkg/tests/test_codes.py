import itertools

import numpy as np
import pytest
from scipy import stats

from zlalab import codes, freq
from zlalab.codes import EOS


def cumulative_capacity(alphabet_size: int, length: int) -> int:
    # brute-force oracle for the number of messages of length <= given bound
    return sum((alphabet_size - 1) ** (l - 1) for l in range(1, length + 1))


class TestOcLength:
    @pytest.mark.parametrize("a", [2, 3, 5, 40, 1000])
    def test_rank_one_always_length_one(self, a):
        assert codes.oc_length(1, a) == 1

    def test_small_alphabet_pattern(self):
        assert [codes.oc_length(r, 3) for r in range(2, 8)] == [2, 2, 3, 3, 3, 3]

    def test_rank_41_alphabet_40(self):
        # oracle: cumulative capacities 1, 40, 1561 bracket rank 41
        assert cumulative_capacity(40, 2) < 41 <= cumulative_capacity(40, 3)
        assert codes.oc_length(41, 40) == 3

    def test_non_decreasing_in_rank(self):
        lengths = [codes.oc_length(r, 5) for r in range(1, 400)]
        assert all(a <= b for a, b in zip(lengths, lengths[1:]))

    def test_matches_bruteforce_search(self):
        for a in (2, 3, 7):
            for r in range(1, 60):
                expect = next(
                    l for l in itertools.count(1) if cumulative_capacity(a, l) >= r
                )
                assert codes.oc_length(r, a) == expect

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            codes.oc_length(0, 3)
        with pytest.raises(ValueError):
            codes.oc_length(1, 1)


class TestOptimalCode:
    def test_three_inputs_alphabet_three(self):
        code = codes.optimal_code(3, 3, 5)
        assert code.messages == ((EOS,), (1, EOS), (2, EOS))

    def test_capacity_error_reports_sizes(self):
        with pytest.raises(codes.CapacityError) as err:
            codes.optimal_code(100, 3, 4)
        assert err.value.space_size == cumulative_capacity(3, 4)
        assert err.value.n_inputs == 100

    def test_lengths_non_decreasing_and_unique(self):
        code = codes.optimal_code(500, 5, 10)
        lengths = code.lengths()
        assert (np.diff(lengths) >= 0).all()
        assert code.is_unique

    def test_lengths_follow_oc_length(self):
        code = codes.optimal_code(200, 4, 12)
        for rank, msg in enumerate(code.messages, start=1):
            assert len(msg) == codes.oc_length(rank, 4)

    @pytest.mark.parametrize(
        "a,expected",
        [(5, 3.55), (10, 2.82), (40, 2.29), (1000, 1.86)],
    )
    def test_reference_mean_lengths(self, a, expected):
        code = codes.optimal_code(1000, a, 30)
        e = float(code.lengths() @ freq.power_law(1000).probs)
        assert e == pytest.approx(expected, abs=0.01)

    def test_beats_every_other_assignment_on_small_instances(self):
        # brute force over all feasible length assignments, n <= 8, a = 3
        for n in range(2, 9):
            probs = freq.power_law(n).probs
            oc = codes.optimal_code(n, 3, 8)
            best = float(oc.lengths() @ probs)
            capacities = {l: 2 ** (l - 1) for l in range(1, 5)}
            for assignment in itertools.product(range(1, 5), repeat=n):
                counts = {}
                for l in assignment:
                    counts[l] = counts.get(l, 0) + 1
                if any(counts[l] > capacities[l] for l in counts):
                    continue
                e = float(np.array(assignment) @ probs)
                assert best <= e + 1e-12


class TestLengthPmf:
    def test_direct_substitution(self):
        assert codes.mt_length_pmf(5, 3).tolist() == pytest.approx([0.2, 0.16, 0.64])

    def test_binary_alphabet(self):
        assert codes.mt_length_pmf(2, 2).tolist() == [0.5, 0.5]

    @pytest.mark.parametrize("a,max_len", [(2, 1), (3, 7), (40, 30), (1000, 11)])
    def test_sums_to_one(self, a, max_len):
        assert codes.mt_length_pmf(a, max_len).sum() == pytest.approx(1.0, abs=1e-12)

    def test_strictly_decreasing_before_truncation(self):
        pmf = codes.mt_length_pmf(5, 200)
        assert (np.diff(pmf[:-1]) < 0).all()


class TestMonkeyTyping:
    def test_deterministic_given_seed(self):
        a = codes.monkey_typing(200, 10, 20, np.random.default_rng(5))
        b = codes.monkey_typing(200, 10, 20, np.random.default_rng(5))
        assert a.messages == b.messages

    def test_unique_and_eos_terminated(self):
        code = codes.monkey_typing(300, 5, 30, np.random.default_rng(1))
        assert code.is_unique
        assert all(m[-1] == EOS and EOS not in m[:-1] for m in code.messages)

    def test_capacity_error(self):
        with pytest.raises(codes.CapacityError):
            codes.monkey_typing(100, 3, 4, np.random.default_rng(0))

    def test_non_unique_mode_skips_rejection(self):
        code = codes.monkey_typing(4000, 2, 4, np.random.default_rng(2), unique=False)
        assert code.n == 4000  # far beyond the 4-message unique capacity

    def test_sampled_assignment_order(self):
        code = codes.monkey_typing(50, 5, 20, np.random.default_rng(3), order="sampled")
        assert code.is_unique

    def test_length_histogram_matches_pmf_where_unexhausted(self):
        # Eq-based oracle restricted to lengths whose message classes are far
        # from exhausted by the uniqueness constraint (capacity >= 5x demand).
        n, a, max_len, n_codes = 1000, 10, 30, 50
        rng = np.random.default_rng(17)
        pmf = codes.mt_length_pmf(a, max_len)
        counts = np.zeros(max_len)
        for _ in range(n_codes):
            code = codes.monkey_typing(n, a, max_len, rng)
            counts += np.bincount(code.lengths(), minlength=max_len + 1)[1:]
        capacities = np.array([(a - 1) ** (l - 1) for l in range(1, max_len + 1)], dtype=float)
        free = capacities >= 5 * n * pmf
        observed = counts[free]
        expected = pmf[free] / pmf[free].sum() * observed.sum()
        keep = expected >= 5
        _, p = stats.chisquare(observed[keep], f_exp=expected[keep] * observed[keep].sum() / expected[keep].sum())
        assert p > 0.001

    @pytest.mark.parametrize("a", [5, 10])
    def test_small_alphabet_zla_shape(self, a):
        # binned mean lengths must rise with rank (uniqueness pressure)
        n, max_len, n_codes, bin_size = 1000, 30, 50, 50
        rng = np.random.default_rng(23)
        lengths = np.zeros((n_codes, n))
        for k in range(n_codes):
            lengths[k] = codes.monkey_typing(n, a, max_len, rng).lengths()
        per_code = lengths.reshape(n_codes, n // bin_size, bin_size).mean(axis=2)
        binned = per_code.mean(axis=0)
        stderr = per_code.std(axis=0) / np.sqrt(n_codes)
        # non-decreasing up to adjacent-bin sampling noise, with a clear net rise
        slack = 4.0 * np.maximum(stderr[1:], stderr[:-1])
        assert (np.diff(binned) >= -slack).all()
        assert binned[-1] > binned[0] + 1.0


class TestControlCode:
    def test_point_mass_unigram(self):
        template = codes.Code(
            ((1, 1, EOS), (1, EOS), (EOS,)), codes.Alphabet(4), 5
        )
        control = codes.control_code(template, np.random.default_rng(0))
        assert control.messages == template.messages

    def test_lengths_preserved_exactly(self):
        rng = np.random.default_rng(9)
        template = codes.monkey_typing(200, 6, 15, rng)
        control = codes.control_code(template, rng)
        assert np.array_equal(control.lengths(), template.lengths())
        probs = freq.power_law(200)
        before = float(template.lengths() @ probs.probs)
        after = float(control.lengths() @ probs.probs)
        assert before == after

    def test_unigram_distribution_preserved_in_aggregate(self):
        rng = np.random.default_rng(31)
        template = codes.monkey_typing(500, 8, 20, rng)

        def unigram(code):
            counts = np.zeros(code.alphabet.size)
            for msg in code.messages:
                for sym in msg[:-1]:
                    counts[sym] += 1
            return counts / counts.sum()

        target = unigram(template)
        pooled = np.zeros_like(target)
        for _ in range(25):
            pooled += unigram(codes.control_code(template, rng))
        pooled /= 25
        assert 0.5 * np.abs(pooled - target).sum() < 0.02  # total variation


class TestSerialization:
    def test_format_matches_listing_style(self):
        code = codes.Code(((1, 2, EOS), (EOS,)), codes.Alphabet(4), 5)
        text = codes.format_code_tsv(code)
        assert text == "1\t1,2\teos\n2\t\teos\n"

    def test_round_trip(self, tmp_path):
        code = codes.monkey_typing(64, 7, 12, np.random.default_rng(4))
        path = tmp_path / "code.tsv"
        codes.save_code_tsv(code, path)
        loaded = codes.load_code_tsv(path, alphabet_size=7, max_len=12)
        assert loaded.messages == code.messages

    def test_inference_of_alphabet_and_max_len(self, tmp_path):
        path = tmp_path / "code.tsv"
        path.write_text("1\t3,3\teos\n2\t\teos\n", encoding="utf-8")
        code = codes.load_code_tsv(path)
        assert code.alphabet.size == 4
        assert code.max_len == 3

    def test_rejects_out_of_order_ranks(self):
        with pytest.raises(ValueError):
            codes.parse_code_tsv("2\t1\teos\n")


class TestCodeInvariants:
    def test_message_validation(self):
        with pytest.raises(ValueError):
            codes.Code(((1, EOS, EOS),), codes.Alphabet(3), 5)  # early eos
        with pytest.raises(ValueError):
            codes.Code(((1, 2),), codes.Alphabet(3), 5)  # missing eos
        with pytest.raises(ValueError):
            codes.Code(((7, EOS),), codes.Alphabet(3), 5)  # symbol outside alphabet
        with pytest.raises(ValueError):
            codes.Code(((1, 1, 1, EOS),), codes.Alphabet(3), 3)  # too long

    def test_capacity_ratio(self):
        assert codes.capacity_ratio(3, 4, 15) == 1.0
        assert codes.capacity_ratio(2, 3, 6) == 0.5
        assert codes.capacity_ratio(1000, 30, 1000) == float("inf") or codes.capacity_ratio(1000, 30, 1000) > 1e80
