import math

import numpy as np
import pytest
from scipy import stats

from zlalab import freq


def harmonic(n: int) -> float:
    # independent oracle for the power-law normalizer
    return math.fsum(1.0 / k for k in range(1, n + 1))


class TestPowerLaw:
    def test_rank_one_probability_matches_closed_form(self):
        model = freq.power_law(1000)
        assert model.probs[0] == pytest.approx(1.0 / harmonic(1000), rel=1e-12)
        # headline value: probability of the most frequent input is 0.13
        assert model.probs[0] == pytest.approx(0.13, abs=0.005)

    def test_last_rank_is_thousand_times_less_likely(self):
        model = freq.power_law(1000)
        assert model.probs[999] == pytest.approx(model.probs[0] / 1000.0, rel=1e-12)

    def test_single_type_is_certain(self):
        assert freq.power_law(1).probs.tolist() == [1.0]

    def test_rank_times_probability_is_constant(self):
        for n in (3, 17, 1000):
            model = freq.power_law(n)
            products = model.probs * np.arange(1, n + 1)
            assert np.all(np.abs(products - products[0]) < 1e-12)

    def test_rejects_zero_types(self):
        with pytest.raises(ValueError):
            freq.power_law(0)


class TestUniform:
    def test_four_types(self):
        assert freq.uniform(4).probs.tolist() == [0.25, 0.25, 0.25, 0.25]

    def test_thousand_types(self):
        assert freq.uniform(1000).probs[0] == pytest.approx(0.001, rel=1e-12)

    def test_normalization(self):
        assert freq.uniform(7).probs.sum() == pytest.approx(1.0, abs=1e-12)

    def test_rejects_zero_types(self):
        with pytest.raises(ValueError):
            freq.uniform(0)


class TestSampleBatch:
    def test_single_outcome(self):
        draws = freq.sample_batch(freq.uniform(1), 5, np.random.default_rng(3))
        assert draws.tolist() == [1, 1, 1, 1, 1]

    def test_same_seed_same_sequence(self):
        model = freq.power_law(50)
        a = freq.sample_batch(model, 1000, np.random.default_rng(7))
        b = freq.sample_batch(model, 1000, np.random.default_rng(7))
        assert np.array_equal(a, b)

    def test_rank_one_monte_carlo_frequency(self):
        # oracle: closed-form 1/H_1000 = 0.13359...
        model = freq.power_law(1000)
        draws = freq.sample_batch(model, 10**6, np.random.default_rng(11))
        assert (draws == 1).mean() == pytest.approx(1.0 / harmonic(1000), abs=0.002)

    def test_histogram_matches_distribution(self):
        model = freq.power_law(1000)
        draws = freq.sample_batch(model, 10**6, np.random.default_rng(13))
        counts = np.bincount(draws, minlength=1001)[1:]
        _, p = stats.chisquare(counts, f_exp=model.probs * 10**6)
        assert p > 0.001

    def test_rejects_empty_batch(self):
        with pytest.raises(ValueError):
            freq.sample_batch(freq.uniform(3), 0, np.random.default_rng(0))


LEEDS_SAMPLE = """\
# rank frequency word
1 431.99 the
2 261.89 of
3 11.11 The
4 9.50 a1
5 5.00 b
"""

TWO_COLUMN_SAMPLE = "b\t2.5\nzzz 7.0\n"


class TestLoadLexicon:
    def test_case_merge_and_filtering(self, tmp_path):
        path = tmp_path / "wl.txt"
        path.write_text("1 10 The\n2 5 the\n3 99 a1\n", encoding="utf-8")
        with pytest.warns(UserWarning):
            lex = freq.load_lexicon(path)
        assert lex.entries == (("the", 15.0),)

    def test_leeds_format(self, tmp_path):
        path = tmp_path / "leeds.txt"
        path.write_text(LEEDS_SAMPLE, encoding="utf-8")
        with pytest.warns(UserWarning):
            lex = freq.load_lexicon(path)
        assert lex.words == ("the", "of", "b")
        assert lex.frequencies.tolist() == [431.99 + 11.11, 261.89, 5.0]

    def test_two_column_sorted(self, tmp_path):
        path = tmp_path / "two.txt"
        path.write_text(TWO_COLUMN_SAMPLE, encoding="utf-8")
        with pytest.warns(UserWarning):
            lex = freq.load_lexicon(path)
        assert lex.words == ("zzz", "b")

    def test_parse_error_names_line(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("1 10 the\n2 oops word\n", encoding="utf-8")
        with pytest.raises(ValueError, match="line 2"):
            freq.load_lexicon(path)

    def test_missing_file_is_io_error(self, tmp_path):
        with pytest.raises(OSError):
            freq.load_lexicon(tmp_path / "absent.txt")

    def test_round_trip_identity(self, tmp_path):
        path = tmp_path / "wl.txt"
        path.write_text("1 431.99 the\n2 261.89 of\n3 123.456 and\n", encoding="utf-8")
        with pytest.warns(UserWarning):
            lex = freq.load_lexicon(path)
        out = tmp_path / "saved.txt"
        freq.save_lexicon(lex, out)
        with pytest.warns(UserWarning):
            again = freq.load_lexicon(out)
        assert again.entries == lex.entries

    def test_tie_break_is_lexicographic(self, tmp_path):
        path = tmp_path / "ties.txt"
        path.write_text("zeta 5\nalpha 5\nmid 7\n", encoding="utf-8")
        with pytest.warns(UserWarning):
            lex = freq.load_lexicon(path)
        assert lex.words == ("mid", "alpha", "zeta")

    @pytest.mark.skipif(
        not __import__("pathlib").Path("data/leeds-english.txt").exists(),
        reason="Leeds English frequency list not bundled",
    )
    def test_english_alphabet_size(self):
        lex = freq.load_lexicon("data/leeds-english.txt")
        assert lex.alphabet_size == 30


class TestLexiconDerived:
    def test_lengths(self):
        lex = freq.CorpusLexicon((("ab", 9.0), ("c", 5.0)))
        assert freq.lexicon_lengths(lex).tolist() == [2, 1]

    def test_single_word(self):
        assert freq.lexicon_lengths(freq.CorpusLexicon((("xyz", 1.0),))).tolist() == [3]

    def test_lengths_positive(self):
        lex = freq.CorpusLexicon((("word", 3.0), ("of", 2.0), ("a", 1.0)))
        assert (freq.lexicon_lengths(lex) > 0).all()

    def test_alphabet_size_counts_distinct_characters(self):
        lex = freq.CorpusLexicon((("abc", 2.0), ("cab", 1.0)))
        assert lex.alphabet_size == 3

    def test_frequency_model_from_lexicon(self):
        lex = freq.CorpusLexicon((("aa", 3.0), ("b", 1.0)))
        model = freq.from_lexicon(lex)
        assert model.kind == freq.KIND_CORPUS
        assert model.probs.tolist() == [0.75, 0.25]

    def test_rejects_non_alphabetic_entry(self):
        with pytest.raises(ValueError):
            freq.CorpusLexicon((("a1", 1.0),))
