//! Heuristic syllable counting.
//!
//! A syllable is a maximal run of the vowels `a e i o u` (case-insensitive;
//! `y` is never a vowel). One syllable is subtracted for a silent suffix:
//! a trailing `-e` (unless the word ends in `-le`), `-es`, or `-ed`, with at
//! most one subtraction per word. The count is clamped to a minimum of 1
//! after subtraction, so pure-consonant strings like "hmm" or "123" count as
//! one syllable. Characters that are not the five vowels (digits, emoji,
//! apostrophes, accented letters) act as consonants: they break vowel runs.

fn is_vowel(c: char) -> bool {
    matches!(c.to_ascii_lowercase(), 'a' | 'e' | 'i' | 'o' | 'u')
}

/// Counts syllables in a single non-empty word.
///
/// Callers must not pass an empty string; the tokenizer never produces one.
///
/// # Panics
/// Panics if `word` is empty.
pub fn count_syllables(word: &str) -> usize {
    assert!(!word.is_empty(), "count_syllables requires a non-empty word");

    let mut runs = 0usize;
    let mut in_run = false;
    for c in word.chars() {
        if is_vowel(c) {
            if !in_run {
                runs += 1;
                in_run = true;
            }
        } else {
            in_run = false;
        }
    }

    let lower = word.to_lowercase();
    let silent = lower.ends_with("es")
        || lower.ends_with("ed")
        || (lower.ends_with('e') && !lower.ends_with("le"));

    let n = if silent { runs.saturating_sub(1) } else { runs };
    n.max(1)
}
