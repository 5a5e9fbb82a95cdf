//! Per-message reading-ease scoring.
//!
//! Each message is treated as a single sentence, which reduces the classic
//! reading-ease formula to
//!
//! ```text
//! RE = 206.835 - 1.015 * W - 84.6 * (S / W)
//! ```
//!
//! where `W` is the number of countable words and `S` their total syllable
//! count. URLs and mentions never count. Hashtags count only under
//! [`HashtagPolicy::Include`], in which case the text after the sigil is
//! scored like a word. A message with no countable words has no score and is
//! discarded by downstream aggregation. Scores are unbounded below (dense
//! polysyllabic text goes negative) and bounded above by 121.22, attained by
//! a single monosyllabic word.

use crate::syllable::count_syllables;
use crate::token::{for_each_token, TokenClass};

/// Maximum attainable score: one word of one syllable.
pub const MAX_SCORE: f64 = 206.835 - 1.015 - 84.6;

/// How hashtag tokens participate in scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HashtagPolicy {
    /// Hashtags contribute nothing (the default).
    #[default]
    Exclude,
    /// Hashtag text after the sigil is counted as a word.
    Include,
}

/// A defined score together with the counts that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadabilityScore {
    pub re: f64,
    pub word_count: u32,
    pub syllable_count: u32,
}

fn formula(words: u32, syllables: u32) -> f64 {
    let w = f64::from(words);
    let s = f64::from(syllables);
    206.835 - 1.015 * w - 84.6 * (s / w)
}

/// Scores one message, or `None` if it has no countable words.
pub fn score_message(text: &str, policy: HashtagPolicy) -> Option<ReadabilityScore> {
    let both = score_both(text);
    match policy {
        HashtagPolicy::Exclude => both.exclude,
        HashtagPolicy::Include => both.include,
    }
}

/// Score drop caused by including hashtags: `RE(exclude) - RE(include)`.
///
/// Defined only for messages with at least one hashtag token where both
/// policies produce a score. Positive values mean hashtags read harder than
/// the rest of the message.
pub fn score_delta(text: &str) -> Option<f64> {
    let both = score_both(text);
    if !both.has_hashtag {
        return None;
    }
    Some(both.exclude?.re - both.include?.re)
}

/// Scores under both policies in a single tokenization pass.
#[derive(Debug, Clone, Copy)]
pub struct BothScores {
    pub exclude: Option<ReadabilityScore>,
    pub include: Option<ReadabilityScore>,
    pub has_hashtag: bool,
}

/// Computes both policies at once; the streaming pipeline uses this so each
/// message is tokenized exactly once.
pub fn score_both(text: &str) -> BothScores {
    let mut words_ex = 0u32;
    let mut syll_ex = 0u32;
    let mut words_in = 0u32;
    let mut syll_in = 0u32;
    let mut has_hashtag = false;

    for_each_token(text, |class, tok| match class {
        TokenClass::Word => {
            let s = count_syllables(tok) as u32;
            words_ex += 1;
            syll_ex += s;
            words_in += 1;
            syll_in += s;
        }
        TokenClass::Hashtag => {
            has_hashtag = true;
            let s = count_syllables(tok) as u32;
            words_in += 1;
            syll_in += s;
        }
        TokenClass::Mention | TokenClass::Url => {}
    });

    let build = |w: u32, s: u32| {
        (w > 0).then(|| ReadabilityScore {
            re: formula(w, s),
            word_count: w,
            syllable_count: s,
        })
    };
    BothScores {
        exclude: build(words_ex, syll_ex),
        include: build(words_in, syll_in),
        has_hashtag,
    }
}
