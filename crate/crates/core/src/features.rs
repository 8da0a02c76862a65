//! Feature extraction: sparse TF-IDF character n-gram vectors and padded
//! character-index sequences. Spaces count as characters, so n-grams may
//! cross word boundaries and word-position patterns stay learnable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_NGRAM_MIN: usize = 1;
pub const DEFAULT_NGRAM_MAX: usize = 6;
pub const DEFAULT_MIN_DF: u32 = 2;
pub const DEFAULT_MAX_LEN: usize = 48;

/// Fitted character n-gram index. Column ids are dense and assigned in
/// lexicographic n-gram order, so two fits on the same corpus agree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgramIndex {
    /// Sorted n-grams; position is the column id.
    ngrams: Vec<String>,
    /// Document frequency per n-gram, same order.
    df: Vec<u32>,
    pub corpus_size: u32,
    pub n_range: (usize, usize),
}

fn each_ngram(name: &str, n_range: (usize, usize), mut f: impl FnMut(&[char])) {
    let chars: Vec<char> = name.chars().collect();
    for n in n_range.0..=n_range.1 {
        if n == 0 || n > chars.len() {
            continue;
        }
        for window in chars.windows(n) {
            f(window);
        }
    }
}

/// Builds the index over every character n-gram with document frequency at
/// least `min_df` (set semantics per document).
pub fn fit_ngram_index(
    names: &[impl AsRef<str>],
    n_min: usize,
    n_max: usize,
    min_df: u32,
) -> Result<NgramIndex> {
    if names.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if n_min < 1 || n_min > n_max {
        return Err(Error::InvalidParam(format!(
            "n-gram range ({n_min}, {n_max}) is invalid"
        )));
    }
    let mut counts: std::collections::BTreeMap<String, u32> = std::collections::BTreeMap::new();
    let mut seen: std::collections::BTreeSet<String> = std::collections::BTreeSet::new();
    for name in names {
        seen.clear();
        each_ngram(name.as_ref(), (n_min, n_max), |window| {
            let gram: String = window.iter().collect();
            seen.insert(gram);
        });
        for gram in &seen {
            *counts.entry(gram.clone()).or_insert(0) += 1;
        }
    }
    let mut ngrams = Vec::new();
    let mut df = Vec::new();
    for (gram, count) in counts {
        if count >= min_df {
            ngrams.push(gram);
            df.push(count);
        }
    }
    Ok(NgramIndex {
        ngrams,
        df,
        corpus_size: names.len() as u32,
        n_range: (n_min, n_max),
    })
}

impl NgramIndex {
    pub fn dimension(&self) -> usize {
        self.ngrams.len()
    }

    pub fn column(&self, gram: &str) -> Option<usize> {
        self.ngrams.binary_search_by(|g| g.as_str().cmp(gram)).ok()
    }

    pub fn df(&self, column: usize) -> u32 {
        self.df[column]
    }

    pub fn ngram(&self, column: usize) -> &str {
        &self.ngrams[column]
    }

    /// Smoothed inverse document frequency: ln((1 + N) / (1 + df)) + 1.
    pub fn idf(&self, column: usize) -> f64 {
        ((1.0 + self.corpus_size as f64) / (1.0 + self.df[column] as f64)).ln() + 1.0
    }
}

/// Sparse vector with sorted, strictly non-zero entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    /// (column, weight) pairs sorted by column.
    pub entries: Vec<(u32, f64)>,
    pub dimension: usize,
}

impl SparseVector {
    pub fn zero(dimension: usize) -> Self {
        SparseVector {
            entries: Vec::new(),
            dimension,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn l2_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|(_, w)| w * w)
            .sum::<f64>()
            .sqrt()
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|(col, w)| w * dense[*col as usize])
            .sum()
    }
}

/// TF-IDF transform of one name: raw n-gram counts weighted by smoothed idf,
/// then L2-normalized. Unseen n-grams are ignored; a name with no indexed
/// n-grams yields the zero vector, which callers treat as the empty-feature
/// flag.
pub fn tfidf_transform(name: &str, index: &NgramIndex) -> SparseVector {
    let mut tf: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
    each_ngram(name, index.n_range, |window| {
        let gram: String = window.iter().collect();
        if let Some(col) = index.column(&gram) {
            *tf.entry(col).or_insert(0.0) += 1.0;
        }
    });
    let mut entries: Vec<(u32, f64)> = tf
        .into_iter()
        .map(|(col, count)| (col as u32, count * index.idf(col)))
        .collect();
    let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        for (_, w) in &mut entries {
            *w /= norm;
        }
    }
    SparseVector {
        entries,
        dimension: index.dimension(),
    }
}

/// Character vocabulary with reserved pad (0) and unknown (1) indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharVocabulary {
    /// Sorted distinct characters; char i maps to index i + 2.
    chars: Vec<char>,
}

pub const PAD_INDEX: usize = 0;
pub const UNK_INDEX: usize = 1;

impl CharVocabulary {
    pub fn fit(names: &[impl AsRef<str>]) -> Self {
        let set: std::collections::BTreeSet<char> = names
            .iter()
            .flat_map(|n| n.as_ref().chars())
            .collect();
        CharVocabulary {
            chars: set.into_iter().collect(),
        }
    }

    /// Alphabet size including the pad and unknown slots.
    pub fn size(&self) -> usize {
        self.chars.len() + 2
    }

    pub fn index_of(&self, c: char) -> usize {
        match self.chars.binary_search(&c) {
            Ok(i) => i + 2,
            Err(_) => UNK_INDEX,
        }
    }

    pub fn decode(&self, index: usize) -> Option<char> {
        index.checked_sub(2).and_then(|i| self.chars.get(i).copied())
    }
}

/// Fixed-length character-index encoding of a name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharSequence {
    pub indices: Vec<u32>,
    pub true_length: usize,
}

/// Left-aligned encoding truncated at `max_len` and padded with the pad
/// index; characters outside the vocabulary map to the unknown index.
pub fn encode_chars(name: &str, vocab: &CharVocabulary, max_len: usize) -> CharSequence {
    let mut indices = Vec::with_capacity(max_len);
    for c in name.chars().take(max_len) {
        indices.push(vocab.index_of(c) as u32);
    }
    let true_length = indices.len();
    indices.resize(max_len, PAD_INDEX as u32);
    CharSequence {
        indices,
        true_length,
    }
}
