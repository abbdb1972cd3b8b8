//! WordPiece-style subword vocabulary: pair-merge training and greedy
//! longest-match encoding.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const BOS: &str = "[BOS]";
pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;
pub const BOS_ID: usize = 2;
pub const RESERVED: usize = 3;
pub const CONTINUATION: &str = "##";
pub const DEFAULT_VOCAB_SIZE: usize = 8000;

#[derive(Debug, Error)]
pub enum TokenizerError {
    #[error("target size {target} is below the minimum {minimum} (reserved ids + alphabet)")]
    TargetTooSmall { target: usize, minimum: usize },
    #[error("invalid vocabulary: {0}")]
    InvalidVocab(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct SubwordVocab {
    pieces: Vec<String>,
    ids: HashMap<String, usize>,
    /// Longest piece body in chars, bounding the longest-match search.
    max_chars: usize,
}

impl SubwordVocab {
    /// Builds a vocabulary from an ordered piece list. The first three pieces
    /// must be the reserved tokens.
    pub fn from_pieces(pieces: Vec<String>) -> Result<Self, TokenizerError> {
        if pieces.len() < RESERVED || pieces[..RESERVED] != [PAD, UNK, BOS] {
            return Err(TokenizerError::InvalidVocab(format!(
                "first pieces must be {PAD}, {UNK}, {BOS}"
            )));
        }
        let mut ids = HashMap::with_capacity(pieces.len());
        let mut max_chars = 0;
        for (id, p) in pieces.iter().enumerate() {
            if p.is_empty() || p == CONTINUATION || p.chars().any(char::is_whitespace) {
                return Err(TokenizerError::InvalidVocab(format!(
                    "bad piece {p:?} at id {id}"
                )));
            }
            if ids.insert(p.clone(), id).is_some() {
                return Err(TokenizerError::InvalidVocab(format!(
                    "duplicate piece {p:?}"
                )));
            }
            max_chars = max_chars.max(body(p).chars().count());
        }
        for p in &pieces[RESERVED..] {
            let mut chars = body(p).chars();
            if let (Some(c), None) = (chars.next(), chars.next()) {
                let (head, cont) = (c.to_string(), format!("{CONTINUATION}{c}"));
                if !ids.contains_key(&head) || !ids.contains_key(&cont) {
                    return Err(TokenizerError::InvalidVocab(format!(
                        "alphabet character {c:?} lacks its head or continuation piece"
                    )));
                }
            }
        }
        Ok(Self {
            pieces,
            ids,
            max_chars,
        })
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn pieces(&self) -> &[String] {
        &self.pieces
    }

    pub fn piece(&self, id: usize) -> Option<&str> {
        self.pieces.get(id).map(String::as_str)
    }

    pub fn id(&self, piece: &str) -> Option<usize> {
        self.ids.get(piece).copied()
    }

    /// Greedy longest-match-first. Never empty; a word with a character
    /// outside the alphabet becomes `[UNK]`.
    pub fn encode_word(&self, word: &str) -> Vec<usize> {
        let bounds: Vec<usize> = word
            .char_indices()
            .map(|(i, _)| i)
            .chain(std::iter::once(word.len()))
            .collect();
        let n = bounds.len() - 1;
        if n == 0 {
            return vec![UNK_ID];
        }
        let mut ids = Vec::new();
        let mut key = String::new();
        let mut start = 0;
        while start < n {
            let mut end = n.min(start + self.max_chars);
            let found = loop {
                if end == start {
                    break None;
                }
                key.clear();
                if start > 0 {
                    key.push_str(CONTINUATION);
                }
                key.push_str(&word[bounds[start]..bounds[end]]);
                // no head piece starts with "##"; such a key names a continuation
                let head_clash = start == 0 && key.starts_with(CONTINUATION);
                if let Some(&id) = self
                    .ids
                    .get(&key)
                    .filter(|&&id| id >= RESERVED && !head_clash)
                {
                    break Some(id);
                }
                end -= 1;
            };
            match found {
                Some(id) => {
                    ids.push(id);
                    start = end;
                }
                None => return vec![UNK_ID],
            }
        }
        ids
    }

    /// Concatenates piece bodies; inverse of [`encode_word`](Self::encode_word)
    /// for in-alphabet words.
    pub fn decode_word(&self, ids: &[usize]) -> String {
        ids.iter()
            .filter_map(|&id| self.piece(id))
            .map(body)
            .collect()
    }

    /// Stable content hash (CRC-32 of the newline-joined pieces), hex encoded.
    pub fn content_hash(&self) -> String {
        let mut h = crc32fast::Hasher::new();
        for p in &self.pieces {
            h.update(p.as_bytes());
            h.update(b"\n");
        }
        format!("{:08x}", h.finalize())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for p in &self.pieces {
            writeln!(w, "{p}")?;
        }
        w.flush()
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self, TokenizerError> {
        let pieces = BufReader::new(r).lines().collect::<Result<Vec<_>, _>>()?;
        Self::from_pieces(pieces)
    }

    pub fn save(&self, path: &Path) -> Result<(), TokenizerError> {
        let file = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(file))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, TokenizerError> {
        Self::read_from(std::fs::File::open(path)?)
    }
}

impl TryFrom<Vec<String>> for SubwordVocab {
    type Error = TokenizerError;

    fn try_from(pieces: Vec<String>) -> Result<Self, Self::Error> {
        Self::from_pieces(pieces)
    }
}

impl From<SubwordVocab> for Vec<String> {
    fn from(v: SubwordVocab) -> Self {
        v.pieces
    }
}

fn body(piece: &str) -> &str {
    piece.strip_prefix(CONTINUATION).unwrap_or(piece)
}

/// Trains a vocabulary by repeated merging of the most frequent adjacent
/// piece pair (ties go to the lexicographically smallest merged string).
///
/// Merges whose head piece would itself start with `##` are skipped, keeping
/// the one-piece-per-line file format unambiguous.
pub fn train_vocab<I, S>(words: I, target_size: usize) -> Result<SubwordVocab, TokenizerError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for w in words {
        let w = w.as_ref();
        if !w.is_empty() {
            *counts.entry(w.to_string()).or_default() += 1;
        }
    }
    let alphabet: BTreeSet<char> = counts.keys().flat_map(|w| w.chars()).collect();
    let minimum = RESERVED + 2 * alphabet.len();
    if target_size < minimum {
        return Err(TokenizerError::TargetTooSmall {
            target: target_size,
            minimum,
        });
    }

    let mut pieces: Vec<String> = [PAD, UNK, BOS].map(String::from).to_vec();
    for c in &alphabet {
        pieces.push(c.to_string());
        pieces.push(format!("{CONTINUATION}{c}"));
    }
    let mut ids: HashMap<String, usize> = pieces.iter().cloned().zip(0..).collect();

    let mut corpus: Vec<(Vec<usize>, u64)> = counts
        .iter()
        .map(|(w, &count)| {
            let seq = w
                .chars()
                .enumerate()
                .map(|(i, c)| {
                    let p = if i == 0 {
                        c.to_string()
                    } else {
                        format!("{CONTINUATION}{c}")
                    };
                    ids[&p]
                })
                .collect();
            (seq, count)
        })
        .collect();

    let mut banned: BTreeSet<(usize, usize)> = BTreeSet::new();
    while pieces.len() < target_size {
        let mut pairs: HashMap<(usize, usize), u64> = HashMap::new();
        for (seq, count) in &corpus {
            for w in seq.windows(2) {
                *pairs.entry((w[0], w[1])).or_default() += count;
            }
        }
        // Equal merged strings can come from different splits; the left
        // piece settles those.
        let mut best: Option<((usize, usize), u64, String)> = None;
        for (&pair, &freq) in &pairs {
            if freq < 2 || banned.contains(&pair) {
                continue;
            }
            let merged = format!("{}{}", pieces[pair.0], body(&pieces[pair.1]));
            let better = match &best {
                None => true,
                Some((bp, bf, bm)) => {
                    freq > *bf
                        || (freq == *bf
                            && (merged.as_str(), pieces[pair.0].as_str())
                                < (bm.as_str(), pieces[bp.0].as_str()))
                }
            };
            if better {
                best = Some((pair, freq, merged));
            }
        }
        let Some((pair, _, merged)) = best else { break };
        if !pieces[pair.0].starts_with(CONTINUATION) && merged.starts_with(CONTINUATION) {
            banned.insert(pair);
            continue;
        }
        let new_id = match ids.get(&merged) {
            Some(&id) => id,
            None => {
                pieces.push(merged.clone());
                ids.insert(merged, pieces.len() - 1);
                pieces.len() - 1
            }
        };
        for (seq, _) in &mut corpus {
            if seq.len() < 2 {
                continue;
            }
            let mut out = Vec::with_capacity(seq.len());
            let mut i = 0;
            while i < seq.len() {
                if i + 1 < seq.len() && (seq[i], seq[i + 1]) == pair {
                    out.push(new_id);
                    i += 2;
                } else {
                    out.push(seq[i]);
                    i += 1;
                }
            }
            *seq = out;
        }
    }
    SubwordVocab::from_pieces(pieces)
}
