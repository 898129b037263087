//! Character-level tokenizer with a fixed, dense vocabulary.
//!
//! The alphabet covers everything the synthetic benchmark emits: digits,
//! lowercase letters, arithmetic operators, and the `####` answer marker
//! punctuation. Three specials (BOS, EOS, PAD) sit at the front of the id
//! space.

use crate::error::{Error, Result};

pub const BOS: usize = 0;
pub const EOS: usize = 1;
pub const PAD: usize = 2;

const CHARS: &str = "0123456789abcdefghijklmnopqrstuvwxyz \n#.,?+-*/=";

/// Symbol/id maps for the fixed character vocabulary.
#[derive(Debug, Clone)]
pub struct Tokenizer {
    chars: Vec<char>,
    // indexed by char as u8; chars here are all ASCII
    ids: [Option<usize>; 128],
}

impl Default for Tokenizer {
    fn default() -> Self {
        Self::new()
    }
}

impl Tokenizer {
    pub fn new() -> Self {
        let chars: Vec<char> = CHARS.chars().collect();
        let mut ids = [None; 128];
        for (i, &c) in chars.iter().enumerate() {
            ids[c as usize] = Some(3 + i);
        }
        Tokenizer { chars, ids }
    }

    /// Total vocabulary size including specials.
    pub fn vocab_size(&self) -> usize {
        3 + self.chars.len()
    }

    pub fn id_of(&self, c: char) -> Result<usize> {
        if (c as u32) < 128 {
            if let Some(id) = self.ids[c as usize] {
                return Ok(id);
            }
        }
        Err(Error::Config(format!("character {c:?} is not in the vocabulary")))
    }

    /// Encode a string drawn from the vocabulary alphabet. No specials are added.
    pub fn encode(&self, text: &str) -> Result<Vec<usize>> {
        text.chars().map(|c| self.id_of(c)).collect()
    }

    /// Decode ids back to text. Specials decode to nothing, so decode is total
    /// over arbitrary sampled token streams.
    pub fn decode(&self, ids: &[usize]) -> String {
        ids.iter()
            .filter_map(|&id| {
                if id < 3 {
                    None
                } else {
                    self.chars.get(id - 3).copied()
                }
            })
            .collect()
    }
}

/// A token sequence split into a query prefix and a response suffix.
/// `boundary` is the index of the first response token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub ids: Vec<usize>,
    pub boundary: usize,
}

impl TokenSequence {
    pub fn new(ids: Vec<usize>, boundary: usize) -> Result<Self> {
        if boundary > ids.len() {
            return Err(Error::Precondition(format!(
                "boundary {boundary} exceeds sequence length {}",
                ids.len()
            )));
        }
        Ok(TokenSequence { ids, boundary })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn query_tokens(&self) -> &[usize] {
        &self.ids[..self.boundary]
    }

    pub fn response_tokens(&self) -> &[usize] {
        &self.ids[self.boundary..]
    }
}

/// Build the standard generation prompt for a query: BOS, the query text, and
/// a newline that marks where the response begins.
pub fn encode_query(tok: &Tokenizer, query_text: &str) -> Result<TokenSequence> {
    let mut ids = vec![BOS];
    ids.extend(tok.encode(query_text)?);
    ids.push(tok.id_of('\n')?);
    let boundary = ids.len();
    TokenSequence::new(ids, boundary)
}

/// Build a full training sequence: prompt plus response text plus EOS.
pub fn encode_example(tok: &Tokenizer, query_text: &str, response_text: &str) -> Result<TokenSequence> {
    let mut seq = encode_query(tok, query_text)?;
    seq.ids.extend(tok.encode(response_text)?);
    seq.ids.push(EOS);
    Ok(seq)
}
