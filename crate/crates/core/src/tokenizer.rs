//! Character-level tokenization with reserved control tokens.
//!
//! The vocabulary is built once from training data and then frozen: reserved
//! tokens (pad/bos/eos/unk, length tags, language tags) occupy the lowest
//! ids, followed by every character seen in the corpus sorted by codepoint.
//! Encoding is deterministic; unknown characters map to `<unk>`.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{control_token_len, Corpus, DirectionTag, LengthClass};
use crate::error::{Error, Result};

pub const VOCAB_FORMAT_VERSION: u32 = 1;

pub type TokenId = u32;

pub const PAD: TokenId = 0;
pub const BOS: TokenId = 1;
pub const EOS: TokenId = 2;
pub const UNK: TokenId = 3;

#[derive(Serialize, Deserialize)]
struct VocabFile {
    format_version: u32,
    tokens: Vec<String>,
    n_reserved: usize,
}

/// Frozen token/id bijection. Ids below `n_reserved` are control tokens and
/// are never produced when encoding ordinary text.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
    n_reserved: usize,
}

impl Vocabulary {
    /// Builds the vocabulary from a corpus plus the direction tags whose
    /// control tokens must be representable. Reserved tokens come first in
    /// a fixed order, then characters sorted by codepoint.
    pub fn build(corpus: &Corpus, directions: &[DirectionTag]) -> Result<Vocabulary> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut tokens: Vec<String> = vec![
            "<pad>".to_string(),
            "<bos>".to_string(),
            "<eos>".to_string(),
            "<unk>".to_string(),
        ];
        for class in LengthClass::ALL {
            tokens.push(class.token());
        }
        let mut langs: BTreeSet<&str> = BTreeSet::new();
        for d in directions {
            langs.insert(&d.src_lang);
            langs.insert(&d.tgt_lang);
        }
        for lang in &langs {
            tokens.push(DirectionTag::lang_token(lang));
        }
        for lang in &langs {
            for class in LengthClass::ALL {
                tokens.push(DirectionTag::lang_length_token(lang, class));
            }
        }
        let n_reserved = tokens.len();

        let mut chars: BTreeSet<char> = BTreeSet::new();
        for pair in &corpus.pairs {
            chars.extend(pair.source.chars());
            chars.extend(pair.target.chars());
        }
        tokens.extend(chars.into_iter().map(String::from));

        Ok(Self::from_tokens(tokens, n_reserved))
    }

    fn from_tokens(tokens: Vec<String>, n_reserved: usize) -> Vocabulary {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TokenId))
            .collect();
        Vocabulary {
            tokens,
            index,
            n_reserved,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn n_reserved(&self) -> usize {
        self.n_reserved
    }

    pub fn is_reserved(&self, id: TokenId) -> bool {
        (id as usize) < self.n_reserved
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id as usize).map(|s| s.as_str())
    }

    pub fn length_tag_id(&self, class: LengthClass) -> Option<TokenId> {
        self.id(&class.token())
    }

    pub fn lang_id(&self, lang: &str) -> Option<TokenId> {
        self.id(&DirectionTag::lang_token(lang))
    }

    pub fn lang_length_id(&self, lang: &str, class: LengthClass) -> Option<TokenId> {
        self.id(&DirectionTag::lang_length_token(lang, class))
    }

    /// Encodes tagged text to ids and appends `<eos>`. Control tokens encode
    /// to a single id; unknown characters (or unknown control tokens) map to
    /// `<unk>`. `<pad>` is never emitted.
    pub fn encode(&self, text: &str) -> Vec<TokenId> {
        let mut ids = Vec::with_capacity(text.chars().count() + 1);
        let mut rest = text;
        while !rest.is_empty() {
            if let Some(len) = control_token_len(rest) {
                ids.push(self.id(&rest[..len]).unwrap_or(UNK));
                rest = &rest[len..];
                continue;
            }
            let mut chars = rest.chars();
            let c = chars.next().unwrap();
            rest = chars.as_str();
            let mut buf = [0u8; 4];
            ids.push(self.id(c.encode_utf8(&mut buf)).unwrap_or(UNK));
        }
        ids.push(EOS);
        ids
    }

    /// Decodes ids back to text. Stops at the first `<eos>`; skips `<pad>`
    /// and `<bos>`.
    pub fn decode(&self, ids: &[TokenId]) -> String {
        let mut out = String::new();
        for &id in ids {
            match id {
                EOS => break,
                PAD | BOS => continue,
                other => {
                    if let Some(tok) = self.token(other) {
                        let _ = write!(out, "{tok}");
                    }
                }
            }
        }
        out
    }

    /// SHA-256 of the canonical serialized form; checkpoints pin this.
    pub fn sha256_hex(&self) -> String {
        let file = VocabFile {
            format_version: VOCAB_FORMAT_VERSION,
            tokens: self.tokens.clone(),
            n_reserved: self.n_reserved,
        };
        let bytes = serde_json::to_vec(&file).expect("vocabulary serializes");
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        hex_string(&hasher.finalize())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = VocabFile {
            format_version: VOCAB_FORMAT_VERSION,
            tokens: self.tokens.clone(),
            n_reserved: self.n_reserved,
        };
        fs::write(path, serde_json::to_string_pretty(&file)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Vocabulary> {
        let text = fs::read_to_string(path)?;
        let file: VocabFile = serde_json::from_str(&text)?;
        if file.format_version != VOCAB_FORMAT_VERSION {
            return Err(Error::VocabVersion {
                found: file.format_version,
                expected: VOCAB_FORMAT_VERSION,
            });
        }
        Ok(Self::from_tokens(file.tokens, file.n_reserved))
    }
}

pub(crate) fn hex_string(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}
