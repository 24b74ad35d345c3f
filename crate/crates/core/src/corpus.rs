//! Bitext representation with character-length accounting.
//!
//! Every sentence pair carries its character lengths, the target/source
//! length ratio (LR) and a discrete length class derived from fixed LR
//! thresholds. Control tags (`<v:..>`, `<l:..>`, `<lv:..>`) are plain-text
//! tokens that never count toward a sentence's character length.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed LR interval of the `normal` class.
pub const NORMAL_BAND: (f64, f64) = (0.95, 1.05);
/// Closed LR interval counted as length-compliant.
pub const COMPLIANT_BAND: (f64, f64) = (0.90, 1.10);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthClass {
    Short,
    Normal,
    Long,
}

impl LengthClass {
    pub const ALL: [LengthClass; 3] = [LengthClass::Short, LengthClass::Normal, LengthClass::Long];

    pub fn as_str(self) -> &'static str {
        match self {
            LengthClass::Short => "short",
            LengthClass::Normal => "normal",
            LengthClass::Long => "long",
        }
    }

    /// The reserved control token selecting this class, e.g. `<v:long>`.
    pub fn token(self) -> String {
        format!("<v:{}>", self.as_str())
    }
}

impl fmt::Display for LengthClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LengthClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "short" => Ok(LengthClass::Short),
            "normal" => Ok(LengthClass::Normal),
            "long" => Ok(LengthClass::Long),
            other => Err(Error::InvalidInput(format!(
                "unknown length class {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Original,
    Pseudo,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Original => "original",
            Provenance::Pseudo => "pseudo",
        }
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(Provenance::Original),
            "pseudo" => Ok(Provenance::Pseudo),
            other => Err(Error::InvalidInput(format!(
                "unknown provenance {other:?}"
            ))),
        }
    }
}

/// Translation direction, optionally narrowed to one length class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionTag {
    pub src_lang: String,
    pub tgt_lang: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_class: Option<LengthClass>,
}

impl DirectionTag {
    pub fn new(src_lang: &str, tgt_lang: &str) -> Result<Self> {
        if src_lang == tgt_lang {
            return Err(Error::SameLanguage {
                lang: src_lang.to_string(),
            });
        }
        Ok(DirectionTag {
            src_lang: src_lang.to_string(),
            tgt_lang: tgt_lang.to_string(),
            length_class: None,
        })
    }

    pub fn reversed(&self) -> DirectionTag {
        DirectionTag {
            src_lang: self.tgt_lang.clone(),
            tgt_lang: self.src_lang.clone(),
            length_class: self.length_class,
        }
    }

    /// Language token placed on the encoder input, e.g. `<l:en>`.
    pub fn lang_token(lang: &str) -> String {
        format!("<l:{lang}>")
    }

    /// Combined target-language + length token used as the decoder's first
    /// context token in bidirectional models, e.g. `<lv:fr:long>`.
    pub fn lang_length_token(lang: &str, class: LengthClass) -> String {
        format!("<lv:{lang}:{}>", class.as_str())
    }
}

/// Returns the byte length of a control token starting at the beginning of
/// `s`, if any. Control tokens have the shape `<v:..>`, `<l:..>` or
/// `<lv:..>` with a nonempty body free of whitespace and angle brackets.
pub(crate) fn control_token_len(s: &str) -> Option<usize> {
    let rest = s.strip_prefix('<')?;
    let body = rest
        .strip_prefix("lv:")
        .or_else(|| rest.strip_prefix("v:"))
        .or_else(|| rest.strip_prefix("l:"))?;
    let close = body.find('>')?;
    if close == 0 {
        return None;
    }
    if body[..close]
        .chars()
        .any(|c| c.is_whitespace() || c == '<')
    {
        return None;
    }
    Some(s.len() - body.len() + close + 1)
}

/// True if `tok` is exactly one control token.
pub fn is_control_token(tok: &str) -> bool {
    control_token_len(tok) == Some(tok.len())
}

/// Removes all control tokens and trims surrounding whitespace.
pub fn strip_tags(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while !rest.is_empty() {
        if let Some(len) = control_token_len(rest) {
            rest = &rest[len..];
            continue;
        }
        let mut chars = rest.chars();
        out.push(chars.next().unwrap());
        rest = chars.as_str();
    }
    out.trim().to_string()
}

/// Character length of a sentence: Unicode scalar count of the detokenized
/// text with control tokens and leading/trailing whitespace excluded.
/// Internal spaces count.
pub fn char_len(text: &str) -> usize {
    strip_tags(text).chars().count()
}

/// Prepends the control token for length class `v` to a sentence.
pub fn prepend_length_tag(sentence: &str, v: LengthClass) -> String {
    format!("{} {}", v.token(), sentence)
}

/// Target/source length ratio.
pub fn length_ratio(src_len: usize, tgt_len: usize) -> Result<f64> {
    if src_len == 0 {
        return Err(Error::ZeroSourceLength { segment: None });
    }
    Ok(tgt_len as f64 / src_len as f64)
}

/// Assigns the length class from the LR thresholds: `short` below 0.95,
/// `normal` in the closed band [0.95, 1.05], `long` above.
pub fn classify_length(src_len: usize, tgt_len: usize) -> Result<LengthClass> {
    let lr = length_ratio(src_len, tgt_len)?;
    Ok(if lr < NORMAL_BAND.0 {
        LengthClass::Short
    } else if lr <= NORMAL_BAND.1 {
        LengthClass::Normal
    } else {
        LengthClass::Long
    })
}

/// True iff the pair falls within the +-10% compliance band (inclusive).
pub fn is_length_compliant(src_len: usize, tgt_len: usize) -> Result<bool> {
    let lr = length_ratio(src_len, tgt_len)?;
    Ok((COMPLIANT_BAND.0..=COMPLIANT_BAND.1).contains(&lr))
}

/// A source/target sentence pair with derived length facts.
///
/// `lr` and `length_class` are always recomputed from the stored texts;
/// they are never trusted from files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitextPair {
    pub source: String,
    pub target: String,
    pub src_len: usize,
    pub tgt_len: usize,
    pub lr: f64,
    pub length_class: LengthClass,
    pub provenance: Provenance,
}

impl BitextPair {
    /// Builds a pair from raw text. Texts are trimmed; control tokens do
    /// not count toward length. Empty sides are rejected.
    pub fn new(source: &str, target: &str, provenance: Provenance) -> Result<Self> {
        Self::new_at(source, target, provenance, 0)
    }

    fn new_at(source: &str, target: &str, provenance: Provenance, index: usize) -> Result<Self> {
        let source = strip_tags(source);
        let target = strip_tags(target);
        let src_len = source.chars().count();
        let tgt_len = target.chars().count();
        if src_len == 0 {
            return Err(Error::EmptySentence {
                side: "source",
                index,
            });
        }
        if tgt_len == 0 {
            return Err(Error::EmptySentence {
                side: "target",
                index,
            });
        }
        let lr = tgt_len as f64 / src_len as f64;
        let length_class = classify_length(src_len, tgt_len)?;
        Ok(BitextPair {
            source,
            target,
            src_len,
            tgt_len,
            lr,
            length_class,
            provenance,
        })
    }

    /// The same pair with source and target swapped (lengths and class
    /// recomputed for the reverse direction).
    pub fn reversed(&self) -> BitextPair {
        BitextPair::new(&self.target, &self.source, self.provenance)
            .expect("reversing a valid pair cannot fail")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Tsv,
    Jsonl,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(CorpusFormat::Tsv),
            "jsonl" => Ok(CorpusFormat::Jsonl),
            other => Err(Error::InvalidConfig(format!(
                "unknown corpus format {other:?} (expected tsv or jsonl)"
            ))),
        }
    }
}

/// Ordered collection of bitext pairs for one translation direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub pairs: Vec<BitextPair>,
    pub direction: DirectionTag,
}

/// Result of loading a corpus file: the corpus plus non-fatal warnings
/// (e.g. stored length classes that disagree with the recomputed ones).
#[derive(Debug)]
pub struct LoadedCorpus {
    pub corpus: Corpus,
    pub warnings: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct JsonlRecord {
    source: String,
    target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    length_class: Option<LengthClass>,
}

impl Corpus {
    pub fn new(pairs: Vec<BitextPair>, direction: DirectionTag) -> Corpus {
        Corpus { pairs, direction }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Swaps every pair and the direction tag.
    pub fn reversed(&self) -> Corpus {
        Corpus {
            pairs: self.pairs.iter().map(BitextPair::reversed).collect(),
            direction: self.direction.reversed(),
        }
    }

    /// Per-class pair counts; sums to `len()`.
    pub fn class_counts(&self) -> BTreeMap<LengthClass, usize> {
        let mut counts: BTreeMap<LengthClass, usize> =
            LengthClass::ALL.iter().map(|&c| (c, 0)).collect();
        for pair in &self.pairs {
            *counts.get_mut(&pair.length_class).unwrap() += 1;
        }
        counts
    }

    /// Per-class percentages over all pairs; values sum to 100 up to
    /// rounding. Errors on an empty corpus.
    pub fn class_histogram(&self) -> Result<BTreeMap<LengthClass, f64>> {
        if self.pairs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let total = self.pairs.len() as f64;
        Ok(self
            .class_counts()
            .into_iter()
            .map(|(c, n)| (c, 100.0 * n as f64 / total))
            .collect())
    }

    /// Mean target/source length ratio over all pairs.
    pub fn mean_lr(&self) -> Result<f64> {
        if self.pairs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok(self.pairs.iter().map(|p| p.lr).sum::<f64>() / self.pairs.len() as f64)
    }

    pub fn save(&self, path: &Path, format: CorpusFormat) -> Result<()> {
        let file = File::create(path)?;
        let mut w = BufWriter::new(file);
        match format {
            CorpusFormat::Tsv => {
                for pair in &self.pairs {
                    writeln!(
                        w,
                        "{}\t{}\t{}",
                        pair.source,
                        pair.target,
                        pair.provenance.as_str()
                    )?;
                }
            }
            CorpusFormat::Jsonl => {
                for pair in &self.pairs {
                    let record = JsonlRecord {
                        source: pair.source.clone(),
                        target: pair.target.clone(),
                        provenance: Some(pair.provenance),
                        length_class: Some(pair.length_class),
                    };
                    writeln!(w, "{}", serde_json::to_string(&record)?)?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path, format: CorpusFormat, direction: DirectionTag) -> Result<LoadedCorpus> {
        let file = File::open(path)?;
        let reader = BufReader::new(file);
        let mut pairs = Vec::new();
        let mut warnings = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let (pair, stored_class) = match format {
                CorpusFormat::Tsv => parse_tsv_line(&line, lineno)?,
                CorpusFormat::Jsonl => parse_jsonl_line(&line, lineno)?,
            };
            if let Some(stored) = stored_class {
                if stored != pair.length_class {
                    warnings.push(format!(
                        "line {lineno}: stored length_class {} but recomputed {}",
                        stored, pair.length_class
                    ));
                }
            }
            pairs.push(pair);
        }
        Ok(LoadedCorpus {
            corpus: Corpus::new(pairs, direction),
            warnings,
        })
    }
}

fn parse_tsv_line(line: &str, lineno: usize) -> Result<(BitextPair, Option<LengthClass>)> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() < 2 || cols.len() > 3 {
        return Err(Error::Parse {
            line: lineno,
            message: format!("expected 2 or 3 tab-separated columns, got {}", cols.len()),
        });
    }
    let provenance = match cols.get(2) {
        Some(p) => Provenance::from_str(p.trim()).map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?,
        None => Provenance::Original,
    };
    let pair = BitextPair::new(cols[0], cols[1], provenance).map_err(|e| Error::Parse {
        line: lineno,
        message: e.to_string(),
    })?;
    Ok((pair, None))
}

fn parse_jsonl_line(line: &str, lineno: usize) -> Result<(BitextPair, Option<LengthClass>)> {
    let record: JsonlRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
        line: lineno,
        message: e.to_string(),
    })?;
    let pair = BitextPair::new(
        &record.source,
        &record.target,
        record.provenance.unwrap_or(Provenance::Original),
    )
    .map_err(|e| Error::Parse {
        line: lineno,
        message: e.to_string(),
    })?;
    Ok((pair, record.length_class))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_thresholds() {
        assert_eq!(classify_length(100, 94).unwrap(), LengthClass::Short);
        assert_eq!(classify_length(100, 100).unwrap(), LengthClass::Normal);
        assert_eq!(classify_length(100, 106).unwrap(), LengthClass::Long);
        // boundaries are inclusive on the normal side
        assert_eq!(classify_length(100, 95).unwrap(), LengthClass::Normal);
        assert_eq!(classify_length(100, 105).unwrap(), LengthClass::Normal);
    }

    #[test]
    fn classify_zero_source_errors() {
        assert!(matches!(
            classify_length(0, 10),
            Err(Error::ZeroSourceLength { .. })
        ));
    }

    #[test]
    fn compliance_band_inclusive() {
        assert!(is_length_compliant(100, 110).unwrap());
        assert!(!is_length_compliant(100, 111).unwrap());
        assert!(is_length_compliant(50, 45).unwrap());
        assert!(matches!(
            is_length_compliant(0, 1),
            Err(Error::ZeroSourceLength { .. })
        ));
    }

    #[test]
    fn tag_prepend_and_strip_round_trip() {
        let tagged = prepend_length_tag("bonjour", LengthClass::Normal);
        assert_eq!(tagged, "<v:normal> bonjour");
        assert_eq!(strip_tags(&tagged), "bonjour");
        assert_eq!(
            prepend_length_tag("ciao", LengthClass::Long),
            "<v:long> ciao"
        );
        // tags never count toward character length
        assert_eq!(char_len(&tagged), "bonjour".chars().count());
        assert_eq!(char_len("<l:en> a b"), 3);
    }

    #[test]
    fn control_token_recognition() {
        assert!(is_control_token("<v:short>"));
        assert!(is_control_token("<l:en>"));
        assert!(is_control_token("<lv:fr:long>"));
        assert!(!is_control_token("<x:short>"));
        assert!(!is_control_token("<v:>"));
        assert!(!is_control_token("<v:a b>"));
        assert!(!is_control_token("plain"));
    }

    #[test]
    fn histogram_three_way_split() {
        let direction = DirectionTag::new("src", "tgt").unwrap();
        let pairs = vec![
            BitextPair::new("aaaaaaaaaa", "aaaaaaaaa", Provenance::Original).unwrap(), // 0.9
            BitextPair::new("aaaaaaaaaa", "aaaaaaaaaa", Provenance::Original).unwrap(), // 1.0
            BitextPair::new("aaaaaaaaaa", "aaaaaaaaaaaa", Provenance::Original).unwrap(), // 1.2
        ];
        let corpus = Corpus::new(pairs, direction);
        let hist = corpus.class_histogram().unwrap();
        for v in hist.values() {
            assert!((v - 100.0 / 3.0).abs() < 1e-9);
        }
        assert!((hist.values().sum::<f64>() - 100.0).abs() < 0.1);
    }

    #[test]
    fn histogram_all_normal_and_empty() {
        let direction = DirectionTag::new("src", "tgt").unwrap();
        let pairs = vec![BitextPair::new("abc", "abc", Provenance::Original).unwrap()];
        let corpus = Corpus::new(pairs, direction.clone());
        let hist = corpus.class_histogram().unwrap();
        assert_eq!(hist[&LengthClass::Short], 0.0);
        assert_eq!(hist[&LengthClass::Normal], 100.0);
        assert_eq!(hist[&LengthClass::Long], 0.0);

        let empty = Corpus::new(vec![], direction);
        assert!(matches!(empty.class_histogram(), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn tsv_round_trip_and_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.tsv");
        let direction = DirectionTag::new("src", "tgt").unwrap();
        let pairs: Vec<BitextPair> = (0..10)
            .map(|i| {
                BitextPair::new(
                    &format!("source {i}"),
                    &format!("target {i}"),
                    if i % 2 == 0 {
                        Provenance::Original
                    } else {
                        Provenance::Pseudo
                    },
                )
                .unwrap()
            })
            .collect();
        let corpus = Corpus::new(pairs, direction.clone());
        corpus.save(&path, CorpusFormat::Tsv).unwrap();
        let loaded = Corpus::load(&path, CorpusFormat::Tsv, direction.clone()).unwrap();
        assert_eq!(loaded.corpus, corpus);
        assert!(loaded.warnings.is_empty());

        let bad = dir.path().join("bad.tsv");
        std::fs::write(&bad, "good\tline\nonly-one-column\n").unwrap();
        match Corpus::load(&bad, CorpusFormat::Tsv, direction) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn jsonl_provenance_and_class_warning() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        std::fs::write(
            &path,
            concat!(
                "{\"source\":\"abcd\",\"target\":\"abcd\",\"provenance\":\"pseudo\"}\n",
                "{\"source\":\"abcd\",\"target\":\"abcdefgh\",\"length_class\":\"short\"}\n",
            ),
        )
        .unwrap();
        let direction = DirectionTag::new("src", "tgt").unwrap();
        let loaded = Corpus::load(&path, CorpusFormat::Jsonl, direction).unwrap();
        assert_eq!(loaded.corpus.pairs[0].provenance, Provenance::Pseudo);
        // stored class disagreed with the recomputed one
        assert_eq!(loaded.corpus.pairs[1].length_class, LengthClass::Long);
        assert_eq!(loaded.warnings.len(), 1);
        assert!(loaded.warnings[0].contains("line 2"));
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        let direction = DirectionTag::new("src", "tgt").unwrap();
        let pairs = vec![
            BitextPair::new("un deux", "one two", Provenance::Original).unwrap(),
            BitextPair::new("trois", "three!", Provenance::Pseudo).unwrap(),
        ];
        let corpus = Corpus::new(pairs, direction.clone());
        corpus.save(&path, CorpusFormat::Jsonl).unwrap();
        let loaded = Corpus::load(&path, CorpusFormat::Jsonl, direction).unwrap();
        assert_eq!(loaded.corpus, corpus);
        assert!(loaded.warnings.is_empty());
    }

    #[test]
    fn direction_tag_rejects_same_language() {
        assert!(DirectionTag::new("en", "en").is_err());
        let tag = DirectionTag::new("en", "fr").unwrap();
        let rev = tag.reversed();
        assert_eq!(rev.src_lang, "fr");
        assert_eq!(rev.tgt_lang, "en");
    }

    #[test]
    fn pair_rejects_empty_sides() {
        assert!(BitextPair::new("", "x", Provenance::Original).is_err());
        assert!(BitextPair::new("x", "   ", Provenance::Original).is_err());
        // a tag-only sentence has zero countable characters
        assert!(BitextPair::new("<v:long>", "x", Provenance::Original).is_err());
    }
}
