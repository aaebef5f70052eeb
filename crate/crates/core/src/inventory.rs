//! Phone symbols, label folding and pronunciation lookup.
//!
//! Phone labels are lower-case (TIMIT/Buckeye style); dictionary words are
//! upper-case (CMUdict style). Both conventions are applied on input so
//! callers can pass either case.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Buckeye folding table shipped with the crate.
pub const BUCKEYE_FOLDING: &str = include_str!("../data/buckeye_folding.tsv");

/// TIMIT folding table shipped with the crate.
///
/// Follows the usual 61 to 39 label reduction, except that stop closures
/// fold into their stop (`pcl` -> `p`) and the glottal stop `q` stays.
pub const TIMIT_FOLDING: &str = include_str!("../data/timit_folding.tsv");

#[derive(Debug, Error, PartialEq)]
pub enum InventoryError {
    #[error("phone set is empty")]
    EmptyPhoneSet,
    #[error("duplicate phone label {0:?}")]
    DuplicatePhone(String),
    #[error("empty phone label")]
    EmptyLabel,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("word {0:?} is not in the pronunciation dictionary")]
    OutOfVocabulary(String),
    #[error("phone {phone:?} is not in the phone set")]
    UnknownPhone { phone: String },
    #[error("folding target {target:?} (from {source_label:?}) is not in the phone set")]
    FoldingTargetMissing {
        source_label: String,
        target: String,
    },
    #[error("folding target {0:?} is itself folded; the table is not idempotent")]
    FoldingNotIdempotent(String),
}

/// Dense class id into a [`PhoneSet`]; also the row index of a posteriorgram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhoneId(pub usize);

impl fmt::Display for PhoneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Ordered set of unique phone labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhoneSet {
    symbols: Vec<String>,
    index: HashMap<String, usize>,
}

impl PhoneSet {
    pub fn new<I, S>(symbols: I) -> Result<Self, InventoryError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut list = Vec::new();
        let mut index = HashMap::new();
        for sym in symbols {
            let sym = normalize_phone(sym.as_ref());
            if sym.is_empty() {
                return Err(InventoryError::EmptyLabel);
            }
            if index.insert(sym.clone(), list.len()).is_some() {
                return Err(InventoryError::DuplicatePhone(sym));
            }
            list.push(sym);
        }
        if list.is_empty() {
            return Err(InventoryError::EmptyPhoneSet);
        }
        Ok(Self {
            symbols: list,
            index,
        })
    }

    /// Parse a phone list: one label per line (or whitespace separated),
    /// `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self, InventoryError> {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .flat_map(str::split_whitespace),
        )
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn id(&self, label: &str) -> Option<PhoneId> {
        self.index.get(label).map(|&i| PhoneId(i))
    }

    pub fn label(&self, id: PhoneId) -> Option<&str> {
        self.symbols.get(id.0).map(String::as_str)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.index.contains_key(label)
    }
}

/// Many-to-one label normalization map.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FoldingTable {
    mapping: HashMap<String, String>,
}

impl FoldingTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parse `source<TAB>target` lines. Blank and `#` lines are ignored;
    /// a later line for the same source overrides an earlier one.
    pub fn parse(text: &str) -> Result<Self, InventoryError> {
        let mut mapping = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 2 {
                return Err(InventoryError::Parse {
                    line: lineno + 1,
                    message: format!(
                        "expected \"source<TAB>target\", found {} field(s)",
                        fields.len()
                    ),
                });
            }
            let (src, dst) = (fields[0].trim(), fields[1].trim());
            if src.is_empty() || dst.is_empty() {
                return Err(InventoryError::Parse {
                    line: lineno + 1,
                    message: "empty source or target label".into(),
                });
            }
            mapping.insert(normalize_phone(src), normalize_phone(dst));
        }
        Ok(Self { mapping })
    }

    pub fn buckeye() -> Self {
        Self::parse(BUCKEYE_FOLDING).expect("shipped Buckeye folding table parses")
    }

    pub fn timit() -> Self {
        Self::parse(TIMIT_FOLDING).expect("shipped TIMIT folding table parses")
    }

    pub fn insert(&mut self, source: &str, target: &str) {
        self.mapping
            .insert(normalize_phone(source), normalize_phone(target));
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn get(&self, source: &str) -> Option<&str> {
        self.mapping.get(source).map(String::as_str)
    }

    /// Entries sorted by source label.
    pub fn entries(&self) -> Vec<(&str, &str)> {
        let mut v: Vec<_> = self
            .mapping
            .iter()
            .map(|(s, t)| (s.as_str(), t.as_str()))
            .collect();
        v.sort_unstable();
        v
    }

    /// Look up `label`; labels without an entry come back unchanged.
    pub fn fold<'a>(&'a self, label: &'a str) -> &'a str {
        self.mapping.get(label).map_or(label, String::as_str)
    }

    /// Checks that every target is a fixed point and, when a phone set is
    /// given, that every target belongs to it.
    pub fn validate(&self, phones: Option<&PhoneSet>) -> Result<(), InventoryError> {
        for (src, dst) in self.entries() {
            if self.mapping.contains_key(dst) && self.fold(dst) != dst {
                return Err(InventoryError::FoldingNotIdempotent(dst.to_string()));
            }
            if let Some(phones) = phones {
                if !phones.contains(dst) {
                    return Err(InventoryError::FoldingTargetMissing {
                        source_label: src.to_string(),
                        target: dst.to_string(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Apply `table` to a single label.
pub fn fold_label(label: &str, table: &FoldingTable) -> String {
    table.fold(label).to_string()
}

/// Word to phone-sequence lookup in CMUdict layout.
///
/// Alternate pronunciations (`WORD(1)`, `WORD(2)`, ...) are kept in file
/// order but only the first is ever returned.
#[derive(Debug, Clone, Default)]
pub struct PronunciationDictionary {
    entries: HashMap<String, Vec<Vec<String>>>,
}

impl PronunciationDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parse `WORD PH1 PH2 ...` lines. CMUdict stress digits on vowels are
    /// dropped (`AH0` becomes `ah`).
    pub fn parse(text: &str) -> Result<Self, InventoryError> {
        let mut dict = Self::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            // CMUdict itself uses ";;;" for comments
            if line.is_empty() || line.starts_with('#') || line.starts_with(";;;") {
                continue;
            }
            let mut fields = line.split_whitespace();
            let word = fields.next().unwrap_or_default();
            let phones: Vec<&str> = fields.collect();
            if phones.is_empty() {
                return Err(InventoryError::Parse {
                    line: lineno + 1,
                    message: format!("word {word:?} has no phones"),
                });
            }
            let word = strip_variant_suffix(word);
            if word.is_empty() {
                return Err(InventoryError::Parse {
                    line: lineno + 1,
                    message: "empty word".into(),
                });
            }
            dict.insert(word, phones);
        }
        Ok(dict)
    }

    pub fn insert<S: AsRef<str>>(&mut self, word: &str, phones: impl IntoIterator<Item = S>) {
        let phones = phones
            .into_iter()
            .map(|p| strip_stress(&normalize_phone(p.as_ref())).to_string())
            .collect();
        self.entries
            .entry(normalize_word(word))
            .or_default()
            .push(phones);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(&normalize_word(word))
    }

    /// All pronunciations for `word`, unfolded.
    pub fn variants(&self, word: &str) -> Option<&[Vec<String>]> {
        self.entries.get(&normalize_word(word)).map(Vec::as_slice)
    }

    /// First listed pronunciation of `word`, folded through `folding`.
    pub fn lookup(
        &self,
        word: &str,
        folding: &FoldingTable,
    ) -> Result<Vec<String>, InventoryError> {
        let first = self
            .variants(word)
            .and_then(|v| v.first())
            .ok_or_else(|| InventoryError::OutOfVocabulary(word.to_string()))?;
        Ok(first.iter().map(|p| fold_label(p, folding)).collect())
    }

    /// Like [`lookup`](Self::lookup) but resolves labels to class ids and
    /// rejects phones outside `phones`.
    pub fn lookup_ids(
        &self,
        word: &str,
        folding: &FoldingTable,
        phones: &PhoneSet,
    ) -> Result<Vec<PhoneId>, InventoryError> {
        self.lookup(word, folding)?
            .into_iter()
            .map(|p| {
                phones
                    .id(&p)
                    .ok_or(InventoryError::UnknownPhone { phone: p })
            })
            .collect()
    }

    /// Checks that every phone of every entry, after folding, is in `phones`.
    pub fn validate(
        &self,
        phones: &PhoneSet,
        folding: &FoldingTable,
    ) -> Result<(), InventoryError> {
        for prons in self.entries.values() {
            for phone in prons.iter().flatten() {
                let folded = folding.fold(phone);
                if !phones.contains(folded) {
                    return Err(InventoryError::UnknownPhone {
                        phone: folded.to_string(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Convenience wrapper around [`PronunciationDictionary::lookup`].
pub fn lookup_pronunciation(
    word: &str,
    dict: &PronunciationDictionary,
    folding: &FoldingTable,
) -> Result<Vec<String>, InventoryError> {
    dict.lookup(word, folding)
}

pub fn normalize_phone(label: &str) -> String {
    label.trim().to_lowercase()
}

pub fn normalize_word(word: &str) -> String {
    word.trim().to_uppercase()
}

fn strip_stress(phone: &str) -> &str {
    phone.trim_end_matches(['0', '1', '2'])
}

fn strip_variant_suffix(word: &str) -> &str {
    match word.find('(') {
        Some(pos) if word.ends_with(')') && pos > 0 => &word[..pos],
        _ => word,
    }
}
