//! Part-of-speech annotated token streams and a lexicon-based fallback tagger.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed part-of-speech tag set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pos {
    Noun,
    Propn,
    Verb,
    Det,
    Adj,
    Adv,
    Pron,
    Adp,
    Conj,
    Num,
    Punct,
    Other,
}

impl Pos {
    pub fn as_str(self) -> &'static str {
        match self {
            Pos::Noun => "noun",
            Pos::Propn => "propn",
            Pos::Verb => "verb",
            Pos::Det => "det",
            Pos::Adj => "adj",
            Pos::Adv => "adv",
            Pos::Pron => "pron",
            Pos::Adp => "adp",
            Pos::Conj => "conj",
            Pos::Num => "num",
            Pos::Punct => "punct",
            Pos::Other => "other",
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Accepts the native names, universal dependency tags, and the TreeTagger
/// French and English (Penn) tag families.
impl FromStr for Pos {
    type Err = String;

    fn from_str(raw: &str) -> std::result::Result<Self, Self::Err> {
        let tag = raw.trim();
        let upper = tag.to_ascii_uppercase();
        // `PRP` is a pronoun in Penn but a preposition in the French tag set;
        // `PRP:det` only exists in the latter.
        if upper == "PRP:DET" {
            return Ok(Pos::Adp);
        }
        let head = upper.split(':').next().unwrap_or("");
        let pos = match head {
            "NOUN" | "NOM" | "NN" | "NNS" => Pos::Noun,
            "PROPN" | "NAM" | "NP" | "NPS" | "NNP" | "NNPS" => Pos::Propn,
            "VERB" | "VER" | "MD" => Pos::Verb,
            "DET" | "DT" | "PDT" | "WDT" => Pos::Det,
            "ADJ" | "JJ" | "JJR" | "JJS" => Pos::Adj,
            "ADV" | "RB" | "RBR" | "RBS" | "WRB" => Pos::Adv,
            "PRON" | "PRO" | "PP" | "PP$" | "PRP" | "PRP$" | "WP" | "WP$" => Pos::Pron,
            "ADP" | "IN" | "TO" => Pos::Adp,
            "CONJ" | "CCONJ" | "SCONJ" | "KON" | "CC" => Pos::Conj,
            "NUM" | "CD" => Pos::Num,
            "PUNCT" | "PUN" | "SENT" | "SYM" => Pos::Punct,
            "OTHER" | "X" | "ABR" | "INT" | "UH" | "FW" | "LS" | "POS" | "RP" | "EX" => Pos::Other,
            _ if head.starts_with("VB")
                || head.starts_with("VV")
                || head.starts_with("VH")
                || head.starts_with("VD") =>
            {
                Pos::Verb
            }
            _ => return Err(format!("unknown part-of-speech tag `{tag}`")),
        };
        Ok(pos)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub lemma: String,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenStream {
    pub article_id: String,
    pub tokens: Vec<Token>,
}

/// Parses `surface<TAB>lemma<TAB>pos` lines, blank line between documents.
/// A TreeTagger `<unknown>` lemma falls back to the lowercased surface form.
pub fn parse_token_documents(text: &str, file: &str) -> Result<Vec<Vec<Token>>> {
    let mut documents = Vec::new();
    let mut current = Vec::new();
    for (index, line) in text.lines().enumerate() {
        let line_no = index as u64 + 1;
        if line.trim().is_empty() {
            if !current.is_empty() {
                documents.push(std::mem::take(&mut current));
            }
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Malformed {
                file: file.to_string(),
                line: line_no,
                field: "token".into(),
                message: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        let pos = fields[2].parse::<Pos>().map_err(|message| Error::Malformed {
            file: file.to_string(),
            line: line_no,
            field: "pos".into(),
            message,
        })?;
        let surface = fields[0].to_string();
        let lemma = match fields[1].trim() {
            "" | "<unknown>" => surface.to_lowercase(),
            l => l.to_string(),
        };
        if lemma.is_empty() {
            return Err(Error::Malformed {
                file: file.to_string(),
                line: line_no,
                field: "lemma".into(),
                message: "empty lemma".into(),
            });
        }
        current.push(Token {
            surface,
            lemma,
            pos,
        });
    }
    if !current.is_empty() {
        documents.push(current);
    }
    Ok(documents)
}

pub fn write_token_document(tokens: &[Token]) -> String {
    let mut out = String::new();
    for t in tokens {
        out.push_str(&t.surface);
        out.push('\t');
        out.push_str(&t.lemma);
        out.push('\t');
        out.push_str(t.pos.as_str());
        out.push('\n');
    }
    out
}

const LEXICON_EN: &str = include_str!("lexicon_en.tsv");
const LEXICON_FR: &str = include_str!("lexicon_fr.tsv");

/// Minimal lexicon tagger for test fixtures and small demos. Production corpora
/// are expected to arrive pre-annotated. Unknown alphabetic words are tagged as
/// nouns, digits as numerals and everything else as punctuation.
pub struct FallbackTagger {
    lexicon: HashMap<String, (String, Pos)>,
}

impl FallbackTagger {
    pub fn new(language: &str) -> Result<Self> {
        let source = match language {
            "en" => LEXICON_EN,
            "fr" => LEXICON_FR,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "no bundled lexicon for language `{other}`"
                )))
            }
        };
        let mut lexicon = HashMap::new();
        for line in source.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')) {
            let mut parts = line.split('\t');
            let (Some(form), Some(lemma), Some(pos)) = (parts.next(), parts.next(), parts.next())
            else {
                continue;
            };
            if let Ok(pos) = pos.parse() {
                lexicon.insert(form.to_string(), (lemma.to_string(), pos));
            }
        }
        Ok(Self { lexicon })
    }

    pub fn tag(&self, article_id: &str, text: &str) -> TokenStream {
        let mut tokens = Vec::new();
        let mut word = String::new();
        let flush = |word: &mut String, tokens: &mut Vec<Token>| {
            if word.is_empty() {
                return;
            }
            let lower = word.to_lowercase();
            let (lemma, pos) = match self.lexicon.get(&lower) {
                Some((lemma, pos)) => (lemma.clone(), *pos),
                None if lower.chars().all(|c| c.is_ascii_digit()) => (lower.clone(), Pos::Num),
                None => (lower.clone(), Pos::Noun),
            };
            tokens.push(Token {
                surface: std::mem::take(word),
                lemma,
                pos,
            });
        };
        for c in text.chars() {
            if c.is_alphanumeric() || c == '-' {
                word.push(c);
            } else {
                flush(&mut word, &mut tokens);
                if !c.is_whitespace() {
                    tokens.push(Token {
                        surface: c.to_string(),
                        lemma: c.to_string(),
                        pos: Pos::Punct,
                    });
                }
            }
        }
        flush(&mut word, &mut tokens);
        TokenStream {
            article_id: article_id.to_string(),
            tokens,
        }
    }
}
