//! Corpus ingestion, validation and descriptive statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use chrono::Datelike;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::countries;
use crate::error::{Error, Result};
use crate::topics::tokens::{parse_token_documents, TokenStream};

pub const FORMAT_VERSION: u32 = 1;
pub const MIN_YEAR: i32 = 1900;

const ARTICLE_COLUMNS: [&str; 8] = [
    "id",
    "year",
    "language",
    "keywords",
    "authoring_countries",
    "studied_countries",
    "abstract",
    "fulltext_ref",
];
const CITATION_COLUMNS: [&str; 4] = ["citing_id", "cited_id", "depth", "abstract"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    pub year: i32,
    pub language: String,
    pub keywords: Vec<String>,
    pub authoring_countries: Vec<String>,
    pub studied_countries: Vec<String>,
    #[serde(rename = "abstract", default, skip_serializing_if = "Option::is_none")]
    pub abstract_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fulltext_ref: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitationRecord {
    pub citing_id: String,
    pub cited_id: String,
    pub depth: u8,
    /// Abstract of the citing publication.
    #[serde(rename = "abstract", default, skip_serializing_if = "Option::is_none")]
    pub abstract_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub sources: Vec<SourceDigest>,
    pub ingested_at: String,
    /// Non-fatal ingestion findings, e.g. unassigned country codes.
    pub warnings: Vec<String>,
}

/// An immutable, validated corpus: seed articles, their citation neighborhood
/// and any attached full-text token streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub format_version: u32,
    pub articles: BTreeMap<String, Article>,
    pub citations: Vec<CitationRecord>,
    #[serde(default)]
    pub fulltexts: BTreeMap<String, TokenStream>,
    pub provenance: Provenance,
}

fn normalize_keyword(raw: &str) -> String {
    raw.trim().to_lowercase()
}

fn split_list(raw: &str) -> impl Iterator<Item = &str> {
    raw.split('|').map(str::trim).filter(|s| !s.is_empty())
}

fn dedup_preserving_order(items: Vec<String>) -> Vec<String> {
    let mut seen = BTreeSet::new();
    items
        .into_iter()
        .filter(|item| seen.insert(item.clone()))
        .collect()
}

fn current_year() -> i32 {
    chrono::Utc::now().year()
}

impl Corpus {
    /// Validates every invariant and assembles a corpus. Unassigned (but
    /// well-formed) country codes are recorded as provenance warnings.
    pub fn new(
        articles: Vec<Article>,
        citations: Vec<CitationRecord>,
        fulltexts: BTreeMap<String, TokenStream>,
        mut provenance: Provenance,
    ) -> Result<Self> {
        if articles.is_empty() {
            return Err(Error::NoArticles);
        }
        let max_year = current_year();
        let mut by_id = BTreeMap::new();
        let mut duplicates = BTreeSet::new();
        for article in articles {
            if article.id.trim().is_empty() {
                return Err(Error::InvalidCorpus("empty article id".into()));
            }
            if !(MIN_YEAR..=max_year).contains(&article.year) {
                return Err(Error::InvalidCorpus(format!(
                    "article {}: year {} outside [{MIN_YEAR}, {max_year}]",
                    article.id, article.year
                )));
            }
            if article.language.len() != 2
                || !article.language.bytes().all(|b| b.is_ascii_lowercase())
            {
                return Err(Error::InvalidCorpus(format!(
                    "article {}: language `{}` is not a 2-letter lowercase code",
                    article.id, article.language
                )));
            }
            for kw in &article.keywords {
                if kw.is_empty() || *kw != normalize_keyword(kw) {
                    return Err(Error::InvalidCorpus(format!(
                        "article {}: keyword `{kw}` is not normalized",
                        article.id
                    )));
                }
            }
            for code in article
                .authoring_countries
                .iter()
                .chain(&article.studied_countries)
            {
                if !countries::is_code_shaped(code) {
                    return Err(Error::InvalidCorpus(format!(
                        "article {}: country code `{code}` does not match [A-Z]{{2}}",
                        article.id
                    )));
                }
                if !countries::is_assigned(code) {
                    let warning = format!("article {}: unassigned country code {code}", article.id);
                    if !provenance.warnings.contains(&warning) {
                        provenance.warnings.push(warning);
                    }
                }
            }
            if by_id.contains_key(&article.id) {
                duplicates.insert(article.id.clone());
            } else {
                by_id.insert(article.id.clone(), article);
            }
        }
        if !duplicates.is_empty() {
            return Err(Error::DuplicateIds(duplicates.into_iter().collect()));
        }
        let mut pairs = BTreeSet::new();
        for c in &citations {
            if c.citing_id == c.cited_id {
                return Err(Error::InvalidCorpus(format!(
                    "citation {} cites itself",
                    c.citing_id
                )));
            }
            if !(1..=2).contains(&c.depth) {
                return Err(Error::InvalidCorpus(format!(
                    "citation {}→{}: depth {} not in {{1,2}}",
                    c.citing_id, c.cited_id, c.depth
                )));
            }
            if !pairs.insert((c.citing_id.as_str(), c.cited_id.as_str())) {
                return Err(Error::InvalidCorpus(format!(
                    "duplicate citation {}→{}",
                    c.citing_id, c.cited_id
                )));
            }
        }
        for id in fulltexts.keys() {
            if !by_id.contains_key(id) {
                return Err(Error::InvalidCorpus(format!(
                    "full text attached to unknown article {id}"
                )));
            }
        }
        Ok(Self {
            format_version: FORMAT_VERSION,
            articles: by_id,
            citations,
            fulltexts,
            provenance,
        })
    }

    pub fn is_seed(&self, id: &str) -> bool {
        self.articles.contains_key(id)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses a corpus snapshot and re-validates it.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: Corpus = serde_json::from_str(text)?;
        if raw.format_version != FORMAT_VERSION {
            return Err(Error::InvalidCorpus(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                raw.format_version
            )));
        }
        let Corpus {
            articles,
            citations,
            fulltexts,
            provenance,
            ..
        } = raw;
        let articles = articles.into_values().collect();
        Corpus::new(articles, citations, fulltexts, provenance)
    }

    /// Digest of the corpus content, independent of ingestion time and paths.
    pub fn content_digest(&self) -> String {
        #[derive(Serialize)]
        struct Content<'a> {
            articles: &'a BTreeMap<String, Article>,
            citations: &'a [CitationRecord],
            fulltexts: &'a BTreeMap<String, TokenStream>,
        }
        let bytes = serde_json::to_vec(&Content {
            articles: &self.articles,
            citations: &self.citations,
            fulltexts: &self.fulltexts,
        })
        .expect("corpus content serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

fn read_source(path: &Path) -> Result<(String, SourceDigest)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let digest = SourceDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    };
    let text = String::from_utf8(bytes).map_err(|e| Error::Malformed {
        file: path.display().to_string(),
        line: 0,
        field: "encoding".into(),
        message: e.to_string(),
    })?;
    Ok((text, digest))
}

struct Columns {
    file: String,
    index: BTreeMap<&'static str, usize>,
}

impl Columns {
    fn new(file: &str, headers: &csv::StringRecord, expected: &[&'static str]) -> Result<Self> {
        let mut index = BTreeMap::new();
        for name in expected {
            let pos = headers.iter().position(|h| h.trim() == *name).ok_or_else(|| {
                Error::Malformed {
                    file: file.to_string(),
                    line: 1,
                    field: name.to_string(),
                    message: "missing column in header".into(),
                }
            })?;
            index.insert(*name, pos);
        }
        Ok(Self {
            file: file.to_string(),
            index,
        })
    }

    fn get<'r>(&self, record: &'r csv::StringRecord, name: &str) -> &'r str {
        record.get(self.index[name]).unwrap_or("")
    }

    fn malformed(&self, line: u64, field: &str, message: impl Into<String>) -> Error {
        Error::Malformed {
            file: self.file.clone(),
            line,
            field: field.to_string(),
            message: message.into(),
        }
    }
}

fn csv_error(file: &str, err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    Error::Malformed {
        file: file.to_string(),
        line,
        field: "record".into(),
        message: err.to_string(),
    }
}

fn parse_countries(cols: &Columns, line: u64, field: &str, raw: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for code in split_list(raw) {
        let code = code.to_uppercase();
        if !countries::is_code_shaped(&code) {
            return Err(cols.malformed(line, field, format!("`{code}` is not a 2-letter code")));
        }
        out.push(code);
    }
    Ok(dedup_preserving_order(out))
}

/// Resolves `path` or `path#n` (n-th document of a multi-document file)
/// relative to `base`.
fn load_fulltext(base: &Path, reference: &str, article_id: &str) -> Result<TokenStream> {
    let (path_part, index) = match reference.rsplit_once('#') {
        Some((p, n)) if n.chars().all(|c| c.is_ascii_digit()) && !n.is_empty() => {
            (p, Some(n.parse::<usize>().unwrap_or(0)))
        }
        _ => (reference, None),
    };
    let path: PathBuf = if Path::new(path_part).is_absolute() {
        PathBuf::from(path_part)
    } else {
        base.join(path_part)
    };
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let file = path.display().to_string();
    let mut documents = parse_token_documents(&text, &file)?;
    let tokens = match index {
        Some(i) if i < documents.len() => documents.swap_remove(i),
        None if documents.len() == 1 => documents.pop().unwrap_or_default(),
        None if documents.is_empty() => Vec::new(),
        _ => {
            return Err(Error::Malformed {
                file,
                line: 0,
                field: "fulltext_ref".into(),
                message: format!(
                    "reference `{reference}` for article {article_id} does not select one of {} documents",
                    documents.len()
                ),
            })
        }
    };
    Ok(TokenStream {
        article_id: article_id.to_string(),
        tokens,
    })
}

/// Loads the articles CSV (and optionally the citations CSV), normalizing
/// keywords and country codes. Full-text references are resolved relative to
/// the articles file.
pub fn load_corpus(articles_path: &Path, citations_path: Option<&Path>) -> Result<Corpus> {
    let (text, digest) = read_source(articles_path)?;
    let file = articles_path.display().to_string();
    let base = articles_path.parent().unwrap_or(Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .flexible(false)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| csv_error(&file, e))?.clone();
    let cols = Columns::new(&file, &headers, &ARTICLE_COLUMNS)?;
    let max_year = current_year();

    let mut articles = Vec::new();
    let mut fulltexts = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(&file, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let id = cols.get(&record, "id").trim().to_string();
        if id.is_empty() {
            return Err(cols.malformed(line, "id", "empty id"));
        }
        let year_raw = cols.get(&record, "year").trim();
        let year: i32 = year_raw
            .parse()
            .map_err(|_| cols.malformed(line, "year", format!("`{year_raw}` is not an integer")))?;
        if !(MIN_YEAR..=max_year).contains(&year) {
            return Err(cols.malformed(
                line,
                "year",
                format!("{year} outside [{MIN_YEAR}, {max_year}]"),
            ));
        }
        let language = cols.get(&record, "language").trim().to_lowercase();
        if language.len() != 2 || !language.bytes().all(|b| b.is_ascii_lowercase()) {
            return Err(cols.malformed(line, "language", format!("`{language}` is not a 2-letter code")));
        }
        let keywords = dedup_preserving_order(
            split_list(cols.get(&record, "keywords"))
                .map(normalize_keyword)
                .filter(|k| !k.is_empty())
                .collect(),
        );
        let authoring_countries = parse_countries(
            &cols,
            line,
            "authoring_countries",
            cols.get(&record, "authoring_countries"),
        )?;
        let studied_countries = parse_countries(
            &cols,
            line,
            "studied_countries",
            cols.get(&record, "studied_countries"),
        )?;
        let abstract_text = Some(cols.get(&record, "abstract").trim().to_string()).filter(|s| !s.is_empty());
        let fulltext_ref = Some(cols.get(&record, "fulltext_ref").trim().to_string()).filter(|s| !s.is_empty());
        if let Some(reference) = &fulltext_ref {
            fulltexts.insert(id.clone(), load_fulltext(base, reference, &id)?);
        }
        articles.push(Article {
            id,
            year,
            language,
            keywords,
            authoring_countries,
            studied_countries,
            abstract_text,
            fulltext_ref,
        });
    }
    if articles.is_empty() {
        return Err(Error::NoArticles);
    }

    let mut sources = vec![digest];
    let mut citations = Vec::new();
    if let Some(path) = citations_path {
        let (text, digest) = read_source(path)?;
        sources.push(digest);
        citations = parse_citations(&text, &path.display().to_string())?;
    }

    let provenance = Provenance {
        sources,
        ingested_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        warnings: Vec::new(),
    };
    Corpus::new(articles, citations, fulltexts, provenance)
}

fn parse_citations(text: &str, file: &str) -> Result<Vec<CitationRecord>> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| csv_error(file, e))?.clone();
    let cols = Columns::new(file, &headers, &CITATION_COLUMNS)?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(file, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let citing_id = cols.get(&record, "citing_id").trim().to_string();
        let cited_id = cols.get(&record, "cited_id").trim().to_string();
        if citing_id.is_empty() {
            return Err(cols.malformed(line, "citing_id", "empty id"));
        }
        if cited_id.is_empty() {
            return Err(cols.malformed(line, "cited_id", "empty id"));
        }
        if citing_id == cited_id {
            return Err(cols.malformed(line, "cited_id", "a publication cannot cite itself"));
        }
        let depth_raw = cols.get(&record, "depth").trim();
        let depth = match depth_raw {
            "1" => 1,
            "2" => 2,
            _ => return Err(cols.malformed(line, "depth", format!("`{depth_raw}` is not 1 or 2"))),
        };
        if !seen.insert((citing_id.clone(), cited_id.clone())) {
            return Err(cols.malformed(
                line,
                "cited_id",
                format!("duplicate citation {citing_id}→{cited_id}"),
            ));
        }
        let abstract_text = Some(cols.get(&record, "abstract").trim().to_string()).filter(|s| !s.is_empty());
        out.push(CitationRecord {
            citing_id,
            cited_id,
            depth,
            abstract_text,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub article_count: usize,
    pub authoring_country_count: usize,
    pub studied_country_count: usize,
    pub citation_records: usize,
    pub citations_by_depth: BTreeMap<u8, usize>,
    /// Records whose cited end is a seed article.
    pub citations_received: usize,
    /// Records whose citing end is a seed article (the corpus's own references).
    pub cited_by_corpus: usize,
    pub articles_per_year: BTreeMap<i32, usize>,
    pub fulltext_count: usize,
}

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let mut authoring = BTreeSet::new();
    let mut studied = BTreeSet::new();
    let mut per_year = BTreeMap::new();
    for a in corpus.articles.values() {
        authoring.extend(a.authoring_countries.iter());
        studied.extend(a.studied_countries.iter());
        *per_year.entry(a.year).or_insert(0) += 1;
    }
    let mut by_depth = BTreeMap::from([(1u8, 0usize), (2u8, 0usize)]);
    let mut received = 0;
    let mut cited_by_corpus = 0;
    for c in &corpus.citations {
        *by_depth.entry(c.depth).or_insert(0) += 1;
        if corpus.is_seed(&c.cited_id) {
            received += 1;
        }
        if corpus.is_seed(&c.citing_id) {
            cited_by_corpus += 1;
        }
    }
    CorpusStats {
        article_count: corpus.articles.len(),
        authoring_country_count: authoring.len(),
        studied_country_count: studied.len(),
        citation_records: corpus.citations.len(),
        citations_by_depth: by_depth,
        citations_received: received,
        cited_by_corpus,
        articles_per_year: per_year,
        fulltext_count: corpus.fulltexts.len(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowEntry {
    pub origin: String,
    pub studied: String,
    pub count: usize,
    pub reciprocal: bool,
}

/// Origin (authoring) to destination (studied) article counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoFlowMatrix {
    /// Union of every country seen on either axis, sorted.
    pub countries: Vec<String>,
    /// Nonzero entries only, sorted by (origin, studied).
    pub entries: Vec<FlowEntry>,
}

impl GeoFlowMatrix {
    pub fn get(&self, origin: &str, studied: &str) -> usize {
        self.entries
            .binary_search_by(|e| (e.origin.as_str(), e.studied.as_str()).cmp(&(origin, studied)))
            .map(|i| self.entries[i].count)
            .unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.entries.iter().map(|e| e.count).sum()
    }
}

pub fn geo_flow_matrix(corpus: &Corpus) -> GeoFlowMatrix {
    let mut counts: BTreeMap<(String, String), usize> = BTreeMap::new();
    let mut countries = BTreeSet::new();
    for a in corpus.articles.values() {
        if a.studied_countries.is_empty() || a.authoring_countries.is_empty() {
            continue;
        }
        for o in &a.authoring_countries {
            for s in &a.studied_countries {
                countries.insert(o.clone());
                countries.insert(s.clone());
                *counts.entry((o.clone(), s.clone())).or_insert(0) += 1;
            }
        }
    }
    let entries = counts
        .iter()
        .map(|((o, s), &count)| FlowEntry {
            origin: o.clone(),
            studied: s.clone(),
            count,
            reciprocal: counts.get(&(s.clone(), o.clone())).is_some_and(|&c| c > 0),
        })
        .collect();
    GeoFlowMatrix {
        countries: countries.into_iter().collect(),
        entries,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    pub(crate) fn article(id: &str, keywords: &[&str], origin: &[&str], studied: &[&str]) -> Article {
        Article {
            id: id.into(),
            year: 2000,
            language: "fr".into(),
            keywords: keywords.iter().map(|s| s.to_string()).collect(),
            authoring_countries: origin.iter().map(|s| s.to_string()).collect(),
            studied_countries: studied.iter().map(|s| s.to_string()).collect(),
            abstract_text: None,
            fulltext_ref: None,
        }
    }

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let path = dir.join(name);
        std::fs::File::create(&path)
            .unwrap()
            .write_all(body.as_bytes())
            .unwrap();
        path
    }

    const HEADER: &str = "id,year,language,keywords,authoring_countries,studied_countries,abstract,fulltext_ref\n";

    #[test]
    fn loads_and_normalizes() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(
            dir.path(),
            "a.csv",
            &format!("{HEADER}a1,2001,FR, City | Urban Sprawl |city,fr|be,sn,,\n"),
        );
        let corpus = load_corpus(&path, None).unwrap();
        let a = &corpus.articles["a1"];
        assert_eq!(a.keywords, vec!["city", "urban sprawl"]);
        assert_eq!(a.authoring_countries, vec!["FR", "BE"]);
        assert_eq!(a.language, "fr");
        assert_eq!(corpus.provenance.sources.len(), 1);
        assert!(corpus.provenance.warnings.is_empty());
    }

    #[test]
    fn empty_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(dir.path(), "a.csv", HEADER);
        assert!(matches!(load_corpus(&path, None), Err(Error::NoArticles)));
    }

    #[test]
    fn duplicate_ids_are_listed() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(
            dir.path(),
            "a.csv",
            &format!("{HEADER}x,2001,fr,a,FR,,,\ny,2002,fr,b,FR,,,\nx,2003,fr,c,FR,,,\n"),
        );
        match load_corpus(&path, None) {
            Err(Error::DuplicateIds(ids)) => assert_eq!(ids, vec!["x"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_row_names_file_line_field() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(
            dir.path(),
            "a.csv",
            &format!("{HEADER}x,2001,fr,a,FR,,,\ny,later,fr,b,FR,,,\n"),
        );
        let err = load_corpus(&path, None).unwrap_err().to_string();
        assert!(err.contains("a.csv:3: field `year`"), "{err}");

        let path = write(dir.path(), "b.csv", &format!("{HEADER}x,2001,fr,a,FRA,,,\n"));
        let err = load_corpus(&path, None).unwrap_err().to_string();
        assert!(err.contains("b.csv:2: field `authoring_countries`"), "{err}");
    }

    #[test]
    fn unknown_country_is_a_warning() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(dir.path(), "a.csv", &format!("{HEADER}x,2001,fr,a,ZZ,,,\n"));
        let corpus = load_corpus(&path, None).unwrap();
        assert_eq!(corpus.provenance.warnings.len(), 1);
        assert!(corpus.provenance.warnings[0].contains("ZZ"));
    }

    #[test]
    fn citations_are_validated() {
        let dir = tempfile::tempdir().unwrap();
        let a = write(dir.path(), "a.csv", &format!("{HEADER}x,2001,fr,a,FR,,,\n"));
        let c = write(
            dir.path(),
            "c.csv",
            "citing_id,cited_id,depth,abstract\np,x,1,about cities\np,x,1,\n",
        );
        let err = load_corpus(&a, Some(&c)).unwrap_err().to_string();
        assert!(err.contains("c.csv:3: field `cited_id`"), "{err}");
        let c = write(dir.path(), "d.csv", "citing_id,cited_id,depth,abstract\np,x,3,\n");
        let err = load_corpus(&a, Some(&c)).unwrap_err().to_string();
        assert!(err.contains("field `depth`"), "{err}");
    }

    #[test]
    fn fulltext_references_resolve() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "t1.tsv", "Les\tle\tDET\nvilles\tville\tNOM\n");
        write(dir.path(), "multi.tsv", "a\ta\tNOM\n\nb\tb\tNOM\n");
        let path = write(
            dir.path(),
            "a.csv",
            &format!("{HEADER}x,2001,fr,a,FR,,,t1.tsv\ny,2001,fr,a,FR,,,multi.tsv#1\n"),
        );
        let corpus = load_corpus(&path, None).unwrap();
        assert_eq!(corpus.fulltexts["x"].tokens.len(), 2);
        assert_eq!(corpus.fulltexts["y"].tokens[0].lemma, "b");
    }

    #[test]
    fn stats_single_article() {
        let corpus = Corpus::new(
            vec![article("a", &["x"], &["FR"], &[])],
            vec![],
            BTreeMap::new(),
            Provenance::default(),
        )
        .unwrap();
        let stats = corpus_stats(&corpus);
        assert_eq!(stats.article_count, 1);
        assert_eq!(stats.citations_received, 0);
        assert_eq!(stats.cited_by_corpus, 0);
        assert!(stats.citations_by_depth.values().all(|&c| c == 0));
        assert_eq!(stats.articles_per_year.values().sum::<usize>(), 1);
    }

    #[test]
    fn reciprocal_flows() {
        let corpus = Corpus::new(
            vec![
                article("a", &[], &["FR"], &["VN"]),
                article("b", &[], &["VN"], &["FR"]),
                article("c", &[], &["FR", "BE"], &["SN"]),
                article("d", &[], &["FR"], &[]),
            ],
            vec![],
            BTreeMap::new(),
            Provenance::default(),
        )
        .unwrap();
        let flows = geo_flow_matrix(&corpus);
        assert_eq!(flows.get("FR", "VN"), 1);
        assert_eq!(flows.get("VN", "FR"), 1);
        assert_eq!(flows.get("FR", "SN"), 1);
        assert_eq!(flows.get("BE", "SN"), 1);
        assert_eq!(flows.get("SN", "FR"), 0);
        for e in &flows.entries {
            let expected = matches!((e.origin.as_str(), e.studied.as_str()), ("FR", "VN") | ("VN", "FR"));
            assert_eq!(e.reciprocal, expected, "{e:?}");
        }
        assert_eq!(flows.total(), 4);
    }

    #[test]
    fn snapshot_round_trip() {
        let corpus = Corpus::new(
            vec![article("a", &["x", "y"], &["FR"], &["VN"])],
            vec![CitationRecord {
                citing_id: "p".into(),
                cited_id: "a".into(),
                depth: 1,
                abstract_text: Some("text".into()),
            }],
            BTreeMap::new(),
            Provenance::default(),
        )
        .unwrap();
        let back = Corpus::from_json(&corpus.to_json().unwrap()).unwrap();
        assert_eq!(back, corpus);
        assert_eq!(back.content_digest(), corpus.content_digest());
    }

    #[test]
    fn rejects_wrong_format_version() {
        let corpus = Corpus::new(
            vec![article("a", &[], &["FR"], &[])],
            vec![],
            BTreeMap::new(),
            Provenance::default(),
        )
        .unwrap();
        let text = corpus.to_json().unwrap().replace("\"format_version\": 1", "\"format_version\": 2");
        assert!(Corpus::from_json(&text).is_err());
    }
}
