mod common;

use std::collections::BTreeSet;

use common::{article, corpus, demo_corpus, demo_dir, rng};
use rand::Rng;
use semscope_core::corpus::{corpus_stats, geo_flow_matrix, load_corpus};
use semscope_core::{Corpus, Error};

fn records(path: &std::path::Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(Result::unwrap).collect()
}

#[test]
fn demo_stats_match_file_counts() {
    let c = demo_corpus();
    let stats = corpus_stats(&c);
    let articles = records(&demo_dir().join("articles.csv"));
    let citations = records(&demo_dir().join("citations.csv"));
    let ids: BTreeSet<&str> = articles.iter().map(|r| &r[0]).collect();
    assert_eq!(stats.article_count, articles.len());
    assert_eq!(stats.citation_records, citations.len());
    assert_eq!(stats.citations_received, citations.iter().filter(|r| ids.contains(&r[1])).count());
    assert_eq!(stats.cited_by_corpus, citations.iter().filter(|r| ids.contains(&r[0])).count());
    for depth in [1u8, 2] {
        let n = citations.iter().filter(|r| r[2] == *depth.to_string()).count();
        assert_eq!(stats.citations_by_depth[&depth], n);
    }
    let authoring: BTreeSet<&str> = articles.iter().flat_map(|r| r[4].split('|')).filter(|s| !s.is_empty()).collect();
    assert_eq!(stats.authoring_country_count, authoring.len());
    let fulltexts = articles.iter().filter(|r| !r[7].is_empty()).count();
    assert_eq!(stats.fulltext_count, fulltexts);
}

#[test]
fn lone_article_has_zero_citation_counts() {
    let stats = corpus_stats(&corpus(vec![article("a", 2000, &[], &["FR"], &[])], vec![]));
    assert_eq!(stats.citation_records, 0);
    assert_eq!(stats.citations_received, 0);
    assert_eq!(stats.cited_by_corpus, 0);
}

#[test]
fn reciprocal_flows() {
    let c = corpus(
        vec![article("a", 2000, &[], &["FR"], &["VN"]), article("b", 2000, &[], &["VN"], &["FR"])],
        vec![],
    );
    let m = geo_flow_matrix(&c);
    assert_eq!(m.get("FR", "VN"), 1);
    assert_eq!(m.get("VN", "FR"), 1);
    assert!(m.entries.iter().all(|e| e.reciprocal));
}

#[test]
fn multi_tag_flows() {
    let c = corpus(vec![article("a", 2000, &[], &["FR", "BE"], &["SN"])], vec![]);
    let m = geo_flow_matrix(&c);
    assert_eq!(m.get("FR", "SN"), 1);
    assert_eq!(m.get("BE", "SN"), 1);
    assert_eq!(m.total(), 2);
}

#[test]
fn flow_matrix_matches_double_loop() {
    let codes = ["FR", "DE", "IT", "SN", "VN", "BR"];
    let mut r = rng(20);
    let pick = |r: &mut rand_chacha::ChaCha8Rng| -> Vec<&str> {
        let n = r.gen_range(0..3);
        let set: BTreeSet<&str> = (0..n).map(|_| codes[r.gen_range(0..codes.len())]).collect();
        set.into_iter().collect()
    };
    let articles: Vec<_> = (0..20)
        .map(|i| {
            let a = pick(&mut r);
            let s = pick(&mut r);
            article(&format!("a{i:02}"), 2000, &[], &a, &s)
        })
        .collect();
    let c = corpus(articles.clone(), vec![]);
    let m = geo_flow_matrix(&c);
    for o in codes {
        for s in codes {
            let mut n = 0;
            for a in &articles {
                for x in &a.authoring_countries {
                    for y in &a.studied_countries {
                        if x == o && y == s {
                            n += 1;
                        }
                    }
                }
            }
            assert_eq!(m.get(o, s), n, "{o}->{s}");
        }
    }
}

#[test]
fn json_round_trip_preserves_digest() {
    let c = demo_corpus();
    let back = Corpus::from_json(&c.to_json().unwrap()).unwrap();
    assert_eq!(back.content_digest(), c.content_digest());
    assert_eq!(back.fulltexts, c.fulltexts);
}

fn write_articles(dir: &std::path::Path, rows: &[&str]) -> std::path::PathBuf {
    let path = dir.join("articles.csv");
    let mut text = String::from("id,year,language,keywords,authoring_countries,studied_countries,abstract,fulltext_ref\n");
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn ingestion_errors() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write_articles(dir.path(), &[]);
    assert!(matches!(load_corpus(&empty, None), Err(Error::NoArticles)));

    let dup = write_articles(dir.path(), &["x,2000,fr,a|b,FR,,,", "y,2001,fr,c,FR,,,", "x,2002,en,d,DE,,,"]);
    match load_corpus(&dup, None) {
        Err(Error::DuplicateIds(ids)) => assert_eq!(ids, vec!["x".to_string()]),
        other => panic!("{other:?}"),
    }

    let bad_year = write_articles(dir.path(), &["x,1850,fr,a,FR,,,"]);
    assert!(load_corpus(&bad_year, None).is_err());

    let ok = write_articles(dir.path(), &["x,2000,fr,a|b,FR|BE,SN,,"]);
    let c = load_corpus(&ok, None).unwrap();
    assert_eq!(c.articles["x"].keywords, vec!["a", "b"]);
    assert_eq!(c.articles["x"].authoring_countries, vec!["FR", "BE"]);
}
