//! Author-level similarity from paper-level similarity.
//!
//! An author is represented by the papers they wrote in first or last position during the
//! five calendar years ending at the focal year. Two authors' similarity is the mean
//! paper similarity over every pair drawn from their two profiles.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::Read;
use std::path::Path;

use rand::Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::eval::{LabeledPair, LabeledPairSet, Provenance};
use crate::score::csv_err;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Position {
    Solo,
    First,
    Middle,
    Last,
}

impl Position {
    fn of(idx: usize, len: usize) -> Position {
        match (idx, len) {
            (_, 1) => Position::Solo,
            (0, _) => Position::First,
            (i, n) if i + 1 == n => Position::Last,
            _ => Position::Middle,
        }
    }

    pub fn is_first_or_last(self) -> bool {
        self != Position::Middle
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaperRecord {
    pub id: String,
    pub year: i32,
    pub authors: Vec<String>,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct AuthorCorpus {
    papers: Vec<PaperRecord>,
    author_index: HashMap<String, Vec<(usize, Position)>>,
}

impl AuthorCorpus {
    pub fn new(papers: Vec<PaperRecord>) -> Result<Self> {
        let mut ids = HashSet::new();
        let mut author_index: HashMap<String, Vec<(usize, Position)>> = HashMap::new();
        for (p, paper) in papers.iter().enumerate() {
            if paper.authors.is_empty() {
                return Err(Error::InvalidParameter(format!("paper {:?} has no authors", paper.id)));
            }
            if !ids.insert(paper.id.as_str()) {
                return Err(Error::InvalidParameter(format!("duplicate paper id {:?}", paper.id)));
            }
            for (i, a) in paper.authors.iter().enumerate() {
                author_index
                    .entry(a.clone())
                    .or_default()
                    .push((p, Position::of(i, paper.authors.len())));
            }
        }
        Ok(AuthorCorpus { papers, author_index })
    }

    pub fn papers(&self) -> &[PaperRecord] {
        &self.papers
    }

    pub fn authors(&self) -> BTreeSet<&str> {
        self.author_index.keys().map(String::as_str).collect()
    }

    pub fn authored(&self, author: &str) -> Option<&[(usize, Position)]> {
        self.author_index.get(author).map(Vec::as_slice)
    }

    pub fn paper(&self, idx: usize) -> &PaperRecord {
        &self.papers[idx]
    }
}

#[derive(Debug, Deserialize)]
struct CorpusRow {
    paper_id: String,
    year: i32,
    authors: String,
    #[serde(default)]
    labels: String,
}

fn split_list(s: &str) -> Vec<String> {
    s.split(';').map(str::trim).filter(|x| !x.is_empty()).map(str::to_string).collect()
}

/// Comma-separated corpus with header `paper_id,year,authors,labels`; the two list columns
/// are `;`-separated and the author list is in byline order.
pub fn read_corpus<R: Read>(r: R) -> Result<AuthorCorpus> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    for col in ["paper_id", "year", "authors"] {
        if !headers.iter().any(|h| h == col) {
            return Err(Error::InvalidParameter(format!("corpus is missing column {col:?}")));
        }
    }
    let mut papers = Vec::new();
    for row in rdr.deserialize::<CorpusRow>() {
        let row = row.map_err(csv_err)?;
        papers.push(PaperRecord {
            id: row.paper_id,
            year: row.year,
            authors: split_list(&row.authors),
            labels: split_list(&row.labels),
        });
    }
    AuthorCorpus::new(papers)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<AuthorCorpus> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(std::io::BufReader::new(file)).map_err(|e| match e {
        Error::Parse { line, message, .. } => Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        },
        other => other,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelectionOptions {
    /// Window length in calendar years, ending at and including the focal year.
    pub window_years: i32,
    pub first_or_last_only: bool,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        SelectionOptions {
            window_years: 5,
            first_or_last_only: true,
        }
    }
}

impl SelectionOptions {
    pub fn window(&self, focal_year: i32) -> std::ops::RangeInclusive<i32> {
        (focal_year - self.window_years + 1)..=focal_year
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthorProfile {
    pub author: String,
    pub focal_year: i32,
    /// Sorted by paper id.
    pub paper_ids: Vec<String>,
}

impl AuthorProfile {
    /// No qualifying papers: the author cannot be compared.
    pub fn is_insufficient(&self) -> bool {
        self.paper_ids.is_empty()
    }
}

pub fn select_author_papers(c: &AuthorCorpus, author: &str, focal_year: i32) -> Result<AuthorProfile> {
    select_author_papers_with(c, author, focal_year, &SelectionOptions::default())
}

pub fn select_author_papers_with(
    c: &AuthorCorpus,
    author: &str,
    focal_year: i32,
    opts: &SelectionOptions,
) -> Result<AuthorProfile> {
    let authored = c.authored(author).ok_or_else(|| Error::UnknownAuthor(author.to_string()))?;
    let window = opts.window(focal_year);
    let mut paper_ids: Vec<String> = authored
        .iter()
        .filter(|(_, pos)| !opts.first_or_last_only || pos.is_first_or_last())
        .map(|&(p, _)| c.paper(p))
        .filter(|paper| window.contains(&paper.year))
        .map(|paper| paper.id.clone())
        .collect();
    paper_ids.sort();
    paper_ids.dedup();
    Ok(AuthorProfile {
        author: author.to_string(),
        focal_year,
        paper_ids,
    })
}

/// Mean of `sim(p, q)` over the profile cross product. Papers in both profiles contribute
/// their self-pair unless `exclude_shared` is set.
pub fn author_similarity_with<F>(a: &AuthorProfile, b: &AuthorProfile, sim: F, exclude_shared: bool) -> Result<f64>
where
    F: Fn(&str, &str) -> Result<f64>,
{
    for p in [a, b] {
        if p.is_insufficient() {
            return Err(Error::EmptyProfile(p.author.clone()));
        }
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for p in &a.paper_ids {
        for q in &b.paper_ids {
            if exclude_shared && p == q {
                continue;
            }
            total += sim(p, q)?;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::InsufficientData(format!(
            "{} and {} share every paper and shared papers are excluded",
            a.author, b.author
        )));
    }
    Ok(total / count as f64)
}

pub fn author_similarity<F>(a: &AuthorProfile, b: &AuthorProfile, sim: F) -> Result<f64>
where
    F: Fn(&str, &str) -> Result<f64>,
{
    author_similarity_with(a, b, sim, false)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize)]
pub struct Collaboration {
    pub a: String,
    pub b: String,
    pub year: i32,
}

/// Every co-author pair of every paper, one record per paper.
pub fn collaborations_from_corpus(c: &AuthorCorpus) -> Vec<Collaboration> {
    let mut out = Vec::new();
    for paper in c.papers() {
        let mut authors: Vec<&String> = paper.authors.iter().collect();
        authors.sort();
        authors.dedup();
        for (i, a) in authors.iter().enumerate() {
            for b in &authors[i + 1..] {
                out.push(Collaboration {
                    a: (*a).clone(),
                    b: (*b).clone(),
                    year: paper.year,
                });
            }
        }
    }
    out
}

/// CSV with header `a,b,year`.
pub fn read_collaborations<R: Read>(r: R) -> Result<Vec<Collaboration>> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize().map(|row| row.map_err(csv_err)).collect()
}

fn key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

/// Future-collaborator prediction pairs around `focal_year`.
///
/// Positives never co-authored inside the selection window and co-author in the year after
/// it. Negatives are drawn uniformly among eligible authors and co-author neither in the
/// window nor in the next year. Eligible means a non-empty profile and at least one
/// collaboration in the three years after the focal year. The two sets have equal size.
pub fn build_collab_pairs(
    c: &AuthorCorpus,
    collaborations: &[Collaboration],
    focal_year: i32,
    seed: u64,
    opts: &SelectionOptions,
) -> Result<LabeledPairSet> {
    let window = opts.window(focal_year);
    let mut past = HashSet::new();
    let mut next_year = BTreeSet::new();
    let mut active: HashSet<&str> = HashSet::new();
    for col in collaborations {
        if col.a == col.b {
            continue;
        }
        if window.contains(&col.year) {
            past.insert(key(&col.a, &col.b));
        }
        if col.year == focal_year + 1 {
            next_year.insert(key(&col.a, &col.b));
        }
        if col.year > focal_year && col.year <= focal_year + 3 {
            active.insert(&col.a);
            active.insert(&col.b);
        }
    }

    let mut eligible: Vec<&str> = active
        .iter()
        .copied()
        .filter(|a| {
            select_author_papers_with(c, a, focal_year, opts)
                .map(|p| !p.is_insufficient())
                .unwrap_or(false)
        })
        .collect();
    eligible.sort_unstable();
    let eligible_set: HashSet<&str> = eligible.iter().copied().collect();

    let positives: Vec<(String, String)> = next_year
        .iter()
        .filter(|k| !past.contains(*k))
        .filter(|(a, b)| eligible_set.contains(a.as_str()) && eligible_set.contains(b.as_str()))
        .cloned()
        .collect();
    if positives.is_empty() {
        return Err(Error::InsufficientData(format!("no new collaborations in {}", focal_year + 1)));
    }

    let mut rng = seed::stream(&[seed, focal_year as u64]);
    let mut chosen: BTreeSet<(String, String)> = BTreeSet::new();
    let mut negatives = Vec::with_capacity(positives.len());
    let max_attempts = 100 * positives.len() + 10_000;
    let mut attempts = 0;
    while negatives.len() < positives.len() {
        attempts += 1;
        if attempts > max_attempts || eligible.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "found {} of {} negative pairs among {} eligible authors",
                negatives.len(),
                positives.len(),
                eligible.len()
            )));
        }
        let x = eligible[rng.random_range(0..eligible.len())];
        let y = eligible[rng.random_range(0..eligible.len())];
        if x == y {
            continue;
        }
        let k = key(x, y);
        if past.contains(&k) || next_year.contains(&k) || chosen.contains(&k) {
            continue;
        }
        chosen.insert(k.clone());
        negatives.push(k);
    }

    let pairs = positives
        .into_iter()
        .map(|(a, b)| LabeledPair { a, b, label: true })
        .chain(negatives.into_iter().map(|(a, b)| LabeledPair { a, b, label: false }))
        .collect();
    LabeledPairSet::new(pairs, Provenance::Collab)
}

/// All profiles for the corpus' authors, split into usable and insufficient.
pub fn profiles_for(c: &AuthorCorpus, focal_year: i32, opts: &SelectionOptions) -> (Vec<AuthorProfile>, Vec<String>) {
    let mut usable = Vec::new();
    let mut insufficient = Vec::new();
    for a in c.authors() {
        let p = select_author_papers_with(c, a, focal_year, opts).expect("author is in the corpus");
        if p.is_insufficient() {
            insufficient.push(a.to_string());
        } else {
            usable.push(p);
        }
    }
    (usable, insufficient)
}

/// Paper pairs needed to compare every profile pair, deduplicated.
pub fn required_paper_pairs(profiles: &[(&AuthorProfile, &AuthorProfile)]) -> BTreeSet<(String, String)> {
    let mut out = BTreeSet::new();
    for (a, b) in profiles {
        for p in &a.paper_ids {
            for q in &b.paper_ids {
                out.insert((p.clone(), q.clone()));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{transition_pair, WalkConfig};
    use crate::graph::fixtures::path;

    fn paper(id: &str, year: i32, authors: &[&str]) -> PaperRecord {
        PaperRecord {
            id: id.into(),
            year,
            authors: authors.iter().map(|s| s.to_string()).collect(),
            labels: vec![],
        }
    }

    #[test]
    fn solo_paper_counts() {
        let c = AuthorCorpus::new(vec![paper("p", 2000, &["x"])]).unwrap();
        let prof = select_author_papers(&c, "x", 2000).unwrap();
        assert_eq!(prof.paper_ids, vec!["p"]);
    }

    #[test]
    fn middle_author_is_insufficient() {
        let c = AuthorCorpus::new(vec![paper("p", 2000, &["a", "m", "z"])]).unwrap();
        let prof = select_author_papers(&c, "m", 2000).unwrap();
        assert!(prof.is_insufficient());
        assert!(!select_author_papers(&c, "z", 2000).unwrap().is_insufficient());
        assert!(matches!(select_author_papers(&c, "nobody", 2000), Err(Error::UnknownAuthor(_))));
    }

    #[test]
    fn window_is_five_years_inclusive() {
        let c = AuthorCorpus::new(vec![
            paper("old", 1994, &["x", "y"]),
            paper("edge", 1996, &["x"]),
            paper("recent", 1998, &["x", "y"]),
            paper("future", 2001, &["x"]),
        ])
        .unwrap();
        let prof = select_author_papers(&c, "x", 2000).unwrap();
        assert_eq!(prof.paper_ids, vec!["edge", "recent"]);
    }

    #[test]
    fn profile_ignores_record_order() {
        let mut papers = vec![paper("b", 2000, &["x", "q"]), paper("a", 1999, &["q", "x"]), paper("c", 1998, &["x"])];
        let first = select_author_papers(&AuthorCorpus::new(papers.clone()).unwrap(), "x", 2000).unwrap();
        papers.reverse();
        let second = select_author_papers(&AuthorCorpus::new(papers).unwrap(), "x", 2000).unwrap();
        assert_eq!(first, second);
    }

    fn profile(author: &str, papers: &[&str]) -> AuthorProfile {
        AuthorProfile {
            author: author.into(),
            focal_year: 2000,
            paper_ids: papers.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn mean_over_cross_product() {
        let a = profile("a", &["p1", "p2"]);
        let b = profile("b", &["q1", "q2"]);
        let table: HashMap<(&str, &str), f64> =
            HashMap::from([(("p1", "q1"), 0.1), (("p1", "q2"), 0.2), (("p2", "q1"), 0.3), (("p2", "q2"), 0.4)]);
        let s = author_similarity(&a, &b, |p, q| Ok(table[&(p, q)])).unwrap();
        assert!((s - 0.25).abs() < 1e-15);
        let single = author_similarity(&profile("a", &["p1"]), &profile("b", &["q2"]), |p, q| Ok(table[&(p, q)])).unwrap();
        assert_eq!(single, 0.2);
        assert_eq!(author_similarity(&a, &b, |_, _| Ok(0.7)).unwrap(), 0.7);
        assert!(matches!(author_similarity(&a, &profile("e", &[]), |_, _| Ok(1.0)), Err(Error::EmptyProfile(_))));
    }

    #[test]
    fn shared_papers_and_exclusion() {
        let a = profile("a", &["p", "s"]);
        let b = profile("b", &["s"]);
        let sim = |p: &str, q: &str| Ok(if p == q { 1.0 } else { 0.0 });
        assert_eq!(author_similarity(&a, &b, sim).unwrap(), 0.5);
        assert_eq!(author_similarity_with(&a, &b, sim, true).unwrap(), 0.0);
    }

    #[test]
    fn path_graph_authors() {
        let g = path(3);
        let a = profile("a", &["0"]);
        let b = profile("b", &["2"]);
        let cfg = WalkConfig::with_t(2);
        let sim = |p: &str, q: &str| transition_pair(&g, g.require_index(p)?, g.require_index(q)?, &cfg);
        assert!((author_similarity(&a, &b, sim).unwrap() - 0.25).abs() < 1e-15);
        assert!((author_similarity(&b, &a, sim).unwrap() - 0.25).abs() < 1e-15);
    }

    fn collab(a: &str, b: &str, year: i32) -> Collaboration {
        Collaboration {
            a: a.into(),
            b: b.into(),
            year,
        }
    }

    /// Corpus where x,y first co-author in 2001, and u,v co-authored in 1999.
    fn toy() -> (AuthorCorpus, Vec<Collaboration>) {
        let mut papers = vec![
            paper("x0", 1999, &["x"]),
            paper("y0", 2000, &["y"]),
            paper("u0", 1999, &["u", "v"]),
            paper("xy", 2001, &["x", "y"]),
            paper("uv", 2001, &["u", "v"]),
        ];
        for (i, a) in ["n1", "n2", "n3", "n4"].iter().enumerate() {
            papers.push(paper(&format!("{a}0"), 1998, &[a]));
            papers.push(paper(&format!("{a}f"), 2002, &[a, ["n2", "n3", "n4", "n1"][i]]));
        }
        let c = AuthorCorpus::new(papers).unwrap();
        let cols = collaborations_from_corpus(&c);
        (c, cols)
    }

    #[test]
    fn collab_pairs_follow_definition() {
        let (c, cols) = toy();
        let set = build_collab_pairs(&c, &cols, 2000, 1, &SelectionOptions::default()).unwrap();
        let pos: Vec<(&str, &str)> = set.pairs.iter().filter(|p| p.label).map(|p| (p.a.as_str(), p.b.as_str())).collect();
        assert_eq!(pos, vec![("x", "y")]);
        assert_eq!(set.positives(), set.negatives());
        for p in &set.pairs {
            assert_ne!(key(&p.a, &p.b), key("u", "v"));
        }
        audit(&c, &cols, 2000, &set);
    }

    /// Re-derives every eligibility predicate straight from the raw records.
    fn audit(c: &AuthorCorpus, cols: &[Collaboration], focal: i32, set: &LabeledPairSet) {
        let collab_in = |a: &str, b: &str, years: std::ops::RangeInclusive<i32>| {
            cols.iter()
                .any(|r| years.contains(&r.year) && ((r.a == a && r.b == b) || (r.a == b && r.b == a)))
        };
        let active = |a: &str| cols.iter().any(|r| (r.a == a || r.b == a) && r.year > focal && r.year <= focal + 3);
        let has_lead_paper = |a: &str| {
            c.papers().iter().any(|p| {
                (focal - 4..=focal).contains(&p.year)
                    && (p.authors.first().map(String::as_str) == Some(a) || p.authors.last().map(String::as_str) == Some(a))
            })
        };
        for p in &set.pairs {
            assert!(!collab_in(&p.a, &p.b, focal - 4..=focal));
            assert_eq!(collab_in(&p.a, &p.b, focal + 1..=focal + 1), p.label);
            for x in [&p.a, &p.b] {
                assert!(active(x) && has_lead_paper(x), "{x} not eligible");
            }
        }
    }

    #[test]
    fn collab_pairs_on_random_corpus_pass_audit() {
        let mut rng = seed::stream(&[77]);
        let authors: Vec<String> = (0..40).map(|i| format!("a{i}")).collect();
        let mut papers = Vec::new();
        for k in 0..400 {
            let year = rng.random_range(1995..=2004);
            let n = rng.random_range(1..=4);
            let mut list: Vec<&str> = Vec::new();
            while list.len() < n {
                let a = authors[rng.random_range(0..authors.len())].as_str();
                if !list.contains(&a) {
                    list.push(a);
                }
            }
            papers.push(paper(&format!("p{k}"), year, &list));
        }
        let c = AuthorCorpus::new(papers).unwrap();
        let cols = collaborations_from_corpus(&c);
        let set = build_collab_pairs(&c, &cols, 2000, 5, &SelectionOptions::default()).unwrap();
        assert!(set.positives() > 0);
        assert_eq!(set.positives(), set.negatives());
        audit(&c, &cols, 2000, &set);
        let again = build_collab_pairs(&c, &cols, 2000, 5, &SelectionOptions::default()).unwrap();
        assert_eq!(set, again);
    }

    #[test]
    fn not_enough_negatives_is_an_error() {
        let c = AuthorCorpus::new(vec![paper("a", 2000, &["x"]), paper("b", 2000, &["y"]), paper("c", 2001, &["x", "y"])]).unwrap();
        let cols = vec![collab("x", "y", 2001)];
        assert!(matches!(
            build_collab_pairs(&c, &cols, 2000, 0, &SelectionOptions::default()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn corpus_csv() {
        let text = "paper_id,year,authors,labels\np1,2000,x;y;z,bio\np2,1999,\"z\",bio;chem\n";
        let c = read_corpus(text.as_bytes()).unwrap();
        assert_eq!(c.papers()[0].authors, vec!["x", "y", "z"]);
        assert_eq!(c.papers()[1].labels, vec!["bio", "chem"]);
        assert!(read_corpus("paper_id,authors\np,x\n".as_bytes()).is_err());
    }
}
