//! Ratings ingestion and the bundled synthetic fixture.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::{Path, PathBuf};

use odrs_core::OpinionMatrix;

const HEADER: [&str; 3] = ["user_id", "item_id", "stars"];

/// Checked-in ratings table with a dense 14×3 block (8×3 for the
/// manipulation experiments) plus a few sparse users.
pub const FIXTURE_CSV: &str = include_str!("../fixtures/ratings.csv");

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("ratings table is empty")]
    Empty,
    #[error("only {available} users have ratings, {requested} requested")]
    TooFewUsers { requested: usize, available: usize },
    #[error("no dense {n}x{m} block among the most active users and items; try a smaller --users or --items")]
    NoDenseBlock { n: usize, m: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rating {
    pub user_id: String,
    pub item_id: String,
    pub stars: u8,
}

/// Ratings in first-seen order; a repeated (user, item) pair overwrites the
/// earlier stars in place.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RatingsTable {
    records: Vec<Rating>,
    index: HashMap<(String, String), usize>,
}

impl RatingsTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, user_id: &str, item_id: &str, stars: u8) {
        let key = (user_id.to_owned(), item_id.to_owned());
        match self.index.get(&key) {
            Some(&i) => self.records[i].stars = stars,
            None => {
                self.index.insert(key, self.records.len());
                self.records.push(Rating {
                    user_id: user_id.to_owned(),
                    item_id: item_id.to_owned(),
                    stars,
                });
            }
        }
    }

    pub fn get(&self, user_id: &str, item_id: &str) -> Option<u8> {
        self.index
            .get(&(user_id.to_owned(), item_id.to_owned()))
            .map(|&i| self.records[i].stars)
    }

    pub fn records(&self) -> &[Rating] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

pub fn load_ratings_csv(path: &Path) -> Result<RatingsTable, DataError> {
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_ratings(file)
}

pub fn parse_ratings<R: Read>(input: R) -> Result<RatingsTable, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut records = reader.records();
    let parse_err = |line: u64, message: String| DataError::Parse { line, message };

    match records.next() {
        Some(Ok(h)) if h.iter().eq(HEADER) => {}
        Some(Ok(h)) => {
            let found: Vec<_> = h.iter().collect();
            return Err(parse_err(
                1,
                format!("expected header `user_id,item_id,stars`, found `{}`", found.join(",")),
            ));
        }
        Some(Err(e)) => return Err(parse_err(1, e.to_string())),
        None => return Err(parse_err(1, "missing header `user_id,item_id,stars`".into())),
    }

    let mut table = RatingsTable::new();
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 3 {
            return Err(parse_err(line, format!("expected 3 fields, found {}", rec.len())));
        }
        let stars: i64 = rec[2]
            .parse()
            .map_err(|_| parse_err(line, format!("stars `{}` is not an integer", &rec[2])))?;
        if !(1..=5).contains(&stars) {
            return Err(parse_err(line, format!("stars {stars} outside 1..5")));
        }
        table.insert(&rec[0], &rec[1], stars as u8);
    }
    Ok(table)
}

/// The bundled fixture, parsed.
pub fn fixture() -> RatingsTable {
    parse_ratings(FIXTURE_CSV.as_bytes()).expect("bundled fixture parses")
}

/// Maps 1..5 stars onto `{0, 0.25, 0.5, 0.75, 1}`.
pub fn normalize_stars(stars: u8) -> f64 {
    (f64::from(stars) - 1.0) / 4.0
}

/// A dense rating block and the ids behind its rows and columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseBlock {
    pub users: Vec<String>,
    pub items: Vec<String>,
    pub opinions: OpinionMatrix,
}

/// Picks the `n` most active users (ties by id), then the `m` items those
/// users rate most often (ties by id), and normalizes the block. Fails
/// unless every selected user rated every selected item.
pub fn densify(table: &RatingsTable, n: usize, m: usize) -> Result<DenseBlock, DataError> {
    if table.is_empty() {
        return Err(DataError::Empty);
    }
    let mut user_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in table.records() {
        *user_counts.entry(&r.user_id).or_default() += 1;
    }
    if user_counts.len() < n {
        return Err(DataError::TooFewUsers {
            requested: n,
            available: user_counts.len(),
        });
    }
    let users = top_by_count(user_counts, n);

    let mut item_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in table.records() {
        if users.contains(&r.user_id.as_str()) {
            *item_counts.entry(&r.item_id).or_default() += 1;
        }
    }
    if item_counts.len() < m {
        return Err(DataError::NoDenseBlock { n, m });
    }
    let items = top_by_count(item_counts, m);

    let mut values = Vec::with_capacity(n * m);
    for u in &users {
        for it in &items {
            let stars = table.get(u, it).ok_or(DataError::NoDenseBlock { n, m })?;
            values.push(normalize_stars(stars));
        }
    }
    let opinions = OpinionMatrix::new(n, m, values).expect("normalized stars lie in [0,1]");
    Ok(DenseBlock {
        users: users.into_iter().map(str::to_owned).collect(),
        items: items.into_iter().map(str::to_owned).collect(),
        opinions,
    })
}

fn top_by_count(counts: BTreeMap<&str, usize>, k: usize) -> Vec<&str> {
    // BTreeMap iteration is already sorted by id; the stable sort keeps that for ties
    let mut ranked: Vec<_> = counts.into_iter().collect();
    ranked.sort_by_key(|&(_, c)| std::cmp::Reverse(c));
    ranked.into_iter().take(k).map(|(id, _)| id).collect()
}
