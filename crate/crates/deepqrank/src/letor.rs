//! LETOR / SVMlight-style listwise dataset handling.
//!
//! The canonical row grammar is
//!
//! ```text
//! <label> qid:<id> <i>:<v> ... [#comment]
//! ```
//!
//! with feature indices in `1..=46`. Missing indices default to `0.0`, so
//! sparse rows parse cleanly. Rows are grouped per query in file order, and
//! each record is tagged with its ordinal `doc_index` within the file, which
//! serves as document identity everywhere downstream.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Number of features per query-document pair.
pub const FEATURE_DIM: usize = 46;

/// One query-document pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentRecord {
    /// Opaque query identifier (the `qid:` token).
    pub query_id: String,
    /// Listwise rank value; higher means more relevant to the query.
    pub rank_label: u32,
    /// Feature values for indices `1..=46`, stored 0-based.
    pub features: [f64; FEATURE_DIM],
    /// Ordinal position of the row within its source file. Unique per
    /// dataset; used as document identity and for deterministic tie-breaks.
    pub doc_index: usize,
}

/// All documents sharing one query id, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryGroup {
    query_id: String,
    documents: Vec<DocumentRecord>,
}

impl QueryGroup {
    pub fn new(query_id: String, documents: Vec<DocumentRecord>) -> Result<Self> {
        if documents.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "query group {query_id} has no documents"
            )));
        }
        if let Some(d) = documents.iter().find(|d| d.query_id != query_id) {
            return Err(Error::InvalidArgument(format!(
                "document {} has query id {} but group is {}",
                d.doc_index, d.query_id, query_id
            )));
        }
        Ok(QueryGroup {
            query_id,
            documents,
        })
    }

    pub fn query_id(&self) -> &str {
        &self.query_id
    }

    pub fn documents(&self) -> &[DocumentRecord] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Looks up a member document by its `doc_index`.
    pub fn document(&self, doc_index: usize) -> Option<&DocumentRecord> {
        self.documents.iter().find(|d| d.doc_index == doc_index)
    }

    fn validate_distinct_labels(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for doc in &self.documents {
            if !seen.insert(doc.rank_label) {
                return Err(Error::DuplicateRankLabel {
                    query_id: self.query_id.clone(),
                    label: doc.rank_label,
                });
            }
        }
        Ok(())
    }
}

/// A listwise dataset: query groups plus a `doc_index` lookup table.
#[derive(Debug, Clone)]
pub struct Dataset {
    groups: Vec<QueryGroup>,
    /// doc_index -> (group position, position within group)
    index: HashMap<usize, (usize, usize)>,
    feature_dim: usize,
    source_path: String,
}

impl Dataset {
    /// Builds a dataset from pre-grouped records, validating `doc_index`
    /// uniqueness. An empty group list is allowed (splits can be empty);
    /// operations that need documents report [`Error::EmptyDataset`].
    pub fn from_groups(groups: Vec<QueryGroup>, source_path: impl Into<String>) -> Result<Self> {
        let mut index = HashMap::new();
        for (gi, group) in groups.iter().enumerate() {
            for (di, doc) in group.documents.iter().enumerate() {
                if index.insert(doc.doc_index, (gi, di)).is_some() {
                    return Err(Error::InvalidArgument(format!(
                        "doc_index {} appears more than once",
                        doc.doc_index
                    )));
                }
            }
        }
        Ok(Dataset {
            groups,
            index,
            feature_dim: FEATURE_DIM,
            source_path: source_path.into(),
        })
    }

    /// Groups a flat record list by query id, preserving first-appearance
    /// order of queries and file order within each group.
    pub fn from_records(
        records: Vec<DocumentRecord>,
        source_path: impl Into<String>,
    ) -> Result<Self> {
        let mut order: Vec<String> = Vec::new();
        let mut by_query: HashMap<String, Vec<DocumentRecord>> = HashMap::new();
        for record in records {
            if !by_query.contains_key(&record.query_id) {
                order.push(record.query_id.clone());
            }
            by_query.entry(record.query_id.clone()).or_default().push(record);
        }
        let groups = order
            .into_iter()
            .map(|qid| {
                let docs = by_query.remove(&qid).expect("query seen in order list");
                QueryGroup::new(qid, docs)
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::from_groups(groups, source_path)
    }

    pub fn groups(&self) -> &[QueryGroup] {
        &self.groups
    }

    pub fn num_queries(&self) -> usize {
        self.groups.len()
    }

    pub fn num_documents(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn source_path(&self) -> &str {
        &self.source_path
    }

    /// Resolves a document by its dataset-wide `doc_index`.
    pub fn document(&self, doc_index: usize) -> Option<&DocumentRecord> {
        self.index
            .get(&doc_index)
            .map(|&(gi, di)| &self.groups[gi].documents[di])
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.groups.iter().map(|g| g.query_id())
    }

    /// Serializes every record in the canonical grammar, grouped in dataset
    /// order, one row per line.
    pub fn to_letor_string(&self) -> String {
        let mut out = String::new();
        for group in &self.groups {
            for doc in &group.documents {
                out.push_str(&serialize_record(doc));
                out.push('\n');
            }
        }
        out
    }

    /// Writes [`Dataset::to_letor_string`] to a file.
    pub fn write_letor_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_letor_string()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Parses one LETOR row. `doc_index` is the ordinal the caller assigns to
/// this row; [`load_dataset`] numbers rows sequentially from zero.
///
/// A `#` starts a comment running to the end of the line. Feature indices
/// absent from the row default to `0.0`.
pub fn parse_letor_line(line: &str, doc_index: usize) -> Result<DocumentRecord> {
    let malformed = |reason: String| Error::MalformedLine { line: 0, reason };

    let body = match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    };
    let mut tokens = body.split_whitespace();

    let label_tok = tokens
        .next()
        .ok_or_else(|| malformed("missing rank label".into()))?;
    let rank_label: u32 = label_tok
        .parse()
        .map_err(|_| malformed(format!("rank label `{label_tok}` is not a non-negative integer")))?;

    let qid_tok = tokens
        .next()
        .ok_or_else(|| malformed("missing qid token".into()))?;
    let query_id = qid_tok
        .strip_prefix("qid:")
        .filter(|id| !id.is_empty())
        .ok_or_else(|| malformed(format!("expected `qid:<id>`, found `{qid_tok}`")))?
        .to_string();

    let mut features = [0.0; FEATURE_DIM];
    let mut seen = [false; FEATURE_DIM];
    for tok in tokens {
        let (idx_str, val_str) = tok
            .split_once(':')
            .ok_or_else(|| malformed(format!("expected `<index>:<value>`, found `{tok}`")))?;
        let idx: usize = idx_str
            .parse()
            .map_err(|_| malformed(format!("feature index `{idx_str}` is not an integer")))?;
        if !(1..=FEATURE_DIM).contains(&idx) {
            return Err(malformed(format!(
                "feature index {idx} outside 1..={FEATURE_DIM}"
            )));
        }
        if seen[idx - 1] {
            return Err(malformed(format!("duplicate feature index {idx}")));
        }
        let value: f64 = val_str
            .parse()
            .map_err(|_| malformed(format!("feature value `{val_str}` is not a number")))?;
        if !value.is_finite() {
            return Err(malformed(format!("feature {idx} is not finite")));
        }
        seen[idx - 1] = true;
        features[idx - 1] = value;
    }

    Ok(DocumentRecord {
        query_id,
        rank_label,
        features,
        doc_index,
    })
}

/// Canonical serialization: label first, `qid:` second, all 46 features in
/// ascending index order at six decimal places.
pub fn serialize_record(record: &DocumentRecord) -> String {
    let mut line = format!("{} qid:{}", record.rank_label, record.query_id);
    for (i, value) in record.features.iter().enumerate() {
        write!(line, " {}:{:.6}", i + 1, value).expect("string write");
    }
    line
}

/// Loads a dataset file, grouping rows by query id in file order. Blank
/// lines are skipped. With `strict_listwise`, rank labels inside each group
/// must be pairwise distinct.
pub fn load_dataset(path: impl AsRef<Path>, strict_listwise: bool) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let dataset = parse_dataset_str(&text, &path.to_string_lossy(), strict_listwise)?;
    log::info!(
        "loaded {} documents across {} queries from {}",
        dataset.num_documents(),
        dataset.num_queries(),
        path.display()
    );
    Ok(dataset)
}

/// [`load_dataset`] over in-memory text; `source` is recorded as provenance.
pub fn parse_dataset_str(text: &str, source: &str, strict_listwise: bool) -> Result<Dataset> {
    let mut records = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_letor_line(line, records.len()).map_err(|e| match e {
            Error::MalformedLine { reason, .. } => Error::MalformedLine {
                line: lineno + 1,
                reason,
            },
            other => other,
        })?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let dataset = Dataset::from_records(records, source)?;
    if strict_listwise {
        for group in dataset.groups() {
            group.validate_distinct_labels()?;
        }
    }
    Ok(dataset)
}

/// Splits a dataset into train/valid/test at query granularity.
///
/// Fractions must all be positive and sum to 1 within 1e-9. Query counts are
/// apportioned by largest remainder, so they always sum to the query total.
/// The shuffle is deterministic per seed.
pub fn split_dataset(
    dataset: &Dataset,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<(Dataset, Dataset, Dataset)> {
    let fs = [fractions.0, fractions.1, fractions.2];
    if fs.iter().any(|f| !f.is_finite() || *f <= 0.0) {
        return Err(Error::InvalidFractions(format!(
            "all fractions must be positive, got {fs:?}"
        )));
    }
    let sum: f64 = fs.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidFractions(format!(
            "fractions must sum to 1, got {sum}"
        )));
    }

    let n = dataset.num_queries();
    let counts = apportion(n, &fs);

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let take = |range: std::ops::Range<usize>| -> Result<Dataset> {
        let mut picked: Vec<usize> = order[range].to_vec();
        picked.sort_unstable(); // keep original query order inside each split
        let groups = picked
            .into_iter()
            .map(|gi| dataset.groups[gi].clone())
            .collect();
        Dataset::from_groups(groups, dataset.source_path.clone())
    };

    let train = take(0..counts[0])?;
    let valid = take(counts[0]..counts[0] + counts[1])?;
    let test = take(counts[0] + counts[1]..n)?;
    Ok((train, valid, test))
}

/// Largest-remainder apportionment of `n` items into 3 parts.
fn apportion(n: usize, fractions: &[f64; 3]) -> [usize; 3] {
    let ideal: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut counts = [0usize; 3];
    for (c, i) in counts.iter_mut().zip(&ideal) {
        *c = i.floor() as usize;
    }
    let assigned: usize = counts.iter().sum();
    let mut rem: Vec<(usize, f64)> = ideal
        .iter()
        .enumerate()
        .map(|(k, i)| (k, i - i.floor()))
        .collect();
    // largest fractional part first; ties to the lower index
    rem.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    for k in 0..n.saturating_sub(assigned) {
        counts[rem[k % 3].0] += 1;
    }
    counts
}

/// The hidden scoring vector behind [`generate_synthetic`]. Fixed (seed
/// independent) so tests can verify label assignment against `w·x`; entries
/// lie in `[0.25, 1.0]` so scores of non-negative features stay non-negative.
pub fn synthetic_weight_vector() -> [f64; FEATURE_DIM] {
    let mut rng = ChaCha8Rng::seed_from_u64(0x005E_ED57_A71C);
    let mut w = [0.0; FEATURE_DIM];
    for entry in &mut w {
        *entry = 0.25 + 0.75 * rng.gen::<f64>();
    }
    w
}

/// Generates a fully-ranked synthetic dataset: features uniform on
/// `[0,1]^46`, rank labels `1..=docs_per_query` assigned by descending
/// `w·x + Gaussian(0, noise)` score, so label `docs_per_query` marks the
/// strongest document of each query. Deterministic per seed.
pub fn generate_synthetic(
    num_queries: usize,
    docs_per_query: usize,
    noise: f64,
    seed: u64,
) -> Result<Dataset> {
    if num_queries < 1 {
        return Err(Error::InvalidArgument("num_queries must be >= 1".into()));
    }
    if docs_per_query < 2 {
        return Err(Error::InvalidArgument("docs_per_query must be >= 2".into()));
    }
    if !noise.is_finite() || noise < 0.0 {
        return Err(Error::InvalidArgument("noise must be >= 0".into()));
    }

    let w = synthetic_weight_vector();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut groups = Vec::with_capacity(num_queries);
    let mut doc_index = 0;
    for q in 1..=num_queries {
        let query_id = q.to_string();
        let mut scored: Vec<(usize, [f64; FEATURE_DIM], f64)> = Vec::with_capacity(docs_per_query);
        for _ in 0..docs_per_query {
            let mut features = [0.0; FEATURE_DIM];
            for f in &mut features {
                *f = rng.gen::<f64>();
            }
            let dot: f64 = w.iter().zip(&features).map(|(wi, xi)| wi * xi).sum();
            let jitter: f64 = rng.sample::<f64, _>(StandardNormal) * noise;
            scored.push((doc_index, features, dot + jitter));
            doc_index += 1;
        }
        // descending score; stable, so equal scores keep file order
        let mut by_score: Vec<usize> = (0..docs_per_query).collect();
        by_score.sort_by(|&a, &b| scored[b].2.partial_cmp(&scored[a].2).unwrap());
        let mut labels = vec![0u32; docs_per_query];
        for (pos, &slot) in by_score.iter().enumerate() {
            labels[slot] = (docs_per_query - pos) as u32;
        }
        let documents = scored
            .into_iter()
            .zip(labels)
            .map(|((doc_index, features, _), rank_label)| DocumentRecord {
                query_id: query_id.clone(),
                rank_label,
                features,
                doc_index,
            })
            .collect();
        groups.push(QueryGroup::new(query_id, documents)?);
    }
    Dataset::from_groups(groups, format!("synthetic(seed={seed})"))
}

/// Per-feature min-max scaler fitted on a training split and persisted in
/// the model file so inference normalizes incoming data identically.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScaler {
    mins: [f64; FEATURE_DIM],
    maxs: [f64; FEATURE_DIM],
}

impl FeatureScaler {
    pub fn fit(dataset: &Dataset) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut mins = [f64::INFINITY; FEATURE_DIM];
        let mut maxs = [f64::NEG_INFINITY; FEATURE_DIM];
        for group in dataset.groups() {
            for doc in group.documents() {
                for (i, &v) in doc.features.iter().enumerate() {
                    mins[i] = mins[i].min(v);
                    maxs[i] = maxs[i].max(v);
                }
            }
        }
        Ok(FeatureScaler { mins, maxs })
    }

    pub fn from_bounds(mins: [f64; FEATURE_DIM], maxs: [f64; FEATURE_DIM]) -> Self {
        FeatureScaler { mins, maxs }
    }

    pub fn mins(&self) -> &[f64; FEATURE_DIM] {
        &self.mins
    }

    pub fn maxs(&self) -> &[f64; FEATURE_DIM] {
        &self.maxs
    }

    /// Maps a feature vector to `(x - min) / (max - min)` per dimension.
    /// Constant features map to 0.
    pub fn apply(&self, features: &[f64; FEATURE_DIM]) -> [f64; FEATURE_DIM] {
        let mut out = [0.0; FEATURE_DIM];
        for i in 0..FEATURE_DIM {
            let span = self.maxs[i] - self.mins[i];
            out[i] = if span > 0.0 {
                (features[i] - self.mins[i]) / span
            } else {
                0.0
            };
        }
        out
    }

    /// Returns a copy of the dataset with every feature vector scaled.
    pub fn transform(&self, dataset: &Dataset) -> Dataset {
        let mut out = dataset.clone();
        for group in &mut out.groups {
            for doc in &mut group.documents {
                doc.features = self.apply(&doc.features);
            }
        }
        out
    }
}
