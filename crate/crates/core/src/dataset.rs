//! Ingestion of scored candidates and grouping by protected attributes.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};

/// One scored candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreRecord {
    pub score: f64,
    pub attributes: BTreeMap<String, String>,
}

impl ScoreRecord {
    pub fn attribute(&self, name: &str) -> Option<&str> {
        self.attributes.get(name).map(String::as_str)
    }
}

/// Scored candidates that survived ingestion, in file order.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreDataset {
    records: Vec<ScoreRecord>,
    schema: Vec<String>,
    dropped_count: usize,
}

impl ScoreDataset {
    /// Builds a dataset from in-memory records, checking that every score is
    /// finite and every schema attribute carries a non-empty label.
    pub fn new(schema: Vec<String>, records: Vec<ScoreRecord>) -> Result<Self> {
        for r in &records {
            if !r.score.is_finite() {
                return Err(AuditError::NonFiniteScore(r.score));
            }
            for name in &schema {
                match r.attribute(name) {
                    Some(label) if !label.trim().is_empty() => {}
                    _ => return Err(AuditError::MissingColumn(name.clone())),
                }
            }
        }
        if records.is_empty() {
            return Err(AuditError::NoRecords { dropped: 0 });
        }
        Ok(Self {
            records,
            schema,
            dropped_count: 0,
        })
    }

    pub fn records(&self) -> &[ScoreRecord] {
        &self.records
    }

    pub fn schema(&self) -> &[String] {
        &self.schema
    }

    /// Rows removed during ingestion because the score or an attribute was unusable.
    pub fn dropped_count(&self) -> usize {
        self.dropped_count
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn scores(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.score)
    }
}

/// Reads a comma-separated file with a header row.
///
/// A row is dropped (and counted) when its score is empty, unparseable or
/// non-finite, or when any requested attribute is empty or absent.
pub fn ingest_csv<P: AsRef<Path>, S: AsRef<str>>(
    path: P,
    score_column: &str,
    attribute_columns: &[S],
) -> Result<ScoreDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| AuditError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ingest_reader(file, score_column, attribute_columns)
}

pub fn ingest_reader<R: Read, S: AsRef<str>>(
    reader: R,
    score_column: &str,
    attribute_columns: &[S],
) -> Result<ScoreDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name.trim())
            .ok_or_else(|| AuditError::MissingColumn(name.to_string()))
    };
    let score_idx = column(score_column)?;
    let attr_idx = attribute_columns
        .iter()
        .map(|name| column(name.as_ref()).map(|i| (name.as_ref().trim().to_string(), i)))
        .collect::<Result<Vec<_>>>()?;

    let mut records = Vec::new();
    let mut dropped = 0;
    for row in rdr.records() {
        let row = row?;
        let score = row
            .get(score_idx)
            .and_then(|s| s.parse::<f64>().ok())
            .filter(|s| s.is_finite());
        let Some(score) = score else {
            dropped += 1;
            continue;
        };
        let mut attributes = BTreeMap::new();
        let mut complete = true;
        for (name, i) in &attr_idx {
            match row.get(*i) {
                Some(label) if !label.is_empty() => {
                    attributes.insert(name.clone(), label.to_string());
                }
                _ => {
                    complete = false;
                    break;
                }
            }
        }
        if !complete {
            dropped += 1;
            continue;
        }
        records.push(ScoreRecord { score, attributes });
    }

    if records.is_empty() {
        return Err(AuditError::NoRecords { dropped });
    }
    Ok(ScoreDataset {
        records,
        schema: attr_idx.into_iter().map(|(name, _)| name).collect(),
        dropped_count: dropped,
    })
}

/// Tuple of category labels identifying a group, one label per attribute.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupKey(Vec<String>);

impl GroupKey {
    pub fn new(labels: Vec<String>) -> Self {
        Self(labels)
    }

    pub fn labels(&self) -> &[String] {
        &self.0
    }
}

/// Labels are joined with `|`.
impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("|"))
    }
}

impl From<&str> for GroupKey {
    fn from(label: &str) -> Self {
        Self(vec![label.to_string()])
    }
}

impl From<String> for GroupKey {
    fn from(label: String) -> Self {
        Self(vec![label])
    }
}

impl From<Vec<String>> for GroupKey {
    fn from(labels: Vec<String>) -> Self {
        Self(labels)
    }
}

impl<const N: usize> From<[&str; N]> for GroupKey {
    fn from(labels: [&str; N]) -> Self {
        Self(labels.iter().map(|s| s.to_string()).collect())
    }
}

/// Scores split by group key, plus the groups that were too small to keep.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupPartition {
    attribute_spec: Vec<String>,
    groups: BTreeMap<GroupKey, Vec<f64>>,
    excluded: BTreeMap<GroupKey, usize>,
}

impl GroupPartition {
    /// Builds a partition directly from per-group score vectors.
    pub fn from_groups<A, K, I>(attribute_spec: A, groups: I) -> Result<Self>
    where
        A: IntoIterator,
        A::Item: Into<String>,
        K: Into<GroupKey>,
        I: IntoIterator<Item = (K, Vec<f64>)>,
    {
        let attribute_spec: Vec<String> = attribute_spec.into_iter().map(Into::into).collect();
        if attribute_spec.is_empty() {
            return Err(AuditError::EmptyAttributeSpec);
        }
        let mut map: BTreeMap<GroupKey, Vec<f64>> = BTreeMap::new();
        for (key, scores) in groups {
            let key = key.into();
            if key.0.len() != attribute_spec.len() {
                return Err(AuditError::KeyArity {
                    expected: attribute_spec.len(),
                    found: key.0.len(),
                });
            }
            if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
                return Err(AuditError::NonFiniteScore(*bad));
            }
            map.entry(key).or_default().extend(scores);
        }
        map.retain(|_, v| !v.is_empty());
        if map.is_empty() {
            return Err(AuditError::EmptyScores);
        }
        Ok(Self {
            attribute_spec,
            groups: map,
            excluded: BTreeMap::new(),
        })
    }

    pub fn attribute_spec(&self) -> &[String] {
        &self.attribute_spec
    }

    pub fn groups(&self) -> &BTreeMap<GroupKey, Vec<f64>> {
        &self.groups
    }

    pub fn get(&self, key: &GroupKey) -> Option<&[f64]> {
        self.groups.get(key).map(Vec::as_slice)
    }

    pub fn counts(&self) -> BTreeMap<GroupKey, usize> {
        self.groups.iter().map(|(k, v)| (k.clone(), v.len())).collect()
    }

    /// Groups below the minimum size, with their member counts.
    pub fn excluded(&self) -> &BTreeMap<GroupKey, usize> {
        &self.excluded
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    /// Number of scores across the retained groups.
    pub fn total(&self) -> usize {
        self.groups.values().map(Vec::len).sum()
    }

    /// Union of the retained groups' scores, in key order.
    pub fn pooled(&self) -> Vec<f64> {
        self.groups.values().flatten().copied().collect()
    }
}

/// Groups records by their labels on `attribute_spec`. A spec with more than
/// one attribute yields intersectional groups keyed by the label tuple.
pub fn partition<S: AsRef<str>>(
    ds: &ScoreDataset,
    attribute_spec: &[S],
    min_group_size: usize,
) -> Result<GroupPartition> {
    if attribute_spec.is_empty() {
        return Err(AuditError::EmptyAttributeSpec);
    }
    if min_group_size == 0 {
        return Err(AuditError::InvalidMinGroupSize);
    }
    let spec: Vec<String> = attribute_spec.iter().map(|s| s.as_ref().to_string()).collect();
    if let Some(unknown) = spec.iter().find(|a| !ds.schema.contains(a)) {
        return Err(AuditError::UnknownAttribute(unknown.clone()));
    }

    let mut all: BTreeMap<GroupKey, Vec<f64>> = BTreeMap::new();
    for r in &ds.records {
        let key = spec
            .iter()
            .map(|a| r.attributes[a].trim().to_string())
            .collect::<Vec<_>>();
        all.entry(GroupKey(key)).or_default().push(r.score);
    }

    let (groups, small): (BTreeMap<_, _>, BTreeMap<_, _>) =
        all.into_iter().partition(|(_, v)| v.len() >= min_group_size);
    if groups.is_empty() {
        return Err(AuditError::AllGroupsExcluded { min_group_size });
    }
    Ok(GroupPartition {
        attribute_spec: spec,
        groups,
        excluded: small.into_iter().map(|(k, v)| (k, v.len())).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(rows: &[(f64, &str, &str)]) -> ScoreDataset {
        let records = rows
            .iter()
            .map(|(s, g, e)| ScoreRecord {
                score: *s,
                attributes: [
                    ("gender".to_string(), g.to_string()),
                    ("ethnicity".to_string(), e.to_string()),
                ]
                .into_iter()
                .collect(),
            })
            .collect();
        ScoreDataset::new(vec!["gender".into(), "ethnicity".into()], records).unwrap()
    }

    #[test]
    fn drops_empty_score() {
        let csv = "score,gender\n10,M\n,F\n30,F\n40,M\n50,F\n";
        let d = ingest_reader(csv.as_bytes(), "score", &["gender"]).unwrap();
        assert_eq!(d.len(), 4);
        assert_eq!(d.dropped_count(), 1);
        assert_eq!(d.scores().collect::<Vec<_>>(), vec![10.0, 30.0, 40.0, 50.0]);
    }

    #[test]
    fn all_valid_rows_kept() {
        let csv = "score,gender\n1.5,M\n2.5,F\n";
        let d = ingest_reader(csv.as_bytes(), "score", &["gender"]).unwrap();
        assert_eq!((d.len(), d.dropped_count()), (2, 0));
    }

    #[test]
    fn unparseable_scores_dropped() {
        let mut csv = String::from("id,score,gender\n");
        for i in 0..10 {
            let score = if i == 3 || i == 7 { "abc".to_string() } else { format!("{}", i * 10) };
            csv.push_str(&format!("{i},{score},F\n"));
        }
        let d = ingest_reader(csv.as_bytes(), "score", &["gender"]).unwrap();
        assert_eq!((d.len(), d.dropped_count()), (8, 2));
    }

    #[test]
    fn nan_inf_and_missing_attribute_dropped() {
        let csv = "score,gender,eth\nNaN,M,A\ninf,F,B\n3,,B\n4,F\n5,\" F \",\"Hispanic/Latino\"\n";
        let d = ingest_reader(csv.as_bytes(), "score", &["gender", "eth"]).unwrap();
        assert_eq!((d.len(), d.dropped_count()), (1, 4));
        assert_eq!(d.records()[0].attribute("gender"), Some("F"));
        assert_eq!(d.records()[0].attribute("eth"), Some("Hispanic/Latino"));
    }

    #[test]
    fn ingestion_errors() {
        let err = ingest_reader("s,g\n1,a\n".as_bytes(), "score", &["g"]).unwrap_err();
        assert!(matches!(err, AuditError::MissingColumn(c) if c == "score"));
        let err = ingest_reader("s,g\n1,a\n".as_bytes(), "s", &["gender"]).unwrap_err();
        assert!(matches!(err, AuditError::MissingColumn(c) if c == "gender"));
        let err = ingest_reader("s,g\nx,a\n,b\n".as_bytes(), "s", &["g"]).unwrap_err();
        assert!(matches!(err, AuditError::NoRecords { dropped: 2 }));
        let err = ingest_csv("/nonexistent/file.csv", "s", &["g"]).unwrap_err();
        assert!(matches!(err, AuditError::Io { .. }));
    }

    #[test]
    fn labels_are_case_sensitive() {
        let d = ds(&[(1.0, "M", "A"), (2.0, "m", "A")]);
        let p = partition(&d, &["gender"], 1).unwrap();
        assert_eq!(p.num_groups(), 2);
    }

    #[test]
    fn balanced_binary_attribute() {
        let d = ds(&[
            (1.0, "M", "A"),
            (2.0, "F", "A"),
            (3.0, "M", "B"),
            (4.0, "F", "B"),
            (5.0, "M", "A"),
            (6.0, "F", "B"),
        ]);
        let p = partition(&d, &["gender"], 1).unwrap();
        assert_eq!(p.num_groups(), 2);
        assert_eq!(p.get(&"M".into()).unwrap(), &[1.0, 3.0, 5.0]);
        assert_eq!(p.get(&"F".into()).unwrap(), &[2.0, 4.0, 6.0]);

        let inter = partition(&d, &["gender", "ethnicity"], 1).unwrap();
        assert_eq!(inter.num_groups(), 4);
        assert_eq!(inter.get(&["F", "B"].into()).unwrap(), &[4.0, 6.0]);
    }

    #[test]
    fn small_groups_are_excluded_not_dropped() {
        let d = ds(&[
            (1.0, "M", "A"),
            (2.0, "M", "A"),
            (3.0, "M", "A"),
            (4.0, "F", "A"),
            (5.0, "F", "A"),
        ]);
        let p = partition(&d, &["gender"], 3).unwrap();
        assert_eq!(p.num_groups(), 1);
        assert_eq!(p.excluded().get(&"F".into()), Some(&2));
        assert_eq!(p.total() + p.excluded().values().sum::<usize>(), d.len());

        let err = partition(&d, &["gender"], 10).unwrap_err();
        assert!(matches!(err, AuditError::AllGroupsExcluded { min_group_size: 10 }));
    }

    #[test]
    fn partition_errors() {
        let d = ds(&[(1.0, "M", "A")]);
        let empty: [&str; 0] = [];
        assert!(matches!(partition(&d, &empty, 1), Err(AuditError::EmptyAttributeSpec)));
        assert!(matches!(partition(&d, &["gender"], 0), Err(AuditError::InvalidMinGroupSize)));
        assert!(matches!(partition(&d, &["age"], 1), Err(AuditError::UnknownAttribute(_))));
    }

    #[test]
    fn from_groups_validates() {
        assert!(GroupPartition::from_groups(["g"], [("a", vec![f64::NAN])]).is_err());
        assert!(GroupPartition::from_groups(["g"], [(["a", "b"], vec![1.0])]).is_err());
        assert!(GroupPartition::from_groups(["g"], [("a", Vec::new())]).is_err());
        let p = GroupPartition::from_groups(["g"], [("a", vec![1.0]), ("a", vec![2.0])]).unwrap();
        assert_eq!(p.get(&"a".into()).unwrap(), &[1.0, 2.0]);
    }

    #[test]
    fn key_display_joins_labels() {
        assert_eq!(GroupKey::from(["F", "Black"]).to_string(), "F|Black");
    }
}
