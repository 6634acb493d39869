use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Attribute, AttributeVector, CandidatePair, Label};
use crate::learn::{cfs, Dataset, Schema};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeSet {
    Process,
    Similarity,
    All,
    Auto,
}

impl AttributeSet {
    pub const ALL: [AttributeSet; 4] = [
        AttributeSet::Process,
        AttributeSet::Similarity,
        AttributeSet::All,
        AttributeSet::Auto,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AttributeSet::Process => "process",
            AttributeSet::Similarity => "similarity",
            AttributeSet::All => "all",
            AttributeSet::Auto => "auto",
        }
    }

    /// The fixed member list; `None` for [`AttributeSet::Auto`].
    pub fn fixed(self) -> Option<Vec<Attribute>> {
        match self {
            AttributeSet::Process => Some(Attribute::ALL[..16].to_vec()),
            AttributeSet::Similarity => Some(vec![Attribute::A6, Attribute::A17, Attribute::A18]),
            AttributeSet::All => Some(Attribute::ALL.to_vec()),
            AttributeSet::Auto => None,
        }
    }
}

impl fmt::Display for AttributeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttributeSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "process" | "proc" => Ok(AttributeSet::Process),
            "similarity" | "sim" => Ok(AttributeSet::Similarity),
            "all" => Ok(AttributeSet::All),
            "auto" => Ok(AttributeSet::Auto),
            _ => Err(Error::InvalidArgument(format!(
                "unknown attribute set `{s}` (expected process, similarity, all or auto)"
            ))),
        }
    }
}

/// Attributes used by `set`. Auto runs correlation-based subset selection
/// on `training`, a dataset over all 18 attributes.
pub fn select_attributes(set: AttributeSet, training: &Dataset) -> Result<Vec<Attribute>> {
    if let Some(fixed) = set.fixed() {
        return Ok(fixed);
    }
    if training.schema.len() != Attribute::ALL.len() {
        return Err(Error::SchemaMismatch(format!(
            "attribute selection needs all {} attributes, got {}",
            Attribute::ALL.len(),
            training.schema.len()
        )));
    }
    Ok(cfs::select(training)?
        .into_iter()
        .filter_map(Attribute::from_index)
        .collect())
}

/// Dataset over `attrs`. Pairs labelled Unknown count as NonLinked.
pub fn build_dataset(pairs: &[CandidatePair], vectors: &[AttributeVector], attrs: &[Attribute]) -> Result<Dataset> {
    if pairs.len() != vectors.len() {
        return Err(Error::InvalidArgument(format!(
            "{} pairs but {} attribute vectors",
            pairs.len(),
            vectors.len()
        )));
    }
    let mut data = Dataset::new(Schema::new(attrs.iter().map(|a| a.spec()).collect()));
    for (p, v) in pairs.iter().zip(vectors) {
        data.push(v.select(attrs), p.label == Label::Linked)?;
    }
    Ok(data)
}

/// `hash,key,a1..a18,label` with MISSING as an empty cell.
pub fn write_csv<W: Write>(out: W, pairs: &[CandidatePair], vectors: &[AttributeVector]) -> Result<()> {
    let to_err = |e: csv::Error| Error::Parse(format!("csv output: {e}"));
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["hash".to_string(), "key".to_string()];
    header.extend(Attribute::ALL.iter().map(|a| a.name()));
    header.push("label".into());
    w.write_record(&header).map_err(to_err)?;
    for (p, v) in pairs.iter().zip(vectors) {
        let mut record = vec![p.commit_hash.clone(), p.issue_key.clone()];
        record.extend(v.0.iter().map(|x| x.to_string()));
        record.push(p.label.as_str().to_string());
        w.write_record(&record).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
