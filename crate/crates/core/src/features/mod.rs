//! The six data dimensions and the per-instance feature table.

mod compute;
mod records;
mod scale;

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

pub use compute::{
    compute_ambiguity, compute_difficulty, compute_length, compute_noise, compute_perplexity, pvi,
    variability, PVI_LOG_BASE,
};
pub use records::{PerplexityRecord, PviRecord, TraceRecord};
pub use scale::{fit_scaler, scale, ScalerParams, MIN_CLIP_N};

use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dimension {
    Ambiguity,
    Difficulty,
    Discriminability,
    Length,
    Noise,
    Perplexity,
}

impl Dimension {
    pub const ALL: [Dimension; 6] = [
        Dimension::Ambiguity,
        Dimension::Difficulty,
        Dimension::Discriminability,
        Dimension::Length,
        Dimension::Noise,
        Dimension::Perplexity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dimension::Ambiguity => "ambiguity",
            Dimension::Difficulty => "difficulty",
            Dimension::Discriminability => "discriminability",
            Dimension::Length => "length",
            Dimension::Noise => "noise",
            Dimension::Perplexity => "perplexity",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dimension {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Dimension::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::InvalidParameter(alloc::format!("unknown dimension `{s}`")))
    }
}

/// Whether a column was computed here or read from a precomputed source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Computed,
    Ingested,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::Computed => "computed",
            Provenance::Ingested => "ingested",
        }
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "computed" => Ok(Provenance::Computed),
            "ingested" => Ok(Provenance::Ingested),
            other => Err(Error::InvalidParameter(alloc::format!(
                "unknown provenance `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureColumn {
    pub raw: Vec<f64>,
    pub scaled: Vec<f64>,
    pub provenance: Provenance,
    pub scaler: ScalerParams,
}

impl FeatureColumn {
    /// Fits the clipped min-max scaler on `raw` and scales every value.
    pub fn fit(raw: Vec<f64>, provenance: Provenance) -> Result<Self> {
        let scaler = fit_scaler(&raw)?;
        let scaled = raw.iter().map(|&v| scale(v, &scaler)).collect();
        Ok(FeatureColumn {
            raw,
            scaled,
            provenance,
            scaler,
        })
    }
}

/// Raw and scaled values of all six dimensions for every instance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    ids: Vec<String>,
    columns: [FeatureColumn; 6],
}

impl FeatureTable {
    /// `columns` is indexed by [`Dimension::index`].
    pub fn new(ids: Vec<String>, columns: [FeatureColumn; 6]) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        for (dim, col) in Dimension::ALL.iter().zip(&columns) {
            for len in [col.raw.len(), col.scaled.len()] {
                if len != ids.len() {
                    return Err(Error::LengthMismatch {
                        left: len,
                        right: ids.len(),
                    });
                }
            }
            if col.raw.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(alloc::format!(
                    "{dim}: non-finite raw value"
                )));
            }
            if col.scaled.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidParameter(alloc::format!(
                    "{dim}: scaled value outside [0, 1]"
                )));
            }
            col.scaler.validate()?;
        }
        Ok(FeatureTable { ids, columns })
    }

    /// Scales each raw column and assembles the table.
    pub fn from_raw(ids: Vec<String>, raw: [(Vec<f64>, Provenance); 6]) -> Result<Self> {
        let mut columns = Vec::with_capacity(6);
        for (values, provenance) in raw {
            columns.push(FeatureColumn::fit(values, provenance)?);
        }
        let columns: [FeatureColumn; 6] = columns
            .try_into()
            .unwrap_or_else(|_| unreachable!("six columns"));
        FeatureTable::new(ids, columns)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn column(&self, dim: Dimension) -> &FeatureColumn {
        &self.columns[dim.index()]
    }

    pub fn raw(&self, dim: Dimension) -> &[f64] {
        &self.columns[dim.index()].raw
    }

    pub fn scaled(&self, dim: Dimension) -> &[f64] {
        &self.columns[dim.index()].scaled
    }

    /// Fails with the first table id the dataset does not contain.
    pub fn check_against(&self, dataset: &Dataset) -> Result<()> {
        match self.ids.iter().find(|id| dataset.get(id).is_none()) {
            Some(id) => Err(Error::UnknownId(id.clone())),
            None => Ok(()),
        }
    }

    /// Rows restricted to `ids` (order as given), with the parent's scalers
    /// reused so scaled values stay comparable.
    pub fn subset(&self, ids: &[String]) -> Result<FeatureTable> {
        let lookup: alloc::collections::BTreeMap<&str, usize> = self
            .ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let positions = ids
            .iter()
            .map(|id| {
                lookup
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| Error::UnknownId(id.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        let columns = self.columns.clone().map(|col| FeatureColumn {
            raw: positions.iter().map(|&p| col.raw[p]).collect(),
            scaled: positions.iter().map(|&p| col.scaled[p]).collect(),
            provenance: col.provenance,
            scaler: col.scaler,
        });
        FeatureTable::new(ids.to_vec(), columns)
    }

    /// Pairwise Pearson correlation of the scaled columns. Entries involving a
    /// constant column are `None`.
    pub fn correlation_matrix(&self) -> [[Option<f64>; 6]; 6] {
        let mut out = [[None; 6]; 6];
        for a in Dimension::ALL {
            for b in Dimension::ALL {
                out[a.index()][b.index()] =
                    crate::stats::pearson(self.scaled(a), self.scaled(b)).ok();
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;

    fn table(n: usize) -> FeatureTable {
        let ids = (0..n).map(|i| format!("i{i}")).collect();
        let raw = Dimension::ALL.map(|d| {
            let v = (0..n).map(|i| (i * (d.index() + 1)) as f64).collect();
            (v, Provenance::Computed)
        });
        FeatureTable::from_raw(ids, raw).unwrap()
    }

    #[test]
    fn dimension_names_round_trip() {
        for d in Dimension::ALL {
            assert_eq!(d.name().parse::<Dimension>().unwrap(), d);
        }
        assert!("size".parse::<Dimension>().is_err());
    }

    #[test]
    fn subset_keeps_scaler() {
        let t = table(10);
        let s = t.subset(&["i3".into(), "i1".into()]).unwrap();
        assert_eq!(s.raw(Dimension::Length), &[12.0, 4.0]);
        assert_eq!(
            s.column(Dimension::Noise).scaler,
            t.column(Dimension::Noise).scaler
        );
        assert!(t.subset(&["nope".into()]).is_err());
    }

    #[test]
    fn correlated_columns() {
        let t = table(10);
        let c = t.correlation_matrix();
        assert!((c[0][1].unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_out_of_range_scaled() {
        let mut col = FeatureColumn::fit(vec![0.0, 1.0], Provenance::Computed).unwrap();
        col.scaled[0] = 1.5;
        let cols = [
            col.clone(),
            col.clone(),
            col.clone(),
            col.clone(),
            col.clone(),
            col,
        ];
        assert!(FeatureTable::new(vec!["a".into(), "b".into()], cols).is_err());
    }
}
