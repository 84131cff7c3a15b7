use serde::Deserialize;

use crate::error::{Error, Result};

const PMF_TOL: f64 = 1e-12;
const PARSE_PMF_TOL: f64 = 1e-9;

/// Discrete memoryless source with a per-letter distortion measure.
///
/// Letters with zero probability are dropped on construction; the remaining
/// letters are renumbered in their original order and the dropped indices
/// are kept in [`pruned`](Self::pruned).
#[derive(Debug, Clone, PartialEq)]
pub struct DmsSource {
    pmf: Vec<f64>,
    distortion: Vec<Vec<f64>>,
    pruned: Vec<usize>,
}

#[derive(Deserialize)]
struct SourceFile {
    pmf: Vec<f64>,
    distortion: Vec<Vec<f64>>,
}

impl DmsSource {
    pub fn new(pmf: Vec<f64>, distortion: Vec<Vec<f64>>) -> Result<Self> {
        if pmf.is_empty() {
            return Err(Error::InvalidSource("empty source alphabet".into()));
        }
        if distortion.len() != pmf.len() {
            return Err(Error::InvalidSource(format!(
                "{} distortion rows for {} source letters",
                distortion.len(),
                pmf.len()
            )));
        }
        if pmf.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::BadPmf("negative or non-finite entry".into()));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > PMF_TOL {
            return Err(Error::BadPmf(format!("sums to {total}")));
        }
        let z = distortion[0].len();
        if z == 0 {
            return Err(Error::InvalidSource("empty reproduction alphabet".into()));
        }
        for (s, row) in distortion.iter().enumerate() {
            if row.len() != z {
                return Err(Error::InvalidSource(format!("distortion row {s} has {} entries, expected {z}", row.len())));
            }
            if row.iter().any(|&d| !(d >= 0.0) || !d.is_finite()) {
                return Err(Error::InvalidSource(format!("distortion row {s} has a negative or non-finite entry")));
            }
        }
        let mut kept_pmf = Vec::new();
        let mut kept_rows = Vec::new();
        let mut pruned = Vec::new();
        for (s, (&p, row)) in pmf.iter().zip(distortion).enumerate() {
            if p > 0.0 {
                kept_pmf.push(p);
                kept_rows.push(row);
            } else {
                pruned.push(s);
            }
        }
        Ok(Self { pmf: kept_pmf, distortion: kept_rows, pruned })
    }

    /// Parses `{"pmf": [..], "distortion": [[..]]}`. Masses off by at most
    /// 1e-9 in total are renormalized.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: SourceFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut pmf = file.pmf;
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > PARSE_PMF_TOL {
            return Err(Error::BadPmf(format!("sums to {total}")));
        }
        if total > 0.0 {
            pmf.iter_mut().for_each(|p| *p /= total);
        }
        Self::new(pmf, file.distortion)
    }

    /// Binary source with `P[S = 1] = p` and Hamming distortion.
    pub fn binary_hamming(p: f64) -> Result<Self> {
        Self::new(vec![1.0 - p, p], vec![vec![0.0, 1.0], vec![1.0, 0.0]])
    }

    pub fn alphabet_size(&self) -> usize {
        self.pmf.len()
    }

    pub fn reproduction_size(&self) -> usize {
        self.distortion[0].len()
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn distortion(&self) -> &[Vec<f64>] {
        &self.distortion
    }

    /// Original indices of the letters dropped for having zero mass.
    pub fn pruned(&self) -> &[usize] {
        &self.pruned
    }

    /// `E[min_z d(S, z)]`.
    pub fn d_min(&self) -> f64 {
        self.pmf
            .iter()
            .zip(&self.distortion)
            .map(|(p, row)| p * row.iter().copied().fold(f64::INFINITY, f64::min))
            .sum()
    }

    /// Best constant reproduction and its expected distortion.
    pub fn best_constant(&self) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for z in 0..self.reproduction_size() {
            let d: f64 = self.pmf.iter().zip(&self.distortion).map(|(p, row)| p * row[z]).sum();
            if d < best.1 {
                best = (z, d);
            }
        }
        best
    }

    /// `min_z E[d(S, z)]`: beyond this distortion the rate is zero.
    pub fn d_max(&self) -> f64 {
        self.best_constant().1
    }
}
