//! Feature rankings and rank-biased overlap between them.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::num::{decimal_f64, format_ratio};
use crate::scores::ScoreVector;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Identity,
    Absolute,
}

/// A full ordering of the features of one score vector, best first. Ties
/// break towards the smaller feature index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ranking {
    pub ordered: Vec<usize>,
    pub source: String,
}

pub fn ranking(scores: &ScoreVector, transform: Transform) -> Ranking {
    let m = scores.m();
    let keyed: Vec<BigRational> = scores
        .values
        .iter()
        .map(|v| match transform {
            Transform::Identity => v.clone(),
            Transform::Absolute => v.abs(),
        })
        .collect();
    let mut ordered: Vec<usize> = (1..=m).collect();
    ordered.sort_by(|&a, &b| keyed[b - 1].cmp(&keyed[a - 1]).then(a.cmp(&b)));
    let source = match transform {
        Transform::Identity => scores.method.to_string(),
        Transform::Absolute => format!("abs({})", scores.method),
    };
    Ranking { ordered, source }
}

/// Truncated rank-biased overlap:
/// `(1-p) * Σ_{k=1..d} p^(k-1) * |a[:k] ∩ b[:k]| / k`,
/// with the sum stopping at the ranking length when it is shorter than `d`.
pub fn rbo(a: &Ranking, b: &Ranking, p: &BigRational, d: usize) -> Result<BigRational> {
    if a.ordered.len() != b.ordered.len() {
        return Err(Error::InvalidArgument(format!(
            "rankings cover different universes ({} vs {} features)",
            a.ordered.len(),
            b.ordered.len()
        )));
    }
    if !(p.is_positive() && p < &BigRational::one()) {
        return Err(Error::InvalidArgument(format!(
            "persistence must lie strictly between 0 and 1, got {}",
            format_ratio(p)
        )));
    }
    if d == 0 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    for r in [a, b] {
        let mut sorted = r.ordered.clone();
        sorted.sort_unstable();
        if sorted.iter().enumerate().any(|(k, &f)| f != k + 1) {
            return Err(Error::InvalidArgument(format!(
                "ranking {:?} is not a permutation of 1..={}",
                r.source,
                r.ordered.len()
            )));
        }
    }
    let depth = d.min(a.ordered.len());
    let mut seen_a = vec![false; a.ordered.len() + 1];
    let mut seen_b = vec![false; b.ordered.len() + 1];
    let mut overlap: u64 = 0;
    let mut weight = BigRational::one(); // p^(k-1)
    let mut sum = BigRational::zero();
    for k in 1..=depth {
        let x = a.ordered[k - 1];
        let y = b.ordered[k - 1];
        if x == y {
            overlap += 1;
        } else {
            if seen_b[x] {
                overlap += 1;
            }
            if seen_a[y] {
                overlap += 1;
            }
        }
        seen_a[x] = true;
        seen_b[y] = true;
        sum += &weight * BigRational::new(BigInt::from(overlap), BigInt::from(k as u64));
        weight *= p;
    }
    Ok((BigRational::one() - p) * sum)
}

/// Pairwise RBO values over a list of rankings.
#[derive(Debug, Clone)]
pub struct RboReport {
    pub persistence: BigRational,
    pub depth: usize,
    pub methods: Vec<String>,
    pub values: Vec<Vec<BigRational>>,
}

pub fn rbo_matrix(rankings: &[Ranking], p: &BigRational, d: usize) -> Result<RboReport> {
    let n = rankings.len();
    let mut values = vec![vec![BigRational::zero(); n]; n];
    for i in 0..n {
        for j in i..n {
            let v = rbo(&rankings[i], &rankings[j], p, d)?;
            values[i][j] = v.clone();
            values[j][i] = v;
        }
    }
    Ok(RboReport {
        persistence: p.clone(),
        depth: d,
        methods: rankings.iter().map(|r| r.source.clone()).collect(),
        values,
    })
}

impl RboReport {
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "persistence": format_ratio(&self.persistence),
            "depth": self.depth,
            "methods": self.methods,
            "values": self
                .values
                .iter()
                .map(|row| row.iter().map(format_ratio).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
            "decimal": self
                .values
                .iter()
                .map(|row| row.iter().map(decimal_f64).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method");
        for m in &self.methods {
            out.push(',');
            out.push_str(m);
        }
        out.push('\n');
        for (i, row) in self.values.iter().enumerate() {
            out.push_str(&self.methods[i]);
            for v in row {
                out.push(',');
                out.push_str(&crate::num::decimal_string(v, 6));
            }
            out.push('\n');
        }
        out
    }
}
