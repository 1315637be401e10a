use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::Value;
use crate::error::ScmError;

/// Tolerance on total mass for a distribution to count as normalized.
pub const PMF_TOLERANCE: f64 = 1e-9;

/// Joint probability mass function over named variables.
///
/// Entries are keyed by value tuples aligned with `vars`; tuples not present
/// have probability zero. Keys are kept sorted so iteration and
/// serialization are deterministic.
#[derive(Clone, Debug, PartialEq)]
pub struct Pmf {
    vars: Vec<String>,
    entries: BTreeMap<Vec<Value>, f64>,
}

#[derive(Serialize, Deserialize)]
struct PmfEntry {
    values: Vec<Value>,
    p: f64,
}

#[derive(Serialize, Deserialize)]
struct PmfFile {
    vars: Vec<String>,
    entries: Vec<PmfEntry>,
}

impl Pmf {
    pub fn new(vars: Vec<String>, entries: BTreeMap<Vec<Value>, f64>) -> Result<Self, ScmError> {
        let invalid = |message: String| ScmError::PmfInvalid {
            vars: vars.clone(),
            message,
        };
        let mut seen = std::collections::BTreeSet::new();
        for v in &vars {
            if !seen.insert(v) {
                return Err(ScmError::DuplicateName(v.clone()));
            }
        }
        let mut sum = 0.0;
        for (key, &p) in &entries {
            if key.len() != vars.len() {
                return Err(invalid(format!(
                    "entry {:?} has {} values, expected {}",
                    key,
                    key.len(),
                    vars.len()
                )));
            }
            if p < 0.0 || !p.is_finite() {
                return Err(invalid(format!("entry {:?} has probability {}", key, p)));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > PMF_TOLERANCE {
            return Err(invalid(format!("total mass {} is not 1", sum)));
        }
        Ok(Pmf { vars, entries })
    }

    /// Point mass on a single tuple.
    pub fn point(vars: Vec<String>, values: Vec<Value>) -> Result<Self, ScmError> {
        let mut entries = BTreeMap::new();
        entries.insert(values, 1.0);
        Pmf::new(vars, entries)
    }

    /// Empirical distribution of `rows` (each row aligned with `vars`).
    pub fn from_samples(vars: Vec<String>, rows: &[Vec<Value>]) -> Result<Self, ScmError> {
        if rows.is_empty() {
            return Err(ScmError::PmfInvalid {
                vars,
                message: "no samples".into(),
            });
        }
        let mut counts: BTreeMap<Vec<Value>, u64> = BTreeMap::new();
        for row in rows {
            *counts.entry(row.clone()).or_insert(0) += 1;
        }
        let n = rows.len() as f64;
        let entries = counts
            .into_iter()
            .map(|(k, c)| (k, c as f64 / n))
            .collect();
        Pmf::new(vars, entries)
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<Value>, f64)> {
        self.entries.iter().map(|(k, &p)| (k, p))
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    /// Probability of one full tuple (zero when absent).
    pub fn prob(&self, key: &[Value]) -> f64 {
        self.entries.get(key).copied().unwrap_or(0.0)
    }

    fn positions(&self, event: &BTreeMap<String, Value>) -> Result<Vec<(usize, Value)>, ScmError> {
        event
            .iter()
            .map(|(name, &v)| {
                self.vars
                    .iter()
                    .position(|x| x == name)
                    .map(|i| (i, v))
                    .ok_or_else(|| ScmError::UnknownVariable(name.clone()))
            })
            .collect()
    }

    /// Probability that every listed variable takes its listed value.
    pub fn event_prob(&self, event: &BTreeMap<String, Value>) -> Result<f64, ScmError> {
        let checks = self.positions(event)?;
        Ok(self
            .entries
            .iter()
            .filter(|(key, _)| checks.iter().all(|&(i, v)| key[i] == v))
            .map(|(_, &p)| p)
            .sum())
    }

    /// Conditional probability of `outcome` given `given`; error when the
    /// conditioning event has zero mass.
    pub fn conditional_prob(
        &self,
        outcome: &BTreeMap<String, Value>,
        given: &BTreeMap<String, Value>,
    ) -> Result<f64, ScmError> {
        let oc = self.positions(outcome)?;
        let gc = self.positions(given)?;
        let mut num = 0.0;
        let mut den = 0.0;
        for (key, &p) in &self.entries {
            if gc.iter().all(|&(i, v)| key[i] == v) {
                den += p;
                if oc.iter().all(|&(i, v)| key[i] == v) {
                    num += p;
                }
            }
        }
        if den == 0.0 {
            let printed = given
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(", ");
            return Err(ScmError::ZeroProbabilityConditioning(printed));
        }
        Ok(num / den)
    }

    /// Marginal over `keep`, in the order given.
    pub fn marginal(&self, keep: &[String]) -> Result<Pmf, ScmError> {
        let idx: Vec<usize> = keep
            .iter()
            .map(|name| {
                self.vars
                    .iter()
                    .position(|x| x == name)
                    .ok_or_else(|| ScmError::UnknownVariable(name.clone()))
            })
            .collect::<Result<_, _>>()?;
        let mut entries: BTreeMap<Vec<Value>, f64> = BTreeMap::new();
        for (key, &p) in &self.entries {
            let small: Vec<Value> = idx.iter().map(|&i| key[i]).collect();
            *entries.entry(small).or_insert(0.0) += p;
        }
        Pmf::new(keep.to_vec(), entries)
    }

    /// Largest absolute difference in probability over the union of supports.
    /// Variable sets must match exactly.
    pub fn max_abs_diff(&self, other: &Pmf) -> Result<f64, ScmError> {
        if self.vars != other.vars {
            return Err(ScmError::PmfInvalid {
                vars: other.vars.clone(),
                message: format!("variable mismatch, expected {:?}", self.vars),
            });
        }
        let mut worst = 0.0f64;
        for (key, &p) in &self.entries {
            worst = worst.max((p - other.prob(key)).abs());
        }
        for (key, &p) in &other.entries {
            worst = worst.max((p - self.prob(key)).abs());
        }
        Ok(worst)
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        self.entries
            .values()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.ln())
            .sum()
    }
}

impl Serialize for Pmf {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let file = PmfFile {
            vars: self.vars.clone(),
            entries: self
                .entries
                .iter()
                .map(|(k, &p)| PmfEntry {
                    values: k.clone(),
                    p,
                })
                .collect(),
        };
        file.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Pmf {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let file = PmfFile::deserialize(d)?;
        let mut entries = BTreeMap::new();
        for e in file.entries {
            if entries.insert(e.values.clone(), e.p).is_some() {
                return Err(serde::de::Error::custom(format!(
                    "duplicate pmf entry {:?}",
                    e.values
                )));
            }
        }
        Pmf::new(file.vars, entries).map_err(serde::de::Error::custom)
    }
}
