use serde::{Deserialize, Serialize};

/// A single discrete value. Domains are finite ordered lists of these.
pub type Value = i64;

/// Ordered finite domain of a variable.
///
/// The listed order is load-bearing: table rows, joint enumeration, and
/// inverse-CDF sampling all follow it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Domain(Vec<Value>);

impl Domain {
    pub fn new(values: Vec<Value>) -> Self {
        Domain(values)
    }

    pub fn values(&self) -> &[Value] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn index_of(&self, v: Value) -> Option<usize> {
        self.0.iter().position(|&x| x == v)
    }

    pub fn contains(&self, v: Value) -> bool {
        self.index_of(v).is_some()
    }
}

impl From<Vec<Value>> for Domain {
    fn from(values: Vec<Value>) -> Self {
        Domain(values)
    }
}

/// Row-major counter over mixed radices (last coordinate varies fastest).
///
/// Zero dimensions yield exactly one empty tuple, so "no parents" and "no
/// variables" cases need no special handling at call sites.
#[derive(Clone, Debug)]
pub struct MixedRadix {
    sizes: Vec<usize>,
    current: Vec<usize>,
    done: bool,
}

impl MixedRadix {
    pub fn new(sizes: Vec<usize>) -> Self {
        let done = sizes.iter().any(|&s| s == 0);
        let current = vec![0; sizes.len()];
        MixedRadix {
            sizes,
            current,
            done,
        }
    }

    /// Total number of tuples, without iterating.
    pub fn count(sizes: &[usize]) -> u128 {
        sizes.iter().fold(1u128, |acc, &s| {
            acc.saturating_mul(s as u128)
        })
    }
}

impl Iterator for MixedRadix {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        self.done = true;
        for i in (0..self.sizes.len()).rev() {
            self.current[i] += 1;
            if self.current[i] < self.sizes[i] {
                self.done = false;
                break;
            }
            self.current[i] = 0;
        }
        Some(out)
    }
}

/// All joint value assignments over `domains`, row-major.
pub fn joint_assignments(domains: &[&Domain]) -> Vec<Vec<Value>> {
    MixedRadix::new(domains.iter().map(|d| d.len()).collect())
        .map(|idx| {
            idx.iter()
                .zip(domains)
                .map(|(&i, d)| d.values()[i])
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_radix_orders_rows_last_fastest() {
        let rows: Vec<_> = MixedRadix::new(vec![2, 3]).collect();
        assert_eq!(
            rows,
            vec![
                vec![0, 0],
                vec![0, 1],
                vec![0, 2],
                vec![1, 0],
                vec![1, 1],
                vec![1, 2]
            ]
        );
    }

    #[test]
    fn mixed_radix_empty_dims_yield_one_tuple() {
        let rows: Vec<_> = MixedRadix::new(vec![]).collect();
        assert_eq!(rows, vec![Vec::<usize>::new()]);
    }

    #[test]
    fn mixed_radix_zero_size_yields_nothing() {
        assert_eq!(MixedRadix::new(vec![2, 0]).count(), 0);
    }

    #[test]
    fn joint_assignments_follow_domain_order() {
        let a = Domain::new(vec![5, -1]);
        let b = Domain::new(vec![0, 1]);
        assert_eq!(
            joint_assignments(&[&a, &b]),
            vec![vec![5, 0], vec![5, 1], vec![-1, 0], vec![-1, 1]]
        );
    }
}
