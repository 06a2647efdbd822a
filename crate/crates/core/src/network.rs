//! Ring topology and model parameters.
//!
//! Rates are expressed in units of the gain rate `kappa1`, so time is measured
//! in units of `1/kappa1`. Sites are 0-based inside the library and 1-based
//! in every file or message a user sees.

use serde::{Deserialize, Serialize};

use crate::error::ParamError;

fn default_kappa1() -> f64 {
    1.0
}

fn default_hbar() -> f64 {
    1.0
}

/// Parameters of a ring of `n` Van der Pol / Stuart-Landau oscillators, each
/// coupled with strength `coupling / (2 d)` to every site within `d` places.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    #[serde(rename = "N")]
    pub n: usize,
    pub d: usize,
    /// Coupling strength `V`.
    #[serde(rename = "V")]
    pub coupling: f64,
    #[serde(default = "default_kappa1")]
    pub kappa1: f64,
    pub kappa2: f64,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
}

impl NetworkParams {
    /// The configuration used throughout the chimera figures:
    /// `N = 50`, `d = 10`, `kappa2 = 0.2`, `hbar = 1`.
    pub fn ring50(coupling: f64) -> Self {
        Self {
            n: 50,
            d: 10,
            coupling,
            kappa1: 1.0,
            kappa2: 0.2,
            hbar: 1.0,
        }
    }

    pub fn validate(self) -> Result<Self, ParamError> {
        if self.n < 2 {
            return Err(ParamError::new("N", format!("need at least 2 sites, got {}", self.n)));
        }
        let all_to_all = self.n % 2 == 1 && self.d == (self.n + 1) / 2;
        if self.d < 1 || (2 * self.d > self.n - 1 && !all_to_all) {
            return Err(ParamError::new(
                "d",
                format!(
                    "coupling range {} outside 1..=(N-1)/2 for N = {} (d = (N+1)/2 only for odd N)",
                    self.d, self.n
                ),
            ));
        }
        for (field, value) in [("kappa1", self.kappa1), ("kappa2", self.kappa2), ("hbar", self.hbar)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ParamError::new(field, format!("must be finite and > 0, got {value}")));
            }
        }
        if !(self.coupling.is_finite() && self.coupling >= 0.0) {
            return Err(ParamError::new("V", format!("must be finite and >= 0, got {}", self.coupling)));
        }
        Ok(self)
    }

    /// `true` when the window `l-d..=l+d` covers the whole ring.
    pub fn is_all_to_all(&self) -> bool {
        2 * self.d >= self.n - 1
    }

    /// Hopping amplitude `V / 2d`. The literal `2d` is kept even when the
    /// all-to-all window has fewer than `2d` distinct neighbours.
    pub fn hopping(&self) -> f64 {
        self.coupling / (2.0 * self.d as f64)
    }

    /// Radius of the uncoupled limit cycle, `sqrt(kappa1 / (2 kappa2))`.
    pub fn limit_cycle_radius(&self) -> f64 {
        (self.kappa1 / (2.0 * self.kappa2)).sqrt()
    }

    /// Distinct neighbours of `site`, in window order `l-d, ..., l+d`.
    pub fn neighbors(&self, site: RingIndex) -> Vec<RingIndex> {
        window_neighbors(self.n, self.d, site.0).into_iter().map(RingIndex).collect()
    }
}

/// A site on the ring, stored 0-based and reduced modulo `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RingIndex(usize);

impl RingIndex {
    /// Wraps any integer label (0-based) onto the ring.
    pub fn wrap(label: i64, n: usize) -> Self {
        Self(label.rem_euclid(n as i64) as usize)
    }

    /// Builds an index from the 1-based label used in files, wrapping
    /// `l + N` back onto `l`.
    pub fn from_one_based(label: i64, n: usize) -> Self {
        Self::wrap(label - 1, n)
    }

    pub fn zero_based(self) -> usize {
        self.0
    }

    pub fn one_based(self) -> usize {
        self.0 + 1
    }
}

fn window_neighbors(n: usize, d: usize, l: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity((2 * d).min(n - 1));
    for offset in -(d as i64)..=(d as i64) {
        if offset == 0 {
            continue;
        }
        let m = (l as i64 + offset).rem_euclid(n as i64) as usize;
        if m != l && !out.contains(&m) {
            out.push(m);
        }
    }
    out
}

/// Precomputed neighbour lists for the inner loops.
#[derive(Debug, Clone)]
pub struct Ring {
    neighbors: Vec<Vec<usize>>,
}

impl Ring {
    pub fn new(p: &NetworkParams) -> Self {
        Self {
            neighbors: (0..p.n).map(|l| window_neighbors(p.n, p.d, l)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// 0-based neighbours of 0-based site `l`.
    pub fn of(&self, l: usize) -> &[usize] {
        &self.neighbors[l]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, d: usize) -> NetworkParams {
        NetworkParams { n, d, ..NetworkParams::ring50(1.2) }
    }

    fn one_based(p: &NetworkParams, l: i64) -> Vec<usize> {
        let mut v: Vec<_> = p
            .neighbors(RingIndex::from_one_based(l, p.n))
            .into_iter()
            .map(RingIndex::one_based)
            .collect();
        v.sort_unstable();
        v
    }

    #[test]
    fn figure_parameters_validate() {
        assert!(NetworkParams::ring50(1.2).validate().is_ok());
    }

    #[test]
    fn self_overlapping_window_is_rejected() {
        let err = params(50, 30).validate().unwrap_err();
        assert_eq!(err.field, "d");
        assert_eq!(params(50, 25).validate().unwrap_err().field, "d");
        assert!(params(51, 25).validate().is_ok());
        assert!(params(51, 26).validate().is_ok());
        assert_eq!(params(51, 27).validate().unwrap_err().field, "d");
        assert_eq!(params(10, 0).validate().unwrap_err().field, "d");
    }

    #[test]
    fn all_to_all_for_odd_ring() {
        let p = params(3, 2).validate().unwrap();
        assert!(p.is_all_to_all());
        assert_eq!(one_based(&p, 1), vec![2, 3]);
    }

    #[test]
    fn all_to_all_matches_brute_force() {
        for n in [3usize, 5, 7, 9] {
            let d = (n + 1) / 2;
            let p = params(n, d);
            for l in 1..=n as i64 {
                let mut expected: Vec<usize> = Vec::new();
                for m in (l - d as i64)..=(l + d as i64) {
                    let wrapped = ((m - 1).rem_euclid(n as i64) + 1) as usize;
                    if wrapped as i64 != l && !expected.contains(&wrapped) {
                        expected.push(wrapped);
                    }
                }
                expected.sort_unstable();
                assert_eq!(one_based(&p, l), expected);
                assert_eq!(expected.len(), n - 1);
            }
        }
    }

    #[test]
    fn window_wraps_around_site_one() {
        let p = NetworkParams::ring50(1.2);
        let expected: Vec<usize> = (2..=11).chain(41..=50).collect();
        assert_eq!(one_based(&p, 1), expected);
        assert_eq!(one_based(&p, 51), expected);
    }

    #[test]
    fn nearest_neighbours() {
        assert_eq!(one_based(&params(5, 1), 3), vec![2, 4]);
    }

    #[test]
    fn bad_rates_name_the_field() {
        let mut p = NetworkParams::ring50(1.2);
        p.kappa2 = 0.0;
        assert_eq!(p.validate().unwrap_err().field, "kappa2");
        p = NetworkParams::ring50(-1.0);
        assert_eq!(p.validate().unwrap_err().field, "V");
        p = NetworkParams::ring50(1.0);
        p.hbar = f64::NAN;
        assert_eq!(p.validate().unwrap_err().field, "hbar");
        p = NetworkParams { n: 1, d: 1, ..p };
        assert_eq!(p.validate().unwrap_err().field, "N");
    }

    #[test]
    fn json_uses_symbol_names() {
        let p: NetworkParams =
            serde_json::from_str(r#"{"N":50,"d":10,"V":1.2,"kappa2":0.2,"hbar":1}"#).unwrap();
        assert_eq!(p, NetworkParams::ring50(1.2));
    }

    proptest::proptest! {
        #[test]
        fn neighbour_relation_is_symmetric_and_regular(n in 3usize..40, d_frac in 0.0f64..1.0) {
            let max_d = if n % 2 == 1 { (n + 1) / 2 } else { (n - 1) / 2 };
            let d = 1 + ((max_d - 1) as f64 * d_frac) as usize;
            let p = params(n, d).validate().unwrap();
            let ring = Ring::new(&p);
            let degree = ring.of(0).len();
            for l in 0..n {
                proptest::prop_assert_eq!(ring.of(l).len(), degree);
                proptest::prop_assert_eq!(degree, (2 * d).min(n - 1));
                for &m in ring.of(l) {
                    proptest::prop_assert!(ring.of(m).contains(&l));
                    proptest::prop_assert_ne!(m, l);
                }
            }
        }
    }
}
