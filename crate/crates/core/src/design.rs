//! Decision variables: idle-vehicle counts and zone-level path fractions.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::zonegrid::{ZoneGrid, ZoneId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DesignError {
    #[error("expected {expected} idle counts, got {got}")]
    IdleLength { expected: usize, got: usize },
    #[error("idle count for zone {zone} must be finite and non-negative, got {value}")]
    BadIdle { zone: ZoneId, value: f64 },
    #[error("path fractions for pair {from}->{to} sum to {sum}, expected 1")]
    PairSum { from: ZoneId, to: ZoneId, sum: f64 },
    #[error("path fraction {from}->{to}:{via} = {value} is outside [0, 1]")]
    Range { from: ZoneId, to: ZoneId, via: ZoneId, value: f64 },
    #[error("zone {via} is not a feasible next zone from {from} toward {to}")]
    Infeasible { from: ZoneId, to: ZoneId, via: ZoneId },
    #[error("bad path-fraction key `{0}`, expected \"i->j:via\"")]
    Key(String),
    #[error("unknown zone {0} in design")]
    UnknownZone(usize),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed design file: {0}")]
    Parse(String),
}

/// Pair (i, j) whose two feasible next zones leave one free fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FreePair {
    pub from: usize,
    pub to: usize,
    /// The two feasible next zones; the free scalar is the fraction sent to `via[0]`.
    pub via: [usize; 2],
}

/// Idle counts n_i000 and fractions δ_ij_i'. Fractions are stored per
/// ordered pair over the four cardinal neighbour slots.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignVars {
    k: usize,
    pub n_idle: Vec<f64>,
    delta: Vec<[f64; 4]>,
}

impl DesignVars {
    /// Even split over the feasible next zones of every pair.
    pub fn even(grid: &ZoneGrid, n_idle: Vec<f64>) -> Self {
        let k = grid.len();
        let mut delta = vec![[0.0; 4]; k * k];
        for i in 0..k {
            for j in (0..k).filter(|&j| j != i) {
                let next = grid.next_idx(i, j);
                for &n in next {
                    let slot = grid.slot_of_neighbor(i, n).unwrap();
                    delta[i * k + j][slot] = 1.0 / next.len() as f64;
                }
            }
        }
        DesignVars { k, n_idle, delta }
    }

    pub fn zones(&self) -> usize {
        self.k
    }

    /// δ_{from,to_via}; zero when `via` is not adjacent to `from`.
    pub fn fraction(&self, grid: &ZoneGrid, from: ZoneId, to: ZoneId, via: ZoneId) -> f64 {
        match grid.slot_of_neighbor(from.index(), via.index()) {
            Some(slot) if from != to => self.delta[from.index() * self.k + to.index()][slot],
            _ => 0.0,
        }
    }

    pub(crate) fn frac_idx(&self, grid: &ZoneGrid, from: usize, to: usize, via: usize) -> f64 {
        match grid.slot_of_neighbor(from, via) {
            Some(slot) => self.delta[from * self.k + to][slot],
            None => 0.0,
        }
    }

    /// Sets δ_{from,to_via}; other entries of the pair are left alone.
    pub fn set_fraction(&mut self, grid: &ZoneGrid, from: ZoneId, to: ZoneId, via: ZoneId, value: f64) -> Result<(), DesignError> {
        for z in [from, to, via] {
            if z.0 == 0 || z.0 > self.k {
                return Err(DesignError::UnknownZone(z.0));
            }
        }
        let slot = grid
            .slot_of_neighbor(from.index(), via.index())
            .filter(|_| from != to)
            .ok_or(DesignError::Infeasible { from, to, via })?;
        self.delta[from.index() * self.k + to.index()][slot] = value;
        Ok(())
    }

    /// Pairs with two feasible next zones, in (from, to) order.
    pub fn free_pairs(grid: &ZoneGrid) -> Vec<FreePair> {
        let k = grid.len();
        let mut out = Vec::new();
        for i in 0..k {
            for j in (0..k).filter(|&j| j != i) {
                if let [a, b] = grid.next_idx(i, j) {
                    out.push(FreePair { from: i, to: j, via: [*a, *b] });
                }
            }
        }
        out
    }

    pub fn free_value(&self, grid: &ZoneGrid, p: &FreePair) -> f64 {
        self.frac_idx(grid, p.from, p.to, p.via[0])
    }

    pub fn set_free_value(&mut self, grid: &ZoneGrid, p: &FreePair, value: f64) {
        let a = grid.slot_of_neighbor(p.from, p.via[0]).unwrap();
        let b = grid.slot_of_neighbor(p.from, p.via[1]).unwrap();
        let row = &mut self.delta[p.from * self.k + p.to];
        row[a] = value;
        row[b] = 1.0 - value;
    }

    /// Checks idle counts and that every pair's fractions lie in [0, 1],
    /// vanish off the feasible next zones, and sum to one.
    pub fn validate(&self, grid: &ZoneGrid) -> Result<(), DesignError> {
        let k = grid.len();
        if self.n_idle.len() != k {
            return Err(DesignError::IdleLength { expected: k, got: self.n_idle.len() });
        }
        for (i, &v) in self.n_idle.iter().enumerate() {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(DesignError::BadIdle { zone: ZoneId::from_index(i), value: v });
            }
        }
        for i in 0..k {
            for j in (0..k).filter(|&j| j != i) {
                let (from, to) = (ZoneId::from_index(i), ZoneId::from_index(j));
                let row = self.delta[i * k + j];
                for (slot, &value) in row.iter().enumerate() {
                    let Some(n) = grid.neighbor_idx(i, slot) else { continue };
                    let via = ZoneId::from_index(n);
                    if !(-1e-12..=1.0 + 1e-12).contains(&value) {
                        return Err(DesignError::Range { from, to, via, value });
                    }
                    if value > 1e-12 && !grid.next_idx(i, j).contains(&n) {
                        return Err(DesignError::Infeasible { from, to, via });
                    }
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(DesignError::PairSum { from, to, sum });
                }
            }
        }
        Ok(())
    }

    /// Mirror-image design under a zone relabelling `map[old] = new`
    /// (0-based) that is a lattice symmetry of `grid`.
    pub fn relabel(&self, grid: &ZoneGrid, map: &[usize]) -> Self {
        let k = self.k;
        let mut out = DesignVars::even(grid, vec![0.0; k]);
        for i in 0..k {
            out.n_idle[map[i]] = self.n_idle[i];
            for j in (0..k).filter(|&j| j != i) {
                for &n in grid.next_idx(i, j) {
                    let v = self.frac_idx(grid, i, j, n);
                    let slot = grid.slot_of_neighbor(map[i], map[n]).expect("map must preserve adjacency");
                    out.delta[map[i] * k + map[j]][slot] = v;
                }
            }
        }
        out
    }

    pub fn to_file(&self, grid: &ZoneGrid) -> DesignFile {
        let k = self.k;
        let mut delta = BTreeMap::new();
        for i in 0..k {
            for j in (0..k).filter(|&j| j != i) {
                for &n in grid.next_idx(i, j) {
                    delta.insert(format!("{}->{}:{}", i + 1, j + 1, n + 1), self.frac_idx(grid, i, j, n));
                }
            }
        }
        DesignFile { n_idle: self.n_idle.clone(), delta }
    }

    /// Flat coordinates used to match cached solves: idle counts followed by
    /// every stored fraction.
    pub fn key_vector(&self) -> Vec<f64> {
        let mut v = self.n_idle.clone();
        v.extend(self.delta.iter().flatten());
        v
    }
}

/// On-disk design schema. Pairs absent from `delta` keep an even split.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DesignFile {
    pub n_idle: Vec<f64>,
    #[serde(default)]
    pub delta: BTreeMap<String, f64>,
}

fn parse_key(key: &str) -> Option<(usize, usize, usize)> {
    let (from, rest) = key.split_once("->")?;
    let (to, via) = rest.split_once(':')?;
    Some((from.trim().parse().ok()?, to.trim().parse().ok()?, via.trim().parse().ok()?))
}

impl DesignFile {
    pub fn into_design(self, grid: &ZoneGrid) -> Result<DesignVars, DesignError> {
        let k = grid.len();
        if self.n_idle.len() != k {
            return Err(DesignError::IdleLength { expected: k, got: self.n_idle.len() });
        }
        let mut design = DesignVars::even(grid, self.n_idle);
        let mut touched = Vec::new();
        for (key, &value) in &self.delta {
            let (from, to, via) = parse_key(key).ok_or_else(|| DesignError::Key(key.clone()))?;
            let pair = (from, to);
            if !touched.contains(&pair) {
                // Clear the default split before applying explicit entries.
                if from >= 1 && from <= k && to >= 1 && to <= k && from != to {
                    design.delta[(from - 1) * k + (to - 1)] = [0.0; 4];
                }
                touched.push(pair);
            }
            design.set_fraction(grid, ZoneId(from), ZoneId(to), ZoneId(via), value)?;
        }
        design.validate(grid)?;
        Ok(design)
    }
}

pub fn parse_design(text: &str, grid: &ZoneGrid) -> Result<DesignVars, DesignError> {
    let file: DesignFile = serde_json::from_str(text).map_err(|e| DesignError::Parse(e.to_string()))?;
    file.into_design(grid)
}

pub fn load_design(path: impl AsRef<Path>, grid: &ZoneGrid) -> Result<DesignVars, DesignError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| DesignError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_design(&text, grid)
}
