//! Suitable-vehicle counts and caller pickup rates under nearest-vehicle
//! assignment.
//!
//! A caller is served by the nearest suitable vehicle, so the share of
//! callers a vehicle class absorbs equals that class's share of the suitable
//! count. Each intra-zonal caller heads in one of the four diagonal
//! directions with equal probability. A seeker bound for the caller's own
//! zone qualifies for a fraction of callers equal to the mean zero-detour
//! area: 2/9 for an intra-zonal caller, 1/4 for an inter-zonal caller bound
//! for a diagonal zone, 1/2 for one bound for an aligned zone.

use thiserror::Error;

use crate::scenario::Scenario;
use crate::zonegrid::{Direction, ZoneGrid, ZoneId};

pub const INTRA_LOCAL_FRACTION: f64 = 2.0 / 9.0;
pub const DIAGONAL_LOCAL_FRACTION: f64 = 0.25;
pub const CARDINAL_LOCAL_FRACTION: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatchError {
    #[error("no suitable vehicle for intra-zonal callers in zone {zone} heading {direction}")]
    UnservableIntra { zone: ZoneId, direction: Direction },
    #[error("no suitable vehicle for callers from zone {origin} to zone {destination}")]
    UnservableInter { origin: ZoneId, destination: ZoneId },
    /// Only a vanishing seeker population serves the zone: no idle vehicles
    /// and nothing entering from neighbours.
    #[error("zone {zone} has demand but neither idle vehicles nor incoming vehicles")]
    NoSupply { zone: ZoneId },
}

/// Vehicle counts the pickup and intensity formulas read. `remote` is
/// row-major K×K with `remote[i*K+j] = n_i0j0`; its diagonal is ignored.
#[derive(Debug, Clone, Copy)]
pub struct SeekerCounts<'a> {
    pub idle: &'a [f64],
    pub local: &'a [f64],
    pub remote: &'a [f64],
}

/// N_ii^r per zone and diagonal direction, and N_ij per ordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SuitableCounts {
    k: usize,
    /// `intra[i][slot]` with slot = `Direction::diagonal_slot`.
    pub intra: Vec<[f64; 4]>,
    /// Row-major K×K, diagonal unused (0).
    pub inter: Vec<f64>,
}

impl SuitableCounts {
    pub fn intra_count(&self, i: ZoneId, r: Direction) -> Option<f64> {
        r.diagonal_slot().map(|s| self.intra[i.index()][s])
    }

    pub fn inter_count(&self, i: ZoneId, j: ZoneId) -> f64 {
        self.inter[i.index() * self.k + j.index()]
    }
}

/// Fraction of zone-i local seekers suitable for a caller from i to j.
pub(crate) fn local_fraction(grid: &ZoneGrid, i: usize, j: usize) -> f64 {
    match grid.dir_idx(i, j) {
        Some(d) if d.is_diagonal() => DIAGONAL_LOCAL_FRACTION,
        _ => CARDINAL_LOCAL_FRACTION,
    }
}

pub fn suitable_counts(grid: &ZoneGrid, n: SeekerCounts<'_>) -> SuitableCounts {
    let k = grid.len();
    let intra = (0..k)
        .map(|i| {
            let mut out = [0.0; 4];
            for (slot, v) in out.iter_mut().enumerate() {
                let seekers: f64 = grid.intra_dest_idx(i, slot).iter().map(|&j| n.remote[i * k + j]).sum();
                *v = n.idle[i] + INTRA_LOCAL_FRACTION * n.local[i] + seekers;
            }
            out
        })
        .collect();
    let mut inter = vec![0.0; k * k];
    for i in 0..k {
        for j in (0..k).filter(|&j| j != i) {
            let seekers: f64 = grid.omega_idx(i, j).iter().map(|&m| n.remote[i * k + m]).sum();
            inter[i * k + j] = n.idle[i] + local_fraction(grid, i, j) * n.local[i] + seekers;
        }
    }
    SuitableCounts { k, intra, inter }
}

/// Caller pickup rates by vehicle class (veh/hr). Pair and triple arrays are
/// row-major over zone indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PickupRates {
    k: usize,
    /// p_ii00_i: idle vehicles picking up intra-zonal callers.
    pub idle_local: Vec<f64>,
    /// p_iii0_i: local seekers picking up intra-zonal callers.
    pub local_local: Vec<f64>,
    /// `[i][j]` = p_iij0_i: seekers bound for j picking up intra-zonal callers.
    pub remote_local: Vec<f64>,
    /// `[i][j]` = p_ii00_j: idle vehicles picking up callers bound for j.
    pub idle_remote: Vec<f64>,
    /// `[i][j]` = p_iii0_j: local seekers picking up callers bound for j.
    pub local_remote: Vec<f64>,
    /// `[i][m][j]` = p_iim0_j: seekers bound for m picking up callers bound for j.
    pub remote_remote: Vec<f64>,
}

impl PickupRates {
    pub fn zones(&self) -> usize {
        self.k
    }

    pub(crate) fn rr(&self, i: usize, m: usize, j: usize) -> f64 {
        self.remote_remote[(i * self.k + m) * self.k + j]
    }

    /// Total pickups of callers from `i` to `j` across vehicle classes.
    pub fn absorbed(&self, i: ZoneId, j: ZoneId) -> f64 {
        let (i, j, k) = (i.index(), j.index(), self.k);
        if i == j {
            self.idle_local[i] + self.local_local[i] + (0..k).filter(|&m| m != i).map(|m| self.remote_local[i * k + m]).sum::<f64>()
        } else {
            self.idle_remote[i * k + j]
                + self.local_remote[i * k + j]
                + (0..k).filter(|&m| m != i).map(|m| self.rr(i, m, j)).sum::<f64>()
        }
    }
}

fn share(lambda: f64, numer: f64, denom: f64) -> f64 {
    if lambda == 0.0 || numer == 0.0 {
        0.0
    } else {
        lambda * numer / denom
    }
}

/// Pickup rates from counts; fails when a class with positive demand has
/// no suitable vehicle.
pub fn pickup_rates(scenario: &Scenario, counts: &SuitableCounts, n: SeekerCounts<'_>) -> Result<PickupRates, MatchError> {
    let grid = scenario.grid();
    let k = grid.len();
    check_servable(scenario, counts)?;
    let mut p = PickupRates {
        k,
        idle_local: vec![0.0; k],
        local_local: vec![0.0; k],
        remote_local: vec![0.0; k * k],
        idle_remote: vec![0.0; k * k],
        local_remote: vec![0.0; k * k],
        remote_remote: vec![0.0; k * k * k],
    };
    for i in 0..k {
        let quarter = scenario.lambda(i, i) / 4.0;
        for slot in 0..4 {
            let big_n = counts.intra[i][slot];
            p.idle_local[i] += share(quarter, n.idle[i], big_n);
            p.local_local[i] += share(quarter, INTRA_LOCAL_FRACTION * n.local[i], big_n);
            for &j in grid.intra_dest_idx(i, slot) {
                p.remote_local[i * k + j] += share(quarter, n.remote[i * k + j], big_n);
            }
        }
        for j in (0..k).filter(|&j| j != i) {
            let lam = scenario.lambda(i, j);
            let big_n = counts.inter[i * k + j];
            p.idle_remote[i * k + j] = share(lam, n.idle[i], big_n);
            p.local_remote[i * k + j] = share(lam, local_fraction(grid, i, j) * n.local[i], big_n);
            for &m in grid.omega_idx(i, j) {
                p.remote_remote[(i * k + m) * k + j] = share(lam, n.remote[i * k + m], big_n);
            }
        }
    }
    Ok(p)
}

fn check_servable(scenario: &Scenario, counts: &SuitableCounts) -> Result<(), MatchError> {
    let k = scenario.zones();
    for i in 0..k {
        if scenario.lambda(i, i) > 0.0 {
            for (slot, &d) in Direction::DIAGONAL.iter().enumerate() {
                if counts.intra[i][slot] <= 0.0 {
                    return Err(MatchError::UnservableIntra { zone: ZoneId::from_index(i), direction: d });
                }
            }
        }
        for j in (0..k).filter(|&j| j != i) {
            if scenario.lambda(i, j) > 0.0 && counts.inter[i * k + j] <= 0.0 {
                return Err(MatchError::UnservableInter {
                    origin: ZoneId::from_index(i),
                    destination: ZoneId::from_index(j),
                });
            }
        }
    }
    Ok(())
}

/// Assignment intensities per seeker vehicle (1/hr), with the vehicle count
/// cancelled analytically so that they stay finite as counts vanish.
#[derive(Debug, Clone, PartialEq)]
pub struct Intensities {
    /// θ_i for local seekers (i,0,i,0).
    pub local: Vec<f64>,
    /// Row-major θ_ij for remote seekers (i,0,j,0); diagonal unused.
    pub remote: Vec<f64>,
}

fn rate_per(lambda: f64, big_n: f64) -> f64 {
    if lambda == 0.0 {
        0.0
    } else {
        lambda / big_n
    }
}

pub fn per_vehicle_intensities(scenario: &Scenario, counts: &SuitableCounts) -> Result<Intensities, MatchError> {
    check_servable(scenario, counts)?;
    let grid = scenario.grid();
    let k = grid.len();
    let mut local = vec![0.0; k];
    let mut remote = vec![0.0; k * k];
    for i in 0..k {
        let quarter = scenario.lambda(i, i) / 4.0;
        for slot in 0..4 {
            let per = rate_per(quarter, counts.intra[i][slot]);
            local[i] += INTRA_LOCAL_FRACTION * per;
            for &j in grid.intra_dest_idx(i, slot) {
                remote[i * k + j] += per;
            }
        }
        for j in (0..k).filter(|&j| j != i) {
            let per = rate_per(scenario.lambda(i, j), counts.inter[i * k + j]);
            local[i] += local_fraction(grid, i, j) * per;
            // Seekers bound for m qualify for callers bound for j exactly
            // when m ∈ Ω_ij.
            for &m in grid.omega_idx(i, j) {
                remote[i * k + m] += per;
            }
        }
    }
    Ok(Intensities { local, remote })
}
