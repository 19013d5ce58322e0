//! Vehicle states of the queuing network and their flat indexing.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::zonegrid::{ZoneGrid, ZoneId};

/// Service pattern of a vehicle state. Declaration order is the per-zone
/// enumeration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StateKind {
    /// (i,0,0,0)
    Idle,
    /// (i,i,0,0)
    AssignedEmpty,
    /// (i,0,i,0)
    SeekerLocal,
    /// (i,0,j,0)
    SeekerRemote,
    /// (i,i,i,0)
    AssignedWithSeekerLocal,
    /// (i,i,j,0)
    AssignedWithSeekerRemote,
    /// (i,0,i,i)
    FullLocalLocal,
    /// (i,0,i,j)
    FullLocalRemote,
    /// (i,0,j,k), k no closer than j
    FullRemoteRemote,
    /// (i,j,0,0): idle vehicle driving from i to j
    Rebalancing,
}

impl StateKind {
    /// Passengers assigned or on board.
    pub fn passengers(self) -> u8 {
        match self {
            StateKind::Idle | StateKind::Rebalancing => 0,
            StateKind::AssignedEmpty | StateKind::SeekerLocal | StateKind::SeekerRemote => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VehicleState {
    pub s0: ZoneId,
    pub s1: Option<ZoneId>,
    pub s2: Option<ZoneId>,
    pub s3: Option<ZoneId>,
}

impl VehicleState {
    pub fn new(s0: usize, s1: usize, s2: usize, s3: usize) -> Self {
        let opt = |v: usize| (v != 0).then_some(ZoneId(v));
        VehicleState { s0: ZoneId(s0), s1: opt(s1), s2: opt(s2), s3: opt(s3) }
    }

    fn key(&self) -> (usize, usize, usize, usize) {
        let raw = |z: Option<ZoneId>| z.map_or(0, |z| z.0);
        (self.s0.0, raw(self.s1), raw(self.s2), raw(self.s3))
    }

    /// Classifies the tuple pattern; `None` for patterns that are not
    /// network states (before destination-set checks).
    pub fn kind(&self) -> Option<StateKind> {
        let (i, a, b, c) = self.key();
        use StateKind::*;
        let kind = match (a, b, c) {
            (0, 0, 0) => Idle,
            (a, 0, 0) if a == i => AssignedEmpty,
            (a, 0, 0) if a != 0 => Rebalancing,
            (0, b, 0) if b == i => SeekerLocal,
            (0, b, 0) if b != 0 => SeekerRemote,
            (a, b, 0) if a == i && b == i => AssignedWithSeekerLocal,
            (a, b, 0) if a == i && b != 0 => AssignedWithSeekerRemote,
            (0, b, c) if b == i && c == i => FullLocalLocal,
            (0, b, c) if b == i && c != 0 => FullLocalRemote,
            (0, b, c) if b != 0 && c != 0 && b != i && c != i => FullRemoteRemote,
            _ => return None,
        };
        Some(kind)
    }

    /// "i:s1:s2:s3" with 0 for absent entries.
    pub fn name(&self) -> String {
        let (a, b, c, d) = self.key();
        format!("{a}:{b}:{c}:{d}")
    }

    pub fn parse(name: &str) -> Option<Self> {
        let parts: Vec<usize> = name.split(':').map(|p| p.parse().ok()).collect::<Option<_>>()?;
        match parts[..] {
            [a, b, c, d] if a != 0 => Some(VehicleState::new(a, b, c, d)),
            _ => None,
        }
    }
}

impl fmt::Display for VehicleState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("state {0} is not part of this network")]
    Invalid(String),
}

/// All states for a grid in deterministic order: zone-major, then kind,
/// then destinations ascending.
#[derive(Debug, Clone)]
pub struct StateSpace {
    states: Vec<VehicleState>,
    kinds: Vec<StateKind>,
    index: HashMap<(usize, usize, usize, usize), usize>,
    zone_start: Vec<usize>,
}

impl StateSpace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[VehicleState] {
        &self.states
    }

    pub fn kind(&self, n: usize) -> StateKind {
        self.kinds[n]
    }

    pub fn state_of(&self, n: usize) -> VehicleState {
        self.states[n]
    }

    pub fn index_of(&self, s: &VehicleState) -> Result<usize, StateError> {
        self.index.get(&s.key()).copied().ok_or_else(|| StateError::Invalid(s.name()))
    }

    /// Index range of states whose current zone is `zone`.
    pub fn zone_range(&self, zone: ZoneId) -> std::ops::Range<usize> {
        self.zone_start[zone.index()]..self.zone_start[zone.index() + 1]
    }
}

pub fn enumerate_states(grid: &ZoneGrid) -> StateSpace {
    let k = grid.len();
    let mut states = Vec::new();
    let mut kinds = Vec::new();
    let mut zone_start = Vec::with_capacity(k + 1);
    for i in 0..k {
        zone_start.push(states.len());
        let z = i + 1;
        let others: Vec<usize> = (1..=k).filter(|&j| j != z).collect();
        let mut push = |s: VehicleState, kind: StateKind| {
            states.push(s);
            kinds.push(kind);
        };
        use StateKind::*;
        push(VehicleState::new(z, 0, 0, 0), Idle);
        push(VehicleState::new(z, z, 0, 0), AssignedEmpty);
        push(VehicleState::new(z, 0, z, 0), SeekerLocal);
        for &j in &others {
            push(VehicleState::new(z, 0, j, 0), SeekerRemote);
        }
        push(VehicleState::new(z, z, z, 0), AssignedWithSeekerLocal);
        for &j in &others {
            push(VehicleState::new(z, z, j, 0), AssignedWithSeekerRemote);
        }
        push(VehicleState::new(z, 0, z, z), FullLocalLocal);
        for &j in &others {
            push(VehicleState::new(z, 0, z, j), FullLocalRemote);
        }
        for &j in &others {
            for &m in grid.omega_far_idx(i, j - 1) {
                push(VehicleState::new(z, 0, j, m + 1), FullRemoteRemote);
            }
        }
        for &j in &others {
            push(VehicleState::new(z, j, 0, 0), Rebalancing);
        }
    }
    zone_start.push(states.len());
    let index = states.iter().enumerate().map(|(n, s)| (s.key(), n)).collect();
    StateSpace { states, kinds, index, zone_start }
}
