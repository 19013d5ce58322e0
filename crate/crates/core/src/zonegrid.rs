//! Zone partition of the service region and the zone sets derived from it.
//!
//! Zones are unit cells of a square lattice. Column indices grow eastward and
//! row indices grow northward. Every set the steady-state equations reference
//! (adjacent zones, direction groups, feasible next zones, and the seeker
//! destination feasible areas) is computed once at construction.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 1-based zone identifier. The dummy zone is represented as `None` wherever
/// a zone may be absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ZoneId(pub usize);

impl ZoneId {
    /// 0-based position in per-zone vectors.
    pub fn index(self) -> usize {
        self.0 - 1
    }

    pub fn from_index(index: usize) -> Self {
        ZoneId(index + 1)
    }
}

impl fmt::Display for ZoneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Compass directions in counter-clockwise order starting from east.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    E,
    NE,
    N,
    NW,
    W,
    SW,
    S,
    SE,
}

impl Direction {
    pub const ALL: [Direction; 8] = [
        Direction::E,
        Direction::NE,
        Direction::N,
        Direction::NW,
        Direction::W,
        Direction::SW,
        Direction::S,
        Direction::SE,
    ];
    pub const CARDINAL: [Direction; 4] = [Direction::E, Direction::N, Direction::W, Direction::S];
    pub const DIAGONAL: [Direction; 4] = [Direction::NE, Direction::NW, Direction::SW, Direction::SE];

    fn ordinal(self) -> usize {
        self as usize
    }

    pub fn is_cardinal(self) -> bool {
        self.ordinal() % 2 == 0
    }

    pub fn is_diagonal(self) -> bool {
        !self.is_cardinal()
    }

    /// The two directions flanking `self` (U^r).
    pub fn adjacent_pair(self) -> [Direction; 2] {
        let k = self.ordinal();
        [Self::ALL[(k + 7) % 8], Self::ALL[(k + 1) % 8]]
    }

    /// Unit lattice offset `(dcol, drow)`.
    pub fn offset(self) -> (i64, i64) {
        match self {
            Direction::E => (1, 0),
            Direction::NE => (1, 1),
            Direction::N => (0, 1),
            Direction::NW => (-1, 1),
            Direction::W => (-1, 0),
            Direction::SW => (-1, -1),
            Direction::S => (0, -1),
            Direction::SE => (1, -1),
        }
    }

    /// Direction of a non-zero lattice displacement.
    pub fn from_displacement(dcol: i64, drow: i64) -> Option<Direction> {
        let d = match (dcol.signum(), drow.signum()) {
            (1, 0) => Direction::E,
            (1, 1) => Direction::NE,
            (0, 1) => Direction::N,
            (-1, 1) => Direction::NW,
            (-1, 0) => Direction::W,
            (-1, -1) => Direction::SW,
            (0, -1) => Direction::S,
            (1, -1) => Direction::SE,
            _ => return None,
        };
        Some(d)
    }

    /// Position of a cardinal direction in `CARDINAL`, used for per-neighbor arrays.
    pub fn cardinal_slot(self) -> Option<usize> {
        Self::CARDINAL.iter().position(|&d| d == self)
    }

    /// Position of a diagonal direction in `DIAGONAL`.
    pub fn diagonal_slot(self) -> Option<usize> {
        Self::DIAGONAL.iter().position(|&d| d == self)
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::E => "E",
            Direction::NE => "NE",
            Direction::N => "N",
            Direction::NW => "NW",
            Direction::W => "W",
            Direction::SW => "SW",
            Direction::S => "S",
            Direction::SE => "SE",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid has no zones")]
    Empty,
    #[error("zone side length must be positive, got {0}")]
    BadSide(f64),
    #[error("zone ids must be 1..{expected} without gaps, found id {found}")]
    BadIds { expected: usize, found: usize },
    #[error("zones {0} and {1} occupy the same cell")]
    DuplicateCell(ZoneId, ZoneId),
    #[error("zones do not form a connected region")]
    Disconnected,
    #[error("region has a hole at cell (row {row}, col {col})")]
    Hole { row: i64, col: i64 },
    #[error("no feasible next zone from zone {from} toward zone {to}")]
    NoFeasiblePath { from: ZoneId, to: ZoneId },
    #[error("unknown zone id {0}")]
    UnknownZone(usize),
    #[error("zone {0} cannot be its own destination here")]
    SameZone(ZoneId),
    #[error("direction {0} is not diagonal")]
    NotDiagonal(Direction),
    #[error("direction {0} is not cardinal")]
    NotCardinal(Direction),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Zone {
    pub id: ZoneId,
    pub row: i64,
    pub col: i64,
}

/// Zone layout with all derived zone sets.
#[derive(Debug, Clone)]
pub struct ZoneGrid {
    zones: Vec<Zone>,
    phi: f64,
    cells: HashMap<(i64, i64), usize>,
    // Per zone, indexed by `Direction::cardinal_slot`.
    neighbors: Vec<[Option<usize>; 4]>,
    // Per zone, indexed by `Direction` ordinal.
    groups: Vec<[Vec<usize>; 8]>,
    // Per zone, indexed by `Direction::diagonal_slot`.
    intra_dest: Vec<[Vec<usize>; 4]>,
    next_zones: Vec<Vec<Vec<usize>>>,
    omega: Vec<Vec<Vec<usize>>>,
    omega_far: Vec<Vec<Vec<usize>>>,
}

impl ZoneGrid {
    /// Full `rows` x `cols` rectangle numbered in reading order: the
    /// north-west zone is 1 and ids increase eastward, then southward.
    pub fn rectangular(rows: usize, cols: usize, phi: f64) -> Result<Self, GridError> {
        let mut cells = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let id = r * cols + c + 1;
                cells.push(Zone { id: ZoneId(id), row: (rows - 1 - r) as i64, col: c as i64 });
            }
        }
        Self::from_zones(cells, phi)
    }

    /// Builds a grid from explicit zone cells, validating ids, cell
    /// uniqueness, simple connectivity, and that every ordered zone pair has
    /// at least one feasible next zone.
    pub fn from_zones(mut zones: Vec<Zone>, phi: f64) -> Result<Self, GridError> {
        if zones.is_empty() {
            return Err(GridError::Empty);
        }
        if !(phi > 0.0 && phi.is_finite()) {
            return Err(GridError::BadSide(phi));
        }
        zones.sort_by_key(|z| z.id);
        let k = zones.len();
        for (pos, z) in zones.iter().enumerate() {
            if z.id.0 != pos + 1 {
                return Err(GridError::BadIds { expected: k, found: z.id.0 });
            }
        }
        let mut cells = HashMap::with_capacity(k);
        for (idx, z) in zones.iter().enumerate() {
            if let Some(prev) = cells.insert((z.row, z.col), idx) {
                return Err(GridError::DuplicateCell(zones[prev].id, z.id));
            }
        }
        check_simply_connected(&zones, &cells)?;

        let mut grid = ZoneGrid {
            zones,
            phi,
            cells,
            neighbors: Vec::new(),
            groups: Vec::new(),
            intra_dest: Vec::new(),
            next_zones: Vec::new(),
            omega: Vec::new(),
            omega_far: Vec::new(),
        };
        grid.derive_sets()?;
        Ok(grid)
    }

    fn derive_sets(&mut self) -> Result<(), GridError> {
        let k = self.zones.len();
        self.neighbors = (0..k)
            .map(|i| {
                let z = self.zones[i];
                let mut nb = [None; 4];
                for (slot, d) in Direction::CARDINAL.iter().enumerate() {
                    let (dc, dr) = d.offset();
                    nb[slot] = self.cells.get(&(z.row + dr, z.col + dc)).copied();
                }
                nb
            })
            .collect();

        self.groups = (0..k)
            .map(|i| {
                let mut g: [Vec<usize>; 8] = Default::default();
                for j in 0..k {
                    if let Some(d) = self.direction_index(i, j) {
                        g[d.ordinal()].push(j);
                    }
                }
                g
            })
            .collect();

        self.intra_dest = (0..k)
            .map(|i| {
                let mut out: [Vec<usize>; 4] = Default::default();
                for (slot, d) in Direction::DIAGONAL.iter().enumerate() {
                    let mut set: Vec<usize> = self.groups[i][d.ordinal()].clone();
                    for side in d.adjacent_pair() {
                        set.extend_from_slice(&self.groups[i][side.ordinal()]);
                    }
                    set.sort_unstable();
                    out[slot] = set;
                }
                out
            })
            .collect();

        self.next_zones = vec![vec![Vec::new(); k]; k];
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    continue;
                }
                let d = self.direction_index(i, j).expect("distinct zones have a direction");
                let mut v: Vec<usize> = if d.is_cardinal() {
                    self.neighbors[i][d.cardinal_slot().unwrap()].into_iter().collect()
                } else {
                    d.adjacent_pair()
                        .iter()
                        .filter_map(|s| self.neighbors[i][s.cardinal_slot().unwrap()])
                        .collect()
                };
                v.sort_unstable();
                if v.is_empty() {
                    return Err(GridError::NoFeasiblePath {
                        from: ZoneId::from_index(i),
                        to: ZoneId::from_index(j),
                    });
                }
                self.next_zones[i][j] = v;
            }
        }

        self.omega = vec![vec![Vec::new(); k]; k];
        self.omega_far = vec![vec![Vec::new(); k]; k];
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    continue;
                }
                for m in 0..k {
                    if m == i || !self.nested_from(i, j, m) {
                        continue;
                    }
                    self.omega[i][j].push(m);
                    if self.steps(i, m) >= self.steps(i, j) {
                        self.omega_far[i][j].push(m);
                    }
                }
            }
        }
        Ok(())
    }

    /// Zero-detour test at the zone level: the displacements from `i` to `j`
    /// and to `m` point into the same closed quadrant, and one of the two is
    /// componentwise no larger than the other.
    fn nested_from(&self, i: usize, j: usize, m: usize) -> bool {
        let (jc, jr) = self.displacement(i, j);
        let (mc, mr) = self.displacement(i, m);
        if jc * mc < 0 || jr * mr < 0 {
            return false;
        }
        let (jc, jr, mc, mr) = (jc.abs(), jr.abs(), mc.abs(), mr.abs());
        (mc <= jc && mr <= jr) || (jc <= mc && jr <= mr)
    }

    fn displacement(&self, i: usize, j: usize) -> (i64, i64) {
        let (a, b) = (self.zones[i], self.zones[j]);
        (b.col - a.col, b.row - a.row)
    }

    fn direction_index(&self, i: usize, j: usize) -> Option<Direction> {
        let (dc, dr) = self.displacement(i, j);
        Direction::from_displacement(dc, dr)
    }

    fn check(&self, id: ZoneId) -> Result<usize, GridError> {
        if id.0 >= 1 && id.0 <= self.zones.len() {
            Ok(id.index())
        } else {
            Err(GridError::UnknownZone(id.0))
        }
    }

    fn to_ids(v: &[usize]) -> Vec<ZoneId> {
        v.iter().map(|&x| ZoneId::from_index(x)).collect()
    }

    pub fn len(&self) -> usize {
        self.zones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }

    /// Zone side length (km).
    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }

    pub fn zone_ids(&self) -> impl Iterator<Item = ZoneId> {
        (1..=self.zones.len()).map(ZoneId)
    }

    pub fn zone_at(&self, row: i64, col: i64) -> Option<ZoneId> {
        self.cells.get(&(row, col)).map(|&i| ZoneId::from_index(i))
    }

    /// Inclusive `(min_row, max_row, min_col, max_col)` of occupied cells.
    pub fn bounds(&self) -> (i64, i64, i64, i64) {
        let rows = self.zones.iter().map(|z| z.row);
        let cols = self.zones.iter().map(|z| z.col);
        (
            rows.clone().min().unwrap(),
            rows.max().unwrap(),
            cols.clone().min().unwrap(),
            cols.max().unwrap(),
        )
    }

    /// A_i^r: the zone one step from `i` in cardinal direction `r`.
    pub fn adjacent_zone(&self, i: ZoneId, r: Direction) -> Result<Option<ZoneId>, GridError> {
        let i = self.check(i)?;
        let slot = r.cardinal_slot().ok_or(GridError::NotCardinal(r))?;
        Ok(self.neighbors[i][slot].map(ZoneId::from_index))
    }

    /// G_i^r: zones lying in direction `r` of zone `i`.
    pub fn direction_group(&self, i: ZoneId, r: Direction) -> Result<Vec<ZoneId>, GridError> {
        let i = self.check(i)?;
        Ok(Self::to_ids(&self.groups[i][r.ordinal()]))
    }

    /// L_ij: rectilinear distance between zone centroids (km).
    pub fn zone_distance(&self, i: ZoneId, j: ZoneId) -> Result<f64, GridError> {
        let (i, j) = (self.check(i)?, self.check(j)?);
        Ok(self.distance_idx(i, j))
    }

    /// Direction in which `j` lies from `i`; `None` when they coincide.
    pub fn direction_between(&self, i: ZoneId, j: ZoneId) -> Result<Option<Direction>, GridError> {
        let (i, j) = (self.check(i)?, self.check(j)?);
        Ok(self.direction_index(i, j))
    }

    /// 𝒱_ij: neighbours a vehicle in `i` bound for `j` may enter next.
    pub fn feasible_next_zones(&self, i: ZoneId, j: ZoneId) -> Result<Vec<ZoneId>, GridError> {
        let (ii, jj) = (self.check(i)?, self.check(j)?);
        if ii == jj {
            return Err(GridError::SameZone(i));
        }
        Ok(Self::to_ids(&self.next_zones[ii][jj]))
    }

    /// Ω_ii^r: seeker destination zones compatible with an intra-zonal
    /// caller travelling in diagonal direction `r`.
    pub fn intra_feasible_dest_zones(&self, i: ZoneId, r: Direction) -> Result<Vec<ZoneId>, GridError> {
        let i = self.check(i)?;
        let slot = r.diagonal_slot().ok_or(GridError::NotDiagonal(r))?;
        Ok(Self::to_ids(&self.intra_dest[i][slot]))
    }

    /// Ω_ij: seeker destination zones compatible with an inter-zonal caller
    /// going from `i` to `j`.
    pub fn inter_feasible_dest_zones(&self, i: ZoneId, j: ZoneId) -> Result<Vec<ZoneId>, GridError> {
        let (ii, jj) = (self.check(i)?, self.check(j)?);
        if ii == jj {
            return Err(GridError::SameZone(i));
        }
        Ok(Self::to_ids(&self.omega[ii][jj]))
    }

    /// Ω̃_ij: the part of Ω_ij no closer to `i` than `j` is.
    pub fn farther_feasible_dest_zones(&self, i: ZoneId, j: ZoneId) -> Result<Vec<ZoneId>, GridError> {
        let (ii, jj) = (self.check(i)?, self.check(j)?);
        if ii == jj {
            return Err(GridError::SameZone(i));
        }
        Ok(Self::to_ids(&self.omega_far[ii][jj]))
    }

    // Index-based accessors used by the equation assembly. All indices are
    // 0-based and unchecked beyond slice bounds.

    pub(crate) fn distance_idx(&self, i: usize, j: usize) -> f64 {
        self.phi * self.steps(i, j) as f64
    }

    pub(crate) fn steps(&self, i: usize, j: usize) -> i64 {
        let (dc, dr) = self.displacement(i, j);
        dc.abs() + dr.abs()
    }

    pub(crate) fn dir_idx(&self, i: usize, j: usize) -> Option<Direction> {
        self.direction_index(i, j)
    }

    pub(crate) fn neighbor_idx(&self, i: usize, slot: usize) -> Option<usize> {
        self.neighbors[i][slot]
    }

    pub(crate) fn group_idx(&self, i: usize, d: Direction) -> &[usize] {
        &self.groups[i][d.ordinal()]
    }

    pub(crate) fn intra_dest_idx(&self, i: usize, diag_slot: usize) -> &[usize] {
        &self.intra_dest[i][diag_slot]
    }

    pub(crate) fn next_idx(&self, i: usize, j: usize) -> &[usize] {
        &self.next_zones[i][j]
    }

    pub(crate) fn omega_idx(&self, i: usize, j: usize) -> &[usize] {
        &self.omega[i][j]
    }

    pub(crate) fn omega_far_idx(&self, i: usize, j: usize) -> &[usize] {
        &self.omega_far[i][j]
    }

    /// Cardinal slot of neighbour `n` as seen from `i`, if adjacent.
    pub(crate) fn slot_of_neighbor(&self, i: usize, n: usize) -> Option<usize> {
        self.neighbors[i].iter().position(|&x| x == Some(n))
    }

    /// Zones ordered by decreasing distance to `j`, excluding `j` itself.
    pub(crate) fn upstream_order(&self, j: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.zones.len()).filter(|&i| i != j).collect();
        order.sort_by_key(|&i| (std::cmp::Reverse(self.steps(i, j)), i));
        order
    }
}

fn check_simply_connected(zones: &[Zone], cells: &HashMap<(i64, i64), usize>) -> Result<(), GridError> {
    const STEPS: [(i64, i64); 4] = [(0, 1), (1, 0), (0, -1), (-1, 0)];

    let mut seen = vec![false; zones.len()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(i) = queue.pop_front() {
        let z = zones[i];
        for (dr, dc) in STEPS {
            if let Some(&n) = cells.get(&(z.row + dr, z.col + dc)) {
                if !seen[n] {
                    seen[n] = true;
                    queue.push_back(n);
                }
            }
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(GridError::Disconnected);
    }

    // Flood the empty cells of the bounding box padded by one; any empty
    // cell the flood cannot reach is enclosed.
    let min_r = zones.iter().map(|z| z.row).min().unwrap() - 1;
    let max_r = zones.iter().map(|z| z.row).max().unwrap() + 1;
    let min_c = zones.iter().map(|z| z.col).min().unwrap() - 1;
    let max_c = zones.iter().map(|z| z.col).max().unwrap() + 1;
    let width = (max_c - min_c + 1) as usize;
    let height = (max_r - min_r + 1) as usize;
    let idx = |r: i64, c: i64| (r - min_r) as usize * width + (c - min_c) as usize;
    let mut outside = vec![false; width * height];
    let mut queue = VecDeque::from([(min_r, min_c)]);
    outside[idx(min_r, min_c)] = true;
    while let Some((r, c)) = queue.pop_front() {
        for (dr, dc) in STEPS {
            let (nr, nc) = (r + dr, c + dc);
            if nr < min_r || nr > max_r || nc < min_c || nc > max_c {
                continue;
            }
            if cells.contains_key(&(nr, nc)) || outside[idx(nr, nc)] {
                continue;
            }
            outside[idx(nr, nc)] = true;
            queue.push_back((nr, nc));
        }
    }
    for r in min_r..=max_r {
        for c in min_c..=max_c {
            if !cells.contains_key(&(r, c)) && !outside[idx(r, c)] {
                return Err(GridError::Hole { row: r, col: c });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(i: usize) -> ZoneId {
        ZoneId(i)
    }

    fn ids(v: &[usize]) -> Vec<ZoneId> {
        v.iter().map(|&i| ZoneId(i)).collect()
    }

    /// The 16-zone irregular region used as the running example, numbered
    /// row by row from the south.
    pub(crate) fn sixteen_zone_region() -> ZoneGrid {
        let cells: [(usize, i64, i64); 16] = [
            (1, 0, 0),
            (2, 0, 1),
            (3, 0, 2),
            (4, 1, 0),
            (5, 1, 1),
            (6, 1, 2),
            (7, 2, 0),
            (8, 2, 1),
            (9, 2, 2),
            (10, 2, 3),
            (11, 3, 0),
            (12, 3, 1),
            (13, 3, 2),
            (14, 3, 3),
            (15, 4, 1),
            (16, 4, 2),
        ];
        let zones = cells
            .iter()
            .map(|&(id, row, col)| Zone { id: ZoneId(id), row, col })
            .collect();
        ZoneGrid::from_zones(zones, 1.0).unwrap()
    }

    fn two_by_two() -> ZoneGrid {
        ZoneGrid::rectangular(2, 2, 1.0).unwrap()
    }

    #[test]
    fn adjacent_zones_of_region_example() {
        let g = sixteen_zone_region();
        assert_eq!(g.adjacent_zone(z(6), Direction::E).unwrap(), None);
        assert_eq!(g.adjacent_zone(z(6), Direction::N).unwrap(), Some(z(9)));
        assert_eq!(g.adjacent_zone(z(6), Direction::W).unwrap(), Some(z(5)));
        assert_eq!(g.adjacent_zone(z(6), Direction::S).unwrap(), Some(z(3)));
    }

    #[test]
    fn adjacent_zone_edge_cases() {
        let single = ZoneGrid::rectangular(1, 1, 2.0).unwrap();
        for d in Direction::CARDINAL {
            assert_eq!(single.adjacent_zone(z(1), d).unwrap(), None);
        }
        let g = two_by_two();
        assert_eq!(g.adjacent_zone(z(1), Direction::E).unwrap(), Some(z(2)));
        assert_eq!(g.adjacent_zone(z(1), Direction::S).unwrap(), Some(z(3)));
        assert_eq!(g.adjacent_zone(z(9), Direction::E), Err(GridError::UnknownZone(9)));
        assert_eq!(g.adjacent_zone(z(1), Direction::NE), Err(GridError::NotCardinal(Direction::NE)));
    }

    #[test]
    fn direction_groups_of_region_example() {
        let g = sixteen_zone_region();
        assert_eq!(g.direction_group(z(8), Direction::E).unwrap(), ids(&[9, 10]));
        assert_eq!(g.direction_group(z(8), Direction::NE).unwrap(), ids(&[13, 14, 16]));
        assert_eq!(two_by_two().direction_group(z(1), Direction::SE).unwrap(), ids(&[4]));
    }

    #[test]
    fn direction_groups_partition_other_zones() {
        for g in [sixteen_zone_region(), ZoneGrid::rectangular(3, 4, 1.0).unwrap()] {
            for i in g.zone_ids() {
                let mut all: Vec<ZoneId> = Direction::ALL
                    .iter()
                    .flat_map(|&d| g.direction_group(i, d).unwrap())
                    .collect();
                all.sort();
                let expected: Vec<ZoneId> = g.zone_ids().filter(|&j| j != i).collect();
                assert_eq!(all, expected, "zone {i}");
            }
        }
    }

    #[test]
    fn distances() {
        let g = sixteen_zone_region();
        assert_eq!(g.zone_distance(z(5), z(13)).unwrap(), 3.0);
        assert_eq!(g.zone_distance(z(13), z(5)).unwrap(), 3.0);
        assert_eq!(g.zone_distance(z(7), z(7)).unwrap(), 0.0);
        let g = ZoneGrid::rectangular(2, 2, 5.0).unwrap();
        assert_eq!(g.zone_distance(z(1), z(4)).unwrap(), 10.0);
    }

    #[test]
    fn flanking_directions() {
        assert_eq!(Direction::E.adjacent_pair(), [Direction::SE, Direction::NE]);
        assert_eq!(Direction::NE.adjacent_pair(), [Direction::E, Direction::N]);
        assert_eq!(Direction::N.adjacent_pair(), [Direction::NE, Direction::NW]);
        assert_eq!(Direction::NW.adjacent_pair(), [Direction::N, Direction::W]);
        assert_eq!(Direction::W.adjacent_pair(), [Direction::NW, Direction::SW]);
        assert_eq!(Direction::SW.adjacent_pair(), [Direction::W, Direction::S]);
        assert_eq!(Direction::S.adjacent_pair(), [Direction::SW, Direction::SE]);
        assert_eq!(Direction::SE.adjacent_pair(), [Direction::S, Direction::E]);
    }

    #[test]
    fn feasible_next_zones_cases() {
        let g = sixteen_zone_region();
        // Straight north: only the northern neighbour.
        assert_eq!(g.feasible_next_zones(z(5), z(12)).unwrap(), ids(&[8]));
        assert_eq!(two_by_two().feasible_next_zones(z(1), z(4)).unwrap(), ids(&[2, 3]));
        let row = ZoneGrid::rectangular(1, 3, 1.0).unwrap();
        assert_eq!(row.feasible_next_zones(z(1), z(3)).unwrap(), ids(&[2]));
        assert_eq!(row.feasible_next_zones(z(2), z(2)), Err(GridError::SameZone(z(2))));
        // A missing eastern neighbour leaves only the northern move.
        assert_eq!(g.feasible_next_zones(z(6), z(10)).unwrap(), ids(&[9]));
    }

    #[test]
    fn intra_destination_sets() {
        let g = sixteen_zone_region();
        let mut expected = g.direction_group(z(8), Direction::E).unwrap();
        expected.extend(g.direction_group(z(8), Direction::NE).unwrap());
        expected.extend(g.direction_group(z(8), Direction::N).unwrap());
        expected.sort();
        assert_eq!(g.intra_feasible_dest_zones(z(8), Direction::NE).unwrap(), expected);

        let single = ZoneGrid::rectangular(1, 1, 1.0).unwrap();
        assert!(single.intra_feasible_dest_zones(z(1), Direction::SW).unwrap().is_empty());
        // 1=NW, 2=NE, 3=SW, 4=SE: south-east of zone 1 covers everything else.
        assert_eq!(two_by_two().intra_feasible_dest_zones(z(1), Direction::SE).unwrap(), ids(&[2, 3, 4]));
        assert_eq!(
            g.intra_feasible_dest_zones(z(1), Direction::E),
            Err(GridError::NotDiagonal(Direction::E))
        );
    }

    #[test]
    fn destination_feasible_areas_of_region_example() {
        let g = sixteen_zone_region();
        assert_eq!(g.inter_feasible_dest_zones(z(5), z(13)).unwrap(), ids(&[6, 8, 9, 12, 13, 14, 16]));
        assert_eq!(g.farther_feasible_dest_zones(z(5), z(13)).unwrap(), ids(&[13, 14, 16]));
        assert_eq!(g.farther_feasible_dest_zones(z(5), z(12)).unwrap(), ids(&[11, 12, 13, 14, 15, 16]));
        assert_eq!(two_by_two().inter_feasible_dest_zones(z(1), z(2)).unwrap(), ids(&[2, 4]));
    }

    #[test]
    fn destination_area_basic_membership() {
        let g = sixteen_zone_region();
        for i in g.zone_ids() {
            for j in g.zone_ids().filter(|&j| j != i) {
                let omega = g.inter_feasible_dest_zones(i, j).unwrap();
                let far = g.farther_feasible_dest_zones(i, j).unwrap();
                assert!(omega.contains(&j));
                assert!(far.contains(&j));
                assert!(!omega.contains(&i));
                assert!(far.iter().all(|m| omega.contains(m)));
            }
        }
    }

    #[test]
    fn next_zones_approach_destination() {
        let g = sixteen_zone_region();
        for i in g.zone_ids() {
            for j in g.zone_ids().filter(|&j| j != i) {
                let l = g.zone_distance(i, j).unwrap();
                for n in g.feasible_next_zones(i, j).unwrap() {
                    assert_eq!(g.zone_distance(n, j).unwrap(), l - g.phi());
                    assert_eq!(g.zone_distance(i, n).unwrap(), g.phi());
                }
            }
        }
    }

    #[test]
    fn rejects_invalid_layouts() {
        assert_eq!(ZoneGrid::rectangular(2, 2, 0.0).unwrap_err(), GridError::BadSide(0.0));
        let zone = |id, row, col| Zone { id: ZoneId(id), row, col };
        assert!(matches!(
            ZoneGrid::from_zones(vec![zone(1, 0, 0), zone(2, 0, 2)], 1.0),
            Err(GridError::Disconnected)
        ));
        assert!(matches!(
            ZoneGrid::from_zones(vec![zone(1, 0, 0), zone(3, 0, 1)], 1.0),
            Err(GridError::BadIds { .. })
        ));
        assert!(matches!(
            ZoneGrid::from_zones(vec![zone(1, 0, 0), zone(2, 0, 0)], 1.0),
            Err(GridError::DuplicateCell(..))
        ));
        // Ring of eight cells around an empty centre.
        let ring: Vec<Zone> = [(0, 0), (0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1), (2, 2)]
            .iter()
            .enumerate()
            .map(|(n, &(r, c))| zone(n + 1, r, c))
            .collect();
        assert_eq!(ZoneGrid::from_zones(ring, 1.0).unwrap_err(), GridError::Hole { row: 1, col: 1 });
        // An L-shape forces a detour between the two arm tips of a U.
        let u: Vec<Zone> = [(0, 0), (0, 1), (0, 2), (1, 0), (1, 2)]
            .iter()
            .enumerate()
            .map(|(n, &(r, c))| zone(n + 1, r, c))
            .collect();
        assert!(matches!(ZoneGrid::from_zones(u, 1.0), Err(GridError::NoFeasiblePath { .. })));
    }
}
