//! Event loop of the operating policy: nearest-suitable assignment, capacity
//! two, closer destination first, zone-level routing by the path fractions
//! and Poisson rebalancing dispatches.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rideshare_core::{Direction, StateKind, VehicleState, ZoneId};

use crate::config::{KindAverage, LogRow, SimConfig, SimError, SimMetrics};

type Pt = (f64, f64);

fn rect(a: Pt, b: Pt) -> f64 {
    (a.0 - b.0).abs() + (a.1 - b.1).abs()
}

const KINDS: [StateKind; 10] = [
    StateKind::Idle,
    StateKind::AssignedEmpty,
    StateKind::SeekerLocal,
    StateKind::SeekerRemote,
    StateKind::AssignedWithSeekerLocal,
    StateKind::AssignedWithSeekerRemote,
    StateKind::FullLocalLocal,
    StateKind::FullLocalRemote,
    StateKind::FullRemoteRemote,
    StateKind::Rebalancing,
];

fn kind_slot(kind: StateKind) -> usize {
    KINDS.iter().position(|&k| k == kind).expect("all kinds listed")
}

/// Zone tables in 0-based indices, flattened for the inner loops.
struct Geometry {
    k: usize,
    phi: f64,
    corner: Vec<Pt>,
    steps: Vec<i64>,
    dir: Vec<Option<Direction>>,
    /// `[(i*K + j)*K + m]`: seeker bound for m suits a caller from i to j.
    omega: Vec<bool>,
    /// `[(i*4 + slot)*K + m]`: seeker bound for m suits an intra-zonal
    /// caller heading in diagonal `slot`.
    intra: Vec<bool>,
    /// Per (i, j): (next zone, fraction, direction of travel).
    next: Vec<Vec<(usize, f64, Direction)>>,
}

impl Geometry {
    fn new(config: &SimConfig) -> Self {
        let grid = config.scenario.grid();
        let k = grid.len();
        let phi = grid.phi();
        let (min_r, _, min_c, _) = grid.bounds();
        let id = ZoneId::from_index;
        let corner = grid.zones().iter().map(|z| ((z.col - min_c) as f64 * phi, (z.row - min_r) as f64 * phi)).collect();
        let mut steps = vec![0; k * k];
        let mut dir = vec![None; k * k];
        let mut omega = vec![false; k * k * k];
        let mut intra = vec![false; k * 4 * k];
        let mut next = vec![Vec::new(); k * k];
        for i in 0..k {
            for (slot, r) in Direction::DIAGONAL.into_iter().enumerate() {
                for m in grid.intra_feasible_dest_zones(id(i), r).unwrap_or_default() {
                    intra[(i * 4 + slot) * k + m.index()] = true;
                }
            }
            for j in 0..k {
                steps[i * k + j] = (grid.zone_distance(id(i), id(j)).unwrap_or(0.0) / phi).round() as i64;
                dir[i * k + j] = grid.direction_between(id(i), id(j)).ok().flatten();
                if i == j {
                    continue;
                }
                for m in grid.inter_feasible_dest_zones(id(i), id(j)).unwrap_or_default() {
                    omega[(i * k + j) * k + m.index()] = true;
                }
                next[i * k + j] = grid
                    .feasible_next_zones(id(i), id(j))
                    .unwrap_or_default()
                    .into_iter()
                    .map(|n| {
                        let f = config.design.fraction(grid, id(i), id(j), n);
                        let d = grid.direction_between(id(i), n).ok().flatten().expect("neighbours differ");
                        (n.index(), f, d)
                    })
                    .collect();
            }
        }
        Geometry { k, phi, corner, steps, dir, omega, intra, next }
    }

    fn random_point(&self, zone: usize, rng: &mut ChaCha8Rng) -> Pt {
        let c = self.corner[zone];
        (c.0 + self.phi * rng.random::<f64>(), c.1 + self.phi * rng.random::<f64>())
    }

    /// Point on the edge toward `d` where the x-then-y path to `dest` leaves
    /// the zone.
    fn exit_point(&self, zone: usize, d: Direction, pos: Pt, dest: Pt) -> Pt {
        let (x0, y0) = self.corner[zone];
        let (x1, y1) = (x0 + self.phi, y0 + self.phi);
        let clamp_x = dest.0.clamp(x0, x1);
        match d {
            Direction::E => (x1, pos.1),
            Direction::W => (x0, pos.1),
            Direction::N => (clamp_x, y1),
            Direction::S => (clamp_x, y0),
            _ => unreachable!("zone crossings are cardinal"),
        }
    }
}

fn diagonal_of(from: Pt, to: Pt) -> Direction {
    let sx = if to.0 >= from.0 { 1 } else { -1 };
    let sy = if to.1 >= from.1 { 1 } else { -1 };
    Direction::from_displacement(sx, sy).expect("non-zero")
}

fn toward(d: Direction, o: Pt, p: Pt) -> bool {
    let (dx, dy) = d.offset();
    (p.0 - o.0) * dx as f64 >= 0.0 && (p.1 - o.1) * dy as f64 >= 0.0
}

#[derive(Debug, Clone)]
struct Pax {
    origin: Pt,
    dest: Pt,
    from: usize,
    to: usize,
    requested: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Goal {
    Pickup,
    Deliver(usize),
    Cross(usize),
    Rebalanced(usize),
}

#[derive(Debug, Clone)]
struct Leg {
    start: Pt,
    end: Pt,
    t0: f64,
    goal: Goal,
}

#[derive(Debug, Clone)]
struct Vehicle {
    zone: usize,
    pos: Pt,
    leg: Option<Leg>,
    assigned: Option<Pax>,
    onboard: Vec<Pax>,
    version: u64,
    slot: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EventKind {
    Caller,
    Dispatch,
    Leg { vehicle: usize, version: u64 },
    End,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    // Reversed so the max-heap pops the earliest event.
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then(other.seq.cmp(&self.seq))
    }
}

/// Cumulative table for drawing an index with probability ∝ weight.
struct Picker {
    cumulative: Vec<f64>,
}

impl Picker {
    fn new(weights: &[f64]) -> Self {
        let mut acc = 0.0;
        Picker { cumulative: weights.iter().map(|w| { acc += w; acc }).collect() }
    }

    fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    fn pick(&self, rng: &mut ChaCha8Rng) -> usize {
        let u = rng.random::<f64>() * self.total();
        let n = self.cumulative.partition_point(|&c| c <= u);
        // Skip zero-weight entries that share the boundary.
        n.min(self.cumulative.len() - 1)
    }
}

struct Sim<'a> {
    cfg: &'a SimConfig,
    g: Geometry,
    speed: f64,
    rng: ChaCha8Rng,
    od: Picker,
    rebalance: Picker,
    now: f64,
    seq: u64,
    heap: BinaryHeap<Event>,
    vehicles: Vec<Vehicle>,
    /// Per zone, vehicles open to a new assignment; `member[v]` is the
    /// (zone, position) of v.
    available: Vec<Vec<usize>>,
    member: Vec<Option<(usize, usize)>>,
    /// Per zone, idle vehicles (rebalancing candidates), same scheme.
    idle: Vec<Vec<usize>>,
    idle_member: Vec<Option<(usize, usize)>>,
    queues: Vec<VecDeque<Pax>>,
    queued: usize,
    counts: Vec<f64>,
    integral: Vec<f64>,
    last: f64,
    // Accounting.
    generated: u64,
    served: u64,
    served_after_warmup: u64,
    d2d_sum: Vec<f64>,
    d2d_n: Vec<u64>,
    pickups: Vec<[u64; 3]>,
    pickup_dist: (f64, u64),
    missed: u64,
    max_queue: usize,
    violations: u64,
    events: u64,
    log: Option<Vec<LogRow>>,
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a SimConfig) -> Self {
        let g = Geometry::new(cfg);
        let k = g.k;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut vehicles = Vec::with_capacity(cfg.fleet);
        for (zone, &n) in cfg.placement.iter().enumerate() {
            for _ in 0..n {
                let pos = g.random_point(zone, &mut rng);
                vehicles.push(Vehicle { zone, pos, leg: None, assigned: None, onboard: Vec::new(), version: 0, slot: 0 });
            }
        }
        let n = vehicles.len();
        let mut sim = Sim {
            cfg,
            speed: cfg.scenario.speed(),
            rng,
            od: Picker::new(&cfg.scenario.demand().iter().map(|l| l * cfg.demand_scale).collect::<Vec<_>>()),
            rebalance: Picker::new(&cfg.rebalance),
            now: 0.0,
            seq: 0,
            heap: BinaryHeap::new(),
            vehicles,
            available: vec![Vec::new(); k],
            member: vec![None; n],
            idle: vec![Vec::new(); k],
            idle_member: vec![None; n],
            queues: vec![VecDeque::new(); k],
            queued: 0,
            counts: vec![0.0; k * KINDS.len()],
            integral: vec![0.0; k * KINDS.len()],
            last: 0.0,
            generated: 0,
            served: 0,
            served_after_warmup: 0,
            d2d_sum: vec![0.0; k * k],
            d2d_n: vec![0; k * k],
            pickups: vec![[0; 3]; k],
            pickup_dist: (0.0, 0),
            missed: 0,
            max_queue: 0,
            violations: 0,
            events: 0,
            log: cfg.event_log.then(Vec::new),
            g,
        };
        for v in 0..n {
            let slot = sim.slot_of(v);
            sim.vehicles[v].slot = slot;
            sim.counts[slot] += 1.0;
            sim.refresh(v);
        }
        sim
    }

    fn push(&mut self, time: f64, kind: EventKind) {
        self.seq += 1;
        self.heap.push(Event { time, seq: self.seq, kind });
    }

    fn state(&self, v: usize) -> VehicleState {
        let veh = &self.vehicles[v];
        let i = veh.zone;
        if let Some(Leg { goal: Goal::Rebalanced(j), .. }) = veh.leg {
            return VehicleState::new(i + 1, j + 1, 0, 0);
        }
        let s1 = if veh.assigned.is_some() { i + 1 } else { 0 };
        let mut dests: Vec<usize> = veh.onboard.iter().map(|p| p.to).collect();
        dests.sort_by_key(|&d| (self.g.steps[i * self.g.k + d], d));
        let s2 = dests.first().map_or(0, |d| d + 1);
        let s3 = dests.get(1).map_or(0, |d| d + 1);
        VehicleState::new(i + 1, s1, s2, s3)
    }

    fn slot_of(&self, v: usize) -> usize {
        let kind = self.state(v).kind().expect("simulated states are network states");
        self.vehicles[v].zone * KINDS.len() + kind_slot(kind)
    }

    /// Re-files `v` in the count, availability and idle tables.
    fn refresh(&mut self, v: usize) {
        let slot = self.slot_of(v);
        let old = self.vehicles[v].slot;
        if slot != old {
            self.counts[old] -= 1.0;
            self.counts[slot] += 1.0;
            self.vehicles[v].slot = slot;
        }
        let veh = &self.vehicles[v];
        let rebalancing = matches!(veh.leg, Some(Leg { goal: Goal::Rebalanced(_), .. }));
        let is_idle = !rebalancing && veh.assigned.is_none() && veh.onboard.is_empty();
        let open = is_idle || (veh.assigned.is_none() && veh.onboard.len() == 1);
        let zone = veh.zone;
        set_member(&mut self.available, &mut self.member, v, open.then_some(zone));
        set_member(&mut self.idle, &mut self.idle_member, v, is_idle.then_some(zone));
    }

    fn integrate(&mut self, t: f64) {
        let from = self.last.max(self.cfg.warmup);
        if t > from {
            let dt = t - from;
            for (acc, c) in self.integral.iter_mut().zip(&self.counts) {
                *acc += c * dt;
            }
        }
        self.last = t;
    }

    fn position(&self, v: usize, t: f64) -> Pt {
        let veh = &self.vehicles[v];
        match &veh.leg {
            None => veh.pos,
            Some(leg) => {
                let d = ((t - leg.t0) * self.speed).clamp(0.0, rect(leg.start, leg.end));
                let dx = (leg.end.0 - leg.start.0).abs();
                if d <= dx {
                    (leg.start.0 + d * (leg.end.0 - leg.start.0).signum(), leg.start.1)
                } else {
                    (leg.end.0, leg.start.1 + (d - dx) * (leg.end.1 - leg.start.1).signum())
                }
            }
        }
    }

    fn start_leg(&mut self, v: usize, end: Pt, goal: Goal) {
        let start = self.position(v, self.now);
        let t1 = self.now + rect(start, end) / self.speed;
        let veh = &mut self.vehicles[v];
        veh.pos = start;
        veh.version += 1;
        veh.leg = Some(Leg { start, end, t0: self.now, goal });
        let version = veh.version;
        self.push(t1, EventKind::Leg { vehicle: v, version });
    }

    fn stop(&mut self, v: usize) {
        let p = self.position(v, self.now);
        let veh = &mut self.vehicles[v];
        veh.pos = p;
        veh.leg = None;
        veh.version += 1;
    }

    /// Chooses the next leg of a serving vehicle, or parks it.
    fn plan(&mut self, v: usize) {
        let veh = &self.vehicles[v];
        let i = veh.zone;
        let k = self.g.k;
        if let Some(p) = &veh.assigned {
            let o = p.origin;
            self.start_leg(v, o, Goal::Pickup);
            return;
        }
        if veh.onboard.is_empty() {
            self.stop(v);
            return;
        }
        let here = self.position(v, self.now);
        let first = (0..veh.onboard.len())
            .min_by(|&a, &b| {
                let (pa, pb) = (&veh.onboard[a], &veh.onboard[b]);
                self.g.steps[i * k + pa.to]
                    .cmp(&self.g.steps[i * k + pb.to])
                    .then(rect(here, pa.dest).total_cmp(&rect(here, pb.dest)))
            })
            .expect("onboard is non-empty");
        let p = &veh.onboard[first];
        if p.to == i {
            let dest = p.dest;
            self.start_leg(v, dest, Goal::Deliver(first));
            return;
        }
        let (to, dest) = (p.to, p.dest);
        let options = &self.g.next[i * k + to];
        let u = self.rng.random::<f64>();
        let mut acc = 0.0;
        let mut choice = options[options.len() - 1];
        for &opt in options {
            acc += opt.1;
            if u < acc {
                choice = opt;
                break;
            }
        }
        let exit = self.g.exit_point(i, choice.2, here, dest);
        self.start_leg(v, exit, Goal::Cross(choice.0));
    }

    fn log(&mut self, event: &'static str, v: usize, before: VehicleState) {
        if self.log.is_some() {
            let after = self.state(v);
            let row = LogRow {
                time: self.now,
                event,
                vehicle: v,
                before: before.name(),
                after: after.name(),
                zone: self.vehicles[v].zone + 1,
            };
            self.log.as_mut().unwrap().push(row);
        }
    }

    /// Whether open vehicle `v` may take caller `p` under the detour rules.
    fn suits(&self, v: usize, p: &Pax) -> bool {
        let veh = &self.vehicles[v];
        let Some(seeker) = veh.onboard.first() else { return true };
        let (i, k) = (p.from, self.g.k);
        let m = seeker.to;
        if p.to == i {
            if m == i {
                crate::oracles::zero_detour(p.origin, p.dest, seeker.dest)
            } else {
                let slot = diagonal_of(p.origin, p.dest).diagonal_slot().expect("diagonal");
                self.g.intra[(i * 4 + slot) * k + m]
            }
        } else if m == i {
            let d = self.g.dir[i * k + p.to].expect("distinct zones");
            toward(d, p.origin, seeker.dest)
        } else {
            self.g.omega[(i * k + p.to) * k + m]
        }
    }

    fn assign(&mut self, v: usize, p: Pax) {
        let before = self.state(v);
        let here = self.position(v, self.now);
        let i = p.from;
        let class = match self.vehicles[v].onboard.first() {
            None => 0,
            Some(s) if s.to == i => 1,
            Some(_) => 2,
        };
        if self.now >= self.cfg.warmup {
            self.pickups[i][class] += 1;
            self.pickup_dist.0 += rect(here, p.origin);
            self.pickup_dist.1 += 1;
        }
        if let (Some(s), true) = (self.vehicles[v].onboard.first(), p.to == i) {
            if s.to == i {
                // Zero detour after pickup: O, the closer destination, then
                // the farther one lie on one monotone path.
                let (a, b) = if rect(p.origin, p.dest) <= rect(p.origin, s.dest) { (p.dest, s.dest) } else { (s.dest, p.dest) };
                if rect(p.origin, a) + rect(a, b) > rect(p.origin, b) + 1e-9 * self.g.phi {
                    self.violations += 1;
                }
            }
        }
        if self.vehicles[v].assigned.is_some() || self.vehicles[v].onboard.len() > 1 {
            self.violations += 1;
        }
        self.vehicles[v].assigned = Some(p);
        self.plan(v);
        self.refresh(v);
        self.log("assign", v, before);
    }

    fn on_caller(&mut self) {
        let k = self.g.k;
        let q = self.od.pick(&mut self.rng);
        let (i, j) = (q / k, q % k);
        let origin = self.g.random_point(i, &mut self.rng);
        let dest = self.g.random_point(j, &mut self.rng);
        let p = Pax { origin, dest, from: i, to: j, requested: self.now };
        self.generated += 1;
        let mut best: Option<(f64, usize)> = None;
        for &v in &self.available[i] {
            if !self.suits(v, &p) {
                continue;
            }
            let d = rect(self.position(v, self.now), origin);
            if best.is_none_or(|(bd, bv)| d < bd || (d == bd && v < bv)) {
                best = Some((d, v));
            }
        }
        match best {
            Some((_, v)) => self.assign(v, p),
            None => {
                self.queues[i].push_back(p);
                self.queued += 1;
                if self.now >= self.cfg.warmup {
                    self.max_queue = self.max_queue.max(self.queued);
                }
            }
        }
    }

    /// Offers a newly open vehicle to the longest-waiting caller it suits.
    fn serve_queue(&mut self, v: usize) {
        let zone = self.vehicles[v].zone;
        if self.member[v].is_none() || self.queues[zone].is_empty() {
            return;
        }
        let hit = (0..self.queues[zone].len()).find(|&n| self.suits(v, &self.queues[zone][n]));
        if let Some(n) = hit {
            let p = self.queues[zone].remove(n).expect("index in range");
            self.queued -= 1;
            self.assign(v, p);
        }
    }

    fn on_dispatch(&mut self) {
        let k = self.g.k;
        let q = self.rebalance.pick(&mut self.rng);
        let (i, j) = (q / k, q % k);
        if self.idle[i].is_empty() {
            self.missed += 1;
            return;
        }
        let v = self.idle[i][self.rng.random_range(0..self.idle[i].len())];
        self.dispatch(v, j);
    }

    fn dispatch(&mut self, v: usize, j: usize) {
        let before = self.state(v);
        let target = self.g.random_point(j, &mut self.rng);
        self.start_leg(v, target, Goal::Rebalanced(j));
        self.refresh(v);
        self.log("rebalance_start", v, before);
    }

    fn on_leg(&mut self, v: usize) {
        let before = self.state(v);
        let goal = self.vehicles[v].leg.as_ref().expect("leg event without a leg").goal;
        let end = self.vehicles[v].leg.as_ref().unwrap().end;
        self.vehicles[v].pos = end;
        self.vehicles[v].leg = None;
        let event = match goal {
            Goal::Pickup => {
                let p = self.vehicles[v].assigned.take().expect("pickup without assignment");
                self.vehicles[v].onboard.push(p);
                if self.vehicles[v].onboard.len() > 2 {
                    self.violations += 1;
                }
                "pickup"
            }
            Goal::Deliver(n) => {
                let p = self.vehicles[v].onboard.remove(n);
                self.served += 1;
                if self.now >= self.cfg.warmup {
                    self.served_after_warmup += 1;
                    let q = p.from * self.g.k + p.to;
                    self.d2d_sum[q] += self.now - p.requested;
                    self.d2d_n[q] += 1;
                }
                "deliver"
            }
            Goal::Cross(n) => {
                let k = self.g.k;
                let old = self.vehicles[v].zone;
                for p in &self.vehicles[v].onboard {
                    if self.g.steps[n * k + p.to] != self.g.steps[old * k + p.to] - 1 {
                        self.violations += 1;
                    }
                }
                self.vehicles[v].zone = n;
                "cross"
            }
            Goal::Rebalanced(j) => {
                self.vehicles[v].zone = j;
                "rebalance_end"
            }
        };
        self.plan(v);
        self.refresh(v);
        self.log(event, v, before);
        self.serve_queue(v);
    }
}

fn set_member(lists: &mut [Vec<usize>], member: &mut [Option<(usize, usize)>], v: usize, want: Option<usize>) {
    if member[v].map(|(z, _)| z) == want {
        return;
    }
    if let Some((z, pos)) = member[v].take() {
        lists[z].swap_remove(pos);
        if let Some(&moved) = lists[z].get(pos) {
            member[moved] = Some((z, pos));
        }
    }
    if let Some(z) = want {
        member[v] = Some((z, lists[z].len()));
        lists[z].push(v);
    }
}

/// One replication: post-warmup averages and, if requested, the event log.
pub fn run_discrete_event_logged(config: &SimConfig) -> Result<(SimMetrics, Vec<LogRow>), SimError> {
    config.validate()?;
    let mut sim = Sim::new(config);
    let caller_rate = sim.od.total();
    let dispatch_rate = sim.rebalance.total();
    if caller_rate > 0.0 {
        let t = Exp::new(caller_rate).expect("positive rate").sample(&mut sim.rng);
        sim.push(t, EventKind::Caller);
    }
    if dispatch_rate > 0.0 {
        let t = Exp::new(dispatch_rate).expect("positive rate").sample(&mut sim.rng);
        sim.push(t, EventKind::Dispatch);
    }
    sim.push(config.horizon, EventKind::End);

    while let Some(ev) = sim.heap.pop() {
        if let EventKind::Leg { vehicle, version } = ev.kind {
            if sim.vehicles[vehicle].version != version {
                continue;
            }
        }
        sim.integrate(ev.time);
        sim.now = ev.time;
        sim.events += 1;
        match ev.kind {
            EventKind::End => break,
            EventKind::Caller => {
                sim.on_caller();
                let t = sim.now + Exp::new(caller_rate).expect("positive rate").sample(&mut sim.rng);
                sim.push(t, EventKind::Caller);
            }
            EventKind::Dispatch => {
                sim.on_dispatch();
                let t = sim.now + Exp::new(dispatch_rate).expect("positive rate").sample(&mut sim.rng);
                sim.push(t, EventKind::Dispatch);
            }
            EventKind::Leg { vehicle, .. } => sim.on_leg(vehicle),
        }
    }
    Ok(sim.finish())
}

impl Sim<'_> {
    fn finish(self) -> (SimMetrics, Vec<LogRow>) {
        let k = self.g.k;
        let hours = self.cfg.horizon - self.cfg.warmup;
        let states: Vec<KindAverage> = KINDS
            .iter()
            .enumerate()
            .map(|(n, &kind)| {
                let per_zone: Vec<f64> = (0..k).map(|z| self.integral[z * KINDS.len() + n] / hours).collect();
                let total = per_zone.iter().sum();
                KindAverage { kind, per_zone, total }
            })
            .collect();
        let idle_vehicles = states[0].total;
        let busy_vehicles = states.iter().skip(1).map(|s| s.total).sum();
        let door_to_door_by_od =
            self.d2d_sum.iter().zip(&self.d2d_n).map(|(s, &n)| (n > 0).then(|| s / n as f64)).collect();
        let total_n: u64 = self.d2d_n.iter().sum();
        let mean_door_to_door = if total_n > 0 { self.d2d_sum.iter().sum::<f64>() / total_n as f64 } else { 0.0 };
        let pickup_shares = self
            .pickups
            .iter()
            .map(|c| {
                let n: u64 = c.iter().sum();
                if n == 0 {
                    [0.0; 3]
                } else {
                    c.map(|x| x as f64 / n as f64)
                }
            })
            .collect();
        let in_service: usize =
            self.vehicles.iter().map(|v| v.onboard.len() + usize::from(v.assigned.is_some())).sum();
        let metrics = SimMetrics {
            fleet: self.cfg.fleet,
            hours,
            states,
            busy_vehicles,
            idle_vehicles,
            door_to_door_by_od,
            mean_door_to_door,
            served_rate: self.served_after_warmup as f64 / hours,
            generated: self.generated,
            served: self.served,
            queued: self.queued as u64,
            in_service: in_service as u64,
            pickup_shares,
            mean_pickup_distance: if self.pickup_dist.1 > 0 { self.pickup_dist.0 / self.pickup_dist.1 as f64 } else { 0.0 },
            missed_dispatches: self.missed,
            max_queue: self.max_queue,
            starved: self.max_queue > self.cfg.starvation_queue,
            rule_violations: self.violations,
            events: self.events,
        };
        (metrics, self.log.unwrap_or_default())
    }
}

pub fn run_discrete_event(config: &SimConfig) -> Result<SimMetrics, SimError> {
    run_discrete_event_logged(config).map(|(m, _)| m)
}

/// Independent replications with seeds `seed, seed+1, ...`, spread over
/// `workers` threads and merged.
pub fn run_replications(config: &SimConfig, replications: usize, workers: usize) -> Result<SimMetrics, SimError> {
    config.validate()?;
    let reps = replications.max(1);
    let workers = workers.clamp(1, reps);
    let mut results: Vec<Option<Result<SimMetrics, SimError>>> = (0..reps).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    (w..reps)
                        .step_by(workers)
                        .map(|r| {
                            let cfg = SimConfig { seed: config.seed.wrapping_add(r as u64), ..config.clone() };
                            (r, run_discrete_event(&cfg))
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (r, out) in h.join().expect("replication thread panicked") {
                results[r] = Some(out);
            }
        }
    });
    let runs: Vec<SimMetrics> = results.into_iter().map(|r| r.expect("every replication ran")).collect::<Result<_, _>>()?;
    Ok(SimMetrics::merge(&runs).expect("at least one replication"))
}
