//! Monte-Carlo estimates of the geometric constants used by the analytic
//! model. All coordinates are in units of the zone side, on the unit square.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: usize,
}

impl Estimate {
    fn from_moments(sum: f64, sum_sq: f64, n: usize) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let var = ((sum_sq / nf - mean * mean) * nf / (nf - 1.0).max(1.0)).max(0.0);
        Estimate { mean, std_err: (var / nf).sqrt(), samples: n }
    }

    pub fn rel_err(&self, expected: f64) -> f64 {
        (self.mean - expected).abs() / expected.abs()
    }
}

fn estimate(samples: usize, mut draw: impl FnMut() -> f64) -> Estimate {
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..samples {
        let v = draw();
        s += v;
        s2 += v * v;
    }
    Estimate::from_moments(s, s2, samples)
}

type Pt = (f64, f64);

fn uniform(rng: &mut ChaCha8Rng) -> Pt {
    (rng.random(), rng.random())
}

fn rect(a: Pt, b: Pt) -> f64 {
    (a.0 - b.0).abs() + (a.1 - b.1).abs()
}

/// `p` lies in the closed quadrant of `o` that contains `d`.
fn same_quadrant(o: Pt, d: Pt, p: Pt) -> bool {
    (p.0 - o.0) * (d.0 - o.0) >= 0.0 && (p.1 - o.1) * (d.1 - o.1) >= 0.0
}

/// Zero-detour test for an intra-zonal caller O→D and a seeker bound for S
/// in the same zone: S lies in the caller's quadrant from O and is
/// componentwise comparable with D, so one monotone path visits O, then
/// both destinations.
pub fn zero_detour(o: Pt, d: Pt, s: Pt) -> bool {
    if !same_quadrant(o, d, s) {
        return false;
    }
    let beyond = (s.0 - d.0) * (d.0 - o.0) >= 0.0 && (s.1 - d.1) * (d.1 - o.1) >= 0.0;
    let before = (d.0 - s.0) * (s.0 - o.0) >= 0.0 && (d.1 - s.1) * (s.1 - o.1) >= 0.0;
    beyond || before
}

/// Fraction of seeker destinations that pass [`zero_detour`] for a random
/// intra-zonal caller.
pub fn mc_intra_feasible_fraction(samples: usize, seed: u64) -> Estimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    estimate(samples, || {
        let (o, d, s) = (uniform(&mut rng), uniform(&mut rng), uniform(&mut rng));
        f64::from(u8::from(zero_detour(o, d, s)))
    })
}

/// As [`mc_intra_feasible_fraction`] with the caller and seeker
/// destinations exchanged in the predicate.
pub fn mc_intra_feasible_fraction_swapped(samples: usize, seed: u64) -> Estimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    estimate(samples, || {
        let (o, d, s) = (uniform(&mut rng), uniform(&mut rng), uniform(&mut rng));
        f64::from(u8::from(zero_detour(o, s, d)))
    })
}

/// The zero-detour fraction with the caller bound for the far corner of its
/// quadrant: every point between O and the corner qualifies.
pub fn mc_intra_corner_fraction(samples: usize, seed: u64) -> Estimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    estimate(samples, || {
        let (o, s) = (uniform(&mut rng), uniform(&mut rng));
        f64::from(u8::from(zero_detour(o, (1.0, 1.0), s)))
    })
}

/// Share of a zone lying toward the caller's destination zone from the
/// caller's origin: (aligned destination, diagonal destination). `pin`
/// fixes the origin at the zone corner opposite that direction.
pub fn mc_case4_fractions(samples: usize, seed: u64, pin: bool) -> (Estimate, Estimate) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cardinal = (0.0, 0.0);
    let mut diagonal = (0.0, 0.0);
    for _ in 0..samples {
        let (o, s) = (uniform(&mut rng), uniform(&mut rng));
        // Southbound caller: seeker destinations south of the origin.
        let y0 = if pin { 1.0 } else { o.1 };
        let c = f64::from(u8::from(s.1 <= y0));
        // North-east caller.
        let o = if pin { (0.0, 0.0) } else { o };
        let d = f64::from(u8::from(s.0 >= o.0 && s.1 >= o.1));
        cardinal.0 += c;
        cardinal.1 += c * c;
        diagonal.0 += d;
        diagonal.1 += d * d;
    }
    (Estimate::from_moments(cardinal.0, cardinal.1, samples), Estimate::from_moments(diagonal.0, diagonal.1, samples))
}

/// [`mc_case4_fractions`] with antithetic pairs (u, 1-u); each pair
/// contributes one averaged sample.
pub fn mc_case4_fractions_antithetic(samples: usize, seed: u64) -> (Estimate, Estimate) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = samples / 2;
    let mut cardinal = (0.0, 0.0);
    let mut diagonal = (0.0, 0.0);
    for _ in 0..pairs {
        let u: [f64; 4] = [rng.random(), rng.random(), rng.random(), rng.random()];
        let mut c = 0.0;
        let mut d = 0.0;
        for flip in [false, true] {
            let v = u.map(|x| if flip { 1.0 - x } else { x });
            c += f64::from(u8::from(v[3] <= v[1])) / 2.0;
            d += f64::from(u8::from(v[2] >= v[0] && v[3] >= v[1])) / 2.0;
        }
        cardinal.0 += c;
        cardinal.1 += c * c;
        diagonal.0 += d;
        diagonal.1 += d * d;
    }
    (Estimate::from_moments(cardinal.0, cardinal.1, pairs), Estimate::from_moments(diagonal.0, diagonal.1, pairs))
}

/// Length of an axis-aligned polyline that lies inside the unit square.
pub fn length_inside(path: &[Pt]) -> f64 {
    path.windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            if a.1 == b.1 {
                if !(0.0..=1.0).contains(&a.1) {
                    return 0.0;
                }
                let (lo, hi) = (a.0.min(b.0).max(0.0), a.0.max(b.0).min(1.0));
                (hi - lo).max(0.0)
            } else {
                if !(0.0..=1.0).contains(&a.0) {
                    return 0.0;
                }
                let (lo, hi) = (a.1.min(b.1).max(0.0), a.1.max(b.1).min(1.0));
                (hi - lo).max(0.0)
            }
        })
        .sum()
}

/// Expected distance to the nearest point of a planar Poisson process with
/// `density` points per unit area, measured rectilinearly. The plane is
/// explored in growing squares around the query point until the nearest
/// point found is closer than the explored half-width.
pub fn nearest_poisson_distance(rng: &mut ChaCha8Rng, density: f64) -> f64 {
    let q = uniform(rng);
    let mut half = 1.5 / density.sqrt();
    let mut inner = 0.0f64;
    let mut best = f64::INFINITY;
    loop {
        let area = 4.0 * (half * half - inner * inner);
        let count = Poisson::new(density * area).map(|p| p.sample(rng) as u64).unwrap_or(0);
        for _ in 0..count {
            let p = loop {
                let p = (q.0 + half * (2.0 * rng.random::<f64>() - 1.0), q.1 + half * (2.0 * rng.random::<f64>() - 1.0));
                if (p.0 - q.0).abs() >= inner || (p.1 - q.1).abs() >= inner {
                    break p;
                }
            };
            best = best.min(rect(p, q));
        }
        if best <= half {
            return best;
        }
        inner = half;
        half *= 2.0;
    }
}

/// Expected distances (units of the zone side) behind the Little's-law
/// counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceTable {
    /// Boundary point to the closer of two interior points.
    pub boundary_min_of_two: Estimate,
    /// Interior point to interior point.
    pub interior_interior: Estimate,
    /// Boundary point to interior point, lateral movement included.
    pub boundary_interior: Estimate,
    /// Interior point to a uniform point of its quadrant toward the trip.
    pub nested_first_leg: Estimate,
    /// Interior point straight out to a zone edge.
    pub interior_boundary: Estimate,
    /// Entering on one edge and leaving through the opposite one.
    pub boundary_through: Estimate,
    /// (N, nearest of a density-N field of vehicles).
    pub nearest: Vec<(usize, Estimate)>,
}

pub const NEAREST_COUNTS: [usize; 3] = [1, 4, 16];

pub fn mc_expected_distances(samples: usize, seed: u64) -> DistanceTable {
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let mut sub = || ChaCha8Rng::seed_from_u64(seeds.random());

    let mut rng = sub();
    let boundary_min_of_two = estimate(samples, || {
        let p0 = (rng.random::<f64>(), 0.0);
        rect(p0, uniform(&mut rng)).min(rect(p0, uniform(&mut rng)))
    });
    let mut rng = sub();
    let interior_interior = estimate(samples, || rect(uniform(&mut rng), uniform(&mut rng)));
    let mut rng = sub();
    let boundary_interior = estimate(samples, || rect((rng.random::<f64>(), 0.0), uniform(&mut rng)));
    let mut rng = sub();
    let nested_first_leg = estimate(samples, || {
        let o = uniform(&mut rng);
        // Uniform point of the north-east quadrant of o.
        let p = (o.0 + (1.0 - o.0) * rng.random::<f64>(), o.1 + (1.0 - o.1) * rng.random::<f64>());
        rect(o, p)
    });
    let mut rng = sub();
    let interior_boundary = estimate(samples, || {
        let o = uniform(&mut rng);
        length_inside(&[o, (o.0, 1.0)])
    });
    let mut rng = sub();
    let boundary_through = estimate(samples, || {
        // Enter on the south edge bound for a point in the zone beyond the
        // north edge; lateral movement is deferred until after the zone.
        let entry = (rng.random::<f64>(), 0.0);
        let dest = (rng.random::<f64>(), 1.0 + rng.random::<f64>());
        length_inside(&[entry, (entry.0, dest.1), dest])
    });
    let nearest = NEAREST_COUNTS
        .iter()
        .map(|&n| {
            let mut rng = sub();
            (n, estimate(samples, || nearest_poisson_distance(&mut rng, n as f64)))
        })
        .collect();
    DistanceTable {
        boundary_min_of_two,
        interior_interior,
        boundary_interior,
        nested_first_leg,
        interior_boundary,
        boundary_through,
        nearest,
    }
}

/// One line of the constants table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub name: String,
    pub expected: f64,
    pub estimate: Estimate,
    pub rel_err: f64,
    pub pass: bool,
}

/// Every constant the analytic model uses, against its Monte-Carlo
/// estimate, passing when the relative error is within `tol`.
pub fn oracle_table(samples: usize, seed: u64, tol: f64) -> Vec<OracleRow> {
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let (cardinal, diagonal) = mc_case4_fractions(samples, seeds.random(), false);
    let d = mc_expected_distances(samples, seeds.random());
    let mut rows: Vec<(String, f64, Estimate)> = vec![
        ("intra-zonal zero-detour area".into(), 2.0 / 9.0, mc_intra_feasible_fraction(samples, seeds.random())),
        ("local seekers, diagonal caller".into(), 0.25, diagonal),
        ("local seekers, aligned caller".into(), 0.5, cardinal),
        ("boundary to closer of two points".into(), 5.0 / 8.0, d.boundary_min_of_two),
        ("interior to interior".into(), 2.0 / 3.0, d.interior_interior),
        ("boundary to interior".into(), 5.0 / 6.0, d.boundary_interior),
        ("nested first delivery".into(), 0.5, d.nested_first_leg),
        ("interior to edge".into(), 0.5, d.interior_boundary),
        ("pass-through".into(), 1.0, d.boundary_through),
    ];
    for (n, e) in d.nearest {
        rows.push((format!("nearest of {n}"), 0.63 / (n as f64).sqrt(), e));
    }
    rows.into_iter()
        .map(|(name, expected, estimate)| {
            let rel_err = estimate.rel_err(expected);
            OracleRow { name, expected, estimate, rel_err, pass: rel_err <= tol }
        })
        .collect()
}
