//! Grid covers of the sphere and a hierarchical index over them.
//!
//! Points live on the unit sphere centred at the origin. The index is an
//! equal-angle cube map: each face is cut by great circles into `2^K x 2^K`
//! leaves, and each level keeps per-cell counts of active points so that
//! nearest-active and range queries skip empty regions.

use std::f64::consts::FRAC_PI_4;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::geometry::{v3, RadiusSchedule, SpherePoint};

/// Chord length for a geodesic angle on the unit sphere.
pub fn chord(angle: f64) -> f64 {
    2.0 * (angle.min(std::f64::consts::PI) / 2.0).sin()
}

/// Geodesic angle for a chord length.
pub fn chord_angle(c: f64) -> f64 {
    2.0 * (c / 2.0).min(1.0).asin()
}

fn chord2(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d = v3::sub(a, b);
    v3::dot(d, d)
}

/// `n` points of the Fibonacci lattice.
pub fn fibonacci_points(n: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

fn face_of(u: [f64; 3]) -> (usize, f64, f64) {
    let ax = [u[0].abs(), u[1].abs(), u[2].abs()];
    let (axis, (j, k)) = if ax[0] >= ax[1] && ax[0] >= ax[2] {
        (0, (1, 2))
    } else if ax[1] >= ax[2] {
        (1, (2, 0))
    } else {
        (2, (0, 1))
    };
    let m = u[axis].abs();
    let face = 2 * axis + usize::from(u[axis] < 0.0);
    (face, u[j] / m, u[k] / m)
}

fn face_direction(face: usize, a: f64, b: f64) -> [f64; 3] {
    let axis = face / 2;
    let sign = if face.is_multiple_of(2) { 1.0 } else { -1.0 };
    let (j, k) = [(1, 2), (2, 0), (0, 1)][axis];
    let mut v = [0.0; 3];
    v[axis] = sign;
    v[j] = a;
    v[k] = b;
    v3::normalize(v)
}

/// Equal-angle coordinate in `[0, 1]` for a gnomonic face coordinate.
fn warp(a: f64) -> f64 {
    (a.atan() / FRAC_PI_4 + 1.0) / 2.0
}

fn unwarp(s: f64) -> f64 {
    (FRAC_PI_4 * (2.0 * s - 1.0)).tan()
}

/// Static cube-map index over a fixed point set.
#[derive(Debug, Clone)]
pub struct CubeIndex {
    depth: u32,
    /// Points in leaf order.
    units: Vec<[f64; 3]>,
    /// Original index of each stored point.
    original: Vec<u32>,
    /// CSR offsets into `units`, one per leaf plus a sentinel.
    leaf_start: Vec<u32>,
    /// Cell counts per level, with every point active.
    full_counts: Vec<Vec<u32>>,
    /// Upper bound on the angle from a level's cell centre to its corners.
    cell_radius: Vec<f64>,
    /// `(cos, sin)` of `cell_radius`.
    cell_trig: Vec<(f64, f64)>,
    /// Cell centres per level, indexed by cell id.
    centres: Vec<Vec<[f64; 3]>>,
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    level: u32,
    face: usize,
    i: usize,
    j: usize,
}

impl Cell {
    fn id(&self) -> usize {
        let side = 1usize << self.level;
        self.face * side * side + self.i * side + self.j
    }

    fn centre(&self) -> [f64; 3] {
        let side = (1u64 << self.level) as f64;
        face_direction(self.face, unwarp((self.i as f64 + 0.5) / side), unwarp((self.j as f64 + 0.5) / side))
    }
}

impl CubeIndex {
    /// Builds an index whose leaves hold a few points each.
    pub fn new(units: &[[f64; 3]]) -> Self {
        let n = units.len().max(1) as f64;
        let depth = ((n / 24.0).ln() / 4f64.ln()).ceil().clamp(0.0, 11.0) as u32;
        Self::with_depth(units, depth)
    }

    pub fn with_depth(units: &[[f64; 3]], depth: u32) -> Self {
        let side = 1usize << depth;
        let leaves = 6 * side * side;
        let leaf_of = |u: [f64; 3]| {
            let (face, a, b) = face_of(u);
            let i = ((warp(a) * side as f64) as usize).min(side - 1);
            let j = ((warp(b) * side as f64) as usize).min(side - 1);
            Cell { level: depth, face, i, j }.id()
        };
        let keys: Vec<usize> = units.iter().map(|&u| leaf_of(u)).collect();
        let mut order: Vec<u32> = (0..units.len() as u32).collect();
        order.sort_by_key(|&k| keys[k as usize]);
        let mut leaf_start = vec![0u32; leaves + 1];
        for &k in &keys {
            leaf_start[k + 1] += 1;
        }
        for c in 0..leaves {
            leaf_start[c + 1] += leaf_start[c];
        }
        let mut full_counts: Vec<Vec<u32>> = (0..=depth).map(|l| vec![0u32; 6 << (2 * l)]).collect();
        for &k in &keys {
            let (face, rest) = (k / (side * side), k % (side * side));
            let (i, j) = (rest / side, rest % side);
            for l in 0..=depth {
                let shift = depth - l;
                full_counts[l as usize][Cell { level: l, face, i: i >> shift, j: j >> shift }.id()] += 1;
            }
        }
        // Cells are bounded by great circles, so the farthest point of a cell
        // from its centre is a corner.
        let mut centres = Vec::with_capacity(depth as usize + 1);
        let mut cell_radius = Vec::with_capacity(depth as usize + 1);
        for l in 0..=depth {
            let side = 1usize << l;
            let mut cs = vec![[0.0; 3]; 6 * side * side];
            let mut worst: f64 = 0.0;
            for face in 0..6 {
                for i in 0..side {
                    for j in 0..side {
                        let cell = Cell { level: l, face, i, j };
                        let c = cell.centre();
                        cs[cell.id()] = c;
                        for (di, dj) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                            let corner = face_direction(
                                face,
                                unwarp((i + di) as f64 / side as f64),
                                unwarp((j + dj) as f64 / side as f64),
                            );
                            worst = worst.max(v3::angle(c, corner));
                        }
                    }
                }
            }
            centres.push(cs);
            cell_radius.push(worst + 1e-9);
        }
        Self {
            depth,
            units: order.iter().map(|&k| units[k as usize]).collect(),
            original: order,
            leaf_start,
            full_counts,
            cell_trig: cell_radius.iter().map(|r: &f64| (r.cos(), r.sin())).collect(),
            cell_radius,
            centres,
        }
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Largest angle from a level-`level` cell centre to any point of the cell.
    pub fn cell_radius(&self, level: u32) -> f64 {
        self.cell_radius[level as usize]
    }

    /// Original index of the point stored at slot `slot`.
    pub fn original_index(&self, slot: usize) -> usize {
        self.original[slot] as usize
    }

    pub fn unit(&self, slot: usize) -> [f64; 3] {
        self.units[slot]
    }

    /// Upper bound on `q . u` over points `u` of the cell, i.e. the cosine of
    /// a lower bound on their angle from `q`.
    fn cos_bound(&self, q: [f64; 3], level: u32, id: usize) -> f64 {
        let l = level as usize;
        let c = v3::dot(q, self.centres[l][id]);
        let (cr, sr) = self.cell_trig[l];
        let s = (1.0 - c * c).max(0.0).sqrt();
        // cos(theta - R) while theta > R, else 1
        if c >= cr {
            1.0
        } else {
            c * cr + s * sr
        }
    }

    fn children(cell: &Cell) -> impl Iterator<Item = Cell> + '_ {
        (0..4).map(move |c| Cell { level: cell.level + 1, face: cell.face, i: 2 * cell.i + c / 2, j: 2 * cell.j + c % 2 })
    }
}

type Entry = (u32, usize, usize, usize, f64);

/// Pushes `items` so that the largest bound ends on top.
fn push_sorted(stack: &mut [Entry], top: &mut usize, items: &mut [Entry]) {
    items.sort_unstable_by(|x, y| x.4.total_cmp(&y.4));
    for &it in items.iter() {
        stack[*top] = it;
        *top += 1;
    }
}

/// Per-trial activity flags over a [`CubeIndex`].
#[derive(Debug, Clone)]
pub struct ActiveSet {
    active: Vec<bool>,
    counts: Vec<Vec<u32>>,
    remaining: usize,
}

impl ActiveSet {
    /// Every point active.
    pub fn full(index: &CubeIndex) -> Self {
        Self { active: vec![true; index.len()], counts: index.full_counts.clone(), remaining: index.len() }
    }

    /// Reactivates everything without reallocating.
    pub fn reset(&mut self, index: &CubeIndex) {
        self.active.iter_mut().for_each(|a| *a = true);
        for (c, f) in self.counts.iter_mut().zip(&index.full_counts) {
            c.copy_from_slice(f);
        }
        self.remaining = index.len();
    }

    pub fn remaining(&self) -> usize {
        self.remaining
    }

    pub fn is_active(&self, slot: usize) -> bool {
        self.active[slot]
    }

    fn deactivate(&mut self, index: &CubeIndex, slot: usize) {
        if !self.active[slot] {
            return;
        }
        self.active[slot] = false;
        self.remaining -= 1;
        let side = 1usize << index.depth;
        let leaf = index.leaf_start.partition_point(|&s| s as usize <= slot) - 1;
        let (face, rest) = (leaf / (side * side), leaf % (side * side));
        let (i, j) = (rest / side, rest % side);
        for l in 0..=index.depth {
            let shift = index.depth - l;
            self.counts[l as usize][Cell { level: l, face, i: i >> shift, j: j >> shift }.id()] -= 1;
        }
    }

    /// Nearest active point as `(slot, geodesic angle)`.
    pub fn nearest(&self, index: &CubeIndex, q: [f64; 3]) -> Option<(usize, f64)> {
        self.nearest_from(index, q, None)
    }

    /// As [`ActiveSet::nearest`], seeded with a candidate slot (typically the
    /// previous answer) whose distance prunes the search.
    pub fn nearest_from(&self, index: &CubeIndex, q: [f64; 3], hint: Option<usize>) -> Option<(usize, f64)> {
        if self.remaining == 0 {
            return None;
        }
        // Points are compared by squared chord, cells by an upper bound on the
        // dot product, which is `1 - chord^2 / 2`.
        let mut best: Option<usize> = None;
        let mut best_chord2 = f64::INFINITY;
        if let Some(h) = hint.filter(|&h| h < self.active.len() && self.active[h]) {
            best = Some(h);
            best_chord2 = chord2(q, index.units[h]);
        }
        // Depth-first, nearest child first. Each level adds at most four
        // entries, so a fixed stack suffices.
        let mut stack: [Entry; 6 + 4 * 32] = [(0, 0, 0, 0, 0.0); 6 + 4 * 32];
        let mut top = 0;
        let mut items: [Entry; 6] = [(0, 0, 0, 0, 0.0); 6];
        let mut n = 0;
        for face in 0..6 {
            if self.counts[0][face] > 0 {
                items[n] = (0, face, 0, 0, index.cos_bound(q, 0, face));
                n += 1;
            }
        }
        push_sorted(&mut stack, &mut top, &mut items[..n]);
        while top > 0 {
            top -= 1;
            let (level, face, i, j, bound) = stack[top];
            if best.is_some() && bound <= 1.0 - best_chord2 / 2.0 {
                continue;
            }
            let cell = Cell { level, face, i, j };
            if level == index.depth {
                let id = cell.id();
                for slot in index.leaf_start[id] as usize..index.leaf_start[id + 1] as usize {
                    if self.active[slot] {
                        let c2 = chord2(q, index.units[slot]);
                        if c2 < best_chord2 || (c2 == best_chord2 && best.is_some_and(|s| slot < s)) {
                            best_chord2 = c2;
                            best = Some(slot);
                        }
                    }
                }
                continue;
            }
            let mut n = 0;
            for child in CubeIndex::children(&cell) {
                let id = child.id();
                if self.counts[child.level as usize][id] > 0 {
                    let b = index.cos_bound(q, child.level, id);
                    if best.is_none() || b > 1.0 - best_chord2 / 2.0 {
                        items[n] = (child.level, child.face, child.i, child.j, b);
                        n += 1;
                    }
                }
            }
            push_sorted(&mut stack, &mut top, &mut items[..n]);
        }
        best.map(|s| (s, chord_angle(best_chord2.sqrt())))
    }

    /// Deactivates every active point within geodesic `radius` of `q`,
    /// returning how many were removed.
    pub fn deactivate_within(&mut self, index: &CubeIndex, q: [f64; 3], radius: f64) -> usize {
        let mut hits = Vec::new();
        self.collect_within(index, q, radius, &mut hits);
        let n = hits.len();
        for slot in hits {
            self.deactivate(index, slot);
        }
        n
    }

    /// Slots of active points within geodesic `radius` of `q`, ascending.
    pub fn collect_within(&self, index: &CubeIndex, q: [f64; 3], radius: f64, out: &mut Vec<usize>) {
        out.clear();
        let c2max = chord(radius).powi(2);
        let cos_r = radius.min(std::f64::consts::PI).cos() - 1e-12;
        let mut stack: Vec<Cell> = (0..6).map(|face| Cell { level: 0, face, i: 0, j: 0 }).collect();
        while let Some(cell) = stack.pop() {
            let id = cell.id();
            if self.counts[cell.level as usize][id] == 0 || index.cos_bound(q, cell.level, id) < cos_r {
                continue;
            }
            if cell.level == index.depth {
                for slot in index.leaf_start[id] as usize..index.leaf_start[id + 1] as usize {
                    if self.active[slot] && chord2(q, index.units[slot]) <= c2max {
                        out.push(slot);
                    }
                }
            } else {
                stack.extend(CubeIndex::children(&cell));
            }
        }
        out.sort_unstable();
    }
}

/// Grid cover `F_l` with its measured covering radius.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridCover {
    pub level: usize,
    pub points: Vec<SpherePoint>,
    /// Target covering radius, checked on random probes.
    pub covering_radius: f64,
    /// Largest probe-to-grid distance seen.
    pub measured_radius: f64,
}

impl GridCover {
    pub fn units(&self) -> Vec<[f64; 3]> {
        self.points.iter().map(|p| p.unit()).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Default probe count for covering-radius checks.
pub const COVER_PROBES: usize = 100_000;

/// Largest distance from `probes` random points to the nearest of `units`.
pub fn measure_covering_radius(units: &[[f64; 3]], probes: usize, seed: u64) -> f64 {
    let index = CubeIndex::new(units);
    let set = ActiveSet::full(&index);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..probes {
        let g: [f64; 3] = [rng.sample(rand_distr::StandardNormal), rng.sample(rand_distr::StandardNormal), rng.sample(rand_distr::StandardNormal)];
        let q = v3::normalize(g);
        if let Some((_, d)) = set.nearest(&index, q) {
            worst = worst.max(d);
        }
    }
    worst
}

/// Fibonacci lattice (joined with `base`) whose probed covering radius is at
/// most `radius`.
pub fn cover_with_radius(radius: f64, base: &[[f64; 3]], probes: usize) -> Result<(Vec<[f64; 3]>, f64)> {
    if !(radius > 0.0) {
        return Err(domain(format!("covering radius must be positive, got {radius}")));
    }
    // A hexagonal cover needs about 4.84 / r^2 points; the lattice needs a
    // little more.
    let mut n = ((4.9 / (radius * radius)).ceil() as usize).max(2);
    loop {
        let mut pts = base.to_vec();
        pts.extend(fibonacci_points(n));
        let measured = measure_covering_radius(&pts, probes, n as u64);
        if measured <= radius {
            return Ok((pts, measured));
        }
        n = (n as f64 * 1.05).ceil() as usize;
        if n > 200_000_000 {
            return Err(domain("grid too large"));
        }
    }
}

/// `F_l`: covering radius `h_l * factor`, nested over levels `0..=l`.
///
/// The proofs use `factor = 1/1000`; simulations default to `1/10`.
pub fn build_grid_cover(l: usize, schedule: &RadiusSchedule, factor: f64) -> Result<GridCover> {
    build_grid_cover_probed(l, schedule, factor, COVER_PROBES)
}

pub fn build_grid_cover_probed(l: usize, schedule: &RadiusSchedule, factor: f64, probes: usize) -> Result<GridCover> {
    if l > schedule.levels {
        return Err(domain(format!("level {l} beyond schedule depth {}", schedule.levels)));
    }
    let mut units: Vec<[f64; 3]> = Vec::new();
    let mut measured = 0.0;
    for k in 0..=l {
        let (pts, m) = cover_with_radius(schedule.h[k] * factor, &units, probes)?;
        units = pts;
        measured = m;
    }
    Ok(GridCover {
        level: l,
        points: units.into_iter().map(SpherePoint::from_direction).collect(),
        covering_radius: schedule.h[l] * factor,
        measured_radius: measured,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;

    fn random_units(n: usize, seed: u64) -> Vec<[f64; 3]> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                v3::normalize([
                    rng.sample(rand_distr::StandardNormal),
                    rng.sample(rand_distr::StandardNormal),
                    rng.sample(rand_distr::StandardNormal),
                ])
            })
            .collect()
    }

    #[test]
    fn face_coordinates_round_trip() {
        for u in random_units(1000, 1) {
            let (f, a, b) = face_of(u);
            let back = face_direction(f, a, b);
            assert!(v3::norm(v3::sub(back, u)) < 1e-12);
            assert!((unwarp(warp(a)) - a).abs() < 1e-12);
        }
    }

    #[test]
    fn cells_fit_in_their_caps() {
        let index = CubeIndex::with_depth(&random_units(20_000, 2), 4);
        for slot in 0..index.len() {
            let u = index.units[slot];
            let (face, a, b) = face_of(u);
            for l in 0..=4u32 {
                let side = (1usize << l) as f64;
                let cell = Cell {
                    level: l,
                    face,
                    i: ((warp(a) * side) as usize).min((1 << l) - 1),
                    j: ((warp(b) * side) as usize).min((1 << l) - 1),
                };
                assert!(v3::angle(u, cell.centre()) <= index.cell_radius[l as usize]);
            }
        }
    }

    #[test]
    fn nearest_and_range_match_brute_force() {
        let pts = random_units(3000, 3);
        let index = CubeIndex::new(&pts);
        let mut set = ActiveSet::full(&index);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for round in 0..300 {
            let q = random_units(1, 100 + round)[0];
            let brute = (0..index.len())
                .filter(|&s| set.is_active(s))
                .map(|s| (s, v3::angle(q, index.unit(s))))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            let got = set.nearest(&index, q);
            match (brute, got) {
                (Some((_, d)), Some((_, e))) => assert!((d - e).abs() < 1e-12),
                (None, None) => {}
                other => panic!("{other:?}"),
            }
            let r = rng.random::<f64>() * 0.3;
            let mut within = Vec::new();
            set.collect_within(&index, q, r, &mut within);
            let want: Vec<usize> =
                (0..index.len()).filter(|&s| set.is_active(s) && v3::angle(q, index.unit(s)) <= r - 1e-12).collect();
            for s in &want {
                assert!(within.contains(s));
            }
            let before = set.remaining();
            let removed = set.deactivate_within(&index, q, r);
            assert_eq!(set.remaining(), before - removed);
        }
        set.reset(&index);
        assert_eq!(set.remaining(), index.len());
    }

    #[test]
    fn lattice_covers() {
        let (pts, measured) = cover_with_radius(0.05, &[], 20_000).unwrap();
        assert!(measured <= 0.05);
        // Independent brute-force probe.
        let probes = random_units(2000, 7);
        for q in probes {
            let d = pts.iter().map(|&p| v3::angle(p, q)).fold(f64::INFINITY, f64::min);
            assert!(d <= 0.05 * 1.05);
        }
    }

    #[test]
    fn grid_cover_nested_and_sized() {
        let s = RadiusSchedule::new(1.0, 3).unwrap();
        let g2 = build_grid_cover_probed(2, &s, 0.1, 20_000).unwrap();
        let g3 = build_grid_cover_probed(3, &s, 0.1, 20_000).unwrap();
        assert!(g3.measured_radius <= s.h[3] * 0.1);
        for (a, b) in g2.points.iter().zip(&g3.points) {
            assert_eq!(a, b);
        }
        let ideal = |l: usize| 4.0 * std::f64::consts::PI / (std::f64::consts::PI * (s.h[l] * 0.1).powi(2));
        for (l, g) in [(2, &g2), (3, &g3)] {
            let ratio = g.len() as f64 / ideal(l);
            assert!(ratio > 0.25 && ratio < 4.0, "ratio {ratio}");
        }
    }
}
