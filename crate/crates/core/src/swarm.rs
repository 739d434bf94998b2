//! Deterministic discrete-time 2D simulator for a swarm of unit drones.
//!
//! Each command assigns per-drone targets once; `step` then moves every
//! drone straight toward its target at up to `max_speed` per step, pushes
//! apart pairs closer than `min_separation` (half the overlap each), and
//! clamps to the arena. Updates are synchronous: every drone's move is
//! computed from the pre-step positions.

use std::io::Write;
use std::path::Path;

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::command::Command;
use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;

/// Distance to target below which a drone counts as arrived, meters.
pub const ARRIVAL_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Arena {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Default for Arena {
    fn default() -> Self {
        Self {
            min: [0.0, 0.0],
            max: [100.0, 100.0],
        }
    }
}

impl Arena {
    pub fn center(&self) -> Vec2 {
        Vec2::new(
            (self.min[0] + self.max[0]) / 2.0,
            (self.min[1] + self.max[1]) / 2.0,
        )
    }

    pub fn contains(&self, p: &Vec2) -> bool {
        p.x >= self.min[0] && p.x <= self.max[0] && p.y >= self.min[1] && p.y <= self.max[1]
    }

    pub fn clamp(&self, p: Vec2) -> Vec2 {
        Vec2::new(
            p.x.clamp(self.min[0], self.max[0]),
            p.y.clamp(self.min[1], self.max[1]),
        )
    }

    fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwarmConfig {
    pub n_drones: usize,
    pub arena: Arena,
    /// meters per step
    pub max_speed: f64,
    pub min_separation: f64,
    pub r_aggregate: f64,
    pub d_split: f64,
    pub max_steps: usize,
    pub seed: u64,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        Self {
            n_drones: 50,
            arena: Arena::default(),
            max_speed: 1.0,
            min_separation: 1.0,
            r_aggregate: 5.0,
            d_split: 30.0,
            max_steps: 500,
            seed: 0,
        }
    }
}

impl SwarmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_drones < 2 {
            return bad(format!("n_drones must be >= 2, got {}", self.n_drones));
        }
        if !(self.arena.width() > 0.0 && self.arena.height() > 0.0) {
            return bad("arena must have positive width and height".into());
        }
        if !(self.max_speed > 0.0 && self.min_separation > 0.0) {
            return bad("max_speed and min_separation must be > 0".into());
        }
        if !(self.min_separation < self.r_aggregate) {
            return bad("min_separation must be < r_aggregate".into());
        }
        if !(self.d_split > 2.0 * self.r_aggregate) {
            return bad("d_split must exceed 2·r_aggregate".into());
        }
        Ok(())
    }

    /// Lattice spacing for the initial formation and split sub-swarms.
    pub fn formation_spacing(&self) -> f64 {
        (2.0 * self.min_separation).max(self.r_aggregate / 2.0)
    }

    /// Single-linkage cut distance used by [`metrics`].
    pub fn cluster_cut(&self) -> f64 {
        4.0 * self.min_separation
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState {
    pub positions: Vec<Vec2>,
    pub anchors: Vec<Vec2>,
    pub targets: Vec<Vec2>,
    pub behavior: Command,
    pub step_count: usize,
}

impl SwarmState {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn max_target_distance(&self) -> f64 {
        self.positions
            .iter()
            .zip(&self.targets)
            .map(|(p, t)| (t - p).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_converged(&self) -> bool {
        self.max_target_distance() <= ARRIVAL_TOLERANCE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwarmMetrics {
    pub mean_centroid_dist: f64,
    pub mean_nn_dist: f64,
    pub cluster_count: usize,
    /// Distance between the centroids of the two largest clusters, 0 with
    /// fewer than two clusters.
    pub cluster_gap: f64,
}

// ── Geometry helpers ────────────────────────────────────

pub fn centroid(points: &[Vec2]) -> Vec2 {
    let sum = points.iter().fold(Vec2::zeros(), |acc, p| acc + p);
    sum / points.len().max(1) as f64
}

/// The `n` points of a triangular lattice with the given spacing nearest
/// to the origin, translated so their centroid is `center`.
pub fn hex_formation(n: usize, spacing: f64, center: Vec2) -> Vec<Vec2> {
    let reach = (n as f64).sqrt().ceil() as i64 + 2;
    let h = 3f64.sqrt() / 2.0;
    let mut pts = Vec::new();
    for j in -reach..=reach {
        for i in -reach..=reach {
            let x = spacing * (i as f64 + j as f64 / 2.0);
            let y = spacing * h * j as f64;
            pts.push(Vec2::new(x, y));
        }
    }
    pts.sort_by(|a, b| {
        a.norm_squared()
            .total_cmp(&b.norm_squared())
            .then(a.y.total_cmp(&b.y))
            .then(a.x.total_cmp(&b.x))
    });
    pts.truncate(n);
    let shift = center - centroid(&pts);
    pts.iter().map(|p| p + shift).collect()
}

/// Translates `pts` by the smallest shift that brings their bounding box
/// inside the arena. Fails if the box is larger than the arena.
fn fit_inside(pts: &mut [Vec2], arena: &Arena) -> Result<()> {
    for axis in 0..2 {
        let lo = pts.iter().map(|p| p[axis]).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(|p| p[axis]).fold(f64::NEG_INFINITY, f64::max);
        if hi - lo > arena.max[axis] - arena.min[axis] {
            return Err(Error::ArenaTooSmall(format!(
                "formation spans {:.3} m on axis {axis}, arena spans {:.3} m",
                hi - lo,
                arena.max[axis] - arena.min[axis]
            )));
        }
        let shift = if lo < arena.min[axis] {
            arena.min[axis] - lo
        } else if hi > arena.max[axis] {
            arena.max[axis] - hi
        } else {
            0.0
        };
        for p in pts.iter_mut() {
            p[axis] += shift;
        }
    }
    Ok(())
}

/// Minimum-cost perfect matching (Hungarian algorithm with potentials).
/// Returns `slot_of[row]`.
pub fn assign(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut slot_of = vec![0; n];
    for j in 1..=n {
        slot_of[p[j] - 1] = j - 1;
    }
    slot_of
}

/// Gives each drone in `drones` one of `slots`, minimizing the total
/// squared travel distance.
fn assign_targets(positions: &[Vec2], drones: &[usize], slots: &[Vec2], targets: &mut [Vec2]) {
    let cost: Vec<Vec<f64>> = drones
        .iter()
        .map(|&d| slots.iter().map(|s| (s - positions[d]).norm_squared()).collect())
        .collect();
    for (row, slot) in assign(&cost).into_iter().enumerate() {
        targets[drones[row]] = slots[slot];
    }
}

// ── Simulation ──────────────────────────────────────────

pub fn init_swarm(cfg: &SwarmConfig) -> Result<SwarmState> {
    cfg.validate()?;
    let positions = hex_formation(cfg.n_drones, cfg.formation_spacing(), cfg.arena.center());
    if let Some(p) = positions.iter().find(|p| !cfg.arena.contains(p)) {
        return Err(Error::ArenaTooSmall(format!(
            "{} drones at spacing {} do not fit; ({:.2}, {:.2}) is outside",
            cfg.n_drones,
            cfg.formation_spacing(),
            p.x,
            p.y
        )));
    }
    Ok(SwarmState {
        anchors: positions.clone(),
        targets: positions.clone(),
        positions,
        behavior: Command::Hovering,
        step_count: 0,
    })
}

/// Assigns targets for `behavior` and resets the step counter.
///
/// * Hovering: the anchors (initial formation).
/// * Splitting: drones ranked by x; the lower half forms a hex group
///   centered `d_split/2` left of the centroid, the upper half one
///   `d_split/2` right of it.
/// * Dispersing: distinct uniform random arena points, pairwise at least
///   `2·min_separation` apart, drawn from `seed`.
/// * Aggregating: a hex-packed disc of radius `r_aggregate` about the
///   current centroid.
///
/// Within a group, drones are matched to slots by minimum total squared
/// distance.
pub fn set_behavior(state: &SwarmState, behavior: Command, cfg: &SwarmConfig, seed: u64) -> Result<SwarmState> {
    cfg.validate()?;
    let n = state.len();
    let pos = &state.positions;
    let mut targets = vec![Vec2::zeros(); n];
    match behavior {
        Command::Hovering => targets.clone_from(&state.anchors),
        Command::Splitting => {
            let c = centroid(pos);
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| {
                pos[a].x.total_cmp(&pos[b].x).then(pos[a].y.total_cmp(&pos[b].y)).then(a.cmp(&b))
            });
            let (lower, upper) = order.split_at(n / 2);
            let half = Vec2::new(cfg.d_split / 2.0, 0.0);
            for (group, center) in [(lower, c - half), (upper, c + half)] {
                let mut slots = hex_formation(group.len(), cfg.formation_spacing(), center);
                fit_inside(&mut slots, &cfg.arena)?;
                assign_targets(pos, group, &slots, &mut targets);
            }
        }
        Command::Dispersing => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let limit = 10 * (n as u64) * (n as u64);
            let min_d2 = (2.0 * cfg.min_separation).powi(2);
            let mut slots: Vec<Vec2> = Vec::with_capacity(n);
            let mut attempts = 0u64;
            while slots.len() < n {
                if attempts >= limit {
                    return Err(Error::ArenaTooCrowded { attempts });
                }
                attempts += 1;
                let p = Vec2::new(
                    rng.random_range(cfg.arena.min[0]..=cfg.arena.max[0]),
                    rng.random_range(cfg.arena.min[1]..=cfg.arena.max[1]),
                );
                if slots.iter().all(|q| (q - p).norm_squared() >= min_d2) {
                    slots.push(p);
                }
            }
            let all: Vec<usize> = (0..n).collect();
            assign_targets(pos, &all, &slots, &mut targets);
        }
        Command::Aggregating => {
            let c = centroid(pos);
            let mut spacing = cfg.r_aggregate / 2.0;
            let slots = loop {
                let s = hex_formation(n, spacing, c);
                if s.iter().all(|p| (p - c).norm() <= cfg.r_aggregate) {
                    break s;
                }
                spacing *= 0.98;
                if spacing < cfg.min_separation {
                    return Err(Error::ArenaTooSmall(format!(
                        "{n} drones cannot be packed within r_aggregate = {} at min_separation = {}",
                        cfg.r_aggregate, cfg.min_separation
                    )));
                }
            };
            let mut slots = slots;
            fit_inside(&mut slots, &cfg.arena)?;
            let all: Vec<usize> = (0..n).collect();
            assign_targets(pos, &all, &slots, &mut targets);
        }
    }
    Ok(SwarmState {
        positions: state.positions.clone(),
        anchors: state.anchors.clone(),
        targets,
        behavior,
        step_count: 0,
    })
}

pub fn step(state: &SwarmState, cfg: &SwarmConfig) -> SwarmState {
    let moved: Vec<Vec2> = state
        .positions
        .iter()
        .zip(&state.targets)
        .map(|(p, t)| {
            let d = t - p;
            let dist = d.norm();
            if dist <= cfg.max_speed {
                *t
            } else {
                p + d * (cfg.max_speed / dist)
            }
        })
        .collect();

    let n = moved.len();
    let mut correction = vec![Vec2::zeros(); n];
    for i in 0..n {
        for j in i + 1..n {
            let d = moved[j] - moved[i];
            let dist = d.norm();
            if dist < cfg.min_separation {
                // Coincident drones split along +x, the higher index moving right.
                let dir = if dist > 1e-12 { d / dist } else { Vec2::new(1.0, 0.0) };
                let push = dir * ((cfg.min_separation - dist) / 2.0);
                correction[i] -= push;
                correction[j] += push;
            }
        }
    }

    let positions = moved
        .iter()
        .zip(&correction)
        .map(|(p, c)| cfg.arena.clamp(p + c))
        .collect();
    SwarmState {
        positions,
        anchors: state.anchors.clone(),
        targets: state.targets.clone(),
        behavior: state.behavior,
        step_count: state.step_count + 1,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub state: SwarmState,
    /// Positions before the first step and after every step.
    pub trajectory: Vec<Vec<Vec2>>,
    pub steps: usize,
    pub converged: bool,
}

pub fn run_until_converged(state: &SwarmState, cfg: &SwarmConfig) -> RunOutcome {
    let mut s = state.clone();
    let mut trajectory = vec![s.positions.clone()];
    let mut steps = 0;
    while !s.is_converged() && steps < cfg.max_steps {
        s = step(&s, cfg);
        steps += 1;
        trajectory.push(s.positions.clone());
    }
    RunOutcome {
        converged: s.is_converged(),
        state: s,
        trajectory,
        steps,
    }
}

// ── Metrics ─────────────────────────────────────────────

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Single-linkage clusters at cut distance `cut`: connected components of
/// the graph joining points at most `cut` apart. Clusters are ordered by
/// their smallest member index.
pub fn single_linkage_clusters(points: &[Vec2], cut: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if (points[i] - points[j]).norm() <= cut {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut index_of_root = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if index_of_root[r] == usize::MAX {
            index_of_root[r] = clusters.len();
            clusters.push(Vec::new());
        }
        clusters[index_of_root[r]].push(i);
    }
    clusters
}

pub fn metrics(positions: &[Vec2], cfg: &SwarmConfig) -> SwarmMetrics {
    let n = positions.len();
    if n == 0 {
        return SwarmMetrics {
            mean_centroid_dist: 0.0,
            mean_nn_dist: 0.0,
            cluster_count: 0,
            cluster_gap: 0.0,
        };
    }
    let c = centroid(positions);
    let mean_centroid_dist = positions.iter().map(|p| (p - c).norm()).sum::<f64>() / n as f64;
    let mean_nn_dist = if n < 2 {
        0.0
    } else {
        (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (positions[i] - positions[j]).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .sum::<f64>()
            / n as f64
    };
    let mut clusters = single_linkage_clusters(positions, cfg.cluster_cut());
    // Stable sort keeps first-member order among equal sizes.
    clusters.sort_by_key(|c| std::cmp::Reverse(c.len()));
    let cluster_gap = if clusters.len() < 2 {
        0.0
    } else {
        let centroid_of = |idx: &[usize]| centroid(&idx.iter().map(|&i| positions[i]).collect::<Vec<_>>());
        (centroid_of(&clusters[0]) - centroid_of(&clusters[1])).norm()
    };
    SwarmMetrics {
        mean_centroid_dist,
        mean_nn_dist,
        cluster_count: clusters.len(),
        cluster_gap,
    }
}

/// Cell indices of each drone on a square grid of `cell_size` meters
/// anchored at the arena's minimum corner.
pub fn grid_cells(positions: &[Vec2], arena: &Arena, cell_size: f64) -> Vec<(i64, i64)> {
    positions
        .iter()
        .map(|p| {
            (
                ((p.x - arena.min[0]) / cell_size).floor() as i64,
                ((p.y - arena.min[1]) / cell_size).floor() as i64,
            )
        })
        .collect()
}

/// `step,drone_id,x,y`, one row per drone per snapshot.
pub fn write_trajectory_csv(path: &Path, trajectory: &[Vec<Vec2>]) -> Result<()> {
    let mut buf = Vec::new();
    writeln!(buf, "step,drone_id,x,y").map_err(|e| Error::io(path, e))?;
    for (s, snap) in trajectory.iter().enumerate() {
        for (i, p) in snap.iter().enumerate() {
            writeln!(buf, "{s},{i},{},{}", p.x, p.y).map_err(|e| Error::io(path, e))?;
        }
    }
    crate::jsonio::write_atomic(path, &buf)
}
