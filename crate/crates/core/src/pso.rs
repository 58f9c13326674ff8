//! Particle swarm search over vectorized designs.
//!
//! Two communication topologies are supported. `Global` is the basic PSO
//! where every particle is pulled toward the swarm-wide best. `RandomLocal`
//! follows SPSO2007: each particle informs itself plus `expected_links`
//! random particles, the social attractor is the best personal best among a
//! particle's informers, and links are redrawn after every iteration in which
//! the swarm-wide best fails to improve.
//!
//! Updates are synchronous: all velocities are computed from the state at the
//! start of an iteration, then all particles move and refresh their bests.
//!
//! Randomness comes from a single seed per run. Motion draws (initial
//! positions and velocities, then per iteration the cognitive and social
//! uniforms of each particle in index order) use ChaCha8 stream 0; link draws
//! use ChaCha8 stream 1 of the same seed.

use std::collections::VecDeque;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::criteria::CriterionValue;
use crate::error::{Error, Result};
use crate::model::DesignMatrix;

/// Generator named in result metadata; part of the output format contract.
pub const RNG_ALGORITHM: &str = "chacha8";

pub const DEFAULT_EXPECTED_LINKS: usize = 3;
pub const DEFAULT_STAGNATION_LIMIT: usize = 100;
pub const DEFAULT_MAX_ITERATIONS: usize = 5000;

const LOWER: f64 = -1.0;
const UPPER: f64 = 1.0;

/// `1 / (2 ln 2)`.
pub fn default_omega() -> f64 {
    1.0 / (2.0 * std::f64::consts::LN_2)
}

/// `1/2 + ln 2`.
pub fn default_acceleration() -> f64 {
    0.5 + std::f64::consts::LN_2
}

/// Square root of the double-precision machine epsilon.
pub fn default_tol() -> f64 {
    f64::EPSILON.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    Global,
    RandomLocal { expected_links: usize },
}

impl Topology {
    pub fn local() -> Self {
        Topology::RandomLocal {
            expected_links: DEFAULT_EXPECTED_LINKS,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Topology::Global => "global",
            Topology::RandomLocal { .. } => "local",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "global" => Ok(Topology::Global),
            "local" => Ok(Topology::local()),
            other => Err(Error::InvalidConfig(format!(
                "unknown topology {other:?} (expected global or local)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsoConfig {
    pub swarm_size: usize,
    pub omega: f64,
    pub c1: f64,
    pub c2: f64,
    /// Per-coordinate velocity limit; `None` means the box length (2) everywhere.
    pub v_max: Option<Vec<f64>>,
    pub topology: Topology,
    pub max_iterations: usize,
    pub tol: f64,
    /// Iterations over which the net improvement of the swarm-wide best is
    /// compared against `tol`. `1` reproduces a single-step rule.
    pub tol_window: usize,
    pub stagnation_limit: usize,
    pub seed: u64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            swarm_size: 50,
            omega: default_omega(),
            c1: default_acceleration(),
            c2: default_acceleration(),
            v_max: None,
            topology: Topology::local(),
            max_iterations: DEFAULT_MAX_ITERATIONS,
            tol: default_tol(),
            tol_window: DEFAULT_STAGNATION_LIMIT,
            stagnation_limit: DEFAULT_STAGNATION_LIMIT,
            seed: 0,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if dim == 0 {
            return bad("search dimension must be at least 1".into());
        }
        if self.swarm_size == 0 {
            return bad("swarm size must be at least 1".into());
        }
        if !(self.omega > 0.0 && self.omega < 1.0) {
            return bad(format!("omega must lie in (0, 1), got {}", self.omega));
        }
        if !(self.c1 > 0.0 && self.c1.is_finite()) || !(self.c2 > 0.0 && self.c2.is_finite()) {
            return bad(format!(
                "c1 and c2 must be positive, got {} and {}",
                self.c1, self.c2
            ));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.tol_window == 0 {
            return bad("tolerance window must be at least 1".into());
        }
        if self.stagnation_limit == 0 {
            return bad("stagnation limit must be at least 1".into());
        }
        if self.max_iterations == 0 {
            return bad("max iterations must be at least 1".into());
        }
        if let Topology::RandomLocal { expected_links } = self.topology {
            if expected_links == 0 || expected_links > self.swarm_size {
                return bad(format!(
                    "expected links must lie in 1..={}, got {expected_links}",
                    self.swarm_size
                ));
            }
        }
        if let Some(v) = &self.v_max {
            if v.len() != dim {
                return bad(format!("v_max has {} entries, expected {dim}", v.len()));
            }
            if v.iter().any(|x| x.is_nan() || *x <= 0.0) {
                return bad("v_max entries must be positive".into());
            }
        }
        Ok(())
    }

    fn velocity_limits(&self, dim: usize) -> Vec<f64> {
        self.v_max
            .clone()
            .unwrap_or_else(|| vec![UPPER - LOWER; dim])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ConvergedTolerance,
    Stagnated,
    MaxIterations,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::ConvergedTolerance => "converged_tolerance",
            StopReason::Stagnated => "stagnated",
            StopReason::MaxIterations => "max_iterations",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub best_design: DesignMatrix,
    pub best_fitness: CriterionValue,
    pub iterations: u64,
    pub function_evaluations: u64,
    pub wall_time_seconds: f64,
    pub stop_reason: StopReason,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub pbest_position: Vec<f64>,
    pub pbest_fitness: CriterionValue,
    /// Particles whose personal bests this particle reads. Sorted, contains self.
    /// Empty under the global topology.
    pub informers: Vec<usize>,
}

/// Stacks the columns of `design` into a vector of length `N*K`.
pub fn vectorize(design: &DesignMatrix) -> Vec<f64> {
    design.vectorize()
}

pub fn devectorize(points: usize, factors: usize, v: &[f64]) -> Result<DesignMatrix> {
    DesignMatrix::from_column_major(points, factors, v)
}

/// `v <- omega v + c1 r_cog (pbest - x) + c2 r_soc (social - x)`, then clip to `±v_max`.
///
/// `social = None` drops the social term.
#[allow(clippy::too_many_arguments)]
pub fn update_velocity(
    velocity: &mut [f64],
    position: &[f64],
    pbest: &[f64],
    social: Option<&[f64]>,
    r_cog: &[f64],
    r_soc: &[f64],
    omega: f64,
    c1: f64,
    c2: f64,
    v_max: &[f64],
) {
    for d in 0..velocity.len() {
        let mut v = omega * velocity[d] + c1 * r_cog[d] * (pbest[d] - position[d]);
        if let Some(s) = social {
            v += c2 * r_soc[d] * (s[d] - position[d]);
        }
        velocity[d] = v.clamp(-v_max[d], v_max[d]);
    }
}

/// Absorbing wall: out-of-range coordinates stick to the violated bound and stop.
pub fn confine(position: &mut [f64], velocity: &mut [f64], bounds: (f64, f64)) {
    let (lo, hi) = bounds;
    for (x, v) in position.iter_mut().zip(velocity.iter_mut()) {
        if *x < lo {
            *x = lo;
            *v = 0.0;
        } else if *x > hi {
            *x = hi;
            *v = 0.0;
        }
    }
}

/// Draws a random informer structure.
///
/// Every particle picks `expected_links` targets uniformly with replacement
/// and informs them. The returned set for particle `i` holds `i` and every
/// particle that picked `i`, sorted.
pub fn regenerate_links<R: Rng + ?Sized>(
    swarm_size: usize,
    expected_links: usize,
    rng: &mut R,
) -> Vec<Vec<usize>> {
    let mut informers: Vec<Vec<usize>> = (0..swarm_size).map(|i| vec![i]).collect();
    for j in 0..swarm_size {
        for _ in 0..expected_links {
            let target = rng.random_range(0..swarm_size);
            informers[target].push(j);
        }
    }
    for set in &mut informers {
        set.sort_unstable();
        set.dedup();
    }
    informers
}

fn motion_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn link_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// Outcome of one synchronous iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub previous_best: f64,
    pub best: f64,
}

impl Step {
    pub fn improvement(&self) -> f64 {
        self.previous_best - self.best
    }

    /// True when the swarm-wide best strictly decreased.
    pub fn improved(&self) -> bool {
        self.best < self.previous_best
    }
}

/// Live swarm state. [`run`] drives this; it is public for instrumentation.
#[derive(Debug, Clone)]
pub struct Swarm {
    config: PsoConfig,
    dim: usize,
    v_max: Vec<f64>,
    particles: Vec<Particle>,
    gbest: usize,
    motion: ChaCha8Rng,
    links: ChaCha8Rng,
    drop_self_social: bool,
    fixed_links: bool,
    evaluations: u64,
    scratch_cog: Vec<f64>,
    scratch_soc: Vec<f64>,
}

impl Swarm {
    /// Initializes positions, velocities, personal bests and (for the local
    /// topology) informer links, evaluating every particle once.
    pub fn init<F>(config: &PsoConfig, dim: usize, objective: &mut F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> CriterionValue,
    {
        config.validate(dim)?;
        let v_max = config.velocity_limits(dim);
        let mut motion = motion_rng(config.seed);
        let mut links = link_rng(config.seed);
        let mut particles = Vec::with_capacity(config.swarm_size);
        for _ in 0..config.swarm_size {
            let position: Vec<f64> = (0..dim)
                .map(|_| motion.random_range(LOWER..=UPPER))
                .collect();
            let velocity: Vec<f64> = position
                .iter()
                .zip(&v_max)
                .map(|(x, vm)| {
                    let lo = (LOWER - x) / 2.0;
                    let hi = (UPPER - x) / 2.0;
                    let v = lo + (hi - lo) * motion.random::<f64>();
                    v.clamp(-vm, *vm)
                })
                .collect();
            let fitness = objective(&position);
            particles.push(Particle {
                pbest_position: position.clone(),
                position,
                velocity,
                pbest_fitness: fitness,
                informers: Vec::new(),
            });
        }
        let gbest = argmin(particles.iter().map(|p| p.pbest_fitness.value()));
        if let Topology::RandomLocal { expected_links } = config.topology {
            let sets = regenerate_links(config.swarm_size, expected_links, &mut links);
            for (p, s) in particles.iter_mut().zip(sets) {
                p.informers = s;
            }
        }
        Ok(Self {
            config: config.clone(),
            dim,
            v_max,
            gbest,
            motion,
            links,
            drop_self_social: matches!(config.topology, Topology::RandomLocal { .. }),
            fixed_links: false,
            evaluations: config.swarm_size as u64,
            scratch_cog: vec![0.0; dim],
            scratch_soc: vec![0.0; dim],
            particles,
        })
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gbest_index(&self) -> usize {
        self.gbest
    }

    pub fn gbest_position(&self) -> &[f64] {
        &self.particles[self.gbest].pbest_position
    }

    pub fn gbest_fitness(&self) -> CriterionValue {
        self.particles[self.gbest].pbest_fitness
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    /// Best personal best among the informers of particle `i`; lowest index wins ties.
    fn local_best(&self, i: usize) -> usize {
        let inf = &self.particles[i].informers;
        let j = argmin(inf.iter().map(|&j| self.particles[j].pbest_fitness.value()));
        inf[j]
    }

    /// Redraws the informer sets of the local topology. No-op for global.
    pub fn regenerate_links(&mut self) {
        if self.fixed_links {
            return;
        }
        if let Topology::RandomLocal { expected_links } = self.config.topology {
            let sets = regenerate_links(self.config.swarm_size, expected_links, &mut self.links);
            for (p, s) in self.particles.iter_mut().zip(sets) {
                p.informers = s;
            }
        }
    }

    /// One synchronous iteration: all velocities, then all moves and evaluations.
    pub fn iterate<F>(&mut self, objective: &mut F) -> Step
    where
        F: FnMut(&[f64]) -> CriterionValue,
    {
        let previous_best = self.gbest_fitness().value();
        let s = self.particles.len();
        let attractors: Vec<Option<usize>> = (0..s)
            .map(|i| match self.config.topology {
                Topology::Global => Some(self.gbest),
                Topology::RandomLocal { .. } => {
                    let l = self.local_best(i);
                    if l == i && self.drop_self_social {
                        None
                    } else {
                        Some(l)
                    }
                }
            })
            .collect();

        let (omega, c1, c2) = (self.config.omega, self.config.c1, self.config.c2);
        for (i, attractor) in attractors.iter().enumerate() {
            for r in self.scratch_cog.iter_mut() {
                *r = self.motion.random::<f64>();
            }
            for r in self.scratch_soc.iter_mut() {
                *r = self.motion.random::<f64>();
            }
            let social = attractor.map(|j| self.particles[j].pbest_position.clone());
            let p = &mut self.particles[i];
            update_velocity(
                &mut p.velocity,
                &p.position,
                &p.pbest_position,
                social.as_deref(),
                &self.scratch_cog,
                &self.scratch_soc,
                omega,
                c1,
                c2,
                &self.v_max,
            );
        }

        for i in 0..s {
            let p = &mut self.particles[i];
            for (x, v) in p.position.iter_mut().zip(&p.velocity) {
                *x += v;
            }
            confine(&mut p.position, &mut p.velocity, (LOWER, UPPER));
            let f = objective(&p.position);
            self.evaluations += 1;
            if f.value() < p.pbest_fitness.value() {
                p.pbest_position.copy_from_slice(&p.position);
                p.pbest_fitness = f;
                if f.value() < self.particles[self.gbest].pbest_fitness.value() {
                    self.gbest = i;
                }
            }
        }

        Step {
            previous_best,
            best: self.gbest_fitness().value(),
        }
    }
}

/// Index of the smallest value; the first one wins ties, NaN never wins.
fn argmin<I: Iterator<Item = f64>>(values: I) -> usize {
    let mut best = 0;
    let mut best_v = f64::NAN;
    for (i, v) in values.enumerate() {
        if i == 0 || v < best_v || (best_v.is_nan() && !v.is_nan()) {
            best = i;
            best_v = v;
        }
    }
    best
}

/// Tracks the stopping rules over successive [`Step`]s.
///
/// Checked in order after every iteration:
/// 1. the swarm-wide best improved during this iteration and its net
///    improvement over the last `tol_window` iterations is positive but below
///    `tol` (converged);
/// 2. no improvement for `stagnation_limit` consecutive iterations (stagnated);
/// 3. `max_iterations` reached.
#[derive(Debug, Clone)]
pub struct StoppingRule {
    tol: f64,
    tol_window: usize,
    stagnation_limit: usize,
    max_iterations: usize,
    stagnant: usize,
    iterations: usize,
    /// Best value at the end of each of the last `tol_window + 1` iterations,
    /// including the initial swarm.
    history: VecDeque<f64>,
}

impl StoppingRule {
    pub fn new(config: &PsoConfig) -> Self {
        Self {
            tol: config.tol,
            tol_window: config.tol_window,
            stagnation_limit: config.stagnation_limit,
            max_iterations: config.max_iterations,
            stagnant: 0,
            iterations: 0,
            history: VecDeque::with_capacity(config.tol_window + 1),
        }
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Records a finished iteration. Returns the stop reason, if any.
    pub fn record(&mut self, step: &Step) -> Option<StopReason> {
        self.iterations += 1;
        if self.history.is_empty() {
            self.history.push_back(step.previous_best);
        }
        self.history.push_back(step.best);
        if self.history.len() > self.tol_window + 1 {
            self.history.pop_front();
        }
        if step.improved() {
            self.stagnant = 0;
            let window_start = self.history[0];
            let change = window_start - step.best;
            if change > 0.0 && change < self.tol {
                return Some(StopReason::ConvergedTolerance);
            }
        } else {
            self.stagnant += 1;
            if self.stagnant >= self.stagnation_limit {
                return Some(StopReason::Stagnated);
            }
        }
        if self.iterations >= self.max_iterations {
            return Some(StopReason::MaxIterations);
        }
        None
    }
}

/// Searches `[-1, 1]^{N x K}` for the design minimizing `objective`.
pub fn run<F>(
    mut objective: F,
    points: usize,
    factors: usize,
    config: &PsoConfig,
) -> Result<RunResult>
where
    F: FnMut(&DesignMatrix) -> CriterionValue,
{
    if points == 0 {
        return Err(Error::EmptyDesign);
    }
    if factors == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let start = Instant::now();
    let mut eval = |v: &[f64]| {
        let design = DesignMatrix::from_column_major(points, factors, v)
            .expect("confined positions are valid designs");
        objective(&design)
    };
    let mut swarm = Swarm::init(config, points * factors, &mut eval)?;
    let mut stop = StoppingRule::new(config);
    let reason = loop {
        let step = swarm.iterate(&mut eval);
        if let Some(reason) = stop.record(&step) {
            break reason;
        }
        if !step.improved() {
            swarm.regenerate_links();
        }
    };
    let best_design = devectorize(points, factors, swarm.gbest_position())?;
    Ok(RunResult {
        best_design,
        best_fitness: swarm.gbest_fitness(),
        iterations: stop.iterations() as u64,
        function_evaluations: swarm.evaluations(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        stop_reason: reason,
        seed: config.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::{Criterion, CriterionKind};

    fn sphere(v: &[f64]) -> CriterionValue {
        CriterionValue::finite(CriterionKind::D, v.iter().map(|x| (x - 0.3).powi(2)).sum())
    }

    #[test]
    fn velocity_update_pinned_draws() {
        let mut v = [0.1];
        update_velocity(
            &mut v,
            &[0.0],
            &[0.2],
            Some(&[0.4]),
            &[0.5],
            &[0.5],
            0.72134752,
            1.19314718,
            1.19314718,
            &[2.0],
        );
        // 0.072134752 + 0.119314718 + 0.238629436
        assert!((v[0] - 0.430078906).abs() < 1e-12);
        assert!((v[0] - 0.4300789).abs() < 1e-7);
    }

    #[test]
    fn velocity_update_zero_attraction_and_clip() {
        let mut v = [0.3, -0.8];
        let x = [0.2, -0.4];
        update_velocity(
            &mut v,
            &x,
            &x,
            Some(&x),
            &[0.9; 2],
            &[0.1; 2],
            0.7,
            1.2,
            1.2,
            &[2.0; 2],
        );
        assert_eq!(v, [0.7 * 0.3, 0.7 * -0.8]);

        let mut v = [0.0, 0.0];
        update_velocity(
            &mut v,
            &[-1.0, 1.0],
            &[1.0, -1.0],
            Some(&[1.0, -1.0]),
            &[1.0; 2],
            &[1.0; 2],
            0.7,
            1.5,
            1.5,
            &[2.0; 2],
        );
        assert_eq!(v, [2.0, -2.0]);
    }

    #[test]
    fn dropped_social_term() {
        let mut a = [0.1];
        update_velocity(
            &mut a,
            &[0.0],
            &[0.2],
            None,
            &[0.5],
            &[0.5],
            0.5,
            1.0,
            1.0,
            &[2.0],
        );
        assert!((a[0] - (0.05 + 0.1)).abs() < 1e-15);
    }

    #[test]
    fn absorbing_wall() {
        let (mut x, mut v) = (vec![1.7], vec![0.5]);
        confine(&mut x, &mut v, (-1.0, 1.0));
        assert_eq!((x[0], v[0]), (1.0, 0.0));

        let (mut x, mut v) = (vec![-1.0], vec![-0.3]);
        confine(&mut x, &mut v, (-1.0, 1.0));
        assert_eq!((x[0], v[0]), (-1.0, -0.3));

        let (mut x, mut v) = (vec![0.2, -1.4, 1.0, 3.0], vec![0.1, -0.5, 0.2, 1.0]);
        confine(&mut x, &mut v, (-1.0, 1.0));
        assert_eq!(x, vec![0.2, -1.0, 1.0, 1.0]);
        assert_eq!(v, vec![0.1, 0.0, 0.2, 0.0]);
    }

    #[test]
    fn links_contain_self() {
        let mut rng = link_rng(9);
        for s in [1, 2, 7, 50] {
            let sets = regenerate_links(s, 3.min(s), &mut rng);
            assert_eq!(sets.len(), s);
            for (i, set) in sets.iter().enumerate() {
                assert!(set.contains(&i));
                assert!(set.windows(2).all(|w| w[0] < w[1]));
            }
        }
        assert_eq!(regenerate_links(1, 1, &mut rng), vec![vec![0]]);
    }

    #[test]
    fn init_positions_and_velocities() {
        let cfg = PsoConfig {
            seed: 42,
            ..PsoConfig::default()
        };
        let dim = 3;
        let swarm = Swarm::init(&cfg, dim, &mut sphere).unwrap();
        assert_eq!(swarm.particles().len(), 50);
        for (i, p) in swarm.particles().iter().enumerate() {
            for (x, v) in p.position.iter().zip(&p.velocity) {
                assert!((-1.0..=1.0).contains(x));
                assert!(*v >= (-1.0 - x) / 2.0 && *v <= (1.0 - x) / 2.0);
            }
            assert_eq!(p.position, p.pbest_position);
            assert!(p.informers.contains(&i));
        }
        let best = swarm
            .particles()
            .iter()
            .map(|p| p.pbest_fitness.value())
            .fold(f64::INFINITY, f64::min);
        assert_eq!(swarm.gbest_fitness().value(), best);
        let again = Swarm::init(&cfg, dim, &mut sphere).unwrap();
        assert_eq!(swarm.particles(), again.particles());
    }

    #[test]
    fn argmin_prefers_lowest_index() {
        assert_eq!(argmin([3.0, 1.0, 1.0].into_iter()), 1);
        assert_eq!(argmin([f64::INFINITY, f64::INFINITY].into_iter()), 0);
        assert_eq!(argmin([f64::NAN, 2.0].into_iter()), 1);
    }

    #[test]
    fn config_validation() {
        let ok = PsoConfig::default();
        assert!(ok.validate(4).is_ok());
        let cases = [
            PsoConfig {
                swarm_size: 0,
                ..ok.clone()
            },
            PsoConfig {
                omega: 1.5,
                ..ok.clone()
            },
            PsoConfig {
                omega: 0.0,
                ..ok.clone()
            },
            PsoConfig {
                c1: 0.0,
                ..ok.clone()
            },
            PsoConfig {
                c2: -1.0,
                ..ok.clone()
            },
            PsoConfig {
                tol: 0.0,
                ..ok.clone()
            },
            PsoConfig {
                stagnation_limit: 0,
                ..ok.clone()
            },
            PsoConfig {
                tol_window: 0,
                ..ok.clone()
            },
            PsoConfig {
                max_iterations: 0,
                ..ok.clone()
            },
            PsoConfig {
                v_max: Some(vec![2.0; 3]),
                ..ok.clone()
            },
            PsoConfig {
                topology: Topology::RandomLocal { expected_links: 0 },
                ..ok.clone()
            },
            PsoConfig {
                swarm_size: 2,
                ..ok.clone()
            },
        ];
        for c in cases {
            assert!(c.validate(4).is_err(), "{c:?}");
        }
        assert!(ok.validate(0).is_err());
        let mut evaluated = false;
        let res = run(
            |_| {
                evaluated = true;
                CriterionValue::finite(CriterionKind::D, 1.0)
            },
            3,
            1,
            &PsoConfig {
                swarm_size: 0,
                ..ok
            },
        );
        assert!(res.is_err());
        assert!(!evaluated);
    }

    #[test]
    fn defaults() {
        let c = PsoConfig::default();
        assert!((c.omega - 0.7213475204444817).abs() < 1e-15);
        assert!((c.c1 - 1.1931471805599454).abs() < 1e-15);
        assert_eq!(c.c1, c.c2);
        assert!((c.tol - 1.4901161193847656e-8).abs() < 1e-20);
        assert_eq!(c.max_iterations, 5000);
        assert_eq!(c.stagnation_limit, 100);
        assert_eq!(c.tol_window, 100);
        assert_eq!(c.topology, Topology::RandomLocal { expected_links: 3 });
    }

    #[test]
    fn constant_objective_stagnates() {
        for topology in [Topology::Global, Topology::local()] {
            let cfg = PsoConfig {
                topology,
                stagnation_limit: 37,
                ..PsoConfig::default()
            };
            let res = run(
                |_| CriterionValue::finite(CriterionKind::D, 1.0),
                2,
                2,
                &cfg,
            )
            .unwrap();
            assert_eq!(res.stop_reason, StopReason::Stagnated);
            assert_eq!(res.iterations, 37);
            assert_eq!(res.function_evaluations, 50 * 38);
        }
    }

    #[test]
    fn max_iterations_cap() {
        let cfg = PsoConfig {
            max_iterations: 5,
            ..PsoConfig::default()
        };
        let res = run(
            |_| CriterionValue::finite(CriterionKind::D, 1.0),
            2,
            1,
            &cfg,
        )
        .unwrap();
        assert_eq!(res.stop_reason, StopReason::MaxIterations);
        assert_eq!(res.iterations, 5);
    }

    #[test]
    fn stopping_rule_order() {
        let cfg = PsoConfig {
            tol: 1e-3,
            tol_window: 1,
            stagnation_limit: 2,
            max_iterations: 10,
            ..PsoConfig::default()
        };
        let mut rule = StoppingRule::new(&cfg);
        let step = |a, b| Step {
            previous_best: a,
            best: b,
        };
        assert_eq!(rule.record(&step(f64::INFINITY, 5.0)), None);
        assert_eq!(rule.record(&step(5.0, 4.0)), None);
        assert_eq!(rule.record(&step(4.0, 4.0)), None);
        // improvement resets the stagnation counter
        assert_eq!(rule.record(&step(4.0, 3.0)), None);
        assert_eq!(rule.record(&step(3.0, 3.0)), None);
        assert_eq!(rule.record(&step(3.0, 3.0)), Some(StopReason::Stagnated));
        let mut rule = StoppingRule::new(&cfg);
        assert_eq!(
            rule.record(&step(3.0, 3.0 - 1e-4)),
            Some(StopReason::ConvergedTolerance)
        );
    }

    #[test]
    fn windowed_tolerance() {
        let cfg = PsoConfig {
            tol: 1e-3,
            tol_window: 3,
            stagnation_limit: 50,
            ..PsoConfig::default()
        };
        let mut rule = StoppingRule::new(&cfg);
        let step = |a, b| Step {
            previous_best: a,
            best: b,
        };
        // large early progress keeps the window change above tol
        assert_eq!(rule.record(&step(10.0, 5.0)), None);
        assert_eq!(rule.record(&step(5.0, 5.0 - 1e-4)), None);
        assert_eq!(rule.record(&step(5.0 - 1e-4, 5.0 - 1e-4)), None);
        // window now spans the last three iterations: 5.0 -> 5.0 - 2e-4
        assert_eq!(
            rule.record(&step(5.0 - 1e-4, 5.0 - 2e-4)),
            Some(StopReason::ConvergedTolerance)
        );
        // a non-improving iteration never triggers the tolerance rule
        let mut rule = StoppingRule::new(&PsoConfig {
            tol_window: 1,
            ..cfg
        });
        assert_eq!(rule.record(&step(1.0, 1.0)), None);
    }

    #[test]
    fn gbest_never_worsens_and_state_stays_feasible() {
        let crit = Criterion::new(CriterionKind::D, 2).unwrap();
        for topology in [Topology::Global, Topology::local()] {
            let cfg = PsoConfig {
                topology,
                swarm_size: 20,
                seed: 3,
                ..PsoConfig::default()
            };
            let (n, k) = (7, 2);
            let mut history: Vec<Vec<f64>> = vec![Vec::new(); cfg.swarm_size];
            let mut eval = |v: &[f64]| crit.evaluate(&devectorize(n, k, v).unwrap());
            let mut swarm = Swarm::init(&cfg, n * k, &mut eval).unwrap();
            for (h, p) in history.iter_mut().zip(swarm.particles()) {
                h.push(eval(&p.position).value());
            }
            let mut last = swarm.gbest_fitness().value();
            for _ in 0..60 {
                let step = swarm.iterate(&mut eval);
                if !step.improved() {
                    swarm.regenerate_links();
                }
                assert!(step.best <= last);
                last = step.best;
                for (h, p) in history.iter_mut().zip(swarm.particles()) {
                    h.push(eval(&p.position).value());
                    assert!(p.position.iter().all(|x| (-1.0..=1.0).contains(x)));
                    assert!(p.velocity.iter().all(|v| v.abs() <= 2.0));
                    let min = h.iter().copied().fold(f64::INFINITY, f64::min);
                    assert_eq!(p.pbest_fitness.value(), min);
                }
            }
        }
    }

    #[test]
    fn full_informers_reproduce_global() {
        let cfg_global = PsoConfig {
            topology: Topology::Global,
            swarm_size: 15,
            seed: 11,
            ..PsoConfig::default()
        };
        let cfg_local = PsoConfig {
            topology: Topology::local(),
            ..cfg_global.clone()
        };
        let dim = 4;
        let mut g = Swarm::init(&cfg_global, dim, &mut sphere).unwrap();
        let mut l = Swarm::init(&cfg_local, dim, &mut sphere).unwrap();
        let all: Vec<usize> = (0..cfg_local.swarm_size).collect();
        for p in &mut l.particles {
            p.informers = all.clone();
        }
        l.fixed_links = true;
        l.drop_self_social = false;
        for _ in 0..50 {
            let a = g.iterate(&mut sphere);
            let b = l.iterate(&mut sphere);
            assert_eq!(a, b);
            if !b.improved() {
                l.regenerate_links();
            }
            for (pg, pl) in g.particles().iter().zip(l.particles()) {
                assert_eq!(pg.position, pl.position);
                assert_eq!(pg.velocity, pl.velocity);
            }
        }
    }

    #[test]
    fn single_particle_swarm() {
        let cfg = PsoConfig {
            swarm_size: 1,
            topology: Topology::RandomLocal { expected_links: 1 },
            ..PsoConfig::default()
        };
        let res = run(
            |d| CriterionValue::finite(CriterionKind::D, (d.get(0, 0) - 0.5).powi(2)),
            1,
            1,
            &cfg,
        )
        .unwrap();
        assert_eq!(res.function_evaluations, res.iterations + 1);
        let swarm = Swarm::init(&cfg, 1, &mut sphere).unwrap();
        assert_eq!(swarm.particles()[0].informers, vec![0]);
    }
}
