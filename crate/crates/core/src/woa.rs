//! Whale Optimization Algorithm over a box-bounded continuous domain.
//!
//! Each iteration `t` of `T` uses `a = 2 - 2t/T`. Every agent draws fresh
//! coefficient vectors `A = 2a·r - a` and `C = 2·r` (one `r ~ U[0,1)` per
//! component), a spiral parameter `l ~ U[-1,1]` and a branch draw
//! `p ~ U[0,1)`, then moves by exactly one rule:
//!
//! | condition               | move                                        |
//! |-------------------------|---------------------------------------------|
//! | `p < 0.5`, all `|A_i| < 1` | encircle: `X* - A·|C·X* - X|`            |
//! | `p < 0.5`, otherwise    | explore: `X_r - A·|C·X_r - X|`, random `r`  |
//! | `p ≥ 0.5`               | spiral: `|X* - X|·e^{bl}·cos(2πl) + X*`     |
//!
//! All products are componentwise. Positions are clamped into the box, the
//! whole population is evaluated (optionally in parallel) and the incumbent
//! best `X*` is replaced only by a strictly better fitness.
//!
//! Coefficient sampling and position updates run serially in agent order
//! from one random stream, so a seed fully determines the run no matter how
//! fitness evaluation is scheduled.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ErrorKind;

/// Probability threshold separating the encircle/explore pair from the spiral.
pub const SPIRAL_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum WoaError {
    #[error("invalid optimizer config: {0}")]
    InvalidConfig(String),
    #[error("vector dimensions differ ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("iteration {t} outside schedule of {max} iterations")]
    IterationOutOfRange { t: usize, max: usize },
    #[error("objective returned {value} for agent {agent} at iteration {iteration:?}")]
    NonFiniteObjective {
        agent: usize,
        /// `None` during initial population evaluation.
        iteration: Option<usize>,
        value: f64,
    },
}

impl WoaError {
    pub(crate) fn kind(&self) -> ErrorKind {
        match self {
            WoaError::NonFiniteObjective { .. } => ErrorKind::Numeric,
            _ => ErrorKind::Data,
        }
    }
}

/// Per-dimension search box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Self {
        Self {
            lower: vec![lower; dim],
            upper: vec![upper; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn validate(&self) -> Result<(), WoaError> {
        if self.lower.len() != self.upper.len() {
            return Err(WoaError::DimensionMismatch(
                self.lower.len(),
                self.upper.len(),
            ));
        }
        if self.lower.is_empty() {
            return Err(WoaError::InvalidConfig(
                "dimension must be at least 1".into(),
            ));
        }
        for (i, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(WoaError::InvalidConfig(format!(
                    "bounds of dimension {i} must be finite with lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WoaConfig {
    pub population_size: usize,
    pub max_iterations: usize,
    pub bounds: Bounds,
    /// Logarithmic spiral shape `b`.
    pub spiral_shape: f64,
    pub seed: u64,
    /// Evaluate the population on the rayon pool. Never changes results.
    pub parallel: bool,
}

impl WoaConfig {
    pub fn new(dim: usize, lower: f64, upper: f64) -> Self {
        Self {
            population_size: 30,
            max_iterations: 200,
            bounds: Bounds::uniform(dim, lower, upper),
            spiral_shape: 1.0,
            seed: 0,
            parallel: false,
        }
    }

    pub fn dimension(&self) -> usize {
        self.bounds.dim()
    }

    pub fn validate(&self) -> Result<(), WoaError> {
        if self.population_size < 2 {
            return Err(WoaError::InvalidConfig(format!(
                "population_size must be >= 2, got {}",
                self.population_size
            )));
        }
        if self.max_iterations < 1 {
            return Err(WoaError::InvalidConfig(
                "max_iterations must be >= 1".into(),
            ));
        }
        if !(self.spiral_shape.is_finite() && self.spiral_shape > 0.0) {
            return Err(WoaError::InvalidConfig(format!(
                "spiral_shape must be a positive finite number, got {}",
                self.spiral_shape
            )));
        }
        self.bounds.validate()
    }
}

/// Linearly decreasing `a`: 2 at `t = 0`, approaching 0 at `t = T`.
pub fn coefficient_a(t: usize, max_iterations: usize) -> Result<f64, WoaError> {
    if t >= max_iterations {
        return Err(WoaError::IterationOutOfRange {
            t,
            max: max_iterations,
        });
    }
    Ok(2.0 - 2.0 * t as f64 / max_iterations as f64)
}

/// Random coefficients for a single agent update.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateCoefficients {
    pub a_vec: Vec<f64>,
    pub c_vec: Vec<f64>,
    pub l: f64,
    pub p: f64,
}

impl UpdateCoefficients {
    /// Build coefficients from raw uniform draws: `r_a`, `r_c` and `u_l` in
    /// `[0, 1)`, `p` used as is.
    pub fn from_uniforms(a: f64, r_a: &[f64], r_c: &[f64], u_l: f64, p: f64) -> Self {
        Self {
            a_vec: r_a.iter().map(|r| 2.0 * a * r - a).collect(),
            c_vec: r_c.iter().map(|r| 2.0 * r).collect(),
            l: 2.0 * u_l - 1.0,
            p,
        }
    }

    pub fn branch(&self) -> Branch {
        if self.p >= SPIRAL_THRESHOLD {
            Branch::Spiral
        } else if self.a_vec.iter().all(|a| a.abs() < 1.0) {
            Branch::Encircle
        } else {
            Branch::Explore
        }
    }
}

/// Draws `A`, `C`, `l`, `p` in that order from `rng`.
pub fn sample_coefficients<R: Rng + ?Sized>(a: f64, dim: usize, rng: &mut R) -> UpdateCoefficients {
    let r_a: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    let r_c: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    let u_l = rng.gen::<f64>();
    let p = rng.gen::<f64>();
    UpdateCoefficients::from_uniforms(a, &r_a, &r_c, u_l, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Encircle,
    Explore,
    Spiral,
}

fn same_dim(a: &[f64], b: &[f64]) -> Result<(), WoaError> {
    if a.len() != b.len() {
        return Err(WoaError::DimensionMismatch(a.len(), b.len()));
    }
    Ok(())
}

fn toward(x: &[f64], target: &[f64], a_vec: &[f64], c_vec: &[f64]) -> Result<Vec<f64>, WoaError> {
    same_dim(x, target)?;
    same_dim(x, a_vec)?;
    same_dim(x, c_vec)?;
    Ok(x.iter()
        .zip(target)
        .zip(a_vec.iter().zip(c_vec))
        .map(|((xi, ti), (ai, ci))| ti - ai * (ci * ti - xi).abs())
        .collect())
}

/// Shrinking-encircle move toward the best agent.
pub fn encircle_update(
    x: &[f64],
    x_best: &[f64],
    a_vec: &[f64],
    c_vec: &[f64],
) -> Result<Vec<f64>, WoaError> {
    toward(x, x_best, a_vec, c_vec)
}

/// Exploration move relative to a randomly chosen agent.
pub fn explore_update(
    x: &[f64],
    x_rand: &[f64],
    a_vec: &[f64],
    c_vec: &[f64],
) -> Result<Vec<f64>, WoaError> {
    toward(x, x_rand, a_vec, c_vec)
}

/// Logarithmic spiral around the best agent.
pub fn spiral_update(x: &[f64], x_best: &[f64], b: f64, l: f64) -> Result<Vec<f64>, WoaError> {
    same_dim(x, x_best)?;
    let factor = (b * l).exp() * (2.0 * PI * l).cos();
    Ok(x.iter()
        .zip(x_best)
        .map(|(xi, bi)| (bi - xi).abs() * factor + bi)
        .collect())
}

pub fn clamp(x: &mut [f64], bounds: &Bounds) {
    for (v, (lo, hi)) in x.iter_mut().zip(bounds.lower.iter().zip(&bounds.upper)) {
        *v = v.clamp(*lo, *hi);
    }
}

/// Source of all randomness an optimizer run consumes.
pub trait CoefficientSource {
    /// Uniform in `[0, 1)`, used for population initialization.
    fn unit(&mut self) -> f64;
    /// Uniform index in `0..n`, used to pick the exploration partner.
    fn index(&mut self, n: usize) -> usize;
    fn coefficients(&mut self, a: f64, dim: usize) -> UpdateCoefficients;
}

/// The production source: one ChaCha8 stream seeded from the config.
#[derive(Debug, Clone)]
pub struct SeededSource(ChaCha8Rng);

impl SeededSource {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }
}

impl CoefficientSource for SeededSource {
    fn unit(&mut self) -> f64 {
        self.0.gen()
    }

    fn index(&mut self, n: usize) -> usize {
        self.0.gen_range(0..n)
    }

    fn coefficients(&mut self, a: f64, dim: usize) -> UpdateCoefficients {
        sample_coefficients(a, dim, &mut self.0)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchCounts {
    pub encircle: u64,
    pub explore: u64,
    pub spiral: u64,
}

impl BranchCounts {
    pub fn total(&self) -> u64 {
        self.encircle + self.explore + self.spiral
    }
}

/// Optimizer state after a completed iteration (or after initialization,
/// with `iteration == 0` and an empty history).
#[derive(Debug, Clone, PartialEq)]
pub struct WoaState {
    /// Number of completed iterations.
    pub iteration: usize,
    /// `a` used by the most recent iteration (2 before the first).
    pub a: f64,
    pub positions: Vec<Vec<f64>>,
    pub fitnesses: Vec<f64>,
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
    /// Best fitness after each completed iteration.
    pub history: Vec<f64>,
    pub branch_counts: BranchCounts,
    pub evaluations: u64,
}

/// Step-wise optimizer driver.
pub struct Woa<'a, F, S> {
    objective: F,
    config: &'a WoaConfig,
    source: S,
    state: WoaState,
}

impl<'a, F, S> Woa<'a, F, S>
where
    F: Fn(&[f64]) -> f64 + Sync,
    S: CoefficientSource,
{
    /// Initializes the population uniformly in the box and evaluates it.
    pub fn new(objective: F, config: &'a WoaConfig, mut source: S) -> Result<Self, WoaError> {
        config.validate()?;
        let b = &config.bounds;
        let positions: Vec<Vec<f64>> = (0..config.population_size)
            .map(|_| {
                b.lower
                    .iter()
                    .zip(&b.upper)
                    .map(|(lo, hi)| lo + source.unit() * (hi - lo))
                    .collect()
            })
            .collect();
        let fitnesses = evaluate(&objective, &positions, config.parallel, None)?;

        let mut best = 0;
        for (i, f) in fitnesses.iter().enumerate() {
            if *f < fitnesses[best] {
                best = i;
            }
        }
        let state = WoaState {
            iteration: 0,
            a: 2.0,
            best_position: positions[best].clone(),
            best_fitness: fitnesses[best],
            evaluations: positions.len() as u64,
            positions,
            fitnesses,
            history: Vec::with_capacity(config.max_iterations),
            branch_counts: BranchCounts::default(),
        };
        Ok(Self {
            objective,
            config,
            source,
            state,
        })
    }

    pub fn state(&self) -> &WoaState {
        &self.state
    }

    pub fn into_state(self) -> WoaState {
        self.state
    }

    pub fn is_done(&self) -> bool {
        self.state.iteration >= self.config.max_iterations
    }

    /// Runs one iteration. Returns `Ok(false)` once the budget is spent.
    pub fn step(&mut self) -> Result<bool, WoaError> {
        if self.is_done() {
            return Ok(false);
        }
        let cfg = self.config;
        let t = self.state.iteration;
        let a = coefficient_a(t, cfg.max_iterations)?;
        let dim = cfg.dimension();
        let n = cfg.population_size;
        let st = &mut self.state;

        for i in 0..n {
            let co = self.source.coefficients(a, dim);
            let x = &st.positions[i];
            let mut next = match co.branch() {
                Branch::Encircle => {
                    st.branch_counts.encircle += 1;
                    encircle_update(x, &st.best_position, &co.a_vec, &co.c_vec)?
                }
                Branch::Explore => {
                    st.branch_counts.explore += 1;
                    let r = self.source.index(n);
                    explore_update(x, &st.positions[r], &co.a_vec, &co.c_vec)?
                }
                Branch::Spiral => {
                    st.branch_counts.spiral += 1;
                    spiral_update(x, &st.best_position, cfg.spiral_shape, co.l)?
                }
            };
            clamp(&mut next, &cfg.bounds);
            st.positions[i] = next;
        }

        st.fitnesses = evaluate(&self.objective, &st.positions, cfg.parallel, Some(t))?;
        st.evaluations += n as u64;
        for (i, f) in st.fitnesses.iter().enumerate() {
            if *f < st.best_fitness {
                st.best_fitness = *f;
                st.best_position.clone_from(&st.positions[i]);
            }
        }
        st.a = a;
        st.iteration += 1;
        st.history.push(st.best_fitness);
        Ok(true)
    }

    pub fn run(mut self) -> Result<WoaState, WoaError> {
        while self.step()? {}
        Ok(self.state)
    }
}

fn evaluate<F>(
    objective: &F,
    positions: &[Vec<f64>],
    parallel: bool,
    iteration: Option<usize>,
) -> Result<Vec<f64>, WoaError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let values: Vec<f64> = if parallel {
        positions.par_iter().map(|x| objective(x)).collect()
    } else {
        positions.iter().map(|x| objective(x)).collect()
    };
    if let Some((agent, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(WoaError::NonFiniteObjective {
            agent,
            iteration,
            value,
        });
    }
    Ok(values)
}

/// Minimizes `objective` with the config's seeded random stream.
pub fn optimize<F>(objective: F, config: &WoaConfig) -> Result<WoaState, WoaError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    optimize_with(objective, config, SeededSource::new(config.seed))
}

pub fn optimize_with<F, S>(
    objective: F,
    config: &WoaConfig,
    source: S,
) -> Result<WoaState, WoaError>
where
    F: Fn(&[f64]) -> f64 + Sync,
    S: CoefficientSource,
{
    Woa::new(objective, config, source)?.run()
}

/// Convergence history as `iteration,best_fitness` CSV, iterations from 1.
pub fn history_csv(history: &[f64]) -> String {
    let mut out = String::from("iteration,best_fitness\n");
    for (i, f) in history.iter().enumerate() {
        let _ = writeln!(out, "{},{}", i + 1, f);
    }
    out
}

/// Standard test objectives.
pub mod benchmarks {
    use std::f64::consts::PI;

    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub enum Objective {
        Sphere,
        Rosenbrock,
        Rastrigin,
    }

    impl Objective {
        pub const ALL: [Objective; 3] = [
            Objective::Sphere,
            Objective::Rosenbrock,
            Objective::Rastrigin,
        ];

        pub fn eval(self, x: &[f64]) -> f64 {
            match self {
                Objective::Sphere => sphere(x),
                Objective::Rosenbrock => rosenbrock(x),
                Objective::Rastrigin => rastrigin(x),
            }
        }

        pub fn name(self) -> &'static str {
            match self {
                Objective::Sphere => "sphere",
                Objective::Rosenbrock => "rosenbrock",
                Objective::Rastrigin => "rastrigin",
            }
        }
    }

    impl std::str::FromStr for Objective {
        type Err = String;

        fn from_str(s: &str) -> Result<Self, Self::Err> {
            Objective::ALL
                .into_iter()
                .find(|o| o.name().eq_ignore_ascii_case(s))
                .ok_or_else(|| format!("unknown objective {s:?} (sphere, rosenbrock, rastrigin)"))
        }
    }

    pub fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    pub fn rosenbrock(x: &[f64]) -> f64 {
        x.windows(2)
            .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
            .sum()
    }

    pub fn rastrigin(x: &[f64]) -> f64 {
        10.0 * x.len() as f64
            + x.iter()
                .map(|v| v * v - 10.0 * (2.0 * PI * v).cos())
                .sum::<f64>()
    }
}
