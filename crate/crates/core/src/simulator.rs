//! Monte Carlo realizations of the attachment process.
//!
//! Two modes are provided:
//!
//! * **marginal**: a single node's degree as a dependent Bernoulli sequence.
//!   Born at time `m` with degree 1; at each `t` in `(m, n]` it gains an edge
//!   with probability `X / (2t - 1)`.
//! * **graph**: full growth. At time `t` the arriving node attaches its edge
//!   to existing node `i` with probability `degree(i) / (2t - 1)`. The
//!   existing degrees sum to `2t - 3`, and the leftover `2 / (2t - 1)` is a
//!   self-loop on the arriving node, which then has degree 2. Every existing
//!   node therefore sees exactly the marginal law above, and the degrees sum
//!   to `2t - 1`.
//!
//! # Random streams
//!
//! Trial `i` of a run with master seed `s` uses its own ChaCha8 stream:
//!
//! 1. Expand `s` into four 64-bit words with SplitMix64 (state starts at `s`;
//!    each output adds `0x9E3779B97F4A7C15` to the state, then mixes with
//!    `z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9`,
//!    `z = (z ^ (z >> 27)) * 0x94D049BB133111EB`, `z ^ (z >> 31)`).
//! 2. The words, little-endian and in order, form the 32-byte ChaCha8 key.
//! 3. The ChaCha 64-bit stream id is set to `i`.
//!
//! Draws are exact integer comparisons: a uniform `u` in `0..2t-1` is taken
//! from 64-bit outputs by Lemire's widening-multiply rejection method, and
//! "gain an edge" means `u < X`. In graph mode `u` is located in the
//! cumulative degree vector by linear scan; `u >= 2t - 3` is the self-loop.
//! Counts are therefore reproducible bit for bit on every platform and
//! independent of how trials are spread over threads.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Random stream owned by one trial.
pub type TrialRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SimulationMode {
    Marginal,
    Graph,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulationConfig {
    pub mode: SimulationMode,
    /// Birth time `m` of the tracked node.
    pub birth: usize,
    /// Observation time `n`.
    pub horizon: usize,
    pub trials: u64,
    pub master_seed: u64,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.birth < 1 {
            return Err(Error::InvalidArgument("birth index m must be at least 1".into()));
        }
        if self.birth > self.horizon {
            return Err(Error::InvalidArgument(format!(
                "birth index m = {} exceeds horizon n = {}",
                self.birth, self.horizon
            )));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        Ok(())
    }
}

/// Degrees of a grown graph, node `i` at index `i - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphState {
    degrees: Vec<u64>,
}

impl Default for GraphState {
    fn default() -> Self {
        Self::new()
    }
}

impl GraphState {
    /// Time 1: one node of degree 1.
    pub fn new() -> Self {
        Self { degrees: vec![1] }
    }

    pub fn time(&self) -> usize {
        self.degrees.len()
    }

    pub fn degrees(&self) -> &[u64] {
        &self.degrees
    }

    /// Degree of node `m`, `None` if it has not been born yet.
    pub fn degree(&self, m: usize) -> Option<u64> {
        self.degrees.get(m.checked_sub(1)?).copied()
    }

    pub fn total_degree(&self) -> u64 {
        self.degrees.iter().sum()
    }

    /// Adds node `t = time() + 1`.
    pub fn step<R: RngCore + ?Sized>(&mut self, rng: &mut R) {
        let t = self.degrees.len() as u64 + 1;
        let u = uniform_below(rng, 2 * t - 1);
        let mut cumulative = 0;
        let target = self.degrees.iter().position(|&d| {
            cumulative += d;
            u < cumulative
        });
        match target {
            Some(i) => {
                self.degrees[i] += 1;
                self.degrees.push(1);
            }
            None => self.degrees.push(2),
        }
        debug_assert_eq!(self.total_degree(), 2 * t - 1);
    }
}

/// SplitMix64 output sequence.
struct SplitMix64(u64);

impl SplitMix64 {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// Stream for trial `trial_index` under `master_seed`; see the module docs.
pub fn derive_stream(master_seed: u64, trial_index: u64) -> TrialRng {
    let mut mix = SplitMix64(master_seed);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&mix.next().to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(trial_index);
    rng
}

/// Uniform integer in `0..bound` (Lemire, unbiased).
fn uniform_below<R: RngCore + ?Sized>(rng: &mut R, bound: u64) -> u64 {
    debug_assert!(bound > 0);
    let mut product = u128::from(rng.next_u64()) * u128::from(bound);
    let mut low = product as u64;
    if low < bound {
        let threshold = bound.wrapping_neg() % bound;
        while low < threshold {
            product = u128::from(rng.next_u64()) * u128::from(bound);
            low = product as u64;
        }
    }
    (product >> 64) as u64
}

/// Final degree at time `n` of the node born at time `m`, tracked alone.
pub fn simulate_marginal<R: RngCore + ?Sized>(m: usize, n: usize, rng: &mut R) -> usize {
    assert!(m >= 1 && m <= n, "need 1 <= m <= n, got m = {m}, n = {n}");
    let mut degree = 1u64;
    for t in (m as u64 + 1)..=(n as u64) {
        if uniform_below(rng, 2 * t - 1) < degree {
            degree += 1;
        }
    }
    degree as usize
}

/// Grows a full graph to time `n`.
pub fn simulate_graph<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> GraphState {
    assert!(n >= 1, "graph horizon must be at least 1");
    let mut state = GraphState::new();
    state.degrees.reserve(n - 1);
    while state.time() < n {
        state.step(rng);
    }
    assert_eq!(state.total_degree(), 2 * n as u64 - 1, "degree sum drifted");
    state
}

/// Number of degree cells node `m` can occupy at time `n` in `mode`.
pub fn support_len(mode: SimulationMode, m: usize, n: usize) -> usize {
    match mode {
        SimulationMode::Graph if m >= 2 => n - m + 2,
        _ => n - m + 1,
    }
}

/// Degree counts of node `birth` at time `horizon` over many trials.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalDistribution {
    birth: usize,
    horizon: usize,
    /// `counts[k - 1]` trials ended with degree `k`.
    counts: Vec<u64>,
    trials: u64,
    master_seed: u64,
}

impl EmpiricalDistribution {
    /// Builds a distribution from explicit counts for degrees `1..=counts.len()`.
    /// The length must be `n - m + 1`, or `n - m + 2` for a graph-mode node
    /// born after time 1.
    pub fn from_counts(birth: usize, horizon: usize, counts: Vec<u64>, master_seed: u64) -> Result<Self> {
        if birth < 1 || birth > horizon {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= m <= n, got m = {birth}, n = {horizon}"
            )));
        }
        let base = horizon - birth + 1;
        if counts.len() != base && !(birth >= 2 && counts.len() == base + 1) {
            return Err(Error::InvalidArgument(format!(
                "expected {base} count cells, got {}",
                counts.len()
            )));
        }
        let trials = counts.iter().sum();
        if trials == 0 {
            return Err(Error::InvalidArgument("counts are all zero".into()));
        }
        Ok(Self {
            birth,
            horizon,
            counts,
            trials,
            master_seed,
        })
    }

    pub fn birth(&self) -> usize {
        self.birth
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, k: usize) -> u64 {
        k.checked_sub(1).and_then(|i| self.counts.get(i)).copied().unwrap_or(0)
    }

    pub fn frequency(&self, k: usize) -> f64 {
        self.count(k) as f64 / self.trials as f64
    }
}

fn zeroed_counts(len: usize) -> Result<Vec<u64>> {
    let mut counts = Vec::new();
    counts
        .try_reserve_exact(len)
        .map_err(|e| Error::ResourceExhausted(format!("count table of {len} cells: {e}")))?;
    counts.resize(len, 0);
    Ok(counts)
}

/// Runs `config.trials` independent replicas in parallel.
pub fn run_trials(config: &SimulationConfig) -> Result<EmpiricalDistribution> {
    config.validate()?;
    let (m, n) = (config.birth, config.horizon);
    let len = support_len(config.mode, m, n);
    if config.mode == SimulationMode::Graph {
        // One probe allocation of a full graph, so an impossible horizon fails
        // up front instead of inside a worker.
        let mut probe: Vec<u64> = Vec::new();
        probe
            .try_reserve_exact(n)
            .map_err(|e| Error::ResourceExhausted(format!("graph of {n} nodes: {e}")))?;
    }
    let empty = zeroed_counts(len)?;

    let counts = (0..config.trials)
        .into_par_iter()
        .fold(
            || empty.clone(),
            |mut acc, trial| {
                let mut rng = derive_stream(config.master_seed, trial);
                let degree = match config.mode {
                    SimulationMode::Marginal => simulate_marginal(m, n, &mut rng),
                    SimulationMode::Graph => {
                        let state = simulate_graph(n, &mut rng);
                        state.degree(m).expect("tracked node exists") as usize
                    }
                };
                acc[degree - 1] += 1;
                acc
            },
        )
        .reduce(
            || empty.clone(),
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );

    Ok(EmpiricalDistribution {
        birth: m,
        horizon: n,
        counts,
        trials: config.trials,
        master_seed: config.master_seed,
    })
}
