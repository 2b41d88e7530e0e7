//! Stochastic imaginary-time projection with signed integer walkers.
//!
//! One iteration applies three steps to the parent population: spawning along
//! off-diagonal Hamiltonian connections, death/cloning against the diagonal
//! minus the energy shift, and sign-cancelling annihilation of the merged
//! counts. Once the population passes a threshold the shift enters variable
//! mode and is damped toward a stable walker count. Energies come from the
//! mixed estimator against a fixed reference wave function.
//!
//! Randomness is a counter-based generator with one substream per iteration,
//! so a (Hamiltonian, reference, seed) triple reproduces its trace bitwise.

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::htn::{htn_overlap_basis, HtnState};
use crate::pauli::{connected_states, PauliSum};
use crate::statevector::Statevector;

/// Signed integer walker counts keyed by basis index.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WalkerPopulation {
    counts: BTreeMap<u64, i64>,
    total_abs: u64,
}

impl WalkerPopulation {
    pub fn new() -> Self {
        WalkerPopulation::default()
    }

    /// Population holding `count` walkers on one basis state.
    pub fn single(h: u64, count: i64) -> Self {
        let mut pop = WalkerPopulation::new();
        pop.add(h, count);
        pop
    }

    /// Add a signed delta; zero entries are dropped.
    pub fn add(&mut self, h: u64, delta: i64) {
        if delta == 0 {
            return;
        }
        let entry = self.counts.entry(h).or_insert(0);
        self.total_abs -= entry.unsigned_abs();
        *entry += delta;
        self.total_abs += entry.unsigned_abs();
        if *entry == 0 {
            self.counts.remove(&h);
        }
    }

    pub fn count(&self, h: u64) -> i64 {
        self.counts.get(&h).copied().unwrap_or(0)
    }

    /// Total walker count Σ|w_h|.
    pub fn n_walkers(&self) -> u64 {
        self.total_abs
    }

    pub fn n_occupied(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Occupied states in ascending basis-index order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, i64)> + '_ {
        self.counts.iter().map(|(&h, &w)| (h, w))
    }
}

/// Signed spawn counts produced by one spawning step.
pub type SpawnBuffer = Vec<(u64, i64)>;

/// Cached Hamiltonian column: diagonal element plus off-diagonal connections.
#[derive(Debug)]
struct CachedColumn {
    diag: f64,
    neighbors: Vec<(u64, f64)>,
}

struct ColumnCache<'a> {
    hamiltonian: &'a PauliSum,
    columns: HashMap<u64, Rc<CachedColumn>>,
}

impl<'a> ColumnCache<'a> {
    fn new(hamiltonian: &'a PauliSum) -> Self {
        ColumnCache { hamiltonian, columns: HashMap::new() }
    }

    fn column(&mut self, h: u64) -> Rc<CachedColumn> {
        if let Some(col) = self.columns.get(&h) {
            return Rc::clone(col);
        }
        let col = Rc::new(CachedColumn {
            diag: self.hamiltonian.diagonal_element(h),
            neighbors: connected_states(self.hamiltonian, h),
        });
        self.columns.insert(h, Rc::clone(&col));
        col
    }
}

/// Deterministic count ⌊p⌋ per attempt plus a binomial draw for the
/// fractional remainder over `attempts` independent trials.
fn stochastic_round<R: Rng>(p: f64, attempts: u64, rng: &mut R) -> u64 {
    debug_assert!(p >= 0.0);
    let whole = p.floor();
    let frac = p - whole;
    let mut total = whole as u64 * attempts;
    if frac > 0.0 {
        total += Binomial::new(attempts, frac).expect("fraction in [0,1)").sample(rng);
    }
    total
}

fn spawn_with_cache<R: Rng>(
    pop: &WalkerPopulation,
    cache: &mut ColumnCache,
    dtau: f64,
    rng: &mut R,
) -> SpawnBuffer {
    let mut buffer = SpawnBuffer::new();
    for (h, w) in pop.iter() {
        let col = cache.column(h);
        let parents = w.unsigned_abs();
        let parent_sign = w.signum();
        for &(target, element) in &col.neighbors {
            let p = element.abs() * dtau;
            let children = stochastic_round(p, parents, rng);
            if children == 0 {
                continue;
            }
            // Each child carries sgn(−H_{h'h}) relative to its parent.
            let sign = parent_sign * if element > 0.0 { -1 } else { 1 };
            buffer.push((target, sign * children as i64));
        }
    }
    buffer
}

/// Spawning step: every parent walker on `h` attempts every connected state
/// h′ with probability |H_{h′h}|Δτ (deterministic part ⌊p⌋ guaranteed), and
/// children carry sign(w_h)·sgn(−H_{h′h}).
pub fn spawn_step<R: Rng>(
    pop: &WalkerPopulation,
    hamiltonian: &PauliSum,
    dtau: f64,
    rng: &mut R,
) -> SpawnBuffer {
    spawn_with_cache(pop, &mut ColumnCache::new(hamiltonian), dtau, rng)
}

fn death_clone_with_cache<R: Rng>(
    pop: &WalkerPopulation,
    cache: &mut ColumnCache,
    shift: f64,
    dtau: f64,
    rng: &mut R,
) -> SpawnBuffer {
    let mut deltas = SpawnBuffer::new();
    for (h, w) in pop.iter() {
        let q_signed = (cache.column(h).diag - shift) * dtau;
        if q_signed == 0.0 {
            continue;
        }
        let events = stochastic_round(q_signed.abs(), w.unsigned_abs(), rng);
        if events == 0 {
            continue;
        }
        // Positive (H_hh − S) removes walkers, negative clones them.
        let delta = if q_signed > 0.0 {
            -w.signum() * events as i64
        } else {
            w.signum() * events as i64
        };
        deltas.push((h, delta));
    }
    deltas
}

/// Death/cloning step against the shifted diagonal, returning signed deltas.
pub fn death_clone_step<R: Rng>(
    pop: &WalkerPopulation,
    hamiltonian: &PauliSum,
    shift: f64,
    dtau: f64,
    rng: &mut R,
) -> SpawnBuffer {
    death_clone_with_cache(pop, &mut ColumnCache::new(hamiltonian), shift, dtau, rng)
}

/// Merge signed buffers into the population; opposite signs cancel and empty
/// entries disappear.
pub fn annihilate(mut main: WalkerPopulation, spawned: &SpawnBuffer) -> WalkerPopulation {
    for &(h, delta) in spawned {
        main.add(h, delta);
    }
    main
}

/// Variable-shift update S ← S − ζ/(AΔτ)·ln(N_now/N_prev).
pub fn update_shift(
    s_prev: f64,
    n_now: u64,
    n_prev: u64,
    interval: usize,
    dtau: f64,
    damping: f64,
) -> Result<f64> {
    if n_now == 0 || n_prev == 0 {
        return Err(Error::PopulationExtinct(0));
    }
    Ok(s_prev - damping / (interval as f64 * dtau) * ((n_now as f64 / n_prev as f64).ln()))
}

/// Reference (trial) wave function: the overlap provider of the mixed
/// estimator.
#[derive(Debug, Clone)]
pub enum ReferenceWavefunction {
    /// δ_{h,h*}: the classical single-reference trial state.
    SingleBasis { h: u64 },
    /// Stored real overlaps ⟨ξ|φ_h⟩ for every basis state.
    Dense { label: String, overlaps: Vec<f64> },
}

/// Guard for eager overlap tabulation.
const REFERENCE_QUBIT_LIMIT: usize = 20;

impl ReferenceWavefunction {
    pub fn single_basis(h: u64) -> Self {
        ReferenceWavefunction::SingleBasis { h }
    }

    /// Reference from a dense statevector (e.g. an optimized ansatz state).
    /// The state must be real up to the crate tolerance.
    pub fn from_statevector(label: impl Into<String>, state: &Statevector) -> Result<Self> {
        let mut overlaps = Vec::with_capacity(state.dim());
        for amp in state.amplitudes() {
            if amp.im.abs() > crate::pauli::REALNESS_TOLERANCE {
                return Err(Error::ImaginaryResidue(amp.im.abs()));
            }
            overlaps.push(amp.re);
        }
        Ok(ReferenceWavefunction::Dense { label: label.into(), overlaps })
    }

    /// Reference from a tree state; overlaps are tabulated once through the
    /// tree contraction ⟨ψ|φ_h⟩.
    pub fn from_htn(state: &HtnState) -> Result<Self> {
        let nk = state.decomposition().n_qubits();
        if nk > REFERENCE_QUBIT_LIMIT {
            return Err(Error::SizeLimit(nk));
        }
        let mut overlaps = Vec::with_capacity(1usize << nk);
        for h in 0..(1u64 << nk) {
            overlaps.push(htn_overlap_basis(state, h)?);
        }
        Ok(ReferenceWavefunction::Dense { label: "htn".into(), overlaps })
    }

    /// Synthetic reference F|ψ_g⟩ + (1−F)|r⊥⟩ with a seeded random unit
    /// vector r⊥ orthogonal to the ground state, normalized after mixing.
    pub fn deviated(ground: &Statevector, f_weight: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&f_weight) {
            return Err(Error::InvalidConfig("deviation weight must lie in [0, 1]".into()));
        }
        let dim = ground.dim();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let raw: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let g: Vec<f64> = ground.amplitudes().iter().map(|a| a.re).collect();
        let proj: f64 = raw.iter().zip(&g).map(|(r, gi)| r * gi).sum();
        let mut orth: Vec<f64> = raw.iter().zip(&g).map(|(r, gi)| r - proj * gi).collect();
        let norm = orth.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut orth {
            *v /= norm;
        }
        let mut xi: Vec<f64> = g
            .iter()
            .zip(&orth)
            .map(|(gi, oi)| f_weight * gi + (1.0 - f_weight) * oi)
            .collect();
        let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut xi {
            *v /= norm;
        }
        Ok(ReferenceWavefunction::Dense { label: format!("deviated_f{}", f_weight), overlaps: xi })
    }

    /// Overlap ⟨ξ|φ_h⟩.
    pub fn overlap(&self, h: u64) -> f64 {
        match self {
            ReferenceWavefunction::SingleBasis { h: h_star } => {
                if h == *h_star {
                    1.0
                } else {
                    0.0
                }
            }
            ReferenceWavefunction::Dense { overlaps, .. } => {
                overlaps.get(h as usize).copied().unwrap_or(0.0)
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            ReferenceWavefunction::SingleBasis { h } => format!("single_basis_{}", h),
            ReferenceWavefunction::Dense { label, .. } => label.clone(),
        }
    }
}

/// Run parameters; all times in inverse Hartree.
#[derive(Debug, Clone, PartialEq)]
pub struct QmcConfig {
    pub dtau: f64,
    pub max_iters: usize,
    /// Walker count that switches on variable shift mode.
    pub n_shift_threshold: u64,
    /// Shift update interval A, in iterations.
    pub shift_interval: usize,
    /// Damping ζ.
    pub damping: f64,
    /// Starting shift; defaults to the diagonal energy of the initial state.
    pub initial_shift: Option<f64>,
    /// Averaging window (start, end), inclusive iteration numbers.
    pub window: (usize, usize),
    pub seed: u64,
    /// Floor for the mixed-energy denominator.
    pub denominator_floor: f64,
    /// Consecutive invalid mixed energies that abort the run.
    pub max_invalid_streak: usize,
}

impl Default for QmcConfig {
    fn default() -> Self {
        QmcConfig {
            dtau: 0.001,
            max_iters: 10_000,
            n_shift_threshold: 1_000,
            shift_interval: 5,
            damping: 0.1,
            initial_shift: None,
            window: (5_000, 10_000),
            seed: 0,
            denominator_floor: 1e-12,
            max_invalid_streak: 1_000,
        }
    }
}

impl QmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dtau <= 0.0 {
            return Err(Error::InvalidConfig("time increment must be positive".into()));
        }
        if self.shift_interval < 1 {
            return Err(Error::InvalidConfig("shift interval must be at least 1".into()));
        }
        if self.window.0 >= self.window.1 || self.window.1 > self.max_iters {
            return Err(Error::InvalidConfig(
                "window must satisfy start < end ≤ max iterations".into(),
            ));
        }
        Ok(())
    }
}

/// One row of the run trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub tau: f64,
    pub n_walkers: u64,
    pub shift: f64,
    /// None when the denominator fell below its floor.
    pub e_mix: Option<f64>,
}

/// Per-iteration record of a projection run.
#[derive(Debug, Clone, Default)]
pub struct RunTrace {
    records: Vec<IterationRecord>,
    /// Iteration at which variable shift mode activated, if it did.
    pub shift_mode_start: Option<usize>,
    pub initial_state: u64,
}

impl RunTrace {
    pub fn records(&self) -> &[IterationRecord] {
        &self.records
    }

    /// Trace rows in the `iteration,tau,n_walkers,shift,e_mix,e_mix_valid`
    /// layout.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,tau,n_walkers,shift,e_mix,e_mix_valid\n");
        for r in &self.records {
            let (e, valid) = match r.e_mix {
                Some(e) => (format!("{:.12e}", e), 1),
                None => ("nan".to_string(), 0),
            };
            out.push_str(&format!(
                "{},{:.6e},{},{:.12e},{},{}\n",
                r.iteration, r.tau, r.n_walkers, r.shift, e, valid
            ));
        }
        out
    }
}

fn mixed_energy_with_cache(
    reference: &ReferenceWavefunction,
    pop: &WalkerPopulation,
    cache: &mut ColumnCache,
    floor: f64,
) -> Result<f64> {
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for (h, w) in pop.iter() {
        let col = cache.column(h);
        let w = w as f64;
        denominator += w * reference.overlap(h);
        let mut column_sum = reference.overlap(h) * col.diag;
        for &(h2, element) in &col.neighbors {
            let ov = reference.overlap(h2);
            if ov != 0.0 {
                column_sum += ov * element;
            }
        }
        numerator += w * column_sum;
    }
    if denominator.abs() < floor {
        return Err(Error::VanishingDenominator(denominator.abs()));
    }
    Ok(numerator / denominator)
}

/// Mixed energy ⟨ξ|H|ψ⟩ / ⟨ξ|ψ⟩ of a walker population against a reference.
pub fn mixed_energy(
    reference: &ReferenceWavefunction,
    pop: &WalkerPopulation,
    hamiltonian: &PauliSum,
) -> Result<f64> {
    mixed_energy_with_cache(reference, pop, &mut ColumnCache::new(hamiltonian), 1e-12)
}

/// Full projection run: one walker starts on `initial_state`, the shift
/// starts at that state's diagonal energy unless overridden, and the mixed
/// energy is recorded every iteration.
pub fn run_fciqmc(
    hamiltonian: &PauliSum,
    reference: &ReferenceWavefunction,
    initial_state: u64,
    cfg: &QmcConfig,
) -> Result<RunTrace> {
    cfg.validate()?;
    let mut cache = ColumnCache::new(hamiltonian);
    let mut pop = WalkerPopulation::single(initial_state, 1);
    let mut shift = cfg.initial_shift.unwrap_or_else(|| hamiltonian.diagonal_element(initial_state));

    let mut trace = RunTrace { initial_state, ..Default::default() };
    let mut invalid_streak = 0usize;
    let record = |iteration: usize,
                      pop: &WalkerPopulation,
                      shift: f64,
                      cache: &mut ColumnCache,
                      invalid_streak: &mut usize|
     -> Result<IterationRecord> {
        let e_mix = match mixed_energy_with_cache(reference, pop, cache, cfg.denominator_floor) {
            Ok(e) => {
                *invalid_streak = 0;
                Some(e)
            }
            Err(Error::VanishingDenominator(_)) => {
                *invalid_streak += 1;
                None
            }
            Err(other) => return Err(other),
        };
        Ok(IterationRecord {
            iteration,
            tau: iteration as f64 * cfg.dtau,
            n_walkers: pop.n_walkers(),
            shift,
            e_mix,
        })
    };

    let rec = record(0, &pop, shift, &mut cache, &mut invalid_streak)?;
    trace.records.push(rec);

    let mut shift_baseline: Option<(usize, u64)> = None;
    for iteration in 1..=cfg.max_iters {
        // One substream per iteration: the trace does not depend on how many
        // draws earlier iterations consumed.
        let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
        rng.set_stream(iteration as u64);

        let spawned = spawn_with_cache(&pop, &mut cache, cfg.dtau, &mut rng);
        let deaths = death_clone_with_cache(&pop, &mut cache, shift, cfg.dtau, &mut rng);
        pop = annihilate(pop, &deaths);
        pop = annihilate(pop, &spawned);

        if pop.is_empty() {
            return Err(Error::PopulationExtinct(iteration));
        }

        match shift_baseline {
            None => {
                if pop.n_walkers() > cfg.n_shift_threshold {
                    shift_baseline = Some((iteration, pop.n_walkers()));
                    trace.shift_mode_start = Some(iteration);
                }
            }
            Some((last_update, n_prev)) => {
                if iteration - last_update == cfg.shift_interval {
                    shift = update_shift(
                        shift,
                        pop.n_walkers(),
                        n_prev,
                        cfg.shift_interval,
                        cfg.dtau,
                        cfg.damping,
                    )?;
                    shift_baseline = Some((iteration, pop.n_walkers()));
                }
            }
        }

        let rec = record(iteration, &pop, shift, &mut cache, &mut invalid_streak)?;
        trace.records.push(rec);
        if invalid_streak > cfg.max_invalid_streak {
            return Err(Error::InvalidEnergyStreak(invalid_streak));
        }
    }
    Ok(trace)
}
