//! Variational energy minimization for plain circuits and tree states.
//!
//! Two local optimizers are built in: a Nelder-Mead simplex (derivative free)
//! and a BFGS path driven by central finite differences. Both are
//! deterministic for a fixed starting point, so a (Hamiltonian, seed, config)
//! triple always reproduces the same trace.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::htn::{htn_energy, HtnState};
use crate::pauli::{PauliOp, PauliString, PauliSum};
use crate::statevector::{apply_circuit, expectation, Circuit, ParameterVector, Statevector};

/// Local optimizer selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerMethod {
    /// Nelder-Mead simplex.
    NelderMead,
    /// BFGS with central finite-difference gradients.
    FdBfgs,
    /// Simplex warm-up followed by a BFGS polish.
    NelderMeadThenBfgs,
}

impl OptimizerMethod {
    pub fn label(&self) -> &'static str {
        match self {
            OptimizerMethod::NelderMead => "nelder_mead",
            OptimizerMethod::FdBfgs => "fd_bfgs",
            OptimizerMethod::NelderMeadThenBfgs => "nm_bfgs",
        }
    }
}

/// How the tree-state parameters are updated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HtnUpdateMode {
    /// All tensors in one flat parameter vector.
    Joint,
    /// Tensor-wise sweeps: each lower tensor, then the upper tensor.
    Alternating,
}

/// Optimizer settings shared by all variational runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub method: OptimizerMethod,
    /// Cost-evaluation budget.
    pub max_evals: usize,
    /// Convergence tolerance on the energy change, Hartree.
    pub tol: f64,
    pub seed: u64,
    /// Initial angles are drawn uniformly from [init_low, init_high).
    pub init_low: f64,
    pub init_high: f64,
    pub htn_update: HtnUpdateMode,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            method: OptimizerMethod::NelderMeadThenBfgs,
            max_evals: 10_000,
            tol: 1e-8,
            seed: 0,
            init_low: 0.0,
            init_high: 1.0,
            htn_update: HtnUpdateMode::Joint,
        }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        if self.init_low >= self.init_high {
            return Err(Error::InvalidConfig("init range low must be below high".into()));
        }
        if self.max_evals < 1 {
            return Err(Error::InvalidConfig("max_evals must be at least 1".into()));
        }
        Ok(())
    }
}

/// Outcome of a variational run.
#[derive(Debug, Clone)]
pub struct VqeResult {
    pub params: ParameterVector,
    pub energy: f64,
    /// Best-seen energy after each cost evaluation; non-increasing.
    pub trace: Vec<f64>,
    pub n_evals: usize,
    /// False when the run stopped on budget rather than tolerance.
    pub converged: bool,
    /// Method and update-mode tag for reporting.
    pub label: String,
}

/// Deterministic uniform draw of `count` angles from [low, high).
pub fn init_params(count: usize, seed: u64, low: f64, high: f64) -> ParameterVector {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.gen_range(low..high)).collect()
}

/// Book-keeping wrapper over the cost function: counts evaluations, tracks
/// the best point, and records the monotone trace.
struct CostTracker<'a> {
    cost: Box<dyn FnMut(&[f64]) -> f64 + 'a>,
    n_evals: usize,
    max_evals: usize,
    best_params: Vec<f64>,
    best_value: f64,
    trace: Vec<f64>,
}

impl<'a> CostTracker<'a> {
    fn new(cost: impl FnMut(&[f64]) -> f64 + 'a, max_evals: usize, start: &[f64]) -> Self {
        CostTracker {
            cost: Box::new(cost),
            n_evals: 0,
            max_evals,
            best_params: start.to_vec(),
            best_value: f64::INFINITY,
            trace: Vec::new(),
        }
    }

    fn exhausted(&self) -> bool {
        self.n_evals >= self.max_evals
    }

    fn eval(&mut self, x: &[f64]) -> f64 {
        let value = (self.cost)(x);
        self.n_evals += 1;
        if value < self.best_value {
            self.best_value = value;
            self.best_params = x.to_vec();
        }
        self.trace.push(self.best_value);
        value
    }
}

fn nelder_mead(tracker: &mut CostTracker, start: &[f64], tol: f64) -> bool {
    let dim = start.len();
    if dim == 0 {
        tracker.eval(start);
        return true;
    }
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let step = 0.25;

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let f0 = tracker.eval(start);
    simplex.push((start.to_vec(), f0));
    for i in 0..dim {
        if tracker.exhausted() {
            return false;
        }
        let mut x = start.to_vec();
        x[i] += step;
        let f = tracker.eval(&x);
        simplex.push((x, f));
    }

    loop {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let spread = simplex[dim].1 - simplex[0].1;
        if spread.abs() < tol {
            return true;
        }
        if tracker.exhausted() {
            return false;
        }

        let mut centroid = vec![0.0; dim];
        for (x, _) in simplex.iter().take(dim) {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / dim as f64;
            }
        }
        let worst = simplex[dim].clone();
        let reflected: Vec<f64> = centroid
            .iter()
            .zip(&worst.0)
            .map(|(c, w)| c + alpha * (c - w))
            .collect();
        let f_r = tracker.eval(&reflected);

        if f_r < simplex[0].1 {
            if tracker.exhausted() {
                return false;
            }
            let expanded: Vec<f64> = centroid
                .iter()
                .zip(&reflected)
                .map(|(c, r)| c + gamma * (r - c))
                .collect();
            let f_e = tracker.eval(&expanded);
            simplex[dim] = if f_e < f_r { (expanded, f_e) } else { (reflected, f_r) };
            continue;
        }
        if f_r < simplex[dim - 1].1 {
            simplex[dim] = (reflected, f_r);
            continue;
        }
        if tracker.exhausted() {
            return false;
        }
        let contracted: Vec<f64> = centroid
            .iter()
            .zip(&worst.0)
            .map(|(c, w)| c + rho * (w - c))
            .collect();
        let f_c = tracker.eval(&contracted);
        if f_c < worst.1 {
            simplex[dim] = (contracted, f_c);
            continue;
        }
        // Shrink toward the best vertex.
        let best = simplex[0].0.clone();
        for entry in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = best
                .iter()
                .zip(&entry.0)
                .map(|(b, v)| b + sigma * (v - b))
                .collect();
            if tracker.exhausted() {
                return false;
            }
            let f = tracker.eval(&x);
            *entry = (x, f);
        }
    }
}

fn fd_gradient(tracker: &mut CostTracker, x: &[f64], h: f64) -> Option<Vec<f64>> {
    let mut grad = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        if tracker.n_evals + 2 > tracker.max_evals {
            return None;
        }
        let orig = xp[i];
        xp[i] = orig + h;
        let fp = tracker.eval(&xp);
        xp[i] = orig - h;
        let fm = tracker.eval(&xp);
        xp[i] = orig;
        grad[i] = (fp - fm) / (2.0 * h);
    }
    Some(grad)
}

fn fd_bfgs(tracker: &mut CostTracker, start: &[f64], tol: f64) -> bool {
    let dim = start.len();
    if dim == 0 {
        tracker.eval(start);
        return true;
    }
    let h = 1e-6;
    let mut x = start.to_vec();
    let mut fx = tracker.eval(&x);
    // Inverse Hessian estimate, dense row-major.
    let mut hinv: Vec<f64> = (0..dim * dim)
        .map(|i| if i % (dim + 1) == 0 { 1.0 } else { 0.0 })
        .collect();
    let mut grad = match fd_gradient(tracker, &x, h) {
        Some(g) => g,
        None => return false,
    };

    for _ in 0..10_000 {
        let gnorm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gnorm < 1e-10 {
            return true;
        }
        // Direction d = −Hinv·g.
        let mut dir = vec![0.0; dim];
        for r in 0..dim {
            let mut acc = 0.0;
            for c in 0..dim {
                acc += hinv[r * dim + c] * grad[c];
            }
            dir[r] = -acc;
        }
        let slope: f64 = dir.iter().zip(&grad).map(|(d, g)| d * g).sum();
        if slope >= 0.0 {
            // Reset a non-descent direction to steepest descent.
            for (d, g) in dir.iter_mut().zip(&grad) {
                *d = -g;
            }
        }
        let slope: f64 = dir.iter().zip(&grad).map(|(d, g)| d * g).sum();

        // Armijo backtracking.
        let mut step = 1.0;
        let mut x_new = x.clone();
        let mut f_new = fx;
        let mut accepted = false;
        for _ in 0..40 {
            if tracker.exhausted() {
                return false;
            }
            for i in 0..dim {
                x_new[i] = x[i] + step * dir[i];
            }
            f_new = tracker.eval(&x_new);
            if f_new <= fx + 1e-4 * step * slope {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return true;
        }
        let grad_new = match fd_gradient(tracker, &x_new, h) {
            Some(g) => g,
            None => return false,
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = grad_new.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        if sy > 1e-12 {
            // Standard BFGS inverse update.
            let rho = 1.0 / sy;
            let mut hy = vec![0.0; dim];
            for r in 0..dim {
                for c in 0..dim {
                    hy[r] += hinv[r * dim + c] * y[c];
                }
            }
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for r in 0..dim {
                for c in 0..dim {
                    hinv[r * dim + c] += (1.0 + rho * yhy) * rho * s[r] * s[c]
                        - rho * (hy[r] * s[c] + s[r] * hy[c]);
                }
            }
        }

        let improved = fx - f_new;
        x = x_new.clone();
        fx = f_new;
        grad = grad_new;
        if improved.abs() < tol && gnorm < 1e-4 {
            return true;
        }
    }
    true
}

fn run_method(tracker: &mut CostTracker, start: &[f64], method: OptimizerMethod, tol: f64) -> bool {
    match method {
        OptimizerMethod::NelderMead => nelder_mead(tracker, start, tol),
        OptimizerMethod::FdBfgs => fd_bfgs(tracker, start, tol),
        OptimizerMethod::NelderMeadThenBfgs => {
            // Spend a third of the budget exploring, the rest polishing.
            let warmup = tracker.max_evals / 3;
            let full = tracker.max_evals;
            tracker.max_evals = warmup;
            nelder_mead(tracker, start, tol);
            tracker.max_evals = full;
            let warm = tracker.best_params.clone();
            fd_bfgs(tracker, &warm, tol)
        }
    }
}

fn minimize<'a>(
    cost: impl FnMut(&[f64]) -> f64 + 'a,
    start: &[f64],
    opt: &OptimizerConfig,
    label: String,
) -> VqeResult {
    let mut tracker = CostTracker::new(cost, opt.max_evals, start);
    let converged = run_method(&mut tracker, start, opt.method, opt.tol);
    VqeResult {
        params: tracker.best_params,
        energy: tracker.best_value,
        trace: tracker.trace,
        n_evals: tracker.n_evals,
        converged,
        label,
    }
}

/// Minimize ⟨ψ(θ)|H|ψ(θ)⟩ over the circuit parameters.
///
/// Optimizer failure (budget exhaustion) is reported through
/// `VqeResult::converged`, with the best-seen parameters retained.
pub fn vqe_minimize(hamiltonian: &PauliSum, circuit: &Circuit, opt: &OptimizerConfig) -> Result<VqeResult> {
    opt.validate()?;
    if circuit.n_qubits() != hamiltonian.n_qubits() {
        return Err(Error::SizeMismatch(format!(
            "circuit on {} qubits, hamiltonian on {}",
            circuit.n_qubits(),
            hamiltonian.n_qubits()
        )));
    }
    let start = init_params(circuit.n_parameters(), opt.seed, opt.init_low, opt.init_high);
    let zero = Statevector::zero(circuit.n_qubits());
    let cost = |theta: &[f64]| -> f64 {
        let state = apply_circuit(circuit, theta, &zero).expect("sizes checked above");
        expectation(&state, hamiltonian).expect("real hamiltonian")
    };
    Ok(minimize(cost, &start, opt, opt.method.label().to_string()))
}

/// Minimize the tree-state energy over all tensor parameters.
///
/// `s0` fixes the decomposition, depth, and basis mask; its parameter values
/// are ignored in favor of the seeded initialization. Joint updates optimize
/// one flat vector; alternating updates sweep tensor by tensor.
pub fn htn_vqe_minimize(hamiltonian: &PauliSum, s0: &HtnState, opt: &OptimizerConfig) -> Result<VqeResult> {
    opt.validate()?;
    if s0.decomposition().n_qubits() != hamiltonian.n_qubits() {
        return Err(Error::SizeMismatch(format!(
            "decomposition covers {} qubits, hamiltonian on {}",
            s0.decomposition().n_qubits(),
            hamiltonian.n_qubits()
        )));
    }
    let start = init_params(s0.n_parameters(), opt.seed, opt.init_low, opt.init_high);
    let label = format!(
        "{}+{}",
        opt.method.label(),
        match opt.htn_update {
            HtnUpdateMode::Joint => "joint",
            HtnUpdateMode::Alternating => "alternating",
        }
    );

    match opt.htn_update {
        HtnUpdateMode::Joint => {
            let cost = |theta: &[f64]| -> f64 {
                let state = s0.with_flat_params(theta).expect("length fixed by start vector");
                htn_energy(&state, hamiltonian).expect("real hamiltonian")
            };
            Ok(minimize(cost, &start, opt, label))
        }
        HtnUpdateMode::Alternating => {
            // Block layout of the flat vector: k lower tensors, then upper.
            let k = s0.decomposition().n_groups();
            let n = s0.decomposition().group_size();
            let per_lower = (s0.depth() + 1) * n;
            let mut blocks: Vec<(usize, usize)> =
                (0..k).map(|m| (m * per_lower, per_lower)).collect();
            blocks.push((k * per_lower, (s0.depth() + 1) * k));

            let mut current = start.clone();
            let mut trace = Vec::new();
            let mut n_evals = 0usize;
            let mut best_seen = f64::INFINITY;
            let mut best_params = current.clone();
            let mut converged = false;
            let sweep_budget = (opt.max_evals / 20).max(50);

            while n_evals < opt.max_evals {
                let sweep_start_best = best_seen;
                for &(offset, len) in &blocks {
                    if n_evals >= opt.max_evals {
                        break;
                    }
                    let base = current.clone();
                    let cost = |block: &[f64]| -> f64 {
                        let mut full = base.clone();
                        full[offset..offset + len].copy_from_slice(block);
                        let state = s0.with_flat_params(&full).expect("length fixed");
                        htn_energy(&state, hamiltonian).expect("real hamiltonian")
                    };
                    let budget = sweep_budget.min(opt.max_evals - n_evals);
                    let sub_opt = OptimizerConfig { max_evals: budget, ..*opt };
                    let block_start = current[offset..offset + len].to_vec();
                    let sub = minimize(cost, &block_start, &sub_opt, String::new());
                    n_evals += sub.n_evals;
                    for v in &sub.trace {
                        let candidate = v.min(best_seen);
                        trace.push(candidate);
                    }
                    if sub.energy < best_seen {
                        best_seen = sub.energy;
                        current[offset..offset + len].copy_from_slice(&sub.params);
                        best_params = current.clone();
                    }
                }
                if (sweep_start_best - best_seen).abs() < opt.tol {
                    converged = true;
                    break;
                }
            }
            Ok(VqeResult {
                params: best_params,
                energy: best_seen,
                trace,
                n_evals,
                converged,
                label,
            })
        }
    }
}

/// H + λ(N̂ − n_target)² with N̂ the total-number operator.
pub fn number_penalty(hamiltonian: &PauliSum, n_target: u32, lambda: f64) -> Result<PauliSum> {
    if lambda <= 0.0 {
        return Err(Error::InvalidConfig("penalty weight must be positive".into()));
    }
    let n = hamiltonian.n_qubits();
    // (a·I − ½ΣZ_q − t)² with a = n/2 expands to
    // (b² + n/4)·I − b·ΣZ_q + ½·Σ_{p<q} Z_p Z_q, b = a − t.
    let b = 0.5 * n as f64 - n_target as f64;
    let mut terms: Vec<(f64, PauliString)> = hamiltonian.terms().to_vec();
    terms.push((lambda * (b * b + 0.25 * n as f64), PauliString::identity(n)));
    for q in 0..n {
        terms.push((-lambda * b, PauliString::with_ops(n, &[(q, PauliOp::Z)])));
    }
    for p in 0..n {
        for q in p + 1..n {
            terms.push((0.5 * lambda, PauliString::with_ops(n, &[(p, PauliOp::Z), (q, PauliOp::Z)])));
        }
    }
    PauliSum::from_terms(n, terms)
}

/// Weight of a state inside the fixed-electron-count sector.
pub fn sector_weight(state: &Statevector, n_target: u32) -> f64 {
    let mut w = 0.0;
    for h in 0..state.dim() as u64 {
        if h.count_ones() == n_target {
            w += state.amplitude(h).norm_sqr();
        }
    }
    w
}
