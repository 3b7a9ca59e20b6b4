//! Genetic search over mirror-symmetric on-site energy profiles of a
//! uniformly coupled chain.
//!
//! Fitness rewards the best transfer fidelity inside a fixed window and
//! penalizes spectra that stray from the requested pinched form:
//!
//! ```text
//! υ = |Q − 1/p| + σ_λ
//! f = (A·F_max − B·υ) / (A·F_max + B·υ)
//! ```
//!
//! Every random draw comes from a ChaCha stream keyed by
//! `(seed, generation, slot)`, so runs are reproducible regardless of how
//! fitness evaluation is scheduled.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::chain::{build_hamiltonian, ChainSpec, SignConvention};
use crate::dynamics::{default_samples, max_fidelity};
use crate::error::{Error, Result};
use crate::exec::{map_slice, Execution};
use crate::spectra::Spectrum;
use crate::tridiag::eigendecompose;

/// Run parameters. Defaults are the reference settings (200
/// generations, 1024 individuals, 20 % initial mutation, window 50) with
/// `A = 10`, `B = 1`, 1 % final mutation and bounds `[0, 5]·J`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub n: usize,
    pub p: u32,
    pub generations: usize,
    pub population: usize,
    pub mu_initial: f64,
    pub mu_final: f64,
    /// Fidelity evaluation window in units of `t·J_max`.
    pub window: f64,
    /// Weight `A` on the fidelity term.
    pub a: f64,
    /// Weight `B` on the spectral penalty.
    pub b: f64,
    pub seed: u64,
    pub onsite_min: f64,
    pub onsite_max: f64,
    /// The uniform coupling `J` (stored magnitude, negative convention).
    pub coupling: f64,
    /// Gaussian mutation width as a fraction of the on-site range at `μ_i`.
    pub mutation_width: f64,
    /// Inject one parabolic-well individual into the initial population.
    pub parabolic_seed: bool,
    pub execution: Execution,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            n: 5,
            p: 3,
            generations: 200,
            population: 1024,
            mu_initial: 0.20,
            mu_final: 0.01,
            window: 50.0,
            a: 10.0,
            b: 1.0,
            seed: 0,
            onsite_min: 0.0,
            onsite_max: 5.0,
            coupling: 1.0,
            mutation_width: 0.05,
            parabolic_seed: false,
            execution: Execution::Parallel,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Contract(m));
        if self.n < 4 {
            return bad(format!("GA needs n >= 4 for the spectral penalty, got {}", self.n));
        }
        if self.p == 0 || self.p.is_multiple_of(2) {
            return bad(format!("pinch p must be odd, got {}", self.p));
        }
        if self.population < 2 || !self.population.is_multiple_of(2) {
            return bad(format!("population must be even and >= 2, got {}", self.population));
        }
        if !(self.mu_initial <= 1.0 && self.mu_initial >= self.mu_final && self.mu_final >= 0.0) {
            return bad(format!(
                "mutation rates need 1 >= mu_initial >= mu_final >= 0, got {} and {}",
                self.mu_initial, self.mu_final
            ));
        }
        if !(self.a >= 0.0 && self.b >= 0.0) {
            return bad("weights A and B must be non-negative".into());
        }
        if !(self.onsite_min <= self.onsite_max) || !self.onsite_min.is_finite() || !self.onsite_max.is_finite() {
            return bad("onsite bounds must be finite with min <= max".into());
        }
        if !(self.window > 0.0) {
            return bad(format!("window must be positive, got {}", self.window));
        }
        if self.coupling == 0.0 || !self.coupling.is_finite() {
            return bad("coupling must be nonzero".into());
        }
        if !(self.mutation_width >= 0.0) {
            return bad("mutation width must be non-negative".into());
        }
        Ok(())
    }

    pub fn genome_len(&self) -> usize {
        self.n.div_ceil(2)
    }
}

/// Expand a half-chain genome into a palindromic on-site profile.
pub fn expand_genome(genome: &[f64], n: usize) -> Vec<f64> {
    (0..n).map(|i| genome[i.min(n - 1 - i)]).collect()
}

/// Top gap over the geometric mean of the lower gaps.
pub fn q_factor(s: &Spectrum) -> Result<f64> {
    let n = s.len();
    if n < 3 {
        return Err(Error::Contract(format!("Q-factor needs at least 3 levels, got {n}")));
    }
    let gaps = s.gaps();
    if gaps.iter().any(|&g| g <= 0.0) {
        return Err(Error::Contract("zero spectral gap".into()));
    }
    let lower = &gaps[..n - 2];
    let log_mean = lower.iter().map(|g| g.ln()).sum::<f64>() / lower.len() as f64;
    Ok(gaps[n - 2] / log_mean.exp())
}

/// Population standard deviation of the gaps that do not touch the top level.
pub fn sigma_lambda(s: &Spectrum) -> Result<f64> {
    let n = s.len();
    if n < 4 {
        return Err(Error::Contract(format!("σ_λ needs at least 4 levels, got {n}")));
    }
    let gaps = s.gaps();
    let lower = &gaps[..n - 2];
    let mean = lower.iter().sum::<f64>() / lower.len() as f64;
    let var = lower.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / lower.len() as f64;
    Ok(var.sqrt())
}

/// Linear schedule from `μ_i` at generation 0 to `μ_f` at generation `G`.
pub fn mutation_rate(g: usize, cfg: &GaConfig) -> f64 {
    if cfg.generations == 0 {
        return cfg.mu_initial;
    }
    let g = g.min(cfg.generations) as f64;
    cfg.mu_initial - g * (cfg.mu_initial - cfg.mu_final) / cfg.generations as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FitnessReport {
    pub fitness: f64,
    pub f_max: f64,
    /// Spectral penalty `υ`.
    pub penalty: f64,
    pub q: f64,
    pub sigma: f64,
    /// Time of `F_max` in units of `t·J_max`.
    pub best_time: f64,
}

impl FitnessReport {
    fn unfit() -> Self {
        Self {
            fitness: f64::NEG_INFINITY,
            f_max: f64::NAN,
            penalty: f64::NAN,
            q: f64::NAN,
            sigma: f64::NAN,
            best_time: f64::NAN,
        }
    }

    pub fn is_fit(&self) -> bool {
        self.fitness.is_finite()
    }
}

/// `ℵ(A·F − B·υ)` with `ℵ = 1/(A·F + B·υ)`; a zero denominator scores 1.
pub fn score(f_max: f64, penalty: f64, a: f64, b: f64) -> f64 {
    let den = a * f_max + b * penalty;
    if den == 0.0 {
        return 1.0;
    }
    (a * f_max - b * penalty) / den
}

pub fn chain_for(genome: &[f64], cfg: &GaConfig) -> Result<ChainSpec> {
    ChainSpec::new(expand_genome(genome, cfg.n), vec![cfg.coupling; cfg.n - 1], SignConvention::Negative)
}

/// Full fitness evaluation, propagating numerical failures.
pub fn evaluate(genome: &[f64], cfg: &GaConfig) -> Result<FitnessReport> {
    let chain = chain_for(genome, cfg)?;
    let es = eigendecompose(&build_hamiltonian(&chain))?;
    let spectrum = Spectrum::new(es.values().to_vec())?;
    let q = q_factor(&spectrum)?;
    let sigma = sigma_lambda(&spectrum)?;
    let penalty = (q - 1.0 / cfg.p as f64).abs() + sigma;
    let peak = max_fidelity(&es, chain.j_max(), cfg.window, default_samples(cfg.window))?;
    Ok(FitnessReport {
        fitness: score(peak.f, penalty, cfg.a, cfg.b),
        f_max: peak.f,
        penalty,
        q,
        sigma,
        best_time: peak.t,
    })
}

/// Like [`evaluate`], but failures yield the `−∞` sentinel.
pub fn fitness(genome: &[f64], cfg: &GaConfig) -> FitnessReport {
    evaluate(genome, cfg).unwrap_or_else(|_| FitnessReport::unfit())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaIndividual {
    pub genome: Vec<f64>,
    pub report: FitnessReport,
}

impl GaIndividual {
    pub fn onsite(&self, n: usize) -> Vec<f64> {
        expand_genome(&self.genome, n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HistoryRow {
    pub generation: usize,
    pub best_f: f64,
    pub best_fmax: f64,
    pub best_q: f64,
    pub best_sigma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PopulationSummary {
    pub size: usize,
    pub fit: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub mean_fmax: f64,
}

#[derive(Clone, Debug)]
pub struct GaReport {
    pub best: GaIndividual,
    pub best_chain: ChainSpec,
    pub history: Vec<HistoryRow>,
    pub final_population: PopulationSummary,
}

impl GaReport {
    /// `generation,best_f,best_Fmax,best_Q,best_sigma` rows.
    pub fn history_csv(&self) -> String {
        let mut out = String::from("generation,best_f,best_Fmax,best_Q,best_sigma\n");
        for r in &self.history {
            out.push_str(&format!("{},{},{},{},{}\n", r.generation, r.best_f, r.best_fmax, r.best_q, r.best_sigma));
        }
        out
    }
}

const TAG_INIT: u64 = 1;
const TAG_CROSS: u64 = 2;
const TAG_MUTATE: u64 = 3;
const TAG_SHUFFLE: u64 = 4;

/// Independent stream per `(seed, generation, purpose, slot)`.
fn stream(seed: u64, generation: usize, tag: u64, slot: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((generation as u64) << 8 | tag);
    rng.set_word_pos((slot as u128) << 20);
    rng
}

fn parabolic_genome(cfg: &GaConfig) -> Vec<f64> {
    let centre = (cfg.n - 1) as f64 / 2.0;
    let span = cfg.onsite_max - cfg.onsite_min;
    (0..cfg.genome_len()).map(|i| cfg.onsite_min + span * ((i as f64 - centre) / centre).powi(2)).collect()
}

fn initial_genomes(cfg: &GaConfig) -> Vec<Vec<f64>> {
    let mut genomes: Vec<Vec<f64>> = (0..cfg.population)
        .map(|i| {
            let mut rng = stream(cfg.seed, 0, TAG_INIT, i);
            (0..cfg.genome_len())
                .map(|_| {
                    if cfg.onsite_max > cfg.onsite_min {
                        rng.random_range(cfg.onsite_min..=cfg.onsite_max)
                    } else {
                        cfg.onsite_min
                    }
                })
                .collect()
        })
        .collect();
    if cfg.parabolic_seed {
        genomes[0] = parabolic_genome(cfg);
    }
    genomes
}

/// Indices sorted best first; ties keep population order.
fn ranking(pop: &[GaIndividual]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pop.len()).collect();
    idx.sort_by(|&a, &b| pop[b].report.fitness.total_cmp(&pop[a].report.fitness).then(a.cmp(&b)));
    idx
}

fn history_row(generation: usize, best: &GaIndividual) -> HistoryRow {
    HistoryRow {
        generation,
        best_f: best.report.fitness,
        best_fmax: best.report.f_max,
        best_q: best.report.q,
        best_sigma: best.report.sigma,
    }
}

fn breed(cfg: &GaConfig, g: usize, parents: &[&GaIndividual], children: usize) -> Vec<Vec<f64>> {
    let pairs_per_round = (parents.len() / 2).max(1);
    let rounds = children.div_ceil(2).div_ceil(pairs_per_round);
    let shuffles: Vec<Vec<usize>> = (0..rounds)
        .map(|r| {
            let mut order: Vec<usize> = (0..parents.len()).collect();
            order.shuffle(&mut stream(cfg.seed, g, TAG_SHUFFLE, r));
            order
        })
        .collect();

    let rate = mutation_rate(g, cfg);
    let span = cfg.onsite_max - cfg.onsite_min;
    let width = if cfg.mu_initial > 0.0 { cfg.mutation_width * span * rate / cfg.mu_initial } else { 0.0 };
    let len = cfg.genome_len();

    (0..children)
        .map(|c| {
            let pair = c / 2;
            let order = &shuffles[pair / pairs_per_round];
            let slot = 2 * (pair % pairs_per_round);
            let mum = &parents[order[slot % order.len()]].genome;
            let dad = &parents[order[(slot + 1) % order.len()]].genome;

            // Both children of a pair share one mask; the second takes the complement.
            let mut mask_rng = stream(cfg.seed, g, TAG_CROSS, pair);
            let mask: Vec<bool> = (0..len).map(|_| mask_rng.random_bool(0.5)).collect();
            let flip = c % 2 == 1;
            let mut child: Vec<f64> = (0..len).map(|k| if mask[k] != flip { mum[k] } else { dad[k] }).collect();

            if rate > 0.0 && width > 0.0 {
                let mut rng = stream(cfg.seed, g, TAG_MUTATE, c);
                let normal = Normal::new(0.0, width).expect("finite positive width");
                for gene in child.iter_mut() {
                    if rng.random_bool(rate) {
                        *gene = (*gene + normal.sample(&mut rng)).clamp(cfg.onsite_min, cfg.onsite_max);
                    }
                }
            }
            child
        })
        .collect()
}

fn evaluate_all(genomes: Vec<Vec<f64>>, cfg: &GaConfig) -> Vec<GaIndividual> {
    let reports = map_slice(&genomes, cfg.execution, |g| fitness(g, cfg));
    genomes.into_iter().zip(reports).map(|(genome, report)| GaIndividual { genome, report }).collect()
}

/// Run the GA, calling `observe(generation, population)` after each
/// generation (including the initial one) is evaluated.
pub fn evolve_with<F>(cfg: &GaConfig, mut observe: F) -> Result<GaReport>
where
    F: FnMut(usize, &[GaIndividual]),
{
    cfg.validate()?;
    let mut pop = evaluate_all(initial_genomes(cfg), cfg);
    observe(0, &pop);
    let mut order = ranking(&pop);
    let mut history = vec![history_row(0, &pop[order[0]])];

    for g in 1..=cfg.generations {
        let fit: Vec<&GaIndividual> = order.iter().map(|&i| &pop[i]).filter(|ind| ind.report.is_fit()).collect();
        let elite = pop[order[0]].clone();
        let parents: Vec<&GaIndividual> = if fit.len() >= 2 {
            fit[..(pop.len() / 2).clamp(2, fit.len())].to_vec()
        } else {
            order.iter().map(|&i| &pop[i]).take(2).collect()
        };
        let children = breed(cfg, g, &parents, cfg.population - 1);
        let mut next = Vec::with_capacity(cfg.population);
        next.push(elite);
        next.extend(evaluate_all(children, cfg));
        pop = next;
        observe(g, &pop);
        order = ranking(&pop);
        history.push(history_row(g, &pop[order[0]]));
    }

    let best = pop[order[0]].clone();
    let best_chain = chain_for(&best.genome, cfg)?;
    let fit: Vec<&GaIndividual> = pop.iter().filter(|i| i.report.is_fit()).collect();
    let mean = |f: &dyn Fn(&GaIndividual) -> f64| {
        if fit.is_empty() {
            f64::NAN
        } else {
            fit.iter().map(|i| f(i)).sum::<f64>() / fit.len() as f64
        }
    };
    let final_population = PopulationSummary {
        size: pop.len(),
        fit: fit.len(),
        best_fitness: best.report.fitness,
        mean_fitness: mean(&|i| i.report.fitness),
        mean_fmax: mean(&|i| i.report.f_max),
    };
    Ok(GaReport { best, best_chain, history, final_population })
}

pub fn evolve(cfg: &GaConfig) -> Result<GaReport> {
    evolve_with(cfg, |_, _| {})
}
