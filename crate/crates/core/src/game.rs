//! Monte Carlo referee and guesser.
//!
//! Every trial draws from its own ChaCha8 stream: the generator is keyed by
//! the run seed and the stream number is the trial index, so a trial's
//! randomness does not depend on how trials are scheduled across threads.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::abstention::AbstentionPlan;
use crate::error::{Error, Result};
use crate::hilbert::{build_input_state, two_qubit_rotation, Direction, InputStateSpec};
use crate::linalg::ComplexMatrix;
use crate::povm::{
    build_abstention_povm, input_ensemble, outcome_direction, score_value, AbstentionParams, Outcome, Povm,
    ScoreKind,
};
use crate::walk::{extract_povm, load_reference_program, tabulated_rows};

pub const PROB_SUM_TOL: f64 = 1e-8;
const NEG_CLAMP: f64 = -1e-10;
const CHUNK: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MeasurementSource {
    #[default]
    Ideal,
    Walk,
}

impl std::str::FromStr for MeasurementSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(MeasurementSource::Ideal),
            "walk" => Ok(MeasurementSource::Walk),
            _ => Err(Error::Invalid(format!("unknown measurement source '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub kind: ScoreKind,
    pub c0: f64,
    pub abstention: Option<AbstentionPlan>,
    pub trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub measurement_source: MeasurementSource,
    /// Keep one record per trial.
    #[serde(default)]
    pub record_trials: bool,
}

impl GameConfig {
    pub fn new(kind: ScoreKind, c0: f64, abstention: Option<AbstentionPlan>, trials: u64, seed: u64) -> Self {
        GameConfig {
            kind,
            c0,
            abstention,
            trials,
            seed,
            measurement_source: MeasurementSource::Ideal,
            record_trials: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Invalid("trials must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.c0) {
            return Err(Error::Invalid(format!("c0 = {} outside [0, 1]", self.c0)));
        }
        Ok(())
    }

    pub fn params(&self) -> AbstentionParams {
        self.abstention.map(|p| p.params()).unwrap_or_else(AbstentionParams::none)
    }

    /// The measurement this configuration plays against.
    pub fn povm(&self) -> Result<Povm> {
        match self.measurement_source {
            MeasurementSource::Ideal => build_abstention_povm(&self.params()),
            MeasurementSource::Walk => {
                let p = self.params();
                if (p.lambda_bar_1 - 1.0).abs() > 1e-12 {
                    return Err(Error::Invalid("walk programs realize lambda_bar_1 = 1 only".into()));
                }
                let row = tabulated_rows()
                    .iter()
                    .filter(|r| r.kind == self.kind)
                    .find(|r| (r.lambda_bar_0 - p.lambda_bar_0).abs() < 5e-4)
                    .ok_or_else(|| Error::Untabulated { kind: self.kind.to_string(), c0: self.c0 })?;
                extract_povm(&load_reference_program(row.kind, row.c0)?)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub input: Direction,
    pub outcome: Outcome,
    pub accepted: bool,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub config: GameConfig,
    pub n_trials: u64,
    pub n_accepted: u64,
    pub s_hat: f64,
    pub stderr: f64,
    pub q_bar_hat: f64,
    pub q_stderr: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<Vec<TrialRecord>>,
}

/// Splittable generator for trial `index` of a run keyed by `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform over the tetrahedron (likelihood) or the six axes (fidelity).
pub fn sample_direction<R: Rng + ?Sized>(kind: ScoreKind, rng: &mut R) -> Direction {
    let ens = input_ensemble(kind);
    ens[rng.gen_range(0..ens.len())]
}

/// Clamps tiny negatives, checks the sum and renormalizes.
pub fn born_probabilities(povm: &Povm, rho: &ComplexMatrix) -> Result<Vec<f64>> {
    let mut p = povm.probabilities(rho);
    for x in p.iter_mut() {
        if *x < 0.0 {
            if *x < NEG_CLAMP {
                return Err(Error::BadProbabilities(*x));
            }
            *x = 0.0;
        }
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::BadProbabilities(s));
    }
    Ok(p.into_iter().map(|x| x / s).collect())
}

fn inverse_cdf(p: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, x) in p.iter().enumerate() {
        acc += x;
        if u < acc {
            return k;
        }
    }
    // u landed in the rounding gap above the last partial sum
    p.iter().rposition(|&x| x > 0.0).unwrap_or(p.len() - 1)
}

fn input_density(c0: f64, n: &Direction) -> Result<ComplexMatrix> {
    let psi = build_input_state(&InputStateSpec::psi_plus(c0)?).density();
    let u = two_qubit_rotation(n);
    Ok(&u * psi * u.adjoint())
}

/// One round: Born-sample an outcome for Ψ_n.
pub fn play_trial<R: Rng + ?Sized>(
    cfg: &GameConfig,
    n: &Direction,
    povm: &Povm,
    rng: &mut R,
) -> Result<(Outcome, bool, Option<f64>)> {
    let p = born_probabilities(povm, &input_density(cfg.c0, n)?)?;
    let k = inverse_cdf(&p, rng.gen::<f64>());
    let label = povm.labels()[k].clone();
    match outcome_direction(&label) {
        None => Ok((label, false, None)),
        Some(nh) => Ok((label, true, Some(score_value(cfg.kind, n, &nh)?))),
    }
}

struct Table {
    dirs: Vec<Direction>,
    labels: Vec<Outcome>,
    probs: Vec<Vec<f64>>,
    scores: Vec<Vec<Option<f64>>>,
}

impl Table {
    fn new(cfg: &GameConfig, povm: &Povm) -> Result<Self> {
        let dirs = input_ensemble(cfg.kind);
        let mut probs = Vec::new();
        let mut scores = Vec::new();
        for n in &dirs {
            probs.push(born_probabilities(povm, &input_density(cfg.c0, n)?)?);
            scores.push(
                povm.labels()
                    .iter()
                    .map(|l| outcome_direction(l).map(|nh| score_value(cfg.kind, n, &nh)).transpose())
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        Ok(Table { dirs, labels: povm.labels().to_vec(), probs, scores })
    }

    // Same draws as sample_direction followed by play_trial.
    fn draw(&self, seed: u64, index: u64) -> (usize, usize) {
        let mut rng = trial_rng(seed, index);
        let d = rng.gen_range(0..self.dirs.len());
        (d, inverse_cdf(&self.probs[d], rng.gen::<f64>()))
    }
}

fn tally(table: &Table, seed: u64, range: std::ops::Range<u64>) -> Vec<u64> {
    let m = table.probs[0].len();
    let mut counts = vec![0u64; table.dirs.len() * m];
    for i in range {
        let (d, k) = table.draw(seed, i);
        counts[d * m + k] += 1;
    }
    counts
}

/// Aggregates from the (input, outcome) count table. Integer counts make the
/// result independent of summation order.
fn aggregate(cfg: &GameConfig, table: &Table, counts: &[u64]) -> Result<(u64, f64, f64)> {
    let m = table.probs[0].len();
    let (mut n_acc, mut sum, mut sum2) = (0u64, 0.0, 0.0);
    for d in 0..table.dirs.len() {
        for k in 0..m {
            if let Some(s) = table.scores[d][k] {
                let n = counts[d * m + k];
                n_acc += n;
                sum += n as f64 * s;
                sum2 += n as f64 * s * s;
            }
        }
    }
    if n_acc == 0 {
        return Err(Error::NoAccepted);
    }
    Ok(finish(cfg.kind, n_acc, sum, sum2))
}

fn finish(kind: ScoreKind, n_acc: u64, sum: f64, sum2: f64) -> (u64, f64, f64) {
    let n = n_acc as f64;
    let mean = sum / n;
    let stderr = match kind {
        ScoreKind::MaxLikelihood => {
            let p = mean / 4.0;
            4.0 * (p * (1.0 - p) / n).sqrt()
        }
        ScoreKind::Fidelity => {
            if n_acc < 2 {
                0.0
            } else {
                ((sum2 - n * mean * mean).max(0.0) / (n - 1.0) / n).sqrt()
            }
        }
    };
    (n_acc, mean, stderr)
}

fn record(cfg: &GameConfig, table: &Table, counts: &[u64]) -> Result<GameRecord> {
    let (n_acc, s_hat, stderr) = aggregate(cfg, table, counts)?;
    let q = n_acc as f64 / cfg.trials as f64;
    let trials = if cfg.record_trials {
        Some(trial_records(cfg, table))
    } else {
        None
    };
    Ok(GameRecord {
        config: cfg.clone(),
        n_trials: cfg.trials,
        n_accepted: n_acc,
        s_hat,
        stderr,
        q_bar_hat: q,
        q_stderr: (q * (1.0 - q) / cfg.trials as f64).sqrt(),
        trials,
    })
}

fn trial_records(cfg: &GameConfig, table: &Table) -> Vec<TrialRecord> {
    (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let (d, k) = table.draw(cfg.seed, i);
            let score = table.scores[d][k];
            TrialRecord {
                input: table.dirs[d],
                outcome: table.labels[k].clone(),
                accepted: score.is_some(),
                score,
            }
        })
        .collect()
}

/// Parallel run; chunks are tallied independently and merged.
pub fn run_game(cfg: &GameConfig) -> Result<GameRecord> {
    cfg.validate()?;
    let povm = cfg.povm()?;
    let table = Table::new(cfg, &povm)?;
    let chunks = cfg.trials.div_ceil(CHUNK as u64);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK as u64;
            tally(&table, cfg.seed, lo..(lo + CHUNK as u64).min(cfg.trials))
        })
        .reduce_with(|mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        })
        .unwrap_or_default();
    record(cfg, &table, &counts)
}

/// Single-threaded reference path.
pub fn run_game_sequential(cfg: &GameConfig) -> Result<GameRecord> {
    cfg.validate()?;
    let povm = cfg.povm()?;
    let table = Table::new(cfg, &povm)?;
    let counts = tally(&table, cfg.seed, 0..cfg.trials);
    record(cfg, &table, &counts)
}

/// Recomputes (n_accepted, ŝ, stderr) from a per-trial dump.
pub fn aggregate_trials(kind: ScoreKind, trials: &[TrialRecord]) -> Result<(u64, f64, f64)> {
    let (mut n, mut s, mut s2) = (0u64, 0.0, 0.0);
    for t in trials.iter().filter(|t| t.accepted) {
        let v = t.score.ok_or_else(|| Error::Invalid("accepted trial without a score".into()))?;
        n += 1;
        s += v;
        s2 += v * v;
    }
    if n == 0 {
        return Err(Error::NoAccepted);
    }
    Ok(finish(kind, n, s, s2))
}

pub const CSV_HEADER: [&str; 13] = [
    "kind",
    "c0",
    "lambda_bar_0",
    "lambda_bar_1",
    "source",
    "trials",
    "seed",
    "n_accepted",
    "s_hat",
    "stderr",
    "q_bar_hat",
    "q_stderr",
    "abstention",
];

impl GameRecord {
    fn csv_row(&self) -> Vec<String> {
        let p = self.config.params();
        vec![
            self.config.kind.to_string(),
            self.config.c0.to_string(),
            p.lambda_bar_0.to_string(),
            p.lambda_bar_1.to_string(),
            serde_json::to_value(self.config.measurement_source)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default(),
            self.n_trials.to_string(),
            self.config.seed.to_string(),
            self.n_accepted.to_string(),
            self.s_hat.to_string(),
            self.stderr.to_string(),
            self.q_bar_hat.to_string(),
            self.q_stderr.to_string(),
            self.config.abstention.is_some().to_string(),
        ]
    }

    pub fn write_csv<W: Write>(records: &[GameRecord], w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(CSV_HEADER)?;
        for r in records {
            wr.write_record(r.csv_row())?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string()?)?;
        Ok(())
    }
}
