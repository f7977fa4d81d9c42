//! Chunked multi-threaded experiment execution.
//!
//! One repetition of one protocol runs like this: the dataset is split into
//! `t` contiguous chunks, each worker perturbs, aggregates and estimates its
//! chunk with its own derived random stream, and the per-chunk estimates are
//! merged by a size-weighted average. Post-processing and the metric run once
//! on the merged estimate.
//!
//! Workers are keyed by their logical chunk index, never by OS thread
//! identity, so results do not depend on scheduling.

use std::thread;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::metrics::MetricKind;
use crate::model::{derive_rng, true_frequencies, Dataset, Domain, FrequencyVector, PrivacyBudget};
use crate::postprocess::PostProcessKind;
use crate::protocols::{Protocol, ProtocolKind, ProtocolParams};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub protocols: Vec<ProtocolKind>,
    pub methods: Vec<PostProcessKind>,
    pub budget: PrivacyBudget,
    pub repetitions: usize,
    pub threads: usize,
    pub metric: MetricKind,
    pub master_seed: u64,
}

impl ExperimentPlan {
    pub fn new(
        protocols: Vec<ProtocolKind>,
        methods: Vec<PostProcessKind>,
        budget: PrivacyBudget,
        repetitions: usize,
        threads: usize,
        metric: MetricKind,
        master_seed: u64,
    ) -> Result<Self> {
        if protocols.is_empty() || methods.is_empty() {
            return Err(Error::InvalidParameter(
                "plan needs at least one protocol and one method".into(),
            ));
        }
        if has_duplicates(&protocols) || has_duplicates(&methods) {
            return Err(Error::InvalidParameter(
                "plan lists must not repeat entries".into(),
            ));
        }
        if repetitions == 0 {
            return Err(Error::InvalidParameter(
                "repetitions must be at least 1".into(),
            ));
        }
        if threads == 0 {
            return Err(Error::InvalidParameter("threads must be at least 1".into()));
        }
        Ok(ExperimentPlan {
            protocols,
            methods,
            budget,
            repetitions,
            threads,
            metric,
            master_seed,
        })
    }
}

fn has_duplicates<T: PartialEq>(items: &[T]) -> bool {
    items
        .iter()
        .enumerate()
        .any(|(i, a)| items[..i].contains(a))
}

/// Contiguous split of `n` users into `t` chunks whose sizes differ by at
/// most one; the first `n mod t` chunks hold the extra user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkLayout {
    boundaries: Vec<usize>,
}

impl ChunkLayout {
    pub fn threads(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.boundaries.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn ranges(&self) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
        self.boundaries.windows(2).map(|w| w[0]..w[1])
    }
}

pub fn chunk(dataset: &Dataset, threads: usize) -> Result<ChunkLayout> {
    chunk_len(dataset.len(), threads)
}

pub fn chunk_len(n: usize, threads: usize) -> Result<ChunkLayout> {
    if threads == 0 || threads > n {
        return Err(Error::TooManyThreads { threads, users: n });
    }
    let (base, extra) = (n / threads, n % threads);
    let mut boundaries = Vec::with_capacity(threads + 1);
    boundaries.push(0);
    for i in 0..threads {
        let size = base + usize::from(i < extra);
        boundaries.push(boundaries[i] + size);
    }
    Ok(ChunkLayout { boundaries })
}

/// Size-weighted average of per-chunk estimates.
pub fn combine(partials: &[(FrequencyVector, usize)]) -> Result<FrequencyVector> {
    let Some((first, _)) = partials.first() else {
        return Err(Error::EmptyDataset);
    };
    let d = first.len();
    let n: usize = partials.iter().map(|(_, size)| size).sum();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut out = vec![0.0; d];
    for (estimate, size) in partials {
        if estimate.len() != d {
            return Err(Error::Dimension {
                expected: d,
                actual: estimate.len(),
            });
        }
        let w = *size as f64 / n as f64;
        for (o, x) in out.iter_mut().zip(estimate.iter()) {
            *o += w * x;
        }
    }
    Ok(out.into())
}

/// One repetition of one protocol: per-chunk estimation on worker threads,
/// then the weighted combine.
pub fn run_single(
    protocol: &Protocol,
    dataset: &Dataset,
    layout: &ChunkLayout,
    repetition: u64,
    master_seed: u64,
) -> Result<FrequencyVector> {
    let values = dataset.values();
    if layout.boundaries.last() != Some(&values.len()) {
        return Err(Error::InvalidParameter(format!(
            "chunk layout covers {} users but the dataset has {}",
            layout.boundaries.last().copied().unwrap_or(0),
            values.len()
        )));
    }
    let run_chunk = |index: usize, range: std::ops::Range<usize>| {
        let mut rng = derive_rng(master_seed, repetition, index as u64);
        let size = range.len();
        protocol.run(&values[range], &mut rng).map(|f| (f, size))
    };

    let partials: Vec<Result<(FrequencyVector, usize)>> = if layout.threads() == 1 {
        vec![run_chunk(0, 0..values.len())]
    } else {
        thread::scope(|scope| {
            let handles: Vec<_> = layout
                .ranges()
                .enumerate()
                .map(|(i, range)| scope.spawn(move || run_chunk(i, range)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("estimation worker panicked"))
                .collect()
        })
    };
    let partials = partials.into_iter().collect::<Result<Vec<_>>>()?;
    combine(&partials)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub protocol: ProtocolKind,
    pub method: PostProcessKind,
    pub epsilon: f64,
    pub metric: MetricKind,
    pub mean: f64,
    pub std: f64,
    pub runtime_s: f64,
    pub repetitions: usize,
    pub threads: usize,
    pub seed: u64,
}

#[derive(Debug)]
pub struct CombinationFailure {
    pub protocol: ProtocolKind,
    pub method: PostProcessKind,
    pub error: Error,
}

#[derive(Debug, Default)]
pub struct PlanOutcome {
    pub records: Vec<ResultRecord>,
    pub failures: Vec<CombinationFailure>,
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

struct MethodTally {
    method: PostProcessKind,
    errors: Vec<f64>,
    elapsed: Duration,
    failure: Option<Error>,
}

/// Runs every protocol × method combination of `plan`.
///
/// A repetition's raw estimate depends only on (seed, repetition, chunk), so
/// it is computed once and shared by every method; each method's runtime is
/// charged the shared estimation time plus its own post-processing and
/// metric time. Failures are collected per combination and do not stop the
/// remaining ones.
pub fn run_plan(plan: &ExperimentPlan, dataset: &Dataset, domain: &Domain) -> Result<PlanOutcome> {
    let d = domain.size();
    if let Some(&index) = dataset.values().iter().find(|&&v| v >= d) {
        return Err(Error::ValueOutOfDomain { index, size: d });
    }
    let truth = true_frequencies(dataset, domain);
    let layout = chunk(dataset, plan.threads)?;
    let params = ProtocolParams::new(plan.budget, d)?;

    let mut outcome = PlanOutcome::default();
    for &kind in &plan.protocols {
        let protocol = Protocol::new(kind, params);
        let mut tallies: Vec<MethodTally> = plan
            .methods
            .iter()
            .map(|&method| MethodTally {
                method,
                errors: Vec::with_capacity(plan.repetitions),
                elapsed: Duration::ZERO,
                failure: None,
            })
            .collect();

        for rep in 0..plan.repetitions {
            let started = Instant::now();
            let estimate =
                match run_single(&protocol, dataset, &layout, rep as u64, plan.master_seed) {
                    Ok(f) => f,
                    Err(e) => {
                        let msg = e.to_string();
                        for t in tallies.iter_mut().filter(|t| t.failure.is_none()) {
                            t.failure = Some(Error::InvalidParameter(msg.clone()));
                        }
                        break;
                    }
                };
            let shared = started.elapsed();

            for tally in tallies.iter_mut().filter(|t| t.failure.is_none()) {
                let started = Instant::now();
                let processed = tally.method.apply(&estimate);
                match plan.metric.evaluate(&truth, &processed) {
                    Ok(err) => tally.errors.push(err),
                    Err(e) => tally.failure = Some(e),
                }
                tally.elapsed += shared + started.elapsed();
            }
        }

        for tally in tallies {
            match tally.failure {
                Some(error) => outcome.failures.push(CombinationFailure {
                    protocol: kind,
                    method: tally.method,
                    error,
                }),
                None => {
                    let (mean, std) = mean_and_std(&tally.errors);
                    outcome.records.push(ResultRecord {
                        protocol: kind,
                        method: tally.method,
                        epsilon: plan.budget.epsilon(),
                        metric: plan.metric,
                        mean,
                        std,
                        runtime_s: tally.elapsed.as_secs_f64(),
                        repetitions: plan.repetitions,
                        threads: plan.threads,
                        seed: plan.master_seed,
                    });
                }
            }
        }
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunk_sizes() {
        assert_eq!(chunk_len(10, 3).unwrap().sizes(), [4, 3, 3]);
        assert_eq!(chunk_len(8, 4).unwrap().sizes(), [2, 2, 2, 2]);
        assert_eq!(chunk_len(10, 3).unwrap().boundaries(), [0, 4, 7, 10]);
        assert!(matches!(
            chunk_len(3, 5),
            Err(Error::TooManyThreads {
                threads: 5,
                users: 3
            })
        ));
        assert!(chunk_len(3, 0).is_err());
    }

    #[test]
    fn combine_weights() {
        let a = FrequencyVector::new(vec![0.2, 0.8]);
        let b = FrequencyVector::new(vec![0.6, 0.4]);
        let equal = combine(&[(a.clone(), 5), (b.clone(), 5)]).unwrap();
        assert!((equal[0] - 0.4).abs() < 1e-15);
        assert_eq!(combine(&[(a.clone(), 7)]).unwrap(), a);
        let weighted = combine(&[(a.clone(), 3), (b, 1)]).unwrap();
        assert!((weighted[0] - 0.3).abs() < 1e-15);
        let short = FrequencyVector::new(vec![1.0]);
        assert!(matches!(
            combine(&[(a, 1), (short, 1)]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn sample_std() {
        assert_eq!(mean_and_std(&[0.5]), (0.5, 0.0));
        let (m, s) = mean_and_std(&[1.0, 2.0, 3.0]);
        assert!((m - 2.0).abs() < 1e-15 && (s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn plan_validation() {
        let b = PrivacyBudget::new(1.0).unwrap();
        let ok = |p: Vec<ProtocolKind>, m: Vec<PostProcessKind>, r, t| {
            ExperimentPlan::new(p, m, b, r, t, MetricKind::L1, 1)
        };
        assert!(ok(vec![ProtocolKind::Grr], vec![PostProcessKind::None], 1, 1).is_ok());
        assert!(ok(vec![], vec![PostProcessKind::None], 1, 1).is_err());
        assert!(ok(
            vec![ProtocolKind::Grr, ProtocolKind::Grr],
            vec![PostProcessKind::None],
            1,
            1
        )
        .is_err());
        assert!(ok(vec![ProtocolKind::Grr], vec![PostProcessKind::None], 0, 1).is_err());
        assert!(ok(vec![ProtocolKind::Grr], vec![PostProcessKind::None], 1, 0).is_err());
    }
}
