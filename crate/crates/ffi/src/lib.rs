//! C ABI over `ldp-bench`.
//!
//! Every fallible call returns an [`LdpStatus`]; on failure the message is
//! available from [`ldp_last_error`] on the same thread. Objects are opaque
//! handles created by `*_new` and released by the matching `*_free`.
//!
//! Names (protocols, methods, metrics) use the same registries as the CLI and
//! are passed as NUL-terminated UTF-8 strings.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ldp_bench::engine::{chunk_len, run_plan, ExperimentPlan, PlanOutcome, ResultRecord};
use ldp_bench::metrics::MetricKind;
use ldp_bench::postprocess::PostProcessKind;
use ldp_bench::{Dataset, Domain, Error, PrivacyBudget, Protocol, ProtocolKind, ProtocolParams};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LdpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownName = 3,
    DomainTooSmall = 4,
    DimensionMismatch = 5,
    DegenerateDistribution = 6,
    TooManyThreads = 7,
    IoError = 8,
    Panic = 9,
}

impl From<&Error> for LdpStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::DomainTooSmall(_) => LdpStatus::DomainTooSmall,
            Error::Dimension { .. } => LdpStatus::DimensionMismatch,
            Error::DegenerateDistribution => LdpStatus::DegenerateDistribution,
            Error::TooManyThreads { .. } => LdpStatus::TooManyThreads,
            Error::UnknownName { .. } => LdpStatus::UnknownName,
            Error::Io { .. } | Error::Csv(_) => LdpStatus::IoError,
            _ => LdpStatus::InvalidArgument,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

struct Failure(LdpStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(LdpStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(LdpStatus::NullPointer, format!("{what} is NULL"))
}

/// Runs `body`, turning errors and panics into a status code.
fn guarded(body: impl FnOnce() -> Result<(), Failure>) -> LdpStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => LdpStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            LdpStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| Failure(LdpStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn read_slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn write_slice<'a, T>(ptr: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

/// Message describing the last failed call on this thread, or NULL.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ldp_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// A configured frequency oracle.
pub struct LdpOracle {
    protocol: Protocol,
}

/// Creates a protocol instance. `hash_range` (OLH) and `subset_size` (SS)
/// may be 0 to use the defaults derived from epsilon and the domain size.
///
/// # Safety
/// `protocol` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ldp_oracle_new(
    protocol: *const c_char,
    epsilon: f64,
    domain_size: usize,
    hash_range: usize,
    subset_size: usize,
    out: *mut *mut LdpOracle,
) -> LdpStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let kind: ProtocolKind = read_str(protocol, "protocol")?.parse()?;
        let mut params = ProtocolParams::new(PrivacyBudget::new(epsilon)?, domain_size)?;
        if hash_range != 0 {
            params = params.with_hash_range(hash_range)?;
        }
        if subset_size != 0 {
            params = params.with_subset_size(subset_size)?;
        }
        let oracle = Box::new(LdpOracle {
            protocol: Protocol::new(kind, params),
        });
        *out = Box::into_raw(oracle);
        Ok(())
    })
}

/// # Safety
/// `oracle` must come from [`ldp_oracle_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ldp_oracle_free(oracle: *mut LdpOracle) {
    if !oracle.is_null() {
        drop(Box::from_raw(oracle));
    }
}

/// # Safety
/// `oracle` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ldp_oracle_domain_size(oracle: *const LdpOracle) -> usize {
    oracle
        .as_ref()
        .map_or(0, |o| o.protocol.params().domain_size())
}

/// # Safety
/// `oracle` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ldp_oracle_hash_range(oracle: *const LdpOracle) -> usize {
    oracle
        .as_ref()
        .map_or(0, |o| o.protocol.params().hash_range())
}

/// # Safety
/// `oracle` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ldp_oracle_subset_size(oracle: *const LdpOracle) -> usize {
    oracle
        .as_ref()
        .map_or(0, |o| o.protocol.params().subset_size())
}

/// Perturbs and estimates `values` split across `threads` chunks, writing
/// `domain_size` frequencies to `out`. Deterministic in
/// (`seed`, `repetition`, `threads`).
///
/// # Safety
/// `values` must point to `n` readable elements and `out` to `out_len`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ldp_oracle_estimate(
    oracle: *const LdpOracle,
    values: *const usize,
    n: usize,
    threads: usize,
    seed: u64,
    repetition: u64,
    out: *mut f64,
    out_len: usize,
) -> LdpStatus {
    guarded(|| {
        let oracle = oracle.as_ref().ok_or_else(|| null("oracle"))?;
        let d = oracle.protocol.params().domain_size();
        if out_len != d {
            return Err(Error::Dimension {
                expected: d,
                actual: out_len,
            }
            .into());
        }
        let dataset = Dataset::new(read_slice(values, n, "values")?.to_vec(), d)?;
        let layout = chunk_len(n, threads)?;
        let estimate =
            ldp_bench::engine::run_single(&oracle.protocol, &dataset, &layout, repetition, seed)?;
        write_slice(out, out_len, "out")?.copy_from_slice(&estimate);
        Ok(())
    })
}

/// Empirical frequencies of `values` over `0..domain_size`.
///
/// # Safety
/// `values` must point to `n` elements and `out` to `domain_size` doubles.
#[no_mangle]
pub unsafe extern "C" fn ldp_true_frequencies(
    values: *const usize,
    n: usize,
    domain_size: usize,
    out: *mut f64,
) -> LdpStatus {
    guarded(|| {
        let domain = Domain::indexed(domain_size)?;
        let dataset = Dataset::new(read_slice(values, n, "values")?.to_vec(), domain_size)?;
        let f = ldp_bench::true_frequencies(&dataset, &domain);
        write_slice(out, domain_size, "out")?.copy_from_slice(&f);
        Ok(())
    })
}

/// Applies a post-processing method. `input` and `out` may alias.
///
/// # Safety
/// `input` and `out` must each point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ldp_postprocess(
    method: *const c_char,
    input: *const f64,
    len: usize,
    out: *mut f64,
) -> LdpStatus {
    guarded(|| {
        let kind: PostProcessKind = read_str(method, "method")?.parse()?;
        let processed = kind.apply(read_slice(input, len, "input")?);
        write_slice(out, len, "out")?.copy_from_slice(&processed);
        Ok(())
    })
}

/// Distance from `reference` to `other` under `metric`.
///
/// # Safety
/// `reference` and `other` must each point to `len` doubles and `out` to one.
#[no_mangle]
pub unsafe extern "C" fn ldp_metric(
    metric: *const c_char,
    reference: *const f64,
    other: *const f64,
    len: usize,
    out: *mut f64,
) -> LdpStatus {
    guarded(|| {
        let kind: MetricKind = read_str(metric, "metric")?.parse()?;
        let value = kind.evaluate(
            read_slice(reference, len, "reference")?,
            read_slice(other, len, "other")?,
        )?;
        *out.as_mut().ok_or_else(|| null("out"))? = value;
        Ok(())
    })
}

/// An experiment plan.
pub struct LdpPlan {
    plan: ExperimentPlan,
}

/// Builds a plan. `protocols` and `methods` are comma separated lists and
/// accept `all`; include `none` in `methods` to get the unprocessed baseline.
///
/// # Safety
/// String arguments must be NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ldp_plan_new(
    protocols: *const c_char,
    methods: *const c_char,
    epsilon: f64,
    repetitions: usize,
    threads: usize,
    metric: *const c_char,
    seed: u64,
    out: *mut *mut LdpPlan,
) -> LdpStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let plan = ExperimentPlan::new(
            ProtocolKind::parse_list(read_str(protocols, "protocols")?)?,
            PostProcessKind::parse_list(read_str(methods, "methods")?)?,
            PrivacyBudget::new(epsilon)?,
            repetitions,
            threads,
            read_str(metric, "metric")?.parse()?,
            seed,
        )?;
        *out = Box::into_raw(Box::new(LdpPlan { plan }));
        Ok(())
    })
}

/// # Safety
/// `plan` must come from [`ldp_plan_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ldp_plan_free(plan: *mut LdpPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// Results of [`ldp_plan_run`].
pub struct LdpResults {
    outcome: PlanOutcome,
}

/// Runs every protocol x method combination of `plan` over `values`
/// (indices in `0..domain_size`).
///
/// # Safety
/// `values` must point to `n` elements and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn ldp_plan_run(
    plan: *const LdpPlan,
    values: *const usize,
    n: usize,
    domain_size: usize,
    out: *mut *mut LdpResults,
) -> LdpStatus {
    guarded(|| {
        let plan = plan.as_ref().ok_or_else(|| null("plan"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let domain = Domain::indexed(domain_size)?;
        let dataset = Dataset::new(read_slice(values, n, "values")?.to_vec(), domain_size)?;
        let outcome = run_plan(&plan.plan, &dataset, &domain)?;
        *out = Box::into_raw(Box::new(LdpResults { outcome }));
        Ok(())
    })
}

/// One result row. String fields point to static storage.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LdpResultRow {
    pub protocol: *const c_char,
    pub method: *const c_char,
    pub metric: *const c_char,
    pub epsilon: f64,
    pub mean: f64,
    pub std: f64,
    pub runtime_s: f64,
    pub repetitions: usize,
    pub threads: usize,
    pub seed: u64,
}

fn protocol_cstr(kind: ProtocolKind) -> &'static CStr {
    match kind {
        ProtocolKind::Grr => c"GRR",
        ProtocolKind::Rappor => c"RAPPOR",
        ProtocolKind::Oue => c"OUE",
        ProtocolKind::Blh => c"BLH",
        ProtocolKind::Olh => c"OLH",
        ProtocolKind::Ss => c"SS",
    }
}

fn method_cstr(kind: PostProcessKind) -> &'static CStr {
    match kind {
        PostProcessKind::None => c"none",
        PostProcessKind::BasePos => c"base_pos",
        PostProcessKind::Norm => c"norm",
        PostProcessKind::NormCut => c"norm_cut",
        PostProcessKind::NormSub => c"norm_sub",
        PostProcessKind::NormMul => c"norm_mul",
        PostProcessKind::Power => c"power",
        PostProcessKind::PowerNs => c"power_ns",
    }
}

fn metric_cstr(kind: MetricKind) -> &'static CStr {
    match kind {
        MetricKind::L1 => c"l1",
        MetricKind::L2 => c"l2",
        MetricKind::Kl => c"kl",
        MetricKind::Emd => c"emd",
    }
}

fn row(r: &ResultRecord) -> LdpResultRow {
    LdpResultRow {
        protocol: protocol_cstr(r.protocol).as_ptr(),
        method: method_cstr(r.method).as_ptr(),
        metric: metric_cstr(r.metric).as_ptr(),
        epsilon: r.epsilon,
        mean: r.mean,
        std: r.std,
        runtime_s: r.runtime_s,
        repetitions: r.repetitions,
        threads: r.threads,
        seed: r.seed,
    }
}

/// # Safety
/// `results` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ldp_results_len(results: *const LdpResults) -> usize {
    results.as_ref().map_or(0, |r| r.outcome.records.len())
}

/// Number of protocol x method combinations that failed.
///
/// # Safety
/// `results` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ldp_results_failures(results: *const LdpResults) -> usize {
    results.as_ref().map_or(0, |r| r.outcome.failures.len())
}

/// # Safety
/// `results` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ldp_results_get(
    results: *const LdpResults,
    index: usize,
    out: *mut LdpResultRow,
) -> LdpStatus {
    guarded(|| {
        let results = results.as_ref().ok_or_else(|| null("results"))?;
        let record = results.outcome.records.get(index).ok_or_else(|| {
            Failure(
                LdpStatus::InvalidArgument,
                format!(
                    "row {index} out of range ({} rows)",
                    results.outcome.records.len()
                ),
            )
        })?;
        *out.as_mut().ok_or_else(|| null("out"))? = row(record);
        Ok(())
    })
}

/// Writes the results in the CLI's CSV format.
///
/// # Safety
/// `results` must be a live handle and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ldp_results_write_csv(
    results: *const LdpResults,
    path: *const c_char,
) -> LdpStatus {
    guarded(|| {
        let results = results.as_ref().ok_or_else(|| null("results"))?;
        let path = read_str(path, "path")?;
        ldp_bench::cli::write_csv_file(&results.outcome.records, Path::new(path))?;
        Ok(())
    })
}

/// # Safety
/// `results` must come from [`ldp_plan_run`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ldp_results_free(results: *mut LdpResults) {
    if !results.is_null() {
        drop(Box::from_raw(results));
    }
}
