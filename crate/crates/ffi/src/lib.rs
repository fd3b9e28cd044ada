//! C ABI over the compaction laboratory.
//!
//! Instances and policies cross the boundary as opaque handles that the caller
//! frees with the matching `*_free` function. Every fallible call returns a
//! [`BmcStatus`]; on failure the message is available from [`bmc_last_error`] on
//! the same thread until the next failing call. Cost models and policies are
//! named with the same strings the `bmc` CLI accepts (`capped:5`, `linear`,
//! `sqrt`, `brb:5`, `default:5`, `linear-online`, ...).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use bmc_lab::opt::dp_opt;
use bmc_lab::policy::{OnlinePolicy, PolicySpec};
use bmc_lab::{cost_of, Arrival, CostModel, Error, ErrorClass, Instance, Schedule, StackSim};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BmcStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Bad arguments: malformed names, invalid lengths, out-of-range widths.
    Usage = 2,
    /// Well-formed input that exceeds the stack cap.
    Infeasible = 3,
    /// A broken internal invariant.
    Internal = 4,
    /// A Rust panic was caught at the boundary.
    Panic = 5,
    /// An output buffer is too small; nothing was written to it.
    BufferTooSmall = 6,
}

/// An immutable arrival sequence.
pub struct BmcInstance {
    inner: Instance,
}

/// An online policy driving its own stack simulator.
pub struct BmcPolicy {
    policy: Box<dyn OnlinePolicy>,
    sim: StackSim,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: BmcStatus, msg: impl Into<String>) -> BmcStatus {
    set_last_error(msg.into());
    status
}

fn from_error(err: Error) -> BmcStatus {
    let status = match err.class() {
        ErrorClass::Usage => BmcStatus::Usage,
        ErrorClass::Infeasible => BmcStatus::Infeasible,
        ErrorClass::Internal => BmcStatus::Internal,
    };
    fail(status, err.to_string())
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), BmcStatus>) -> BmcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BmcStatus::Ok,
        Ok(Err(status)) => status,
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(BmcStatus::Panic, format!("panic: {msg}"))
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, BmcStatus>;
}

impl<T> OrStatus<T> for bmc_lab::Result<T> {
    fn or_status(self) -> Result<T, BmcStatus> {
        self.map_err(from_error)
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), BmcStatus> {
    if p.is_null() {
        Err(fail(BmcStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

/// # Safety
/// `p` must be null or a NUL-terminated string.
unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, BmcStatus> {
    non_null(p, what)?;
    CStr::from_ptr(p).to_str().map_err(|_| fail(BmcStatus::Usage, format!("{what} is not valid UTF-8")))
}

/// # Safety
/// `p` must be null or a NUL-terminated string.
unsafe fn read_model(p: *const c_char) -> Result<CostModel, BmcStatus> {
    CostModel::parse(read_str(p, "model")?).or_status()
}

/// # Safety
/// `p` must be null only when `n` is 0, otherwise valid for `n` reads.
unsafe fn read_slice<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], BmcStatus> {
    if n == 0 {
        return Ok(&[]);
    }
    non_null(p, what)?;
    Ok(slice::from_raw_parts(p, n))
}

/// Copies `widths` into a caller buffer of `cap` entries if `out` is non-null.
///
/// # Safety
/// `out` must be null or valid for `cap` writes.
unsafe fn write_widths(widths: &[usize], out: *mut usize, cap: usize) -> Result<(), BmcStatus> {
    if out.is_null() {
        return Ok(());
    }
    if cap < widths.len() {
        return Err(fail(
            BmcStatus::BufferTooSmall,
            format!("width buffer holds {cap} entries, {} needed", widths.len()),
        ));
    }
    ptr::copy_nonoverlapping(widths.as_ptr(), out, widths.len());
    Ok(())
}

/// The message of the last failed call on this thread, or null if none failed.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bmc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Builds an instance from `n` lengths and read rates.
///
/// # Safety
/// `lengths` and `reads` must be valid for `n` reads; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn bmc_instance_new(
    lengths: *const f64,
    reads: *const f64,
    n: usize,
    out: *mut *mut BmcInstance,
) -> BmcStatus {
    guard(|| {
        non_null(out, "out")?;
        let lengths = read_slice(lengths, n, "lengths")?;
        let reads = read_slice(reads, n, "reads")?;
        let steps = lengths.iter().zip(reads).map(|(&l, &r)| Arrival::new(l, r)).collect();
        let inner = Instance::new(steps).or_status()?;
        *out = Box::into_raw(Box::new(BmcInstance { inner }));
        Ok(())
    })
}

/// Number of arrivals in `instance`; 0 for null.
///
/// # Safety
/// `instance` must be null or a live handle from [`bmc_instance_new`].
#[no_mangle]
pub unsafe extern "C" fn bmc_instance_len(instance: *const BmcInstance) -> usize {
    instance.as_ref().map_or(0, |i| i.inner.len())
}

/// Releases an instance. Null is ignored.
///
/// # Safety
/// `instance` must be null or a live handle that is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bmc_instance_free(instance: *mut BmcInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Total cost of running the merge widths `widths[0..n]` on `instance` under `model`.
///
/// # Safety
/// `instance` must be a live handle, `model` a NUL-terminated string, `widths`
/// valid for `n` reads and `out_cost` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn bmc_simulate(
    instance: *const BmcInstance,
    model: *const c_char,
    widths: *const usize,
    n: usize,
    out_cost: *mut f64,
) -> BmcStatus {
    guard(|| {
        non_null(instance, "instance")?;
        non_null(out_cost, "out_cost")?;
        let model = read_model(model)?;
        let schedule = Schedule::new(read_slice(widths, n, "widths")?.to_vec());
        *out_cost = cost_of(&(*instance).inner, &schedule, &model).or_status()?;
        Ok(())
    })
}

/// Optimal offline cost of `instance` under `model` by dynamic programming. When
/// `out_widths` is non-null, an optimal schedule is written to it; it must hold at
/// least `bmc_instance_len(instance)` entries (`widths_cap`).
///
/// # Safety
/// Pointers must be valid as described; `out_widths` may be null.
#[no_mangle]
pub unsafe extern "C" fn bmc_opt_dp(
    instance: *const BmcInstance,
    model: *const c_char,
    out_cost: *mut f64,
    out_widths: *mut usize,
    widths_cap: usize,
) -> BmcStatus {
    guard(|| {
        non_null(instance, "instance")?;
        non_null(out_cost, "out_cost")?;
        let model = read_model(model)?;
        let sol = dp_opt(&(*instance).inner, &model).or_status()?;
        write_widths(&sol.schedule.widths, out_widths, widths_cap)?;
        *out_cost = sol.cost;
        Ok(())
    })
}

/// Creates an online policy (`spec`, e.g. `brb:5`) with its own stack simulator
/// under `model`. `horizon` is only read by `doubling-known`.
///
/// # Safety
/// `spec` and `model` must be NUL-terminated strings; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn bmc_policy_new(
    spec: *const c_char,
    model: *const c_char,
    horizon: usize,
    out: *mut *mut BmcPolicy,
) -> BmcStatus {
    guard(|| {
        non_null(out, "out")?;
        let spec: PolicySpec = read_str(spec, "spec")?.parse().or_status()?;
        let model = read_model(model)?;
        model.check(horizon.max(1)).or_status()?;
        let policy = spec.build(&model, horizon).or_status()?;
        *out = Box::into_raw(Box::new(BmcPolicy { policy, sim: StackSim::new(model) }));
        Ok(())
    })
}

/// Feeds one arrival to the policy, applies its decision and reports the chosen
/// width and that step's cost (merge plus read). Either output may be null.
///
/// # Safety
/// `policy` must be a live handle; outputs must be null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn bmc_policy_step(
    policy: *mut BmcPolicy,
    length: f64,
    read_rate: f64,
    out_width: *mut usize,
    out_step_cost: *mut f64,
) -> BmcStatus {
    guard(|| {
        non_null(policy, "policy")?;
        let p = &mut *policy;
        if !(length.is_finite() && length >= 0.0 && read_rate.is_finite() && read_rate >= 0.0) {
            return Err(fail(BmcStatus::Usage, "length and read rate must be finite and >= 0"));
        }
        let arrival = Arrival::new(length, read_rate);
        let width = p.policy.decide(arrival).or_status()?;
        let rec = p.sim.step(arrival, width).or_status()?;
        if !out_width.is_null() {
            *out_width = width;
        }
        if !out_step_cost.is_null() {
            *out_step_cost = rec.merge_cost + rec.read_cost;
        }
        Ok(())
    })
}

/// Files currently on the policy's stack; 0 for null.
///
/// # Safety
/// `policy` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bmc_policy_stack_size(policy: *const BmcPolicy) -> usize {
    policy.as_ref().map_or(0, |p| p.sim.stack_size())
}

/// Cost accumulated by the policy so far; 0 for null.
///
/// # Safety
/// `policy` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bmc_policy_total_cost(policy: *const BmcPolicy) -> f64 {
    policy.as_ref().map_or(0.0, |p| p.sim.total_cost())
}

/// Releases a policy. Null is ignored.
///
/// # Safety
/// `policy` must be null or a live handle that is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bmc_policy_free(policy: *mut BmcPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Runs policy `spec` over the whole instance (horizon = instance length) and
/// reports its total cost; the widths go to `out_widths` when it is non-null.
///
/// # Safety
/// Pointers must be valid as described; `out_widths` may be null.
#[no_mangle]
pub unsafe extern "C" fn bmc_run_policy(
    instance: *const BmcInstance,
    spec: *const c_char,
    model: *const c_char,
    out_cost: *mut f64,
    out_widths: *mut usize,
    widths_cap: usize,
) -> BmcStatus {
    guard(|| {
        non_null(instance, "instance")?;
        non_null(out_cost, "out_cost")?;
        let inst = &(*instance).inner;
        let spec: PolicySpec = read_str(spec, "spec")?.parse().or_status()?;
        let model = read_model(model)?;
        let mut policy = spec.build(&model, inst.len()).or_status()?;
        let run = bmc_lab::policy::run_policy(inst, policy.as_mut(), &model).or_status()?;
        write_widths(&run.widths, out_widths, widths_cap)?;
        *out_cost = run.trace.total_cost;
        Ok(())
    })
}
