use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use bmc_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = bmc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn instance(lengths: &[f64], reads: &[f64]) -> *mut BmcInstance {
    let mut out = ptr::null_mut();
    let st = unsafe { bmc_instance_new(lengths.as_ptr(), reads.as_ptr(), lengths.len(), &mut out) };
    assert_eq!(st, BmcStatus::Ok);
    out
}

#[test]
fn simulate_and_opt_agree_with_hand_computed_costs() {
    // Three unit files, no reads, capped at 2. Widths [1, 2, 1] cost 1 + 2 + 1 = 4
    // with stacks 1, 1, 2; every other feasible schedule merges more.
    let inst = instance(&[1.0, 1.0, 1.0], &[0.0, 0.0, 0.0]);
    assert_eq!(unsafe { bmc_instance_len(inst) }, 3);
    let model = c("capped:2");
    let mut cost = 0.0;
    let widths = [1usize, 2, 1];
    assert_eq!(unsafe { bmc_simulate(inst, model.as_ptr(), widths.as_ptr(), 3, &mut cost) }, BmcStatus::Ok);
    assert_eq!(cost, 4.0);
    let mut opt = 0.0;
    let mut out = [0usize; 3];
    assert_eq!(unsafe { bmc_opt_dp(inst, model.as_ptr(), &mut opt, out.as_mut_ptr(), 3) }, BmcStatus::Ok);
    assert_eq!(opt, 4.0);
    let mut check = 0.0;
    assert_eq!(unsafe { bmc_simulate(inst, model.as_ptr(), out.as_ptr(), 3, &mut check) }, BmcStatus::Ok);
    assert_eq!(check, opt);
    unsafe { bmc_instance_free(inst) };
}

#[test]
fn infeasible_and_usage_errors_map_to_codes() {
    let inst = instance(&[1.0, 1.0], &[0.0, 0.0]);
    let model = c("capped:1");
    let mut cost = 0.0;
    let widths = [1usize, 1];
    assert_eq!(unsafe { bmc_simulate(inst, model.as_ptr(), widths.as_ptr(), 2, &mut cost) }, BmcStatus::Infeasible);
    assert!(last_error().contains("infeasible"), "{}", last_error());
    let bad = c("capped:zero");
    assert_eq!(unsafe { bmc_simulate(inst, bad.as_ptr(), widths.as_ptr(), 2, &mut cost) }, BmcStatus::Usage);
    assert!(last_error().contains("cost model"));
    let wide = [1usize, 3];
    let linear = c("linear");
    assert_eq!(unsafe { bmc_simulate(inst, linear.as_ptr(), wide.as_ptr(), 2, &mut cost) }, BmcStatus::Usage);
    assert_eq!(unsafe { bmc_simulate(inst, ptr::null(), wide.as_ptr(), 2, &mut cost) }, BmcStatus::NullPointer);
    let mut small = [0usize; 1];
    assert_eq!(
        unsafe { bmc_opt_dp(inst, linear.as_ptr(), &mut cost, small.as_mut_ptr(), 1) },
        BmcStatus::BufferTooSmall
    );
    unsafe { bmc_instance_free(inst) };
}

#[test]
fn invalid_instances_are_rejected() {
    let mut out = ptr::null_mut();
    let st = unsafe { bmc_instance_new([-1.0].as_ptr(), [0.0].as_ptr(), 1, &mut out) };
    assert_eq!(st, BmcStatus::Usage);
    assert!(out.is_null());
    let st = unsafe { bmc_instance_new(ptr::null(), ptr::null(), 1, &mut out) };
    assert_eq!(st, BmcStatus::NullPointer);
}

#[test]
fn stepping_a_policy_matches_the_batch_run() {
    let lengths: Vec<f64> = (0..200).map(|t| 1.0 + ((t * 37) % 11) as f64).collect();
    let reads = vec![0.5; 200];
    let inst = instance(&lengths, &reads);
    let spec = c("brb:3");
    let model = c("capped:3");
    let mut batch_cost = 0.0;
    let mut batch_widths = vec![0usize; 200];
    let st =
        unsafe { bmc_run_policy(inst, spec.as_ptr(), model.as_ptr(), &mut batch_cost, batch_widths.as_mut_ptr(), 200) };
    assert_eq!(st, BmcStatus::Ok);

    let mut policy = ptr::null_mut();
    assert_eq!(unsafe { bmc_policy_new(spec.as_ptr(), model.as_ptr(), 200, &mut policy) }, BmcStatus::Ok);
    let mut sum = 0.0;
    for (t, (&l, &r)) in lengths.iter().zip(&reads).enumerate() {
        let (mut w, mut step) = (0usize, 0.0);
        assert_eq!(unsafe { bmc_policy_step(policy, l, r, &mut w, &mut step) }, BmcStatus::Ok);
        assert_eq!(w, batch_widths[t]);
        assert!(unsafe { bmc_policy_stack_size(policy) } <= 3);
        sum += step;
    }
    let total = unsafe { bmc_policy_total_cost(policy) };
    assert!((total - batch_cost).abs() <= 1e-9 * batch_cost);
    assert!((sum - total).abs() <= 1e-9 * total);
    assert_eq!(unsafe { bmc_policy_step(policy, f64::NAN, 0.0, ptr::null_mut(), ptr::null_mut()) }, BmcStatus::Usage);
    unsafe {
        bmc_policy_free(policy);
        bmc_instance_free(inst);
    }
}

#[test]
fn unknown_policy_is_a_usage_error() {
    let mut policy = ptr::null_mut();
    let (spec, model) = (c("fifo"), c("linear"));
    assert_eq!(unsafe { bmc_policy_new(spec.as_ptr(), model.as_ptr(), 10, &mut policy) }, BmcStatus::Usage);
    assert!(last_error().contains("policy"));
    assert!(policy.is_null());
}

#[test]
fn null_handles_are_tolerated_by_queries_and_free() {
    unsafe {
        assert_eq!(bmc_instance_len(ptr::null()), 0);
        assert_eq!(bmc_policy_stack_size(ptr::null()), 0);
        bmc_instance_free(ptr::null_mut());
        bmc_policy_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_the_api_and_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/bmc.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "typedef struct BmcInstance BmcInstance;",
        "typedef struct BmcPolicy BmcPolicy;",
        "BMC_STATUS_INFEASIBLE = 3",
        "bmc_last_error",
        "bmc_instance_new",
        "bmc_simulate",
        "bmc_opt_dp",
        "bmc_policy_step",
        "bmc_run_policy",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
    // Syntax-check the header with the system C compiler when one is present.
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        format!(
            "#include \"{}\"\nint main(void) {{ BmcStatus s = BMC_STATUS_OK; return (int)s + (bmc_last_error() != 0); }}\n",
            header.display()
        ),
    )
    .unwrap();
    match Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&src).output() {
        Ok(out) => assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr)),
        Err(_) => eprintln!("no C compiler found; skipped compiling the header"),
    }
}
