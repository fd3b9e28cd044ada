//! CSV formats for instances and schedules.
//!
//! Instances: header `t,length,read_rate`, one row per step in time order.
//! Run-length instances: header `length,read_rate,count`, used for adversarial
//! inputs whose zero runs are far too long to list. Schedules: header `t,width`.
//! Numbers are written in their shortest round-trip form, so files round-trip exactly.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Arrival, Instance, Schedule};

/// Largest run-length file that will be expanded into an explicit instance.
pub const MAX_EXPANDED_STEPS: f64 = 1e8;

/// A run of `count` identical arrivals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Run {
    pub arrival: Arrival,
    pub count: f64,
}

fn parse_f64(field: &str, line: usize, what: &str) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| Error::Parse { line, msg: format!("{what} {field:?} is not a number") })
}

fn parse_usize(field: &str, line: usize, what: &str) -> Result<usize> {
    field
        .trim()
        .parse::<usize>()
        .map_err(|_| Error::Parse { line, msg: format!("{what} {field:?} is not a non-negative integer") })
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(false).from_reader(input)
}

fn headers<R: Read>(rdr: &mut csv::Reader<R>) -> Result<Vec<String>> {
    Ok(rdr.headers()?.iter().map(|h| h.to_string()).collect())
}

fn line_of(rec: &csv::StringRecord) -> usize {
    rec.position().map_or(0, |p| p.line() as usize)
}

/// Parses either instance format. Run-length input is expanded.
pub fn parse_instance<R: Read>(input: R) -> Result<Instance> {
    let mut rdr = reader(input);
    let hdr = headers(&mut rdr)?;
    match hdr.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["t", "length", "read_rate"] => {
            let mut steps = Vec::new();
            for rec in rdr.records() {
                let rec = rec?;
                let line = line_of(&rec);
                let t = parse_usize(&rec[0], line, "t")?;
                if t != steps.len() + 1 {
                    return Err(Error::Parse { line, msg: format!("expected t={}, found {t}", steps.len() + 1) });
                }
                let a = Arrival::new(parse_f64(&rec[1], line, "length")?, parse_f64(&rec[2], line, "read_rate")?);
                check_arrival(a, line)?;
                steps.push(a);
            }
            Instance::new(steps)
        }
        ["length", "read_rate", "count"] => {
            let runs = parse_runs_body(rdr)?;
            expand_runs(&runs)
        }
        other => Err(Error::Parse {
            line: 1,
            msg: format!("unexpected header {other:?}; want t,length,read_rate or length,read_rate,count"),
        }),
    }
}

fn check_arrival(a: Arrival, line: usize) -> Result<()> {
    if !(a.length.is_finite() && a.length >= 0.0 && a.read_rate.is_finite() && a.read_rate >= 0.0) {
        return Err(Error::Parse { line, msg: "lengths and read rates must be finite and >= 0".into() });
    }
    Ok(())
}

fn parse_runs_body<R: Read>(mut rdr: csv::Reader<R>) -> Result<Vec<Run>> {
    let mut runs = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let a = Arrival::new(parse_f64(&rec[0], line, "length")?, parse_f64(&rec[1], line, "read_rate")?);
        check_arrival(a, line)?;
        let count = parse_f64(&rec[2], line, "count")?;
        if !(count.is_finite() && count >= 0.0 && count.fract() == 0.0) {
            return Err(Error::Parse { line, msg: format!("count {count} must be a whole number >= 0") });
        }
        runs.push(Run { arrival: a, count });
    }
    Ok(runs)
}

pub fn parse_runs<R: Read>(input: R) -> Result<Vec<Run>> {
    let mut rdr = reader(input);
    let hdr = headers(&mut rdr)?;
    if hdr != ["length", "read_rate", "count"] {
        return Err(Error::Parse { line: 1, msg: format!("unexpected header {hdr:?}; want length,read_rate,count") });
    }
    parse_runs_body(rdr)
}

/// Expands runs into an explicit instance, refusing more than [`MAX_EXPANDED_STEPS`] steps.
pub fn expand_runs(runs: &[Run]) -> Result<Instance> {
    let total: f64 = runs.iter().map(|r| r.count).sum();
    if total > MAX_EXPANDED_STEPS {
        return Err(Error::TooLarge { n: total.min(usize::MAX as f64) as usize, max_n: MAX_EXPANDED_STEPS as usize });
    }
    let mut steps = Vec::with_capacity(total as usize);
    for r in runs {
        steps.extend(std::iter::repeat_n(r.arrival, r.count as usize));
    }
    Instance::new(steps)
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    parse_instance(File::open(path)?)
}

pub fn write_instance<W: Write>(instance: &Instance, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "length", "read_rate"])?;
    for (i, a) in instance.steps().iter().enumerate() {
        w.write_record([(i + 1).to_string(), a.length.to_string(), a.read_rate.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_runs<W: Write>(runs: &[Run], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["length", "read_rate", "count"])?;
    for r in runs {
        w.write_record([r.arrival.length.to_string(), r.arrival.read_rate.to_string(), r.count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn parse_schedule<R: Read>(input: R) -> Result<Schedule> {
    let mut rdr = reader(input);
    let hdr = headers(&mut rdr)?;
    if hdr != ["t", "width"] {
        return Err(Error::Parse { line: 1, msg: format!("unexpected header {hdr:?}; want t,width") });
    }
    let mut widths = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let t = parse_usize(&rec[0], line, "t")?;
        if t != widths.len() + 1 {
            return Err(Error::Parse { line, msg: format!("expected t={}, found {t}", widths.len() + 1) });
        }
        widths.push(parse_usize(&rec[1], line, "width")?);
    }
    Ok(Schedule::new(widths))
}

pub fn read_schedule(path: &Path) -> Result<Schedule> {
    parse_schedule(File::open(path)?)
}

pub fn write_schedule<W: Write>(schedule: &Schedule, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "width"])?;
    for (i, width) in schedule.widths.iter().enumerate() {
        w.write_record([(i + 1).to_string(), width.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Opens `path` for buffered writing.
pub fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}
