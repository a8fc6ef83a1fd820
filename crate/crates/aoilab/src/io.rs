//! Text formats: instance files, trace files, CSV exports, and the
//! content hash used as instance id.
//!
//! Instance grammar (one directive per line, `#` starts a comment):
//!
//! ```text
//! horizon 2
//! initial_generation 0      # optional, defaults to 0
//! update 0 29/20            # generation size
//! update 1/4 5/4
//! ```
//!
//! Numbers are integers, `p/q` rationals, or exact decimals; everything
//! round-trips losslessly.

use std::fmt::Write as _;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::aoi::{AoiReport, PerUpdateMetrics};
use crate::model::{validate_instance, validate_trace, Instance, ModelError, Segment, Trace};
use crate::ratio::Ratio;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IoError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("trace does not satisfy instance invariants")]
    InvalidTrace,
}

fn parse_ratio(token: &str, line: usize) -> Result<Ratio, IoError> {
    Ratio::from_str(token).map_err(|e| IoError::Parse {
        line,
        message: format!("bad number {token:?}: {e}"),
    })
}

/// Parses the instance grammar and validates the result.
pub fn parse_instance(text: &str) -> Result<Instance, IoError> {
    let mut horizon: Option<Ratio> = None;
    let mut initial_generation = Ratio::zero();
    let mut raw: Vec<(Ratio, Ratio)> = Vec::new();
    let mut last_line = 0;
    for (k, full_line) in text.lines().enumerate() {
        let line = k + 1;
        last_line = line;
        let body = full_line.split('#').next().unwrap().trim();
        if body.is_empty() {
            continue;
        }
        let mut tokens = body.split_whitespace();
        let directive = tokens.next().unwrap();
        let rest: Vec<&str> = tokens.collect();
        match directive {
            "horizon" => {
                if rest.len() != 1 {
                    return Err(IoError::Parse {
                        line,
                        message: "expected: horizon <number>".into(),
                    });
                }
                if horizon.is_some() {
                    return Err(IoError::Parse {
                        line,
                        message: "duplicate horizon".into(),
                    });
                }
                horizon = Some(parse_ratio(rest[0], line)?);
            }
            "initial_generation" => {
                if rest.len() != 1 {
                    return Err(IoError::Parse {
                        line,
                        message: "expected: initial_generation <number>".into(),
                    });
                }
                initial_generation = parse_ratio(rest[0], line)?;
            }
            "update" => {
                if rest.len() != 2 {
                    return Err(IoError::Parse {
                        line,
                        message: "expected: update <generation> <size>".into(),
                    });
                }
                raw.push((parse_ratio(rest[0], line)?, parse_ratio(rest[1], line)?));
            }
            other => {
                return Err(IoError::Parse {
                    line,
                    message: format!("unknown directive {other:?}"),
                });
            }
        }
    }
    let horizon = horizon.ok_or(IoError::Parse {
        line: last_line,
        message: "missing horizon directive".into(),
    })?;
    Ok(validate_instance(raw, horizon, initial_generation)?)
}

/// Canonical text form: fixed directive order, reduced `p/q` numbers.
/// Parsing it back yields an equal [`Instance`].
pub fn serialize_instance(instance: &Instance) -> String {
    let mut out = String::new();
    writeln!(out, "horizon {}", instance.horizon()).unwrap();
    writeln!(out, "initial_generation {}", instance.initial_generation()).unwrap();
    for u in instance.updates() {
        writeln!(out, "update {} {}", u.generation, u.size).unwrap();
    }
    out
}

/// SHA-256 of the canonical serialization, hex-encoded.
pub fn instance_id(instance: &Instance) -> String {
    let digest = Sha256::digest(serialize_instance(instance).as_bytes());
    let mut out = String::with_capacity(64);
    for byte in digest {
        write!(out, "{byte:02x}").unwrap();
    }
    out
}

/// Trace text form: the instance id, then one line per segment and
/// completion in time order.
pub fn serialize_trace(trace: &Trace) -> String {
    let mut out = String::new();
    writeln!(out, "instance {}", trace.instance_id).unwrap();
    for s in &trace.segments {
        writeln!(out, "segment {} {} {}", s.update_index, s.start, s.end).unwrap();
    }
    for (idx, time) in &trace.completions {
        writeln!(out, "completion {idx} {time}").unwrap();
    }
    out
}

/// Parses [`serialize_trace`] output and re-checks every trace
/// invariant against `instance`.
pub fn parse_trace(text: &str, instance: &Instance) -> Result<Trace, IoError> {
    let mut trace = Trace {
        instance_id: String::new(),
        segments: Vec::new(),
        completions: Vec::new(),
    };
    for (k, full_line) in text.lines().enumerate() {
        let line = k + 1;
        let body = full_line.split('#').next().unwrap().trim();
        if body.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = body.split_whitespace().collect();
        let parse_index = |token: &str| -> Result<usize, IoError> {
            token.parse().map_err(|_| IoError::Parse {
                line,
                message: format!("bad update index {token:?}"),
            })
        };
        match tokens.as_slice() {
            ["instance", id] => trace.instance_id = (*id).to_string(),
            ["segment", idx, start, end] => trace.segments.push(Segment {
                update_index: parse_index(idx)?,
                start: parse_ratio(start, line)?,
                end: parse_ratio(end, line)?,
            }),
            ["completion", idx, time] => trace
                .completions
                .push((parse_index(idx)?, parse_ratio(time, line)?)),
            _ => {
                return Err(IoError::Parse {
                    line,
                    message: format!("unrecognized trace line {body:?}"),
                });
            }
        }
    }
    let (ok, _) = validate_trace(&trace, instance);
    if !ok {
        return Err(IoError::InvalidTrace);
    }
    Ok(trace)
}

pub fn trace_csv(trace: &Trace) -> String {
    let mut out = String::from("update,start,end\n");
    for s in &trace.segments {
        writeln!(out, "{},{},{}", s.update_index, s.start, s.end).unwrap();
    }
    out
}

/// One row per update; cells for never-served / never-completed
/// quantities are left empty.
pub fn metrics_csv(metrics: &PerUpdateMetrics) -> String {
    let opt = |r: &Option<Ratio>| r.as_ref().map(|v| v.to_string()).unwrap_or_default();
    let mut out = String::from("i,g,s,delta,b,r,w,d,nu,nu_min\n");
    for row in &metrics.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            row.index,
            row.generation,
            row.size,
            row.delta,
            opt(&row.b),
            opt(&row.r),
            opt(&row.w),
            opt(&row.d),
            opt(&row.nu),
            row.nu_min,
        )
        .unwrap();
    }
    out
}

/// Human-readable report: exact rationals with a 30-significant-digit
/// decimal sidecar.
pub fn report_text(report: &AoiReport) -> String {
    let dec = |r: &Ratio| r.to_decimal_string(30);
    let mut out = String::new();
    writeln!(out, "integral {} ~ {}", report.integral, dec(&report.integral)).unwrap();
    writeln!(out, "average {} ~ {}", report.average, dec(&report.average)).unwrap();
    for (k, term) in report.terms.iter().enumerate() {
        writeln!(out, "term {} {} ~ {}", k + 1, term, dec(term)).unwrap();
    }
    writeln!(out, "tail {} ~ {}", report.tail, dec(&report.tail)).unwrap();
    out
}
