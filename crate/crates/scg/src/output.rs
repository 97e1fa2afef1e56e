//! Bit-exact output formats: the per-trial/aggregate trace CSV and the
//! machine-readable run summary.
//!
//! The trace CSV schema is fixed:
//!
//! ```text
//! n,f,grad_norm,V,avg_V,m_sq,G_sq,h_max,h_min,h_sum,D_hat,f_avg_iterate,bound_t1,bound_t2
//! ```
//!
//! Values are decimal floating point with 17 significant digits; columns
//! that do not apply to a run hold the literal `NA`. `bound_t1` carries the
//! constant-rate bound and `bound_t2` the diminishing-rate bound, whichever
//! applies to the run's regime, evaluated with the constants estimated from
//! the whole trial set.

use std::io::Write;

use crate::conformance::CheckReport;
use crate::diagnostics::Trace;
use crate::{Error, Result};

pub const TRACE_HEADER: &str =
    "n,f,grad_norm,V,avg_V,m_sq,G_sq,h_max,h_min,h_sum,D_hat,f_avg_iterate,bound_t1,bound_t2";

/// 17 significant digits, round-trip exact for f64.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn cell(v: Option<f64>) -> String {
    match v {
        Some(v) => fmt17(v),
        None => "NA".to_string(),
    }
}

/// Writes one trace in the pinned schema. `bounds` maps a step index to the
/// applicable `(bound_t1, bound_t2)` values.
pub fn write_trace_csv<W: Write>(
    out: &mut W,
    trace: &Trace<f64>,
    bounds: &dyn Fn(u64) -> (Option<f64>, Option<f64>),
) -> Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for row in &trace.rows {
        let (b1, b2) = bounds(row.n);
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.n,
            fmt17(row.f),
            fmt17(row.grad_norm),
            cell(row.v),
            cell(row.avg_v),
            fmt17(row.m_sq),
            fmt17(row.dir_sq),
            fmt17(row.h_max),
            fmt17(row.h_min),
            fmt17(row.h_sum),
            cell(row.d_hat),
            fmt17(row.f_avg_iterate),
            cell(b1),
            cell(b2),
        )?;
    }
    Ok(())
}

/// Writes the trial-mean trace: each column averaged over trials at each
/// logged step. Optional columns stay `NA` unless present in every trial.
pub fn write_aggregate_csv<W: Write>(
    out: &mut W,
    traces: &[Trace<f64>],
    bounds: &dyn Fn(u64) -> (Option<f64>, Option<f64>),
) -> Result<()> {
    let grid = crate::diagnostics::aligned_steps(traces)?;
    writeln!(out, "{TRACE_HEADER}")?;
    let k = traces.len() as f64;
    let mean = |f: &dyn Fn(&crate::diagnostics::TraceRow<f64>) -> f64, i: usize| -> f64 {
        traces.iter().map(|t| f(&t.rows[i])).sum::<f64>() / k
    };
    let mean_opt =
        |f: &dyn Fn(&crate::diagnostics::TraceRow<f64>) -> Option<f64>, i: usize| -> Option<f64> {
            let mut acc = 0.0;
            for t in traces {
                acc += f(&t.rows[i])?;
            }
            Some(acc / k)
        };
    for (i, &n) in grid.iter().enumerate() {
        let (b1, b2) = bounds(n);
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            n,
            fmt17(mean(&|r| r.f, i)),
            fmt17(mean(&|r| r.grad_norm, i)),
            cell(mean_opt(&|r| r.v, i)),
            cell(mean_opt(&|r| r.avg_v, i)),
            fmt17(mean(&|r| r.m_sq, i)),
            fmt17(mean(&|r| r.dir_sq, i)),
            fmt17(mean(&|r| r.h_max, i)),
            fmt17(mean(&|r| r.h_min, i)),
            fmt17(mean(&|r| r.h_sum, i)),
            cell(mean_opt(&|r| r.d_hat, i)),
            fmt17(mean(&|r| r.f_avg_iterate, i)),
            cell(b1),
            cell(b2),
        )?;
    }
    Ok(())
}

/// One fitted log-log slope.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeEntry {
    pub series: String,
    pub window: (u64, u64),
    pub slope: f64,
}

/// Final bound-versus-measurement margin.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginEntry {
    pub bound: String,
    pub n: u64,
    pub measured: f64,
    pub rhs: f64,
}

/// Machine-readable run summary: check table, fitted slopes, and
/// bound-versus-measure margins, rendered as CSV blocks under `#` headers.
#[derive(Debug, Clone, Default)]
pub struct Summary {
    pub checks: Vec<CheckReport>,
    pub slopes: Vec<SlopeEntry>,
    pub margins: Vec<MarginEntry>,
}

impl Summary {
    pub fn render(&self) -> String {
        let mut s = String::new();
        s.push_str("# checks\n");
        s.push_str("name,pass,worst_violation,worst_step,trials,note\n");
        for c in &self.checks {
            let note = c.note.as_deref().unwrap_or("").replace(',', ";");
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                c.name,
                c.pass,
                fmt17(c.worst_violation),
                c.worst_step,
                c.trials,
                note
            ));
        }
        s.push_str("# slopes\n");
        s.push_str("series,window_lo,window_hi,slope\n");
        for e in &self.slopes {
            s.push_str(&format!(
                "{},{},{},{}\n",
                e.series,
                e.window.0,
                e.window.1,
                fmt17(e.slope)
            ));
        }
        s.push_str("# margins\n");
        s.push_str("bound,n,measured,rhs,margin\n");
        for m in &self.margins {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                m.bound,
                m.n,
                fmt17(m.measured),
                fmt17(m.rhs),
                fmt17(m.rhs - m.measured)
            ));
        }
        s
    }

    /// Parses a rendered summary back; used to keep the schema honest.
    pub fn parse(text: &str) -> Result<Summary> {
        #[derive(PartialEq)]
        enum Block {
            None,
            Checks,
            Slopes,
            Margins,
        }
        let mut block = Block::None;
        let mut expect_header = false;
        let mut out = Summary::default();
        let bad = |line: &str| Error::config(format!("malformed summary line: '{line}'"));
        for line in text.lines() {
            match line {
                "# checks" => {
                    block = Block::Checks;
                    expect_header = true;
                    continue;
                }
                "# slopes" => {
                    block = Block::Slopes;
                    expect_header = true;
                    continue;
                }
                "# margins" => {
                    block = Block::Margins;
                    expect_header = true;
                    continue;
                }
                _ => {}
            }
            if expect_header {
                expect_header = false;
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            match block {
                Block::Checks => {
                    if fields.len() != 6 {
                        return Err(bad(line));
                    }
                    out.checks.push(CheckReport {
                        name: fields[0].to_string(),
                        pass: fields[1].parse().map_err(|_| bad(line))?,
                        worst_violation: fields[2].parse().map_err(|_| bad(line))?,
                        worst_step: fields[3].parse().map_err(|_| bad(line))?,
                        trials: fields[4].parse().map_err(|_| bad(line))?,
                        note: if fields[5].is_empty() {
                            None
                        } else {
                            Some(fields[5].to_string())
                        },
                    });
                }
                Block::Slopes => {
                    if fields.len() != 4 {
                        return Err(bad(line));
                    }
                    out.slopes.push(SlopeEntry {
                        series: fields[0].to_string(),
                        window: (
                            fields[1].parse().map_err(|_| bad(line))?,
                            fields[2].parse().map_err(|_| bad(line))?,
                        ),
                        slope: fields[3].parse().map_err(|_| bad(line))?,
                    });
                }
                Block::Margins => {
                    if fields.len() != 5 {
                        return Err(bad(line));
                    }
                    out.margins.push(MarginEntry {
                        bound: fields[0].to_string(),
                        n: fields[1].parse().map_err(|_| bad(line))?,
                        measured: fields[2].parse().map_err(|_| bad(line))?,
                        rhs: fields[3].parse().map_err(|_| bad(line))?,
                    });
                }
                Block::None => return Err(bad(line)),
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits_round_trip() {
        for v in [0.5, 1.0 / 3.0, 1e-300, 123456.789e12, -0.0317] {
            let s = fmt17(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
    }

    #[test]
    fn empty_summary_is_header_only_and_round_trips() {
        let s = Summary::default();
        let text = s.render();
        assert_eq!(
            text,
            "# checks\nname,pass,worst_violation,worst_step,trials,note\n\
             # slopes\nseries,window_lo,window_hi,slope\n\
             # margins\nbound,n,measured,rhs,margin\n"
        );
        let back = Summary::parse(&text).unwrap();
        assert!(back.checks.is_empty() && back.slopes.is_empty() && back.margins.is_empty());
    }

    #[test]
    fn populated_summary_round_trips() {
        let s = Summary {
            checks: vec![CheckReport {
                name: "reductions".into(),
                pass: true,
                worst_violation: 0.0,
                worst_step: 3,
                trials: 1,
                note: Some("bitwise".into()),
            }],
            slopes: vec![SlopeEntry {
                series: "avg_V".into(),
                window: (1000, 100000),
                slope: -0.51,
            }],
            margins: vec![MarginEntry {
                bound: "bound_t2".into(),
                n: 100000,
                measured: 0.003,
                rhs: 0.3,
            }],
        };
        let back = Summary::parse(&s.render()).unwrap();
        assert_eq!(back.checks.len(), 1);
        assert_eq!(back.checks[0].name, "reductions");
        assert_eq!(back.slopes, s.slopes);
        assert_eq!(back.margins[0].rhs, 0.3);
    }
}
