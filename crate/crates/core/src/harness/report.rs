use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::trial::ModelOutcome;
use crate::datagen::ModelName;
use crate::error::Result;

/// Row of the per-trial CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct TrialRow {
    trial: usize,
    seed: u64,
    model: ModelName,
    theta: Option<f64>,
    radius: Option<f64>,
    cvar: Option<f64>,
    error: Option<String>,
}

/// Aggregate of one model across trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub model: ModelName,
    pub mean: f64,
    /// Unbiased sample variance; NaN with fewer than two successful trials.
    pub variance: f64,
    pub n_trials: usize,
    pub n_failed: usize,
}

pub fn write_trials_csv<W: Write>(w: W, outcomes: &[ModelOutcome]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for o in outcomes {
        wr.serialize(TrialRow {
            trial: o.trial,
            seed: o.seed,
            model: o.model,
            theta: o.theta,
            radius: o.radius,
            cvar: o.cvar,
            error: o.error.clone(),
        })?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_trials_csv<R: Read>(r: R) -> Result<Vec<ModelOutcome>> {
    let mut rd = csv::Reader::from_reader(r);
    rd.deserialize::<TrialRow>()
        .map(|row| {
            let row = row?;
            Ok(ModelOutcome {
                trial: row.trial,
                seed: row.seed,
                model: row.model,
                theta: row.theta,
                radius: row.radius,
                cvar: row.cvar,
                error: row.error,
                seconds: 0.0,
            })
        })
        .collect()
}

/// Mean and variance per model, in order of first appearance.
pub fn summarize(outcomes: &[ModelOutcome]) -> Vec<SummaryRow> {
    let mut order: Vec<ModelName> = Vec::new();
    for o in outcomes {
        if !order.contains(&o.model) {
            order.push(o.model);
        }
    }
    order
        .into_iter()
        .map(|model| {
            let all: Vec<&ModelOutcome> = outcomes.iter().filter(|o| o.model == model).collect();
            let vals: Vec<f64> = all.iter().filter_map(|o| o.cvar).collect();
            let k = vals.len();
            let mean = if k == 0 {
                f64::NAN
            } else {
                vals.iter().sum::<f64>() / k as f64
            };
            let variance = if k < 2 {
                f64::NAN
            } else {
                vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64
            };
            SummaryRow {
                model,
                mean,
                variance,
                n_trials: all.len(),
                n_failed: all.len() - k,
            }
        })
        .collect()
}

pub fn write_summary_csv<W: Write>(w: W, rows: &[SummaryRow]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

/// Mean CVaR of `model`, if it appears in the summary.
pub fn mean_of(rows: &[SummaryRow], model: ModelName) -> Option<f64> {
    rows.iter().find(|r| r.model == model).map(|r| r.mean)
}

/// Fraction of trials in which `a` achieved strictly lower CVaR than `b`.
pub fn win_rate(outcomes: &[ModelOutcome], a: ModelName, b: ModelName) -> f64 {
    let mut wins = 0usize;
    let mut total = 0usize;
    for oa in outcomes.iter().filter(|o| o.model == a) {
        let ob = outcomes
            .iter()
            .find(|o| o.model == b && o.trial == oa.trial);
        if let (Some(x), Some(Some(y))) = (oa.cvar, ob.map(|o| o.cvar)) {
            total += 1;
            if x < y {
                wins += 1;
            }
        }
    }
    if total == 0 {
        f64::NAN
    } else {
        wins as f64 / total as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(trial: usize, model: ModelName, cvar: Option<f64>) -> ModelOutcome {
        ModelOutcome {
            trial,
            seed: trial as u64,
            model,
            theta: Some(0.5),
            radius: None,
            cvar,
            error: cvar.is_none().then(|| "boom".to_string()),
            seconds: 1.0,
        }
    }

    #[test]
    fn csv_round_trip_and_summary() {
        let outs = vec![
            outcome(0, ModelName::Sp, Some(-1.0)),
            outcome(0, ModelName::DroM1, Some(2.0)),
            outcome(1, ModelName::Sp, Some(-3.0)),
            outcome(1, ModelName::DroM1, None),
        ];
        let mut buf = Vec::new();
        write_trials_csv(&mut buf, &outs).unwrap();
        let back = read_trials_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 4);
        assert_eq!(back[0].cvar, Some(-1.0));
        assert_eq!(back[3].cvar, None);
        let s = summarize(&back);
        assert_eq!(s[0].model, ModelName::Sp);
        assert_eq!(s[0].mean, -2.0);
        assert_eq!(s[0].variance, 2.0);
        assert_eq!(s[1].n_failed, 1);
        assert!(s[1].variance.is_nan());
        assert_eq!(win_rate(&back, ModelName::Sp, ModelName::DroM1), 1.0);
        let mut out = Vec::new();
        write_summary_csv(&mut out, &s).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("model,mean,variance,n_trials,n_failed\n"));
        assert!(text.contains("SP,-2.0,2.0,2,0"));
    }
}
