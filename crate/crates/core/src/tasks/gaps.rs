use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{GpModel, PosteriorPrediction, TimeSeries};

/// Half-open intervals `[start, end)` of missing samples, sorted and
/// disjoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct GapSpec {
    intervals: Vec<[f64; 2]>,
}

impl GapSpec {
    pub fn new(intervals: Vec<[f64; 2]>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::input("tasks", "gap list is empty"));
        }
        for (i, &[start, end]) in intervals.iter().enumerate() {
            if !(start.is_finite() && end.is_finite() && start < end) {
                return Err(Error::input(
                    "tasks",
                    format!("gap {i} [{start}, {end}) must have finite bounds with start < end"),
                ));
            }
            if i > 0 && start < intervals[i - 1][1] {
                return Err(Error::input(
                    "tasks",
                    format!("gap {i} starts before gap {} ends; gaps must be sorted and disjoint", i - 1),
                ));
            }
        }
        Ok(GapSpec { intervals })
    }

    pub fn intervals(&self) -> &[[f64; 2]] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Index of the gap containing `t`, if any.
    pub fn locate(&self, t: f64) -> Option<usize> {
        let i = self.intervals.partition_point(|g| g[1] <= t);
        (i < self.intervals.len() && self.intervals[i][0] <= t).then_some(i)
    }
}

impl TryFrom<Vec<[f64; 2]>> for GapSpec {
    type Error = Error;

    fn try_from(intervals: Vec<[f64; 2]>) -> Result<Self> {
        GapSpec::new(intervals)
    }
}

impl From<GapSpec> for Vec<[f64; 2]> {
    fn from(spec: GapSpec) -> Self {
        spec.intervals
    }
}

#[derive(Debug, Clone)]
pub struct GapFill {
    pub start: f64,
    pub end: f64,
    /// Posterior over the original sample times inside the gap.
    pub prediction: PosteriorPrediction,
    /// RMS of the posterior mean against the held-out truth.
    pub rms: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct GapFillResult {
    pub gaps: Vec<GapFill>,
}

/// Per-gap summary written to reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapSummary {
    pub start: f64,
    pub end: f64,
    pub n_samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rms: Option<f64>,
}

impl GapFillResult {
    pub fn summaries(&self) -> Vec<GapSummary> {
        self.gaps
            .iter()
            .map(|g| GapSummary {
                start: g.start,
                end: g.end,
                n_samples: g.prediction.len(),
                rms: g.rms,
            })
            .collect()
    }
}

/// Predicts the samples of `data` that fall inside `gaps` from the samples
/// outside them, with a fully specified model. Samples inside a gap never
/// reach the factorization, so their values cannot influence the result.
/// With `full_covariance`, each gap's prediction carries its full
/// posterior covariance.
pub fn fill_gaps(
    data: &TimeSeries,
    gaps: &GapSpec,
    model: &GpModel,
    truth: Option<&TimeSeries>,
    full_covariance: bool,
) -> Result<GapFillResult> {
    let times = data.times();
    let (first, last) = (times[0], times[times.len() - 1]);
    for &[start, end] in gaps.intervals() {
        if start < first || end > last {
            return Err(Error::input(
                "tasks",
                format!("gap [{start}, {end}) lies outside the data span [{first}, {last}]"),
            ));
        }
    }
    let train = data
        .filter(|_, t| gaps.locate(t).is_none())
        .ok_or_else(|| Error::input("tasks", "every sample lies inside a gap"))?;

    let mut test_times: Vec<Vec<f64>> = vec![Vec::new(); gaps.len()];
    for &t in times {
        if let Some(g) = gaps.locate(t) {
            test_times[g].push(t);
        }
    }
    if let Some(g) = test_times.iter().position(Vec::is_empty) {
        let [start, end] = gaps.intervals()[g];
        return Err(Error::input(
            "tasks",
            format!("gap [{start}, {end}) contains no samples"),
        ));
    }

    let truth_values = match truth {
        Some(truth) => Some(aligned_truth(truth, gaps, &test_times)?),
        None => None,
    };

    let posterior = model.condition(&train)?;
    let mut fills = Vec::with_capacity(gaps.len());
    for (g, times) in test_times.iter().enumerate() {
        let prediction = posterior.predict(times, full_covariance)?;
        let rms = truth_values.as_ref().map(|values| {
            let values = &values[g];
            let sq: f64 = prediction
                .mean
                .iter()
                .zip(values)
                .map(|(m, v)| (m - v) * (m - v))
                .sum();
            (sq / values.len() as f64).sqrt()
        });
        let [start, end] = gaps.intervals()[g];
        fills.push(GapFill {
            start,
            end,
            prediction,
            rms,
        });
    }
    Ok(GapFillResult { gaps: fills })
}

/// Truth values inside each gap, checked sample-for-sample against the
/// gap's test times.
fn aligned_truth(truth: &TimeSeries, gaps: &GapSpec, test_times: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); gaps.len()];
    let mut times: Vec<Vec<f64>> = vec![Vec::new(); gaps.len()];
    for (&t, &v) in truth.times().iter().zip(truth.values()) {
        if let Some(g) = gaps.locate(t) {
            times[g].push(t);
            values[g].push(v);
        }
    }
    for (g, (got, want)) in times.iter().zip(test_times).enumerate() {
        if got != want {
            let [start, end] = gaps.intervals()[g];
            return Err(Error::Alignment { start, end });
        }
    }
    Ok(values)
}
