use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::kernels::check_time_grid;

/// Samples `(t_i, y_i)` with strictly increasing times in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::input(
                "gp",
                format!("{} times but {} values", times.len(), values.len()),
            ));
        }
        check_time_grid("gp", &times)?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::input("gp", format!("value {i} is not finite")));
        }
        Ok(TimeSeries { times, values })
    }

    /// Uniformly sampled series starting at `t = 0`, with `t_i = i / rate`.
    pub fn uniform(sample_rate: f64, values: Vec<f64>) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::input("gp", format!("invalid sample rate {sample_rate}")));
        }
        let times = (0..values.len()).map(|i| i as f64 / sample_rate).collect();
        TimeSeries::new(times, values)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.times, self.values)
    }

    /// Samples whose index satisfies `keep`, in order.
    pub fn filter(&self, mut keep: impl FnMut(usize, f64) -> bool) -> Option<TimeSeries> {
        let (times, values): (Vec<f64>, Vec<f64>) = self
            .times
            .iter()
            .zip(&self.values)
            .enumerate()
            .filter(|(i, (t, _))| keep(*i, **t))
            .map(|(_, (t, v))| (*t, *v))
            .unzip();
        (!times.is_empty()).then_some(TimeSeries { times, values })
    }

    /// Sample rate implied by the median spacing.
    pub fn median_sample_rate(&self) -> Option<f64> {
        let mut gaps: Vec<f64> = self.times.windows(2).map(|w| w[1] - w[0]).collect();
        if gaps.is_empty() {
            return None;
        }
        gaps.sort_by(f64::total_cmp);
        let mid = gaps.len() / 2;
        let median = if gaps.len() % 2 == 0 {
            0.5 * (gaps[mid - 1] + gaps[mid])
        } else {
            gaps[mid]
        };
        Some(1.0 / median)
    }

    /// `time,value` CSV with shortest round-trip float formatting.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "time,value")?;
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(out, "{t},{v}")?;
        }
        out.flush()
    }

    pub fn read_csv<R: Read>(input: R, origin: &Path) -> Result<Self> {
        let csv_err = |message: String| Error::Csv {
            path: origin.to_path_buf(),
            message,
        };
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let headers = reader.headers().map_err(|e| csv_err(e.to_string()))?;
        if headers.len() != 2 || &headers[0] != "time" || &headers[1] != "value" {
            return Err(csv_err(format!(
                "expected header `time,value`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|e| csv_err(e.to_string()))?;
            let parse = |field: usize| -> Result<f64> {
                record[field].trim().parse::<f64>().map_err(|e| {
                    csv_err(format!("line {}: column {}: {e}", row + 2, field + 1))
                })
            };
            times.push(parse(0)?);
            values.push(parse(1)?);
        }
        TimeSeries::new(times, values).map_err(|e| csv_err(e.to_string()))
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        TimeSeries::read_csv(std::io::BufReader::new(file), path)
    }
}
