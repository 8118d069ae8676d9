use std::io::Write;

use faer::Mat;

/// Posterior over the noise-free function at a set of test times.
#[derive(Debug, Clone)]
pub struct PosteriorPrediction {
    pub test_times: Vec<f64>,
    pub mean: Vec<f64>,
    /// Non-negative marginal variances; add the noise variance to obtain
    /// predictive intervals for observations.
    pub variance: Vec<f64>,
    /// Full posterior covariance, whose diagonal equals `variance`.
    pub covariance: Option<Mat<f64>>,
}

impl PosteriorPrediction {
    pub fn len(&self) -> usize {
        self.test_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.test_times.is_empty()
    }

    /// `time,mean,variance` CSV.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "time,mean,variance")?;
        for ((t, m), v) in self.test_times.iter().zip(&self.mean).zip(&self.variance) {
            writeln!(out, "{t},{m},{v}")?;
        }
        out.flush()
    }

    /// Row-major covariance CSV without a header, or `None` when the
    /// covariance was not requested.
    pub fn write_covariance_csv<W: Write>(&self, mut out: W) -> Option<std::io::Result<()>> {
        let cov = self.covariance.as_ref()?;
        let mut write = || -> std::io::Result<()> {
            for i in 0..cov.nrows() {
                let row: Vec<String> = (0..cov.ncols()).map(|j| cov[(i, j)].to_string()).collect();
                writeln!(out, "{}", row.join(","))?;
            }
            out.flush()
        };
        Some(write())
    }
}

/// `time,sample_1,...,sample_n` CSV of prior draws; `samples[s][i]` is
/// draw `s` at `times[i]`.
pub fn write_samples_csv<W: Write>(mut out: W, times: &[f64], samples: &[Vec<f64>]) -> std::io::Result<()> {
    let header: Vec<String> = (1..=samples.len()).map(|s| format!("sample_{s}")).collect();
    writeln!(out, "time,{}", header.join(","))?;
    for (i, t) in times.iter().enumerate() {
        write!(out, "{t}")?;
        for draw in samples {
            write!(out, ",{}", draw[i])?;
        }
        writeln!(out)?;
    }
    out.flush()
}
