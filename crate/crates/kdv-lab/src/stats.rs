//! Single-pass moments and per-time ensemble summaries.

use serde::Serialize;

/// Running mean and sum of squared deviations (Welford), mergeable by the
/// pairwise update of Chan, Golub and LeVeque.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Welford {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, o: &Welford) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        let (na, nb) = (self.n as f64, o.n as f64);
        self.mean += d * nb / n as f64;
        self.m2 += o.m2 + d * d * na * nb / n as f64;
        self.n = n;
    }

    /// Unbiased sample variance; zero below two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    pub fn se(&self) -> f64 {
        if self.n == 0 {
            return f64::NAN;
        }
        (self.variance() / self.n as f64).sqrt()
    }

    pub fn moments(&self) -> Moments {
        Moments { mean: self.mean, var: self.variance(), se: self.se(), n: self.n }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub var: f64,
    pub se: f64,
    pub n: u64,
}

/// One accumulator per (observable, record time).
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesAccumulator {
    pub times: Vec<f64>,
    pub names: Vec<String>,
    cells: Vec<Welford>,
}

impl SeriesAccumulator {
    pub fn new(times: Vec<f64>, names: Vec<String>) -> Self {
        let cells = vec![Welford::default(); times.len() * names.len()];
        SeriesAccumulator { times, names, cells }
    }

    /// Add one path; `rows[j][k]` is observable k at time j.
    pub fn push_path(&mut self, rows: &[Vec<f64>]) {
        let m = self.names.len();
        for (j, row) in rows.iter().enumerate().take(self.times.len()) {
            for (k, &x) in row.iter().enumerate().take(m) {
                self.cells[j * m + k].push(x);
            }
        }
    }

    pub fn merge(&mut self, o: &SeriesAccumulator) {
        for (a, b) in self.cells.iter_mut().zip(&o.cells) {
            a.merge(b);
        }
    }

    pub fn summary(&self, paths: u64, excluded: usize) -> EnsembleSummary {
        let m = self.names.len();
        let series = (0..m)
            .map(|k| (0..self.times.len()).map(|j| self.cells[j * m + k].moments()).collect())
            .collect();
        EnsembleSummary { times: self.times.clone(), names: self.names.clone(), series, paths, excluded }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleSummary {
    pub times: Vec<f64>,
    pub names: Vec<String>,
    /// `series[k][j]`: observable k at time j.
    pub series: Vec<Vec<Moments>>,
    pub paths: u64,
    pub excluded: usize,
}

impl EnsembleSummary {
    pub fn get(&self, name: &str) -> Option<&[Moments]> {
        self.names.iter().position(|n| n == name).map(|k| self.series[k].as_slice())
    }

    /// Moments of `name` at the record time closest to `t`.
    pub fn at(&self, name: &str, t: f64) -> Option<Moments> {
        let j = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))?
            .0;
        self.get(name).map(|s| s[j])
    }

    pub fn last(&self, name: &str) -> Option<Moments> {
        self.get(name).and_then(|s| s.last().copied())
    }
}
