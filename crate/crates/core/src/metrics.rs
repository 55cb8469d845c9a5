//! Reconstruction quality and convergence traces.

use std::io::Write;
use std::time::{Duration, Instant};

use crate::error::{InpaintError, Result};
use crate::image::ImageBuffer;

/// Mean squared error per channel on the 0-255 scale.
pub fn mse_per_channel(u: &ImageBuffer, f: &ImageBuffer) -> Result<Vec<f64>> {
    u.check_shape(f)?;
    Ok((0..u.channels())
        .map(|c| {
            let sum: f64 = u
                .channel(c)
                .iter()
                .zip(f.channel(c))
                .map(|(a, b)| {
                    let d = 255.0 * a - 255.0 * b;
                    d * d
                })
                .sum();
            sum / u.pixels() as f64
        })
        .collect())
}

/// Peak signal-to-noise ratio in dB, with the MSE averaged over channels.
/// Identical images give `f64::INFINITY`.
pub fn psnr(u: &ImageBuffer, f: &ImageBuffer) -> Result<f64> {
    let mse = mse_per_channel(u, f)?;
    Ok(psnr_from_mse(mse.iter().sum::<f64>() / mse.len() as f64))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0 * 255.0 / mse).log10()
    }
}

/// Least-squares slope of `ln y` against `ln x`. Needs two distinct `x`
/// values and positive data.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub time_ms: f64,
    pub rel_residual: f64,
    pub psnr: Option<f64>,
}

/// Per-iteration record of a solve: cumulative wall-clock, relative residual
/// and optionally PSNR against a reference.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceTrace {
    rows: Vec<TraceRow>,
}

impl ConvergenceTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a row. Iterations must strictly increase and time must not
    /// decrease.
    pub fn push(&mut self, row: TraceRow) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if row.iteration <= last.iteration {
                return Err(InpaintError::InvalidConfig(format!(
                    "trace iteration {} does not follow {}",
                    row.iteration, last.iteration
                )));
            }
            if row.time_ms < last.time_ms {
                return Err(InpaintError::InvalidConfig(format!(
                    "trace time {} ms precedes {} ms",
                    row.time_ms, last.time_ms
                )));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// First row at or below `tol`.
    pub fn first_below(&self, tol: f64) -> Option<&TraceRow> {
        self.rows.iter().find(|r| r.rel_residual <= tol)
    }

    /// CSV with header `iter,time_ms,rel_residual,psnr`; missing PSNR values
    /// are empty fields and exact reconstructions are written as `inf`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iter", "time_ms", "rel_residual", "psnr"])?;
        for r in &self.rows {
            w.write_record([
                r.iteration.to_string(),
                format!("{:.6}", r.time_ms),
                format!("{:.9e}", r.rel_residual),
                r.psnr.map(format_db).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Decibels with six decimals, `inf` for exact reconstructions.
pub fn format_db(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        format!("{v:.6}")
    }
}

/// Wall-clock for traces. Time spent on measurement only (PSNR evaluation)
/// is excluded through [`Stopwatch::pause`].
#[derive(Debug, Clone)]
pub struct Stopwatch {
    start: Instant,
    excluded: Duration,
}

impl Stopwatch {
    pub fn start() -> Self {
        Self {
            start: Instant::now(),
            excluded: Duration::ZERO,
        }
    }

    pub fn elapsed_ms(&self) -> f64 {
        (self.start.elapsed().saturating_sub(self.excluded)).as_secs_f64() * 1e3
    }

    /// Runs `f` without charging its time.
    pub fn pause<T>(&mut self, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.excluded += t.elapsed();
        out
    }
}

/// Builds a [`ConvergenceTrace`] for the finest level of a solve.
#[derive(Debug)]
pub struct TraceRecorder<'a> {
    clock: Stopwatch,
    r0_norm: f64,
    reference: Option<&'a ImageBuffer>,
    trace: ConvergenceTrace,
}

impl<'a> TraceRecorder<'a> {
    pub fn new(clock: Stopwatch, reference: Option<&'a ImageBuffer>) -> Self {
        Self {
            clock,
            r0_norm: 0.0,
            reference,
            trace: ConvergenceTrace::new(),
        }
    }

    pub fn set_normaliser(&mut self, r0_norm: f64) {
        self.r0_norm = r0_norm;
    }

    pub fn normaliser(&self) -> f64 {
        self.r0_norm
    }

    pub fn relative(&self, residual_norm: f64) -> f64 {
        if self.r0_norm == 0.0 {
            0.0
        } else {
            residual_norm / self.r0_norm
        }
    }

    pub fn elapsed_ms(&self) -> f64 {
        self.clock.elapsed_ms()
    }

    /// Appends a row for `iteration` and returns the relative residual. The
    /// iterate is only materialised when a reference image is attached.
    pub fn record<F>(&mut self, iteration: usize, residual_norm: f64, iterate: F) -> f64
    where
        F: FnOnce() -> ImageBuffer,
    {
        let rel = self.relative(residual_norm);
        let time_ms = self.clock.elapsed_ms();
        let psnr = match self.reference {
            Some(reference) => self.clock.pause(|| psnr(&iterate(), reference).ok()),
            None => None,
        };
        let row = TraceRow {
            iteration,
            time_ms,
            rel_residual: rel,
            psnr,
        };
        // Callers number iterations monotonically; a clash would be a bug.
        self.trace
            .push(row)
            .expect("trace rows are recorded in iteration order");
        rel
    }

    pub fn finish(self) -> ConvergenceTrace {
        self.trace
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_images_are_exact() {
        let a = ImageBuffer::filled(3, 3, 3, 0.4).unwrap();
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        assert_eq!(mse_per_channel(&a, &a).unwrap(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn one_level_offset_gives_48_db() {
        let a = ImageBuffer::filled(4, 4, 1, 0.5).unwrap();
        let b = ImageBuffer::filled(4, 4, 1, 0.5 + 1.0 / 255.0).unwrap();
        let mse = mse_per_channel(&a, &b).unwrap()[0];
        assert!((mse - 1.0).abs() < 1e-9);
        let db = psnr(&a, &b).unwrap();
        assert!((db - 10.0 * 65025f64.log10()).abs() < 1e-8);
        assert!((db - 48.13).abs() < 0.01);
    }

    #[test]
    fn black_vs_white_is_zero_db() {
        let a = ImageBuffer::filled(2, 2, 3, 0.0).unwrap();
        let b = ImageBuffer::filled(2, 2, 3, 1.0).unwrap();
        assert!(psnr(&a, &b).unwrap().abs() < 1e-12);
    }

    #[test]
    fn single_channel_offset() {
        let a = ImageBuffer::filled(2, 2, 3, 0.2).unwrap();
        let mut b = a.clone();
        b.channel_mut(1).iter_mut().for_each(|v| *v += 0.1);
        let mse = mse_per_channel(&a, &b).unwrap();
        assert_eq!(mse[0], 0.0);
        assert!((mse[1] - 25.5f64.powi(2)).abs() < 1e-9);
        assert_eq!(mse[2], 0.0);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a = ImageBuffer::filled(2, 2, 3, 0.2).unwrap();
        let b = ImageBuffer::filled(2, 2, 1, 0.2).unwrap();
        assert!(psnr(&a, &b).is_err());
    }

    #[test]
    fn trace_enforces_order_and_writes_header() {
        let mut t = ConvergenceTrace::new();
        t.push(TraceRow { iteration: 0, time_ms: 0.0, rel_residual: 1.0, psnr: None })
            .unwrap();
        t.push(TraceRow { iteration: 1, time_ms: 2.0, rel_residual: 0.1, psnr: Some(30.0) })
            .unwrap();
        assert!(t
            .push(TraceRow { iteration: 1, time_ms: 3.0, rel_residual: 0.01, psnr: None })
            .is_err());
        assert!(t
            .push(TraceRow { iteration: 2, time_ms: 1.0, rel_residual: 0.01, psnr: None })
            .is_err());
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("iter,time_ms,rel_residual,psnr"));
        assert!(lines.next().unwrap().ends_with(','));
        assert!(lines.next().unwrap().ends_with("30.000000"));
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [1.0f64, 4.0, 16.0, 64.0].iter().map(|&x| (x, 3.0 * x.powf(1.2))).collect();
        assert!((loglog_slope(&pts).unwrap() - 1.2).abs() < 1e-12);
        assert_eq!(loglog_slope(&[(2.0, 1.0), (2.0, 3.0)]), None);
        assert_eq!(loglog_slope(&[(1.0, 0.0), (2.0, 3.0)]), None);
    }

    #[test]
    fn recorder_skips_psnr_without_reference() {
        let mut rec = TraceRecorder::new(Stopwatch::start(), None);
        rec.set_normaliser(2.0);
        let rel = rec.record(0, 1.0, || unreachable!());
        assert_eq!(rel, 0.5);
        assert_eq!(rec.finish().rows()[0].psnr, None);
    }
}
