//! Learning-curve post-processing: min/max normalization, trailing rolling
//! statistics, CSV output and a small SVG renderer.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use log::warn;

pub const DEFAULT_WINDOW: usize = 1000;

/// Affine rescale of `values` so that `min` maps to 0 and `max` to 1. A
/// degenerate range maps everything to 0.5.
pub fn normalize_with(values: &[f64], min: f64, max: f64) -> Vec<f64> {
    if max > min {
        values.iter().map(|v| (v - min) / (max - min)).collect()
    } else {
        vec![0.5; values.len()]
    }
}

pub fn min_max<'a>(values: impl IntoIterator<Item = &'a f64>) -> Option<(f64, f64)> {
    values.into_iter().fold(None, |acc, &v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

/// Normalizes a series by its own min and max.
pub fn normalize(values: &[f64]) -> Vec<f64> {
    match min_max(values) {
        Some((lo, hi)) => {
            if lo == hi {
                warn!("constant series ({lo}); normalizing to 0.5");
            }
            normalize_with(values, lo, hi)
        }
        None => Vec::new(),
    }
}

/// Trailing rolling mean and population standard deviation. The first
/// `window - 1` points use the shorter prefix that is available.
pub fn rolling(values: &[f64], window: usize) -> (Vec<f64>, Vec<f64>) {
    let window = window.max(1);
    let mut means = Vec::with_capacity(values.len());
    let mut stds = Vec::with_capacity(values.len());
    // Recomputing the window sum from scratch every `window` points keeps
    // floating-point drift of the running sums bounded.
    let (mut sum, mut sq) = (0.0, 0.0);
    for (i, &v) in values.iter().enumerate() {
        sum += v;
        sq += v * v;
        if i >= window {
            let old = values[i - window];
            sum -= old;
            sq -= old * old;
        }
        if i % window == window - 1 {
            let lo = (i + 1).saturating_sub(window);
            sum = values[lo..=i].iter().sum();
            sq = values[lo..=i].iter().map(|x| x * x).sum();
        }
        let n = (i + 1).min(window) as f64;
        let mean = sum / n;
        means.push(mean);
        stds.push((sq / n - mean * mean).max(0.0).sqrt());
    }
    (means, stds)
}

pub fn smooth(values: &[f64], window: usize) -> Vec<f64> {
    rolling(values, window).0
}

/// Curves of one seed of one method.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve {
    pub seed: u64,
    /// `raw[agent][episode]`, undiscounted episode returns.
    pub raw: Vec<Vec<f64>>,
    pub normalized: Vec<Vec<f64>>,
    pub smoothed: Vec<Vec<f64>>,
    pub rolling_std: Vec<Vec<f64>>,
    /// Agent-averaged normalized return and its rolling statistics.
    pub mean_normalized: Vec<f64>,
    pub mean_smoothed: Vec<f64>,
    pub mean_rolling_std: Vec<f64>,
}

impl LearningCurve {
    pub fn episodes(&self) -> usize {
        self.mean_normalized.len()
    }

    /// Agent-averaged raw return per episode.
    pub fn mean_raw(&self) -> Vec<f64> {
        let n = self.raw.len().max(1) as f64;
        (0..self.episodes())
            .map(|e| self.raw.iter().map(|r| r[e]).sum::<f64>() / n)
            .collect()
    }
}

/// Normalizes every seed's returns against the min and max over all seeds and
/// agents of one method, then smooths.
pub fn build_curves(runs: Vec<(u64, Vec<Vec<f64>>)>, window: usize) -> Vec<LearningCurve> {
    let bounds = min_max(runs.iter().flat_map(|(_, r)| r.iter().flatten()));
    if let Some((lo, hi)) = bounds {
        if lo == hi {
            warn!("all returns equal ({lo}); normalizing to 0.5");
        }
    }
    let (lo, hi) = bounds.unwrap_or((0.0, 0.0));
    runs.into_iter()
        .map(|(seed, raw)| {
            let normalized: Vec<Vec<f64>> = raw.iter().map(|r| normalize_with(r, lo, hi)).collect();
            let (smoothed, rolling_std) = normalized.iter().map(|n| rolling(n, window)).unzip();
            let episodes = raw.first().map_or(0, Vec::len);
            let agents = normalized.len().max(1) as f64;
            let mean_normalized: Vec<f64> = (0..episodes)
                .map(|e| normalized.iter().map(|n| n[e]).sum::<f64>() / agents)
                .collect();
            let (mean_smoothed, mean_rolling_std) = rolling(&mean_normalized, window);
            LearningCurve {
                seed,
                raw,
                normalized,
                smoothed,
                rolling_std,
                mean_normalized,
                mean_smoothed,
                mean_rolling_std,
            }
        })
        .collect()
}

/// Cross-seed summary of one method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    /// Mean over seeds of the last smoothed, agent-averaged normalized return.
    pub final_smoothed: f64,
    /// Mean over seeds of the agent-averaged raw return over the final window.
    pub final_raw: f64,
    /// Mean over seeds of the rolling std averaged over the last quarter of training.
    pub final_quartile_std: f64,
}

pub fn summarize(curves: &[LearningCurve], window: usize) -> Option<Summary> {
    let usable: Vec<&LearningCurve> = curves.iter().filter(|c| c.episodes() > 0).collect();
    if usable.is_empty() {
        return None;
    }
    let n = usable.len() as f64;
    let mut s = Summary { final_smoothed: 0.0, final_raw: 0.0, final_quartile_std: 0.0 };
    for c in usable {
        let e = c.episodes();
        s.final_smoothed += c.mean_smoothed[e - 1] / n;
        let raw = c.mean_raw();
        let tail = &raw[e.saturating_sub(window.max(1))..];
        s.final_raw += tail.iter().sum::<f64>() / tail.len() as f64 / n;
        let q = &c.mean_rolling_std[e - e.div_ceil(4)..];
        s.final_quartile_std += q.iter().sum::<f64>() / q.len() as f64 / n;
    }
    Some(s)
}

pub const CSV_HEADER: &str = "episode,seed,agent,raw_return,normalized,smoothed,rolling_std";

/// Writes per-agent rows followed by an agent-averaged `mean` row for every
/// `every`-th episode (and always the last one).
pub fn write_csv<W: Write>(mut w: W, curves: &[LearningCurve], every: usize) -> io::Result<()> {
    let every = every.max(1);
    writeln!(w, "{CSV_HEADER}")?;
    for c in curves {
        let e = c.episodes();
        let raw_mean = c.mean_raw();
        for ep in (0..e).filter(|ep| ep % every == 0 || ep + 1 == e) {
            for a in 0..c.raw.len() {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    ep, c.seed, a, c.raw[a][ep], c.normalized[a][ep], c.smoothed[a][ep], c.rolling_std[a][ep]
                )?;
            }
            writeln!(
                w,
                "{},{},mean,{},{},{},{}",
                ep, c.seed, raw_mean[ep], c.mean_normalized[ep], c.mean_smoothed[ep], c.mean_rolling_std[ep]
            )?;
        }
    }
    Ok(())
}

/// One `mean` row of a curve CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanRow {
    pub episode: usize,
    pub seed: u64,
    pub smoothed: f64,
    pub rolling_std: f64,
}

pub fn read_mean_rows<R: BufRead>(r: R) -> Result<Vec<MeanRow>, String> {
    let mut rows = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if i == 0 {
            if line.trim() != CSV_HEADER {
                return Err(format!("line 1: expected header '{CSV_HEADER}'"));
            }
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(format!("line {}: expected 7 fields, got {}", i + 1, f.len()));
        }
        if f[2] != "mean" {
            continue;
        }
        let bad = |what: &str| format!("line {}: bad {what}", i + 1);
        rows.push(MeanRow {
            episode: f[0].parse().map_err(|_| bad("episode"))?,
            seed: f[1].parse().map_err(|_| bad("seed"))?,
            smoothed: f[5].parse().map_err(|_| bad("smoothed"))?,
            rolling_std: f[6].parse().map_err(|_| bad("rolling_std"))?,
        });
    }
    Ok(rows)
}

/// Renders the seed-averaged smoothed curve with a ±1 rolling std band.
pub fn render_svg(rows: &[MeanRow], title: &str) -> String {
    use std::collections::BTreeMap;
    let mut by_ep: BTreeMap<usize, (f64, f64, usize)> = BTreeMap::new();
    for r in rows {
        let e = by_ep.entry(r.episode).or_insert((0.0, 0.0, 0));
        e.0 += r.smoothed;
        e.1 += r.rolling_std;
        e.2 += 1;
    }
    let pts: Vec<(f64, f64, f64)> = by_ep
        .into_iter()
        .map(|(ep, (m, s, n))| (ep as f64, m / n as f64, s / n as f64))
        .collect();

    let (w, h, pad) = (640.0, 400.0, 50.0);
    let max_x = pts.last().map_or(1.0, |p| p.0.max(1.0));
    let sx = |x: f64| pad + x / max_x * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - y.clamp(-0.1, 1.1) * (h - 2.0 * pad);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="25" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        svg,
        r#"<path d="M{pad} {top} L{pad} {bot} L{right} {bot}" stroke="black" fill="none"/>"#,
        top = pad,
        bot = h - pad,
        right = w - pad
    );
    for tick in [0.0, 0.5, 1.0] {
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">{tick}</text>"#, pad - 5.0, sy(tick) + 4.0);
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#, w - pad, h - pad + 18.0, max_x);

    if !pts.is_empty() {
        let mut band = String::new();
        for (i, (x, m, s)) in pts.iter().enumerate() {
            let _ = write!(band, "{}{:.2} {:.2} ", if i == 0 { "M" } else { "L" }, sx(*x), sy(m + s));
        }
        for (x, m, s) in pts.iter().rev() {
            let _ = write!(band, "L{:.2} {:.2} ", sx(*x), sy(m - s));
        }
        let _ = writeln!(svg, r#"<path d="{}Z" fill="steelblue" fill-opacity="0.25" stroke="none"/>"#, band);
        let line: Vec<String> = pts.iter().map(|(x, m, _)| format!("{:.2},{:.2}", sx(*x), sy(*m))).collect();
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="1.5"/>"#, line.join(" "));
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
