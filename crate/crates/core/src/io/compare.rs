//! Side-by-side comparison of finished runs.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::charts::{box_plot, line_chart, Series};
use super::output::{read_packets, Manifest, PacketSummary, PACKETS_CSV};
use crate::engine::{nanos_to_secs, PacketStatus};
use crate::error::{Error, Result};

pub const COMPARISON_CSV: &str = "comparison.csv";
pub const COMPARISON_SVG: &str = "comparison.svg";
pub const COMPARISON_BOX_SVG: &str = "comparison_boxplot.svg";
pub const COMPARISON_HEADER: &str = "run,bin_start_s,mean_e2e_s,delivered,diff_vs_first_s";

#[derive(Debug, Clone)]
pub struct RunSeries {
    pub label: String,
    pub dir: PathBuf,
    pub summary: PacketSummary,
    /// Mean E2E per shared bin, `None` where the run delivered nothing.
    pub bins: Vec<Option<(f64, u64)>>,
    pub latencies: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub bin_width: f64,
    pub bin_starts: Vec<f64>,
    pub runs: Vec<RunSeries>,
}

impl Comparison {
    /// Largest absolute per-bin difference of mean E2E between run `i` and the first run.
    pub fn max_abs_diff(&self, i: usize) -> f64 {
        let base = &self.runs[0].bins;
        self.runs[i]
            .bins
            .iter()
            .zip(base)
            .filter_map(|(a, b)| Some((a.as_ref()?.0 - b.as_ref()?.0).abs()))
            .fold(0.0, f64::max)
    }
}

fn label_for(dir: &Path, policy: &str, used: &mut BTreeMap<String, usize>) -> String {
    let base = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| policy.to_string());
    let n = used.entry(base.clone()).or_insert(0);
    *n += 1;
    if *n == 1 {
        base
    } else {
        format!("{base}#{n}")
    }
}

/// Loads the runs, refusing when their scenario fingerprints differ.
pub fn compare_runs(dirs: &[PathBuf], bin_width: Option<f64>) -> Result<Comparison> {
    if dirs.is_empty() {
        return Err(Error::Analysis("no runs to compare".into()));
    }
    let manifests: Vec<Manifest> = dirs.iter().map(|d| Manifest::load(d)).collect::<Result<_>>()?;
    let reference = &manifests[0].fingerprint;
    for (d, m) in dirs.iter().zip(&manifests).skip(1) {
        let diff = reference.diff(&m.fingerprint);
        if !diff.is_empty() {
            return Err(Error::Incompatible(format!(
                "{} differs from {}: {}",
                d.display(),
                dirs[0].display(),
                diff.join(", ")
            )));
        }
    }
    let width = match bin_width {
        Some(w) if w > 0.0 => w,
        Some(_) => return Err(Error::Analysis("bin width must be positive".into())),
        None => (reference.duration_s / 60.0).max(1e-3),
    };
    let nbins = ((reference.duration_s / width).ceil() as usize).max(1);
    let mut used = BTreeMap::new();
    let mut runs = Vec::new();
    for (d, m) in dirs.iter().zip(&manifests) {
        let rows = read_packets(&d.join(PACKETS_CSV))?;
        let mut acc = vec![(0.0f64, 0u64); nbins];
        let mut latencies = Vec::new();
        for r in rows.iter().filter(|r| r.status == PacketStatus::Delivered) {
            let e2e = nanos_to_secs(r.e2e().unwrap_or(0));
            let k = ((nanos_to_secs(r.created_at) / width) as usize).min(nbins - 1);
            acc[k].0 += e2e;
            acc[k].1 += 1;
            latencies.push(e2e);
        }
        runs.push(RunSeries {
            label: label_for(d, &m.policy, &mut used),
            dir: d.clone(),
            summary: PacketSummary::from_rows(&rows),
            bins: acc
                .into_iter()
                .map(|(s, n)| (n > 0).then(|| (s / n as f64, n)))
                .collect(),
            latencies,
        });
    }
    Ok(Comparison {
        bin_width: width,
        bin_starts: (0..nbins).map(|k| k as f64 * width).collect(),
        runs,
    })
}

pub fn write_comparison(cmp: &Comparison, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let csv_path = out_dir.join(COMPARISON_CSV);
    let mut w = std::io::BufWriter::new(std::fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?);
    let io = |e| Error::io(&csv_path, e);
    writeln!(w, "{COMPARISON_HEADER}").map_err(io)?;
    let base = &cmp.runs[0].bins;
    for run in &cmp.runs {
        for ((start, bin), b0) in cmp.bin_starts.iter().zip(&run.bins).zip(base) {
            let (mean, n) = match bin {
                Some((m, n)) => (m.to_string(), *n),
                None => (String::new(), 0),
            };
            let diff = match (bin, b0) {
                (Some((a, _)), Some((b, _))) => (a - b).to_string(),
                _ => String::new(),
            };
            writeln!(w, "{},{start},{mean},{n},{diff}", run.label).map_err(io)?;
        }
    }
    w.flush().map_err(io)?;

    let series: Vec<Series> = cmp
        .runs
        .iter()
        .map(|r| Series {
            name: r.label.clone(),
            points: cmp
                .bin_starts
                .iter()
                .zip(&r.bins)
                .filter_map(|(t, b)| b.map(|(m, _)| (*t, m)))
                .collect(),
        })
        .collect();
    let svg_path = out_dir.join(COMPARISON_SVG);
    std::fs::write(
        &svg_path,
        line_chart("Mean E2E latency by run", "creation time (s)", "latency (s)", &series),
    )
    .map_err(|e| Error::io(&svg_path, e))?;
    let groups: Vec<(String, Vec<f64>)> = cmp
        .runs
        .iter()
        .map(|r| (r.label.clone(), r.latencies.clone()))
        .collect();
    let box_path = out_dir.join(COMPARISON_BOX_SVG);
    std::fs::write(&box_path, box_plot("E2E latency by run", "latency (s)", &groups))
        .map_err(|e| Error::io(&box_path, e))?;
    Ok(vec![csv_path, svg_path, box_path])
}
