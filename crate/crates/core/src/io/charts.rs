//! Static SVG charts rendered from run artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::output::{for_each_packet, EPSILON_CSV, LINK_USAGE_CSV, NODES_CSV, PACKETS_CSV, REWARDS_CSV};
use crate::engine::{nanos_to_secs, PacketStatus};
use crate::error::{Error, Result};

pub const MAP_SVG: &str = "map.svg";
pub const CONGESTION_SVG: &str = "congestion.svg";
pub const REWARDS_SVG: &str = "rewards.svg";
pub const LATENCY_EPSILON_SVG: &str = "latency_epsilon.svg";
pub const LATENCY_TIME_SVG: &str = "latency_time.svg";
pub const BOXPLOT_SVG: &str = "latency_boxplot.svg";

const W: f64 = 720.0;
const H: f64 = 420.0;
const ML: f64 = 70.0;
const MR: f64 = 70.0;
const MT: f64 = 40.0;
const MB: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Svg(String);

impl Svg {
    fn new(title: &str) -> Self {
        let mut s = String::new();
        write!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
        )
        .unwrap();
        write!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
        write!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            W / 2.0,
            esc(title)
        )
        .unwrap();
        Svg(s)
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, body: &str) {
        write!(
            self.0,
            r#"<text x="{x:.1}" y="{y:.1}" text-anchor="{anchor}">{}</text>"#,
            esc(body)
        )
        .unwrap();
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, width: f64) {
        write!(
            self.0,
            r#"<line x1="{x1:.1}" y1="{y1:.1}" x2="{x2:.1}" y2="{y2:.1}" stroke="{stroke}" stroke-width="{width:.2}"/>"#
        )
        .unwrap();
    }

    fn circle(&mut self, x: f64, y: f64, r: f64, fill: &str) {
        write!(self.0, r#"<circle cx="{x:.1}" cy="{y:.1}" r="{r}" fill="{fill}"/>"#).unwrap();
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, stroke: &str) {
        write!(
            self.0,
            r#"<rect x="{x:.1}" y="{y:.1}" width="{w:.1}" height="{h:.1}" fill="{fill}" stroke="{stroke}"/>"#
        )
        .unwrap();
    }

    fn polyline(&mut self, pts: &[(f64, f64)], stroke: &str) {
        let p: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
        write!(
            self.0,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="1.5"/>"#,
            p.join(" ")
        )
        .unwrap();
    }

    fn no_data(&mut self) {
        self.text(W / 2.0, H / 2.0, "middle", "no data");
    }

    fn finish(mut self) -> String {
        self.0.push_str("</svg>\n");
        self.0
    }
}

/// Linear mapping from data range to pixel range.
#[derive(Clone, Copy)]
struct Scale {
    d0: f64,
    d1: f64,
    p0: f64,
    p1: f64,
}

impl Scale {
    fn new(lo: f64, hi: f64, p0: f64, p1: f64) -> Self {
        let (d0, d1) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        Scale { d0, d1, p0, p1 }
    }

    fn map(&self, v: f64) -> f64 {
        self.p0 + (v - self.d0) / (self.d1 - self.d0) * (self.p1 - self.p0)
    }
}

fn bounds(vals: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    vals.filter(|v| v.is_finite()).fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

fn axes(svg: &mut Svg, xs: Scale, ys: Scale, x_label: &str, y_label: &str) {
    let (x0, x1, y0, y1) = (ML, W - MR, H - MB, MT);
    svg.line(x0, y0, x1, y0, "black", 1.0);
    svg.line(x0, y0, x0, y1, "black", 1.0);
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = xs.d0 + f * (xs.d1 - xs.d0);
        let yv = ys.d0 + f * (ys.d1 - ys.d0);
        let (px, py) = (xs.map(xv), ys.map(yv));
        svg.line(px, y0, px, y0 + 4.0, "black", 1.0);
        svg.text(px, y0 + 16.0, "middle", &fmt_tick(xv));
        svg.line(x0 - 4.0, py, x0, py, "black", 1.0);
        svg.text(x0 - 6.0, py + 4.0, "end", &fmt_tick(yv));
    }
    svg.text((x0 + x1) / 2.0, H - 12.0, "middle", x_label);
    write!(
        svg.0,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        esc(y_label)
    )
    .unwrap();
}

fn fmt_tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-2..1e4).contains(&a) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

/// One named series of (x, y) points.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

fn legend(svg: &mut Svg, names: &[&str]) {
    for (i, n) in names.iter().enumerate() {
        let y = MT + 6.0 + 14.0 * i as f64;
        svg.rect(W - MR - 150.0, y - 8.0, 10.0, 10.0, PALETTE[i % PALETTE.len()], "none");
        svg.text(W - MR - 135.0, y + 1.0, "start", n);
    }
}

pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let mut svg = Svg::new(title);
    let all = || series.iter().flat_map(|s| s.points.iter());
    let (Some(xb), Some(yb)) = (bounds(all().map(|p| p.0)), bounds(all().map(|p| p.1))) else {
        svg.no_data();
        return svg.finish();
    };
    let xs = Scale::new(xb.0, xb.1, ML, W - MR);
    let ys = Scale::new(yb.0.min(0.0), yb.1, H - MB, MT);
    axes(&mut svg, xs, ys, x_label, y_label);
    for (i, s) in series.iter().enumerate() {
        let pts: Vec<(f64, f64)> = s.points.iter().map(|&(x, y)| (xs.map(x), ys.map(y))).collect();
        let c = PALETTE[i % PALETTE.len()];
        if pts.len() == 1 {
            svg.circle(pts[0].0, pts[0].1, 3.0, c);
        } else {
            svg.polyline(&pts, c);
        }
    }
    legend(&mut svg, &series.iter().map(|s| s.name.as_str()).collect::<Vec<_>>());
    svg.finish()
}

pub fn scatter_chart(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)]) -> String {
    let mut svg = Svg::new(title);
    let (Some(xb), Some(yb)) = (bounds(points.iter().map(|p| p.0)), bounds(points.iter().map(|p| p.1))) else {
        svg.no_data();
        return svg.finish();
    };
    let xs = Scale::new(xb.0, xb.1, ML, W - MR);
    let ys = Scale::new(yb.0, yb.1, H - MB, MT);
    axes(&mut svg, xs, ys, x_label, y_label);
    // thin very dense clouds so files stay small
    let stride = (points.len() / 20_000).max(1);
    for &(x, y) in points.iter().step_by(stride) {
        svg.circle(xs.map(x), ys.map(y), 1.2, PALETTE[0]);
    }
    svg.finish()
}

/// Latency series on the left axis and ε on the right axis.
pub fn dual_axis_chart(title: &str, latency: &Series, epsilon: &Series) -> String {
    let mut svg = Svg::new(title);
    let Some(xb) = bounds(latency.points.iter().chain(&epsilon.points).map(|p| p.0)) else {
        svg.no_data();
        return svg.finish();
    };
    let xs = Scale::new(xb.0, xb.1, ML, W - MR);
    let yb = bounds(latency.points.iter().map(|p| p.1)).unwrap_or((0.0, 1.0));
    let ys = Scale::new(0.0, yb.1, H - MB, MT);
    axes(&mut svg, xs, ys, "simulation time (s)", "mean E2E latency (s)");
    let es = Scale::new(0.0, 1.0, H - MB, MT);
    svg.line(W - MR, H - MB, W - MR, MT, "black", 1.0);
    for i in 0..=4 {
        let v = i as f64 / 4.0;
        svg.text(W - MR + 6.0, es.map(v) + 4.0, "start", &format!("{v:.2}"));
    }
    write!(
        svg.0,
        r#"<text x="{x:.1}" y="{y:.1}" text-anchor="middle" transform="rotate(90 {x:.1} {y:.1})">epsilon</text>"#,
        x = W - 20.0,
        y = (H - MB + MT) / 2.0
    )
    .unwrap();
    let lp: Vec<(f64, f64)> = latency.points.iter().map(|&(x, y)| (xs.map(x), ys.map(y))).collect();
    let ep: Vec<(f64, f64)> = epsilon.points.iter().map(|&(x, y)| (xs.map(x), es.map(y))).collect();
    if !lp.is_empty() {
        svg.polyline(&lp, PALETTE[0]);
    }
    if !ep.is_empty() {
        svg.polyline(&ep, PALETTE[1]);
    }
    legend(&mut svg, &["latency", "epsilon"]);
    svg.finish()
}

/// Five-number summary with linear-interpolated quartiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub n: usize,
}

pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl BoxStats {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(BoxStats {
            min: v[0],
            q1: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q3: quantile(&v, 0.75),
            max: v[v.len() - 1],
            n: v.len(),
        })
    }
}

pub fn box_plot(title: &str, y_label: &str, groups: &[(String, Vec<f64>)]) -> String {
    let mut svg = Svg::new(title);
    let stats: Vec<(String, Option<BoxStats>)> = groups
        .iter()
        .map(|(n, v)| (n.clone(), BoxStats::from_values(v)))
        .collect();
    let Some(yb) = bounds(stats.iter().filter_map(|(_, s)| *s).flat_map(|s| [s.min, s.max])) else {
        svg.no_data();
        return svg.finish();
    };
    let xs = Scale::new(0.0, stats.len() as f64, ML, W - MR);
    let ys = Scale::new(yb.0.min(0.0), yb.1, H - MB, MT);
    let (x0, y0) = (ML, H - MB);
    svg.line(x0, y0, W - MR, y0, "black", 1.0);
    svg.line(x0, y0, x0, MT, "black", 1.0);
    for i in 0..=4 {
        let v = ys.d0 + i as f64 / 4.0 * (ys.d1 - ys.d0);
        svg.text(x0 - 6.0, ys.map(v) + 4.0, "end", &fmt_tick(v));
    }
    svg.text(18.0, MT - 10.0, "start", y_label);
    for (i, (name, s)) in stats.iter().enumerate() {
        let cx = xs.map(i as f64 + 0.5);
        svg.text(cx, y0 + 16.0, "middle", name);
        let Some(s) = s else {
            svg.text(cx, (y0 + MT) / 2.0, "middle", "no data");
            continue;
        };
        let c = PALETTE[i % PALETTE.len()];
        let half = ((W - ML - MR) / stats.len() as f64 * 0.3).min(40.0);
        svg.line(cx, ys.map(s.min), cx, ys.map(s.q1), "black", 1.0);
        svg.line(cx, ys.map(s.q3), cx, ys.map(s.max), "black", 1.0);
        let top = ys.map(s.q3);
        svg.rect(cx - half, top, 2.0 * half, (ys.map(s.q1) - top).max(0.5), c, "black");
        svg.line(cx - half, ys.map(s.median), cx + half, ys.map(s.median), "black", 2.0);
        svg.line(
            cx - half / 2.0,
            ys.map(s.min),
            cx + half / 2.0,
            ys.map(s.min),
            "black",
            1.0,
        );
        svg.line(
            cx - half / 2.0,
            ys.map(s.max),
            cx + half / 2.0,
            ys.map(s.max),
            "black",
            1.0,
        );
    }
    svg.finish()
}

/// Square matrix with values in [0, 1] drawn as a grayscale grid.
pub fn heatmap(title: &str, matrix: &[Vec<f64>]) -> String {
    let mut svg = Svg::new(title);
    let n = matrix.len();
    if n == 0 {
        svg.no_data();
        return svg.finish();
    }
    let side = (H - MT - MB).min(W - ML - MR);
    let cell = side / n as f64;
    let x0 = (W - side) / 2.0;
    for (i, row) in matrix.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let g = (255.0 * (1.0 - v.clamp(0.0, 1.0))) as u8;
            svg.rect(
                x0 + j as f64 * cell,
                MT + i as f64 * cell,
                cell,
                cell,
                &format!("#{g:02x}{g:02x}{g:02x}"),
                "none",
            );
        }
    }
    svg.rect(x0, MT, side, side, "none", "black");
    svg.text(x0 + side + 8.0, MT + 10.0, "start", "1 = black");
    svg.text(x0 + side + 8.0, MT + 24.0, "start", "0 = white");
    svg.text(W / 2.0, H - 14.0, "middle", "agent index");
    svg.finish()
}

#[derive(Debug, Clone, Deserialize)]
struct NodeRow {
    node: usize,
    kind: String,
    latitude_deg: f64,
    longitude_deg: f64,
}

#[derive(Debug, Clone, Deserialize)]
struct UsageRow {
    node_a: usize,
    node_b: usize,
    #[allow(dead_code)]
    kind: String,
    packets: u64,
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    if !path.exists() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

fn read_nodes(run_dir: &Path) -> Result<Vec<NodeRow>> {
    let mut nodes: Vec<NodeRow> = read_csv(&run_dir.join(NODES_CSV))?;
    nodes.sort_by_key(|n| n.node);
    if nodes.iter().enumerate().any(|(i, n)| n.node != i) {
        return Err(Error::Analysis(format!("{NODES_CSV}: node ids are not contiguous")));
    }
    Ok(nodes)
}

fn map_frame(title: &str) -> (Svg, Scale, Scale) {
    let mut svg = Svg::new(title);
    let xs = Scale::new(-180.0, 180.0, ML, W - MR);
    let ys = Scale::new(-90.0, 90.0, H - MB, MT);
    svg.rect(ML, MT, W - ML - MR, H - MT - MB, "#eef4fb", "black");
    for lon in [-120.0, -60.0, 0.0, 60.0, 120.0] {
        svg.line(xs.map(lon), MT, xs.map(lon), H - MB, "#c8d4e0", 0.5);
        svg.text(xs.map(lon), H - MB + 14.0, "middle", &format!("{lon}"));
    }
    for lat in [-60.0, -30.0, 0.0, 30.0, 60.0] {
        svg.line(ML, ys.map(lat), W - MR, ys.map(lat), "#c8d4e0", 0.5);
        svg.text(ML - 6.0, ys.map(lat) + 4.0, "end", &format!("{lat}"));
    }
    svg.text(W / 2.0, H - 12.0, "middle", "longitude (deg)");
    (svg, xs, ys)
}

fn draw_link(svg: &mut Svg, xs: Scale, ys: Scale, a: &NodeRow, b: &NodeRow, color: &str, width: f64) {
    // links crossing the antimeridian would smear across the map
    if (a.longitude_deg - b.longitude_deg).abs() > 180.0 {
        return;
    }
    svg.line(
        xs.map(a.longitude_deg),
        ys.map(a.latitude_deg),
        xs.map(b.longitude_deg),
        ys.map(b.latitude_deg),
        color,
        width,
    );
}

#[derive(Debug, Clone, Deserialize)]
struct EdgeRow {
    epoch: f64,
    node_a: usize,
    node_b: usize,
    kind: String,
}

/// Satellites, links and gateways at the first recorded epoch.
pub fn render_map(run_dir: &Path) -> Result<String> {
    let nodes = read_nodes(run_dir)?;
    let edges: Vec<EdgeRow> = read_csv(&run_dir.join(super::output::EDGES_CSV)).unwrap_or_default();
    let (mut svg, xs, ys) = map_frame("Constellation ground track");
    let first = edges.first().map(|e| e.epoch);
    for e in edges.iter().filter(|e| Some(e.epoch) == first) {
        let color = match e.kind.as_str() {
            "isl_intra" => "#5b8bd0",
            "isl_inter" => "#e08a2e",
            _ => "#2a9d4a",
        };
        if let (Some(a), Some(b)) = (nodes.get(e.node_a), nodes.get(e.node_b)) {
            draw_link(&mut svg, xs, ys, a, b, color, 0.8);
        }
    }
    for n in &nodes {
        let (x, y) = (xs.map(n.longitude_deg), ys.map(n.latitude_deg));
        if n.kind == "gateway" {
            svg.rect(x - 4.0, y - 4.0, 8.0, 8.0, "#d62728", "black");
        } else {
            svg.circle(x, y, 2.2, "#1f3b73");
        }
    }
    Ok(svg.finish())
}

/// Per-link packet counts drawn over the first-epoch node positions.
/// Returns the SVG and the total number of link traversals.
pub fn render_congestion(run_dir: &Path) -> Result<(String, u64)> {
    let nodes = read_nodes(run_dir)?;
    let usage: Vec<UsageRow> = read_csv(&run_dir.join(LINK_USAGE_CSV))?;
    let total: u64 = usage.iter().map(|u| u.packets).sum();
    let (mut svg, xs, ys) = map_frame(&format!("Link usage ({total} traversals)"));
    if usage.is_empty() {
        svg.no_data();
        return Ok((svg.finish(), 0));
    }
    let max = usage.iter().map(|u| u.packets).max().unwrap_or(1).max(1) as f64;
    let mut sorted: Vec<&UsageRow> = usage.iter().collect();
    sorted.sort_by_key(|u| u.packets);
    for u in sorted {
        let f = u.packets as f64 / max;
        let r = (255.0 * f) as u8;
        let b = (255.0 * (1.0 - f)) as u8;
        if let (Some(a), Some(bn)) = (nodes.get(u.node_a), nodes.get(u.node_b)) {
            draw_link(&mut svg, xs, ys, a, bn, &format!("#{r:02x}30{b:02x}"), 0.5 + 3.5 * f);
        }
    }
    for n in nodes.iter().filter(|n| n.kind == "gateway") {
        svg.rect(
            xs.map(n.longitude_deg) - 3.0,
            ys.map(n.latitude_deg) - 3.0,
            6.0,
            6.0,
            "#222",
            "none",
        );
    }
    Ok((svg.finish(), total))
}

/// Delivered-packet latencies: (creation time s, E2E s).
pub fn delivered_latencies(run_dir: &Path) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for_each_packet(&run_dir.join(PACKETS_CSV), |r| {
        if r.status == PacketStatus::Delivered {
            out.push((nanos_to_secs(r.created_at), nanos_to_secs(r.e2e().unwrap_or(0))));
        }
        Ok(())
    })?;
    Ok(out)
}

/// Mean latency per time bin of width `bin`, keyed by bin start.
pub fn bin_means(points: &[(f64, f64)], bin: f64) -> Vec<(f64, f64)> {
    let mut acc: BTreeMap<i64, (f64, usize)> = BTreeMap::new();
    for &(t, v) in points {
        let e = acc.entry((t / bin).floor() as i64).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(k, (s, n))| (k as f64 * bin, s / n as f64))
        .collect()
}

/// Bin width giving about 60 bins over `span` seconds, at least 1 ms.
pub fn auto_bin(span: f64) -> f64 {
    (span / 60.0).max(1e-3)
}

#[derive(Debug, Clone, Default)]
pub struct ChartSummary {
    pub rendered: Vec<PathBuf>,
    /// Charts that could not be drawn, with the reason.
    pub failed: Vec<(String, String)>,
    pub edge_usage_total: u64,
    pub delivered: usize,
}

/// Renders every chart the run directory has inputs for into `out_dir`.
pub fn render_run_charts(run_dir: &Path, out_dir: &Path, label: &str) -> Result<ChartSummary> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut summary = ChartSummary::default();
    let emit = |name: &str, body: Result<String>, summary: &mut ChartSummary| match body {
        Ok(svg) => {
            let p = out_dir.join(name);
            match std::fs::write(&p, svg) {
                Ok(()) => summary.rendered.push(p),
                Err(e) => summary.failed.push((name.into(), e.to_string())),
            }
        }
        Err(e) => summary.failed.push((name.into(), e.to_string())),
    };

    emit(MAP_SVG, render_map(run_dir), &mut summary);
    let cong = render_congestion(run_dir).map(|(svg, total)| {
        summary.edge_usage_total = total;
        svg
    });
    emit(CONGESTION_SVG, cong, &mut summary);

    let lat = delivered_latencies(run_dir);
    match &lat {
        Ok(points) => {
            summary.delivered = points.len();
            let span = bounds(points.iter().map(|p| p.0)).map_or(1.0, |(a, b)| b - a);
            let series = Series {
                name: label.to_string(),
                points: bin_means(points, auto_bin(span)),
            };
            emit(
                LATENCY_TIME_SVG,
                Ok(line_chart(
                    "Mean E2E latency over time",
                    "creation time (s)",
                    "latency (s)",
                    std::slice::from_ref(&series),
                )),
                &mut summary,
            );
            let values: Vec<f64> = points.iter().map(|p| p.1).collect();
            emit(
                BOXPLOT_SVG,
                Ok(box_plot("E2E latency", "latency (s)", &[(label.to_string(), values)])),
                &mut summary,
            );
            let eps_path = run_dir.join(EPSILON_CSV);
            if eps_path.exists() {
                let eps = read_csv::<(u64, f64, f64)>(&eps_path).map(|rows| Series {
                    name: "epsilon".into(),
                    points: rows.into_iter().map(|(_, t, e)| (t, e)).collect(),
                });
                emit(
                    LATENCY_EPSILON_SVG,
                    eps.map(|e| dual_axis_chart("Latency and exploration rate", &series, &e)),
                    &mut summary,
                );
            }
        }
        Err(e) => {
            summary.failed.push((LATENCY_TIME_SVG.into(), e.to_string()));
            summary.failed.push((BOXPLOT_SVG.into(), e.to_string()));
        }
    }

    let rewards_path = run_dir.join(REWARDS_CSV);
    if rewards_path.exists() {
        let body = read_csv::<(u64, f64, f64)>(&rewards_path).map(|rows| {
            let pts: Vec<(f64, f64)> = rows.into_iter().map(|(_, t, r)| (t, r)).collect();
            scatter_chart("Rewards", "simulation time (s)", "reward", &pts)
        });
        emit(REWARDS_SVG, body, &mut summary);
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartiles_interpolate() {
        let b = BoxStats::from_values(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((b.min, b.q1, b.median, b.q3, b.max), (1.0, 1.75, 2.5, 3.25, 4.0));
        let single = BoxStats::from_values(&[0.2]).unwrap();
        assert_eq!((single.min, single.median, single.max), (0.2, 0.2, 0.2));
        assert!(BoxStats::from_values(&[]).is_none());
    }

    #[test]
    fn empty_charts_are_annotated() {
        for svg in [
            line_chart("t", "x", "y", &[]),
            scatter_chart("t", "x", "y", &[]),
            box_plot("t", "y", &[("a".into(), vec![])]),
        ] {
            assert!(svg.contains("no data"));
            assert!(svg.ends_with("</svg>\n"));
        }
    }

    #[test]
    fn bins_average_points() {
        let b = bin_means(&[(0.1, 1.0), (0.9, 3.0), (1.5, 5.0)], 1.0);
        assert_eq!(b, vec![(0.0, 2.0), (1.0, 5.0)]);
    }

    #[test]
    fn labels_are_escaped() {
        let svg = line_chart("a<b", "x", "y", &[]);
        assert!(svg.contains("a&lt;b"));
    }
}
