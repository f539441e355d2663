//! CSV tables, minimal SVG polyline charts and the run manifest.
//!
//! Every table renders to a `String` first so identical inputs always give
//! byte-identical files.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::bench::{ExecutionReport, TrialStats};
use crate::protocol::ProtocolRun;
use crate::simulator::StateVector;
use crate::vqd::BandStructureResult;
use crate::{Error, Result};

fn render<F>(header: &[&str], fill: F) -> Result<String>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Validation(format!("csv: {e}"));
    w.write_record(header).map_err(io)?;
    fill(&mut w).map_err(io)?;
    let bytes = w.into_inner().map_err(|e| Error::Validation(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Validation(e.to_string()))
}

pub const BANDS_HEADER: [&str; 8] = [
    "k_index",
    "path_distance",
    "band",
    "energy_vqd",
    "energy_exact",
    "iterations",
    "cost_evals",
    "seed",
];

/// One row per `(k, band)`, bands in ascending energy.
pub fn bands_csv(result: &BandStructureResult) -> Result<String> {
    render(&BANDS_HEADER, |w| {
        for p in &result.points {
            for (n, b) in p.bands.iter().enumerate() {
                w.write_record([
                    p.k_index.to_string(),
                    p.path_distance.to_string(),
                    n.to_string(),
                    b.energy.to_string(),
                    p.exact[n].to_string(),
                    b.iterations.to_string(),
                    b.cost_evals.to_string(),
                    b.seed.to_string(),
                ])?;
            }
        }
        Ok(())
    })
}

pub fn correlator_stats_csv(stats: &[TrialStats]) -> Result<String> {
    let header = ["n_qubits", "j", "l", "part", "mean", "std", "exact", "abs_err", "shots", "M"];
    render(&header, |w| {
        for s in stats {
            let shots = s.shots.map_or_else(|| "analytic".to_string(), |v| v.to_string());
            for (part, mean, std, exact) in [
                ("re", s.mean.re, s.std_re, s.exact.re),
                ("im", s.mean.im, s.std_im, s.exact.im),
            ] {
                w.write_record([
                    s.n_qubits.to_string(),
                    s.pair.0.to_string(),
                    s.pair.1.to_string(),
                    part.to_string(),
                    mean.to_string(),
                    std.to_string(),
                    exact.to_string(),
                    (mean - exact).abs().to_string(),
                    shots.clone(),
                    s.trials.to_string(),
                ])?;
            }
        }
        Ok(())
    })
}

pub fn executions_csv(reports: &[ExecutionReport]) -> Result<String> {
    render(&["n_qubits", "shots", "protocol", "total"], |w| {
        for r in reports {
            for (name, total) in [("constant", r.total_constant), ("conventional", r.total_conventional)] {
                w.write_record([
                    r.n_qubits.to_string(),
                    r.shots.to_string(),
                    name.to_string(),
                    total.to_string(),
                ])?;
            }
        }
        Ok(())
    })
}

/// Every estimated correlator of one protocol run next to the exact
/// `2 conj(a_j) a_l` of the prepared state.
pub fn correlator_dump_csv(runs: &[(&ProtocolRun, &StateVector, u64)]) -> Result<String> {
    let header = ["n_qubits", "j", "l", "provenance", "re", "im", "re_exact", "im_exact", "seed"];
    render(&header, |w| {
        for (run, state, seed) in runs {
            let a = state.single_excitation_amplitudes();
            for ((j, l), c, prov) in run.correlators.iter() {
                let exact = 2.0 * a[j].conj() * a[l];
                w.write_record([
                    state.n_qubits().to_string(),
                    j.to_string(),
                    l.to_string(),
                    prov.name().to_string(),
                    c.re.to_string(),
                    c.im.to_string(),
                    exact.re.to_string(),
                    exact.im.to_string(),
                    seed.to_string(),
                ])?;
            }
        }
        Ok(())
    })
}

/// A named polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    /// Draw markers only.
    pub markers: bool,
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Minimal line chart with axes, ticks at the data range ends and a legend.
pub fn svg_chart(title: &str, x_label: &str, y_label: &str, series: &[Series], log_y: bool) -> String {
    let (w, h, left, right, top, bottom) = (720.0, 480.0, 80.0, 160.0, 40.0, 60.0);
    let ty = |y: f64| if log_y { y.max(f64::MIN_POSITIVE).log10() } else { y };
    let pts = series.iter().flat_map(|s| &s.points).filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(ty(y));
        y1 = y1.max(ty(y));
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let px = |x: f64| left + (x - x0) / (x1 - x0) * (w - left - right);
    let py = |y: f64| h - bottom - (ty(y) - y0) / (y1 - y0) * (h - top - bottom);
    let tick = |v: f64| if log_y { format!("1e{v:.1}") } else { format!("{v:.3}") };

    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    s += &format!("<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n");
    s += &format!("<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n", w / 2.0, escape(title));
    s += &format!(
        "<path d=\"M{left} {top} V{} H{}\" stroke=\"black\" fill=\"none\"/>\n",
        h - bottom,
        w - right
    );
    s += &format!("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", (left + w - right) / 2.0, h - 15.0, escape(x_label));
    s += &format!(
        "<text x=\"20\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {})\">{}</text>\n",
        (top + h - bottom) / 2.0,
        (top + h - bottom) / 2.0,
        escape(y_label)
    );
    for (v, y) in [(y0, h - bottom), (y1, top)] {
        s += &format!("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", left - 6.0, y + 4.0, tick(v));
    }
    for (v, x) in [(x0, left), (x1, w - right)] {
        s += &format!("<text x=\"{x}\" y=\"{}\" text-anchor=\"middle\">{v:.3}</text>\n", h - bottom + 16.0);
    }
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = ser
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        if ser.markers {
            for c in &coords {
                let (cx, cy) = c.split_once(',').unwrap_or(("0", "0"));
                s += &format!("<circle cx=\"{cx}\" cy=\"{cy}\" r=\"2.5\" fill=\"{color}\"/>\n");
            }
        } else {
            s += &format!(
                "<polyline points=\"{}\" stroke=\"{color}\" stroke-width=\"1.5\" fill=\"none\"/>\n",
                coords.join(" ")
            );
        }
        let ly = top + 16.0 * i as f64;
        s += &format!(
            "<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"3\" fill=\"{color}\"/><text x=\"{}\" y=\"{}\">{}</text>\n",
            w - right + 10.0,
            ly + 4.0,
            w - right + 28.0,
            ly + 9.0,
            escape(&ser.name)
        );
    }
    s += "</svg>\n";
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Exact bands as lines and protocol energies as markers.
pub fn bands_svg(result: &BandStructureResult, title: &str) -> String {
    let mut series = Vec::new();
    for n in 0..result.levels {
        series.push(Series {
            name: format!("exact {n}"),
            points: result.points.iter().map(|p| (p.path_distance, p.exact[n])).collect(),
            markers: false,
        });
    }
    for n in 0..result.levels {
        series.push(Series {
            name: format!("vqd {n}"),
            points: result
                .points
                .iter()
                .map(|p| (p.path_distance, p.bands[n].energy))
                .collect(),
            markers: true,
        });
    }
    svg_chart(title, "k-path distance", "energy (eV)", &series, false)
}

/// Total executions against `N` per protocol and shot count, log scale.
pub fn executions_svg(reports: &[ExecutionReport]) -> String {
    let mut shots: Vec<u64> = reports.iter().map(|r| r.shots).collect();
    shots.sort_unstable();
    shots.dedup();
    let mut series = Vec::new();
    for s in shots {
        for (name, pick) in [
            ("conventional", (|r: &ExecutionReport| r.total_conventional) as fn(&ExecutionReport) -> u64),
            ("constant", |r: &ExecutionReport| r.total_constant),
        ] {
            series.push(Series {
                name: format!("{name} {s}"),
                points: reports
                    .iter()
                    .filter(|r| r.shots == s)
                    .map(|r| (r.n_qubits as f64, pick(r) as f64))
                    .collect(),
                markers: false,
            });
        }
    }
    svg_chart("Circuit executions per cost evaluation", "qubits", "executions", &series, true)
}

/// Mean correlator parts against `N`, one line per pair and part.
pub fn correlators_svg(stats: &[TrialStats]) -> String {
    let mut pairs: Vec<(usize, usize)> = stats.iter().map(|s| s.pair).collect();
    pairs.sort_unstable();
    pairs.dedup();
    let mut series = Vec::new();
    for (j, l) in pairs {
        let rows: Vec<&TrialStats> = stats.iter().filter(|s| s.pair == (j, l)).collect();
        series.push(Series {
            name: format!("Re C{j}{l}"),
            points: rows.iter().map(|s| (s.n_qubits as f64, s.mean.re)).collect(),
            markers: false,
        });
        series.push(Series {
            name: format!("Im C{j}{l}"),
            points: rows.iter().map(|s| (s.n_qubits as f64, s.mean.im)).collect(),
            markers: false,
        });
    }
    svg_chart("Estimated correlators", "qubits", "mean", &series, false)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: PathBuf,
    pub kind: String,
    /// Seed of the stochastic content, `None` for deterministic files.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    /// Effective configuration after merging file and flags.
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub outputs: Vec<OutputFile>,
    /// Per-point details, free form.
    pub telemetry: serde_json::Value,
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, seeds: Vec<u64>) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            seeds,
            started_unix: unix_now(),
            finished_unix: 0.0,
            outputs: Vec::new(),
            telemetry: serde_json::Value::Null,
        }
    }

    /// Writes `contents` to `dir/name` and records it.
    pub fn write_output(&mut self, dir: &Path, name: &str, kind: &str, seed: Option<u64>, contents: &str) -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| Error::Validation(format!("cannot write {}: {e}", path.display())))?;
        self.outputs.push(OutputFile {
            path: PathBuf::from(name),
            kind: kind.to_string(),
            seed,
        });
        Ok(())
    }

    /// Stamps the finish time and writes `dir/manifest.json`.
    pub fn finish(mut self, dir: &Path) -> Result<PathBuf> {
        self.finished_unix = unix_now();
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self).map_err(|e| Error::Validation(e.to_string()))?;
        std::fs::write(&path, text + "\n")
            .map_err(|e| Error::Validation(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}
