//! CSV, PGM and SVG artifact writers.

use std::io::{self, Write};

use super::compare::ComparisonRow;
use super::format::fmt_sig;
use crate::cost::{critical_intensity, NpuDescriptor, RooflinePoint};
use crate::error::{Error, Result};
use crate::sim::SimResult;
use crate::tensor::Matrix;

pub const ROOFLINE_POINTS_HEADER: [&str; 6] = ["operator", "intensity", "measured", "bound", "utilization", "mode"];
pub const SIM_HEADER: [&str; 9] = [
    "operator",
    "n",
    "t_dpu",
    "t_dma",
    "t_shave",
    "dpu_pct",
    "dma_pct",
    "shave_pct",
    "bottleneck",
];
pub const COMPARISON_HEADER: [&str; 7] = [
    "metric",
    "class",
    "reference",
    "artifact",
    "rel_delta",
    "verdict",
    "note",
];

fn bad(table: &'static str, message: impl Into<String>) -> Error {
    Error::Dataset {
        table,
        message: message.into(),
    }
}

fn check_header(rdr: &mut csv::Reader<impl io::Read>, expected: &[&str], table: &'static str) -> Result<()> {
    if rdr.headers()?.iter().ne(expected.iter().copied()) {
        return Err(bad(table, "unexpected header"));
    }
    Ok(())
}

fn num(record: &csv::StringRecord, i: usize, table: &'static str) -> Result<f64> {
    record
        .get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad(table, format!("bad number in column {i}")))
}

fn text(record: &csv::StringRecord, i: usize, table: &'static str) -> Result<String> {
    record
        .get(i)
        .map(str::to_string)
        .ok_or_else(|| bad(table, format!("missing column {i}")))
}

pub fn write_roofline_points_csv<W: Write>(points: &[RooflinePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ROOFLINE_POINTS_HEADER)?;
    for p in points {
        w.write_record([
            p.label.clone(),
            fmt_sig(p.intensity),
            fmt_sig(p.measured),
            fmt_sig(p.bound),
            fmt_sig(p.utilization),
            p.mode.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_roofline_points_csv<R: io::Read>(input: R) -> Result<Vec<RooflinePoint>> {
    const T: &str = "roofline_points";
    let mut rdr = csv::Reader::from_reader(input);
    check_header(&mut rdr, &ROOFLINE_POINTS_HEADER, T)?;
    rdr.records()
        .map(|r| {
            let r = r?;
            Ok(RooflinePoint {
                label: text(&r, 0, T)?,
                intensity: num(&r, 1, T)?,
                measured: num(&r, 2, T)?,
                bound: num(&r, 3, T)?,
                utilization: num(&r, 4, T)?,
                mode: text(&r, 5, T)?.parse()?,
            })
        })
        .collect()
}

pub fn write_sim_csv<W: Write>(results: &[SimResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SIM_HEADER)?;
    for r in results {
        w.write_record([
            r.operator.to_string(),
            r.n.to_string(),
            fmt_sig(r.t_dpu),
            fmt_sig(r.t_dma),
            fmt_sig(r.t_shave),
            fmt_sig(r.shares[0]),
            fmt_sig(r.shares[1]),
            fmt_sig(r.shares[2]),
            r.bottleneck.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sim_csv<R: io::Read>(input: R) -> Result<Vec<SimResult>> {
    const T: &str = "simulate";
    let mut rdr = csv::Reader::from_reader(input);
    check_header(&mut rdr, &SIM_HEADER, T)?;
    rdr.records()
        .map(|r| {
            let r = r?;
            Ok(SimResult {
                operator: text(&r, 0, T)?.parse()?,
                n: num(&r, 1, T)? as usize,
                t_dpu: num(&r, 2, T)?,
                t_dma: num(&r, 3, T)?,
                t_shave: num(&r, 4, T)?,
                shares: [num(&r, 5, T)?, num(&r, 6, T)?, num(&r, 7, T)?],
                bottleneck: text(&r, 8, T)?.parse()?,
            })
        })
        .collect()
}

pub fn write_comparison_csv<W: Write>(rows: &[ComparisonRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COMPARISON_HEADER)?;
    for r in rows {
        w.write_record([
            r.metric.as_str(),
            r.class.name(),
            r.reference.as_str(),
            r.artifact.as_str(),
            &r.rel_delta.map(fmt_sig).unwrap_or_default(),
            r.verdict.name(),
            r.note.as_str(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Values written as a plain CSV grid, no header.
pub fn write_matrix_csv<W: Write>(m: &Matrix, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for i in 0..m.rows() {
        w.write_record(m.row(i).iter().map(|&v| fmt_sig(v as f64)))?;
    }
    w.flush()?;
    Ok(())
}

/// ASCII greymap (P2), min-max scaled to `0..=255`. Constant matrices are
/// written white.
pub fn write_pgm<W: Write>(m: &Matrix, mut out: W) -> Result<()> {
    let (lo, hi) = m
        .as_slice()
        .iter()
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    writeln!(out, "P2\n{} {}\n255", m.cols(), m.rows())?;
    for i in 0..m.rows() {
        let line: Vec<String> = m
            .row(i)
            .iter()
            .map(|&v| {
                let level = if hi > lo {
                    ((v - lo) / (hi - lo) * 255.0).round()
                } else {
                    255.0
                };
                (level as u32).to_string()
            })
            .collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Log-spaced intensities in `[lo, hi]`, `per_decade` per power of ten,
/// with `extra` values merged in.
fn log_samples(lo: f64, hi: f64, per_decade: usize, extra: &[f64]) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    let steps = ((b - a) * per_decade as f64).round() as usize;
    let mut xs: Vec<f64> = (0..=steps)
        .map(|i| {
            let e = a + (b - a) * i as f64 / steps as f64;
            // snap decades to exact values
            if (e - e.round()).abs() < 1e-9 {
                10f64.powi(e.round() as i32)
            } else {
                10f64.powf(e)
            }
        })
        .collect();
    xs.extend(extra.iter().copied().filter(|x| (lo..=hi).contains(x)));
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

pub const PLOT_INTENSITY_RANGE: (f64, f64) = (1.0, 1000.0);

/// Plot data for a log-log roofline: memory and compute segments of the
/// effective and theoretical ceilings, sampled up to and from the kink, plus
/// one scatter row per point.
pub fn roofline_plot_data(points: &[RooflinePoint], npu: &NpuDescriptor) -> String {
    let mut s = String::new();
    s.push_str("# roofline plot data (log-log axes)\n");
    s.push_str("# series: effective_memory | effective_compute | theoretical_memory | theoretical_compute | point\n");
    s.push_str("# intensity: Ops/Byte; performance: GOP/s; label: operator name for point rows\n");
    s.push_str("series,intensity,performance,label\n");
    let (lo, hi) = PLOT_INTENSITY_RANGE;
    for (prefix, desc) in [("effective", npu.clone()), ("theoretical", npu.theoretical())] {
        let kink = critical_intensity(&desc);
        let xs = log_samples(lo, hi, 8, &[kink]);
        for &x in xs.iter().filter(|&&x| x <= kink) {
            s.push_str(&format!(
                "{prefix}_memory,{},{},\n",
                fmt_sig(x),
                fmt_sig(desc.effective_bandwidth() * x)
            ));
        }
        for &x in xs.iter().filter(|&&x| x >= kink) {
            s.push_str(&format!(
                "{prefix}_compute,{},{},\n",
                fmt_sig(x),
                fmt_sig(desc.effective_compute())
            ));
        }
    }
    for p in points {
        s.push_str(&format!(
            "point,{},{},{}\n",
            fmt_sig(p.intensity),
            fmt_sig(p.measured),
            p.label
        ));
    }
    s
}

/// Self-contained SVG rendering of [`roofline_plot_data`].
pub fn roofline_svg(points: &[RooflinePoint], npu: &NpuDescriptor) -> String {
    let (w, h, pad) = (640.0, 440.0, 60.0);
    let (x_lo, x_hi) = PLOT_INTENSITY_RANGE;
    let theoretical = npu.theoretical();
    let y_hi = theoretical.effective_compute() * 2.0;
    let y_lo = points
        .iter()
        .map(|p| p.measured)
        .fold(npu.effective_bandwidth() * x_lo, f64::min)
        / 2.0;
    let px = |x: f64| pad + (x.log10() - x_lo.log10()) / (x_hi.log10() - x_lo.log10()) * (w - 2.0 * pad);
    let py = |y: f64| h - pad - (y.log10() - y_lo.log10()) / (y_hi.log10() - y_lo.log10()) * (h - 2.0 * pad);

    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <rect x=\"{pad}\" y=\"{pad}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>\n",
        w - 2.0 * pad,
        h - 2.0 * pad
    );
    for (desc, colour, dash) in [
        (npu, "#1f4e9c", ""),
        (&theoretical, "#9db3d9", " stroke-dasharray=\"5,4\""),
    ] {
        let kink = critical_intensity(desc);
        let pts = [
            (x_lo, desc.effective_bandwidth() * x_lo),
            (kink, desc.effective_compute()),
            (x_hi, desc.effective_compute()),
        ];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y))).collect();
        s.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{colour}\" stroke-width=\"2\"{dash}/>\n",
            path.join(" ")
        ));
    }
    for p in points {
        let (x, y) = (px(p.intensity), py(p.measured));
        s.push_str(&format!(
            "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"4\" fill=\"#c0392b\"/>\n<text x=\"{:.1}\" y=\"{:.1}\">{} ({}%)</text>\n",
            x + 6.0,
            y - 4.0,
            p.label,
            fmt_sig(100.0 * p.utilization)
        ));
    }
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">Operational intensity [Ops/Byte]</text>\n\
         <text x=\"14\" y=\"{}\" transform=\"rotate(-90 14 {})\" text-anchor=\"middle\">Performance [GOP/s]</text>\n</svg>\n",
        w / 2.0,
        h - 20.0,
        h / 2.0,
        h / 2.0
    ));
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::UtilizationMode;

    #[test]
    fn plot_data_is_continuous_at_the_kink() {
        let npu = NpuDescriptor::default();
        let data = roofline_plot_data(&[], &npu);
        assert!(data.contains("effective_memory,156.3,500.0,"));
        assert!(data.contains("effective_compute,156.3,500.0,"));
        assert!(data.contains("theoretical_memory,10.00,640.0,"));
    }

    #[test]
    fn pgm_header_and_range() {
        let m = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.5, -1.0]]).unwrap();
        let mut buf = Vec::new();
        write_pgm(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "P2\n2 2\n255\n128 255\n191 0\n");
    }

    #[test]
    fn points_round_trip() {
        let npu = NpuDescriptor::default();
        let pts = vec![
            RooflinePoint::new("linear", 16.0, 14.0, &npu, UtilizationMode::BoundRelative),
            RooflinePoint::new("causal", 61.13, 21.4, &npu, UtilizationMode::ComputeRoofRelative),
        ];
        let mut buf = Vec::new();
        write_roofline_points_csv(&pts, &mut buf).unwrap();
        let back = read_roofline_points_csv(buf.as_slice()).unwrap();
        let mut again = Vec::new();
        write_roofline_points_csv(&back, &mut again).unwrap();
        assert_eq!(buf, again);
        assert_eq!(back[0].bound, 51.2);
    }
}
