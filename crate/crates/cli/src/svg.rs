//! Hand-rolled SVG charts. No external renderer: the output is a flat
//! document with one `<g>` per series so downstream tooling can grab
//! series by id.

use std::fmt::Write;

use udi_core::forecast::SeasonalModel;
use udi_core::impact::ImpactSummary;
use udi_core::zonal::ZonalRecord;

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 34.0;
const MARGIN_B: f64 = 46.0;

/// Data-space to pixel-space mapping over the plot area.
struct Scale {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Scale {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Scale {
        // Degenerate ranges still need a nonzero span to divide by.
        let (x0, x1) = if x1 > x0 { (x0, x1) } else { (x0 - 0.5, x0 + 0.5) };
        let (y0, y1) = if y1 > y0 { (y0, y1) } else { (y0 - 0.5, y0 + 0.5) };
        Scale { x0, x1, y0, y1 }
    }

    fn x(&self, v: f64) -> f64 {
        MARGIN_L + (v - self.x0) / (self.x1 - self.x0) * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN_B - (v - self.y0) / (self.y1 - self.y0) * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

fn pad_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1e-9);
    (lo - pad, hi + pad)
}

fn points_attr(scale: &Scale, pts: &[(f64, f64)]) -> String {
    let mut s = String::new();
    for (i, &(x, y)) in pts.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{:.2},{:.2}", scale.x(x), scale.y(y));
    }
    s
}

/// Split a sparse series into contiguous runs so gaps stay gaps.
fn runs<T: Copy>(points: &[Option<T>]) -> Vec<Vec<T>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    for p in points {
        match p {
            Some(v) => current.push(*v),
            None => {
                if !current.is_empty() {
                    out.push(std::mem::take(&mut current));
                }
            }
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

fn polyline_group(out: &mut String, scale: &Scale, id: &str, color: &str, dash: Option<&str>, series: &[Option<(f64, f64)>]) {
    let dash = dash.map(|d| format!(" stroke-dasharray=\"{d}\"")).unwrap_or_default();
    let _ = writeln!(out, "  <g id=\"{id}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{dash}>");
    for run in runs(series) {
        if run.len() == 1 {
            // A lone point would be an invisible polyline.
            let (x, y) = run[0];
            let _ = writeln!(out, "    <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2\" fill=\"{color}\" stroke=\"none\"/>", scale.x(x), scale.y(y));
        } else {
            let _ = writeln!(out, "    <polyline points=\"{}\"/>", points_attr(scale, &run));
        }
    }
    let _ = writeln!(out, "  </g>");
}

fn band_group(out: &mut String, scale: &Scale, id: &str, series: &[Option<(f64, f64, f64)>]) {
    let _ = writeln!(out, "  <g id=\"{id}\" fill=\"#cccccc\" stroke=\"none\">");
    for run in runs(series) {
        let mut ring: Vec<(f64, f64)> = run.iter().map(|&(x, _, hi)| (x, hi)).collect();
        ring.extend(run.iter().rev().map(|&(x, lo, _)| (x, lo)));
        let _ = writeln!(out, "    <polygon points=\"{}\"/>", points_attr(scale, &ring));
    }
    let _ = writeln!(out, "  </g>");
}

fn axes(out: &mut String, scale: &Scale, x_labels: &[(f64, String)], y_title: &str) {
    let left = MARGIN_L;
    let right = WIDTH - MARGIN_R;
    let top = MARGIN_T;
    let bottom = HEIGHT - MARGIN_B;
    let _ = writeln!(out, "  <g id=\"axes\" stroke=\"#444444\" fill=\"none\" stroke-width=\"1\">");
    let _ = writeln!(out, "    <line x1=\"{left:.2}\" y1=\"{bottom:.2}\" x2=\"{right:.2}\" y2=\"{bottom:.2}\"/>");
    let _ = writeln!(out, "    <line x1=\"{left:.2}\" y1=\"{top:.2}\" x2=\"{left:.2}\" y2=\"{bottom:.2}\"/>");
    let _ = writeln!(out, "  </g>");
    let _ = writeln!(out, "  <g id=\"labels\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#222222\">");
    for &(x, ref label) in x_labels {
        let px = scale.x(x);
        let _ = writeln!(out, "    <line x1=\"{px:.2}\" y1=\"{bottom:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"#444444\"/>", bottom + 4.0);
        let _ = writeln!(out, "    <text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{label}</text>", bottom + 17.0);
    }
    for i in 0..=4 {
        let v = scale.y0 + (scale.y1 - scale.y0) * i as f64 / 4.0;
        let py = scale.y(v);
        let _ = writeln!(out, "    <line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{left:.2}\" y2=\"{py:.2}\" stroke=\"#444444\"/>", left - 4.0);
        let _ = writeln!(out, "    <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{:.1}</text>", left - 8.0, py + 4.0, v);
    }
    let _ = writeln!(out, "    <text x=\"{:.2}\" y=\"{:.2}\" transform=\"rotate(-90 14 {:.2})\" text-anchor=\"middle\">{y_title}</text>", 14.0, (top + bottom) / 2.0, (top + bottom) / 2.0);
    let _ = writeln!(out, "  </g>");
}

fn document(title: &str, body: &str) -> String {
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n",
            "  <rect width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>\n",
            "  <text x=\"{tl}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\" fill=\"#000000\">{title}</text>\n",
            "{body}</svg>\n"
        ),
        w = WIDTH,
        h = HEIGHT,
        tl = MARGIN_L,
        title = title,
        body = body
    )
}

/// Chart one tract: monthly observed means with a +-1 std band, the
/// fitted seasonal curve, and the bare linear trend.
pub fn tract_chart(tract_id: &str, records: &[ZonalRecord], model: &SeasonalModel) -> String {
    let first = records[0].month;
    let xs: Vec<f64> = records.iter().map(|r| r.month.index_from(first) as f64).collect();

    let observed: Vec<Option<(f64, f64)>> = records
        .iter()
        .zip(&xs)
        .map(|(r, &x)| r.stats.as_ref().map(|s| (x, s.mean)))
        .collect();
    let band: Vec<Option<(f64, f64, f64)>> = records
        .iter()
        .zip(&xs)
        .map(|(r, &x)| r.stats.as_ref().map(|s| (x, s.mean - s.std_dev, s.mean + s.std_dev)))
        .collect();
    let fitted: Vec<Option<(f64, f64)>> = records
        .iter()
        .zip(&xs)
        .map(|(r, &x)| Some((x, model.predict(r.month))))
        .collect();
    let trend_at = |m: udi_core::month::MonthKey| {
        model.intercept + model.slope * m.index_from(model.training.start()) as f64
    };
    let trend_pts = [
        Some((xs[0], trend_at(records[0].month))),
        Some((*xs.last().unwrap(), trend_at(records[records.len() - 1].month))),
    ];

    let (y0, y1) = pad_range(
        band.iter()
            .flatten()
            .flat_map(|&(_, lo, hi)| [lo, hi])
            .chain(observed.iter().flatten().map(|&(_, y)| y))
            .chain(fitted.iter().flatten().map(|&(_, y)| y)),
    );
    let scale = Scale::new(xs[0], *xs.last().unwrap(), y0, y1);

    let x_labels: Vec<(f64, String)> = records
        .iter()
        .zip(&xs)
        .filter(|(r, _)| r.month.month() == 1)
        .map(|(r, &x)| (x, r.month.year().to_string()))
        .collect();

    let mut body = String::new();
    axes(&mut body, &scale, &x_labels, "index mean");
    band_group(&mut body, &scale, "std-band", &band);
    polyline_group(&mut body, &scale, "seasonal-forecast", "#ff8c00", None, &fitted);
    polyline_group(&mut body, &scale, "trend", "#008080", Some("5 4"), &trend_pts);
    polyline_group(&mut body, &scale, "observed", "#000000", None, &observed);
    document(&format!("tract {tract_id}"), &body)
}

/// Chart island persons-without-power with its uncertainty band.
pub fn island_chart(summaries: &[ImpactSummary]) -> String {
    let mut rows: Vec<&ImpactSummary> = summaries.iter().collect();
    rows.sort_by_key(|s| s.month);
    let first = rows[0].month;
    let xs: Vec<f64> = rows.iter().map(|s| s.month.index_from(first) as f64).collect();

    let persons: Vec<Option<(f64, f64)>> = rows
        .iter()
        .zip(&xs)
        .map(|(s, &x)| Some((x, s.persons_without_power)))
        .collect();
    let band: Vec<Option<(f64, f64, f64)>> = rows
        .iter()
        .zip(&xs)
        .map(|(s, &x)| {
            Some((
                x,
                (s.persons_without_power - s.persons_uncertainty).max(0.0),
                s.persons_without_power + s.persons_uncertainty,
            ))
        })
        .collect();

    let (_, y1) = pad_range(band.iter().flatten().map(|&(_, _, hi)| hi));
    let scale = Scale::new(xs[0], *xs.last().unwrap(), 0.0, y1.max(1.0));

    let x_labels: Vec<(f64, String)> = rows
        .iter()
        .zip(&xs)
        .map(|(s, &x)| (x, s.month.to_string()))
        .collect();

    let mut body = String::new();
    axes(&mut body, &scale, &x_labels, "persons without power");
    band_group(&mut body, &scale, "uncertainty-band", &band);
    polyline_group(&mut body, &scale, "persons", "#000000", None, &persons);
    document("island impact", &body)
}
