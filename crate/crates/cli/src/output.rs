//! CSV and SVG writers.

use crate::error::CliResult;
use serde::Serialize;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

/// A CSV record type with a fixed header.
pub trait Row: Serialize {
    const HEADER: &'static [&'static str];
}

/// Header row plus one line per record.
pub fn csv_string<R: Row>(rows: &[R]) -> CliResult<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(vec![]);
    w.write_record(R::HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| crate::error::CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Writes to `path`, or to stdout without one.
pub fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// One named line of a plot.
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// A line plot with optional log axes.
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

impl Plot {
    pub fn to_svg(&self) -> String {
        let (w, h, m) = (640.0, 420.0, 60.0);
        let tx = |x: f64| if self.log_x { x.max(1e-300).log10() } else { x };
        let ty = |y: f64| if self.log_y { y.max(1e-300).log10() } else { y };
        let pts: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter())
            .filter(|(x, y)| (!self.log_x || *x > 0.0) && (!self.log_y || *y > 0.0))
            .map(|&(x, y)| (tx(x), ty(y)))
            .collect();
        let range = |v: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
                (a.min(x), b.max(x))
            });
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        let (x0, x1) = range(&mut pts.iter().map(|p| p.0));
        let (y0, y1) = range(&mut pts.iter().map(|p| p.1));
        let px = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
        let py = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
        let mut s = String::new();
        writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#).unwrap();
        writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
        writeln!(
            s,
            r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
            w / 2.0,
            escape(&self.title)
        )
        .unwrap();
        writeln!(
            s,
            r#"<line x1="{m}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
            h - m,
            w - m,
            h - m
        )
        .unwrap();
        writeln!(
            s,
            r#"<line x1="{m}" y1="{m}" x2="{m}" y2="{}" stroke="black"/>"#,
            h - m
        )
        .unwrap();
        let axis = |v: f64, log: bool| {
            if log {
                format!("{:.3}", 10f64.powf(v))
            } else {
                format!("{v:.3}")
            }
        };
        for (v, anchor, x, y) in [
            (x0, "start", px(x0), h - m + 16.0),
            (x1, "end", px(x1), h - m + 16.0),
        ] {
            writeln!(
                s,
                r#"<text x="{x}" y="{y}" text-anchor="{anchor}">{}</text>"#,
                axis(v, self.log_x)
            )
            .unwrap();
        }
        for (v, y) in [(y0, py(y0)), (y1, py(y1) + 10.0)] {
            writeln!(
                s,
                r#"<text x="{}" y="{y}" text-anchor="end">{}</text>"#,
                m - 4.0,
                axis(v, self.log_y)
            )
            .unwrap();
        }
        writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            w / 2.0,
            h - 16.0,
            escape(&self.x_label)
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="16" y="{}" transform="rotate(-90 16 {})" text-anchor="middle">{}</text>"#,
            h / 2.0,
            h / 2.0,
            escape(&self.y_label)
        )
        .unwrap();
        for (i, series) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let line: Vec<String> = series
                .points
                .iter()
                .filter(|(x, y)| (!self.log_x || *x > 0.0) && (!self.log_y || *y > 0.0))
                .map(|&(x, y)| format!("{:.2},{:.2}", px(tx(x)), py(ty(y))))
                .collect();
            if !line.is_empty() {
                writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                    line.join(" ")
                )
                .unwrap();
            }
            writeln!(
                s,
                r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
                w - m - 150.0,
                m + 16.0 * i as f64,
                escape(&series.name)
            )
            .unwrap();
        }
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct R {
        a: u32,
        b: Option<f64>,
    }

    impl Row for R {
        const HEADER: &'static [&'static str] = &["a", "b"];
    }

    #[test]
    fn empty_tables_keep_the_header() {
        assert_eq!(csv_string::<R>(&[]).unwrap(), "a,b\n");
        assert_eq!(
            csv_string(&[R { a: 1, b: None }, R { a: 2, b: Some(0.5) }]).unwrap(),
            "a,b\n1,\n2,0.5\n"
        );
    }

    #[test]
    fn plots_are_svg() {
        let p = Plot {
            title: "t".into(),
            x_label: "k".into(),
            y_label: "error".into(),
            log_x: true,
            log_y: true,
            series: vec![Series {
                name: "s".into(),
                points: vec![(1.0, 0.5), (10.0, 0.0), (100.0, 0.01)],
            }],
        };
        let svg = p.to_svg();
        assert!(svg.starts_with("<svg") && svg.contains("polyline"));
    }
}
