//! Per-sequence evaluation report: CSV table and a grouped SVG bar chart.

use std::fmt::Write as _;

use crate::metrics::Counts;

pub const CSV_HEADER: &str = "sequence,gt,tp,fp,fn,idsw,mota,idf1,idp,idr,precision,recall";
pub const AGGREGATE: &str = "AGGREGATE";

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;
const SERIES: [(&str, &str); 3] = [("IDF1", "#4e79a7"), ("MOTA", "#f28e2b"), ("Precision", "#59a14f")];

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceResult {
    pub name: String,
    pub counts: Counts,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalReport {
    pub sequences: Vec<SequenceResult>,
}

fn csv_row(out: &mut String, name: &str, c: &Counts) {
    let mota = c.mota().map(|m| format!("{m:.6}")).unwrap_or_default();
    let _ = writeln!(
        out,
        "{name},{},{},{},{},{},{mota},{:.6},{:.6},{:.6},{:.6},{:.6}",
        c.gt,
        c.tp,
        c.fp,
        c.fn_,
        c.idsw,
        c.idf1(),
        c.idp(),
        c.idr(),
        c.precision(),
        c.recall()
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

impl EvalReport {
    pub fn push(&mut self, name: impl Into<String>, counts: Counts) {
        self.sequences.push(SequenceResult {
            name: name.into(),
            counts,
        });
    }

    /// Counts summed over sequences.
    pub fn aggregate(&self) -> Counts {
        let mut total = Counts::default();
        for s in &self.sequences {
            total += s.counts;
        }
        total
    }

    /// Header, one row per sequence, then the aggregate row. An undefined
    /// MOTA (no ground truth) is left empty.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for s in &self.sequences {
            csv_row(&mut out, &s.name, &s.counts);
        }
        csv_row(&mut out, AGGREGATE, &self.aggregate());
        out
    }

    /// Grouped bars (IDF1, MOTA, Precision) per sequence on a [0, 1] axis.
    /// Negative MOTA is drawn as an empty bar; the value label keeps the sign.
    pub fn to_svg(&self) -> String {
        let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let base = MARGIN_TOP + plot_h;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        for tick in 0..=5 {
            let v = tick as f64 / 5.0;
            let y = base - v * plot_h;
            let _ = writeln!(
                s,
                r##"<line x1="{MARGIN_LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#dddddd"/>"##,
                WIDTH - MARGIN_RIGHT
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.1}</text>"#,
                MARGIN_LEFT - 6.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            s,
            r##"<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" y2="{base}" stroke="#333333"/>"##
        );
        let _ = writeln!(
            s,
            r##"<line x1="{MARGIN_LEFT}" y1="{base}" x2="{:.1}" y2="{base}" stroke="#333333"/>"##,
            WIDTH - MARGIN_RIGHT
        );

        let n = self.sequences.len().max(1) as f64;
        let group_w = plot_w / n;
        let bar_w = group_w * 0.8 / SERIES.len() as f64;
        for (g, seq) in self.sequences.iter().enumerate() {
            let c = &seq.counts;
            let values = [c.idf1(), c.mota().unwrap_or(0.0), c.precision()];
            let x0 = MARGIN_LEFT + g as f64 * group_w + group_w * 0.1;
            for (k, ((label, color), v)) in SERIES.iter().zip(values).enumerate() {
                let h = v.clamp(0.0, 1.0) * plot_h;
                let x = x0 + k as f64 * bar_w;
                let _ = writeln!(
                    s,
                    r#"<rect x="{x:.1}" y="{:.1}" width="{:.1}" height="{h:.1}" fill="{color}"><title>{} {label} {v:.3}</title></rect>"#,
                    base - h,
                    bar_w * 0.9,
                    escape(&seq.name)
                );
                let _ = writeln!(
                    s,
                    r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="9">{v:.2}</text>"#,
                    x + bar_w * 0.45,
                    base - h - 3.0
                );
            }
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                MARGIN_LEFT + (g as f64 + 0.5) * group_w,
                base + 18.0,
                escape(&seq.name)
            );
        }

        for (k, (label, color)) in SERIES.iter().enumerate() {
            let x = MARGIN_LEFT + 10.0 + k as f64 * 100.0;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.1}" y="12" width="12" height="12" fill="{color}"/>"#
            );
            let _ = writeln!(s, r#"<text x="{:.1}" y="22">{label}</text>"#, x + 16.0);
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(gt: u64, tp: u64, fp: u64, idsw: u64) -> Counts {
        Counts {
            gt,
            tp,
            fp,
            fn_: gt - tp,
            idsw,
            idtp: tp,
            idfp: fp,
            idfn: gt - tp,
        }
    }

    #[test]
    fn csv_rows_and_aggregate() {
        let mut r = EvalReport::default();
        r.push("A", counts(100, 90, 10, 5));
        r.push("B", counts(100, 80, 0, 0));
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(
            lines[1],
            "A,100,90,10,10,5,0.750000,0.900000,0.900000,0.900000,0.900000,0.900000"
        );
        // Aggregate recomputes from summed counts: mota = 1 - (30 + 10 + 5) / 200.
        assert!(lines[3].starts_with("AGGREGATE,200,170,10,30,5,0.775000,"));
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn undefined_mota_is_blank() {
        let mut r = EvalReport::default();
        r.push("empty", Counts::default());
        assert!(r.to_csv().lines().nth(1).unwrap().starts_with("empty,0,0,0,0,0,,1.000000,"));
    }

    #[test]
    fn svg_layout() {
        let mut r = EvalReport::default();
        r.push("MOT17-08", counts(100, 50, 5, 2));
        r.push("MOT17-13", counts(100, 40, 60, 2));
        let svg = r.to_svg();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains(r#"viewBox="0 0 800 400""#));
        assert_eq!(svg.matches("<title>").count(), 6);
        for (label, color) in SERIES {
            assert!(svg.contains(&format!(">{label}</text>")));
            assert!(svg.contains(color));
        }
        assert!(svg.contains(">MOT17-13</text>"));
        // Negative MOTA renders as a zero-height bar.
        assert!(svg.contains(r##"height="0.0" fill="#f28e2b""##));
        assert_eq!(svg, r.to_svg());
    }
}
