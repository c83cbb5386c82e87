//! Minimal SVG: polylines in chart coordinates, axes, a caption.
//!
//! Every number is printed with at most 9 significant digits.

use std::fmt::Write as _;

const COLORS: &[&str] = &["#1f4e9c", "#c0392b", "#1e8449", "#7d3c98", "#b9770e", "#117a65"];
const MARGIN: f64 = 48.0;
const CAPTION: f64 = 40.0;

#[derive(Debug, Clone)]
pub struct Polyline {
    pub label: String,
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone)]
pub struct Figure {
    pub width: u32,
    pub height: u32,
    pub title: String,
    pub caption: Vec<String>,
    pub axis_labels: [String; 2],
    /// Text stored verbatim in the `<metadata>` element.
    pub metadata: String,
}

/// Round to 9 significant digits and print in the shortest form.
pub fn sig9(v: f64) -> String {
    if !v.is_finite() {
        return "0".into();
    }
    let r: f64 = format!("{v:.8e}").parse().unwrap_or(0.0);
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(lines: &[Polyline]) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in lines.iter().flat_map(|l| &l.points) {
        for k in 0..2 {
            if p[k].is_finite() {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
    }
    for k in 0..2 {
        if !lo[k].is_finite() {
            lo[k] = -1.0;
            hi[k] = 1.0;
        }
        let pad = 0.05 * (hi[k] - lo[k]).max(1e-9);
        lo[k] -= pad;
        hi[k] += pad;
    }
    // equal scale on both axes
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    for k in 0..2 {
        let mid = 0.5 * (lo[k] + hi[k]);
        lo[k] = mid - 0.5 * span;
        hi[k] = mid + 0.5 * span;
    }
    (lo, hi)
}

pub fn render(lines: &[Polyline], fig: &Figure) -> String {
    let (w, h) = (fig.width as f64, fig.height as f64);
    let plot = (w - 2.0 * MARGIN).min(h - 2.0 * MARGIN - CAPTION).max(10.0);
    let (lo, hi) = bounds(lines);
    let scale = plot / (hi[0] - lo[0]);
    let x0 = 0.5 * (w - plot);
    let y0 = MARGIN;
    let px = |p: [f64; 2]| -> (f64, f64) { (x0 + (p[0] - lo[0]) * scale, y0 + plot - (p[1] - lo[1]) * scale) };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        fig.width, fig.height, fig.width, fig.height
    );
    let _ = writeln!(s, "<metadata><![CDATA[\n{}]]></metadata>", fig.metadata.replace("]]>", "]] >"));
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
        sig9(0.5 * w),
        sig9(0.6 * MARGIN),
        escape(&fig.title)
    );

    // frame, and the coordinate axes where they cross the box
    let _ = writeln!(
        s,
        r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#999" stroke-width="0.8"/>"##,
        sig9(x0),
        sig9(y0),
        sig9(plot),
        sig9(plot)
    );
    let ax = if lo[1] <= 0.0 && 0.0 <= hi[1] { 0.0 } else { lo[1] };
    let ay = if lo[0] <= 0.0 && 0.0 <= hi[0] { 0.0 } else { lo[0] };
    let (a1, a2) = (px([lo[0], ax]), px([hi[0], ax]));
    let (b1, b2) = (px([ay, lo[1]]), px([ay, hi[1]]));
    for ((p, q), label) in [((a1, a2), &fig.axis_labels[0]), ((b1, b2), &fig.axis_labels[1])] {
        let _ = writeln!(
            s,
            r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#444" stroke-width="1"/>"##,
            sig9(p.0),
            sig9(p.1),
            sig9(q.0),
            sig9(q.1)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{}</text>"#,
            sig9(q.0 + 4.0),
            sig9(q.1 - 4.0),
            escape(label)
        );
    }
    // end ticks
    for (v, (x, y)) in [(lo[0], px([lo[0], lo[1]])), (hi[0], px([hi[0], lo[1]]))] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="10" text-anchor="middle">{}</text>"#,
            sig9(x),
            sig9(y + 14.0),
            sig9(v)
        );
    }
    for (v, (x, y)) in [(lo[1], px([lo[0], lo[1]])), (hi[1], px([lo[0], hi[1]]))] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="10" text-anchor="end">{}</text>"#,
            sig9(x - 4.0),
            sig9(y + 3.0),
            sig9(v)
        );
    }

    for (i, line) in lines.iter().enumerate() {
        let pts: Vec<String> = line
            .points
            .iter()
            .filter(|p| p[0].is_finite() && p[1].is_finite())
            .map(|p| {
                let (x, y) = px(*p);
                format!("{},{}", sig9(x), sig9(y))
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
            COLORS[i % COLORS.len()],
            pts.join(" "),
            escape(&line.label)
        );
    }

    let mut y = y0 + plot + 30.0;
    for line in &fig.caption {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#,
            sig9(x0),
            sig9(y),
            escape(line)
        );
        y += 14.0;
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_digits() {
        assert_eq!(sig9(1.0), "1");
        assert_eq!(sig9(0.1 + 0.2), "0.3");
        assert_eq!(sig9(123.456789012), "123.456789");
        assert_eq!(sig9(-2.0 / 3.0), "-0.666666667");
        assert_eq!(sig9(0.0), "0");
    }

    #[test]
    fn polyline_and_caption_present() {
        let fig = Figure {
            width: 300,
            height: 300,
            title: "t".into(),
            caption: vec!["a < b".into()],
            axis_labels: ["x".into(), "y".into()],
            metadata: "seed = 0\n".into(),
        };
        let svg = render(
            &[Polyline {
                label: "c".into(),
                points: vec![[0.0, 0.0], [1.0, 1.0]],
            }],
            &fig,
        );
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("<polyline"));
        assert!(svg.contains("a &lt; b"));
        assert!(svg.contains("seed = 0"));
        assert!(svg.ends_with("</svg>\n"));
    }
}
