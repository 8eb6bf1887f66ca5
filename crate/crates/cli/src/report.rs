//! Static SVG and HTML reports.
//!
//! Maps place one circle per topic at its layout coordinates, with circle
//! area proportional to the topic's corpus weight. Axes carry no labels: the
//! layout dimensions have no intrinsic meaning.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use topicalign_core::align::{AlignmentResult, PairSelection};
use topicalign_core::geometry::Layout;
use topicalign_core::table::{self, fmt_float};
use topicalign_core::Result;

const FRAME: f64 = 560.0;
const PAD: f64 = 60.0;
const MAX_RADIUS: f64 = 36.0;
const DEFAULT_FILL: &str = "#4e79a7";
const PALETTE: [&str; 10] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7",
    "#9c755f", "#bab0ac",
];
/// Terms shown per topic in the HTML tables.
const TABLE_TERMS: usize = 10;

pub fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

/// Circle radius for every topic; the largest topic gets [`MAX_RADIUS`].
pub fn radii(sizes: &[f64]) -> Vec<f64> {
    let max = sizes.iter().copied().fold(0.0, f64::max);
    sizes
        .iter()
        .map(|&s| if max > 0.0 { MAX_RADIUS * (s / max).sqrt() } else { 6.0 })
        .collect()
}

/// Canvas positions of the layout points inside a square frame whose top
/// left corner is at `(x0, y0)`. The y axis points up.
fn project(layout: &Layout, x0: f64, y0: f64) -> Vec<(f64, f64)> {
    let xs = layout.coords.iter().map(|c| c.0);
    let ys = layout.coords.iter().map(|c| c.1);
    let (xmin, xmax) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let (ymin, ymax) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    let span = (xmax - xmin).max(ymax - ymin);
    let scale = if span > 0.0 { (FRAME - 2.0 * PAD) / span } else { 0.0 };
    let (xmid, ymid) = ((xmin + xmax) / 2.0, (ymin + ymax) / 2.0);
    layout
        .coords
        .iter()
        .map(|&(x, y)| {
            (
                x0 + FRAME / 2.0 + (x - xmid) * scale,
                y0 + FRAME / 2.0 - (y - ymid) * scale,
            )
        })
        .collect()
}

fn fills(n: usize, color_keys: Option<&[String]>) -> Vec<&'static str> {
    match color_keys {
        None => vec![DEFAULT_FILL; n],
        Some(keys) => {
            let distinct: Vec<&String> = keys.iter().collect::<BTreeSet<_>>().into_iter().collect();
            keys.iter()
                .map(|k| PALETTE[distinct.iter().position(|d| *d == k).unwrap_or(0) % PALETTE.len()])
                .collect()
        }
    }
}

/// Circles and labels of one map. `emphasis` thickens circle borders.
fn map_group(
    out: &mut String,
    layout: &Layout,
    labels: &[String],
    centers: &[(f64, f64)],
    emphasis: &[bool],
    color_keys: Option<&[String]>,
) {
    let r = radii(&layout.sizes);
    let fill = fills(labels.len(), color_keys);
    for (i, label) in labels.iter().enumerate() {
        let (cx, cy) = centers[i];
        let width = if emphasis.get(i).copied().unwrap_or(false) { 4 } else { 1 };
        let _ = writeln!(
            out,
            r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.3}" fill="{}" fill-opacity="0.55" stroke="#333333" stroke-width="{width}"><title>{}: {:.1}%</title></circle>"##,
            r[i],
            fill[i],
            escape(label),
            100.0 * layout.sizes[i]
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" font-family="sans-serif">{}</text>"#,
            cx + r[i] + 3.0,
            cy + 4.0,
            escape(label)
        );
    }
}

fn svg_open(width: f64, height: f64) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    )
}

fn frame(out: &mut String, x0: f64, y0: f64) {
    let _ = writeln!(
        out,
        r##"<rect x="{x0}" y="{y0}" width="{FRAME}" height="{FRAME}" fill="none" stroke="#cccccc"/>"##
    );
}

/// One topic map as a standalone SVG document.
pub fn map_svg(layout: &Layout, labels: &[String], color_keys: Option<&[String]>) -> String {
    let mut svg = svg_open(FRAME, FRAME);
    frame(&mut svg, 0.0, 0.0);
    let centers = project(layout, 0.0, 0.0);
    map_group(&mut svg, layout, labels, &centers, &[], color_keys);
    svg.push_str("</svg>\n");
    svg
}

/// Strips the XML declaration so the SVG can be inlined into HTML.
fn inline(svg: &str) -> &str {
    svg.split_once("?>\n").map_or(svg, |(_, rest)| rest)
}

const STYLE: &str = "body{font-family:sans-serif;margin:2em;color:#222}\
table{border-collapse:collapse;margin:1em 0}\
td,th{border:1px solid #ccc;padding:3px 8px;text-align:left;vertical-align:top}\
th{background:#f3f3f3}.num{text-align:right}\
.note{color:#555;font-style:italic}";

fn html_page(title: &str, body: &str) -> String {
    format!(
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\"/>\n<title>{t}</title>\n<style>{STYLE}</style>\n</head>\n<body>\n<h1>{t}</h1>\n{body}</body>\n</html>\n",
        t = escape(title)
    )
}

fn terms_cell(terms: &[(String, f64)]) -> String {
    terms
        .iter()
        .take(TABLE_TERMS)
        .map(|(t, _)| escape(t))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Writes `<stem>.svg` and an HTML page embedding it with each topic's
/// relevance-ranked terms.
pub fn emit_map(
    dir: &Path,
    stem: &str,
    title: &str,
    layout: &Layout,
    labels: &[String],
    color_keys: Option<&[String]>,
    terms: &[Vec<(String, f64)>],
) -> Result<()> {
    let svg = map_svg(layout, labels, color_keys);
    table::write_file(&dir.join(format!("{stem}.svg")), svg.as_bytes())?;
    let mut body = String::new();
    body.push_str(inline(&svg));
    body.push_str("<table>\n<tr><th>topic</th><th>weight</th><th>most relevant terms</th></tr>\n");
    for (i, label) in labels.iter().enumerate() {
        let _ = writeln!(
            body,
            "<tr><td>{}</td><td class=\"num\">{:.1}%</td><td>{}</td></tr>",
            escape(label),
            100.0 * layout.sizes[i],
            terms.get(i).map_or(String::new(), |t| terms_cell(t))
        );
    }
    body.push_str("</table>\n");
    table::write_file(&dir.join(format!("{stem}.html")), html_page(title, &body).as_bytes())
}

pub struct MapSide<'a> {
    pub labels: &'a [String],
    pub layout: &'a Layout,
    pub terms: &'a [Vec<(String, f64)>],
}

const GAP: f64 = 80.0;
const HEADER: f64 = 30.0;

/// The two maps side by side with one line per selected pair. Topics
/// flagged as echoes get thick borders.
pub fn alignment_svg(result: &AlignmentResult, a: &MapSide, b: &MapSide) -> String {
    let width = 2.0 * FRAME + GAP;
    let mut svg = svg_open(width, FRAME + HEADER);
    let right = FRAME + GAP;
    for (x, caption) in [(0.0, "science topics"), (right, "policy topics")] {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="20" font-size="14" font-family="sans-serif" text-anchor="middle">{caption}</text>"#,
            x + FRAME / 2.0
        );
        frame(&mut svg, x, HEADER);
    }
    let ca = project(a.layout, 0.0, HEADER);
    let cb = project(b.layout, right, HEADER);
    for p in &result.pairs {
        let (x1, y1) = ca[p.topic_a];
        let (x2, y2) = cb[p.topic_b];
        let _ = writeln!(
            svg,
            r##"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="#c0392b" stroke-opacity="0.6" stroke-width="{:.2}"><title>{} to {}: {}</title></line>"##,
            1.0 + 3.0 * (1.0 - p.distance),
            escape(&a.labels[p.topic_a]),
            escape(&b.labels[p.topic_b]),
            fmt_float(p.distance)
        );
    }
    map_group(&mut svg, a.layout, a.labels, &ca, &result.echo_a, None);
    map_group(&mut svg, b.layout, b.labels, &cb, &result.echo_b, None);
    svg.push_str("</svg>\n");
    svg
}

fn margin_table(body: &mut String, heading: &str, side: &MapSide, means: &[f64], echo: &[bool]) {
    let _ = writeln!(body, "<h2>{}</h2>", escape(heading));
    body.push_str("<table>\n<tr><th>topic</th><th>mean distance</th><th>echo</th><th>most relevant terms</th></tr>\n");
    for (i, label) in side.labels.iter().enumerate() {
        let _ = writeln!(
            body,
            "<tr><td>{}</td><td class=\"num\">{}</td><td>{}</td><td>{}</td></tr>",
            escape(label),
            fmt_float(means[i]),
            if echo[i] { "yes" } else { "" },
            side.terms.get(i).map_or(String::new(), |t| terms_cell(t))
        );
    }
    body.push_str("</table>\n");
}

/// Writes `alignment.svg`, `alignment.html` and `alignment_matrix.tsv` (the
/// cross matrix with marginal means appended).
pub fn emit_alignment_report(dir: &Path, result: &AlignmentResult, a: MapSide, b: MapSide) -> Result<()> {
    let svg = alignment_svg(result, &a, &b);
    table::write_file(&dir.join("alignment.svg"), svg.as_bytes())?;
    table::write_file(
        &dir.join("alignment_matrix.tsv"),
        result.to_margin_tsv(a.labels, b.labels).as_bytes(),
    )?;

    let mut body = String::from(
        "<p class=\"note\">Topics are compared as raw term distributions, without adjusting for the \
         difference in corpus size. A short distance means shared vocabulary; it says nothing about \
         influence in either direction.</p>\n",
    );
    body.push_str(inline(&svg));
    let selection = match result.selection {
        PairSelection::Threshold(t) => format!("pairs with distance below {}", fmt_float(t)),
        PairSelection::TopN(n) => format!("the {n} closest pairs"),
    };
    let _ = writeln!(
        body,
        "<p>Lines join {}; {} selected. Mean distance over all pairs: {}.</p>",
        escape(&selection),
        result.pairs.len(),
        fmt_float(result.grand_mean)
    );
    body.push_str("<h2>Selected pairs</h2>\n<table>\n<tr><th>science</th><th>policy</th><th>distance</th></tr>\n");
    for p in &result.pairs {
        let _ = writeln!(
            body,
            "<tr><td>{}</td><td>{}</td><td class=\"num\">{}</td></tr>",
            escape(&a.labels[p.topic_a]),
            escape(&b.labels[p.topic_b]),
            fmt_float(p.distance)
        );
    }
    body.push_str("</table>\n");
    margin_table(&mut body, "Science topics", &a, &result.row_means, &result.echo_a);
    margin_table(&mut body, "Policy topics", &b, &result.col_means, &result.echo_b);
    table::write_file(
        &dir.join("alignment.html"),
        html_page("Science and policy topic alignment", &body).as_bytes(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout(coords: Vec<(f64, f64)>, sizes: Vec<f64>) -> Layout {
        Layout {
            coords,
            sizes,
            stress: 0.0,
            eigenvalues: [0.0, 0.0],
        }
    }

    #[test]
    fn areas_follow_sizes() {
        let r = radii(&[0.8, 0.2]);
        let ratio = (r[0] * r[0]) / (r[1] * r[1]);
        assert!((ratio - 4.0).abs() < 1e-12);
    }

    #[test]
    fn two_topics_two_circles() {
        let l = layout(vec![(-0.1, 0.0), (0.1, 0.0)], vec![0.5, 0.5]);
        let svg = map_svg(&l, &["S1".into(), "S2".into()], None);
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains(">S2</text>"));
    }

    #[test]
    fn escaping() {
        assert_eq!(escape("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
    }

    #[test]
    fn color_keys_share_colors() {
        let keys: Vec<String> = ["b", "a", "b"].iter().map(|s| s.to_string()).collect();
        let f = fills(3, Some(&keys));
        assert_eq!(f[0], f[2]);
        assert_ne!(f[0], f[1]);
    }

    #[test]
    fn degenerate_layout_stays_finite() {
        let l = layout(vec![(0.0, 0.0), (0.0, 0.0)], vec![0.0, 0.0]);
        let c = project(&l, 0.0, 0.0);
        assert!(c.iter().all(|p| p.0.is_finite() && p.1.is_finite()));
        assert!(radii(&l.sizes).iter().all(|r| *r > 0.0));
    }
}
