//! Static grouped-bar SVG of a [`BinnedReport`]: one group per bin, one bar
//! per system, bar height = MRR.

use std::fmt::Write as _;

use super::BinnedReport;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 70.0;
const PALETTE: [&str; 6] = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#b07aa1"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render_svg(report: &BinnedReport) -> String {
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let nbins = report.bins.len().max(1) as f64;
    let nsys = report.systems.len().max(1) as f64;
    let group_w = plot_w / nbins;
    let bar_w = group_w * 0.8 / nsys;
    let y = |v: f64| MARGIN_TOP + plot_h * (1.0 - v);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for tick in 0..=5 {
        let v = f64::from(tick) / 5.0;
        let _ = writeln!(
            s,
            r##"<line x1="{MARGIN_LEFT}" y1="{yy:.1}" x2="{x2:.1}" y2="{yy:.1}" stroke="#ddd"/><text x="{tx:.1}" y="{ty:.1}" text-anchor="end">{v:.1}</text>"##,
            yy = y(v),
            x2 = MARGIN_LEFT + plot_w,
            tx = MARGIN_LEFT - 6.0,
            ty = y(v) + 4.0,
        );
    }
    for (b, row) in report.bins.iter().enumerate() {
        let gx = MARGIN_LEFT + group_w * b as f64 + group_w * 0.1;
        for (k, sys) in report.systems.iter().enumerate() {
            if let Some(v) = row.mrr.get(sys).copied().flatten() {
                let _ = writeln!(
                    s,
                    r#"<rect x="{x:.1}" y="{top:.1}" width="{bar_w:.1}" height="{h:.1}" fill="{c}"><title>{t}: {v:.4}</title></rect>"#,
                    x = gx + bar_w * k as f64,
                    top = y(v),
                    h = plot_h * v,
                    c = PALETTE[k % PALETTE.len()],
                    t = escape(sys),
                );
            }
        }
        let cx = MARGIN_LEFT + group_w * (b as f64 + 0.5);
        let _ = writeln!(
            s,
            r##"<text x="{cx:.1}" y="{ly:.1}" text-anchor="middle">{l}</text><text x="{cx:.1}" y="{ny:.1}" text-anchor="middle" fill="#666">n={n}</text>"##,
            ly = MARGIN_TOP + plot_h + 18.0,
            ny = MARGIN_TOP + plot_h + 34.0,
            l = escape(&row.label),
            n = row.count,
        );
    }
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN_LEFT}" y1="{b:.1}" x2="{r:.1}" y2="{b:.1}" stroke="black"/><line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" y2="{b:.1}" stroke="black"/>"#,
        b = MARGIN_TOP + plot_h,
        r = MARGIN_LEFT + plot_w,
    );
    let _ = writeln!(
        s,
        r#"<text x="{x:.1}" y="{yy:.1}" text-anchor="middle">{l}</text>"#,
        x = MARGIN_LEFT + plot_w / 2.0,
        yy = HEIGHT - 12.0,
        l = escape(report.dimension.axis_label()),
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(16,{yy:.1}) rotate(-90)" text-anchor="middle">MRR</text>"#,
        yy = MARGIN_TOP + plot_h / 2.0
    );
    for (k, sys) in report.systems.iter().enumerate() {
        let ly = MARGIN_TOP + 18.0 * k as f64;
        let lx = MARGIN_LEFT + plot_w + 16.0;
        let _ = writeln!(
            s,
            r#"<rect x="{lx:.1}" y="{ly:.1}" width="12" height="12" fill="{c}"/><text x="{tx:.1}" y="{ty:.1}">{t}</text>"#,
            c = PALETTE[k % PALETTE.len()],
            tx = lx + 18.0,
            ty = ly + 10.0,
            t = escape(sys),
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{BinRow, Closed, Dimension};
    use std::collections::BTreeMap;

    #[test]
    fn one_bar_per_defined_value() {
        let row = |label: &str, a: Option<f64>, b: Option<f64>| BinRow {
            label: label.into(),
            lower: 0.0,
            upper: 1.0,
            count: 3,
            mrr: BTreeMap::from([("bm25".to_string(), a), ("rrf".to_string(), b)]),
        };
        let report = BinnedReport {
            dimension: Dimension::DayDiff,
            closed: Closed::Right,
            edges: vec![0.0, 7.0, 30.0],
            systems: vec!["bm25".into(), "rrf".into()],
            bins: vec![row("[0,7]", Some(0.5), Some(0.7)), row("(7,30]", None, Some(0.2))],
            eligible: 6,
            excluded: BTreeMap::new(),
            notes: vec![],
        };
        let svg = render_svg(&report);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<title>").count(), 3);
        assert!(svg.contains("(7,30]"));
        assert_eq!(svg, render_svg(&report));
    }
}
