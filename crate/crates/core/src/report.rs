//! Plain-text summaries and static SVG bar charts.
//!
//! Numbers in the text summary use Rust's shortest round-trip formatting,
//! so every value parses back to exactly the float stored in the JSON.

use std::fmt::Write;

use crate::correlation::RelevanceRanking;
use crate::pipeline::RunSummary;
use crate::scalar::Scalar;
use crate::selection::ProxySet;

const LABEL_W: f64 = 170.0;
const CHART_W: f64 = 420.0;
const VALUE_W: f64 = 80.0;
const BAR_H: f64 = 18.0;
const GAP: f64 = 6.0;
const TOP: f64 = 40.0;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Horizontal bar chart, one bar per entry in the given order. Negative
/// values extend left of the zero line. An empty slice renders a chart
/// carrying a "no tasks retained" label.
pub fn bar_chart_svg(title: &str, bars: &[(String, f64)]) -> String {
    let width = LABEL_W + CHART_W + VALUE_W;
    let rows = bars.len().max(1) as f64;
    let height = TOP + rows * (BAR_H + GAP) + GAP;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="10" y="22" font-size="14" font-weight="bold">{}</text>"#, escape(title));

    if bars.is_empty() {
        let _ = writeln!(
            s,
            r##"<text class="empty" x="{}" y="{}" text-anchor="middle" fill="#555">no tasks retained</text>"##,
            width / 2.0,
            TOP + BAR_H - 4.0
        );
        s.push_str("</svg>\n");
        return s;
    }

    let lo = bars.iter().map(|b| b.1).fold(0.0_f64, f64::min);
    let hi = bars.iter().map(|b| b.1).fold(0.0_f64, f64::max);
    let span = if hi - lo > 0.0 { hi - lo } else { 1.0 };
    let x_of = |v: f64| LABEL_W + (v - lo) / span * CHART_W;
    let zero = x_of(0.0);
    let _ = writeln!(
        s,
        r##"<line x1="{zero:.2}" y1="{}" x2="{zero:.2}" y2="{}" stroke="#333"/>"##,
        TOP - 4.0,
        height - GAP
    );
    for (i, (label, value)) in bars.iter().enumerate() {
        let y = TOP + i as f64 * (BAR_H + GAP);
        let x = x_of(*value);
        let (left, w) = if x >= zero { (zero, x - zero) } else { (x, zero - x) };
        let fill = if *value >= 0.0 { "#4477aa" } else { "#cc6677" };
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LABEL_W - 6.0,
            y + BAR_H - 5.0,
            escape(label)
        );
        let _ = writeln!(
            s,
            r#"<rect class="bar" x="{left:.2}" y="{y:.2}" width="{w:.2}" height="{BAR_H}" fill="{fill}"><title>{}: {value}</title></rect>"#,
            escape(label)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{value:.4}</text>"#,
            LABEL_W + CHART_W + 6.0,
            y + BAR_H - 5.0
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Relevance of each ranked task, highest first.
pub fn relevance_svg<T: Scalar>(ranking: &RelevanceRanking<T>) -> String {
    let bars: Vec<_> = ranking.entries.iter().map(|e| (e.task.to_string(), e.relevance.as_f64())).collect();
    bar_chart_svg(&format!("{} relevance to {}", ranking.metric.name(), ranking.baseline), &bars)
}

/// Proxy weights, largest first.
pub fn weights_svg<T: Scalar>(proxies: &ProxySet<T>) -> String {
    let bars: Vec<_> = proxies.entries.iter().map(|e| (e.task.to_string(), e.weight.as_f64())).collect();
    bar_chart_svg("proxy weights", &bars)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

/// Human-readable rendering of a run summary.
pub fn summary_text(sum: &RunSummary) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "baseline: {}", sum.baseline);
    let _ = writeln!(s, "metric: {} ({})", sum.metric.name(), sum.metric_source);
    let _ = writeln!(s);

    let c = &sum.consistency;
    let _ = writeln!(s, "consistency (n={}, k={}, t={}, seed={})", c.n_sample, c.k_rounds, c.top_t, c.seed);
    let _ = writeln!(s, "{:<10} {:<22} {:<22}", "metric", "s", "r");
    for m in &c.indices {
        let _ = writeln!(s, "{:<10} {:<22} {:<22}", m.metric.name(), m.s, m.r);
    }
    let _ = writeln!(s, "selected: {}", c.selected.map_or("none", |m| m.name()));
    if !sum.published_consistency.is_empty() {
        let _ = writeln!(s);
        let _ = writeln!(s, "published consistency");
        for row in &sum.published_consistency {
            let _ = writeln!(s, "{}: {}", row.label, row.selected.map_or("none", |m| m.name()));
        }
    }

    let _ = writeln!(s);
    let _ = writeln!(s, "robustness");
    let _ = writeln!(s, "{:<14} {:<22} {:<22} {:<22}", "task", "var_noise", "var_data", "ratio");
    for r in &sum.robustness {
        let ratio = match (r.ratio, r.degenerate) {
            (Some(x), _) => x.to_string(),
            (None, Some(d)) => d.name().to_string(),
            (None, None) => "-".into(),
        };
        let _ = writeln!(s, "{:<14} {:<22} {:<22} {:<22}", r.task, r.variance_noise, r.variance_data, ratio);
    }

    let _ = writeln!(s);
    let _ = writeln!(s, "proxies");
    let _ = writeln!(s, "{:<14} {:<22} {:<22} {:<22}", "task", "relevance", "robustness", "weight");
    for p in &sum.proxies {
        let _ = writeln!(s, "{:<14} {:<22} {:<22} {:<22}", p.task, p.relevance, opt(p.robustness), p.weight);
    }

    let _ = writeln!(s);
    let _ = writeln!(s, "predictions");
    for p in &sum.predictions {
        let _ = writeln!(s, "{:<14} {}", p.checkpoint, p.predicted_score);
    }

    if !sum.comparisons.is_empty() {
        let _ = writeln!(s);
        let _ = writeln!(s, "discordant pairs against {}", sum.ground_truth.as_deref().unwrap_or("ground truth"));
        let _ = writeln!(s, "{:<14} {:<12} {:<10} {}", "ranking", "orientation", "pairs", "of");
        for c in &sum.comparisons {
            let _ = writeln!(s, "{:<14} {:<12} {:<10} {}", c.name, c.orientation, c.discordant_pairs, c.total_pairs);
        }
    }
    s
}
