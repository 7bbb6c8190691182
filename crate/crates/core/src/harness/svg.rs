//! Minimal SVG line charts for timeline artifacts: axes, legend, polylines.
//! The CSV next to each chart is the authoritative output.

use crate::harness::report::TimelineArtifact;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

fn polyline(points: &[(f64, f64)], color: &str, dashed: bool) -> String {
    let coords: Vec<String> = points
        .iter()
        .map(|(x, y)| format!("{:.1},{:.1}", x, y))
        .collect();
    let dash = if dashed {
        " stroke-dasharray=\"6,4\""
    } else {
        ""
    };
    format!(
        "  <polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{} points=\"{}\"/>\n",
        color,
        dash,
        coords.join(" ")
    )
}

/// Render one attack type's cumulative timeline: gold dashed, one solid line
/// per backend.
pub fn timeline_svg(timeline: &TimelineArtifact) -> String {
    let n = timeline.dates.len();
    let max_count = timeline
        .gold
        .iter()
        .chain(timeline.backends.iter().flat_map(|(_, c)| c.iter()))
        .copied()
        .max()
        .unwrap_or(0)
        .max(1) as f64;

    let plot_width = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_height = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_of = |i: usize| {
        let frac = if n <= 1 {
            0.0
        } else {
            i as f64 / (n - 1) as f64
        };
        MARGIN_LEFT + frac * plot_width
    };
    let y_of = |count: u64| MARGIN_TOP + plot_height * (1.0 - count as f64 / max_count);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"22\" font-family=\"sans-serif\" font-size=\"15\">Cumulative events: {}</text>\n",
        MARGIN_LEFT,
        timeline.attack_type
    ));
    // Axes.
    svg.push_str(&format!(
        "  <line x1=\"{l:.1}\" y1=\"{t:.1}\" x2=\"{l:.1}\" y2=\"{b:.1}\" stroke=\"#333\"/>\n",
        l = MARGIN_LEFT,
        t = MARGIN_TOP,
        b = MARGIN_TOP + plot_height
    ));
    svg.push_str(&format!(
        "  <line x1=\"{l:.1}\" y1=\"{b:.1}\" x2=\"{r:.1}\" y2=\"{b:.1}\" stroke=\"#333\"/>\n",
        l = MARGIN_LEFT,
        b = MARGIN_TOP + plot_height,
        r = MARGIN_LEFT + plot_width
    ));
    // Scale labels: y max, y zero, first and last dates.
    svg.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
        MARGIN_LEFT - 6.0,
        MARGIN_TOP + 4.0,
        max_count as u64
    ));
    svg.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">0</text>\n",
        MARGIN_LEFT - 6.0,
        MARGIN_TOP + plot_height + 4.0
    ));
    if let (Some(first), Some(last)) = (timeline.dates.first(), timeline.dates.last()) {
        svg.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            MARGIN_LEFT,
            MARGIN_TOP + plot_height + 18.0,
            first.format("%Y-%m")
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            MARGIN_LEFT + plot_width,
            MARGIN_TOP + plot_height + 18.0,
            last.format("%Y-%m")
        ));
    }

    // Gold first (dashed), then one solid polyline per backend.
    let gold_points: Vec<(f64, f64)> = timeline
        .gold
        .iter()
        .enumerate()
        .map(|(i, c)| (x_of(i), y_of(*c)))
        .collect();
    svg.push_str(&polyline(&gold_points, "#333333", true));
    for (series_idx, (_, counts)) in timeline.backends.iter().enumerate() {
        let color = PALETTE[series_idx % PALETTE.len()];
        let points: Vec<(f64, f64)> = counts
            .iter()
            .enumerate()
            .map(|(i, c)| (x_of(i), y_of(*c)))
            .collect();
        svg.push_str(&polyline(&points, color, false));
    }

    // Legend.
    let legend_x = MARGIN_LEFT + plot_width + 12.0;
    let mut legend_y = MARGIN_TOP + 10.0;
    svg.push_str(&format!(
        "  <line x1=\"{x:.1}\" y1=\"{y:.1}\" x2=\"{x2:.1}\" y2=\"{y:.1}\" stroke=\"#333333\" stroke-dasharray=\"6,4\"/>\n  <text x=\"{tx:.1}\" y=\"{ty:.1}\" font-family=\"sans-serif\" font-size=\"11\">gold</text>\n",
        x = legend_x,
        x2 = legend_x + 22.0,
        y = legend_y,
        tx = legend_x + 28.0,
        ty = legend_y + 4.0
    ));
    for (series_idx, (name, _)) in timeline.backends.iter().enumerate() {
        legend_y += 18.0;
        let color = PALETTE[series_idx % PALETTE.len()];
        svg.push_str(&format!(
            "  <line x1=\"{x:.1}\" y1=\"{y:.1}\" x2=\"{x2:.1}\" y2=\"{y:.1}\" stroke=\"{color}\"/>\n  <text x=\"{tx:.1}\" y=\"{ty:.1}\" font-family=\"sans-serif\" font-size=\"11\">{name}</text>\n",
            x = legend_x,
            x2 = legend_x + 22.0,
            y = legend_y,
            tx = legend_x + 28.0,
            ty = legend_y + 4.0
        ));
    }

    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::AttackType;
    use chrono::NaiveDate;

    #[test]
    fn svg_contains_series_and_legend() {
        let timeline = TimelineArtifact {
            attack_type: AttackType::BombingExplosion,
            dates: (1..=3)
                .map(|m| NaiveDate::from_ymd_opt(2017, m, 1).unwrap())
                .collect(),
            gold: vec![2, 2, 3],
            backends: vec![("modelx".into(), vec![1, 2, 5])],
        };
        let svg = timeline_svg(&timeline);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("modelx"));
        assert!(svg.contains("gold"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn svg_is_deterministic() {
        let timeline = TimelineArtifact {
            attack_type: AttackType::Hijacking,
            dates: vec![NaiveDate::from_ymd_opt(2017, 1, 1).unwrap()],
            gold: vec![0],
            backends: vec![],
        };
        assert_eq!(timeline_svg(&timeline), timeline_svg(&timeline));
    }
}
