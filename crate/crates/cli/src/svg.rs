use std::fmt::Write as _;

const CELL: f64 = 48.0;
const MARGIN: f64 = 40.0;
const PLOT: f64 = 400.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Diverging blue–white–red scale on `[-1, 1]`, white at 0.
fn diverging(x: f64) -> String {
    let t = x.clamp(-1.0, 1.0);
    let fade = |c: f64| (255.0 - (255.0 - c) * t.abs()).round() as u8;
    let (r, g, b) = if t >= 0.0 {
        (fade(178.0), fade(24.0), fade(43.0))
    } else {
        (fade(33.0), fade(102.0), fade(172.0))
    };
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Matrix heatmap with row `j` down and column `k` across, entries printed
/// in the cells.
pub fn heatmap(entries: &[Vec<f64>], title: &str) -> String {
    let n = entries.len();
    let size = MARGIN * 2.0 + CELL * n as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{h}" font-family="sans-serif" font-size="11">"#,
        h = size + 20.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="20" font-size="14">{}</text>"#,
        escape(title)
    );
    for (j, row) in entries.iter().enumerate() {
        let y = MARGIN + j as f64 * CELL;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            MARGIN - 6.0,
            y + CELL / 2.0 + 4.0,
            j + 1
        );
        for (k, &x) in row.iter().enumerate() {
            let xpos = MARGIN + k as f64 * CELL;
            let _ = writeln!(
                s,
                r#"<rect x="{xpos}" y="{y}" width="{CELL}" height="{CELL}" fill="{}" stroke="gray"/>"#,
                diverging(x)
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle">{:.2}</text>"#,
                xpos + CELL / 2.0,
                y + CELL / 2.0 + 4.0,
                x
            );
        }
    }
    for k in 0..n {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            MARGIN + k as f64 * CELL + CELL / 2.0,
            MARGIN + n as f64 * CELL + 16.0,
            k + 1
        );
    }
    s.push_str("</svg>\n");
    s
}

fn frame(title: &str, x_range: (f64, f64), y_range: (f64, f64)) -> String {
    let mut s = String::new();
    let size = PLOT + 2.0 * MARGIN;
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="20" font-size="14">{}</text>"#,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{PLOT}" height="{PLOT}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="{}">{:.3}</text><text x="{}" y="{}" text-anchor="end">{:.3}</text>"#,
        MARGIN + PLOT + 14.0,
        x_range.0,
        MARGIN + PLOT,
        MARGIN + PLOT + 14.0,
        x_range.1
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text><text x="{}" y="{}" text-anchor="end">{:.3}</text>"#,
        MARGIN - 4.0,
        MARGIN + PLOT,
        y_range.0,
        MARGIN - 4.0,
        MARGIN + 8.0,
        y_range.1
    );
    s
}

fn project(p: (f64, f64), xr: (f64, f64), yr: (f64, f64)) -> (f64, f64) {
    let sx = if xr.1 > xr.0 {
        (p.0 - xr.0) / (xr.1 - xr.0)
    } else {
        0.5
    };
    let sy = if yr.1 > yr.0 {
        (p.1 - yr.0) / (yr.1 - yr.0)
    } else {
        0.5
    };
    (MARGIN + sx * PLOT, MARGIN + (1.0 - sy) * PLOT)
}

/// Scatter plot of points in the unit square.
pub fn scatter(points: &[(f64, f64)], title: &str) -> String {
    let (xr, yr) = ((0.0, 1.0), (0.0, 1.0));
    let mut s = frame(title, xr, yr);
    for &p in points {
        let (x, y) = project(p, xr, yr);
        let _ = writeln!(
            s,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="1.2" fill-opacity="0.5"/>"#
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Line plot of named curves over a common frame.
pub fn curves(series: &[(&str, Vec<(f64, f64)>)], title: &str) -> String {
    const COLORS: [&str; 4] = ["#b2182b", "#2166ac", "#1b7837", "#762a83"];
    let all = series.iter().flat_map(|(_, pts)| pts.iter());
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in all.clone() {
        lo = lo.min(p.1);
        hi = hi.max(p.1);
    }
    let xr = (0.0, 1.0);
    let yr = (lo, hi);
    let mut s = frame(title, xr, yr);
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts
            .iter()
            .map(|&p| {
                let (x, y) = project(p, xr, yr);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            path.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            MARGIN + PLOT - 60.0,
            MARGIN + 16.0 + 14.0 * i as f64,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}
