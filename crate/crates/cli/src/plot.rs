//! Archive heatmaps: one Voronoi region per centroid, colored by the
//! elite's fitness on the viridis scale.

use std::fmt::Write as _;
use std::path::Path;

use qdrl_core::archive::{Archive, Centroids};

use crate::CliError;

const VIRIDIS: [[u8; 3]; 9] = [
    [0x44, 0x01, 0x54],
    [0x47, 0x2d, 0x7b],
    [0x3b, 0x52, 0x8b],
    [0x2c, 0x72, 0x8e],
    [0x21, 0x91, 0x8c],
    [0x28, 0xae, 0x80],
    [0x5e, 0xc9, 0x62],
    [0xad, 0xdc, 0x30],
    [0xfd, 0xe7, 0x25],
];

/// Color at `t ∈ [0, 1]`, linear between the anchors.
pub fn viridis(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0) * (VIRIDIS.len() - 1) as f64;
    let i = (t.floor() as usize).min(VIRIDIS.len() - 2);
    let f = t - i as f64;
    let mut out = [0u8; 3];
    for c in 0..3 {
        let (a, b) = (VIRIDIS[i][c] as f64, VIRIDIS[i + 1][c] as f64);
        out[c] = (a + f * (b - a)).round() as u8;
    }
    out
}

fn hex([r, g, b]: [u8; 3]) -> String {
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Region of the unit square closer to centroid `i` than to any other.
pub fn voronoi_cell(centroids: &Centroids, i: usize) -> Vec<[f64; 2]> {
    let mut poly = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let p = centroids.point(i);
    for (j, q) in centroids.iter().enumerate() {
        if j == i || poly.is_empty() {
            continue;
        }
        // keep points x with (q − p)·x ≤ (‖q‖² − ‖p‖²) / 2
        let n = [q[0] - p[0], q[1] - p[1]];
        let c = 0.5 * (q[0] * q[0] + q[1] * q[1] - p[0] * p[0] - p[1] * p[1]);
        poly = clip(&poly, n, c);
    }
    poly
}

fn clip(poly: &[[f64; 2]], n: [f64; 2], c: f64) -> Vec<[f64; 2]> {
    let side = |v: &[f64; 2]| n[0] * v[0] + n[1] * v[1] - c;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for k in 0..poly.len() {
        let (a, b) = (poly[k], poly[(k + 1) % poly.len()]);
        let (sa, sb) = (side(&a), side(&b));
        if sa <= 0.0 {
            out.push(a);
        }
        if (sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0) {
            let t = sa / (sa - sb);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

const SIZE: f64 = 400.0;
const MARGIN: f64 = 50.0;

fn to_px(v: [f64; 2]) -> (f64, f64) {
    (MARGIN + v[0] * SIZE, MARGIN + (1.0 - v[1]) * SIZE)
}

pub fn render_svg(archive: &Archive) -> Result<String, CliError> {
    let centroids = archive.centroids();
    if centroids.dim() != 2 {
        return Err(CliError::Invalid(format!(
            "plots need 2-D descriptors, archive has {}",
            centroids.dim()
        )));
    }
    let fitness: Vec<f64> = archive.iter().map(|(_, e)| e.fitness).collect();
    let lo = fitness.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = fitness.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = |f: f64| if hi > lo { (f - lo) / (hi - lo) } else { 1.0 };

    let (width, height) = (MARGIN * 2.0 + SIZE + 90.0, MARGIN * 2.0 + SIZE);
    let mut svg = String::new();
    let w = &mut svg;
    writeln!(w, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#).unwrap();
    writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(w, r#"<g id="cells">"#).unwrap();
    for i in 0..centroids.count() {
        let points = voronoi_cell(centroids, i)
            .into_iter()
            .map(|v| {
                let (x, y) = to_px(v);
                format!("{x:.2},{y:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ");
        match archive.get(i) {
            Some(e) => writeln!(
                w,
                r#"<polygon class="cell" data-cell="{i}" data-fitness="{}" fill="{}" stroke="{}" stroke-width="0.3" points="{points}"/>"#,
                e.fitness,
                hex(viridis(scale(e.fitness))),
                hex(viridis(scale(e.fitness))),
            ),
            None => writeln!(
                w,
                r##"<polygon class="empty" data-cell="{i}" fill="none" stroke="#d0d0d0" stroke-width="0.3" points="{points}"/>"##
            ),
        }
        .unwrap();
    }
    writeln!(w, "</g>").unwrap();

    // axes
    writeln!(w, r#"<g id="axes" stroke="black" fill="none">"#).unwrap();
    writeln!(w, r#"<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}"/>"#).unwrap();
    for k in 0..=4 {
        let v = k as f64 / 4.0;
        let (x, _) = to_px([v, 0.0]);
        let (_, y) = to_px([0.0, v]);
        let base = MARGIN + SIZE;
        writeln!(w, r#"<line x1="{x}" y1="{base}" x2="{x}" y2="{}"/>"#, base + 5.0).unwrap();
        writeln!(w, r#"<line x1="{}" y1="{y}" x2="{MARGIN}" y2="{y}"/>"#, MARGIN - 5.0).unwrap();
    }
    writeln!(w, "</g>").unwrap();
    writeln!(w, r#"<g id="labels" fill="black">"#).unwrap();
    for k in 0..=4 {
        let v = k as f64 / 4.0;
        let (x, _) = to_px([v, 0.0]);
        let (_, y) = to_px([0.0, v]);
        writeln!(w, r#"<text x="{x}" y="{}" text-anchor="middle">{v}</text>"#, MARGIN + SIZE + 18.0).unwrap();
        writeln!(w, r#"<text x="{}" y="{}" text-anchor="end">{v}</text>"#, MARGIN - 8.0, y + 4.0).unwrap();
    }
    writeln!(w, r#"<text x="{}" y="{}" text-anchor="middle">descriptor 0</text>"#, MARGIN + SIZE / 2.0, height - 8.0).unwrap();
    writeln!(w, r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">descriptor 1</text>"#, MARGIN + SIZE / 2.0, MARGIN + SIZE / 2.0).unwrap();
    writeln!(w, "</g>").unwrap();

    // legend: vertical bar, low fitness at the bottom
    let (lx, ly, lh) = (MARGIN + SIZE + 30.0, MARGIN, SIZE);
    writeln!(w, r#"<defs><linearGradient id="fitness-scale" x1="0" y1="1" x2="0" y2="0">"#).unwrap();
    for (k, c) in VIRIDIS.iter().enumerate() {
        let offset = k as f64 / (VIRIDIS.len() - 1) as f64;
        writeln!(w, r#"<stop offset="{offset}" stop-color="{}"/>"#, hex(*c)).unwrap();
    }
    writeln!(w, "</linearGradient></defs>").unwrap();
    writeln!(
        w,
        r#"<g id="legend" data-scale="viridis" data-min="{}" data-max="{}">"#,
        if archive.is_empty() { String::new() } else { lo.to_string() },
        if archive.is_empty() { String::new() } else { hi.to_string() },
    )
    .unwrap();
    writeln!(w, r#"<rect x="{lx}" y="{ly}" width="16" height="{lh}" fill="url(#fitness-scale)" stroke="black"/>"#).unwrap();
    writeln!(w, r#"<text x="{lx}" y="{}">fitness</text>"#, ly - 10.0).unwrap();
    if !archive.is_empty() {
        writeln!(w, r#"<text x="{}" y="{}">{hi:.1}</text>"#, lx + 20.0, ly + 10.0).unwrap();
        writeln!(w, r#"<text x="{}" y="{}">{lo:.1}</text>"#, lx + 20.0, ly + lh).unwrap();
    }
    writeln!(w, "</g>").unwrap();
    writeln!(w, "</svg>").unwrap();
    Ok(svg)
}

pub fn plot_archive(archive_dir: &Path, output: &Path) -> Result<(), CliError> {
    let archive = Archive::load(archive_dir)?;
    let svg = render_svg(&archive)?;
    std::fs::write(output, svg).map_err(CliError::io(output))
}
