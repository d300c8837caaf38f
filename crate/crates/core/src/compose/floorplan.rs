//! Top-down SVG of a solved layout.
//!
//! One meter is 100 px. Room coordinates map to `(x * 100, (depth - y) * 100)`
//! so north is up; the margin lives in the `viewBox`. Numbers are printed
//! with two decimals.

use std::fmt::Write;

use super::ComposeError;
use crate::scene::{Dir2, SceneGraph, Vec3};
use crate::solver::Layout;

pub const PX_PER_METER: f64 = 100.0;
const MARGIN_PX: f64 = 40.0;
/// Length of the facing tick beyond the front face, meters.
const TICK_M: f64 = 0.15;

fn num(v: f64) -> String {
    // Adding zero turns -0.0 into 0.0.
    format!("{:.2}", v + 0.0)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn unit(d: Dir2) -> (f64, f64) {
    match d {
        Dir2::PosX => (1.0, 0.0),
        Dir2::NegX => (-1.0, 0.0),
        Dir2::PosY => (0.0, 1.0),
        Dir2::NegY => (0.0, -1.0),
    }
}

pub fn render_floor_plan(layout: &Layout, graph: &SceneGraph) -> Result<String, ComposeError> {
    if !layout.is_solved() {
        return Err(ComposeError::UnsolvedLayout);
    }
    let room = layout.room;
    let (w, h) = (room.width_x * PX_PER_METER, room.depth_y * PX_PER_METER);
    let px = |x: f64, y: f64| (x * PX_PER_METER, (room.depth_y - y) * PX_PER_METER);

    let mut objects = Vec::new();
    for (id, p) in &layout.placements {
        let node = graph
            .node(id)
            .ok_or_else(|| ComposeError::MissingInput(format!("graph node for placement {id}")))?;
        let bottom = p.position.z - node.size.z / 2.0;
        objects.push((bottom, id, node, p));
    }
    // Lower objects first so things standing on others are drawn on top.
    objects.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)));

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="{} {} {} {}" data-px-per-meter="{}">"#,
        num(w + 2.0 * MARGIN_PX),
        num(h + 2.0 * MARGIN_PX),
        num(-MARGIN_PX),
        num(-MARGIN_PX),
        num(w + 2.0 * MARGIN_PX),
        num(h + 2.0 * MARGIN_PX),
        PX_PER_METER
    )
    .unwrap();
    writeln!(
        svg,
        r##"  <rect class="room" x="0.00" y="0.00" width="{}" height="{}" fill="none" stroke="#222222" stroke-width="3"/>"##,
        num(w),
        num(h)
    )
    .unwrap();
    for (_, id, node, p) in objects {
        let (rx, ry) = unit(p.rotation.right());
        let (fx, fy) = unit(p.rotation.front());
        let (hx, hy) = (node.size.x / 2.0, node.size.y / 2.0);
        let c: Vec3 = p.position;
        let corner = |sx: f64, sy: f64| px(c.x + sx * hx * rx + sy * hy * fx, c.y + sx * hx * ry + sy * hy * fy);
        let points: Vec<String> = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)]
            .iter()
            .map(|&(sx, sy)| {
                let (x, y) = corner(sx, sy);
                format!("{},{}", num(x), num(y))
            })
            .collect();
        let (x1, y1) = px(c.x + hy * fx, c.y + hy * fy);
        let (x2, y2) = px(c.x + (hy + TICK_M) * fx, c.y + (hy + TICK_M) * fy);
        let (tx, ty) = px(c.x, c.y);
        writeln!(svg, r#"  <g class="object" data-id="{}">"#, escape(id)).unwrap();
        writeln!(svg, "    <title>{}</title>", escape(id)).unwrap();
        writeln!(
            svg,
            r##"    <polygon points="{}" fill="#d9cbb4" fill-opacity="0.6" stroke="#5a4630" stroke-width="1.5"/>"##,
            points.join(" ")
        )
        .unwrap();
        writeln!(
            svg,
            r##"    <line class="facing" x1="{}" y1="{}" x2="{}" y2="{}" stroke="#b03a2e" stroke-width="2"/>"##,
            num(x1),
            num(y1),
            num(x2),
            num(y2)
        )
        .unwrap();
        writeln!(
            svg,
            r#"    <text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle" dominant-baseline="middle">{}</text>"#,
            num(tx),
            num(ty),
            escape(&node.name)
        )
        .unwrap();
        svg.push_str("  </g>\n");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
