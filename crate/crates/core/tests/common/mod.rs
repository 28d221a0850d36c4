#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};

use pcskel::geom::Vec2;

pub fn p(x: f64, y: f64) -> Vec2 {
    Vec2::new(x, y)
}

pub fn square() -> Vec<Vec<Vec2>> {
    vec![vec![p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)]]
}

/// Ten-point star with slightly perturbed radii so no two events coincide.
pub fn star() -> Vec<Vec2> {
    (0..10)
        .map(|k| {
            let a = FRAC_PI_2 + k as f64 * PI / 5.0;
            let r = if k % 2 == 0 { 1.0 + 0.07 * k as f64 } else { 0.4 + 0.03 * k as f64 };
            p(r * a.cos(), r * a.sin())
        })
        .collect()
}

pub fn plus() -> Vec<Vec2> {
    vec![
        p(1., 0.), p(2., 0.), p(2., 1.), p(3., 1.), p(3., 2.), p(2., 2.),
        p(2., 3.), p(1., 3.), p(1., 2.), p(0., 2.), p(0., 1.), p(1., 1.),
    ]
}

/// Non-convex inputs with their plan areas.
pub fn corpus() -> Vec<(&'static str, Vec<Vec<Vec2>>, f64)> {
    let (c, s) = (0.3f64.cos(), 0.3f64.sin());
    let rot = |q: Vec2| p(2.0 + c * (q.x - 2.0) - s * (q.y - 2.0), 2.0 + s * (q.x - 2.0) + c * (q.y - 2.0));
    let hole: Vec<Vec2> = [p(1.5, 1.5), p(2.5, 1.5), p(2.5, 2.5), p(1.5, 2.5)].into_iter().map(rot).collect();
    let star = star();
    let star_area = pcskel::geom::signed_area(&star).abs();
    vec![
        ("L", vec![vec![p(0., 0.), p(4., 0.), p(4., 1.), p(1., 1.), p(1., 3.), p(0., 3.)]], 6.0),
        ("U", vec![vec![p(0., 0.), p(3., 0.), p(3., 3.), p(2., 3.), p(2., 1.), p(1., 1.), p(1., 3.), p(0., 3.)]], 7.0),
        ("star", vec![star], star_area),
        ("plus", vec![plus()], 5.0),
        ("hole", vec![vec![p(0., 0.), p(4., 0.), p(4., 4.), p(0., 4.)], hole], 15.0),
    ]
}

pub fn edge_count(rings: &[Vec<Vec2>]) -> usize {
    rings.iter().map(Vec::len).sum()
}
