//! Finite-radius scan of `ρ(sx, sy)` over spheres `|s| = r`.

use serde::{Deserialize, Serialize};

use crate::actions::{ActionSpec, PointPattern};
use crate::error::{Error, Result};
use crate::group::text::format_element;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusReport {
    pub radius: usize,
    pub size: usize,
    pub sup: f64,
    pub inf: f64,
    pub argsup: String,
    pub arginf: String,
    /// Some `s` with `ρ(sx,sy) ≥ a`.
    pub above: Option<String>,
    /// Some `s` with `ρ(sx,sy) ≤ b`.
    pub below: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiYorkeReport {
    pub thresholds: (f64, f64),
    pub annuli: Vec<AnnulusReport>,
    /// Both thresholds are witnessed on spheres in the outer half `r > R/2`.
    pub evidence: bool,
    /// These are finite-radius observations, not statements about limits.
    pub finite_radius_only: bool,
}

pub fn li_yorke_scan(
    action: &ActionSpec,
    x: &PointPattern,
    y: &PointPattern,
    radius: usize,
    thresholds: (f64, f64),
) -> Result<LiYorkeReport> {
    let sym = action.as_symbolic()?;
    let available = x.radius().min(y.radius());
    if available < radius {
        return Err(Error::WindowExhausted { needed: radius, available });
    }
    let g = sym.group();
    let (a, b) = thresholds;
    let ball = g.ball(radius);
    let mut annuli = Vec::with_capacity(radius);
    for r in 1..=radius {
        let mut rep: Option<AnnulusReport> = None;
        for s in ball.iter().filter(|s| g.word_length(s) == r) {
            // (sx)_e = x_{s⁻¹}
            let t = g.inverse(s)?;
            let v = action.value_distance(x.value_at(&t)?, y.value_at(&t)?)?;
            let name = format_element(s);
            let cur = rep.get_or_insert_with(|| AnnulusReport {
                radius: r,
                size: 0,
                sup: f64::NEG_INFINITY,
                inf: f64::INFINITY,
                argsup: name.clone(),
                arginf: name.clone(),
                above: None,
                below: None,
            });
            cur.size += 1;
            if v > cur.sup {
                cur.sup = v;
                cur.argsup = name.clone();
            }
            if v < cur.inf {
                cur.inf = v;
                cur.arginf = name.clone();
            }
            if v >= a && cur.above.is_none() {
                cur.above = Some(name.clone());
            }
            if v <= b && cur.below.is_none() {
                cur.below = Some(name);
            }
        }
        annuli.extend(rep);
    }
    let outer = annuli.iter().filter(|an| 2 * an.radius > radius);
    let evidence = outer.clone().any(|an| an.above.is_some()) && outer.clone().any(|an| an.below.is_some());
    Ok(LiYorkeReport { thresholds, annuli, evidence, finite_radius_only: true })
}
