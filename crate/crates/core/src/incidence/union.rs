use rayon::prelude::*;
use serde::Serialize;

use crate::geometry::{intersect_boxes, make_box, Interval, OrientedBox, Role, Scale};
use crate::partition::dyadic_sigmas;
use crate::{Result, Vec3};

/// Vertex containment is accepted up to this enlargement.
pub const SLACK_CAP: f64 = 10.0;
/// Intersection volumes must lie within `[1/BAND, BAND]` of the prediction.
pub const VOLUME_BAND: f64 = 64.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnionRow {
    pub lemma: String,
    pub part: String,
    pub sigma: f64,
    pub j_lo: f64,
    pub j_hi: f64,
    /// Containment slack, or intersection volume over the predicted volume.
    pub value: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnionReport {
    #[serde(rename = "R")]
    pub r: f64,
    /// Plate scale used for the plate statements.
    pub delta: f64,
    pub rows: Vec<UnionRow>,
    pub worst_slack: f64,
    pub worst_band: f64,
    pub pass: bool,
}

/// Smallest `f` with every vertex of every box inside `f * container`.
pub fn containment_slack(container: &OrientedBox, boxes: &[OrientedBox]) -> f64 {
    boxes
        .iter()
        .flat_map(|b| b.vertices())
        .map(|v| 2.0 * container.local(&v).amax())
        .fold(0.0, f64::max)
}

fn sub_intervals(j: Interval, step: f64) -> Result<Vec<Interval>> {
    let count = (j.len() / step).round().max(1.0) as usize;
    (0..count)
        .map(|k| Interval::new(j.lo + k as f64 * step, j.lo + (k + 1) as f64 * step))
        .collect()
}

/// Interval positions of length `len`: at both ends of `[0, 1]` and centred.
fn placements(len: f64) -> Result<Vec<Interval>> {
    let mut out = vec![Interval::new(0.0, len)?];
    if len < 1.0 - 1e-12 {
        out.push(Interval::new(1.0 - len, 1.0)?);
        let mid = ((0.5 - len / 2.0) / len).round() * len;
        if mid > 1e-12 && mid + len < 1.0 - 1e-12 {
            out.push(Interval::new(mid, mid + len)?);
        }
    }
    Ok(out)
}

fn containment_row(lemma: &str, sigma: f64, j: Interval, container: &OrientedBox, boxes: &[OrientedBox]) -> UnionRow {
    let value = containment_slack(container, boxes);
    UnionRow {
        lemma: lemma.into(),
        part: "union".into(),
        sigma,
        j_lo: j.lo,
        j_hi: j.hi,
        value,
        pass: value <= SLACK_CAP,
    }
}

fn volume_row(lemma: &str, sigma: f64, j: Interval, boxes: &[OrientedBox], predicted: f64) -> Result<UnionRow> {
    let value = intersect_boxes(boxes)?.volume() / predicted;
    Ok(UnionRow {
        lemma: lemma.into(),
        part: "intersection".into(),
        sigma,
        j_lo: j.lo,
        j_hi: j.hi,
        value,
        pass: value >= 1.0 / VOLUME_BAND && value <= VOLUME_BAND,
    })
}

/// Largest `4^-k` not exceeding `R^{-1/3}`, so that `delta^{1/2}` is dyadic.
pub fn plate_delta(r: f64) -> f64 {
    let k = (r.log2() / 6.0).ceil() as i32;
    4f64.powi(-k)
}

/// Containment and intersection statements for origin-centered tubes,
/// planks and plates over dyadic angles.
pub fn verify_union_lemmas(r: f64, sigmas: Option<&[f64]>) -> Result<UnionReport> {
    let all = dyadic_sigmas(r)?;
    let sigmas: Vec<f64> = sigmas.map(|s| s.to_vec()).unwrap_or(all);
    let step = r.powf(-1.0 / 3.0);
    let delta = plate_delta(r);
    let origin = Vec3::zeros();

    let mut jobs: Vec<(&str, f64, Interval)> = Vec::new();
    for &sigma in &sigmas {
        for j in placements(step / sigma)? {
            jobs.push(("tube-union", sigma, j));
        }
        for j in placements(sigma)? {
            jobs.push(("plank-union", sigma, j));
        }
    }
    let mut s = delta;
    while s <= 1.0 + 1e-12 {
        for j in placements(s)? {
            jobs.push(("plate-union", s, j));
        }
        s *= 2.0;
    }
    for j in placements(delta.sqrt())? {
        jobs.push(("plate-intersection", delta.sqrt(), j));
    }

    let rows: Vec<Vec<UnionRow>> = jobs
        .into_par_iter()
        .map(|(lemma, sigma, j)| -> Result<Vec<UnionRow>> {
            match lemma {
                "tube-union" => {
                    let tubes = sub_intervals(j, step)?
                        .into_iter()
                        .map(|i| make_box(Role::Tube, Some(i), Scale::R(r), origin))
                        .collect::<Result<Vec<_>>>()?;
                    let u = make_box(Role::BoxU, Some(j), Scale::SmallCap { r, sigma }, origin)?;
                    Ok(vec![containment_row(lemma, sigma, j, &u, &tubes)])
                }
                "plank-union" => {
                    let planks = sub_intervals(j, step)?
                        .into_iter()
                        .map(|i| make_box(Role::SpatialPlank, Some(i), Scale::R(r), origin))
                        .collect::<Result<Vec<_>>>()?;
                    let frame = crate::geometry::frenet_frame(j.lo)?;
                    let outer = OrientedBox::in_frame(&frame, origin, [r * sigma * sigma, r * sigma, r], Role::Generic, Some(j))?;
                    let r13 = r.cbrt();
                    let predicted = r13 * (r13 / sigma) * (r13 / (sigma * sigma));
                    Ok(vec![
                        containment_row(lemma, sigma, j, &outer, &planks),
                        volume_row(lemma, sigma, j, &planks, predicted)?,
                    ])
                }
                "plate-union" => {
                    let plates = plates_over(j, delta)?;
                    let frame = crate::geometry::frenet_frame(j.lo)?;
                    let side = delta.powi(-2);
                    let fat = OrientedBox::in_frame(&frame, origin, [side * sigma, side, side], Role::Generic, Some(j))?;
                    Ok(vec![containment_row(lemma, sigma, j, &fat, &plates)])
                }
                _ => {
                    let plates = plates_over(j, delta)?;
                    let predicted = delta.powi(-1) * delta.powf(-1.5) * delta.powi(-2);
                    Ok(vec![volume_row("plate-union", sigma, j, &plates, predicted)?])
                }
            }
        })
        .collect::<Result<_>>()?;
    let rows: Vec<UnionRow> = rows.into_iter().flatten().collect();
    let worst_slack = rows.iter().filter(|r| r.part == "union").map(|r| r.value).fold(0.0, f64::max);
    let worst_band = rows
        .iter()
        .filter(|r| r.part == "intersection")
        .map(|r| r.value.max(1.0 / r.value))
        .fold(1.0, f64::max);
    let pass = rows.iter().all(|r| r.pass);
    Ok(UnionReport { r, delta, rows, worst_slack, worst_band, pass })
}

fn plates_over(j: Interval, delta: f64) -> Result<Vec<OrientedBox>> {
    sub_intervals(j, delta)?
        .into_iter()
        .map(|i| make_box(Role::Plate, Some(i), Scale::Delta(delta), Vec3::zeros()))
        .collect()
}
