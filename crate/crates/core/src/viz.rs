//! Static pictures of 2-D pools and policies: an SVG scatter plot and a
//! binary PPM raster of decision regions.

use std::fmt::Write as _;

use crate::condensation::{CondensationResult, PointClass};
use crate::error::{Error, Result};
use crate::experience::{ExperiencePool, Real};
use crate::policy::Policy;

/// Colours indexed by action id, wrapping after ten.
pub const PALETTE: [[u8; 3]; 10] = [
    [31, 119, 180],
    [255, 127, 14],
    [44, 160, 44],
    [214, 39, 40],
    [148, 103, 189],
    [140, 86, 75],
    [227, 119, 194],
    [127, 127, 127],
    [188, 189, 34],
    [23, 190, 207],
];

pub const DEFAULT_RASTER: (usize, usize) = (400, 400);

const CANVAS: f64 = 400.0;
const MARGIN: f64 = 20.0;

pub fn color(action: usize) -> [u8; 3] {
    PALETTE[action % PALETTE.len()]
}

fn hex([r, g, b]: [u8; 3]) -> String {
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Bounding box of a pool, widened where it would be degenerate.
pub fn pool_bounds(pool: &ExperiencePool) -> Result<Vec<(f64, f64)>> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    Ok((0..pool.dim())
        .map(|d| {
            let (lo, hi) = pool
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (s, _)| {
                    (lo.min(s[d]), hi.max(s[d]))
                });
            if hi > lo {
                (lo, hi)
            } else {
                (lo - 1.0, hi + 1.0)
            }
        })
        .collect())
}

/// Scatter plot of a 2-D pool, one circle per experience coloured by
/// action. With `classes`, boundary points are filled and interior points
/// are drawn as rings.
pub fn scatter_svg(pool: &ExperiencePool, classes: Option<&CondensationResult>) -> Result<String> {
    if pool.dim() != 2 {
        return Err(Error::UnsupportedDimension(pool.dim()));
    }
    let kinds = match classes {
        Some(c) if c.total() != pool.len() => {
            return Err(Error::Length {
                left: c.total(),
                right: pool.len(),
            })
        }
        Some(c) => c.classes(),
        None => vec![PointClass::Boundary; pool.len()],
    };
    let bounds = pool_bounds(pool)?;
    let span = CANVAS - 2.0 * MARGIN;
    let px = |v: f64, (lo, hi): (f64, f64)| (v - lo) / (hi - lo) * span;

    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{CANVAS}\" height=\"{CANVAS}\" viewBox=\"0 0 {CANVAS} {CANVAS}\">"
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    for ((s, action), kind) in pool.iter().zip(kinds) {
        let x = MARGIN + px(s[0], bounds[0]);
        let y = CANVAS - MARGIN - px(s[1], bounds[1]);
        let c = hex(color(action.0));
        let fill = match kind {
            PointClass::Boundary => c.clone(),
            PointClass::Interior => "none".into(),
        };
        let _ = writeln!(
            out,
            "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{fill}\" stroke=\"{c}\" data-action=\"{action}\"/>",
            Real(x),
            Real(y)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Colours a `width` x `height` grid over `bounds` by the action `policy`
/// picks at each cell centre. Row 0 is the top of the picture, i.e. the
/// largest second coordinate.
pub fn region_ppm<P: Policy + ?Sized>(
    policy: &P,
    bounds: &[(f64, f64)],
    width: usize,
    height: usize,
) -> Result<Vec<u8>> {
    if bounds.len() != 2 {
        return Err(Error::UnsupportedDimension(bounds.len()));
    }
    if width == 0 || height == 0 {
        return Err(Error::Contract("raster needs at least one pixel".into()));
    }
    let [(x0, x1), (y0, y1)] = [bounds[0], bounds[1]];
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    for row in 0..height {
        let y = y1 - (row as f64 + 0.5) * (y1 - y0) / height as f64;
        for col in 0..width {
            let x = x0 + (col as f64 + 0.5) * (x1 - x0) / width as f64;
            out.extend_from_slice(&color(policy.act(&[x, y])?.0));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::condensation::condense;
    use crate::experience::ActionId;
    use crate::policy::FnPolicy;

    fn fixture() -> ExperiencePool {
        ExperiencePool::from_rows(
            2,
            2,
            [
                (vec![0.0, 0.0], 0),
                (vec![1.0, 0.0], 0),
                (vec![3.0, 0.0], 1),
            ],
        )
        .unwrap()
    }

    #[test]
    fn scatter_marks_interior_points_hollow() {
        let pool = fixture();
        let (_, result) = condense(&pool).unwrap();
        let svg = scatter_svg(&pool, Some(&result)).unwrap();
        assert!(svg.starts_with("<?xml"));
        assert_eq!(svg.matches("<circle").count(), 3);
        assert_eq!(svg.matches("fill=\"none\"").count(), 1);
        assert!(svg.contains(&hex(PALETTE[0])) && svg.contains(&hex(PALETTE[1])));
        assert_eq!(svg, scatter_svg(&pool, Some(&result)).unwrap());
    }

    #[test]
    fn scatter_needs_two_dimensions() {
        let pool = ExperiencePool::from_rows(1, 2, [(vec![0.0], 0)]).unwrap();
        assert!(matches!(
            scatter_svg(&pool, None),
            Err(Error::UnsupportedDimension(1))
        ));
    }

    #[test]
    fn raster_layout() {
        // action 1 on the right half, top row is the largest y
        let right = FnPolicy(|s: &[f64]| ActionId(usize::from(s[0] > 0.0)));
        let img = region_ppm(&right, &[(-1.0, 1.0), (-1.0, 1.0)], 4, 2).unwrap();
        let header = b"P6\n4 2\n255\n";
        assert_eq!(&img[..header.len()], header);
        let px = &img[header.len()..];
        assert_eq!(px.len(), 4 * 2 * 3);
        assert_eq!(&px[0..3], &PALETTE[0]);
        assert_eq!(&px[9..12], &PALETTE[1]);
        let up = FnPolicy(|s: &[f64]| ActionId(usize::from(s[1] > 0.0)));
        let img = region_ppm(&up, &[(-1.0, 1.0), (-1.0, 1.0)], 1, 2).unwrap();
        let px = &img[b"P6\n1 2\n255\n".len()..];
        assert_eq!(px, [PALETTE[1], PALETTE[0]].concat());
        assert!(matches!(
            region_ppm(&up, &[(0.0, 1.0)], 2, 2),
            Err(Error::UnsupportedDimension(1))
        ));
    }
}
