//! Boundary/interior classification of experience points by hypersphere
//! intersection, and the pruned pool built from it.
//!
//! For a point `e` with action `a`, its *nearest enemy* `e'` is the closest
//! point carrying a different action (lowest index on ties). The sphere
//! centred on `e'` with radius `|e - e'|` is then searched for *witnesses*:
//! other points with action `a` lying strictly inside it. A point with no
//! witness (or no enemy at all) is a boundary point and is retained; every
//! other point is interior and dropped.
//!
//! Every point is judged against the original pool, never against a
//! partially pruned one, so the result does not depend on visiting order.
//! Total cost is quadratic in the pool size.
//!
//! [`simplex_interior_oracle`] is a brute-force reference for 2-D pools that
//! asks whether a point lies inside any triangle of same-action points. It is
//! combinatorial and exists for verification only.

use std::fmt;
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::experience::{header_value, squared_distance, ExperiencePool};

/// Default cap on pool size accepted by [`simplex_interior_oracle`].
pub const ORACLE_SIZE_CAP: usize = 200;

/// Relative tolerance of the triangle area identity.
pub const AREA_EPSILON: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PointClass {
    Boundary,
    Interior,
}

impl PointClass {
    fn tag(self) -> char {
        match self {
            PointClass::Boundary => 'B',
            PointClass::Interior => 'I',
        }
    }
}

/// Partition of a pool's indices into boundary and interior points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CondensationResult {
    pub boundary_indices: Vec<usize>,
    pub interior_indices: Vec<usize>,
}

impl CondensationResult {
    pub fn from_classes(classes: &[PointClass]) -> Self {
        let mut boundary_indices = Vec::new();
        let mut interior_indices = Vec::new();
        for (i, class) in classes.iter().enumerate() {
            match class {
                PointClass::Boundary => boundary_indices.push(i),
                PointClass::Interior => interior_indices.push(i),
            }
        }
        CondensationResult {
            boundary_indices,
            interior_indices,
        }
    }

    pub fn total(&self) -> usize {
        self.boundary_indices.len() + self.interior_indices.len()
    }

    pub fn retained(&self) -> usize {
        self.boundary_indices.len()
    }

    pub fn retained_fraction(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => self.retained() as f64 / n as f64,
        }
    }

    /// Class of every index, in index order.
    pub fn classes(&self) -> Vec<PointClass> {
        let mut classes = vec![PointClass::Interior; self.total()];
        for &i in &self.boundary_indices {
            classes[i] = PointClass::Boundary;
        }
        classes
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "#condensation retained={} total={}",
            self.retained(),
            self.total()
        )?;
        for (i, class) in self.classes().into_iter().enumerate() {
            writeln!(w, "{i} {}", class.tag())?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ASCII")
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::format(1, "missing #condensation header"))??;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("#condensation") {
            return Err(Error::format(1, "expected #condensation header"));
        }
        let retained: usize = header_value(fields.next(), "retained")?;
        let total: usize = header_value(fields.next(), "total")?;
        let mut classes = Vec::with_capacity(total);
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let lineno = n + 2;
            let (idx, tag) = line
                .trim()
                .split_once(' ')
                .ok_or_else(|| Error::format(lineno, "expected `<index> <B|I>`"))?;
            if idx.parse::<usize>().ok() != Some(classes.len()) {
                return Err(Error::format(lineno, "indices must be consecutive from 0"));
            }
            classes.push(match tag.trim() {
                "B" => PointClass::Boundary,
                "I" => PointClass::Interior,
                other => return Err(Error::format(lineno, format!("bad tag `{other}`"))),
            });
        }
        let result = Self::from_classes(&classes);
        if result.total() != total || result.retained() != retained {
            return Err(Error::format(1, "header counts disagree with body"));
        }
        Ok(result)
    }
}

impl fmt::Display for CondensationResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "retained {} of {} ({:.2}%)",
            self.retained(),
            self.total(),
            100.0 * self.retained_fraction()
        )
    }
}

/// Closest point with a different action, or `None` if every point shares
/// the action of `i`.
pub fn nearest_enemy(pool: &ExperiencePool, i: usize) -> Result<Option<usize>> {
    pool.check_index(i)?;
    Ok(nearest_enemy_unchecked(pool, i).map(|(j, _)| j))
}

fn nearest_enemy_unchecked(pool: &ExperiencePool, i: usize) -> Option<(usize, f64)> {
    let own = pool.action(i);
    let state = pool.state(i);
    let mut best: Option<(usize, f64)> = None;
    for (j, (other, action)) in pool.iter().enumerate() {
        if action == own {
            continue;
        }
        let d = squared_distance(state, other);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((j, d));
        }
    }
    best
}

/// Same-action points strictly inside the sphere centred on `enemy` whose
/// surface passes through point `i`.
///
/// `enemy` must be the nearest enemy of `i`; debug builds verify this.
pub fn witness_set(pool: &ExperiencePool, i: usize, enemy: usize) -> Result<Vec<usize>> {
    pool.check_index(i)?;
    pool.check_index(enemy)?;
    if cfg!(debug_assertions) && nearest_enemy_unchecked(pool, i).map(|(j, _)| j) != Some(enemy) {
        return Err(Error::Contract(format!(
            "{enemy} is not the nearest enemy of {i}"
        )));
    }
    let own = pool.action(i);
    let centre = pool.state(enemy);
    let radius = squared_distance(pool.state(i), centre);
    Ok(pool
        .iter()
        .enumerate()
        .filter(|&(j, (state, action))| {
            j != i && action == own && squared_distance(state, centre) < radius
        })
        .map(|(j, _)| j)
        .collect())
}

/// Boundary when there is no enemy or no witness, interior otherwise.
pub fn classify_point(pool: &ExperiencePool, i: usize) -> Result<PointClass> {
    pool.check_index(i)?;
    Ok(classify_unchecked(pool, i))
}

fn classify_unchecked(pool: &ExperiencePool, i: usize) -> PointClass {
    classify_with_enemy(pool, i, nearest_enemy_unchecked(pool, i))
}

fn classify_with_enemy(pool: &ExperiencePool, i: usize, enemy: Option<(usize, f64)>) -> PointClass {
    let Some((enemy, radius)) = enemy else {
        return PointClass::Boundary;
    };
    let own = pool.action(i);
    let centre = pool.state(enemy);
    let has_witness = pool.iter().enumerate().any(|(j, (state, action))| {
        j != i && action == own && squared_distance(state, centre) < radius
    });
    if has_witness {
        PointClass::Interior
    } else {
        PointClass::Boundary
    }
}

const QUERY_TILE: usize = 64;
const POOL_TILE: usize = 512;

/// Nearest enemies of points `start..end`, sweeping the pool in tiles so
/// each tile is reused across the whole query block while it is in cache.
/// Tiles are visited in index order, which keeps the lowest-index tie rule.
fn nearest_enemies_block(
    pool: &ExperiencePool,
    start: usize,
    end: usize,
) -> Vec<Option<(usize, f64)>> {
    let mut best = vec![(usize::MAX, f64::INFINITY); end - start];
    let actions = pool.actions();
    for tile in (0..pool.len()).step_by(POOL_TILE) {
        let tile_end = (tile + POOL_TILE).min(pool.len());
        for (q, slot) in (start..end).zip(best.iter_mut()) {
            let own = actions[q];
            let state = pool.state(q);
            #[allow(clippy::needless_range_loop)]
            for j in tile..tile_end {
                let d = if actions[j] == own {
                    f64::INFINITY
                } else {
                    squared_distance(state, pool.state(j))
                };
                if d < slot.1 {
                    *slot = (j, d);
                }
            }
        }
    }
    best.into_iter()
        .map(|(j, d)| (j != usize::MAX).then_some((j, d)))
        .collect()
}

/// Witness search for a block of points starting at `start`, tiled like
/// [`nearest_enemies_block`]. A point stops scanning once it has a witness.
fn classify_block(
    pool: &ExperiencePool,
    start: usize,
    enemies: &[Option<(usize, f64)>],
) -> Vec<PointClass> {
    let actions = pool.actions();
    // `None` once settled: no enemy, or a witness was found
    let mut open: Vec<Option<(usize, f64)>> = enemies.to_vec();
    let mut classes = vec![PointClass::Boundary; enemies.len()];
    for tile in (0..pool.len()).step_by(POOL_TILE) {
        if open.iter().all(Option::is_none) {
            break;
        }
        let tile_end = (tile + POOL_TILE).min(pool.len());
        for (k, (slot, class)) in open.iter_mut().zip(classes.iter_mut()).enumerate() {
            let Some((enemy, radius)) = *slot else {
                continue;
            };
            let i = start + k;
            let own = actions[i];
            let centre = pool.state(enemy);
            let hit = (tile..tile_end).any(|j| {
                j != i && actions[j] == own && squared_distance(pool.state(j), centre) < radius
            });
            if hit {
                *class = PointClass::Interior;
                *slot = None;
            }
        }
    }
    classes
}

/// Classifies every point of `pool` and returns the boundary points, in
/// original order, together with the partition.
///
/// The pool is expected to be deduplicated. Per-point work runs on the
/// current rayon pool; the result does not depend on the thread count.
pub fn condense(pool: &ExperiencePool) -> Result<(ExperiencePool, CondensationResult)> {
    let result = classify_all(pool)?;
    let retained = pool.select(&result.boundary_indices)?;
    Ok((retained, result))
}

/// The partition alone, without materialising the pruned pool.
pub fn classify_all(pool: &ExperiencePool) -> Result<CondensationResult> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let classes: Vec<PointClass> = (0..pool.len().div_ceil(QUERY_TILE))
        .into_par_iter()
        .flat_map_iter(|block| {
            let start = block * QUERY_TILE;
            let end = (start + QUERY_TILE).min(pool.len());
            let enemies = nearest_enemies_block(pool, start, end);
            classify_block(pool, start, &enemies)
        })
        .collect();
    Ok(CondensationResult::from_classes(&classes))
}

fn triangle_area(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs()
}

/// Area-identity containment test: `p` lies in triangle `abc` when the three
/// sub-triangles formed with `p` add up to the area of `abc`.
///
/// Degenerate (zero-area) triangles contain nothing.
pub fn triangle_contains(a: &[f64], b: &[f64], c: &[f64], p: &[f64]) -> bool {
    let whole = triangle_area(a, b, c);
    if whole == 0.0 {
        return false;
    }
    let parts = triangle_area(p, b, c) + triangle_area(a, p, c) + triangle_area(a, b, p);
    (parts - whole).abs() <= AREA_EPSILON * whole
}

/// True when point `i` lies inside a triangle spanned by three other points
/// sharing its action. 2-D pools of at most [`ORACLE_SIZE_CAP`] points only.
pub fn simplex_interior_oracle(pool: &ExperiencePool, i: usize) -> Result<bool> {
    simplex_interior_oracle_capped(pool, i, ORACLE_SIZE_CAP)
}

pub fn simplex_interior_oracle_capped(pool: &ExperiencePool, i: usize, cap: usize) -> Result<bool> {
    if pool.dim() != 2 {
        return Err(Error::UnsupportedDimension(pool.dim()));
    }
    if pool.len() > cap {
        return Err(Error::Size {
            size: pool.len(),
            cap,
        });
    }
    pool.check_index(i)?;
    let own = pool.action(i);
    let p = pool.state(i);
    let same: Vec<&[f64]> = pool
        .iter()
        .enumerate()
        .filter(|&(j, (_, action))| j != i && action == own)
        .map(|(_, (state, _))| state)
        .collect();
    for (x, a) in same.iter().enumerate() {
        for (y, b) in same.iter().enumerate().skip(x + 1) {
            for c in same.iter().skip(y + 1) {
                if triangle_contains(a, b, c, p) {
                    return Ok(true);
                }
            }
        }
    }
    Ok(false)
}
