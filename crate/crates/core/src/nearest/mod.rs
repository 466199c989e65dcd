//! The nearest-boundary student: answer every query with the action of the
//! closest retained experience, and report which experience that was.
//!
//! Three interchangeable search backends are provided. They are all exact
//! and resolve distance ties towards the lowest pool index, so a model's
//! answers never depend on the backend it was fitted with.

mod balltree;
mod kdtree;

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

pub use balltree::BallTree;
pub use kdtree::KdTree;

use crate::error::{Error, Result};
use crate::experience::{
    check_dim, check_finite, header_value, squared_distance, ActionId, ExperiencePool,
    MinMaxScaling,
};
use crate::policy::Policy;

/// Maximum number of points stored in a tree leaf.
pub const LEAF_SIZE: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Best {
    pub index: usize,
    pub sq_dist: f64,
}

impl Best {
    fn none() -> Self {
        Best {
            index: usize::MAX,
            sq_dist: f64::INFINITY,
        }
    }

    #[inline]
    fn offer(&mut self, index: usize, sq_dist: f64) {
        if sq_dist < self.sq_dist || (sq_dist == self.sq_dist && index < self.index) {
            self.index = index;
            self.sq_dist = sq_dist;
        }
    }
}

/// Linear scan; the reference every index is checked against.
pub fn brute_nearest(points: &ExperiencePool, query: &[f64]) -> Option<(usize, f64)> {
    let mut best = Best::none();
    for (i, (state, _)) in points.iter().enumerate() {
        best.offer(i, squared_distance(state, query));
    }
    (best.index != usize::MAX).then_some((best.index, best.sq_dist))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Backend {
    Brute,
    KdTree,
    BallTree,
}

impl Backend {
    pub const ALL: [Backend; 3] = [Backend::Brute, Backend::KdTree, Backend::BallTree];

    pub fn name(self) -> &'static str {
        match self {
            Backend::Brute => "brute",
            Backend::KdTree => "kdtree",
            Backend::BallTree => "balltree",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brute" => Ok(Backend::Brute),
            "kdtree" | "kd" => Ok(Backend::KdTree),
            "balltree" | "ball" => Ok(Backend::BallTree),
            other => Err(Error::Name(format!("backend `{other}`"))),
        }
    }
}

/// Which stored experience a prediction rests on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Explanation {
    pub nearest_index: usize,
    pub nearest_distance: f64,
}

#[derive(Clone, Debug)]
enum Index {
    Brute,
    Kd(KdTree),
    Ball(BallTree),
}

#[derive(Clone, Debug)]
pub struct NearestBoundaryModel {
    pool: ExperiencePool,
    backend: Backend,
    scaling: Option<MinMaxScaling>,
    // `pool` in search coordinates; equal to `pool` when unscaled
    search: ExperiencePool,
    index: Index,
}

impl NearestBoundaryModel {
    pub fn fit(pool: ExperiencePool, backend: Backend) -> Result<Self> {
        Self::build(pool, backend, None)
    }

    /// Fits a model that measures distances after min–max scaling.
    /// Explanation distances are then in scaled units.
    pub fn fit_scaled(
        pool: ExperiencePool,
        backend: Backend,
        scaling: MinMaxScaling,
    ) -> Result<Self> {
        check_dim(pool.dim(), scaling.dim())?;
        Self::build(pool, backend, Some(scaling))
    }

    fn build(
        pool: ExperiencePool,
        backend: Backend,
        scaling: Option<MinMaxScaling>,
    ) -> Result<Self> {
        if pool.is_empty() {
            return Err(Error::EmptyPool);
        }
        let search = match &scaling {
            Some(s) => s.apply_pool(&pool)?,
            None => pool.clone(),
        };
        let index = match backend {
            Backend::Brute => Index::Brute,
            Backend::KdTree => Index::Kd(KdTree::build(&search)),
            Backend::BallTree => Index::Ball(BallTree::build(&search)),
        };
        Ok(NearestBoundaryModel {
            pool,
            backend,
            scaling,
            search,
            index,
        })
    }

    pub fn pool(&self) -> &ExperiencePool {
        &self.pool
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn scaling(&self) -> Option<&MinMaxScaling> {
        self.scaling.as_ref()
    }

    pub fn predict(&self, state: &[f64]) -> Result<(ActionId, Explanation)> {
        check_dim(self.pool.dim(), state.len())?;
        check_finite(state)?;
        let scaled;
        let query = match &self.scaling {
            Some(s) => {
                scaled = s.apply(state);
                &scaled[..]
            }
            None => state,
        };
        let best = match &self.index {
            Index::Brute => {
                let (index, sq_dist) =
                    brute_nearest(&self.search, query).expect("pool is non-empty");
                Best { index, sq_dist }
            }
            Index::Kd(tree) => tree.nearest(&self.search, query),
            Index::Ball(tree) => tree.nearest(&self.search, query),
        };
        Ok((
            self.pool.action(best.index),
            Explanation {
                nearest_index: best.index,
                nearest_distance: best.sq_dist.sqrt(),
            },
        ))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "#nbmodel backend={}", self.backend)?;
        if let Some(s) = &self.scaling {
            write!(w, " scale={}", s.to_text())?;
        }
        writeln!(w)?;
        self.pool.write_to(w)
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ASCII")
    }

    /// Reads a model file and rebuilds its index.
    pub fn read_from<R: BufRead>(mut r: R) -> Result<Self> {
        let mut header = String::new();
        r.read_line(&mut header)?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("#nbmodel") {
            return Err(Error::format(1, "expected `#nbmodel backend=<b>`"));
        }
        let backend: String = header_value(fields.next(), "backend")?;
        let backend = backend.parse()?;
        let scaling = match fields.next() {
            Some(f) => {
                let text: String = header_value(Some(f), "scale")?;
                Some(MinMaxScaling::parse(&text)?)
            }
            None => None,
        };
        let pool = ExperiencePool::read_from(r)?;
        match scaling {
            Some(s) => Self::fit_scaled(pool, backend, s),
            None => Self::fit(pool, backend),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::read_from(text.as_bytes())
    }
}

impl Policy for NearestBoundaryModel {
    fn act(&self, state: &[f64]) -> Result<ActionId> {
        self.predict(state).map(|(a, _)| a)
    }
}
