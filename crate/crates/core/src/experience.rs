//! States, actions and experience pools, plus the metric every other module
//! measures with.
//!
//! A pool stores its states row-major in one flat buffer so the quadratic
//! passes in [`crate::condensation`] stay cache friendly.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Index of a discrete action.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionId(pub usize);

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A finite, non-empty real vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(Vec<f64>);

impl StateVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::UnsupportedDimension(0));
        }
        check_finite(&values)?;
        Ok(StateVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for StateVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// One recorded decision of a teacher.
#[derive(Clone, Debug, PartialEq)]
pub struct Experience {
    pub state: StateVector,
    pub action: ActionId,
}

/// Formats a real in shortest round-trip form, switching to exponent
/// notation for very large or very small magnitudes.
#[derive(Clone, Copy, Debug)]
pub struct Real(pub f64);

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.0;
        let a = v.abs();
        if a == 0.0 || (1e-5..1e16).contains(&a) || !v.is_finite() {
            write!(f, "{v}")
        } else {
            write!(f, "{v:e}")
        }
    }
}

pub(crate) fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(position) => Err(Error::NonFinite {
            position,
            value: values[position],
        }),
        None => Ok(()),
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}

/// Squared Euclidean distance without any checks.
///
/// All nearest-neighbour comparisons in the crate go through this function so
/// that distance ties resolve identically in every backend.
#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Euclidean distance between two states of the same dimension.
pub fn distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dim(a.len(), b.len())?;
    check_finite(a)?;
    check_finite(b)?;
    Ok(squared_distance(a, b).sqrt())
}

/// An ordered, dimension-consistent collection of experiences.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperiencePool {
    dim: usize,
    action_count: usize,
    states: Vec<f64>,
    actions: Vec<ActionId>,
}

impl ExperiencePool {
    pub fn new(dim: usize, action_count: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::UnsupportedDimension(0));
        }
        if action_count == 0 {
            return Err(Error::Action {
                action: 0,
                count: 0,
            });
        }
        Ok(ExperiencePool {
            dim,
            action_count,
            states: Vec::new(),
            actions: Vec::new(),
        })
    }

    /// Builds a pool from `(state, action)` rows, validating each one.
    pub fn from_rows<I, S>(dim: usize, action_count: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: AsRef<[f64]>,
    {
        let mut pool = ExperiencePool::new(dim, action_count)?;
        for (state, action) in rows {
            pool.push(state.as_ref(), ActionId(action))?;
        }
        Ok(pool)
    }

    pub fn from_experiences(
        dim: usize,
        action_count: usize,
        experiences: &[Experience],
    ) -> Result<Self> {
        Self::from_rows(
            dim,
            action_count,
            experiences.iter().map(|e| (e.state.as_slice(), e.action.0)),
        )
    }

    pub fn push(&mut self, state: &[f64], action: ActionId) -> Result<()> {
        check_dim(self.dim, state.len())?;
        check_finite(state)?;
        if action.0 >= self.action_count {
            return Err(Error::Action {
                action: action.0,
                count: self.action_count,
            });
        }
        // -0.0 and 0.0 are the same state
        self.states.extend(state.iter().map(|v| v + 0.0));
        self.actions.push(action);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Panics if `i` is out of range.
    #[inline]
    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    /// Panics if `i` is out of range.
    #[inline]
    pub fn action(&self, i: usize) -> ActionId {
        self.actions[i]
    }

    pub fn actions(&self) -> &[ActionId] {
        &self.actions
    }

    pub fn experience(&self, i: usize) -> Result<Experience> {
        self.check_index(i)?;
        Ok(Experience {
            state: StateVector(self.state(i).to_vec()),
            action: self.actions[i],
        })
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (&[f64], ActionId)> + '_ {
        self.states
            .chunks_exact(self.dim)
            .zip(self.actions.iter().copied())
    }

    pub(crate) fn check_index(&self, i: usize) -> Result<()> {
        if i < self.len() {
            Ok(())
        } else {
            Err(Error::Index {
                index: i,
                len: self.len(),
            })
        }
    }

    /// Number of distinct actions that actually occur in the pool.
    pub fn distinct_actions(&self) -> usize {
        self.actions.iter().collect::<HashSet<_>>().len()
    }

    /// The pool restricted to `indices`, in the order given.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut out = ExperiencePool::new(self.dim, self.action_count)?;
        out.states.reserve(indices.len() * self.dim);
        for &i in indices {
            self.check_index(i)?;
            out.states.extend_from_slice(self.state(i));
            out.actions.push(self.actions[i]);
        }
        Ok(out)
    }

    /// Collapses exact duplicate `(state, action)` pairs onto their first
    /// occurrence, keeping survivors in order.
    pub fn dedupe(&self) -> Self {
        let mut seen = HashSet::with_capacity(self.len());
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| seen.insert(self.key(i)))
            .collect();
        self.select(&keep).expect("indices come from this pool")
    }

    pub(crate) fn key(&self, i: usize) -> (Vec<u64>, usize) {
        (
            self.state(i).iter().map(|v| v.to_bits()).collect(),
            self.actions[i].0,
        )
    }

    /// Serializes the pool in the line-oriented pool format.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "#pool dim={} actions={}", self.dim, self.action_count)?;
        for (state, action) in self.iter() {
            for &v in state {
                write!(w, "{},", Real(v))?;
            }
            writeln!(w, "{action}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("pool text is ASCII")
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let header = loop {
            match lines.next() {
                Some((_, line)) => {
                    let line = line?;
                    if !line.trim().is_empty() {
                        break line;
                    }
                }
                None => return Err(Error::format(1, "missing #pool header")),
            }
        };
        let (dim, action_count) = parse_pool_header(&header)?;
        let mut pool = ExperiencePool::new(dim, action_count)?;
        for (n, line) in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            parse_pool_row(&mut pool, line).map_err(|e| Error::format(n + 1, e.to_string()))?;
        }
        Ok(pool)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::read_from(text.as_bytes())
    }
}

fn parse_pool_header(line: &str) -> Result<(usize, usize)> {
    let mut fields = line.split_whitespace();
    if fields.next() != Some("#pool") {
        return Err(Error::format(1, "expected `#pool dim=<d> actions=<k>`"));
    }
    let dim = header_value(fields.next(), "dim")?;
    let actions = header_value(fields.next(), "actions")?;
    Ok((dim, actions))
}

pub(crate) fn header_value<T: std::str::FromStr>(field: Option<&str>, key: &str) -> Result<T> {
    field
        .and_then(|f| f.strip_prefix(key))
        .and_then(|f| f.strip_prefix('='))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::format(1, format!("missing or malformed `{key}=`")))
}

fn parse_pool_row(pool: &mut ExperiencePool, line: &str) -> Result<()> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    check_dim(pool.dim + 1, fields.len())?;
    let (state, action) = fields.split_at(pool.dim);
    let state = state
        .iter()
        .map(|f| {
            f.parse::<f64>()
                .map_err(|_| Error::Contract(format!("bad real `{f}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let action = action[0]
        .parse::<usize>()
        .map_err(|_| Error::Contract(format!("bad action `{}`", action[0])))?;
    pool.push(&state, ActionId(action))
}

/// Per-dimension min–max scaling onto `[0, 1]`.
///
/// Constant dimensions map to 0.
#[derive(Clone, Debug, PartialEq)]
pub struct MinMaxScaling {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaling {
    pub fn fit(pool: &ExperiencePool) -> Result<Self> {
        if pool.is_empty() {
            return Err(Error::EmptyPool);
        }
        let mut min = vec![f64::INFINITY; pool.dim()];
        let mut max = vec![f64::NEG_INFINITY; pool.dim()];
        for (state, _) in pool.iter() {
            for (k, &v) in state.iter().enumerate() {
                min[k] = min[k].min(v);
                max[k] = max[k].max(v);
            }
        }
        Ok(MinMaxScaling { min, max })
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn apply(&self, state: &[f64]) -> Vec<f64> {
        state
            .iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&v, (&lo, &hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
            .collect()
    }

    pub fn apply_pool(&self, pool: &ExperiencePool) -> Result<ExperiencePool> {
        check_dim(self.dim(), pool.dim())?;
        ExperiencePool::from_rows(
            pool.dim(),
            pool.action_count(),
            pool.iter().map(|(s, a)| (self.apply(s), a.0)),
        )
    }

    /// `min:max` pairs joined by commas.
    pub fn to_text(&self) -> String {
        self.min
            .iter()
            .zip(&self.max)
            .map(|(&lo, &hi)| format!("{}:{}", Real(lo), Real(hi)))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut min = Vec::new();
        let mut max = Vec::new();
        for pair in text.split(',') {
            let (lo, hi) = pair
                .split_once(':')
                .ok_or_else(|| Error::format(1, format!("bad scaling pair `{pair}`")))?;
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::format(1, format!("bad scaling bound `{s}`")))
            };
            min.push(parse(lo)?);
            max.push(parse(hi)?);
        }
        check_finite(&min)?;
        check_finite(&max)?;
        Ok(MinMaxScaling { min, max })
    }
}
