//! Seeded multi-target generators.
//!
//! Every family computes a single-output base response `f(x)` and derives
//! target `t` as `a_t * f(x) + b_t + noise`, with `a_t ~ U[0.5, 2]` and
//! `b_t ~ U[-5, 5]` drawn once per stream. The targets are therefore
//! affine in a shared response and strongly inter-correlated.
//!
//! Families:
//!
//! * `friedman_mt`: ten inputs `x ~ U[0, 1]`, of which five are relevant,
//!   `f(x) = 10 sin(π x1 x2) + 20 (x3 - 0.5)² + 10 x4 + 5 x5`.
//!   Under drift the relevant inputs swap roles: `f(x4, x5, x1, x2, x3)`.
//! * `plane_mt`: ten inputs, `x1 ∈ {-1, 1}` and `x2..x10 ∈ {-1, 0, 1}`,
//!   `f = 3 + 3 x2 + 2 x3 + x4` when `x1 = 1`, else `-3 + 3 x5 + 2 x6 + x7`.
//!   Under drift the two groups `(x2, x3, x4)` and `(x5, x6, x7)` swap.
//! * `mv_like`: six numeric and four nominal inputs
//!   (`u1 ~ U[-5, 5]`, `u2 ~ U[-15, -10]`, `u3 = u1 + 2 u2`, `u4 ~ U[-1, 1]`,
//!   `u5 ~ U[0, 1]`, `u6 ~ U[0, 1]` irrelevant;
//!   `c1 = green` iff `u1 > 0` else `red`;
//!   `c2 ∈ {brown, red}` is `brown` with probability 0.4 when `c1 = green`, else `red`;
//!   `c3 = large` iff `u4 > 0.5` else `normal`;
//!   `c4 ∈ {a, b, c}` uniform).
//!   `f = (c1 = green ? 10 u4 + u3 / 2 : 5 u5 - u1 u4) + [0, 2, -2][c4] + (c3 = large ? 3 : 0)
//!   + (c2 = brown ? 1 : 0)`. Under drift the two `c1` branches swap.
//!
//! Drift switches a target's response to the drifted form from its drift
//! position onward: all targets at one position (synchronous) or each target
//! at its own position (asynchronous).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::StreamSource;
use crate::error::{Error, Result};
use crate::schema::{FeatureSpec, Instance, StreamSchema, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    FriedmanMt,
    PlaneMt,
    MvLike,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftMode {
    Synchronous,
    Asynchronous,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Drift {
    pub mode: DriftMode,
    /// One index for synchronous drift, one per target for asynchronous.
    pub positions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub family: Family,
    pub n_examples: usize,
    #[serde(default = "default_targets")]
    pub d: usize,
    #[serde(default)]
    pub noise_sd: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<Drift>,
    #[serde(default)]
    pub seed: u64,
}

fn default_targets() -> usize {
    4
}

impl GeneratorSpec {
    pub fn new(family: Family, n_examples: usize, d: usize, seed: u64) -> Self {
        Self {
            family,
            n_examples,
            d,
            noise_sd: 0.0,
            drift: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Config("generator needs at least one target".into()));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::Config(format!(
                "noise_sd must be finite and >= 0, got {}",
                self.noise_sd
            )));
        }
        if let Some(drift) = &self.drift {
            let expected = match drift.mode {
                DriftMode::Synchronous => 1,
                DriftMode::Asynchronous => self.d,
            };
            if drift.positions.len() != expected {
                return Err(Error::Config(format!(
                    "{:?} drift needs {expected} position(s), got {}",
                    drift.mode,
                    drift.positions.len()
                )));
            }
            if let Some(&p) = drift.positions.iter().find(|&&p| p == 0 || p >= self.n_examples) {
                return Err(Error::Config(format!(
                    "drift position {p} must lie strictly inside the {}-example stream",
                    self.n_examples
                )));
            }
        }
        Ok(())
    }

    pub fn schema(&self) -> StreamSchema {
        let targets = (1..=self.d).map(|t| format!("y{t}")).collect();
        let features = match self.family {
            Family::FriedmanMt | Family::PlaneMt => (1..=10).map(|j| FeatureSpec::numeric(format!("x{j}"))).collect(),
            Family::MvLike => {
                let mut f: Vec<_> = (1..=6).map(|j| FeatureSpec::numeric(format!("u{j}"))).collect();
                f.push(FeatureSpec::nominal("c1", ["green", "red"]));
                f.push(FeatureSpec::nominal("c2", ["brown", "red"]));
                f.push(FeatureSpec::nominal("c3", ["normal", "large"]));
                f.push(FeatureSpec::nominal("c4", ["a", "b", "c"]));
                f
            }
        };
        StreamSchema::new(features, targets).expect("generator schemas are valid")
    }

    pub fn stream(&self) -> Result<GeneratorStream> {
        GeneratorStream::new(self.clone())
    }
}

pub fn friedman(x: &[f64]) -> f64 {
    10.0 * (std::f64::consts::PI * x[0] * x[1]).sin() + 20.0 * (x[2] - 0.5).powi(2) + 10.0 * x[3] + 5.0 * x[4]
}

fn friedman_drifted(x: &[f64]) -> f64 {
    friedman(&[x[3], x[4], x[0], x[1], x[2]])
}

pub fn plane(x: &[f64]) -> f64 {
    if x[0] == 1.0 {
        3.0 + 3.0 * x[1] + 2.0 * x[2] + x[3]
    } else {
        -3.0 + 3.0 * x[4] + 2.0 * x[5] + x[6]
    }
}

fn plane_drifted(x: &[f64]) -> f64 {
    let mut swapped = x.to_vec();
    swapped[1..4].copy_from_slice(&x[4..7]);
    swapped[4..7].copy_from_slice(&x[1..4]);
    plane(&swapped)
}

/// `u` holds u1..u6, `c` the category indices of c1..c4.
pub fn mv(u: &[f64], c: &[u32], drifted: bool) -> f64 {
    let green = (c[0] == 0) != drifted;
    let core = if green {
        10.0 * u[3] + u[2] / 2.0
    } else {
        5.0 * u[4] - u[0] * u[3]
    };
    core + [0.0, 2.0, -2.0][c[3] as usize] + if c[2] == 1 { 3.0 } else { 0.0 } + if c[1] == 0 { 1.0 } else { 0.0 }
}

pub struct GeneratorStream {
    spec: GeneratorSpec,
    schema: StreamSchema,
    rng: ChaCha8Rng,
    noise: Option<Normal<f64>>,
    scale: Vec<f64>,
    offset: Vec<f64>,
    emitted: usize,
}

impl GeneratorStream {
    pub fn new(spec: GeneratorSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let scale = (0..spec.d).map(|_| rng.random_range(0.5..2.0)).collect();
        let offset = (0..spec.d).map(|_| rng.random_range(-5.0..5.0)).collect();
        let noise = (spec.noise_sd > 0.0).then(|| Normal::new(0.0, spec.noise_sd).expect("validated noise"));
        Ok(Self {
            schema: spec.schema(),
            spec,
            rng,
            noise,
            scale,
            offset,
            emitted: 0,
        })
    }

    /// Per-target `(a_t, b_t)`.
    pub fn coefficients(&self) -> Vec<(f64, f64)> {
        self.scale.iter().copied().zip(self.offset.iter().copied()).collect()
    }

    fn drifted(&self, target: usize) -> bool {
        match &self.spec.drift {
            None => false,
            Some(Drift {
                mode: DriftMode::Synchronous,
                positions,
            }) => self.emitted >= positions[0],
            Some(Drift {
                mode: DriftMode::Asynchronous,
                positions,
            }) => self.emitted >= positions[target],
        }
    }

    fn draw(&mut self) -> (Vec<Value>, [f64; 2]) {
        let rng = &mut self.rng;
        match self.spec.family {
            Family::FriedmanMt => {
                let x: Vec<f64> = (0..10).map(|_| rng.random::<f64>()).collect();
                let base = [friedman(&x), friedman_drifted(&x)];
                (x.into_iter().map(Value::Num).collect(), base)
            }
            Family::PlaneMt => {
                let mut x = vec![if rng.random_bool(0.5) { 1.0 } else { -1.0 }];
                x.extend((1..10).map(|_| rng.random_range(-1i32..=1) as f64));
                let base = [plane(&x), plane_drifted(&x)];
                (x.into_iter().map(Value::Num).collect(), base)
            }
            Family::MvLike => {
                let u1 = rng.random_range(-5.0..5.0);
                let u2 = rng.random_range(-15.0..-10.0);
                let u4 = rng.random_range(-1.0..1.0);
                let u5 = rng.random::<f64>();
                let u6 = rng.random::<f64>();
                let u = [u1, u2, u1 + 2.0 * u2, u4, u5, u6];
                let c1 = if u1 > 0.0 { 0 } else { 1 };
                let c2 = if c1 == 0 && rng.random_bool(0.4) { 0 } else { 1 };
                let c3 = u32::from(u4 > 0.5);
                let c4 = rng.random_range(0..3u32);
                let c = [c1, c2, c3, c4];
                let base = [mv(&u, &c, false), mv(&u, &c, true)];
                let values = u
                    .iter()
                    .map(|&v| Value::Num(v))
                    .chain(c.iter().map(|&k| Value::Cat(k)))
                    .collect();
                (values, base)
            }
        }
    }
}

impl Iterator for GeneratorStream {
    type Item = Result<Instance>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.emitted >= self.spec.n_examples {
            return None;
        }
        let (features, base) = self.draw();
        let targets = (0..self.spec.d)
            .map(|t| {
                let f = base[usize::from(self.drifted(t))];
                let eps = self.noise.map_or(0.0, |n| n.sample(&mut self.rng));
                self.scale[t] * f + self.offset[t] + eps
            })
            .collect();
        self.emitted += 1;
        Some(Ok(Instance::new(features, targets)))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.spec.n_examples - self.emitted;
        (left, Some(left))
    }
}

impl StreamSource for GeneratorStream {
    fn schema(&self) -> &StreamSchema {
        &self.schema
    }

    fn len_hint(&self) -> Option<usize> {
        Some(self.spec.n_examples)
    }
}
