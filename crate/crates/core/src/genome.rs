//! Binary genetic encoding of real parameter vectors.
//!
//! A [`Chromosome`] is an `L`-bit string walking down a binary tree over
//! `[-R, R]`: gene `g_l` picks the upper (`1`) or lower (`0`) half at depth
//! `l`, contributing `+-R / 2^l`. The first gene is the most significant.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ParameterVector;

/// Largest supported depth; keeps every decoded value an exact dyadic sum.
pub const MAX_DEPTH: u32 = 52;

/// Parameters of the chromosome <-> real mapping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodecConfig {
    /// Depth constant `L` (bits per chromosome).
    pub depth: u32,
    /// Half-range `R` in radians; decoded values lie in `(-R, R)`.
    pub half_range: f64,
    /// Hilbert-space dimension `d`.
    pub dim: usize,
}

impl CodecConfig {
    pub fn new(depth: u32, half_range: f64, dim: usize) -> Result<Self> {
        let cfg = Self {
            depth,
            half_range,
            dim,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.depth > MAX_DEPTH {
            return Err(Error::InvalidConfig(format!(
                "depth must be in 1..={MAX_DEPTH}, got {}",
                self.depth
            )));
        }
        if !(self.half_range.is_finite() && self.half_range > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "half-range must be positive, got {}",
                self.half_range
            )));
        }
        if self.dim < 2 {
            return Err(Error::InvalidDimension(self.dim));
        }
        Ok(())
    }

    /// Number of generators, `d^2 - 1`.
    pub fn generators(&self) -> usize {
        self.dim * self.dim - 1
    }

    /// Grid spacing `R * 2^(1-L)`.
    pub fn spacing(&self) -> f64 {
        self.half_range * 2f64.powi(1 - self.depth as i32)
    }

    /// Chromosome whose decoded value is closest to `x` (clamped to the grid).
    pub fn encode_nearest(&self, x: f64) -> Chromosome {
        let levels = 2f64.powi(self.depth as i32);
        // grid value k maps to R * (2k + 1 - 2^L) / 2^L
        let k = ((x / self.half_range * levels + levels - 1.0) / 2.0).round();
        let k = k.clamp(0.0, levels - 1.0) as u64;
        Chromosome::from_index(k, self.depth)
    }

    pub fn decode(&self, c: &Chromosome) -> f64 {
        decode(c, self)
    }
}

/// Fixed-length bit string `g_1 ... g_L`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chromosome {
    bits: Vec<bool>,
}

impl Chromosome {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::Parse("empty chromosome".into()));
        }
        Ok(Self { bits })
    }

    pub fn zeros(depth: u32) -> Self {
        Self {
            bits: vec![false; depth as usize],
        }
    }

    /// Chromosome of the unsigned integer `index`, `g_1` most significant.
    pub fn from_index(index: u64, depth: u32) -> Self {
        let bits = (0..depth)
            .map(|l| (index >> (depth - 1 - l)) & 1 == 1)
            .collect();
        Self { bits }
    }

    pub fn index(&self) -> u64 {
        self.bits.iter().fold(0, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    pub fn complement(&self) -> Self {
        Self {
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }
}

impl fmt::Display for Chromosome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Chromosome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|ch| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("unexpected gene `{other}` in `{s}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(bits)
    }
}

/// One chromosome per generator of a single trainable unitary.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GeneticParameterVector {
    chromosomes: Vec<Chromosome>,
}

impl GeneticParameterVector {
    pub fn new(chromosomes: Vec<Chromosome>) -> Result<Self> {
        let Some(first) = chromosomes.first() else {
            return Err(Error::Parse("empty genetic parameter vector".into()));
        };
        if chromosomes.iter().any(|c| c.len() != first.len()) {
            return Err(Error::ShapeMismatch("chromosomes differ in length".into()));
        }
        Ok(Self { chromosomes })
    }

    pub fn chromosomes(&self) -> &[Chromosome] {
        &self.chromosomes
    }

    pub fn chromosomes_mut(&mut self) -> &mut [Chromosome] {
        &mut self.chromosomes
    }

    pub fn len(&self) -> usize {
        self.chromosomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chromosomes.is_empty()
    }
}

/// Full genetic description of one individual: one vector per trainable slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Genome {
    vectors: Vec<GeneticParameterVector>,
}

impl Genome {
    pub fn new(vectors: Vec<GeneticParameterVector>) -> Result<Self> {
        let Some(first) = vectors.first() else {
            return Err(Error::ShapeMismatch(
                "genome needs at least one slot".into(),
            ));
        };
        let shape = (first.len(), first.chromosomes[0].len());
        if vectors
            .iter()
            .any(|v| (v.len(), v.chromosomes[0].len()) != shape)
        {
            return Err(Error::ShapeMismatch("slots differ in shape".into()));
        }
        Ok(Self { vectors })
    }

    pub fn vectors(&self) -> &[GeneticParameterVector] {
        &self.vectors
    }

    pub fn vectors_mut(&mut self) -> &mut [GeneticParameterVector] {
        &mut self.vectors
    }

    /// Number of trainable slots `N_u`.
    pub fn slots(&self) -> usize {
        self.vectors.len()
    }

    /// `(slots, generators per slot, depth)`
    pub fn shape(&self) -> (usize, usize, usize) {
        let v = &self.vectors[0];
        (self.vectors.len(), v.len(), v.chromosomes[0].len())
    }

    pub fn chromosomes(&self) -> impl Iterator<Item = &Chromosome> {
        self.vectors.iter().flat_map(|v| v.chromosomes.iter())
    }

    pub fn chromosomes_mut(&mut self) -> impl Iterator<Item = &mut Chromosome> {
        self.vectors
            .iter_mut()
            .flat_map(|v| v.chromosomes.iter_mut())
    }

    /// Checks that this genome fits `cfg` with `slots` trainable unitaries.
    pub fn check_shape(&self, cfg: &CodecConfig, slots: usize) -> Result<()> {
        let want = (slots, cfg.generators(), cfg.depth as usize);
        if self.shape() != want {
            return Err(Error::ShapeMismatch(format!(
                "genome shape {:?}, expected {:?}",
                self.shape(),
                want
            )));
        }
        Ok(())
    }

    pub fn decode(&self, cfg: &CodecConfig) -> Vec<ParameterVector> {
        self.vectors.iter().map(|v| decode_vector(v, cfg)).collect()
    }

    /// Nearest-grid genome for the given real parameter vectors.
    pub fn encode_nearest(params: &[ParameterVector], cfg: &CodecConfig) -> Result<Self> {
        let vectors = params
            .iter()
            .map(|p| {
                GeneticParameterVector::new(
                    p.components()
                        .iter()
                        .map(|&x| cfg.encode_nearest(x))
                        .collect(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(vectors)
    }

    /// One line per chromosome: `slot generator bits`.
    pub fn to_listing(&self) -> String {
        let mut out = String::from("slot generator bits\n");
        for (j, v) in self.vectors.iter().enumerate() {
            for (k, c) in v.chromosomes.iter().enumerate() {
                out.push_str(&format!("{j} {k} {c}\n"));
            }
        }
        out
    }
}

/// Compact form: chromosomes separated by spaces, slots by `|`.
impl fmt::Display for Genome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, v) in self.vectors.iter().enumerate() {
            if j > 0 {
                f.write_str("|")?;
            }
            for (k, c) in v.chromosomes.iter().enumerate() {
                if k > 0 {
                    f.write_str(" ")?;
                }
                write!(f, "{c}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for Genome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let vectors = s
            .split('|')
            .map(|slot| {
                GeneticParameterVector::new(
                    slot.split_whitespace()
                        .map(str::parse)
                        .collect::<Result<Vec<Chromosome>>>()?,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(vectors)
    }
}

/// `p = R * sum_l (-1)^(g_l + 1) / 2^l`
pub fn decode(c: &Chromosome, cfg: &CodecConfig) -> f64 {
    // dyadic partial sums are exact for L <= 52; one rounding when scaling by R
    let mut weight = 1.0;
    let mut sum = 0.0;
    for &g in &c.bits {
        weight *= 0.5;
        sum += if g { weight } else { -weight };
    }
    cfg.half_range * sum
}

pub fn decode_vector(g: &GeneticParameterVector, cfg: &CodecConfig) -> ParameterVector {
    g.chromosomes
        .iter()
        .map(|c| decode(c, cfg))
        .collect::<Vec<_>>()
        .into()
}

pub fn random_chromosome<R: Rng + ?Sized>(rng: &mut R, cfg: &CodecConfig) -> Chromosome {
    Chromosome {
        bits: (0..cfg.depth).map(|_| rng.random::<bool>()).collect(),
    }
}

pub fn random_genome<R: Rng + ?Sized>(rng: &mut R, cfg: &CodecConfig, slots: usize) -> Genome {
    let vectors = (0..slots)
        .map(|_| GeneticParameterVector {
            chromosomes: (0..cfg.generators())
                .map(|_| random_chromosome(rng, cfg))
                .collect(),
        })
        .collect();
    Genome { vectors }
}

/// Order-of-magnitude bound `d^2 * N_u * delta` on the discretization error.
pub fn rounding_error_bound(cfg: &CodecConfig, slots: usize) -> f64 {
    (cfg.dim * cfg.dim) as f64 * slots as f64 * cfg.spacing()
}
