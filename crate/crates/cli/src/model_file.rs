//! JSON model files (schema 1).
//!
//! Scalars are strings (`"3/4"`, `"2"`, `"0.25"`) so exact inputs stay
//! exact; words are integer arrays with the first letter most significant.

use std::collections::BTreeMap;
use std::path::Path;

use ipsinv::lattice2d::SquareJrm;
use ipsinv::models::{Claim, ModelSpec, System};
use ipsinv::scalar::{format_rational, parse_rational};
use ipsinv::{BoundaryRates, Exact, JumpRateMatrix, MarkovKernel, Scalar, StationaryLaw};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lattice {
    #[default]
    Line,
    Square,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateEntry {
    pub from: Vec<usize>,
    pub to: Vec<usize>,
    pub rate: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub memory: usize,
    /// One row per context word of length `memory`, in code order.
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaSpec {
    pub left: Vec<RateEntry>,
    pub right: Vec<RateEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, String>,
    pub kappa: usize,
    /// Required on the line; fixed to 4 on the square.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<usize>,
    #[serde(default)]
    pub lattice: Lattice,
    pub rates: Vec<RateEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<BetaSpec>,
}

/// A model file validated into core types.
#[derive(Debug, Clone)]
pub struct Loaded<S> {
    pub system: System<S>,
    pub kernel: Option<MarkovKernel<S>>,
    pub rho: Option<Vec<S>>,
    pub beta: Option<BoundaryRates<S>>,
}

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn scalar<S: Scalar>(s: &str, at: &str) -> Result<S, CliError> {
    parse_rational(s).map(|r| S::from_rational(&r)).ok_or_else(|| input(format!("{at}: cannot parse {s:?} as a rational")))
}

fn render<S: Scalar>(v: &S) -> String {
    format_rational(&v.to_rational())
}

fn entries<S: Scalar>(list: &[RateEntry], at: &str) -> Result<Vec<(Vec<usize>, Vec<usize>, S)>, CliError> {
    list.iter()
        .enumerate()
        .map(|(i, e)| Ok((e.from.clone(), e.to.clone(), scalar(&e.rate, &format!("{at}[{i}].rate"))?)))
        .collect()
}

fn rate_list<S: Scalar>(t: &JumpRateMatrix<S>) -> Vec<RateEntry> {
    t.entry_words().into_iter().map(|(from, to, r)| RateEntry { from, to, rate: render(&r) }).collect()
}

impl ModelFile {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Input(m) => input(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| input(e.to_string()))?;
        if file.schema != SCHEMA {
            return Err(input(format!("unsupported schema {}, expected {SCHEMA}", file.schema)));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model files serialize")
    }

    pub fn load<S: Scalar>(&self) -> Result<Loaded<S>, CliError> {
        let rates = entries::<S>(&self.rates, "rates")?;
        let system = match self.lattice {
            Lattice::Line => {
                let range = self.range.ok_or_else(|| input("range is required for a line model"))?;
                System::Line(JumpRateMatrix::new(self.kappa, range, rates).map_err(|e| input(format!("rates: {e}")))?)
            }
            Lattice::Square => {
                if self.range.is_some_and(|r| r != 4) {
                    return Err(input("square models have range 4"));
                }
                System::Square(SquareJrm::new(self.kappa, rates).map_err(|e| input(format!("rates: {e}")))?)
            }
        };
        let kernel = match &self.kernel {
            None => None,
            Some(k) => {
                let rows = k
                    .rows
                    .iter()
                    .enumerate()
                    .map(|(i, row)| {
                        row.iter().enumerate().map(|(j, v)| scalar(v, &format!("kernel.rows[{i}][{j}]"))).collect()
                    })
                    .collect::<Result<Vec<Vec<S>>, _>>()?;
                Some(MarkovKernel::new(self.kappa, k.memory, rows).map_err(|e| input(format!("kernel: {e}")))?)
            }
        };
        let rho = match &self.rho {
            None => None,
            Some(r) => {
                let v = r.iter().enumerate().map(|(i, x)| scalar(x, &format!("rho[{i}]"))).collect::<Result<Vec<S>, _>>()?;
                if v.len() != self.kappa {
                    return Err(input(format!("rho has {} entries, expected {}", v.len(), self.kappa)));
                }
                Some(v)
            }
        };
        let beta = match &self.beta {
            None => None,
            Some(b) => {
                let left = JumpRateMatrix::new(self.kappa, 1, entries::<S>(&b.left, "beta.left")?)
                    .map_err(|e| input(format!("beta.left: {e}")))?;
                let right = JumpRateMatrix::new(self.kappa, 1, entries::<S>(&b.right, "beta.right")?)
                    .map_err(|e| input(format!("beta.right: {e}")))?;
                Some(BoundaryRates::new(left, right).map_err(|e| input(format!("beta: {e}")))?)
            }
        };
        Ok(Loaded { system, kernel, rho, beta })
    }

    /// File for a catalog model: the rates, the first law named by a claim
    /// as `kernel`, and the first product marginal as `rho`.
    pub fn from_spec(spec: &ModelSpec<Exact>) -> Self {
        let (lattice, range) = match &spec.system {
            System::Line(t) => (Lattice::Line, Some(t.range())),
            System::Square(_) => (Lattice::Square, None),
        };
        let mut law: Option<&StationaryLaw<Exact>> = None;
        let mut rho: Option<&Vec<Exact>> = None;
        for e in &spec.expected {
            match &e.claim {
                Claim::BalanceVanishes(l) | Claim::LineInvariant(l) | Claim::LineNotInvariant(l) => {
                    law.get_or_insert(l);
                }
                Claim::ProductInvariant(r)
                | Claim::ProductNotInvariant(r)
                | Claim::ProductInvariantInterior { rho: r, .. }
                | Claim::SquareInvariant(r)
                | Claim::SquareNotInvariant(r) => {
                    rho.get_or_insert(r);
                }
                _ => {}
            }
        }
        ModelFile {
            schema: SCHEMA,
            name: Some(spec.name.clone()),
            params: spec.params.iter().map(|(k, v)| (k.clone(), render(v))).collect(),
            kappa: spec.system.kappa(),
            range,
            lattice,
            rates: rate_list(spec.system.as_jrm()),
            kernel: law.map(|l| KernelSpec {
                memory: l.memory(),
                rows: l.kernel().rows().iter().map(|r| r.iter().map(render).collect()).collect(),
            }),
            rho: rho.map(|r| r.iter().map(render).collect()),
            beta: None,
        }
    }
}

impl<S: Scalar> Loaded<S> {
    pub fn line(&self) -> Result<&JumpRateMatrix<S>, CliError> {
        match &self.system {
            System::Line(t) => Ok(t),
            System::Square(_) => Err(input("this command needs a line model")),
        }
    }

    pub fn square(&self) -> Result<&SquareJrm<S>, CliError> {
        match &self.system {
            System::Square(t) => Ok(t),
            System::Line(_) => Err(input("this command needs a square model (\"lattice\": \"square\")")),
        }
    }

    /// The Markov law: `kernel` when present, otherwise the product of `rho`.
    pub fn law(&self) -> Result<StationaryLaw<S>, CliError> {
        match (&self.kernel, &self.rho) {
            (Some(k), _) => StationaryLaw::new(k.clone()).map_err(CliError::from),
            (None, Some(r)) => StationaryLaw::product(r.clone()).map_err(CliError::from),
            (None, None) => Err(input("the model file has neither kernel nor rho")),
        }
    }

    /// The product marginal: `rho`, or the rows of a memory-0 kernel.
    pub fn rho(&self) -> Result<Vec<S>, CliError> {
        match (&self.rho, &self.kernel) {
            (Some(r), _) => Ok(r.clone()),
            (None, Some(k)) if k.memory() == 0 => Ok(k.row(0).to_vec()),
            _ => Err(input("the model file has no rho")),
        }
    }
}
