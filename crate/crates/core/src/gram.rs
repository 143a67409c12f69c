//! Finite functions and the Gram matrices built from them.
//!
//! For `f: D -> E` with `D` a subset of `alphabet^arity`, the matrices are
//! `F[x][y] = [f(x) = f(y)]`, `Delta_i[x][y] = [x_i = y_i]`, the all-ones `J`,
//! and for boolean `f` the sign matrix `sigma_f = 2F - J`. Rows and columns
//! follow the lexicographic order of the domain tuples.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matlin::HermMat;

/// Largest matrix dimension any constructor here will produce.
pub const DIM_CAP: usize = 512;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteFunction {
    pub name: String,
    pub arity: usize,
    pub alphabet: usize,
    pub codomain: usize,
    /// Domain tuples in lexicographic order.
    pub domain: Vec<Vec<usize>>,
    pub outputs: Vec<usize>,
}

impl FiniteFunction {
    /// Validates a truth table and sorts it lexicographically.
    pub fn new(
        name: impl Into<String>,
        arity: usize,
        alphabet: usize,
        codomain: usize,
        rows: Vec<(Vec<usize>, usize)>,
    ) -> Result<Self> {
        if arity == 0 {
            return Err(Error::InvalidSpec("arity must be positive".into()));
        }
        if alphabet < 2 {
            return Err(Error::InvalidSpec("alphabet size must be at least 2".into()));
        }
        if codomain < 1 {
            return Err(Error::InvalidSpec("codomain size must be at least 1".into()));
        }
        if rows.is_empty() {
            return Err(Error::InvalidSpec("domain is empty".into()));
        }
        let mut table = BTreeMap::new();
        for (x, y) in rows {
            if x.len() != arity {
                return Err(Error::InvalidSpec(format!("tuple {x:?} does not have length {arity}")));
            }
            if let Some(s) = x.iter().find(|&&s| s >= alphabet) {
                return Err(Error::InvalidSpec(format!(
                    "symbol {s} in {x:?} is outside the alphabet"
                )));
            }
            if y >= codomain {
                return Err(Error::InvalidSpec(format!(
                    "output {y} for {x:?} is outside the codomain"
                )));
            }
            if table.insert(x.clone(), y).is_some() {
                return Err(Error::InvalidSpec(format!("duplicate tuple {x:?}")));
            }
        }
        if table.len() > DIM_CAP {
            return Err(Error::DimensionCap {
                dim: table.len(),
                cap: DIM_CAP,
            });
        }
        let (domain, outputs) = table.into_iter().unzip();
        Ok(FiniteFunction {
            name: name.into(),
            arity,
            alphabet,
            codomain,
            domain,
            outputs,
        })
    }

    /// Total function on the full cube `alphabet^arity`.
    pub fn from_fn(
        name: impl Into<String>,
        arity: usize,
        alphabet: usize,
        codomain: usize,
        f: impl Fn(&[usize]) -> usize,
    ) -> Result<Self> {
        let size = checked_pow(alphabet, arity)?;
        let rows = (0..size)
            .map(|mut idx| {
                let mut x = vec![0; arity];
                for slot in x.iter_mut().rev() {
                    *slot = idx % alphabet;
                    idx /= alphabet;
                }
                let y = f(&x);
                (x, y)
            })
            .collect();
        Self::new(name, arity, alphabet, codomain, rows)
    }

    /// Named builtins: `OR:n`, `AND:n`, `PARITY:n`, `MAJ:n` (odd n), `EQ:d`
    /// (two symbols over alphabet d), `ID:n` (output the first bit), `CONST:n`.
    pub fn builtin(spec: &str) -> Result<Self> {
        let (name, arg) = spec
            .split_once(':')
            .ok_or_else(|| Error::InvalidSpec(format!("builtin `{spec}` is not of the form NAME:n")))?;
        let n: usize = arg
            .trim()
            .parse()
            .map_err(|_| Error::InvalidSpec(format!("builtin `{spec}` has a non-numeric parameter")))?;
        if n == 0 {
            return Err(Error::InvalidSpec(format!(
                "builtin `{spec}` needs a positive parameter"
            )));
        }
        let label = format!("{}:{n}", name.trim().to_ascii_uppercase());
        match name.trim().to_ascii_uppercase().as_str() {
            "OR" => Self::from_fn(label, n, 2, 2, |x| x.contains(&1) as usize),
            "AND" => Self::from_fn(label, n, 2, 2, |x| x.iter().all(|&b| b == 1) as usize),
            "PARITY" => Self::from_fn(label, n, 2, 2, |x| x.iter().sum::<usize>() % 2),
            "MAJ" => {
                if n.is_multiple_of(2) {
                    return Err(Error::InvalidSpec(format!("MAJ needs odd arity, got {n}")));
                }
                Self::from_fn(label, n, 2, 2, |x| (2 * x.iter().sum::<usize>() > x.len()) as usize)
            }
            "EQ" => {
                if n < 2 {
                    return Err(Error::InvalidSpec("EQ needs an alphabet of size at least 2".into()));
                }
                Self::from_fn(label, 2, n, 2, |x| (x[0] == x[1]) as usize)
            }
            "ID" => Self::from_fn(label, n, 2, 2, |x| x[0]),
            "CONST" => Self::from_fn(label, n, 2, 2, |_| 0),
            other => Err(Error::InvalidSpec(format!("unknown builtin `{other}`"))),
        }
    }

    /// Parses the text format:
    ///
    /// ```text
    /// # comment
    /// arity 2
    /// alphabet 2
    /// codomain 2
    /// 0 0 -> 0
    /// 0 1 -> 1
    /// ```
    ///
    /// Tuple symbols may be separated by spaces or commas; `→` is accepted for `->`.
    pub fn parse(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut arity = None;
        let mut alphabet = None;
        let mut codomain = None;
        let mut rows = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: String| Error::Parse { line: line_no, msg };
            let normalized = line.replace('→', "->");
            if let Some((lhs, rhs)) = normalized.split_once("->") {
                let x = lhs
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<usize>().map_err(|_| perr(format!("bad symbol `{s}`"))))
                    .collect::<Result<Vec<_>>>()?;
                let y = rhs
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| perr(format!("bad output `{}`", rhs.trim())))?;
                rows.push((x, y));
                continue;
            }
            let mut words = normalized.split_whitespace();
            let key = words.next().unwrap_or("");
            let value = words
                .next()
                .ok_or_else(|| perr(format!("`{key}` needs a value")))?
                .parse::<usize>()
                .map_err(|_| perr(format!("`{key}` needs a nonnegative integer")))?;
            if words.next().is_some() {
                return Err(perr(format!("trailing text after `{key}`")));
            }
            let slot = match key {
                "arity" => &mut arity,
                "alphabet" => &mut alphabet,
                "codomain" => &mut codomain,
                other => return Err(perr(format!("unknown field `{other}`"))),
            };
            if slot.replace(value).is_some() {
                return Err(perr(format!("`{key}` given twice")));
            }
        }
        let need = |v: Option<usize>, what: &str| v.ok_or_else(|| Error::InvalidSpec(format!("missing `{what}` line")));
        Self::new(
            name,
            need(arity, "arity")?,
            need(alphabet, "alphabet")?,
            need(codomain, "codomain")?,
            rows,
        )
    }

    /// Builtin names first, then a file path.
    pub fn resolve(spec: &str) -> Result<Self> {
        match Self::builtin(spec) {
            Ok(f) => Ok(f),
            Err(builtin_err) => {
                let path = Path::new(spec);
                if path.is_file() {
                    let text = std::fs::read_to_string(path)?;
                    Self::parse(spec, &text)
                } else {
                    Err(builtin_err)
                }
            }
        }
    }

    pub fn size(&self) -> usize {
        self.domain.len()
    }

    pub fn is_boolean(&self) -> bool {
        self.codomain == 2
    }

    /// `x -> (f(x^1) + ... + f(x^k)) mod 2` on `k` concatenated copies.
    pub fn parity_compose(&self, k: usize) -> Result<Self> {
        if !self.is_boolean() {
            return Err(Error::InvalidSpec("parity composition needs a boolean function".into()));
        }
        if k == 0 {
            return Err(Error::InvalidSpec("k must be positive".into()));
        }
        let size = checked_pow(self.size(), k)?;
        if size > DIM_CAP {
            return Err(Error::DimensionCap {
                dim: size,
                cap: DIM_CAP,
            });
        }
        let mut rows = Vec::with_capacity(size);
        for mut idx in 0..size {
            let mut parts = vec![0; k];
            for slot in parts.iter_mut().rev() {
                *slot = idx % self.size();
                idx /= self.size();
            }
            let x: Vec<usize> = parts.iter().flat_map(|&p| self.domain[p].iter().copied()).collect();
            let y = parts.iter().map(|&p| self.outputs[p]).sum::<usize>() % 2;
            rows.push((x, y));
        }
        Self::new(
            format!("PARITY∘{}^{k}", self.name),
            self.arity * k,
            self.alphabet,
            2,
            rows,
        )
    }
}

fn checked_pow(base: usize, exp: usize) -> Result<usize> {
    let mut out: usize = 1;
    for _ in 0..exp {
        out = out
            .checked_mul(base)
            .filter(|&v| v <= DIM_CAP * DIM_CAP)
            .ok_or(Error::DimensionCap {
                dim: usize::MAX,
                cap: DIM_CAP,
            })?;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SigmaChoice {
    /// `F`, the target for computing `f`.
    F,
    /// `sigma_f = 2F - J`, the target for computing `f` in the phase.
    SigmaF,
}

impl SigmaChoice {
    pub fn label(self) -> &'static str {
        match self {
            SigmaChoice::F => "F",
            SigmaChoice::SigmaF => "sigma_f",
        }
    }
}

/// Every named builtin with parameter at most `max_n` (for `EQ` the
/// parameter is the alphabet size, for `MAJ` only odd values).
pub fn builtin_corpus(max_n: usize) -> Vec<String> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        for name in ["OR", "AND", "PARITY", "MAJ", "ID", "CONST", "EQ"] {
            if (name == "MAJ" && n % 2 == 0) || (name == "EQ" && n < 2) {
                continue;
            }
            out.push(format!("{name}:{n}"));
        }
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GramSet {
    pub f: HermMat,
    pub sigma_f: Option<HermMat>,
    pub deltas: Vec<HermMat>,
    pub j: HermMat,
    pub index: Vec<Vec<usize>>,
}

pub fn build_gram_set(func: &FiniteFunction) -> Result<GramSet> {
    let n = func.size();
    let f = HermMat::from_real_fn(n, |x, y| (func.outputs[x] == func.outputs[y]) as u8 as f64)?;
    let j = HermMat::ones(n);
    let sigma_f = if func.is_boolean() {
        Some(f.scale(2.0).sub(&j)?)
    } else {
        None
    };
    let deltas = (0..func.arity)
        .map(|i| HermMat::from_real_fn(n, |x, y| (func.domain[x][i] == func.domain[y][i]) as u8 as f64))
        .collect::<Result<_>>()?;
    Ok(GramSet {
        f,
        sigma_f,
        deltas,
        j,
        index: func.domain.clone(),
    })
}

impl GramSet {
    pub fn dim(&self) -> usize {
        self.j.dim()
    }

    pub fn sigma(&self, choice: SigmaChoice) -> Result<&HermMat> {
        match choice {
            SigmaChoice::F => Ok(&self.f),
            SigmaChoice::SigmaF => self
                .sigma_f
                .as_ref()
                .ok_or_else(|| Error::InvalidSpec("sigma_f needs a boolean function".into())),
        }
    }

    /// `J - M`
    pub fn j_minus(&self, m: &HermMat) -> Result<HermMat> {
        self.j.sub(m)
    }
}

#[derive(Clone, Debug)]
pub struct TensorInstance {
    pub k: usize,
    pub sigma_k: HermMat,
    /// `deltas[p][q] = J^{(p)} ⊗ Delta_q ⊗ J^{(k-p-1)}` with zero-based `p`.
    pub deltas: Vec<Vec<HermMat>>,
}

impl TensorInstance {
    pub fn dim(&self) -> usize {
        self.sigma_k.dim()
    }
}

pub fn tensor_instance(g: &GramSet, choice: SigmaChoice, k: usize) -> Result<TensorInstance> {
    if k == 0 {
        return Err(Error::Precondition("tensor power k must be positive".into()));
    }
    let dim = checked_pow(g.dim(), k)?;
    if dim > DIM_CAP {
        return Err(Error::DimensionCap { dim, cap: DIM_CAP });
    }
    let sigma = g.sigma(choice)?;
    let deltas = (0..k)
        .map(|p| {
            g.deltas
                .iter()
                .map(|dq| g.j.kron_pow(p).kron(dq).kron(&g.j.kron_pow(k - p - 1)))
                .collect()
        })
        .collect();
    Ok(TensorInstance {
        k,
        sigma_k: sigma.kron_pow(k),
        deltas,
    })
}

/// True iff the sign matrix of the k-fold parity composition equals
/// `sigma_f^{(x)k}` entrywise within 1e-12.
pub fn parity_phase_check(func: &FiniteFunction, k: usize) -> Result<bool> {
    let composed = build_gram_set(&func.parity_compose(k)?)?;
    let tensor = tensor_instance(&build_gram_set(func)?, SigmaChoice::SigmaF, k)?;
    let lhs = composed.sigma(SigmaChoice::SigmaF)?;
    Ok(lhs.max_abs_diff(&tensor.sigma_k)? <= 1e-12)
}
