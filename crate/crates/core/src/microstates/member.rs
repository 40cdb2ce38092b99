use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::matcore::{Mat, MatrixTuple};

use super::spec::{canonical_words, TracialSpec};

/// Parameters of a microstate set `Γ_R(X; k, l, ε)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MicrostateParams {
    pub k: usize,
    pub l: usize,
    pub eps: f64,
    pub radius: f64,
}

impl MicrostateParams {
    pub fn new(k: usize, l: usize, eps: f64, radius: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "radius must be positive, got {radius}"
            )));
        }
        Ok(Self { k, l, eps, radius })
    }

    pub fn with_k(self, k: usize) -> Self {
        Self { k, ..self }
    }

    pub fn check_spec(&self, spec: &TracialSpec) -> Result<()> {
        if !spec.supports_length(self.l) {
            return Err(Error::InvalidParameter(format!(
                "l = {} exceeds l_max = {} and the spec has no generator",
                self.l,
                spec.l_max()
            )));
        }
        Ok(())
    }
}

struct Node {
    parent: Option<usize>,
    letter: usize,
    target: Option<f64>,
    has_children: bool,
}

/// Word trie over a spec's letters, compiled once per `(spec, l)`.
///
/// Nodes are ordered by word length, so evaluation checks all short words
/// before long ones and stops at the first failure.
pub struct WordChecker {
    letters: usize,
    nodes: Vec<Node>,
    eps: f64,
    radius: f64,
}

impl WordChecker {
    /// Checker for every canonical word of length `1..=l` over all letters of
    /// `spec` that passes `keep`.
    pub fn with_filter(spec: &TracialSpec, p: &MicrostateParams, keep: impl Fn(&[usize]) -> bool) -> Result<Self> {
        p.check_spec(spec)?;
        let words: Vec<Vec<usize>> = canonical_words(spec.letters(), p.l)
            .into_iter()
            .filter(|w| keep(w))
            .collect();
        let targets = spec.targets_for(&words)?;
        let mut prefixes: BTreeSet<(usize, Vec<usize>)> = BTreeSet::new();
        for w in &words {
            for len in 1..=w.len() {
                prefixes.insert((len, w[..len].to_vec()));
            }
        }
        let index: HashMap<&Vec<usize>, usize> = prefixes.iter().enumerate().map(|(i, (_, w))| (w, i)).collect();
        let want: HashMap<&Vec<usize>, f64> = words.iter().zip(&targets).map(|(w, &t)| (w, t)).collect();
        let mut nodes: Vec<Node> = prefixes
            .iter()
            .map(|(len, w)| Node {
                parent: (*len > 1).then(|| index[&w[..len - 1].to_vec()]),
                letter: w[len - 1],
                target: want.get(w).copied(),
                has_children: false,
            })
            .collect();
        for i in 0..nodes.len() {
            if let Some(par) = nodes[i].parent {
                nodes[par].has_children = true;
            }
        }
        Ok(Self {
            letters: spec.letters(),
            nodes,
            eps: p.eps,
            radius: p.radius,
        })
    }

    pub fn new(spec: &TracialSpec, p: &MicrostateParams) -> Result<Self> {
        Self::with_filter(spec, p, |_| true)
    }

    /// Number of words with a target.
    pub fn words(&self) -> usize {
        self.nodes.iter().filter(|n| n.target.is_some()).count()
    }

    /// Whether all word traces are within `ε` of their targets.
    pub fn words_ok(&self, mats: &[&Mat<f64>]) -> bool {
        debug_assert_eq!(mats.len(), self.letters);
        let k = mats.first().map_or(1, |m| m.dim()) as f64;
        let mut prods: Vec<Option<Mat<f64>>> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let x = mats[node.letter];
            if let Some(t) = node.target {
                let tr = match node.parent {
                    None => x.normalized_trace(),
                    Some(par) => prods[par].as_ref().expect("parent product").trace_of_product(x) / k,
                };
                if !((tr.re - t).hypot(tr.im) < self.eps) {
                    return false;
                }
            }
            prods.push(node.has_children.then(|| match node.parent {
                None => x.clone(),
                Some(par) => prods[par].as_ref().expect("parent product").matmul(x),
            }));
        }
        true
    }

    /// Word test followed by the operator-norm test.
    pub fn contains(&self, mats: &[&Mat<f64>]) -> Result<bool> {
        if !self.words_ok(mats) {
            return Ok(false);
        }
        norms_within(mats, self.radius)
    }
}

/// `‖x‖_op ≤ R` for every matrix; the Hilbert–Schmidt norm settles most
/// cases without an eigen solve.
pub(crate) fn norms_within(mats: &[&Mat<f64>], radius: f64) -> Result<bool> {
    for m in mats {
        if m.frobenius_norm() <= radius {
            continue;
        }
        if m.op_norm()? > radius {
            return Ok(false);
        }
    }
    Ok(true)
}

fn check_dims(t: &MatrixTuple<f64>, arity: usize, p: &MicrostateParams) -> Result<()> {
    if t.arity() != arity {
        return Err(Error::DimensionMismatch {
            expected: arity,
            found: t.arity(),
        });
    }
    if t.arity() > 0 && t.dim() != p.k {
        return Err(Error::DimensionMismatch {
            expected: p.k,
            found: t.dim(),
        });
    }
    Ok(())
}

/// Membership of `t` in `Γ_R(X; k, l, ε)` for the `X`-letters of `spec`.
pub fn is_microstate(t: &MatrixTuple<f64>, spec: &TracialSpec, p: &MicrostateParams) -> Result<bool> {
    let x = spec.x_marginal()?;
    check_dims(t, x.n(), p)?;
    let mats: Vec<&Mat<f64>> = t.mats().iter().map(|m| m.as_mat()).collect();
    WordChecker::new(&x, p)?.contains(&mats)
}

/// Membership of `x` in the relative set `Γ_R(X | y; k, l, ε)`: `(x, y)` is a
/// joint microstate.
pub fn is_relative_microstate(
    x: &MatrixTuple<f64>,
    y: &MatrixTuple<f64>,
    spec: &TracialSpec,
    p: &MicrostateParams,
) -> Result<bool> {
    check_dims(x, spec.n(), p)?;
    check_dims(y, spec.m(), p)?;
    let mats: Vec<&Mat<f64>> = x.mats().iter().chain(y.mats()).map(|m| m.as_mat()).collect();
    WordChecker::new(spec, p)?.contains(&mats)
}
