use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::matcore::{Mat, MatrixTuple, SelfAdjointMatrix};
use crate::scalar::Real;

/// One generator of the coefficient algebra, possibly starred.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Gen {
    pub id: usize,
    pub star: bool,
}

/// A concrete coefficient algebra `B`: scalars, or the algebra generated by
/// named elements. Generator matrices (common dimension `d`) are optional;
/// without them polynomials are purely symbolic and need an explicit
/// [`Embedding`] to be evaluated.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientAlgebra<T> {
    names: Vec<String>,
    self_adjoint: Vec<bool>,
    matrices: Option<Vec<Mat<T>>>,
}

impl<T: Real> CoefficientAlgebra<T> {
    pub fn scalars() -> Self {
        Self {
            names: vec![],
            self_adjoint: vec![],
            matrices: None,
        }
    }

    /// Symbolic generators; `self_adjoint[i]` states whether `b_i* = b_i`.
    pub fn symbolic(names: Vec<String>, self_adjoint: Vec<bool>) -> Result<Self> {
        if names.len() != self_adjoint.len() {
            return Err(Error::DimensionMismatch {
                expected: names.len(),
                found: self_adjoint.len(),
            });
        }
        Ok(Self {
            names,
            self_adjoint,
            matrices: None,
        })
    }

    /// Generators realized as d×d matrices; self-adjointness is read off the
    /// matrices.
    pub fn matrices(names: Vec<String>, mats: Vec<Mat<T>>) -> Result<Self> {
        if names.len() != mats.len() {
            return Err(Error::DimensionMismatch {
                expected: names.len(),
                found: mats.len(),
            });
        }
        if let Some(d) = mats.first().map(|m| m.dim()) {
            for m in &mats {
                if m.dim() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: m.dim(),
                    });
                }
            }
        }
        let self_adjoint = mats
            .iter()
            .map(|m| m.hermitian_defect() <= T::tiny() * (T::one() + m.frobenius_norm()))
            .collect();
        Ok(Self {
            names,
            self_adjoint,
            matrices: Some(mats),
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn id_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn is_self_adjoint(&self, id: usize) -> bool {
        self.self_adjoint[id]
    }

    pub fn generator_matrices(&self) -> Option<&[Mat<T>]> {
        self.matrices.as_deref()
    }

    /// Dimension `d` of the generator matrices, if realized.
    pub fn matrix_dim(&self) -> Option<usize> {
        self.matrices.as_ref().and_then(|m| m.first().map(|x| x.dim()))
    }

    /// Operator norms of the generators (1 for symbolic generators).
    pub fn generator_norms(&self) -> Result<Vec<T>> {
        match &self.matrices {
            Some(ms) => ms.iter().map(|m| m.op_norm()).collect(),
            None => Ok(vec![T::one(); self.names.len()]),
        }
    }

    pub(crate) fn normalize(&self, g: Gen) -> Gen {
        if g.star && self.self_adjoint[g.id] {
            Gen { id: g.id, star: false }
        } else {
            g
        }
    }
}

/// How generators act on `M_k`.
#[derive(Clone, Debug)]
pub struct Embedding<T> {
    mats: Vec<Mat<T>>,
    dim: usize,
}

impl<T: Real> Embedding<T> {
    /// Explicit images of the generators in `M_k`.
    pub fn explicit(dim: usize, mats: Vec<Mat<T>>) -> Result<Self> {
        for m in &mats {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: m.dim(),
                });
            }
        }
        Ok(Self { mats, dim })
    }

    /// Scalars only.
    pub fn scalars(dim: usize) -> Self {
        Self { mats: vec![], dim }
    }

    /// Block embedding `b ↦ b ⊗ 1_{k/d}` of a matrix-realized algebra into
    /// `M_k`; requires `d | k`.
    pub fn block(alg: &CoefficientAlgebra<T>, k: usize) -> Result<Self> {
        let Some(ms) = alg.generator_matrices() else {
            if alg.is_empty() {
                return Ok(Self::scalars(k));
            }
            return Err(Error::InvalidParameter(
                "symbolic generators need an explicit embedding".into(),
            ));
        };
        let d = alg.matrix_dim().unwrap_or(1);
        if d == 0 || k % d != 0 {
            return Err(Error::DimensionMismatch { expected: d, found: k });
        }
        Ok(Self {
            mats: ms.iter().map(|m| m.kron_identity(k / d)).collect(),
            dim: k,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub(crate) fn gen(&self, g: Gen) -> Result<Mat<T>> {
        let m = self.mats.get(g.id).ok_or(Error::IndexOutOfRange {
            index: g.id,
            arity: self.mats.len(),
        })?;
        Ok(if g.star { m.adjoint() } else { m.clone() })
    }

    /// Product of a slot's generators, or `None` for the unit.
    pub(crate) fn slot(&self, slot: &[Gen]) -> Result<Option<Mat<T>>> {
        let mut acc: Option<Mat<T>> = None;
        for &g in slot {
            let m = self.gen(g)?;
            acc = Some(match acc {
                None => m,
                Some(a) => a.matmul(&m),
            });
        }
        Ok(acc)
    }
}

/// `b⁰ t_{i₁} b¹ ⋯ t_{i_p} b^p` with coefficient slots given as products of
/// generators (empty slot = unit). `slots.len() == vars.len() + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial {
    pub vars: Vec<usize>,
    pub slots: Vec<Vec<Gen>>,
}

impl Monomial {
    pub fn unit() -> Self {
        Self {
            vars: vec![],
            slots: vec![vec![]],
        }
    }

    pub fn var(i: usize) -> Self {
        Self {
            vars: vec![i],
            slots: vec![vec![], vec![]],
        }
    }

    pub fn coef(g: Gen) -> Self {
        Self {
            vars: vec![],
            slots: vec![vec![g]],
        }
    }

    pub fn degree(&self) -> usize {
        self.vars.len()
    }

    pub fn is_unit(&self) -> bool {
        self.vars.is_empty() && self.slots[0].is_empty()
    }

    /// Concatenation; the touching slots multiply.
    pub fn concat(&self, other: &Self) -> Self {
        let mut vars = self.vars.clone();
        vars.extend_from_slice(&other.vars);
        let mut slots = self.slots.clone();
        let last = slots.last_mut().unwrap();
        last.extend_from_slice(&other.slots[0]);
        slots.extend(other.slots[1..].iter().cloned());
        Self { vars, slots }
    }

    pub(crate) fn adjoint<T: Real>(&self, alg: &CoefficientAlgebra<T>) -> Self {
        let vars = self.vars.iter().rev().copied().collect();
        let slots = self
            .slots
            .iter()
            .rev()
            .map(|s| {
                s.iter()
                    .rev()
                    .map(|&g| {
                        alg.normalize(Gen {
                            id: g.id,
                            star: !g.star,
                        })
                    })
                    .collect()
            })
            .collect();
        Self { vars, slots }
    }

    /// Evaluates at a tuple; `None` means the identity.
    pub(crate) fn eval<T: Real>(&self, t: &MatrixTuple<T>, embed: &Embedding<T>) -> Result<Option<Mat<T>>> {
        let mut acc = embed.slot(&self.slots[0])?;
        for (p, &v) in self.vars.iter().enumerate() {
            let x = t.get(v).as_mat();
            acc = Some(match acc {
                None => x.clone(),
                Some(a) => a.matmul(x),
            });
            if let Some(b) = embed.slot(&self.slots[p + 1])? {
                acc = Some(acc.unwrap().matmul(&b));
            }
        }
        Ok(acc)
    }

    pub(crate) fn render<T: Real>(&self, alg: &CoefficientAlgebra<T>) -> String {
        let mut toks: Vec<String> = Vec::new();
        let push_slot = |toks: &mut Vec<String>, s: &[Gen]| {
            for g in s {
                let mut name = alg.name(g.id).to_string();
                if g.star {
                    name.push('*');
                }
                toks.push(name);
            }
        };
        push_slot(&mut toks, &self.slots[0]);
        for (p, v) in self.vars.iter().enumerate() {
            toks.push(format!("t{}", v + 1));
            push_slot(&mut toks, &self.slots[p + 1]);
        }
        if toks.is_empty() {
            "1".to_string()
        } else {
            toks.join(" ")
        }
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.vars
            .len()
            .cmp(&other.vars.len())
            .then_with(|| self.vars.cmp(&other.vars))
            .then_with(|| self.slots.cmp(&other.slots))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

fn cone<T: Real>() -> Complex<T> {
    Complex::new(T::one(), T::zero())
}

fn insert_term<K: Ord, T: Real>(map: &mut BTreeMap<K, Complex<T>>, key: K, c: Complex<T>) {
    if c == czero() {
        return;
    }
    let e = map.entry(key).or_insert_with(czero);
    *e += c;
}

fn prune<K: Ord + Clone, T: Real>(map: &mut BTreeMap<K, Complex<T>>) {
    map.retain(|_, c| *c != czero());
}

fn same_algebra<T: Real>(a: &Arc<CoefficientAlgebra<T>>, b: &Arc<CoefficientAlgebra<T>>) -> bool {
    Arc::ptr_eq(a, b) || (a.names == b.names && a.self_adjoint == b.self_adjoint)
}

fn fmt_coef<T: Real>(c: Complex<T>) -> String {
    if c.im == T::zero() {
        format!("{}", c.re)
    } else if c.re == T::zero() {
        format!("{}i", c.im)
    } else {
        format!("({}{:+}i)", c.re, c.im.as_f64())
    }
}

fn render_sum<'a, T: Real>(terms: impl Iterator<Item = (String, Complex<T>)> + 'a) -> String {
    let mut out = String::new();
    for (body, c) in terms {
        let negative = c.im == T::zero() && c.re < T::zero();
        let mag = if negative { -c } else { c };
        if out.is_empty() {
            if negative {
                out.push('-');
            }
        } else {
            out.push_str(if negative { " - " } else { " + " });
        }
        if mag == cone() {
            out.push_str(&body);
        } else if body == "1" {
            out.push_str(&fmt_coef(mag));
        } else {
            out.push_str(&fmt_coef(mag));
            out.push(' ');
            out.push_str(&body);
        }
    }
    if out.is_empty() {
        "0".to_string()
    } else {
        out
    }
}

/// Element of `B⟨t₁,…,tₙ⟩` in normal form: like monomials merged, zero terms
/// dropped, terms ordered by (degree, variable word, coefficient slots).
#[derive(Clone, Debug)]
pub struct NcPoly<T> {
    pub(crate) n: usize,
    pub(crate) algebra: Arc<CoefficientAlgebra<T>>,
    pub(crate) terms: BTreeMap<Monomial, Complex<T>>,
}

impl<T: Real> PartialEq for NcPoly<T> {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && same_algebra(&self.algebra, &other.algebra) && self.terms == other.terms
    }
}

impl<T: Real> NcPoly<T> {
    pub fn zero(n: usize, algebra: Arc<CoefficientAlgebra<T>>) -> Self {
        Self {
            n,
            algebra,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, algebra: Arc<CoefficientAlgebra<T>>, c: Complex<T>) -> Self {
        Self::from_terms(n, algebra, vec![(Monomial::unit(), c)])
    }

    pub fn one(n: usize, algebra: Arc<CoefficientAlgebra<T>>) -> Self {
        Self::constant(n, algebra, cone())
    }

    /// `t_i` (0-based).
    pub fn var(n: usize, algebra: Arc<CoefficientAlgebra<T>>, i: usize) -> Self {
        Self::from_terms(n, algebra, vec![(Monomial::var(i), cone())])
    }

    /// The coefficient `b` as a degree-0 polynomial.
    pub fn coef(n: usize, algebra: Arc<CoefficientAlgebra<T>>, g: Gen) -> Self {
        let g = algebra.normalize(g);
        Self::from_terms(n, algebra, vec![(Monomial::coef(g), cone())])
    }

    pub fn from_terms(n: usize, algebra: Arc<CoefficientAlgebra<T>>, terms: Vec<(Monomial, Complex<T>)>) -> Self {
        let mut map = BTreeMap::new();
        for (m, c) in terms {
            debug_assert_eq!(m.slots.len(), m.vars.len() + 1);
            let m = Monomial {
                vars: m.vars,
                slots: m
                    .slots
                    .into_iter()
                    .map(|s| s.into_iter().map(|g| algebra.normalize(g)).collect())
                    .collect(),
            };
            insert_term(&mut map, m, c);
        }
        prune(&mut map);
        Self { n, algebra, terms: map }
    }

    pub fn arity(&self) -> usize {
        self.n
    }

    pub fn algebra(&self) -> &Arc<CoefficientAlgebra<T>> {
        &self.algebra
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Complex<T>)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    /// Whether `t_i` occurs in some term.
    pub fn mentions(&self, i: usize) -> bool {
        self.terms.keys().any(|m| m.vars.contains(&i))
    }

    pub(crate) fn check_compatible(&self, other: &Self) -> Result<()> {
        if !same_algebra(&self.algebra, &other.algebra) {
            return Err(Error::AlgebraMismatch);
        }
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut terms = self.terms.clone();
        for (m, &c) in &other.terms {
            insert_term(&mut terms, m.clone(), c);
        }
        prune(&mut terms);
        Ok(Self {
            n: self.n,
            algebra: self.algebra.clone(),
            terms,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-cone::<T>()))
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        let mut terms = BTreeMap::new();
        for (m, &v) in &self.terms {
            insert_term(&mut terms, m.clone(), v * c);
        }
        Self {
            n: self.n,
            algebra: self.algebra.clone(),
            terms,
        }
    }

    pub fn scale_real(&self, c: T) -> Self {
        self.scale(Complex::new(c, T::zero()))
    }

    /// Normal-form product; degrees add.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut terms = BTreeMap::new();
        for (a, &ca) in &self.terms {
            for (b, &cb) in &other.terms {
                insert_term(&mut terms, a.concat(b), ca * cb);
            }
        }
        prune(&mut terms);
        Ok(Self {
            n: self.n,
            algebra: self.algebra.clone(),
            terms,
        })
    }

    pub fn pow(&self, e: usize) -> Result<Self> {
        let mut acc = Self::one(self.n, self.algebra.clone());
        for _ in 0..e {
            acc = acc.multiply(self)?;
        }
        Ok(acc)
    }

    /// Word reversal with coefficient adjoints and conjugated scalars.
    pub fn adjoint(&self) -> Self {
        let mut terms = BTreeMap::new();
        for (m, &c) in &self.terms {
            insert_term(&mut terms, m.adjoint(&self.algebra), c.conj());
        }
        Self {
            n: self.n,
            algebra: self.algebra.clone(),
            terms,
        }
    }

    /// `adjoint(F) = F` in normal form, scalars compared to `T::tiny()`.
    pub fn is_selfadjoint(&self) -> bool {
        let adj = self.adjoint();
        if adj.terms.len() != self.terms.len() {
            return false;
        }
        adj.terms
            .iter()
            .zip(&self.terms)
            .all(|((ma, ca), (mb, cb))| ma == mb && (*ca - *cb).norm() <= T::tiny())
    }

    /// Truncation to terms of degree `<= max_degree`.
    pub fn truncate(&self, max_degree: usize) -> Self {
        Self {
            n: self.n,
            algebra: self.algebra.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree() <= max_degree)
                .map(|(m, c)| (m.clone(), *c))
                .collect(),
        }
    }

    /// `F(x₁,…,xₙ)` as a general matrix.
    pub fn evaluate(&self, t: &MatrixTuple<T>, embed: &Embedding<T>) -> Result<Mat<T>> {
        if t.arity() < self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: t.arity(),
            });
        }
        if embed.dim() != t.dim() {
            return Err(Error::DimensionMismatch {
                expected: t.dim(),
                found: embed.dim(),
            });
        }
        let k = t.dim();
        let mut out = Mat::zeros(k);
        for (m, &c) in &self.terms {
            match m.eval(t, embed)? {
                Some(v) => out.add_scaled(&v, c),
                None => out.add_scaled(&Mat::identity(k), c),
            }
        }
        Ok(out)
    }

    /// Evaluation of a self-adjoint polynomial; the output must be Hermitian
    /// to `1e-12` relative to its size.
    pub fn evaluate_selfadjoint(&self, t: &MatrixTuple<T>, embed: &Embedding<T>) -> Result<SelfAdjointMatrix<T>> {
        let m = self.evaluate(t, embed)?;
        let defect = m.hermitian_defect();
        if defect > T::tiny() * (T::one() + m.frobenius_norm()) {
            return Err(Error::NotHermitian { row: 0, col: 0 });
        }
        Ok(SelfAdjointMatrix::hermitian_part(&m))
    }

    /// Substitutes `t_j ↦ g[j]` (all `g[j]` share arity and algebra).
    pub fn compose(&self, g: &[NcPoly<T>]) -> Result<Self> {
        if g.len() < self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: g.len(),
            });
        }
        let target_n = g.first().map(|p| p.n).unwrap_or(self.n);
        let mut acc = Self::zero(target_n, self.algebra.clone());
        for (m, &c) in &self.terms {
            let mut term = Self::slot_poly(target_n, &self.algebra, &m.slots[0]);
            for (p, &v) in m.vars.iter().enumerate() {
                term = term.multiply(&g[v])?;
                term = term.multiply(&Self::slot_poly(target_n, &self.algebra, &m.slots[p + 1]))?;
            }
            acc = acc.add(&term.scale(c))?;
        }
        Ok(acc)
    }

    fn slot_poly(n: usize, alg: &Arc<CoefficientAlgebra<T>>, slot: &[Gen]) -> Self {
        Self::from_terms(
            n,
            alg.clone(),
            vec![(
                Monomial {
                    vars: vec![],
                    slots: vec![slot.to_vec()],
                },
                cone(),
            )],
        )
    }
}

impl<T: Real> fmt::Display for NcPoly<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = render_sum(self.terms.iter().map(|(m, &c)| (m.render(&self.algebra), c)));
        f.write_str(&s)
    }
}

/// Element of `B⟨t⟩ ⊗ B⟨t⟩`: sums of `c · left ⊗ right`.
#[derive(Clone, Debug)]
pub struct NcBiPoly<T> {
    n: usize,
    algebra: Arc<CoefficientAlgebra<T>>,
    terms: BTreeMap<(Monomial, Monomial), Complex<T>>,
}

impl<T: Real> PartialEq for NcBiPoly<T> {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && same_algebra(&self.algebra, &other.algebra) && self.terms == other.terms
    }
}

impl<T: Real> NcBiPoly<T> {
    pub fn zero(n: usize, algebra: Arc<CoefficientAlgebra<T>>) -> Self {
        Self {
            n,
            algebra,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms(
        n: usize,
        algebra: Arc<CoefficientAlgebra<T>>,
        terms: Vec<(Monomial, Monomial, Complex<T>)>,
    ) -> Self {
        let mut map = BTreeMap::new();
        for (l, r, c) in terms {
            insert_term(&mut map, (l, r), c);
        }
        prune(&mut map);
        Self { n, algebra, terms: map }
    }

    /// `a ⊗ b` for polynomials `a`, `b`.
    pub fn tensor(a: &NcPoly<T>, b: &NcPoly<T>) -> Result<Self> {
        a.check_compatible(b)?;
        let mut map = BTreeMap::new();
        for (ma, &ca) in &a.terms {
            for (mb, &cb) in &b.terms {
                insert_term(&mut map, (ma.clone(), mb.clone()), ca * cb);
            }
        }
        prune(&mut map);
        Ok(Self {
            n: a.n,
            algebra: a.algebra.clone(),
            terms: map,
        })
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(Monomial, Monomial), &Complex<T>)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if !same_algebra(&self.algebra, &other.algebra) {
            return Err(Error::AlgebraMismatch);
        }
        let mut terms = self.terms.clone();
        for (k, &c) in &other.terms {
            insert_term(&mut terms, k.clone(), c);
        }
        prune(&mut terms);
        Ok(Self {
            n: self.n,
            algebra: self.algebra.clone(),
            terms,
        })
    }

    /// Left action `F·(a ⊗ b) = Fa ⊗ b`.
    pub fn left_mul(&self, f: &NcPoly<T>) -> Result<Self> {
        let mut terms = BTreeMap::new();
        for ((l, r), &c) in &self.terms {
            for (m, &cf) in &f.terms {
                insert_term(&mut terms, (m.concat(l), r.clone()), cf * c);
            }
        }
        prune(&mut terms);
        Ok(Self {
            n: self.n,
            algebra: self.algebra.clone(),
            terms,
        })
    }

    /// Right action `(a ⊗ b)·G = a ⊗ bG`.
    pub fn right_mul(&self, g: &NcPoly<T>) -> Result<Self> {
        let mut terms = BTreeMap::new();
        for ((l, r), &c) in &self.terms {
            for (m, &cg) in &g.terms {
                insert_term(&mut terms, (l.clone(), r.concat(m)), c * cg);
            }
        }
        prune(&mut terms);
        Ok(Self {
            n: self.n,
            algebra: self.algebra.clone(),
            terms,
        })
    }

    /// Evaluated legs `(c·a, b)`, acting as `z ↦ Σ c·a z b`. `None` legs are
    /// the identity.
    pub fn evaluate(&self, t: &MatrixTuple<T>, embed: &Embedding<T>) -> Result<Vec<(Mat<T>, Mat<T>)>> {
        let k = t.dim();
        let mut out = Vec::with_capacity(self.terms.len());
        for ((l, r), &c) in &self.terms {
            let a = l.eval(t, embed)?.unwrap_or_else(|| Mat::identity(k)).scale(c);
            let b = r.eval(t, embed)?.unwrap_or_else(|| Mat::identity(k));
            out.push((a, b));
        }
        Ok(out)
    }

    /// `Σ c·a z b` for a direction `z`.
    pub fn apply(&self, t: &MatrixTuple<T>, embed: &Embedding<T>, z: &Mat<T>) -> Result<Mat<T>> {
        let mut out = Mat::zeros(t.dim());
        for (a, b) in self.evaluate(t, embed)? {
            out.add_scaled(&a.matmul(z).matmul(&b), cone());
        }
        Ok(out)
    }

    /// Multiplication map `a ⊗ b ↦ ab` (used to test the Leibniz rule).
    pub fn contract(&self) -> NcPoly<T> {
        NcPoly::from_terms(
            self.n,
            self.algebra.clone(),
            self.terms.iter().map(|((l, r), &c)| (l.concat(r), c)).collect(),
        )
    }
}

impl<T: Real> fmt::Display for NcBiPoly<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = render_sum(self.terms.iter().map(|((l, r), &c)| {
            (
                format!("{} (x) {}", l.render(&self.algebra), r.render(&self.algebra)),
                c,
            )
        }));
        f.write_str(&s)
    }
}
