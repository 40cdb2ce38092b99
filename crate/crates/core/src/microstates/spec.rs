use std::collections::{BTreeMap, HashMap};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{eval_word_trace_complex, Mat, MatrixTuple, SelfAdjointMatrix};
use crate::spectra::SpectralMeasure;

/// Representative of a word under rotation and reversal: the
/// lexicographically smallest rotation of the word or of its reverse.
/// Traces of self-adjoint words agree on the class up to conjugation, so
/// real targets are shared.
pub fn canonical_word(word: &[usize]) -> Vec<usize> {
    let p = word.len();
    if p == 0 {
        return vec![];
    }
    let mut best = word.to_vec();
    let mut rev = word.to_vec();
    rev.reverse();
    for base in [word, rev.as_slice()] {
        for s in 0..p {
            let cand: Vec<usize> = base[s..].iter().chain(&base[..s]).copied().collect();
            if cand < best {
                best = cand;
            }
        }
    }
    best
}

/// All canonical words over `letters` letters with lengths `1..=l`, shortest
/// first.
pub fn canonical_words(letters: usize, l: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut level: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..l {
        let mut next = Vec::with_capacity(level.len() * letters);
        for w in &level {
            for a in 0..letters {
                let mut v = w.clone();
                v.push(a);
                next.push(v);
            }
        }
        let mut canon: Vec<Vec<usize>> = next.iter().filter(|w| canonical_word(w) == **w).cloned().collect();
        canon.sort();
        out.extend(canon);
        level = next;
    }
    out
}

/// A letter of a free model: polynomial `Σ poly[j] X^j` in the base variable
/// `X` of one component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Letter {
    pub component: usize,
    #[serde(default = "identity_poly")]
    pub poly: Vec<f64>,
}

fn identity_poly() -> Vec<f64> {
    vec![0.0, 1.0]
}

/// Free product of one-variable laws; letters are polynomials in the
/// component variables. Distinct components are free, letters of one
/// component commute.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeModel {
    pub components: Vec<SpectralMeasure>,
    pub letters: Vec<Letter>,
}

/// Explicit `d×d` matrices; targets are their normalized word traces.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixModel {
    pub mats: Vec<SelfAdjointMatrix<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Generator {
    Free(FreeModel),
    Matrix(MatrixModel),
}

impl FreeModel {
    /// Letters `0..laws.len()` are the free variables themselves.
    pub fn free_family(laws: Vec<SpectralMeasure>) -> Self {
        let letters = (0..laws.len())
            .map(|c| Letter {
                component: c,
                poly: identity_poly(),
            })
            .collect();
        Self {
            components: laws,
            letters,
        }
    }

    fn validate(&self, letters: usize, errs: &mut Vec<String>) {
        if self.letters.len() != letters {
            errs.push(format!(
                "free model has {} letters, spec needs {letters}",
                self.letters.len()
            ));
        }
        for (i, l) in self.letters.iter().enumerate() {
            if l.component >= self.components.len() {
                errs.push(format!("letter {} refers to missing component {}", i + 1, l.component));
            }
            if l.poly.iter().any(|c| !c.is_finite()) {
                errs.push(format!("letter {} has a non-finite coefficient", i + 1));
            }
        }
    }
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Memoized moment computation for a free model: the block containing the
/// first letter of a non-crossing partition splits the rest into gaps.
struct FreeMoments<'a> {
    model: &'a FreeModel,
    law_moments: Vec<Vec<f64>>,
    tau: HashMap<Vec<usize>, f64>,
    kappa: HashMap<Vec<usize>, f64>,
}

impl<'a> FreeMoments<'a> {
    fn new(model: &'a FreeModel) -> Self {
        Self {
            model,
            law_moments: vec![vec![]; model.components.len()],
            tau: HashMap::new(),
            kappa: HashMap::new(),
        }
    }

    fn law_moment(&mut self, c: usize, p: usize) -> f64 {
        let cache = &mut self.law_moments[c];
        while cache.len() <= p {
            let q = cache.len();
            cache.push(self.model.components[c].moment(q));
        }
        cache[p]
    }

    /// `τ` of a product of letters from one component.
    fn single(&mut self, word: &[usize]) -> f64 {
        if word.is_empty() {
            return 1.0;
        }
        let c = self.model.letters[word[0]].component;
        let poly = word
            .iter()
            .fold(vec![1.0], |acc, &a| poly_mul(&acc, &self.model.letters[a].poly));
        poly.iter().enumerate().map(|(j, &cj)| cj * self.law_moment(c, j)).sum()
    }

    /// Subsets of positions `1..p` whose letters lie in `comp`, each with
    /// the first position prepended.
    fn blocks(&self, word: &[usize], comp: usize) -> Vec<Vec<usize>> {
        let cands: Vec<usize> = (1..word.len())
            .filter(|&i| self.model.letters[word[i]].component == comp)
            .collect();
        (0..1u64 << cands.len())
            .map(|mask| {
                let mut v = vec![0];
                v.extend(
                    cands
                        .iter()
                        .enumerate()
                        .filter(|(b, _)| mask >> b & 1 == 1)
                        .map(|(_, &i)| i),
                );
                v
            })
            .collect()
    }

    fn gaps(word: &[usize], block: &[usize]) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for (t, &v) in block.iter().enumerate() {
            let end = block.get(t + 1).copied().unwrap_or(word.len());
            if end > v + 1 {
                out.push(word[v + 1..end].to_vec());
            }
        }
        out
    }

    fn cumulant(&mut self, word: &[usize]) -> f64 {
        if let Some(&v) = self.kappa.get(word) {
            return v;
        }
        let comp = self.model.letters[word[0]].component;
        let mut v = self.single(word);
        for block in self.blocks(word, comp) {
            if block.len() == word.len() {
                continue;
            }
            let sub: Vec<usize> = block.iter().map(|&i| word[i]).collect();
            let mut term = self.cumulant(&sub);
            for g in Self::gaps(word, &block) {
                term *= self.single(&g);
            }
            v -= term;
        }
        self.kappa.insert(word.to_vec(), v);
        v
    }

    fn moment(&mut self, word: &[usize]) -> f64 {
        if word.is_empty() {
            return 1.0;
        }
        if let Some(&v) = self.tau.get(word) {
            return v;
        }
        let comp = self.model.letters[word[0]].component;
        let mut v = 0.0;
        for block in self.blocks(word, comp) {
            let sub: Vec<usize> = block.iter().map(|&i| word[i]).collect();
            let mut term = self.cumulant(&sub);
            if term == 0.0 {
                continue;
            }
            for g in Self::gaps(word, &block) {
                term *= self.moment(&g);
            }
            v += term;
        }
        self.tau.insert(word.to_vec(), v);
        v
    }
}

/// Joint distribution of `(X_1..X_n, Y_1..Y_m)` through target traces of
/// words. Letters `0..n` are the `X`s and `n..n+m` the `Y`s; words are
/// 0-based here and 1-based in files.
#[derive(Clone, Debug, PartialEq)]
pub struct TracialSpec {
    n: usize,
    m: usize,
    l_max: usize,
    targets: BTreeMap<Vec<usize>, f64>,
    generator: Option<Generator>,
}

#[derive(Serialize, Deserialize)]
struct TargetEntry {
    word: Vec<usize>,
    value: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum GeneratorFile {
    Free {
        components: Vec<SpectralMeasure>,
        #[serde(default)]
        letters: Option<Vec<Letter>>,
    },
    Matrix {
        real: Vec<Vec<Vec<f64>>>,
        #[serde(default)]
        imag: Option<Vec<Vec<Vec<f64>>>>,
    },
}

#[derive(Serialize, Deserialize)]
struct SpecFile {
    n: usize,
    #[serde(default)]
    m: usize,
    #[serde(default)]
    l_max: usize,
    #[serde(default)]
    generator: Option<GeneratorFile>,
    #[serde(default)]
    targets: Vec<TargetEntry>,
}

/// Explicit targets keyed by 1-based words.
pub type TargetList = Vec<(Vec<usize>, f64)>;

impl TracialSpec {
    /// Builds a spec; every problem with the targets is reported at once.
    /// `targets` use 0-based letters.
    pub fn new(n: usize, m: usize, l_max: usize, targets: TargetList, generator: Option<Generator>) -> Result<Self> {
        let letters = n + m;
        let mut errs = Vec::new();
        let mut table: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        let one_based = |w: &[usize]| w.iter().map(|i| i + 1).collect::<Vec<_>>();
        for (w, v) in targets {
            if let Some(&bad) = w.iter().find(|&&i| i >= letters) {
                errs.push(format!(
                    "word {:?}: letter {} outside 1..={letters}",
                    one_based(&w),
                    bad + 1
                ));
                continue;
            }
            if w.len() > l_max {
                errs.push(format!(
                    "word {:?}: length {} exceeds l_max {l_max}",
                    one_based(&w),
                    w.len()
                ));
                continue;
            }
            if !v.is_finite() {
                errs.push(format!("word {:?}: non-finite target {v}", one_based(&w)));
                continue;
            }
            if w.is_empty() {
                if (v - 1.0).abs() > 1e-12 {
                    errs.push(format!("empty word must have target 1, got {v}"));
                }
                continue;
            }
            let c = canonical_word(&w);
            match table.get(&c) {
                Some(&old) if (old - v).abs() > 1e-12 => errs.push(format!(
                    "word {:?}: target {v} conflicts with {old} for the equivalent word {:?}",
                    one_based(&w),
                    one_based(&c)
                )),
                _ => {
                    table.insert(c, v);
                }
            }
        }
        match &generator {
            Some(Generator::Free(f)) => f.validate(letters, &mut errs),
            Some(Generator::Matrix(mm)) => {
                if mm.mats.len() != letters {
                    errs.push(format!(
                        "matrix model has {} matrices, spec needs {letters}",
                        mm.mats.len()
                    ));
                } else if MatrixTuple::from_mats(mm.mats.clone()).is_err() {
                    errs.push("matrix model matrices differ in dimension".into());
                }
            }
            None => {}
        }
        if !errs.is_empty() {
            return Err(Error::InconsistentTargets(errs.join("; ")));
        }
        Ok(Self {
            n,
            m,
            l_max,
            targets: table,
            generator,
        })
    }

    /// Spec given only by a generator.
    pub fn from_generator(n: usize, m: usize, generator: Generator) -> Result<Self> {
        Self::new(n, m, 0, vec![], Some(generator))
    }

    /// `n` free variables with the given laws.
    pub fn free(laws: Vec<SpectralMeasure>) -> Result<Self> {
        let n = laws.len();
        Self::from_generator(n, 0, Generator::Free(FreeModel::free_family(laws)))
    }

    /// Parses the JSON spec format (words 1-based).
    pub fn from_json(text: &str) -> Result<Self> {
        let f: SpecFile = serde_json::from_str(text).map_err(|e| Error::Document {
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })?;
        let letters = f.n + f.m;
        let mut errs = Vec::new();
        let mut targets = Vec::new();
        for t in f.targets {
            if t.word.contains(&0) {
                errs.push(format!("word {:?}: letters are numbered from 1", t.word));
                continue;
            }
            targets.push((t.word.iter().map(|i| i - 1).collect(), t.value));
        }
        let generator = match f.generator {
            None => None,
            Some(GeneratorFile::Free {
                components,
                letters: ls,
            }) => {
                let ls = ls.unwrap_or_else(|| {
                    (0..letters)
                        .map(|c| Letter {
                            component: c,
                            poly: identity_poly(),
                        })
                        .collect()
                });
                Some(Generator::Free(FreeModel {
                    components,
                    letters: ls,
                }))
            }
            Some(GeneratorFile::Matrix { real, imag }) => {
                let mut mats = Vec::new();
                for (idx, re) in real.iter().enumerate() {
                    let d = re.len();
                    let im = imag.as_ref().and_then(|v| v.get(idx));
                    if re.iter().any(|r| r.len() != d)
                        || im.is_some_and(|im| im.len() != d || im.iter().any(|r| r.len() != d))
                    {
                        errs.push(format!("matrix {} is not square", idx + 1));
                        continue;
                    }
                    let m = Mat::from_fn(d, |i, j| Complex::new(re[i][j], im.map_or(0.0, |im| im[i][j])));
                    match SelfAdjointMatrix::new(m) {
                        Ok(s) => mats.push(s),
                        Err(e) => errs.push(format!("matrix {}: {e}", idx + 1)),
                    }
                }
                Some(Generator::Matrix(MatrixModel { mats }))
            }
        };
        if !errs.is_empty() {
            return Err(Error::InconsistentTargets(errs.join("; ")));
        }
        Self::new(f.n, f.m, f.l_max, targets, generator)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn letters(&self) -> usize {
        self.n + self.m
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn generator(&self) -> Option<&Generator> {
        self.generator.as_ref()
    }

    /// Whether targets exist for every word of length `l`.
    pub fn supports_length(&self, l: usize) -> bool {
        self.generator.is_some() || l <= self.l_max
    }

    /// Targets for many words, computed together (0-based letters).
    pub fn targets_for(&self, words: &[Vec<usize>]) -> Result<Vec<f64>> {
        let mut free = match &self.generator {
            Some(Generator::Free(f)) => Some(FreeMoments::new(f)),
            _ => None,
        };
        let tuple = match &self.generator {
            Some(Generator::Matrix(mm)) => Some(MatrixTuple::from_mats(mm.mats.clone())?),
            _ => None,
        };
        words
            .iter()
            .map(|w| {
                if w.is_empty() {
                    return Ok(1.0);
                }
                let c = canonical_word(w);
                if let Some(&v) = self.targets.get(&c) {
                    return Ok(v);
                }
                if let Some(f) = free.as_mut() {
                    return Ok(f.moment(&c));
                }
                if let Some(t) = &tuple {
                    let z = eval_word_trace_complex(t, &c)?;
                    if z.im.abs() > 1e-9 * (1.0 + z.re.abs()) {
                        return Err(Error::InconsistentTargets(format!(
                            "matrix model trace of word {:?} is not real ({z})",
                            c.iter().map(|i| i + 1).collect::<Vec<_>>()
                        )));
                    }
                    return Ok(z.re);
                }
                Err(Error::MissingTarget(w.iter().map(|i| i + 1).collect()))
            })
            .collect()
    }

    pub fn target(&self, word: &[usize]) -> Result<f64> {
        Ok(self.targets_for(&[word.to_vec()])?[0])
    }

    /// Distribution of the letters `keep` (in that order) as an `X`-only
    /// spec.
    pub fn marginal(&self, keep: &[usize]) -> Result<Self> {
        self.marginal_split(keep, keep.len())
    }

    /// Distribution of the letters `keep`, the first `n_new` of which become
    /// `X`s and the rest `Y`s.
    pub fn marginal_split(&self, keep: &[usize], n_new: usize) -> Result<Self> {
        if let Some(&bad) = keep.iter().find(|&&i| i >= self.letters()) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                arity: self.letters(),
            });
        }
        let pos: HashMap<usize, usize> = keep.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let targets: TargetList = self
            .targets
            .iter()
            .filter(|(w, _)| w.iter().all(|i| pos.contains_key(i)))
            .map(|(w, &v)| (w.iter().map(|i| pos[i]).collect(), v))
            .collect();
        let generator = match &self.generator {
            None => None,
            Some(Generator::Free(f)) => Some(Generator::Free(FreeModel {
                components: f.components.clone(),
                letters: keep.iter().map(|&i| f.letters[i].clone()).collect(),
            })),
            Some(Generator::Matrix(mm)) => Some(Generator::Matrix(MatrixModel {
                mats: keep.iter().map(|&i| mm.mats[i].clone()).collect(),
            })),
        };
        Self::new(n_new, keep.len() - n_new, self.l_max, targets, generator)
    }

    /// The `X` letters alone.
    pub fn x_marginal(&self) -> Result<Self> {
        self.marginal(&(0..self.n).collect::<Vec<_>>())
    }

    /// The `Y` letters alone, as `X`s of a new spec.
    pub fn y_marginal(&self) -> Result<Self> {
        self.marginal(&(self.n..self.letters()).collect::<Vec<_>>())
    }

    /// The joint distribution with every letter an `X`.
    pub fn as_joint(&self) -> Result<Self> {
        self.marginal(&(0..self.letters()).collect::<Vec<_>>())
    }

    /// Second moments `τ(X_i²)` of the `X` letters.
    pub fn second_moments(&self) -> Result<Vec<f64>> {
        self.targets_for(&(0..self.n).map(|i| vec![i, i]).collect::<Vec<_>>())
    }

    /// `R = 2 + 2·max|value|` over atoms of atomic letters, `2·max|x|` over
    /// the support of continuous letters (4 for a standard semicircle), and
    /// `2 + 2·max √τ(X_i²)` without a free model.
    pub fn default_radius(&self) -> Result<f64> {
        let letters: Vec<usize> = (0..self.letters()).collect();
        if let Some(Generator::Free(f)) = &self.generator {
            let mut r: f64 = 0.0;
            for &i in &letters {
                let l = &f.letters[i];
                let law = &f.components[l.component];
                let ev = |x: f64| l.poly.iter().rev().fold(0.0, |acc, c| acc * x + c);
                r = r.max(match law {
                    SpectralMeasure::Atomic { atoms } => {
                        2.0 + 2.0 * atoms.iter().map(|a| ev(a.0).abs()).fold(0.0, f64::max)
                    }
                    _ => {
                        let (lo, hi) = law.support();
                        2.0 * (0..=256)
                            .map(|j| ev(lo + (hi - lo) * j as f64 / 256.0).abs())
                            .fold(0.0, f64::max)
                    }
                });
            }
            return Ok(r);
        }
        let words: Vec<Vec<usize>> = letters.iter().map(|&i| vec![i, i]).collect();
        let s = self.targets_for(&words)?;
        Ok(2.0 + 2.0 * s.iter().map(|v| v.max(0.0).sqrt()).fold(0.0, f64::max))
    }
}
