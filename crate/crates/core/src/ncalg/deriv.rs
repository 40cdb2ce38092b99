use crate::error::{Error, Result};
use crate::scalar::Real;

use super::poly::{Monomial, NcBiPoly, NcPoly};

/// Free difference quotient `D_i F` (0-based `i`): each word is split at
/// every occurrence of `t_i`, the left part going to the first tensor leg.
pub fn dquotient<T: Real>(f: &NcPoly<T>, i: usize) -> Result<NcBiPoly<T>> {
    if i >= f.n {
        return Err(Error::IndexOutOfRange { index: i, arity: f.n });
    }
    let mut out = Vec::new();
    for (m, &c) in &f.terms {
        for (p, &v) in m.vars.iter().enumerate() {
            if v != i {
                continue;
            }
            let left = Monomial {
                vars: m.vars[..p].to_vec(),
                slots: m.slots[..=p].to_vec(),
            };
            let right = Monomial {
                vars: m.vars[p + 1..].to_vec(),
                slots: m.slots[p + 1..].to_vec(),
            };
            out.push((left, right, c));
        }
    }
    Ok(NcBiPoly::from_terms(f.n, f.algebra.clone(), out))
}
