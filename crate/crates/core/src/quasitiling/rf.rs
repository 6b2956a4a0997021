use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::text::format_element;
use crate::group::GroupSpec;

/// `table[s][t]` is the index of `t s⁻¹` in a finite quotient group.
pub fn right_action_table(quotient: &GroupSpec) -> Result<Vec<Vec<u32>>> {
    let n = quotient
        .order()
        .ok_or_else(|| Error::InvalidGroup("right action tables need a finite quotient".into()))? as usize;
    let elems = (0..n).map(|i| quotient.residue_from_index(i)).collect::<Result<Vec<_>>>()?;
    elems
        .iter()
        .map(|s| {
            let inv = quotient.inverse(s)?;
            elems.iter().map(|t| Ok(quotient.residue_index(&quotient.mul(t, &inv)?)? as u32)).collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfMixingReport {
    pub n: usize,
    pub y_size: usize,
    /// Index of the maximizing `s`.
    pub s: usize,
    pub s_label: String,
    /// `|σ'(s)𝒴 Δ 𝒴| / n` as `p/q`.
    pub achieved: String,
    /// `2(|𝒴|/n)(1 − |𝒴|/n)`.
    pub bound: String,
    /// `(1/n) Σ_s |σ'(s)𝒴 Δ 𝒴| / n`.
    pub average: String,
    pub identity_holds: bool,
    pub meets_bound: bool,
}

/// Exhaustive scan of `|σ'(s)𝒴 Δ 𝒴|` over the quotient.
pub fn rf_mixing_check(quotient: &GroupSpec, table: &[Vec<u32>], y: &[usize]) -> Result<RfMixingReport> {
    let n = table.len();
    if n == 0 || table.iter().any(|row| row.len() != n) {
        return Err(Error::Precondition("action table must be square and nonempty".into()));
    }
    let mut in_y = vec![false; n];
    for &a in y {
        if a >= n {
            return Err(Error::Precondition(format!("point {a} outside 0..{n}")));
        }
        in_y[a] = true;
    }
    let y_size = in_y.iter().filter(|&&b| b).count();
    // |σ'(s)𝒴 Δ 𝒴| = 2|{t ∈ 𝒴 : ts⁻¹ ∉ 𝒴}|
    let sym: Vec<u64> = table
        .iter()
        .map(|row| 2 * (0..n).filter(|&t| in_y[t] && !in_y[row[t] as usize]).count() as u64)
        .collect();
    let (s, &best) = sym.iter().enumerate().max_by_key(|&(i, v)| (*v, std::cmp::Reverse(i))).unwrap();
    let nn = n as u64;
    let ys = y_size as u64;
    let achieved = Ratio::new(best, nn);
    let bound = Ratio::new(2 * ys * (nn - ys), nn * nn);
    let average = Ratio::new(sym.iter().sum::<u64>(), nn * nn);
    Ok(RfMixingReport {
        n,
        y_size,
        s,
        s_label: format_element(&quotient.residue_from_index(s)?),
        achieved: achieved.to_string(),
        bound: bound.to_string(),
        identity_holds: average == bound,
        meets_bound: achieved >= bound,
        average: average.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_of_z10() {
        let q = GroupSpec::quotient(vec![10]).unwrap();
        let t = right_action_table(&q).unwrap();
        let r = rf_mixing_check(&q, &t, &[0, 1, 2, 3, 4]).unwrap();
        assert!(r.identity_holds && r.meets_bound);
        assert_eq!(r.bound, "1/2");
        assert_eq!(r.achieved, "1");
        assert_eq!(r.s, 5);
    }

    #[test]
    fn empty_and_full() {
        let q = GroupSpec::quotient(vec![3, 4]).unwrap();
        let t = right_action_table(&q).unwrap();
        for y in [vec![], (0..12).collect::<Vec<_>>()] {
            let r = rf_mixing_check(&q, &t, &y).unwrap();
            assert_eq!(r.bound, "0");
            assert!(r.identity_holds && r.meets_bound);
        }
    }
}
