//! Power-sum multiset encoding and its inverse.
//!
//! A multiset of K reals is encoded as its first M power sums
//! `p_m = sum_i z_i^m`. When `M >= K` the encoding determines the multiset:
//! Newton's identities recover the elementary symmetric polynomials, whose
//! monic polynomial has the multiset as its root set; roots come back from
//! the companion-matrix eigenvalues and are returned sorted ascending.

use crate::error::{Error, Result};

/// First `m_max` power sums of `values` (m = 1..=m_max).
pub fn powersum_encode(values: &[f64], m_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(m_max);
    let mut powers: Vec<f64> = vec![1.0; values.len()];
    for _ in 0..m_max {
        for (p, v) in powers.iter_mut().zip(values) {
            *p *= v;
        }
        out.push(powers.iter().sum());
    }
    out
}

/// Recover the size-`k` multiset (sorted ascending) from its first `k` power
/// sums. Fails with [`Error::Decode`] when the moments are inconsistent with
/// any real multiset (eigenvalues with a significant imaginary part, or a
/// moment residual above the reported value).
pub fn powersum_decode(moments: &[f64], k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    if moments.len() < k {
        return Err(Error::Validation(format!(
            "need at least {k} moments to decode a multiset of size {k}, got {}",
            moments.len()
        )));
    }
    if moments.iter().any(|m| !m.is_finite()) {
        return Err(Error::Numeric("non-finite moment in power-sum decode".into()));
    }
    // Newton's identities: e_m = (1/m) * sum_{i=1..m} (-1)^{i-1} e_{m-i} p_i.
    let mut e = vec![0.0f64; k + 1];
    e[0] = 1.0;
    for m in 1..=k {
        let mut acc = 0.0;
        for i in 1..=m {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * e[m - i] * moments[i - 1];
        }
        e[m] = acc / m as f64;
    }
    // Monic polynomial z^k - e1 z^{k-1} + e2 z^{k-2} - ... ; companion matrix
    // holds the negated coefficients in its last column.
    let mut companion = nalgebra::DMatrix::<f64>::zeros(k, k);
    for i in 1..k {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..k {
        // Coefficient of z^i is (-1)^{k-i} e_{k-i}.
        let c = e[k - i] * if (k - i) % 2 == 1 { -1.0 } else { 1.0 };
        companion[(i, k - 1)] = -c;
    }
    let eig = companion.complex_eigenvalues();
    // Repeated roots perturb eigenvalues by ~eps^(1/multiplicity), which can
    // leave small imaginary parts on genuinely real multisets; drop them and
    // let the moment roundtrip below be the authoritative consistency gate.
    let mut roots: Vec<f64> = eig.iter().map(|z| z.re).collect();
    if roots.iter().any(|r| !r.is_finite()) {
        return Err(Error::Numeric("non-finite root in power-sum decode".into()));
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Confirm the decoded multiset actually reproduces the moments.
    let back = powersum_encode(&roots, k);
    let mut residual: f64 = 0.0;
    for (a, b) in back.iter().zip(moments) {
        residual = residual.max((a - b).abs());
    }
    let moment_scale = 1.0 + moments.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if residual > 1e-5 * moment_scale {
        return Err(Error::Decode { residual });
    }
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_known_values() {
        // {1, 2, 3}: p1 = 6, p2 = 14, p3 = 36.
        assert_eq!(powersum_encode(&[1.0, 2.0, 3.0], 3), vec![6.0, 14.0, 36.0]);
        assert_eq!(powersum_encode(&[2.0], 2), vec![2.0, 4.0]);
        assert_eq!(powersum_encode(&[], 3), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn decode_recovers_sorted_multiset() {
        let vals = [3.0, -1.0, 0.5, 0.5];
        let m = powersum_encode(&vals, 4);
        let got = powersum_decode(&m, 4).unwrap();
        let want = [-1.0, 0.5, 0.5, 3.0];
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-8, "{got:?}");
        }
    }

    #[test]
    fn decode_roundtrip_is_permutation_invariant() {
        let a = powersum_encode(&[0.2, -0.7, 1.5], 3);
        let b = powersum_encode(&[1.5, 0.2, -0.7], 3);
        assert_eq!(a, b);
        let ra = powersum_decode(&a, 3).unwrap();
        let rb = powersum_decode(&b, 3).unwrap();
        assert_eq!(ra, rb);
    }

    #[test]
    fn decode_rejects_impossible_moments() {
        // p1 = 0, p2 = -1 cannot come from real values.
        let err = powersum_decode(&[0.0, -1.0], 2).unwrap_err();
        assert!(matches!(err, Error::Decode { .. }));
    }

    #[test]
    fn decode_validates_input() {
        assert!(powersum_decode(&[1.0], 2).is_err());
        assert!(powersum_decode(&[f64::NAN, 0.0], 2).is_err());
        assert_eq!(powersum_decode(&[], 0).unwrap(), Vec::<f64>::new());
    }

    #[test]
    fn decode_handles_repeated_roots() {
        // A triple root is maximally ill-conditioned (eigenvalues move by
        // ~eps^(1/3)), so only loose per-element accuracy is achievable even
        // though the moments roundtrip tightly.
        let vals = [2.0, 2.0, 2.0];
        let m = powersum_encode(&vals, 3);
        let got = powersum_decode(&m, 3).unwrap();
        for g in &got {
            assert!((g - 2.0).abs() < 1e-3, "{got:?}");
        }
        let back = powersum_encode(&got, 3);
        for (a, b) in back.iter().zip(&m) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}
