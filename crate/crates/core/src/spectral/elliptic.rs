//! Jacobi elliptic functions and the complete integral, by the AGM.

use std::f64::consts::FRAC_PI_2;

fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        if (a - b).abs() <= 2.0 * f64::EPSILON * a {
            break;
        }
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    a
}

/// Complete elliptic integral of the first kind for modulus `k`, given the
/// complementary modulus `kc = sqrt(1 - k^2)` directly to avoid cancellation.
pub fn complete_k_from_complement(kc: f64) -> f64 {
    FRAC_PI_2 / agm(1.0, kc)
}

/// `(sn, cn, dn)` at `u` for complementary parameter `mc = 1 - k^2 > 0`,
/// by descending Landen transformations.
pub fn sncndn(u: f64, mc: f64) -> (f64, f64, f64) {
    const CA: f64 = 1e-9;
    let mut em = [0.0f64; 16];
    let mut en = [0.0f64; 16];
    let mut emc = mc;
    let mut a = 1.0;
    let mut dn = 1.0;
    let mut c = 1.0;
    let mut l = 0;
    for i in 0..16 {
        l = i;
        em[i] = a;
        emc = emc.sqrt();
        en[i] = emc;
        c = 0.5 * (a + emc);
        if (a - emc).abs() <= CA * a {
            break;
        }
        emc *= a;
        a = c;
    }
    let u = u * c;
    let mut sn = u.sin();
    let mut cn = u.cos();
    if sn != 0.0 {
        let mut a = cn / sn;
        c *= a;
        for ii in (0..=l).rev() {
            let b = em[ii];
            a *= c;
            c *= dn;
            dn = (en[ii] + a) / (b + a);
            a = c / b;
        }
        let a = 1.0 / (c * c + 1.0).sqrt();
        sn = if sn >= 0.0 { a } else { -a };
        cn = c * sn;
    }
    (sn, cn, dn)
}
