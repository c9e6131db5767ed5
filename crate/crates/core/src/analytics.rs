//! Exact-rational capacity curves and lower bounds.
//!
//! Everything here is computed with arbitrary-precision rationals; floats
//! only appear when rendering CSV/JSON for humans.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

fn uint(v: u64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Parses `"3/2"`, `"7"`, `"-4"` or a plain decimal such as `"25.5"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::InvalidParams(format!("cannot parse `{s}` as a rational"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let digits: BigInt = format!("{whole}{frac}").parse().map_err(|_| bad())?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        return Ok(Rational::new(digits, scale));
    }
    Ok(Rational::from_integer(s.parse().map_err(|_| bad())?))
}

/// Renders `r` in decimal with at most `sig` significant digits, trailing
/// zeros trimmed (`51/2` -> `25.5`, `17/19` -> `0.89473684210526315789`).
pub fn to_decimal(r: &Rational, sig: usize) -> String {
    if r.is_zero() {
        return "0".into();
    }
    let neg = r.is_negative();
    let a = r.abs();
    let ten = int(10);
    // e = floor(log10(a))
    let mut e: i64 = 0;
    let mut probe = a.clone();
    while probe >= ten {
        probe /= &ten;
        e += 1;
    }
    while probe < Rational::one() {
        probe *= &ten;
        e -= 1;
    }
    let places = (sig as i64 - 1 - e).max(0) as usize;
    let scaled = (&a * Rational::from_integer(num_traits::pow(BigInt::from(10), places))).round();
    let mut digits = scaled.to_integer().to_string();
    if places > 0 {
        if digits.len() <= places {
            digits = format!("{}{}", "0".repeat(places + 1 - digits.len()), digits);
        }
        digits.insert(digits.len() - places, '.');
        let trimmed = digits.trim_end_matches('0').trim_end_matches('.');
        digits = trimmed.to_string();
    }
    if neg {
        format!("-{digits}")
    } else {
        digits
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Serde adapter writing rationals as `"p/q"` strings.
pub mod rational_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
            match r {
                Some(r) => s.serialize_some(&r.to_string()),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Rational>, D::Error> {
            Option::<String>::deserialize(d)?
                .map(|s| parse_rational(&s).map_err(serde::de::Error::custom))
                .transpose()
        }
    }
}

fn check_kd(k: u64, d: u64) -> Result<()> {
    if k == 0 || k > d {
        return Err(Error::InvalidParams(format!("need 1 <= k <= d, got k={k}, d={d}")));
    }
    Ok(())
}

/// Functional-repair capacity `C_{k,d}(α, γ) = Σ_{j<k} min{α, (d-j)γ/d}`,
/// summed term by term.
pub fn functional_capacity(k: u64, d: u64, alpha: &Rational, gamma: &Rational) -> Result<Rational> {
    check_kd(k, d)?;
    if !alpha.is_positive() || !gamma.is_positive() {
        return Err(Error::InvalidParams("alpha and gamma must be positive".into()));
    }
    // Term j equals α exactly when d - j >= αd/γ; the other terms share the
    // factor γ/d, so only their (d - j) parts need summing.
    let threshold = alpha * uint(d) / gamma;
    let (mut full, mut linear) = (0u64, 0u64);
    for j in 0..k {
        if uint(d - j) >= threshold {
            full += 1;
        } else {
            linear += d - j;
        }
    }
    Ok(uint(full) * alpha + uint(linear) * gamma / uint(d))
}

/// Same value as [`functional_capacity`] in O(1): the terms equal `α` for
/// `j <= T = ⌊d(1 - α/γ)⌋` and form an arithmetic series afterwards.
pub fn functional_capacity_closed(k: u64, d: u64, alpha: &Rational, gamma: &Rational) -> Result<Rational> {
    check_kd(k, d)?;
    if !alpha.is_positive() || !gamma.is_positive() {
        return Err(Error::InvalidParams("alpha and gamma must be positive".into()));
    }
    let t: BigInt = (uint(d) * (Rational::one() - alpha / gamma)).floor().to_integer();
    let full = (t + BigInt::one()).clamp(BigInt::zero(), BigInt::from(k));
    let first = full.clone();
    let count = BigInt::from(k) - &first;
    let mut total = Rational::from_integer(full) * alpha;
    if count.is_positive() {
        // Σ_{j=first}^{k-1} (d - j) = count * (2d - first - (k-1)) / 2
        let span = BigInt::from(2 * d) - &first - BigInt::from(k - 1);
        let sum = Rational::new(count * span, BigInt::from(2));
        total += sum * gamma / uint(d);
    }
    Ok(total)
}

/// MSR point `(α, γ) = (B/k, dB/(k(d-k+1)))`.
pub fn msr_point(k: u64, d: u64, file_size: &Rational) -> Result<(Rational, Rational)> {
    check_kd(k, d)?;
    let alpha = file_size / uint(k);
    let gamma = uint(d) * file_size / (uint(k) * uint(d - k + 1));
    Ok((alpha, gamma))
}

/// MBR point `α = γ = 2dB/(k(2d-k+1))`.
pub fn mbr_point(k: u64, d: u64, file_size: &Rational) -> Result<(Rational, Rational)> {
    check_kd(k, d)?;
    let v = uint(2 * d) * file_size / (uint(k) * uint(2 * d - k + 1));
    Ok((v.clone(), v))
}

/// Lower bound on exact-repair capacity obtained by lifting an MSR code `k - i`
/// times: at `γ = (d-k+i)α/(d-k+1)` the stored size is at least `niα/(n-k+i)`.
/// Returns `(γ, bound)`.
pub fn exact_lower_bound(n: u64, k: u64, d: u64, alpha: &Rational, i: u64) -> Result<(Rational, Rational)> {
    check_kd(k, d)?;
    if d >= n {
        return Err(Error::InvalidParams(format!("need d < n, got d={d}, n={n}")));
    }
    if i == 0 || i > k {
        return Err(Error::InvalidParams(format!("need 1 <= i <= k={k}, got i={i}")));
    }
    let gamma = uint(d - k + i) * alpha / uint(d - k + 1);
    let value = uint(n * i) * alpha / uint(n - k + i);
    Ok((gamma, value))
}

/// `f_n(i) / α = ni/(1+i)`: the bound at `n = k+1 = d+1`, `γ = iα`.
pub fn single_parity_bound(n: u64, i: u64) -> Rational {
    Rational::new(BigInt::from(n * i), BigInt::from(1 + i))
}

fn check_single_parity(n: u64, i: u64) -> Result<()> {
    if n < 2 || i == 0 || i > n - 1 {
        return Err(Error::InvalidParams(format!("need n >= 2 and 1 <= i <= n-1, got n={n}, i={i}")));
    }
    Ok(())
}

/// Bound-to-capacity ratio at `n = k+1 = d+1`, `γ = iα`, through the floor
/// formula `(ni/(1+i)) / (T + 1 + i(n-T-1)(n-T-2)/(2(n-1)))` with
/// `T = ⌊(n-1)(1-1/i)⌋`.
pub fn single_parity_ratio(n: u64, i: u64) -> Result<Rational> {
    check_single_parity(n, i)?;
    let t = (n - 1) * (i - 1) / i;
    // T <= n-2 always, so the tail product is >= 0 and vanishes at T = n-2.
    let tail = Rational::new(BigInt::from(i * (n - t - 1) * (n - t - 2)), BigInt::from(2 * (n - 1)));
    let denominator = uint(t + 1) + tail;
    Ok(single_parity_bound(n, i) / denominator)
}

/// The same ratio with the capacity summed term by term.
pub fn single_parity_ratio_direct(n: u64, i: u64) -> Result<Rational> {
    check_single_parity(n, i)?;
    let capacity = functional_capacity(n - 1, n - 1, &Rational::one(), &uint(i))?;
    Ok(single_parity_bound(n, i) / capacity)
}

/// Large-`n` limit of [`single_parity_ratio`]: `2i²/(2i²+i-1)`.
pub fn large_n_ratio_approx(i: u64) -> Result<Rational> {
    if i == 0 {
        return Err(Error::InvalidParams("i must be at least 1".into()));
    }
    Ok(Rational::new(BigInt::from(2 * i * i), BigInt::from(2 * i * i + i - 1)))
}

/// `γ = α(d_M - k_M + i)/(d_M - k_M + 1)`.
pub fn gamma_at_index(k_m: u64, d_m: u64, alpha: &Rational, i: &Rational) -> Result<Rational> {
    check_kd(k_m, d_m)?;
    let gap = uint(d_m - k_m);
    Ok(alpha * (&gap + i) / (gap + Rational::one()))
}

/// Convex mix `sγ_MSR + (1-s)γ_MBR` with `γ_MSR = d_Mα/(d_M-k_M+1)` and
/// `γ_MBR = α`.
pub fn gamma_mix(k_m: u64, d_m: u64, alpha: &Rational, s: &Rational) -> Result<Rational> {
    check_kd(k_m, d_m)?;
    if s.is_negative() || s > &Rational::one() {
        return Err(Error::InvalidParams(format!("s must lie in [0,1], got {s}")));
    }
    let msr = uint(d_m) * alpha / uint(d_m - k_m + 1);
    Ok(s * msr + (Rational::one() - s) * alpha)
}

/// Straight line through the MBR point `(γ_MBR, B_MBR)` and the MSR point
/// `(γ_MSR, B_MSR)`, evaluated at `gamma`.
pub fn interpolation_baseline(
    k: u64,
    d: u64,
    b_at_mbr: &Rational,
    b_at_msr: &Rational,
    gamma: &Rational,
) -> Result<Rational> {
    let (_, g_mbr) = mbr_point(k, d, b_at_mbr)?;
    let (_, g_msr) = msr_point(k, d, b_at_msr)?;
    let (lo, hi) = if g_mbr <= g_msr { (&g_mbr, &g_msr) } else { (&g_msr, &g_mbr) };
    if gamma < lo || gamma > hi {
        return Err(Error::InvalidParams(format!("gamma {gamma} outside [{lo}, {hi}]")));
    }
    if g_mbr == g_msr {
        return Ok(b_at_mbr.clone());
    }
    Ok(b_at_mbr + (b_at_msr - b_at_mbr) * (gamma - &g_mbr) / (g_msr - &g_mbr))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveSource {
    Capacity,
    ExactBound,
    Interpolation,
}

impl fmt::Display for CurveSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CurveSource::Capacity => "capacity",
            CurveSource::ExactBound => "bound",
            CurveSource::Interpolation => "interpolation",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapacityPoint {
    #[serde(with = "rational_serde")]
    pub gamma: Rational,
    #[serde(with = "rational_serde")]
    pub value: Rational,
    pub source: CurveSource,
}

/// One integer-`γ` row of the `n = k+1 = d+1` tradeoff curves.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub capacity: CapacityPoint,
    pub bound: CapacityPoint,
    pub interpolation: CapacityPoint,
}

impl TradeoffRow {
    pub fn gamma(&self) -> &Rational {
        &self.capacity.gamma
    }
}

/// Capacity, lifting bound and MSR/MBR interpolation at `α = 1`,
/// `(n, k, d) = (n, n-1, n-1)`, for every integer `γ ∈ [1, n-1]`.
pub fn tradeoff_dataset(n: u64) -> Result<Vec<TradeoffRow>> {
    if n < 3 {
        return Err(Error::InvalidParams(format!("tradeoff dataset needs n >= 3, got {n}")));
    }
    let (k, d) = (n - 1, n - 1);
    let alpha = Rational::one();
    let b_mbr = functional_capacity(k, d, &alpha, &alpha)?;
    let b_msr = uint(k);
    (1..=k)
        .map(|i| {
            let gamma = uint(i);
            let point = |value, source| CapacityPoint { gamma: gamma.clone(), value, source };
            let (bound_gamma, bound) = exact_lower_bound(n, k, d, &alpha, i)?;
            debug_assert_eq!(bound_gamma, gamma);
            Ok(TradeoffRow {
                capacity: point(functional_capacity(k, d, &alpha, &gamma)?, CurveSource::Capacity),
                bound: point(bound, CurveSource::ExactBound),
                interpolation: point(interpolation_baseline(k, d, &b_mbr, &b_msr, &gamma)?, CurveSource::Interpolation),
            })
        })
        .collect()
}

pub const CSV_HEADER: &str = "gamma,capacity,bound,interpolation";

/// CSV with header `gamma,capacity,bound,interpolation`, 20 significant digits.
pub fn tradeoff_csv(rows: &[TradeoffRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            to_decimal(row.gamma(), 20),
            to_decimal(&row.capacity.value, 20),
            to_decimal(&row.bound.value, 20),
            to_decimal(&row.interpolation.value, 20)
        ));
    }
    out
}

/// Diagnostics for the bound-to-capacity ratio along `(n+M, k+M, d+M)` with
/// `i = 1 + s(k_M - 1)`, i.e. `γ` a fixed fraction `s` of the way from MBR to MSR.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub n: u64,
    pub k: u64,
    pub d: u64,
    pub m: u64,
    #[serde(with = "rational_serde")]
    pub s: Rational,
    pub n_m: u64,
    pub k_m: u64,
    pub d_m: u64,
    #[serde(with = "rational_serde")]
    pub i: Rational,
    pub i_floor: u64,
    /// `γ` at the exact `i`; equals the `s`-mix of the MSR and MBR bandwidths.
    #[serde(with = "rational_serde")]
    pub gamma: Rational,
    /// `γ` at `⌊i⌋`, where the capacity is evaluated.
    #[serde(with = "rational_serde")]
    pub gamma_floor: Rational,
    #[serde(with = "rational_serde")]
    pub t: Rational,
    #[serde(with = "rational_serde")]
    pub g: Rational,
    #[serde(with = "rational_serde")]
    pub capacity: Rational,
    /// `g_M(i) / C_{k_M,d_M}(α, γ(⌊i⌋))`.
    #[serde(with = "rational_serde")]
    pub ratio: Rational,
    /// Bound at `⌊i⌋` over capacity at `⌊i⌋`; a proven lower-bound ratio.
    #[serde(with = "rational_serde")]
    pub ratio_at_floor: Rational,
    /// `h1 / (h2 (h3 + h4))`, the same ratio with the real-valued `t`.
    #[serde(with = "rational_serde")]
    pub h_ratio: Rational,
    #[serde(with = "rational_serde")]
    pub h1: Rational,
    #[serde(with = "rational_serde")]
    pub h2: Rational,
    #[serde(with = "rational_serde")]
    pub h3: Rational,
    #[serde(with = "rational_serde")]
    pub h4: Rational,
    pub ratio_decimal: f64,
    pub scaled: Option<ScaledLimits>,
}

/// `h1/M³`, `h2/M`, `h3/M²`, `h4/M²` and the values they tend to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledLimits {
    pub h1_over_m3: f64,
    pub h1_limit: f64,
    pub h2_over_m: f64,
    pub h2_limit: f64,
    pub h3_over_m2: f64,
    pub h3_limit: f64,
    pub h4_over_m2: f64,
    pub h4_limit: f64,
}

pub fn asymptotic_ratio(n: u64, k: u64, d: u64, m: u64, s: &Rational) -> Result<AsymptoticReport> {
    check_kd(k, d)?;
    if d >= n {
        return Err(Error::InvalidParams(format!("need d < n, got d={d}, n={n}")));
    }
    if !s.is_positive() || s > &Rational::one() {
        return Err(Error::InvalidParams(format!("s must lie in (0,1], got {s}")));
    }
    let (n_m, k_m, d_m) = (n + m, k + m, d + m);
    let alpha = Rational::one();
    let gap1 = uint(d - k + 1);
    let s_span = s * uint(k_m - 1);

    let i = Rational::one() + &s_span;
    let i_floor = i.floor().to_integer().to_u64().expect("i fits in u64");
    let gamma = gamma_at_index(k_m, d_m, &alpha, &i)?;
    let gamma_floor = gamma_at_index(k_m, d_m, &alpha, &uint(i_floor))?;

    let g = uint(n_m) * &i * &alpha / (uint(n - k) + &i);
    let capacity = functional_capacity_closed(k_m, d_m, &alpha, &gamma_floor)?;
    let ratio = &g / &capacity;
    let g_floor = uint(n_m * i_floor) * &alpha / uint(n - k + i_floor);
    let ratio_at_floor = g_floor / &capacity;

    let t = uint(d_m) * &s_span / (&gap1 + &s_span);
    let h1 = uint(2 * n_m) * &i * uint(d_m) * &gap1;
    let h2 = uint(n - k + 1) + &s_span;
    let h3 = int(2) * (&t + Rational::one()) * uint(d_m) * &gap1;
    let h4 = (uint(k_m) - &t - Rational::one()) * (uint(2 * d + m) - uint(k) - &t) * (&gap1 + &s_span);
    let h_ratio = &h1 / (&h2 * (&h3 + &h4));

    let scaled = (m > 0).then(|| {
        let mf = uint(m);
        let m2 = &mf * &mf;
        let m3 = &m2 * &mf;
        ScaledLimits {
            h1_over_m3: to_f64(&(&h1 / &m3)),
            h1_limit: to_f64(&(int(2) * s * &gap1)),
            h2_over_m: to_f64(&(&h2 / &mf)),
            h2_limit: to_f64(s),
            h3_over_m2: to_f64(&(&h3 / &m2)),
            h3_limit: to_f64(&(int(2) * &gap1)),
            h4_over_m2: to_f64(&(&h4 / &m2)),
            h4_limit: 0.0,
        }
    });

    Ok(AsymptoticReport {
        n,
        k,
        d,
        m,
        s: s.clone(),
        n_m,
        k_m,
        d_m,
        ratio_decimal: to_f64(&ratio),
        i,
        i_floor,
        gamma,
        gamma_floor,
        t,
        g,
        capacity,
        ratio,
        ratio_at_floor,
        h_ratio,
        h1,
        h2,
        h3,
        h4,
        scaled,
    })
}
