//! Per-client compression operators, their wire encodings and bit costs.
//!
//! Every scheme here is individually unbiased. Correlation between clients
//! comes only from [`RoundRandomness`]: CQ shares one permutation of client
//! strata per coordinate, everything else is drawn per client.

mod dither;
mod message;
mod permk;
mod quantize;
mod round;

use std::fmt;

use num_bigint::BigUint;

use crate::error::{invalid, Error, Result};

pub use dither::{dither, dither_levels, DitherMode};
pub use message::{CompressedMessage, Payload, SchemeTag};
pub use permk::BlockAssignment;
pub use quantize::{cq_error_constant, cq_scalar, cq_scalar_sampled, header_round_up, iq_scalar};
pub use round::{compress_round, compress_with, RoundOutput, RoundRandomness};

/// Norm index `q ∈ [1, ∞]` of the dithering normaliser.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormIndex {
    Finite(f64),
    Infinity,
}

impl NormIndex {
    pub fn as_f64(self) -> f64 {
        match self {
            NormIndex::Finite(q) => q,
            NormIndex::Infinity => f64::INFINITY,
        }
    }

    pub fn from_f64(q: f64) -> Result<Self> {
        if q == f64::INFINITY {
            Ok(NormIndex::Infinity)
        } else if q.is_finite() && q >= 1.0 {
            Ok(NormIndex::Finite(q))
        } else {
            Err(invalid(format!("norm index q = {q} must lie in [1, inf]")))
        }
    }

    /// `‖a‖_q` computed in `f64`.
    pub fn norm(self, a: &[f64]) -> f64 {
        match self {
            NormIndex::Infinity => a.iter().fold(0.0f64, |m, &x| m.max(x.abs())),
            NormIndex::Finite(q) if q == 2.0 => a.iter().map(|x| x * x).sum::<f64>().sqrt(),
            NormIndex::Finite(q) if q == 1.0 => a.iter().map(|x| x.abs()).sum(),
            NormIndex::Finite(q) => {
                // Scale by the max to avoid overflow in |x|^q.
                let m = a.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
                if m == 0.0 {
                    return 0.0;
                }
                m * a.iter().map(|x| (x.abs() / m).powf(q)).sum::<f64>().powf(1.0 / q)
            }
        }
    }
}

impl fmt::Display for NormIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormIndex::Finite(q) => write!(f, "{q}"),
            NormIndex::Infinity => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CompressorKind {
    Identity,
    Iq,
    Cq,
    StdDither { q: NormIndex, k: u32 },
    NatDither { q: NormIndex, k: u32 },
    /// Standard dithering with `q = ∞`, `k = 1`.
    Ternary,
    PermK { tau: usize },
    PermKCq { tau: usize },
    /// Reference constants of an external rotation-based quantizer. It has
    /// constants and a bit cost but no implementation.
    DriveReference,
}

impl CompressorKind {
    /// Parses names like `cq`, `iq`, `identity`, `ternary`, `permk(32)`,
    /// `permk_cq(32)`, `std_dither(2,4)`, `nat_dither(inf,3)`, `drive`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (name, args) = match s.find('(') {
            Some(open) => {
                let close = s
                    .strip_suffix(')')
                    .ok_or_else(|| invalid(format!("unbalanced parentheses in compressor {s:?}")))?;
                (&s[..open], Some(&close[open + 1..]))
            }
            None => (s.as_str(), None),
        };
        let args: Vec<&str> = args.map(|a| a.split(',').map(str::trim).collect()).unwrap_or_default();
        let usize_arg = |i: usize| -> Result<usize> {
            args.get(i)
                .ok_or_else(|| invalid(format!("compressor {s:?} is missing argument {}", i + 1)))?
                .parse()
                .map_err(|_| invalid(format!("compressor {s:?}: argument {} is not an integer", i + 1)))
        };
        let q_arg = || -> Result<NormIndex> {
            let raw = args.first().ok_or_else(|| invalid(format!("compressor {s:?} needs q")))?;
            if *raw == "inf" {
                Ok(NormIndex::Infinity)
            } else {
                NormIndex::from_f64(raw.parse().map_err(|_| invalid(format!("bad q in {s:?}")))?)
            }
        };
        let expect_args = |count: usize| -> Result<()> {
            if args.len() == count {
                Ok(())
            } else {
                Err(invalid(format!("compressor {s:?} takes {count} argument(s)")))
            }
        };
        let kind = match name {
            "identity" | "none" => {
                expect_args(0)?;
                CompressorKind::Identity
            }
            "iq" => {
                expect_args(0)?;
                CompressorKind::Iq
            }
            "cq" => {
                expect_args(0)?;
                CompressorKind::Cq
            }
            "ternary" => {
                expect_args(0)?;
                CompressorKind::Ternary
            }
            "drive" => {
                expect_args(0)?;
                CompressorKind::DriveReference
            }
            "permk" => {
                expect_args(1)?;
                CompressorKind::PermK { tau: usize_arg(0)? }
            }
            "permk_cq" => {
                expect_args(1)?;
                CompressorKind::PermKCq { tau: usize_arg(0)? }
            }
            "std_dither" | "nat_dither" => {
                expect_args(2)?;
                let q = q_arg()?;
                let k = usize_arg(1)? as u32;
                if name == "std_dither" {
                    CompressorKind::StdDither { q, k }
                } else {
                    CompressorKind::NatDither { q, k }
                }
            }
            _ => return Err(invalid(format!("unknown compressor {s:?}"))),
        };
        Ok(kind)
    }

    /// True when the kind is a single-client operator in `U(ω)` that can be
    /// applied to one vector without reference to other clients.
    pub fn is_per_client(self) -> bool {
        !matches!(
            self,
            CompressorKind::PermK { .. } | CompressorKind::PermKCq { .. } | CompressorKind::DriveReference
        )
    }
}

impl fmt::Display for CompressorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompressorKind::Identity => f.write_str("identity"),
            CompressorKind::Iq => f.write_str("iq"),
            CompressorKind::Cq => f.write_str("cq"),
            CompressorKind::StdDither { q, k } => write!(f, "std_dither({q},{k})"),
            CompressorKind::NatDither { q, k } => write!(f, "nat_dither({q},{k})"),
            CompressorKind::Ternary => f.write_str("ternary"),
            CompressorKind::PermK { tau } => write!(f, "permk({tau})"),
            CompressorKind::PermKCq { tau } => write!(f, "permk_cq({tau})"),
            CompressorKind::DriveReference => f.write_str("drive"),
        }
    }
}

/// A compression scheme bound to a client count and dimension.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompressorSpec {
    kind: CompressorKind,
    n: usize,
    d: usize,
}

impl CompressorSpec {
    pub fn new(kind: CompressorKind, n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(invalid("compressor needs n >= 1 and d >= 1"));
        }
        if d > u32::MAX as usize || n > u32::MAX as usize {
            return Err(invalid("n and d must fit in 32 bits"));
        }
        match kind {
            CompressorKind::PermK { tau } | CompressorKind::PermKCq { tau } => {
                if tau == 0 || n % tau != 0 || d % tau != 0 {
                    return Err(invalid(format!("{kind}: tau must divide n = {n} and d = {d}")));
                }
            }
            CompressorKind::StdDither { q, k } | CompressorKind::NatDither { q, k } => {
                if k == 0 {
                    return Err(invalid("dithering needs k >= 1"));
                }
                NormIndex::from_f64(q.as_f64())?;
                // Symbols are packed in radix 2k + 1, which must fit a byte.
                if k > 127 {
                    return Err(invalid("dithering supports k <= 127"));
                }
            }
            _ => {}
        }
        Ok(Self { kind, n, d })
    }

    pub fn kind(&self) -> CompressorKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Block count for the PermK family, 1 otherwise.
    pub fn tau(&self) -> usize {
        match self.kind {
            CompressorKind::PermK { tau } | CompressorKind::PermKCq { tau } => tau,
            _ => 1,
        }
    }
}

/// Constants of the AB-inequality
/// `E‖mean(Q) − mean(a)‖² ≤ A·(1/n)Σ‖aᵢ‖² − B·‖mean(a)‖²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ABConstants {
    pub a: f64,
    pub b: f64,
}

impl ABConstants {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
            return Err(invalid(format!("AB constants must be finite and nonnegative, got ({a}, {b})")));
        }
        Ok(Self { a, b })
    }
}

/// Variance parameter ω of a single-client scheme:
/// `E‖Q(a) − a‖² ≤ ω‖a‖²`.
pub fn omega(kind: CompressorKind, d: usize) -> Result<f64> {
    let df = d as f64;
    let sqrt_d = df.sqrt();
    match kind {
        CompressorKind::Identity => Ok(0.0),
        // One client alone: CQ degenerates to IQ.
        CompressorKind::Iq | CompressorKind::Cq => Ok(df),
        CompressorKind::Ternary => Ok((sqrt_d - 1.0).min(df / 4.0)),
        CompressorKind::StdDither { q, k } => {
            if q.as_f64() < 2.0 {
                return Err(Error::Unsupported(format!("no variance bound for {kind} with q < 2")));
            }
            let k = k as f64;
            if q == NormIndex::Infinity && k == 1.0 {
                return omega(CompressorKind::Ternary, d);
            }
            Ok((df / (k * k)).min(sqrt_d / k))
        }
        CompressorKind::NatDither { q, k } => {
            if q.as_f64() < 2.0 {
                return Err(Error::Unsupported(format!("no variance bound for {kind} with q < 2")));
            }
            let bottom = 2f64.powi(k as i32 - 1);
            Ok(0.125 + (sqrt_d / bottom).min(df / (bottom * bottom)))
        }
        CompressorKind::PermK { .. } | CompressorKind::PermKCq { .. } | CompressorKind::DriveReference => {
            Err(Error::Unsupported(format!("{kind} is not a single-client compressor")))
        }
    }
}

/// The reference AB constants used by stepsize rules and the complexity
/// analyzer. The quantizer entries are the tabulated ones; for MSE
/// certificates use [`certified_ab_constants`].
pub fn ab_constants(spec: &CompressorSpec) -> Result<ABConstants> {
    let (n, d) = (spec.n as f64, spec.d as f64);
    match spec.kind {
        CompressorKind::Identity => ABConstants::new(0.0, 0.0),
        CompressorKind::Iq => ABConstants::new(d / (4.0 * n), 0.0),
        CompressorKind::Cq => ABConstants::new(d / (4.0 * n * n), 0.0),
        CompressorKind::DriveReference => ABConstants::new((std::f64::consts::FRAC_PI_2 - 1.0) / n, 0.0),
        CompressorKind::PermKCq { tau } => {
            let t = tau as f64;
            ABConstants::new(d * t * t / (n * n), 0.0)
        }
        CompressorKind::PermK { tau } if tau == spec.n => ABConstants::new(1.0, 1.0),
        CompressorKind::PermK { .. } => Err(Error::Unsupported(format!(
            "{} has AB constants only for tau = n",
            spec.kind
        ))),
        kind => ABConstants::new(omega(kind, spec.d)? / n, 0.0),
    }
}

/// AB constants that provably bound the MSE of this implementation. CQ's
/// constant assumes homogeneous inputs.
pub fn certified_ab_constants(spec: &CompressorSpec) -> Result<ABConstants> {
    let (n, d) = (spec.n as f64, spec.d as f64);
    match spec.kind {
        CompressorKind::Iq => ABConstants::new(d / n, 0.0),
        CompressorKind::Cq => ABConstants::new(d / (n * n), 0.0),
        CompressorKind::DriveReference => Err(Error::Unsupported("drive has no implementation".into())),
        _ => ab_constants(spec),
    }
}

/// `⌈d·log₂ m⌉`: the length of the radix-`m` packing of `d` symbols,
/// computed exactly as the bit length of `m^d − 1`.
pub fn radix_payload_bits(m: u32, d: usize) -> u64 {
    if m <= 1 || d == 0 {
        return 0;
    }
    let max = BigUint::from(m).pow(d as u32) - 1u32;
    max.bits()
}

/// Bits one client sends in a round. `compressed_round = false` is the
/// uncompressed exact-gradient round.
pub fn bits_per_client(spec: &CompressorSpec, compressed_round: bool) -> u64 {
    let d = spec.d as u64;
    if !compressed_round {
        return 32 * d;
    }
    match spec.kind {
        CompressorKind::Identity => 32 * d,
        CompressorKind::Iq | CompressorKind::Cq => 32 + d,
        CompressorKind::PermK { tau } => 32 * d / tau as u64,
        CompressorKind::PermKCq { tau } => 32 + d / tau as u64,
        CompressorKind::StdDither { k, .. } | CompressorKind::NatDither { k, .. } => {
            31 + radix_payload_bits(2 * k + 1, spec.d)
        }
        CompressorKind::Ternary => 31 + radix_payload_bits(3, spec.d),
        CompressorKind::DriveReference => 32 + spec.d.next_power_of_two() as u64,
    }
}
