//! Content library with Zipf popularity and the two placement policies.
//!
//! The user keeps the `M_U` most popular files. Under MPC the helper keeps
//! the `M_S` most popular files, so a request that misses the user's cache
//! can only hit ranks `M_U + 1 ..= M_S` at the helper. Under CMPC the helper
//! stores the `M_S` files that follow the user's, ranks `M_U + 1 ..= M_U + M_S`.

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{ModelError, Result};

/// Libraries up to this size get a lazily built prefix-sum table.
/// Larger libraries sum on demand so memory stays constant.
pub const PREFIX_TABLE_LIMIT: u64 = 1 << 24;

/// Neumaier compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Zipf popularity law `p_i = Ω i^{-δ}` over ranks `1..=N`.
#[derive(Debug, Clone)]
pub struct ZipfCatalog {
    library_size: u64,
    shape: f64,
    norm: f64,
    prefix: Arc<OnceLock<Vec<f64>>>,
}

impl ZipfCatalog {
    pub fn new(library_size: u64, shape: f64) -> Result<Self> {
        if library_size == 0 {
            return Err(ModelError::Domain("library size must contain at least one file".into()));
        }
        if !shape.is_finite() || shape < 0.0 {
            return Err(ModelError::InvalidParameter {
                name: "zipf shape",
                value: shape,
                reason: "must be a finite nonnegative exponent",
            });
        }
        // smallest terms first
        let total = raw_range_sum(1, library_size, shape);
        Ok(Self {
            library_size,
            shape,
            norm: total.recip(),
            prefix: Arc::new(OnceLock::new()),
        })
    }

    pub fn library_size(&self) -> u64 {
        self.library_size
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    /// The normalisation constant Ω.
    pub fn normalization(&self) -> f64 {
        self.norm
    }

    /// Request probability of the file with the given popularity rank.
    pub fn popularity(&self, rank: u64) -> Result<f64> {
        if rank == 0 || rank > self.library_size {
            return Err(ModelError::Domain(format!(
                "rank {rank} outside 1..={}",
                self.library_size
            )));
        }
        Ok(self.norm * (rank as f64).powf(-self.shape))
    }

    /// Total popularity of ranks `1..=k`; `k` is clamped to the library size.
    pub fn head_mass(&self, k: u64) -> f64 {
        let k = k.min(self.library_size);
        if k == 0 {
            return 0.0;
        }
        if k == self.library_size {
            return 1.0;
        }
        match self.prefix_table() {
            Some(table) => table[k as usize] * self.norm,
            None => raw_range_sum(1, k, self.shape) * self.norm,
        }
    }

    /// Total popularity of ranks `lo..=hi`, clamped to the library; empty ranges give 0.
    pub fn range_mass(&self, lo: u64, hi: u64) -> f64 {
        let lo = lo.max(1);
        let hi = hi.min(self.library_size);
        if lo > hi {
            return 0.0;
        }
        match self.prefix_table() {
            Some(table) => (table[hi as usize] - table[lo as usize - 1]) * self.norm,
            None => raw_range_sum(lo, hi, self.shape) * self.norm,
        }
    }

    fn prefix_table(&self) -> Option<&[f64]> {
        if self.library_size > PREFIX_TABLE_LIMIT {
            return None;
        }
        let table = self.prefix.get_or_init(|| {
            let mut acc = CompensatedSum::default();
            let mut table = Vec::with_capacity(self.library_size as usize + 1);
            table.push(0.0);
            for i in 1..=self.library_size {
                acc.add((i as f64).powf(-self.shape));
                table.push(acc.value());
            }
            table
        });
        Some(table)
    }
}

/// Unnormalised `Σ_{i=lo}^{hi} i^{-δ}`, summed from `hi` downwards.
fn raw_range_sum(lo: u64, hi: u64, shape: f64) -> f64 {
    let mut acc = CompensatedSum::default();
    for i in (lo..=hi).rev() {
        acc.add((i as f64).powf(-shape));
    }
    acc.value()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CachePolicy {
    /// Most popular content: each node caches the top files independently.
    Mpc,
    /// Collaborative MPC: the helper caches the files after the user's.
    Cmpc,
}

impl fmt::Display for CachePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CachePolicy::Mpc => f.write_str("mpc"),
            CachePolicy::Cmpc => f.write_str("cmpc"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CacheConfig {
    pub user_capacity: u64,
    pub helper_capacity: u64,
    pub policy: CachePolicy,
}

impl CacheConfig {
    pub fn new(user_capacity: u64, helper_capacity: u64, policy: CachePolicy) -> Self {
        Self {
            user_capacity,
            helper_capacity,
            policy,
        }
    }

    pub fn validate(&self, catalog: &ZipfCatalog) -> Result<()> {
        let n = catalog.library_size();
        if self.user_capacity > self.helper_capacity {
            return Err(ModelError::Domain(format!(
                "user capacity {} exceeds helper capacity {}",
                self.user_capacity, self.helper_capacity
            )));
        }
        if self.helper_capacity > n {
            return Err(ModelError::Domain(format!(
                "helper capacity {} exceeds library size {n}",
                self.helper_capacity
            )));
        }
        if self.policy == CachePolicy::Cmpc && self.user_capacity + self.helper_capacity > n {
            return Err(ModelError::Domain(format!(
                "CMPC needs user + helper capacity ({}) within the library size {n}",
                self.user_capacity + self.helper_capacity
            )));
        }
        Ok(())
    }
}

/// Probability that a request misses the user's own cache (`q_U`).
pub fn external_request_prob(catalog: &ZipfCatalog, cache: &CacheConfig) -> Result<f64> {
    cache.validate(catalog)?;
    Ok((1.0 - catalog.head_mass(cache.user_capacity)).clamp(0.0, 1.0))
}

/// Probability that an external request is found at the helper (`p_h`).
pub fn helper_hit_prob(catalog: &ZipfCatalog, cache: &CacheConfig) -> Result<f64> {
    cache.validate(catalog)?;
    let lo = cache.user_capacity + 1;
    let hi = match cache.policy {
        CachePolicy::Mpc => cache.helper_capacity,
        CachePolicy::Cmpc => cache.user_capacity + cache.helper_capacity,
    };
    Ok(catalog.range_mass(lo, hi).clamp(0.0, 1.0))
}
