//! Quantile binning, one-hot encoding and the loan-application
//! transformation neighbourhood.

use serde::{Deserialize, Serialize};

use potlab_game::Scalar;

use super::record::{ApplicantRecord, Checking, Housing, Job, Purpose, Savings, Sex};
use crate::error::DataError;

pub const DEFAULT_BINS: usize = 5;

/// Cut points at the empirical quantiles 1/k, ..., (k-1)/k.
///
/// Quantiles use linear interpolation between order statistics: for sorted
/// values x_0..x_{n-1} and level p, h = (n-1)p and the quantile is
/// x_floor(h) + (h - floor(h)) (x_floor(h)+1 - x_floor(h)). A value falls in the
/// bin equal to the number of edges strictly below it, so ties with an edge
/// go to the lower bin and repeated edges leave empty bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileBinner {
    pub feature: String,
    pub k: usize,
    pub edges: Vec<f64>,
}

impl QuantileBinner {
    pub fn fit(feature: &str, values: &[f64], k: usize) -> Result<Self, DataError> {
        if values.is_empty() {
            return Err(DataError::InvalidInput(format!("no values to bin for `{feature}`")));
        }
        if k == 0 {
            return Err(DataError::InvalidInput("bin count must be positive".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(DataError::InvalidInput(format!("non-finite value in `{feature}`")));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let edges = (1..k)
            .map(|q| {
                let h = (n - 1) as f64 * q as f64 / k as f64;
                let lo = h.floor() as usize;
                let hi = (lo + 1).min(n - 1);
                sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
            })
            .collect();
        Ok(Self { feature: feature.to_string(), k, edges })
    }

    pub fn bin(&self, value: f64) -> usize {
        self.edges.iter().filter(|e| **e < value).count()
    }
}

/// One-hot groups in encoding order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    Age = 0,
    Sex,
    Job,
    Housing,
    Saving,
    Checking,
    Amount,
    Duration,
    Purpose,
}

pub const GROUPS: usize = 9;
pub const GROUP_NAMES: [&str; GROUPS] =
    ["age", "sex", "job", "housing", "saving_account", "checking_account", "credit_amount", "duration", "purpose"];
/// The groups an applicant can change on a loan application.
pub const MUTABLE: [Group; 3] = [Group::Amount, Group::Duration, Group::Purpose];

/// Per-group level index of an encoded record: bins for the quantized
/// features, table positions for the categorical ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FeatureCodes(pub [u8; GROUPS]);

impl FeatureCodes {
    pub fn get(&self, g: Group) -> usize {
        usize::from(self.0[g as usize])
    }

    pub fn with(mut self, g: Group, level: usize) -> Self {
        self.0[g as usize] = level as u8;
        self
    }

    /// Number of mutable groups on which the two records differ.
    pub fn changes_from(&self, other: &FeatureCodes) -> usize {
        MUTABLE.iter().filter(|g| self.get(**g) != other.get(**g)).count()
    }

    pub fn same_static(&self, other: &FeatureCodes) -> bool {
        (0..GROUPS).all(|g| MUTABLE.iter().any(|m| *m as usize == g) || self.0[g] == other.0[g])
    }
}

/// Decoded view of an encoded record: categorical fields and bin indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedRecord {
    pub age_bin: usize,
    pub sex: Sex,
    pub job: Job,
    pub housing: Housing,
    pub saving_account: Savings,
    pub checking_account: Checking,
    pub amount_bin: usize,
    pub duration_bin: usize,
    pub purpose: Purpose,
}

/// Binners for age, amount and duration plus the categorical level tables,
/// all fitted on training records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    pub age: QuantileBinner,
    pub credit_amount: QuantileBinner,
    pub duration: QuantileBinner,
    pub sex: Vec<Sex>,
    pub job: Vec<Job>,
    pub housing: Vec<Housing>,
    pub saving_account: Vec<Savings>,
    pub checking_account: Vec<Checking>,
    pub purpose: Vec<Purpose>,
    /// Representative loan amount of each amount bin.
    pub amount_values: Vec<f64>,
}

fn levels<T: Ord + Copy>(records: &[ApplicantRecord], get: impl Fn(&ApplicantRecord) -> T) -> Vec<T> {
    let mut v: Vec<T> = records.iter().map(get).collect();
    v.sort();
    v.dedup();
    v
}

fn position<T: PartialEq + std::fmt::Debug>(table: &[T], value: &T, field: &'static str) -> Result<u8, DataError> {
    table
        .iter()
        .position(|t| t == value)
        .map(|p| p as u8)
        .ok_or_else(|| DataError::UnseenCategory { field, value: format!("{value:?}") })
}

impl Encoder {
    pub fn fit(train: &[ApplicantRecord]) -> Result<Self, DataError> {
        Self::fit_with_bins(train, DEFAULT_BINS)
    }

    pub fn fit_with_bins(train: &[ApplicantRecord], k: usize) -> Result<Self, DataError> {
        if train.is_empty() {
            return Err(DataError::Empty);
        }
        let column = |f: fn(&ApplicantRecord) -> u32| train.iter().map(|r| f64::from(f(r))).collect::<Vec<_>>();
        let amounts = column(|r| r.credit_amount);
        let credit_amount = QuantileBinner::fit("credit_amount", &amounts, k)?;
        let amount_values = bin_midpoints(&credit_amount, &amounts);
        Ok(Self {
            age: QuantileBinner::fit("age", &column(|r| r.age), k)?,
            credit_amount,
            duration: QuantileBinner::fit("duration", &column(|r| r.duration), k)?,
            sex: levels(train, |r| r.sex),
            job: levels(train, |r| r.job),
            housing: levels(train, |r| r.housing),
            saving_account: levels(train, |r| r.saving_account),
            checking_account: levels(train, |r| r.checking_account),
            purpose: levels(train, |r| r.purpose),
            amount_values,
        })
    }

    pub fn group_sizes(&self) -> [usize; GROUPS] {
        [
            self.age.k,
            self.sex.len(),
            self.job.len(),
            self.housing.len(),
            self.saving_account.len(),
            self.checking_account.len(),
            self.credit_amount.k,
            self.duration.k,
            self.purpose.len(),
        ]
    }

    pub fn group_offsets(&self) -> [usize; GROUPS] {
        let mut out = [0; GROUPS];
        let sizes = self.group_sizes();
        for g in 1..GROUPS {
            out[g] = out[g - 1] + sizes[g - 1];
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.group_sizes().iter().sum()
    }

    pub fn codes(&self, r: &ApplicantRecord) -> Result<FeatureCodes, DataError> {
        Ok(FeatureCodes([
            self.age.bin(f64::from(r.age)) as u8,
            position(&self.sex, &r.sex, "sex")?,
            position(&self.job, &r.job, "job")?,
            position(&self.housing, &r.housing, "housing")?,
            position(&self.saving_account, &r.saving_account, "saving_account")?,
            position(&self.checking_account, &r.checking_account, "checking_account")?,
            self.credit_amount.bin(f64::from(r.credit_amount)) as u8,
            self.duration.bin(f64::from(r.duration)) as u8,
            position(&self.purpose, &r.purpose, "purpose")?,
        ]))
    }

    /// 0/1 vector with one bit set per group.
    pub fn vector<F: Scalar>(&self, codes: &FeatureCodes) -> Vec<F> {
        let mut out = vec![F::zero(); self.dim()];
        for (g, offset) in self.group_offsets().iter().enumerate() {
            out[offset + usize::from(codes.0[g])] = F::one();
        }
        out
    }

    /// The one-hot vector as bytes, for ordering and hashing.
    pub fn bits(&self, codes: &FeatureCodes) -> Vec<u8> {
        let mut out = vec![0u8; self.dim()];
        for (g, offset) in self.group_offsets().iter().enumerate() {
            out[offset + usize::from(codes.0[g])] = 1;
        }
        out
    }

    pub fn encode<F: Scalar>(&self, r: &ApplicantRecord) -> Result<Vec<F>, DataError> {
        Ok(self.vector(&self.codes(r)?))
    }

    /// Inverse of [`Encoder::vector`]; fails unless every group has exactly one bit set.
    pub fn codes_of<F: Scalar>(&self, bits: &[F]) -> Result<FeatureCodes, DataError> {
        if bits.len() != self.dim() {
            return Err(DataError::InvalidInput(format!("expected {} bits, got {}", self.dim(), bits.len())));
        }
        let sizes = self.group_sizes();
        let offsets = self.group_offsets();
        let mut codes = [0u8; GROUPS];
        for g in 0..GROUPS {
            let group = &bits[offsets[g]..offsets[g] + sizes[g]];
            let set: Vec<usize> = (0..group.len()).filter(|i| group[*i] == F::one()).collect();
            let clean = group.iter().all(|b| *b == F::zero() || *b == F::one());
            if set.len() != 1 || !clean {
                return Err(DataError::InvalidInput(format!("group `{}` is not one-hot", GROUP_NAMES[g])));
            }
            codes[g] = set[0] as u8;
        }
        Ok(FeatureCodes(codes))
    }

    pub fn decode_codes(&self, c: &FeatureCodes) -> DecodedRecord {
        DecodedRecord {
            age_bin: c.get(Group::Age),
            sex: self.sex[c.get(Group::Sex)],
            job: self.job[c.get(Group::Job)],
            housing: self.housing[c.get(Group::Housing)],
            saving_account: self.saving_account[c.get(Group::Saving)],
            checking_account: self.checking_account[c.get(Group::Checking)],
            amount_bin: c.get(Group::Amount),
            duration_bin: c.get(Group::Duration),
            purpose: self.purpose[c.get(Group::Purpose)],
        }
    }

    pub fn decode<F: Scalar>(&self, bits: &[F]) -> Result<DecodedRecord, DataError> {
        Ok(self.decode_codes(&self.codes_of(bits)?))
    }

    /// Loan amount standing for an amount bin.
    pub fn amount_value(&self, bin: usize) -> f64 {
        self.amount_values[bin]
    }

    /// Every application reachable by changing at most `max_changes` of the
    /// amount bin, duration bin and purpose, excluding the unchanged one.
    /// Output is ordered by (amount, duration, purpose) level.
    pub fn transformations(&self, codes: &FeatureCodes, max_changes: usize) -> Vec<FeatureCodes> {
        let sizes = self.group_sizes();
        let mut out = Vec::new();
        for a in 0..sizes[Group::Amount as usize] {
            for d in 0..sizes[Group::Duration as usize] {
                for p in 0..sizes[Group::Purpose as usize] {
                    let t = codes.with(Group::Amount, a).with(Group::Duration, d).with(Group::Purpose, p);
                    let changes = t.changes_from(codes);
                    if changes >= 1 && changes <= max_changes {
                        out.push(t);
                    }
                }
            }
        }
        out
    }
}

/// (min + max) / 2 of the training values in each bin. An empty bin (from
/// repeated edges) takes the midpoint of its bounding edges instead.
fn bin_midpoints(binner: &QuantileBinner, values: &[f64]) -> Vec<f64> {
    let mut lo = vec![f64::INFINITY; binner.k];
    let mut hi = vec![f64::NEG_INFINITY; binner.k];
    for v in values {
        let b = binner.bin(*v);
        lo[b] = lo[b].min(*v);
        hi[b] = hi[b].max(*v);
    }
    (0..binner.k)
        .map(|b| {
            if lo[b].is_finite() {
                (lo[b] + hi[b]) / 2.0
            } else {
                let below = if b == 0 { binner.edges[0] } else { binner.edges[b - 1] };
                let above = binner.edges.get(b).copied().unwrap_or(below);
                (below + above) / 2.0
            }
        })
        .collect()
}
